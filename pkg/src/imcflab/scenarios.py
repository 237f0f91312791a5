"""Named initial-data triples and generalized apparent horizons.

A triple is (M, g, h): a metric backend plus a weight field h.  Besides the
stock scenarios (flat, Schwarzschild profile, doubled Schwarzschild,
isotropic conformal-flat), :func:`build_example` constructs a conformally
perturbed doubled Schwarzschild triple with a small positive weight

    h(s) = delta * (1 + s^2)^(-3/2)

by solving the radial Poisson problem -Lap v = F_+ with
F = 2|grad h| - (3/2) h^2 and setting g_u = (1+v)^4 g.  By construction the
perturbed triple satisfies the dominant energy condition with the exact
interior identity R_{g_u} = 8 u^-5 F_+.

:func:`find_horizon` locates the outermost generalized apparent horizon
H = |h| by an inward scan plus bisection.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import bisect

from .energy import DECReport, WeightField, dec_residual, weight_from_samples
from .geometry import (
    FMT,
    ConformalProfileMetric,
    GeometryError,
    OriginKind,
    ProfileMetric,
    RadialGrid,
    UniformCubic,
    conformal_transform,
    flat_profile,
    isotropic_schwarzschild_phi,
    profile_from_schwarzschild,
)

MAX_V_BOUND = 8.0 ** 0.2 - 1.0      # u = 1 + v must stay below 8^(1/5)
HORIZON_BRACKET_TOL = 1e-10         # bisection tolerance in s
DELTA_RETRIES_DEFAULT = 8
TAIL_REMAINDER_REL_TOL = 1e-3       # quadrature tail must be this small vs max v


class ScenarioError(ValueError):
    pass


class DeltaTooLarge(ScenarioError):
    """The weight amplitude exceeds the conformal feasibility bound."""


class TailNotConverged(ScenarioError):
    """The Poisson quadrature tail beyond the grid is not negligible."""


class NoHorizon(ScenarioError):
    """No root of H - |h| on the scanned range."""


class Provenance(Enum):
    FLAT = "flat"
    SCHWARZSCHILD = "schwarzschild"
    DOUBLED_SCHWARZSCHILD = "doubled_schwarzschild"
    PERTURBED_SCHWARZSCHILD = "perturbed_schwarzschild"
    ISOTROPIC = "isotropic"
    CUSTOM = "custom-from-file"


@dataclass(frozen=True)
class InitialDataTriple:
    """Discretized (M, g, h) with its energy-condition report.

    ``metric`` is a ProfileMetric, a ConformalProfileMetric (a conformally
    decorated profile), or a ConformalFlatMetric.  ``weight`` is None for
    h = 0 on Cartesian backends.  ``params`` records construction inputs and
    asymptotic decay constants.
    """

    metric: object
    weight: WeightField | None
    provenance: Provenance
    dec: DECReport | None
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict, repr=False)

    def provenance_json(self) -> str:
        return json.dumps({
            "provenance": self.provenance.value,
            "params": {k: v for k, v in self.params.items()
                       if isinstance(v, (int, float, str, bool))},
            "dec_passed": None if self.dec is None else self.dec.passed,
        }, sort_keys=True)

    def to_csv(self) -> str:
        """Profile-backed triples as CSV columns s, r, h."""
        metric = self.metric
        base = getattr(metric, "base", metric)
        if not isinstance(base, ProfileMetric):
            raise ScenarioError("only profile-backed triples export to CSV")
        nodes = base.grid.nodes
        r = np.asarray(metric.r_at(nodes)) if hasattr(metric, "r_at") \
            else np.sqrt(np.asarray(metric.area(nodes)) / (4.0 * np.pi))
        h = (self.weight.h if self.weight is not None
             else np.zeros(base.grid.n))
        buf = io.StringIO()
        buf.write("s,r,h\n")
        for row in zip(nodes, r, h):
            buf.write(",".join(FMT % v for v in row) + "\n")
        return buf.getvalue()


def _zero_weight(metric) -> WeightField:
    return weight_from_samples(metric, np.zeros(metric.grid.n))


def make_scenario(kind: str, **params) -> InitialDataTriple:
    """Build a stock initial-data triple.

    Kinds: ``flat`` (r = s, h = 0), ``schwarzschild`` / ``doubled_schwarzschild``
    (the doubled profile with throat r(0) = 2m, h = 0), ``isotropic``
    (conformally flat phi = 1 + m/(2 rho), h = 0), ``custom-from-file``
    (CSV text with columns s, r, h).
    """
    if kind == "flat":
        s_min = float(params.pop("s_min", 0.1))
        s_max = float(params.pop("s_max", 100.0))
        n = int(params.pop("n", 8001))
        _reject_extras(params)
        metric = flat_profile(s_min, s_max, n)
        weight = _zero_weight(metric)
        dec = dec_residual(metric, weight)
        return InitialDataTriple(metric, weight, Provenance.FLAT, dec,
                                 params={"s_min": s_min, "s_max": s_max, "n": n,
                                         "decay_constant": weight.decay_constant})
    if kind in ("schwarzschild", "doubled_schwarzschild"):
        m = float(params.pop("m", 1.0))
        s_max = float(params.pop("s_max", 40.0))
        n = int(params.pop("n", 8001))
        _reject_extras(params)
        if m <= 0:
            raise ScenarioError("mass must be positive")
        metric = profile_from_schwarzschild(m, s_max, RadialGrid(-s_max, s_max, n))
        weight = _zero_weight(metric)
        dec = dec_residual(metric, weight)
        prov = (Provenance.SCHWARZSCHILD if kind == "schwarzschild"
                else Provenance.DOUBLED_SCHWARZSCHILD)
        return InitialDataTriple(metric, weight, prov, dec,
                                 params={"m": m, "s_max": s_max, "n": n,
                                         "decay_constant": weight.decay_constant})
    if kind == "isotropic":
        m = float(params.pop("m", 1.0))
        n = int(params.pop("n", 96))
        box_extent = float(params.pop("box_extent", 40.0))
        _reject_extras(params)
        metric = isotropic_schwarzschild_phi(m, n, box_extent)
        # the conformal factor is harmonic away from the excision, so the
        # scalar curvature vanishes identically and h = 0: the energy
        # condition holds with exactly zero residual
        zeros = np.zeros(n)
        dec = DECReport(residual=zeros, min_residual=0.0, argmin_s=0.0,
                        mu=zeros, j_norm=zeros, passed=True, tolerance=0.0)
        return InitialDataTriple(metric, None, Provenance.ISOTROPIC, dec,
                                 params={"m": m, "n": n, "box_extent": box_extent})
    if kind == "custom-from-file":
        text = params.pop("text", None)
        path = params.pop("path", None)
        _reject_extras(params)
        if text is None:
            if path is None:
                raise ScenarioError("custom-from-file needs text or path")
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        return triple_from_csv(text)
    raise ScenarioError(f"unknown scenario kind: {kind!r}")


def _reject_extras(params: dict):
    if params:
        raise ScenarioError(f"unknown scenario parameters: {sorted(params)}")


def triple_from_csv(text: str) -> InitialDataTriple:
    """Load a profile triple from CSV columns s, r, h with validation."""
    rows = np.genfromtxt(io.StringIO(text), delimiter=",", names=True)
    for col in ("s", "r", "h"):
        if col not in (rows.dtype.names or ()):
            raise ScenarioError(f"custom CSV misses column {col!r}")
    s = np.atleast_1d(rows["s"]).astype(float)
    r = np.atleast_1d(rows["r"]).astype(float)
    h = np.atleast_1d(rows["h"]).astype(float)
    if len(s) < 16:
        raise ScenarioError("custom CSV needs at least 16 rows")
    spacing = np.diff(s)
    if np.any(spacing <= 0) or np.ptp(spacing) > 1e-9 * spacing[0]:
        raise ScenarioError("custom CSV needs a uniform increasing s column")
    if np.any(r <= 0):
        raise ScenarioError("custom CSV needs positive r")
    if not np.all(np.isfinite(h)):
        raise ScenarioError("custom CSV weight must be finite")
    grid = RadialGrid(float(s[0]), float(s[-1]), len(s))
    rp = np.gradient(r, grid.spacing, edge_order=2)
    symmetric = (abs(s[0] + s[-1]) <= 1e-12 * grid.spacing
                 and np.allclose(r, r[::-1], rtol=1e-12, atol=0.0))
    origin = OriginKind.TWO_ENDED if s[0] < 0 else OriginKind.CENTER_POINT
    metric = ProfileMetric(grid=grid, r=r, r_prime=rp, origin_kind=origin,
                           symmetric=symmetric)
    weight = weight_from_samples(metric, h)
    if not np.isfinite(weight.decay_constant):
        raise ScenarioError("custom weight does not decay like |s|^-2")
    dec = dec_residual(metric, weight)
    return InitialDataTriple(metric, weight, Provenance.CUSTOM, dec,
                             params={"n": len(s),
                                     "decay_constant": weight.decay_constant})


# ---------------------------------------------------------------------------
# constructed perturbed example
# ---------------------------------------------------------------------------


def _weight_profile(delta: float, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """h = delta (1+s^2)^(-3/2) and its exact derivative."""
    w = 1.0 + s * s
    h = delta * w ** -1.5
    hp = -3.0 * delta * s * w ** -2.5
    return h, hp


def _poisson_quadrature(metric: ProfileMetric, F_plus: np.ndarray,
                        delta: float, tail_factor: float) -> tuple[np.ndarray, float]:
    """Solve -Lap v = F_plus on the symmetric profile by nested quadrature.

    Radially, r^2 v'(s) = -int_0^s r^2 F_+ (using v'(0) = 0 by evenness) and

        v(s) = int_{|s|}^{inf} I(sigma) / r(sigma)^2 dsigma,
        I(sigma) = int_0^sigma r^2 F_+ ds'.

    Beyond the grid the integrand follows the declared leading law
    F_+ ~ 6 delta (1+sigma)^-4 with r(sigma) ~ sigma + (r(s_max) - s_max);
    the tail is integrated numerically on a geometric extension and the
    remainder past it is reported.
    """
    grid = metric.grid
    nodes = grid.nodes
    half = nodes >= 0.0
    s = nodes[half]
    r = metric.r[half]
    Fp = F_plus[half]
    inner = cumulative_trapezoid(r * r * Fp, s, initial=0.0)      # I(sigma)
    # v on [0, s_max] up to the constant tail
    v_core = cumulative_trapezoid(inner / (r * r), s, initial=0.0)
    v_core = v_core[-1] - v_core                                   # int_s^{s_max}
    s_max = s[-1]
    shift = float(r[-1] - s_max)
    sigma = np.geomspace(s_max, tail_factor * s_max, 4001)
    r_t = sigma + shift
    F_t = 6.0 * delta * (1.0 + sigma) ** -4
    inner_t = inner[-1] + cumulative_trapezoid(r_t * r_t * F_t, sigma, initial=0.0)
    v_tail = cumulative_trapezoid(inner_t / (r_t * r_t), sigma, initial=0.0)[-1]
    remainder = float(inner_t[-1] / r_t[-1])       # int_X^inf I/r^2 <= I_inf / r(X)
    v_half = v_core + v_tail
    v = np.empty(grid.n)
    v[half] = v_half
    v[~half] = v_half[1:][::-1] if nodes[0] == -nodes[-1] else np.interp(
        -nodes[~half], s, v_half)
    return v, remainder


def build_example(m: float, delta: float, grid: RadialGrid,
                  max_retries: int = DELTA_RETRIES_DEFAULT,
                  tail_factor: float = 1000.0) -> InitialDataTriple:
    """Construct the conformally perturbed doubled Schwarzschild triple.

    Sets h = delta (1+s^2)^(-3/2), F = 2|grad h| - (3/2) h^2, solves
    -Lap v = F_+ with v -> 0 at infinity, and returns the triple with metric
    g_u = (1+v)^4 g.  Verifies v > 0 and max v < 8^(1/5) - 1 (so that
    8 u^-5 - 1 > 0); on failure the amplitude delta is halved, up to
    ``max_retries`` times, and DeltaTooLarge is raised when exhausted.
    The base metric, u, v, and F_+ stay accessible through ``extras``.
    """
    if m <= 0:
        raise ScenarioError("mass must be positive")
    if delta <= 0:
        raise ScenarioError("delta must be positive")
    base = profile_from_schwarzschild(m, float(grid.s_max), grid)
    nodes = grid.nodes
    delta_used = float(delta)
    for attempt in range(max_retries + 1):
        h, hp = _weight_profile(delta_used, nodes)
        F = 2.0 * np.abs(hp) - 1.5 * h * h          # |grad h|_g = |h'|: s is arclength
        F_plus = np.clip(F, 0.0, None)
        v, remainder = _poisson_quadrature(base, F_plus, delta_used, tail_factor)
        max_v = float(np.max(v))
        if remainder > TAIL_REMAINDER_REL_TOL * max_v:
            raise TailNotConverged(
                f"quadrature tail remainder {remainder:.3g} vs max v {max_v:.3g}; "
                "increase s_max or tail_factor")
        if np.min(v) > 0.0 and max_v < MAX_V_BOUND:
            break
        delta_used *= 0.5
    else:
        raise DeltaTooLarge(
            f"delta={delta} infeasible after {max_retries} halvings "
            f"(max v = {max_v:.3g}, bound {MAX_V_BOUND:.3g})")
    u = 1.0 + v
    metric = conformal_transform(base, u)
    weight = weight_from_samples(metric, h)
    dec = dec_residual(metric, weight)
    return InitialDataTriple(
        metric, weight, Provenance.PERTURBED_SCHWARZSCHILD, dec,
        params={"m": float(m), "delta_requested": float(delta),
                "delta": delta_used, "retries": attempt,
                "tail_remainder": remainder, "max_v": max_v,
                "decay_constant": weight.decay_constant},
        extras={"base_metric": base, "u": u, "v": v, "F_plus": F_plus})


def flow_gauge(triple: InitialDataTriple) -> InitialDataTriple:
    """Triple re-expressed in proper-length gauge for flow integration.

    Plain-profile triples pass through.  Conformally decorated profiles are
    reparametrized (ds_tilde = u^2 ds) into an equivalent plain profile and
    the weight is resampled along the coordinate change; areas and mean
    curvatures are gauge-invariant, so flows and horizons agree up to the
    coordinate map, which is stored in ``extras['s_map']``.
    """
    metric = triple.metric
    if isinstance(metric, ProfileMetric):
        return triple
    if not isinstance(metric, ConformalProfileMetric):
        raise ScenarioError("flow gauge needs a profile-backed triple")
    profile, s_map = metric.to_profile()
    base_nodes = metric.grid.nodes
    s_tilde = np.asarray(s_map(base_nodes))
    new_nodes = profile.grid.nodes
    s_back = np.interp(new_nodes, s_tilde, base_nodes)
    if triple.weight is not None:
        h_new = np.asarray(UniformCubic(base_nodes, triple.weight.h)(s_back))
        weight = weight_from_samples(profile, h_new)
    else:
        weight = _zero_weight(profile)
    return InitialDataTriple(
        profile, weight, triple.provenance, triple.dec,
        params={**triple.params, "gauge": "proper-length"},
        extras={**triple.extras, "s_map": s_map})


# ---------------------------------------------------------------------------
# horizons
# ---------------------------------------------------------------------------


def find_horizon(triple: InitialDataTriple,
                 bracket_tol: float = HORIZON_BRACKET_TOL) -> dict:
    """Outermost root of H(s) - |h|(s), scanning inward from the outer end.

    Returns {s_star, area, kind, h_at_root} with kind ``minimal`` (h = 0 at
    the root) or ``generalized`` (h > 0); symmetric data additionally gets
    the s = 0 minimal-surface record.  Raises NoHorizon when H - |h| never
    changes sign on the scan (e.g. flat space).
    """
    metric = triple.metric
    if not hasattr(metric, "mean_curvature") or not hasattr(metric, "grid"):
        raise ScenarioError("find_horizon needs a profile-backed triple")
    grid = metric.grid
    nodes = grid.nodes
    habs = (np.abs(triple.weight.h) if triple.weight is not None
            else np.zeros(grid.n))
    habs_i = UniformCubic(nodes, habs)
    gap_nodes = np.asarray(metric.mean_curvature(nodes)) - habs

    def gap(s):
        return float(metric.mean_curvature(s)) - float(habs_i(s))

    k_hi = grid.n - 1
    if gap_nodes[k_hi] <= 0.0:
        raise NoHorizon("outer end is not untrapped; no outermost horizon")
    k = k_hi
    while k > 0 and gap_nodes[k - 1] > 0.0:
        k -= 1
    if k == 0:
        raise NoHorizon("H - |h| has no sign change on the grid")
    lo, hi = nodes[k - 1], nodes[k]
    if gap_nodes[k - 1] == 0.0:
        s_star = float(lo)
    else:
        s_star = float(bisect(gap, lo, hi, xtol=bracket_tol))
    h_at = float(habs_i(s_star))
    kind = "minimal" if h_at <= 1e-13 else "generalized"
    out = {
        "s_star": s_star,
        "area": float(metric.area(s_star)),
        "kind": kind,
        "h_at_root": h_at,
    }
    base = getattr(metric, "base", metric)
    if getattr(base, "symmetric", False) and grid.contains(0.0):
        out["s0_minimal"] = {
            "area": float(metric.area(0.0)),
            "H": float(metric.mean_curvature(0.0)),
        }
    return out
