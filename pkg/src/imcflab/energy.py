"""Energy/momentum densities, the dominant energy condition, and weight fields.

The weight h is the trace part of the extrinsic curvature (k = (tau/3) g with
h = (2/3) tau).  The dominant energy condition used throughout is the scalar
inequality

    R + (3/2) h^2 - 2 |grad h| >= 0.

The residual is computed from the smooth h samples (not |h|), which is the
stronger, safe check where h changes sign.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

DEC_TOLERANCE_DEFAULT = 1e-10  # absolute: the residual has dimension 1/length^2


class EnergyError(ValueError):
    pass


@dataclass(frozen=True)
class WeightField:
    """Sampled weight h with its metric gradient norm on the metric's grid."""

    h: np.ndarray
    h_gradnorm: np.ndarray
    decay_constant: float = np.inf

    def __post_init__(self):
        if len(self.h) != len(self.h_gradnorm):
            raise EnergyError("h and gradient samples must match")
        if not np.all(np.isfinite(self.h)) or not np.all(np.isfinite(self.h_gradnorm)):
            raise EnergyError("weight samples must be finite")


def weight_from_samples(metric, h: np.ndarray) -> WeightField:
    """Build a WeightField on a profile-type metric, |grad h| from smooth h.

    The gradient norm uses the metric's grad factor (u^-2 for conformal
    decorations, unity for plain profiles).  The decay constant C with
    |h| + |x| |dh| <= C |x|^-2 is fitted on the outer 20% of the grid.
    """
    h = np.asarray(h, dtype=float)
    grid = metric.grid
    if len(h) != grid.n:
        raise EnergyError("weight must be sampled on the metric grid")
    dh = np.gradient(h, grid.spacing, edge_order=2)
    nodes = grid.nodes
    gf = np.broadcast_to(np.asarray(metric.grad_factor(nodes)), h.shape)
    gradnorm = np.abs(dh) * gf
    # decay audit on the outer 20% (both ends for two-ended grids)
    x = np.abs(nodes)
    outer = x >= x.max() * 0.8
    with np.errstate(divide="ignore"):
        C = np.max((np.abs(h[outer]) + x[outer] * np.abs(dh[outer])) * x[outer] ** 2)
    return WeightField(h=h, h_gradnorm=gradnorm, decay_constant=float(C))


@dataclass(frozen=True)
class DECReport:
    residual: np.ndarray
    min_residual: float
    argmin_s: float
    mu: np.ndarray
    j_norm: np.ndarray
    passed: bool
    tolerance: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "min_residual": self.min_residual,
                "argmin_s": self.argmin_s,
                "passed": self.passed,
                "tolerance": self.tolerance,
            }
        )


def energy_momentum(metric, tau: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(8 pi) mu = R/2 + tau^2/3;  (8 pi) |J| = (2/3) |grad tau|."""
    tau = np.asarray(tau, dtype=float)
    grid = metric.grid
    if len(tau) != grid.n:
        raise EnergyError("tau must be sampled on the metric grid")
    nodes = grid.nodes
    R = np.asarray(metric.scalar_curvature(nodes))
    dtau = np.gradient(tau, grid.spacing, edge_order=2)
    gf = np.asarray(metric.grad_factor(nodes))
    mu = (0.5 * R + tau**2 / 3.0) / (8.0 * np.pi)
    j_norm = (2.0 / 3.0) * np.abs(dtau) * gf / (8.0 * np.pi)
    return mu, j_norm


def dec_residual(metric, weight: WeightField, tolerance: float = DEC_TOLERANCE_DEFAULT) -> DECReport:
    """Pointwise residual R + (3/2) h^2 - 2 |grad h| over the grid."""
    grid = metric.grid
    if len(weight.h) != grid.n:
        raise EnergyError("weight lives on a different grid")
    nodes = grid.nodes
    R = np.asarray(metric.scalar_curvature(nodes))
    residual = R + 1.5 * weight.h**2 - 2.0 * weight.h_gradnorm
    k = int(np.argmin(residual))
    mu, j_norm = energy_momentum(metric, 1.5 * weight.h)
    return DECReport(
        residual=residual,
        min_residual=float(residual[k]),
        argmin_s=float(nodes[k]),
        mu=mu,
        j_norm=j_norm,
        passed=bool(residual[k] >= -tolerance),
        tolerance=tolerance,
    )


def default_phi(s: np.ndarray) -> np.ndarray:
    """Smoothing profile with |x|^-3 decay, values in (0, 1]."""
    s = np.asarray(s, dtype=float)
    return (1.0 + s**2) ** -1.5


def smooth_weight(weight: WeightField, delta: float, phi: np.ndarray, spacing: float,
                  grad_factor: np.ndarray | float = 1.0) -> WeightField:
    """Smoothed weight h_delta = sqrt(h^2 + (delta phi)^2).

    Verifies 0 < h_delta - |h| <= C delta and |grad h_delta| <= |grad h| + C delta
    with C from the phi profile; raises if the inputs violate the assumptions.
    """
    if not 0.0 < delta < 1.0:
        raise EnergyError("delta must lie in (0, 1)")
    phi = np.asarray(phi, dtype=float)
    if np.any(phi <= 0.0) or np.any(phi > 1.0):
        raise EnergyError("phi must take values in (0, 1]")
    h = weight.h
    hd = np.sqrt(h**2 + (delta * phi) ** 2)
    gap = hd - np.abs(h)
    if np.any(gap <= 0.0) or np.max(gap) > delta * np.max(phi) + 1e-15:
        raise EnergyError("smoothing bounds violated")
    dhd = np.gradient(hd, spacing, edge_order=2)
    gradnorm = np.abs(dhd) * np.asarray(grad_factor)
    dphi = np.gradient(phi, spacing, edge_order=2)
    C = float(np.max(np.abs(dphi)))
    slack = 10.0 * spacing**2  # differencing floor on the verified bound
    if np.max(gradnorm - weight.h_gradnorm) > C * delta + delta + slack:
        raise EnergyError("gradient bound of the smoothed weight violated")
    return WeightField(h=hd, h_gradnorm=gradnorm, decay_constant=weight.decay_constant)
