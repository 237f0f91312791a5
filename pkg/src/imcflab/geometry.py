"""Discretized spherically symmetric 3-metrics and slice geometry.

Two metric backends are provided:

* ``ProfileMetric`` -- warped products ``ds^2 + r(s)^2 g_{S^2}`` sampled on a
  uniform radial grid.  All slice quantities reduce to closed forms in the
  warp function r(s).
* ``ConformalFlatMetric`` -- metrics ``phi^4 * (flat)`` on a Cartesian box,
  used only by the Cartesian elliptic backend and the ADM flux integral.

Curvature conventions (validated in tests against the Schwarzschild profile,
where R vanishes identically, and against H = 2 r'/r for coordinate spheres):

    H(s)        = 2 r'(s) / r(s)
    Ric(nu,nu)  = -2 r''(s) / r(s)
    R(s)        = -4 r''/r + 2 (1 - (r')^2) / r^2
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.interpolate import CubicSpline

FMT = "%.17g"  # round-trip exact for doubles


class GeometryError(ValueError):
    pass


class UniformCubic:
    """Cubic spline on a uniform grid with a cheap scalar fast path.

    scipy's CubicSpline carries noticeable per-call overhead for scalar
    arguments; flow integration makes O(10^4) scalar queries, so we evaluate
    the piecewise cubic directly from the stored coefficients.
    """

    def __init__(self, x: np.ndarray, y: np.ndarray):
        self.x0 = float(x[0])
        self.h = float(x[1] - x[0])
        self.n = len(x)
        self._spline = CubicSpline(x, y)
        self._c = self._spline.c  # (4, n-1)

    def __call__(self, s):
        if np.ndim(s) > 0:
            return self._spline(s)
        i = int((s - self.x0) / self.h)
        if i < 0:
            i = 0
        elif i > self.n - 2:
            i = self.n - 2
        dx = s - (self.x0 + i * self.h)
        c = self._c
        return ((c[0, i] * dx + c[1, i]) * dx + c[2, i]) * dx + c[3, i]

    def derivative(self) -> "UniformCubic":
        out = object.__new__(UniformCubic)
        out.x0, out.h, out.n = self.x0, self.h, self.n
        out._spline = self._spline.derivative()
        c = self._c
        dc = np.empty((4, c.shape[1]))
        dc[0] = 0.0
        dc[1] = 3.0 * c[0]
        dc[2] = 2.0 * c[1]
        dc[3] = c[2]
        out._c = dc
        return out


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid in the radial coordinate s."""

    s_min: float
    s_max: float
    n: int

    def __post_init__(self):
        if not self.s_min < self.s_max:
            raise GeometryError("s_min must be below s_max")
        if self.n < 16:
            raise GeometryError("need at least 16 nodes")

    @property
    def spacing(self) -> float:
        return (self.s_max - self.s_min) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.n)

    def contains(self, s: float) -> bool:
        return self.s_min <= s <= self.s_max


class OriginKind(Enum):
    TWO_ENDED = "two_ended"
    CENTER_POINT = "center_point"


def _centered_second(y: np.ndarray, h: float) -> np.ndarray:
    """Second derivative by centered differences, one-sided at the ends."""
    d2 = np.empty_like(y)
    d2[1:-1] = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / h**2
    d2[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / h**2
    d2[-1] = (2.0 * y[-1] - 5.0 * y[-2] + 4.0 * y[-3] - y[-4]) / h**2
    return d2


@dataclass(frozen=True)
class SliceGeometry:
    """Measured data of one coordinate sphere."""

    location: float
    area: float
    H: float
    lambda1: float
    lambda2: float
    ricci_nn: float

    def __post_init__(self):
        if not self.area > 0:
            raise GeometryError("slice area must be positive")


@dataclass(frozen=True)
class ProfileMetric:
    """Warped product ds^2 + r(s)^2 g_{S^2} sampled on a uniform grid.

    Optional exact curvature arrays may be attached when the construction
    provides them in closed form (the finite-difference route stays available
    through :func:`curvature_pack` for validation).
    """

    grid: RadialGrid
    r: np.ndarray
    r_prime: np.ndarray
    origin_kind: OriginKind = OriginKind.CENTER_POINT
    symmetric: bool = False
    scalar_curvature_exact: np.ndarray | None = None
    ricci_nn_exact: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.r) != self.grid.n or len(self.r_prime) != self.grid.n:
            raise GeometryError("sample arrays must match the grid")
        if np.any(self.r <= 0):
            raise GeometryError("warp function must be positive")
        if self.symmetric:
            if abs(self.grid.s_min + self.grid.s_max) > 1e-12 * self.grid.spacing:
                raise GeometryError("symmetric profile needs a grid even about s=0")
            if not np.allclose(self.r, self.r[::-1], rtol=1e-12, atol=0):
                raise GeometryError("symmetric profile must have even r(s)")

    # -- interpolants -------------------------------------------------------

    def _interp(self, key, values) -> UniformCubic:
        if key not in self._cache:
            self._cache[key] = UniformCubic(self.grid.nodes, values)
        return self._cache[key]

    @property
    def r_interp(self) -> UniformCubic:
        return self._interp("r", self.r)

    @property
    def rp_interp(self) -> UniformCubic:
        return self._interp("rp", self.r_prime)

    @property
    def r_second(self) -> np.ndarray:
        if "rpp" not in self._cache:
            self._cache["rpp"] = _centered_second(self.r, self.grid.spacing)
        return self._cache["rpp"]

    def _check_range(self, s: float):
        if not self.grid.contains(s):
            raise GeometryError(f"s={s} outside grid [{self.grid.s_min}, {self.grid.s_max}]")

    # -- pointwise geometry -------------------------------------------------

    def r_at(self, s):
        return self.r_interp(s)

    def rp_at(self, s):
        return self.rp_interp(s)

    def area(self, s):
        r = self.r_interp(s)
        return 4.0 * np.pi * r * r

    def mean_curvature(self, s):
        return 2.0 * self.rp_interp(s) / self.r_interp(s)

    def ricci_nn(self, s):
        if self.ricci_nn_exact is not None:
            return self._interp("ric_exact", self.ricci_nn_exact)(s)
        return -2.0 * self._interp("rpp_i", self.r_second)(s) / self.r_interp(s)

    def scalar_curvature(self, s):
        if self.scalar_curvature_exact is not None:
            return self._interp("R_exact", self.scalar_curvature_exact)(s)
        return self._interp("R_fd", self._scalar_fd())(s)

    def _scalar_fd(self) -> np.ndarray:
        rp = self.r_prime
        return -4.0 * self.r_second / self.r + 2.0 * (1.0 - rp * rp) / self.r**2

    # volume element dV/ds for radial integrals; metric gradient of a scalar
    # sampled in s is grad_factor * df/ds (unity here: s is proper length).

    def volume_element(self, s):
        return self.area(s)

    def grad_factor(self, s):
        return np.ones_like(np.asarray(s, dtype=float)) if np.ndim(s) else 1.0


def slice_geometry(metric: ProfileMetric, s: float) -> SliceGeometry:
    """Geometry of the coordinate sphere at s."""
    metric._check_range(s)
    r = float(metric.r_at(s))
    rp = float(metric.rp_at(s))
    lam = rp / r
    return SliceGeometry(
        location=float(s),
        area=4.0 * np.pi * r * r,
        H=2.0 * lam,
        lambda1=lam,
        lambda2=lam,
        ricci_nn=float(metric.ricci_nn(s)),
    )


def curvature_pack(metric: ProfileMetric) -> dict:
    """Sampled scalar curvature and Ric(nu,nu) from finite differences.

    Always takes the finite-difference route, even when the metric carries
    exact curvature arrays, so it can serve as the validation side of the
    pair (the exact arrays are the other side).
    """
    rpp = metric.r_second
    R = metric._scalar_fd()
    ric = -2.0 * rpp / metric.r
    return {"s": metric.grid.nodes, "R": R, "ricci_nn": ric}


def profile_from_schwarzschild(m: float, s_max: float, grid: RadialGrid) -> ProfileMetric:
    """Doubled Schwarzschild profile: (r')^2 = 1 - 2m/r, r(0) = 2m.

    The throat start is square-root degenerate, so the first few nodes come
    from the series r = 2m + s^2/(8m) - s^4/(384 m^3) + O(s^6); past
    |s| = 10 * spacing the profile is continued by classic fixed-step RK4.
    """
    if m <= 0:
        raise GeometryError("mass must be positive")
    if abs(grid.s_min + s_max) > 1e-12 or abs(grid.s_max - s_max) > 1e-12:
        raise GeometryError("grid must cover [-s_max, s_max]")
    if grid.n % 2 == 0:
        raise GeometryError("need an odd node count so s=0 is a node")
    h = grid.spacing
    series_end = 10.0 * h
    if series_end > 0.5 * m:
        raise GeometryError("grid too coarse: series patch exceeds the throat region")

    nodes = grid.nodes
    half = nodes[nodes >= -1e-15]  # s >= 0 including 0
    r_half = np.empty_like(half)

    def series(s):
        return 2.0 * m + s**2 / (8.0 * m) - s**4 / (384.0 * m**3)

    def rhs(r):
        return np.sqrt(max(1.0 - 2.0 * m / r, 0.0))

    k_switch = int(np.floor(series_end / h + 1e-12))
    for k, s in enumerate(half):
        if k <= k_switch:
            r_half[k] = series(s)
        else:
            # one RK4 step from the previous node
            r0 = r_half[k - 1]
            k1 = rhs(r0)
            k2 = rhs(r0 + 0.5 * h * k1)
            k3 = rhs(r0 + 0.5 * h * k2)
            k4 = rhs(r0 + h * k3)
            r_half[k] = r0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    r = np.concatenate([r_half[:0:-1], r_half])
    s_all = grid.nodes
    rp = np.sign(s_all) * np.sqrt(np.maximum(1.0 - 2.0 * m / r, 0.0))
    # R vanishes identically and r'' = m/r^2 follows from the profile ODE
    return ProfileMetric(
        grid=grid,
        r=r,
        r_prime=rp,
        origin_kind=OriginKind.TWO_ENDED,
        symmetric=True,
        scalar_curvature_exact=np.zeros_like(r),
        ricci_nn_exact=-2.0 * m / r**3,
    )


def flat_profile(s_min: float, s_max: float, n: int) -> ProfileMetric:
    """Euclidean space in polar form, r(s) = s (requires s_min > 0)."""
    if s_min <= 0:
        raise GeometryError("flat profile needs s_min > 0")
    grid = RadialGrid(s_min, s_max, n)
    s = grid.nodes
    return ProfileMetric(
        grid=grid,
        r=s.copy(),
        r_prime=np.ones_like(s),
        origin_kind=OriginKind.CENTER_POINT,
        scalar_curvature_exact=np.zeros_like(s),
        ricci_nn_exact=np.zeros_like(s),
    )


# ---------------------------------------------------------------------------
# conformal decoration g_u = u^4 g
# ---------------------------------------------------------------------------


class ConformalProfileMetric:
    """Evaluator for g_u = u^4 g over a base ProfileMetric.

    All exposed quantities use the conformal identities:

        area_u   = u^4 * area
        H_u      = u^-2 (H + 4 u^-1 du/ds)
        R_u      = u^-5 (-8 Lap_g u + R u)
        |grad f|_u = u^-2 |grad f|_g
    """

    def __init__(self, base: ProfileMetric, u: np.ndarray):
        u = np.asarray(u, dtype=float)
        if len(u) != base.grid.n:
            raise GeometryError("conformal factor must be sampled on the base grid")
        if np.any(u <= 0):
            raise GeometryError("conformal factor must be positive")
        self.base = base
        self.u = u
        h = base.grid.spacing
        self.u_prime = np.gradient(u, h, edge_order=2)
        self.u_second = _centered_second(u, h)
        nodes = base.grid.nodes
        self._u_i = UniformCubic(nodes, u)
        self._up_i = UniformCubic(nodes, self.u_prime)

    @property
    def grid(self) -> RadialGrid:
        return self.base.grid

    def area(self, s):
        return self.base.area(s) * self._u_i(s) ** 4

    def mean_curvature(self, s):
        u = self._u_i(s)
        return (self.base.mean_curvature(s) + 4.0 * self._up_i(s) / u) / u**2

    def laplacian_base(self) -> np.ndarray:
        """Lap_g u on the base warped product: u'' + (2 r'/r) u'."""
        base = self.base
        return self.u_second + (2.0 * base.r_prime / base.r) * self.u_prime

    def scalar_curvature_nodes(self) -> np.ndarray:
        base = self.base
        R_base = (
            base.scalar_curvature_exact
            if base.scalar_curvature_exact is not None
            else base._scalar_fd()
        )
        return (-8.0 * self.laplacian_base() + R_base * self.u) / self.u**5

    def scalar_curvature(self, s):
        if not hasattr(self, "_R_i"):
            self._R_i = UniformCubic(self.grid.nodes, self.scalar_curvature_nodes())
        return self._R_i(s)

    def grad_factor(self, s):
        return self._u_i(s) ** -2

    def volume_element(self, s):
        return self.base.area(s) * self._u_i(s) ** 6

    def to_profile(self, n: int | None = None) -> tuple[ProfileMetric, UniformCubic]:
        """Reparametrize g_u into proper-length gauge as a plain profile.

        With ds_tilde = u^2 ds and r_tilde = u^2 r, g_u is again a warped
        product.  Returns the resampled profile and the map s -> s_tilde.
        Exact curvature arrays are carried over from the conformal identity.
        """
        base = self.base
        nodes = base.grid.nodes
        h = base.grid.spacing
        n_out = n if n is not None else base.grid.n
        u2 = self.u**2
        # cumulative proper length, odd about s=0 for symmetric bases
        from scipy.integrate import cumulative_trapezoid

        if base.symmetric:
            s_t = cumulative_trapezoid(u2, nodes, initial=0.0)
            mid = 0.5 * (s_t[0] + s_t[-1])
            s_t = s_t - mid  # s_tilde(0) = 0 by evenness of u
        else:
            s_t = cumulative_trapezoid(u2, nodes, initial=0.0) + u2[0] * 0.0
            s_t = s_t + nodes[0]  # anchor at the inner end
        r_t = u2 * base.r
        s_map = UniformCubic(nodes, s_t)

        new_grid = RadialGrid(float(s_t[0]), float(s_t[-1]), n_out)
        new_nodes = new_grid.nodes
        # invert the monotone map s -> s_tilde by spline on the inverse
        inv = CubicSpline(s_t, nodes)
        s_of_new = np.clip(inv(new_nodes), nodes[0], nodes[-1])
        r_spline = CubicSpline(nodes, r_t)
        r_new = r_spline(s_of_new)
        # dr_tilde/ds_tilde = (r_tilde)' / u^2
        rt_prime = np.gradient(r_t, h, edge_order=2) / u2
        rp_new = CubicSpline(nodes, rt_prime)(s_of_new)
        R_new = CubicSpline(nodes, self.scalar_curvature_nodes())(s_of_new)
        profile = ProfileMetric(
            grid=new_grid,
            r=r_new,
            r_prime=rp_new,
            origin_kind=base.origin_kind,
            symmetric=False,  # resampled grid need not hit s=0 exactly
            scalar_curvature_exact=R_new,
        )
        return profile, s_map


def conformal_transform(base: ProfileMetric, u: np.ndarray) -> ConformalProfileMetric:
    """Derived-metric evaluator for g_u = u^4 g (u > 0, u -> 1 at the ends)."""
    return ConformalProfileMetric(base, u)


# ---------------------------------------------------------------------------
# Cartesian conformally flat backend
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConformalFlatMetric:
    """g = phi^4 * (flat) on a Cartesian box [-box_extent, box_extent]^3.

    ``excised_radius`` marks the coordinate ball E_0 removed from the domain
    (0 disables excision).  phi must tend to 1 at the box boundary.
    """

    n: int
    box_extent: float
    phi: np.ndarray
    excised_radius: float = 0.0
    boundary_tolerance: float = 1e-2

    def __post_init__(self):
        if self.phi.shape != (self.n, self.n, self.n):
            raise GeometryError("phi must be sampled on the n^3 grid")
        if np.any(self.phi <= 0):
            raise GeometryError("conformal factor must be positive")
        face = self.phi[0, :, :]
        if np.max(np.abs(face - 1.0)) > self.boundary_tolerance:
            raise GeometryError("phi must approach 1 at the box boundary")

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.box_extent, self.box_extent, self.n)

    @property
    def spacing(self) -> float:
        return 2.0 * self.box_extent / (self.n - 1)

    def radius_grid(self) -> np.ndarray:
        x = self.axis
        X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
        return np.sqrt(X**2 + Y**2 + Z**2)


def isotropic_schwarzschild_phi(m: float, n: int, box_extent: float) -> ConformalFlatMetric:
    """phi = 1 + m/(2|x|) on the box, clipped near the puncture."""
    x = np.linspace(-box_extent, box_extent, n)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    rr = np.sqrt(X**2 + Y**2 + Z**2)
    rr = np.maximum(rr, 0.25 * m)  # puncture guard; region is excised anyway
    phi = 1.0 + m / (2.0 * rr)
    tol = m / (2.0 * box_extent) * 1.2 + 1e-12
    return ConformalFlatMetric(
        n=n, box_extent=box_extent, phi=phi, excised_radius=0.5 * m, boundary_tolerance=tol
    )


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------


def profile_to_csv(metric: ProfileMetric) -> str:
    pack = curvature_pack(metric)
    R = (
        metric.scalar_curvature_exact
        if metric.scalar_curvature_exact is not None
        else pack["R"]
    )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "r", "r_prime", "R"])
    for s, r, rp, Rv in zip(metric.grid.nodes, metric.r, metric.r_prime, R):
        w.writerow([FMT % s, FMT % r, FMT % rp, FMT % Rv])
    return buf.getvalue()


def profile_from_csv(text: str, origin_kind: OriginKind = OriginKind.CENTER_POINT) -> ProfileMetric:
    rows = list(csv.reader(io.StringIO(text)))
    if rows[0] != ["s", "r", "r_prime", "R"]:
        raise GeometryError("unexpected CSV header")
    data = np.array([[float(v) for v in row] for row in rows[1:]])
    s, r, rp, R = data.T
    grid = RadialGrid(float(s[0]), float(s[-1]), len(s))
    if not np.allclose(s, grid.nodes, rtol=0, atol=1e-12 * max(1.0, abs(s[-1]))):
        raise GeometryError("CSV nodes are not a uniform grid")
    return ProfileMetric(
        grid=grid, r=r, r_prime=rp, origin_kind=origin_kind, scalar_curvature_exact=R
    )
