"""Regularized level-set equation for the weighted inverse mean curvature flow.

The degenerate level-set equation

    div(grad u / |grad u|) = |grad u| + h * <nu, nu-part>

is solved through its elliptic regularization: |grad u| is replaced by
sqrt(|grad u|^2 + eps^2) and the problem is posed on the annulus between the
initial region E_0 (datum 0) and the outer sublevel set F_L = {v < L} of a
logarithmic subsolution v (datum L - 2).  A homotopy parameter scales both
the weight term and the outer datum from 0 to 1; each stage is solved by
damped Newton iteration.

Profile backend: 1-D flux-form discretization with an analytic tridiagonal
Jacobian.  Cartesian backend (conformally flat metrics only): matrix-free
Newton-Krylov on the same flux form per axis; it exists to cross-check the
radial backend at small grid sizes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .geometry import ConformalFlatMetric, ProfileMetric, UniformCubic

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 80
DAMPING_FLOOR = 2.0**-20
UPWIND_BLEND_COEFF = 10.0  # upwind fraction per unit grid spacing in the polish phase


class EllipticError(RuntimeError):
    pass


class NoValidAlpha(EllipticError):
    pass


class NewtonDiverged(EllipticError):
    def __init__(self, residual):
        super().__init__(f"Newton stalled at residual {residual:.3e}")
        self.residual = residual


class ContinuationStuck(EllipticError):
    pass


def epsilon_schedule(L: float, amplitude: float = 1.0, rate: float = 0.25) -> float:
    """Largest admissible regularization for a given outer level L.

    The theory only guarantees some eps(L) -> 0 as L -> infinity; we adopt an
    exponential schedule in L (the flow time needed to reach the outer
    boundary scales with L), with the rate exposed for configuration.
    """
    return amplitude * np.exp(-rate * L)


# ---------------------------------------------------------------------------
# subsolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubsolutionDomain:
    alpha: float
    r_ref: float
    v: np.ndarray          # sampled on the metric grid
    s_outer: float         # coordinate of {v = L}
    L: float
    worst_defect: float    # min over the verified region of the operator on v


def subsolution_domain(metric: ProfileMetric, L: float, weight_h: np.ndarray | None = None,
                       alpha: float | None = None, r_ref: float | None = None,
                       bracket: tuple[float, float] = (1.0, 2.0),
                       verify_tol: float = 1e-8,
                       s_inner: float | None = None) -> SubsolutionDomain:
    """Logarithmic subsolution v = alpha log(r/r_ref) with node-by-node check.

    For radial v with v' > 0 the level-set operator reduces to
    H(s) - alpha r'/r - h(s); the subsolution property requires this to be
    >= 0 on the region {v >= 0} outside E_0.  On two-ended grids the second
    asymptotic end also has large r, so the check region must additionally be
    cut at s_inner.  If alpha is not given, the largest valid value in the
    bracket is selected by bisection; NoValidAlpha is raised if even the
    lower end fails.
    """
    nodes = metric.grid.nodes
    r = metric.r
    rp = metric.r_prime
    h = np.zeros_like(r) if weight_h is None else np.abs(np.asarray(weight_h))
    if r_ref is None:
        r_ref = 1.2 * float(r[0] if metric.origin_kind.value == "center_point" else np.min(r))
    outside = np.ones_like(r, dtype=bool) if s_inner is None else nodes >= s_inner

    H = 2.0 * rp / r

    def defect(a: float) -> float:
        v = a * np.log(r / r_ref)
        region = (v >= 0.0) & outside
        if not np.any(region):
            return -np.inf
        return float(np.min((H - a * rp / r - h)[region]))

    if alpha is not None:
        a = float(alpha)
        d = defect(a)
        if d < -verify_tol:
            raise NoValidAlpha(f"alpha={a} fails the node-by-node check (defect {d:.3e})")
    else:
        lo, hi = bracket
        if defect(lo) < -verify_tol:
            raise NoValidAlpha(f"no valid alpha in [{lo}, {hi}]")
        if defect(hi) >= -verify_tol:
            a = hi
        else:
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if defect(mid) >= -verify_tol:
                    lo = mid
                else:
                    hi = mid
            a = lo
        d = defect(a)

    v = a * np.log(r / r_ref)
    r_outer = r_ref * np.exp(L / a)
    if r_outer >= r[-1]:
        raise EllipticError("grid does not reach the outer level set F_L")
    start = 0 if s_inner is None else int(np.argmin(np.abs(nodes - s_inner)))
    k = start + int(np.searchsorted(r[start:], r_outer))
    return SubsolutionDomain(alpha=a, r_ref=float(r_ref), v=v,
                             s_outer=float(nodes[k]), L=L, worst_defect=d)


# ---------------------------------------------------------------------------
# profile-backend problem and solver
# ---------------------------------------------------------------------------


@dataclass
class EllipticProblem:
    metric: ProfileMetric
    epsilon: float
    L: float
    s_inner: float                      # radius of E_0 in the coordinate s
    weight_h: np.ndarray | None = None  # smoothed weight h_delta on the grid
    alpha: float | None = None
    r_ref: float | None = None
    homotopy_steps: int = 8
    schedule_amplitude: float = 1.0
    schedule_rate: float = 0.25
    subsolution: SubsolutionDomain = field(init=False)

    def __post_init__(self):
        if self.epsilon <= 0:
            raise EllipticError("epsilon must be positive")
        cap = epsilon_schedule(self.L, self.schedule_amplitude, self.schedule_rate)
        if self.epsilon > cap:
            raise EllipticError(
                f"epsilon={self.epsilon} exceeds the solvability schedule eps(L)={cap:.3e}")
        self.subsolution = subsolution_domain(
            self.metric, self.L, self.weight_h, self.alpha, self.r_ref,
            s_inner=self.s_inner)
        if not self.s_inner < self.subsolution.s_outer:
            raise EllipticError("E_0 must lie strictly inside F_L")


@dataclass(frozen=True)
class EllipticSolution:
    s: np.ndarray
    u: np.ndarray
    gradient_field: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    epsilon: float
    L: float
    homotopy_steps: int
    boundary_inner: float
    boundary_outer: float

    def interp(self) -> UniformCubic:
        return UniformCubic(self.s, self.u)

    def to_csv(self) -> str:
        from .geometry import FMT
        lines = ["s,u,grad_u"]
        for s, u, g in zip(self.s, self.u, self.gradient_field):
            lines.append(",".join(FMT % v for v in (s, u, g)))
        return "\n".join(lines) + "\n"

    def header_json(self) -> str:
        return json.dumps({
            "epsilon": self.epsilon, "L": self.L,
            "homotopy_steps": self.homotopy_steps,
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
        })


def _residual_and_jacobian(u, w, h, dx, eps, s_hom, want_jac=True, upwind=1.0):
    """Flux-form residual on interior nodes; tridiagonal Jacobian bands.

    F_i = [w_{i+1/2} p(q_+) - w_{i-1/2} p(q_-)] / (w_i dx)
          - sqrt(d2 + eps^2) - s_hom * h_i * d2 / (d2 + eps^2)

    with q_+/- the half-node slopes and p(q) = q / sqrt(q^2 + eps^2).

    d2, the squared-slope sample feeding the zeroth-order terms, blends a
    centered and a Godunov-upwind flavour with weight ``upwind``:

        d2 = (1 - t) (q_+^2 + q_-^2)/2 + t (max(q_-,0)^2 + min(q_+,0)^2)

    The centered flavour alone is second-order accurate but loses uniqueness
    where p saturates (|q| >> eps): there the equation degenerates to
    first-order transport and the symmetric average cannot pin the individual
    slopes, so alternating-slope families solve the discrete equations and
    Newton lodges in oscillatory states.  The upwind flavour (for the
    outward-increasing solutions of interest) is monotone and globally robust
    but first-order.  The solver runs fully upwind first and polishes with
    t = O(dx), which suppresses the oscillatory families uniformly in dx while
    keeping the truncation error O(dx^2).

    The residual is evaluated in extended precision: on near-flat plateaus
    p'(q) ~ 1/eps amplifies the rounding of diff(u) by ~1/(eps dx^2), which
    in double precision would floor max|F| above the convergence tolerance.
    """
    uL = u.astype(np.longdouble)
    epsL = np.longdouble(eps)
    q = np.diff(uL) / np.longdouble(dx)       # length n-1, q[i] = slope on (i, i+1)
    w_half = 0.5 * (w[1:] + w[:-1])
    p = q / np.sqrt(q * q + epsL * epsL)
    qp, qm = q[1:], q[:-1]                    # per interior node i=1..n-2
    t = upwind
    d2 = (1.0 - t) * 0.5 * (qp * qp + qm * qm) + t * (
        np.maximum(qm, 0.0) ** 2 + np.minimum(qp, 0.0) ** 2)
    S = np.sqrt(d2 + epsL * epsL)
    wi = w[1:-1]
    hi = h[1:-1]
    F = ((w_half[1:] * p[1:] - w_half[:-1] * p[:-1]) / (wi * dx)
         - S - s_hom * hi * d2 / (d2 + epsL * epsL)).astype(float)
    if not want_jac:
        return F, None
    q = q.astype(float)
    qp, qm = q[1:], q[:-1]
    d2 = d2.astype(float)
    S = S.astype(float)
    pprime = eps * eps / (q * q + eps * eps) ** 1.5
    # derivative of (S + s*h*d2/(d2+eps^2)) with respect to d2
    dZ_dd2 = 0.5 / S + s_hom * hi * eps * eps / (d2 + eps * eps) ** 2
    # d d2/dq_-: centered gives q_-, upwind gives 2 max(q_-,0); likewise q_+
    cm = (1.0 - t) * qm + t * 2.0 * np.maximum(qm, 0.0)
    cp = (1.0 - t) * qp + t * 2.0 * np.minimum(qp, 0.0)
    upper = w_half[1:] * pprime[1:] / (wi * dx * dx) - dZ_dd2 * cp / dx
    lower = w_half[:-1] * pprime[:-1] / (wi * dx * dx) + dZ_dd2 * cm / dx
    diag = -(w_half[1:] * pprime[1:] + w_half[:-1] * pprime[:-1]) / (wi * dx * dx) \
        - dZ_dd2 * (cm - cp) / dx
    return F, (lower, diag, upper)


def _newton_1d(u0, w, h, dx, eps, s_hom, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER,
               upwind=1.0):
    """Damped Newton on the interior unknowns; boundary nodes of u0 are fixed.

    The iterate is carried in extended precision: near the tolerance the
    correction per node drops below one double-precision ulp of u (the
    residual derivative is ~1/(eps dx^2)), so a double iterate cannot
    represent the root accurately enough.  The returned array is extended
    precision; callers round for storage.
    """
    u = u0.astype(np.longdouble)
    n = len(u)
    F, _ = _residual_and_jacobian(u, w, h, dx, eps, s_hom, want_jac=False, upwind=upwind)
    res = float(np.max(np.abs(F)))
    merit = float(np.linalg.norm(F))
    for it in range(max_iter):
        if res <= tol:
            return u, res, it
        F, (lower, diag, upper) = _residual_and_jacobian(u, w, h, dx, eps, s_hom, upwind=upwind)
        ab = np.zeros((3, n - 2))
        ab[0, 1:] = upper[:-1]
        ab[1, :] = diag
        ab[2, :-1] = lower[1:]
        try:
            step = solve_banded((1, 1), ab, -F)
            # one round of iterative refinement in extended precision: on
            # fine grids the Jacobian entries reach ~1/(eps dx^2) and a
            # double-precision solve alone floors the residual near the
            # convergence tolerance
            sl = step.astype(np.longdouble)
            r_lin = F.astype(np.longdouble) + diag * sl
            r_lin[:-1] += upper[:-1] * sl[1:]
            r_lin[1:] += lower[1:] * sl[:-1]
            step = sl + solve_banded((1, 1), ab, -r_lin.astype(float))
        except np.linalg.LinAlgError as exc:
            raise NewtonDiverged(res) from exc
        lam = 1.0
        best = None  # least max-norm seen, fallback near the rounding floor
        while True:
            trial = u.copy()
            trial[1:-1] += lam * step
            Ft, _ = _residual_and_jacobian(trial, w, h, dx, eps, s_hom, want_jac=False, upwind=upwind)
            rt = float(np.max(np.abs(Ft)))
            mt = float(np.linalg.norm(Ft))
            if mt < merit or rt <= tol:
                u, res, merit = trial, rt, mt
                break
            if best is None or rt < best[0]:
                best = (rt, mt, trial)
            lam *= 0.5
            if lam < DAMPING_FLOOR:
                if best is not None and best[0] < res:
                    res, merit, u = best
                    break
                raise NewtonDiverged(res)
    if res > tol:
        raise NewtonDiverged(res)
    return u, res, max_iter


def _upwind_stage(u_pred, w, h, dx, eps, s_hom):
    """Fully-upwind solve of one continuation stage, annealing in epsilon.

    Tries the target regularization directly; on a Newton stall (typically at
    the kink where the solution meets the outer-datum ceiling and the
    saturated transport regime abuts a flat region), re-solves with the
    regularization enlarged until Newton converges from the same predictor,
    then walks the regularization back down geometrically, bisecting on
    failure.  Larger epsilon makes the zeroth-order terms dominate and the
    discrete problem uniformly monotone, so some finite multiple converges
    whenever the target problem is solvable at all.
    """
    total = 0
    try:
        u, res, its = _newton_1d(u_pred, w, h, dx, eps, s_hom, upwind=1.0)
        return u, res, its
    except NewtonDiverged:
        pass
    factor = 2.0
    while True:
        try:
            u, res, its = _newton_1d(u_pred, w, h, dx, eps * factor, s_hom,
                                     upwind=1.0)
            total += its
            break
        except NewtonDiverged:
            factor *= 2.0
            if factor > 4096.0:
                raise
    f = factor
    while f > 1.0:
        f_try = max(1.0, 0.5 * f)
        while True:
            try:
                u_new, res, its = _newton_1d(u, w, h, dx, eps * f_try, s_hom,
                                             upwind=1.0)
                total += its
                break
            except NewtonDiverged:
                f_next = np.sqrt(f * f_try)
                if f_next >= 0.9999 * f:
                    raise
                f_try = f_next
        u, f = u_new, f_try
    return u, res, total


def solve_regularized(problem: EllipticProblem) -> EllipticSolution:
    """Solve the regularized problem by homotopy continuation in the weight.

    The continuation parameter ramps 0 -> 1 over ``homotopy_steps`` stages;
    it scales the weight term and co-scales the outer boundary value.  The
    initial iterate at stage 0 is the subsolution clamped to the boundary
    data.
    """
    metric = problem.metric
    grid = metric.grid
    nodes = grid.nodes
    i0 = int(np.argmin(np.abs(nodes - problem.s_inner)))
    i1 = int(np.argmin(np.abs(nodes - problem.subsolution.s_outer)))
    if i1 - i0 < 8:
        raise EllipticError("domain resolves fewer than 8 intervals")
    sl = slice(i0, i1 + 1)
    s = nodes[sl]
    w = metric.r[sl] ** 2
    h = (np.zeros_like(s) if problem.weight_h is None
         else np.asarray(problem.weight_h)[sl])
    dx = grid.spacing
    eps = problem.epsilon
    bc_outer_full = problem.L - 2.0

    v = problem.subsolution.v[sl]
    v_shift = np.clip(v - v[0], 0.0, None)  # subsolution meeting the inner datum
    u = v_shift
    total_iters = 0
    steps = max(1, problem.homotopy_steps)
    for k in range(1, steps + 1):
        s_hom = k / steps
        bc_outer = s_hom * bc_outer_full
        # predictor: previous stage's solution, with the raised outer datum
        # filled in along the subsolution (clamping the previous solution
        # alone would leave a jump at the outer boundary)
        u = np.minimum(np.maximum(u, v_shift), bc_outer)
        u[0] = 0.0
        u[-1] = bc_outer
        # inner cascade in the upwind fraction: fully monotone first, then
        # step down to the O(dx) blend that restores second-order accuracy.
        # The step is adaptive: a Newton failure rolls back to the last
        # converged blend and bisects toward it.
        t_blend = 1.0
        t_target = min(1.0, UPWIND_BLEND_COEFF * dx)
        try:
            u, res, n_it = _upwind_stage(u, w, h, dx, eps, s_hom)
            total_iters += n_it
        except NewtonDiverged as exc:
            raise ContinuationStuck(
                f"continuation stalled at s={s_hom:.3f}: {exc}") from exc
        u_ok, t_ok = u, t_blend
        while t_ok > t_target:
            t_try = max(t_target, 0.5 * t_ok)
            while True:
                try:
                    u, res, its = _newton_1d(u_ok, w, h, dx, eps, s_hom,
                                             upwind=t_try)
                    total_iters += its
                    break
                except NewtonDiverged as exc:
                    t_next = 0.5 * (t_ok + t_try)
                    if t_ok - t_next < 1e-4 * t_ok:
                        raise ContinuationStuck(
                            f"blend cascade stalled at s={s_hom:.3f}, "
                            f"t={t_try:.3e}: {exc}") from exc
                    t_try = t_next
            u_ok, t_ok = u, t_try

    grad = np.abs(np.gradient(u, dx, edge_order=2)).astype(float)
    u = u.astype(float)
    return EllipticSolution(
        s=s, u=u, gradient_field=grad, residual_norm=res, iterations=total_iters,
        converged=True, epsilon=eps, L=problem.L, homotopy_steps=steps,
        boundary_inner=0.0, boundary_outer=bc_outer_full)


# ---------------------------------------------------------------------------
# audits and sweeps
# ---------------------------------------------------------------------------


def barrier_check(solution: EllipticSolution, problem: EllipticProblem,
                  eta_coeff: float = 0.5, slack: float | None = None) -> dict:
    """Audit the barrier and gradient estimates on a converged solution.

    Checks -eps <= u <= L-2 everywhere, u >= v-2 outside {v < 0}, the
    boundary gradient bound |grad u| <= max(0, H(dE_0)) + eps + slack, and
    reports the observed interior-estimate constant and sup |x| |grad u|.
    """
    metric = problem.metric
    eps = problem.epsilon
    s, u, grad = solution.s, solution.u, solution.gradient_field
    dx = metric.grid.spacing
    if slack is None:
        slack = 50.0 * dx * dx * max(1.0, float(np.max(np.abs(u))) / dx)
        slack = min(slack, 0.1)
    violations = []

    if np.min(u) < -eps - 1e-12:
        violations.append(("u_below_-eps", float(s[np.argmin(u)])))
    if np.max(u) > problem.L - 2.0 + 1e-12:
        violations.append(("u_above_L-2", float(s[np.argmax(u)])))

    i0 = int(np.argmin(np.abs(metric.grid.nodes - s[0])))
    # v capped at L: the outer node is snapped to the grid, so v there can
    # exceed L by a grid increment, while the continuum bound lives on {v <= L}
    v = np.minimum(problem.subsolution.v[i0:i0 + len(s)], problem.L)
    mask = v >= 0.0
    if np.any(mask) and np.min((u - (v - 2.0))[mask]) < -1e-9:
        k = int(np.argmin(u - (v - 2.0)))
        violations.append(("u_below_v-2", float(s[k])))

    H0 = float(metric.mean_curvature(s[0]))
    bound0 = max(0.0, H0) + eps + slack
    g0 = float(abs(u[1] - u[0]) / dx)
    if g0 > bound0:
        violations.append(("boundary_gradient", float(s[0])))

    r = np.asarray(metric.r_at(s))
    eta = eta_coeff * r
    # observed interior constant: (|grad u| - boundary max - eps) * eta
    interior_c = float(np.max((grad - max(g0, grad[-1]) - eps) * eta))
    decay_sup = float(np.max(r * grad))
    return {
        "passed": not violations,
        "violations": violations,
        "boundary_gradient": g0,
        "boundary_gradient_bound": bound0,
        "interior_constant_observed": interior_c,
        "decay_sup_r_grad_u": decay_sup,
        "slack": slack,
    }


def epsilon_sweep(metric: ProfileMetric, s_inner: float, eps_list, L_list,
                  annulus: tuple[float, float], weight_h=None,
                  homotopy_steps: int = 8, **kwargs) -> dict:
    """Successive solves compared in max-norm on a fixed compact annulus."""
    eps_list = list(eps_list)
    L_list = list(L_list)
    if len(eps_list) != len(L_list):
        raise EllipticError("eps and L lists must pair up")
    if any(b > a for a, b in zip(eps_list, eps_list[1:])):
        raise EllipticError("eps_list must be nonincreasing")
    if any(b < a for a, b in zip(L_list, L_list[1:])):
        raise EllipticError("L_list must be nondecreasing")
    sols = []
    for eps, L in zip(eps_list, L_list):
        prob = EllipticProblem(metric=metric, epsilon=eps, L=L, s_inner=s_inner,
                               weight_h=weight_h, homotopy_steps=homotopy_steps, **kwargs)
        sols.append(solve_regularized(prob))
    lo, hi = annulus
    ss = np.linspace(lo, hi, 512)
    vals = [sol.interp()(ss) for sol in sols]
    diffs = [float(np.max(np.abs(vals[k + 1] - vals[k]))) for k in range(len(vals) - 1)]
    return {"solutions": sols, "cauchy_differences": diffs, "limit_candidate": sols[-1]}




# ---------------------------------------------------------------------------
# Cartesian cross-check backend (conformally flat metrics only)
# ---------------------------------------------------------------------------

CARTESIAN_MAX_N = 96


def _cartesian_residual(full, phi, h_eff, dx, eps):
    """Flux-form residual of the regularized operator on the full box grid.

    For g = phi^4 * flat the operator reads

        phi^-6 sum_i d_i( phi^2 d_i u / W ) - W - h (W^2 - eps^2) / W^2

    with W = sqrt(phi^-4 |du|^2 + eps^2).  Fluxes are evaluated at half nodes
    per axis with the mobility phi^2 / W averaged from the adjacent nodes.
    Residual values on the outermost layer are meaningless (one-sided) and
    must be masked by the caller.
    """
    n = full.shape[0]
    gx, gy, gz = np.gradient(full, dx, edge_order=1)
    g2 = (gx * gx + gy * gy + gz * gz) / phi**4
    W = np.sqrt(g2 + eps * eps)
    coef = phi**2 / W
    div = np.zeros_like(full)
    for axis in range(3):
        q = np.diff(full, axis=axis) / dx
        c_half = 0.5 * (np.take(coef, range(1, n), axis=axis)
                        + np.take(coef, range(0, n - 1), axis=axis))
        flux = c_half * q
        dflux = (np.take(flux, range(1, n - 1), axis=axis)
                 - np.take(flux, range(0, n - 2), axis=axis)) / dx
        mid = tuple(slice(1, -1) if a == axis else slice(None) for a in range(3))
        div[mid] += dflux
    return div / phi**6 - W - h_eff * (W * W - eps * eps) / (W * W)


def solve_regularized_cartesian(metric: ConformalFlatMetric, epsilon: float, L: float,
                                e0_radius: float, alpha: float = 2.0,
                                r_ref: float | None = None,
                                weight_h=None, homotopy_steps: int = 4,
                                tol: float = 1e-8) -> dict:
    """Newton-Krylov solve of the regularized equation on a Cartesian box.

    Limited to conformally flat metrics and n <= 96 per side; intended as a
    cross-check of the radial backend, not as a production solver.
    """
    from scipy.optimize import newton_krylov

    n = metric.n
    if n > CARTESIAN_MAX_N:
        raise EllipticError("Cartesian backend is limited to 96^3 grids")
    dx = metric.spacing
    phi = metric.phi
    rr = metric.radius_grid()
    if r_ref is None:
        r_ref = 1.2 * e0_radius
    r_outer = r_ref * np.exp(L / alpha)
    if r_outer > metric.box_extent:
        raise EllipticError("outer level set leaves the box")
    inner = rr <= e0_radius
    outer = rr >= r_outer
    interior = ~(inner | outer)
    bc_outer_full = L - 2.0
    h = np.zeros_like(phi) if weight_h is None else np.asarray(weight_h)

    u_full = np.clip(alpha * np.log(np.maximum(rr, 1e-6) / r_ref), 0.0, bc_outer_full)
    u_full[inner] = 0.0
    for k in range(1, homotopy_steps + 1):
        s_hom = k / homotopy_steps
        bc = s_hom * bc_outer_full
        u_full = np.minimum(u_full, bc)
        u_full[inner] = 0.0
        u_full[outer] = bc
        h_eff = s_hom * h

        def fun(u_int, bc=bc, h_eff=h_eff):
            trial = u_full.copy()
            trial[interior] = u_int
            trial[inner] = 0.0
            trial[outer] = bc
            return _cartesian_residual(trial, phi, h_eff, dx, epsilon)[interior]

        u_int = newton_krylov(fun, u_full[interior], f_tol=tol, maxiter=60)
        u_full[interior] = u_int

    gx, gy, gz = np.gradient(u_full, dx, edge_order=1)
    grad = np.sqrt(gx * gx + gy * gy + gz * gz) / phi**2
    res = _cartesian_residual(u_full, phi, h, dx, epsilon)
    res_norm = float(np.max(np.abs(res[interior])))
    return {"u": u_full, "gradient": grad, "interior": interior,
            "radius": rr, "epsilon": epsilon, "L": L,
            "residual_norm": res_norm, "outer_radius": r_outer}
