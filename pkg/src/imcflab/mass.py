"""Hawking mass, ADM mass, asymptotic comparison, and Penrose verdicts.

The generalized Hawking mass of a slice N with mean curvature H and weight
value habs = |h| is

    m_h(N) = sqrt(area/16 pi) * (1 - area (H - habs)^2 / 16 pi)

(the integrand is constant on a symmetric slice).  The ADM mass comes from
the quasilocal limit (r/2)(1 - r'^2) on profile metrics and from the flux
integral (1/16 pi) oint (g_ij,j - g_jj,i) n^i on conformally flat grids,
both extrapolated in 1/r.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

VERDICT_TOLERANCE_DEFAULT = 1e-6  # mass units


class MassError(ValueError):
    pass


class InsufficientExtent(MassError):
    pass


def hawking_mass(geometry, habs: float) -> float:
    """Generalized Hawking mass of a symmetric slice."""
    area = geometry.area
    if area <= 0.0:
        raise MassError("slice area must be positive")
    gap = geometry.H - habs
    return float(np.sqrt(area / (16.0 * np.pi))
                 * (1.0 - area * gap * gap / (16.0 * np.pi)))


@dataclass(frozen=True)
class MassReport:
    adm_samples: list                 # (radius, mass) pairs
    adm_extrapolated: float
    m_h_limit: float | None = None
    horizon_area: float | None = None
    penrose_margin: float | None = None
    equality_flag: bool = False
    tolerance: float = VERDICT_TOLERANCE_DEFAULT
    verdict: str = ""
    extras: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "adm_samples": [{"r": r, "m": m} for r, m in self.adm_samples],
            "adm": self.adm_extrapolated,
            "m_h_limit": self.m_h_limit,
            "horizon_area": self.horizon_area,
            "penrose_margin": self.penrose_margin,
            "equality": self.equality_flag,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
        })


def _extrapolate_in_inverse_radius(radii, values) -> float:
    """Limit at infinite radius of samples expanded in powers of 1/r."""
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    x = 1.0 / radii
    deg = min(2, len(radii) - 1)
    if deg == 0:
        return float(values[0])
    coeffs = np.polynomial.polynomial.polyfit(x, values, deg)
    return float(coeffs[0])


def adm_mass(metric, locations, flat_tail_tolerance: float = 1e-3) -> MassReport:
    """ADM mass of a profile metric from quasilocal samples.

    ``locations`` are grid coordinates s in the asymptotic region; at each
    the quasilocal mass (r/2)(1 - r'^2) is sampled and the samples are
    extrapolated in 1/r.  A tail that is not asymptotically flat (quasilocal
    samples growing with r instead of settling on an m + c/r + d/r^2
    expansion) is refused: the fit residual must stay below
    ``flat_tail_tolerance`` relative to the extrapolated mass scale.
    """
    locations = np.asarray(locations, dtype=float)
    grid = metric.grid
    for s in locations:
        if not grid.contains(float(s)):
            raise MassError(f"sample location s={s} outside the grid")
    r = np.asarray(metric.r_at(locations))
    rp = np.asarray(metric.rp_at(locations))
    m = 0.5 * r * (1.0 - rp * rp)
    order = np.argsort(r)
    r, m = r[order], m[order]
    samples = [(float(rk), float(mk)) for rk, mk in zip(r, m)]
    adm = _extrapolate_in_inverse_radius(r, m)
    if len(r) > 3:
        x = 1.0 / r
        coeffs = np.polynomial.polynomial.polyfit(x, m, 2)
        fit_residual = float(np.max(np.abs(
            np.polynomial.polynomial.polyval(x, coeffs) - m)))
        scale = max(1.0, abs(adm))
        if fit_residual > flat_tail_tolerance * scale:
            raise MassError(
                f"non-flat tail detected: quasilocal samples deviate from the "
                f"1/r expansion by {fit_residual:.3g} (scale {scale:.3g})")
    return MassReport(adm_samples=samples, adm_extrapolated=adm)


FLUX_FIT_DEGREE = 4


def adm_mass_flux(metric, radii, n_theta: int = 16, n_phi: int = 32,
                  fit_degree: int = FLUX_FIT_DEGREE) -> MassReport:
    """ADM mass of a conformally flat metric by the coordinate flux integral.

    For g = phi^4 delta the ADM integrand reduces to -2 d(phi^4)/dn, so the
    flux over the coordinate sphere of radius rho is
    -(1/8 pi) oint d_rho(phi^4) dA = -(rho^2/2) d/drho [mean of phi^4].
    The spherical mean is evaluated with fixed-order Gauss-Legendre x
    uniform angular quadrature of the tricubic-interpolated conformal
    factor, fitted as a polynomial in 1/rho, and differentiated through
    the fit.  Differencing the interpolant directly would amplify its
    pointwise error by rho^2/spacing, which is orders of magnitude worse;
    the fit absorbs the radial structure instead and its constant term is
    the extrapolated mass.  Dense radii (a few hundred spanning the
    asymptotic region) average out the cell-periodic interpolation noise.
    """
    from scipy import ndimage

    radii = np.asarray(radii, dtype=float)
    if len(radii) < 2:
        raise MassError("need at least two sphere radii")
    ax = metric.axis
    dx = metric.spacing
    if np.max(radii) > ax[-1] or np.min(radii) <= 0.0:
        raise MassError("sphere radii must lie inside the box")
    coeffs = ndimage.spline_filter(metric.phi, order=3)
    xg, wg = np.polynomial.legendre.leggauss(n_theta)   # nodes in cos(theta)
    azimuths = 2.0 * np.pi * np.arange(n_phi) / n_phi
    ct = xg[:, None]
    st = np.sqrt(1.0 - ct**2)
    nx = (st * np.cos(azimuths)[None, :]).ravel()
    ny = (st * np.sin(azimuths)[None, :]).ravel()
    nz = np.broadcast_to(ct, (n_theta, n_phi)).ravel()
    weights = (np.broadcast_to(wg[:, None], (n_theta, n_phi)).ravel()
               * (2.0 * np.pi / n_phi)) / (4.0 * np.pi)
    normals = np.stack([nx, ny, nz], axis=1)

    points = (radii[:, None, None] * normals[None, :, :]).reshape(-1, 3)
    values = ndimage.map_coordinates(coeffs, ((points - ax[0]) / dx).T,
                                     order=3, prefilter=False) ** 4
    mean_phi4 = (values.reshape(len(radii), -1) * weights[None, :]).sum(axis=1)

    x = 1.0 / radii
    deg = min(fit_degree, len(radii) - 1)
    fit = np.polynomial.polynomial.polyfit(x, mean_phi4, deg)
    # mean phi^4 = sum c_k x^k gives flux(rho) = sum (k/2) c_k x^(k-1);
    # the k=1 coefficient is the mass at infinity.
    flux_coeffs = 0.5 * np.arange(1, deg + 1) * fit[1:]
    flux = np.polynomial.polynomial.polyval(x, flux_coeffs)
    samples = [(float(r), float(m)) for r, m in zip(radii, flux)]
    return MassReport(adm_samples=samples, adm_extrapolated=float(flux_coeffs[0]))


def asymptotic_compare(m_h_series, adm: float,
                       monotone_slack: float = 1e-8,
                       tail_fraction: float = 0.1) -> dict:
    """Verdict on lim m_h(N_t) <= m_ADM from a sampled m_h series.

    The series must already be nondecreasing (up to ``monotone_slack``);
    a decreasing series signals an upstream failure and is refused.  The
    tail estimate is the median of the last ``tail_fraction`` of samples.
    """
    m_h = np.asarray(getattr(m_h_series, "m_h", m_h_series), dtype=float)
    if len(m_h) < 2:
        raise MassError("m_h series too short")
    drops = np.diff(m_h)
    if np.min(drops) < -monotone_slack:
        k = int(np.argmin(drops))
        raise MassError(f"m_h series decreases at sample {k}; "
                        "refusing the comparison")
    n_tail = max(1, int(np.ceil(tail_fraction * len(m_h))))
    tail = float(np.median(m_h[-n_tail:]))
    margin = float(adm - tail)
    return {
        "m_h_limit": tail,
        "adm": float(adm),
        "margin": margin,
        "holds": bool(margin >= -monotone_slack),
    }


def penrose_verdict(horizon_area: float | None, adm: float,
                    tolerance: float = VERDICT_TOLERANCE_DEFAULT) -> MassReport:
    """Penrose-inequality verdict m_ADM >= sqrt(area/16 pi)."""
    if horizon_area is None:
        return MassReport(adm_samples=[], adm_extrapolated=float(adm),
                          horizon_area=None, penrose_margin=float(adm),
                          equality_flag=False, tolerance=tolerance,
                          verdict=f"no horizon; PMT margin = adm = {adm:.17g} >= 0")
    if horizon_area < 0.0:
        raise MassError("horizon area must be nonnegative")
    bound = float(np.sqrt(horizon_area / (16.0 * np.pi)))
    margin = float(adm - bound)
    equal = bool(abs(margin) <= tolerance)
    if equal:
        verdict = "equality: data saturates the Penrose bound"
    elif margin > 0:
        verdict = "holds strictly"
    else:
        verdict = "VIOLATED"
    return MassReport(adm_samples=[], adm_extrapolated=float(adm),
                      horizon_area=float(horizon_area), penrose_margin=margin,
                      equality_flag=equal, tolerance=tolerance, verdict=verdict)


def blowdown_check(solution, lambda_list, n_samples: int = 256) -> dict:
    """Blowdown comparison of u against the expanding-sphere solution.

    Treats u as a function of the asymptotically flat chart coordinate (the
    grid coordinate s of the solution), forms u^lambda(y) = u(y/lambda) -
    c_lambda with c_lambda = max over the unit sphere of |u^lambda|, and
    reports the sup-distance to 2 log|y| on the annulus {1/2 <= |y| <= 2}
    per lambda.  The blowdown forgets the geometry near the initial region:
    the chart becomes exact at large radius, so the distances shrink as
    lambda decreases.  Profile slices are exactly round, so the reported
    eccentricity is 1.
    """
    lam = np.asarray(sorted(lambda_list, reverse=True), dtype=float)
    if np.any(lam <= 0.0) or np.any(lam > 1.0):
        raise MassError("lambda values must lie in (0, 1]")
    s = np.asarray(solution.s, dtype=float)
    u = np.asarray(solution.u, dtype=float)
    y = np.linspace(0.5, 2.0, n_samples)
    target = 2.0 * np.log(y)
    distances = []
    for l in lam:
        if 2.0 / l > s[-1] or 0.5 / l < s[0]:
            raise InsufficientExtent(
                f"lambda={l} needs coordinates [{0.5 / l:.3g}, {2.0 / l:.3g}], "
                f"solution covers [{s[0]:.3g}, {s[-1]:.3g}]")
        u_lam = np.interp(y / l, s, u)
        c_lam = abs(float(np.interp(1.0 / l, s, u)))
        distances.append(float(np.max(np.abs(u_lam - c_lam - target))))
    return {
        "lambdas": lam.tolist(),
        "distances": distances,
        "eccentricity": 1.0,
    }
