"""Distances between velocity laws and moment read-out from characteristic functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IllConditionedFitError, MetricDomainError
from .spectral import RadialCharFn, RadialDensity, _check_pair

MOMENT_FIT_RADIUS = 0.5
MOMENT_FIT_TERMS = 6  # r^2 .. r^12
MOMENT_FIT_RESIDUAL = 1e-6
GTW_MOMENT_TOL = 1e-4


@dataclass(frozen=True)
class MomentSummary:
    m2: float
    m4: float
    residual: float = 0.0


def moments(phi: RadialCharFn, fit_radius: float = MOMENT_FIT_RADIUS, terms: int = MOMENT_FIT_TERMS) -> MomentSummary:
    """Second and fourth moments from the Taylor expansion of phi at the origin.

    phi(r) = 1 - m2 r^2 / 6 + m4 r^4 / 120 - ..., fitted by least squares to
    the nodes with 0 < r < fit_radius. Higher even powers are included in the
    fit to absorb the truncation bias; only the first two coefficients are
    reported.
    """
    r = phi.r
    mask = (r > 0.0) & (r < fit_radius)
    if mask.sum() < terms + 2:
        raise IllConditionedFitError("too few nodes inside the moment fit radius")
    x = r[mask] ** 2
    y = phi.values[mask] - 1.0
    # scale columns by powers of the fit radius to keep the normal matrix tame
    x0 = fit_radius**2
    cols = np.stack([(x / x0) ** (p + 1) for p in range(terms)], axis=1)
    coef, *_ = np.linalg.lstsq(cols, y, rcond=None)
    resid = float(np.max(np.abs(cols @ coef - y))) if y.size else 0.0
    if resid > MOMENT_FIT_RESIDUAL:
        raise IllConditionedFitError(f"moment fit residual {resid:.3e} exceeds {MOMENT_FIT_RESIDUAL}")
    c2 = coef[0] / x0
    c4 = coef[1] / x0**2
    return MomentSummary(m2=float(-6.0 * c2), m4=float(120.0 * c4), residual=resid)


def gtw_distance(phi_f: RadialCharFn, phi_g: RadialCharFn, check_moments: bool = True) -> float:
    """Grid value of sup_{r>0} |phi_f - phi_g| / r^2.

    Only grid nodes are inspected, so this is a lower bound for the true
    supremum. Laws with different energies have no finite distance; that case
    raises :class:`MetricDomainError` unless ``check_moments`` is off.
    """
    _check_pair(phi_f, phi_g)
    if check_moments:
        m_f = moments(phi_f).m2
        m_g = moments(phi_g).m2
        if abs(m_f - m_g) > GTW_MOMENT_TOL:
            raise MetricDomainError(f"second moments differ: {m_f:.8f} vs {m_g:.8f}")
    r = phi_f.r[1:]
    diff = np.abs(phi_f.values[1:] - phi_g.values[1:])
    return float(np.max(diff / (r * r)))


def _as_speeds(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 2 and a.shape[1] == 3:
        a = np.linalg.norm(a, axis=1)
    elif a.ndim != 1:
        raise DomainError("expected a 1-D speed sample or an (N, 3) velocity array")
    if a.size == 0:
        raise DomainError("empty sample")
    return np.sort(a)


def _density_quantiles(f: RadialDensity, u: np.ndarray) -> np.ndarray:
    v = f.v
    g = 4.0 * np.pi * f.values * v * v
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(v))))
    cdf /= cdf[-1]
    # flat stretches of the CDF give repeated values; keep the first occurrence
    keep = np.concatenate(([True], np.diff(cdf) > 0))
    return np.interp(u, cdf[keep], v[keep])


def radial_w2(x, y, quantile_points: int = 200_000) -> float:
    """W2 between two isotropic laws on R^3 via the monotone coupling of speeds.

    Each argument is a speed sample, an (N, 3) velocity sample, or a
    :class:`RadialDensity`.
    """
    dens_x = isinstance(x, RadialDensity)
    dens_y = isinstance(y, RadialDensity)
    if not dens_x and not dens_y:
        a, b = _as_speeds(x), _as_speeds(y)
        if a.size == b.size:
            return float(np.sqrt(np.mean((a - b) ** 2)))
        # exact for unequal sizes: integrate over the merged quantile breakpoints
        cuts = np.union1d(np.arange(a.size + 1) / a.size, np.arange(b.size + 1) / b.size)
        mid = 0.5 * (cuts[1:] + cuts[:-1])
        qa = a[np.minimum((mid * a.size).astype(np.intp), a.size - 1)]
        qb = b[np.minimum((mid * b.size).astype(np.intp), b.size - 1)]
        return float(np.sqrt(np.sum(np.diff(cuts) * (qa - qb) ** 2)))
    if dens_x and dens_y:
        u = (np.arange(quantile_points) + 0.5) / quantile_points
        qa, qb = _density_quantiles(x, u), _density_quantiles(y, u)
        return float(np.sqrt(np.mean((qa - qb) ** 2)))
    sample, dens = (y, x) if dens_x else (x, y)
    a = _as_speeds(sample)
    u = (np.arange(a.size) + 0.5) / a.size
    return float(np.sqrt(np.mean((a - _density_quantiles(dens, u)) ** 2)))
