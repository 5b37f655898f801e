"""Entropy production for a gas coupled to thermalizing jump reservoirs.

Reservoir alpha replaces a particle's velocity by a fresh draw from its
Maxwellian at rate eta_alpha, i.e. K_alpha(v, v') = eta_alpha M_alpha(v).
This kernel satisfies detailed balance with respect to M_alpha, makes the
energy flux closed-form, and gives the steady-state map

    phi -> (Q+(phi, phi) + sum_alpha eta_alpha M_alpha^) / (1 + eta),

a 1/(1 + eta) contraction in the GTW distance.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .kernel import AngularKernel
from .metrics import gtw_distance, moments
from .spectral import (
    DEFAULT_N,
    DEFAULT_R_MAX,
    RadialCharFn,
    RadialDensity,
    charfn_maxwellian,
    gain,
    maxwellian_density,
)
from .steady import FixedPointReport, a_priori_bound, ratio_floor

DENSITY_FLOOR = 1e-300
QUAD_NODES = 256


@dataclass(frozen=True)
class JumpReservoir:
    eta: float
    T: float

    def __post_init__(self):
        if not (self.eta > 0 and self.T > 0):
            raise DomainError("reservoir needs eta > 0 and T > 0")

    @property
    def beta(self) -> float:
        return 1.0 / self.T

    def kernel(self, v, v_prime):
        """Jump rate density from v' to v; independent of v'."""
        return self.eta * maxwellian_density(v, self.T) * np.ones_like(np.asarray(v_prime, dtype=float))


def effective_temperature(reservoirs) -> float:
    eta = sum(r.eta for r in reservoirs)
    return sum(r.eta * r.T for r in reservoirs) / eta


def _source(reservoirs, n: int, r_max: float) -> tuple[np.ndarray, float]:
    eta = sum(r.eta for r in reservoirs)
    src = sum(r.eta * charfn_maxwellian(r.T, n, r_max).values for r in reservoirs)
    return src, eta


def thermal_map(phi: RadialCharFn, k: AngularKernel, reservoirs) -> RadialCharFn:
    src, eta = _source(reservoirs, phi.n, phi.r_max)
    vals = (gain(phi, phi, k).values + src) / (1.0 + eta)
    return RadialCharFn(phi.r_max, vals)


def bgk_ness(
    k: AngularKernel,
    reservoirs,
    tol: float = 1e-10,
    max_iter: int = 500,
    n: int = DEFAULT_N,
    r_max: float = DEFAULT_R_MAX,
) -> FixedPointReport:
    """Steady state of the thermalizing-reservoir model by fixed-point iteration.

    Starts from the Maxwellian at the flux-weighted temperature, which already
    carries the steady energy, so every iterate stays in one GTW class.
    """
    reservoirs = list(reservoirs)
    if not reservoirs:
        raise DomainError("at least one reservoir is required")
    eta = sum(r.eta for r in reservoirs)
    q = 1.0 / (1.0 + eta)
    current = charfn_maxwellian(effective_temperature(reservoirs), n, r_max)
    floor = ratio_floor(current)
    history: list[float] = []
    m2_history = [moments(current).m2]
    certified = math.inf
    it = 0
    while it < max_iter:
        nxt = thermal_map(current, k, reservoirs)
        it += 1
        history.append(gtw_distance(nxt, current, check_moments=False))
        m2_history.append(moments(nxt).m2)
        current = nxt
        certified = a_priori_bound(q, history[0], it)
        if certified <= tol:
            break
    residual = gtw_distance(thermal_map(current, k, reservoirs), current, check_moments=False)
    return FixedPointReport(
        phi_inf=current,
        iterations=it,
        history=history,
        lambda_used=q,
        certified_error=certified,
        converged=certified <= tol,
        m2_history=m2_history,
        residual=residual,
        floor=floor,
    )


def thermal_step(phi: RadialCharFn, k: AngularKernel, reservoirs, dt: float) -> RadialCharFn:
    """Exponential Euler step; the total loss rate of the thermalizing model is 1 + eta."""
    if dt <= 0:
        raise DomainError("dt must be positive")
    eta = sum(r.eta for r in reservoirs)
    e = math.exp(-(1.0 + eta) * dt)
    target = thermal_map(phi, k, reservoirs)
    return RadialCharFn(phi.r_max, e * phi.values + (1.0 - e) * target.values)


def thermal_run(phi0: RadialCharFn, k: AngularKernel, reservoirs, dt: float, t_end: float,
                record_every: int = 1) -> list[tuple[float, RadialCharFn]]:
    out = [(0.0, phi0)]
    phi = phi0
    n_steps = int(round(t_end / dt))
    for n in range(1, n_steps + 1):
        phi = thermal_step(phi, k, reservoirs, dt)
        if n % record_every == 0 or n == n_steps:
            out.append((n * dt, phi))
    return out


# ---------------------------------------------------------------------------
# entropy functionals


def _check_normalized(f: RadialDensity, tol: float = 1e-4) -> None:
    mass = f.mass()
    if abs(mass - 1.0) > tol:
        raise DomainError(f"density not normalised (mass {mass:.8f})")


def _xlogx(f: np.ndarray) -> np.ndarray:
    return np.where(f < DENSITY_FLOOR, 0.0, f * np.log(np.maximum(f, DENSITY_FLOOR)))


def boltzmann_entropy(f: RadialDensity) -> float:
    """S = -int f log f dv for an isotropic density."""
    _check_normalized(f)
    return -f.radial_integral(_xlogx(f.values))


def relative_entropy(f: RadialDensity, T: float) -> float:
    """int f log(f / M_T) dv."""
    _check_normalized(f)
    log_m = -1.5 * math.log(2.0 * math.pi * T) - 0.5 * f.v**2 / T
    return f.radial_integral(_xlogx(f.values) - f.values * log_m)


def _speed_quadrature(v_max: float, nodes: int = QUAD_NODES):
    x, w = np.polynomial.legendre.leggauss(nodes)
    v = 0.5 * v_max * (x + 1.0)
    # radial measure: dv in R^3 -> 4 pi v^2 dv
    return v, 0.5 * v_max * w * 4.0 * np.pi * v * v


def _positive_values(f: RadialDensity, v: np.ndarray) -> np.ndarray:
    """f at off-grid speeds, interpolated in log space so tails stay positive.

    The monotone interpolant cannot overshoot where a clipped tail drops to
    the floor.
    """
    from scipy.interpolate import PchipInterpolator

    logf = np.log(np.maximum(f.values, DENSITY_FLOOR))
    out = np.exp(PchipInterpolator(f.v, logf)(np.minimum(v, f.v_max)))
    return np.where(v <= f.v_max, out, DENSITY_FLOOR)


def _quad_v_max(f: RadialDensity, res: JumpReservoir) -> float:
    return max(8.0 * math.sqrt(res.T), f.v_max)


def sigma_alpha(f: RadialDensity, res: JumpReservoir, nodes: int = QUAD_NODES, swap: bool = False) -> float:
    """Entropy production of reservoir alpha by tensor Gauss-Legendre quadrature.

    1/2 eta int int M(v) M(v') [nu(v) - nu(v')] log(nu(v)/nu(v')) dv dv',
    with nu = f / M. ``swap`` transposes the integration order (a symmetry check).
    """
    v, w = _speed_quadrature(_quad_v_max(f, res), nodes)
    fv = np.maximum(_positive_values(f, v), DENSITY_FLOOR)
    m = maxwellian_density(v, res.T)
    log_nu = np.log(fv) - np.log(np.maximum(m, DENSITY_FLOOR))
    nu = fv / np.maximum(m, DENSITY_FLOOR)
    a = (m * w)[:, None] * (m * w)[None, :]
    integrand = a * (nu[:, None] - nu[None, :]) * (log_nu[:, None] - log_nu[None, :])
    if swap:
        integrand = integrand.T
    return float(0.5 * res.eta * integrand.sum())


def sigma_alpha_closed(f: RadialDensity, res: JumpReservoir) -> float:
    """Same quantity via eta * [H(f|M) + H(M|f)], a one-dimensional quadrature."""
    v, w = _speed_quadrature(_quad_v_max(f, res))
    fv = np.maximum(_positive_values(f, v), DENSITY_FLOOR)
    m = maxwellian_density(v, res.T)
    log_ratio = np.log(fv) - np.log(np.maximum(m, DENSITY_FLOOR))
    return float(res.eta * np.sum(w * (fv - m) * log_ratio))


def flux_alpha(f, res: JumpReservoir) -> float:
    """Energy flux into reservoir alpha, 1/2 eta (<|v|^2>_f - 3 T_alpha).

    ``f`` may be a RadialDensity, a MomentSummary, or a bare second moment.
    """
    if isinstance(f, RadialDensity):
        m2 = f.moment(2) / f.mass()
    elif hasattr(f, "m2"):
        m2 = f.m2
    else:
        m2 = float(f)
    return 0.5 * res.eta * (m2 - 3.0 * res.T)


def flux_alpha_quadrature(f: RadialDensity, res: JumpReservoir, nodes: int = QUAD_NODES) -> float:
    """1/2 int int K(v, v') f(v') [v'^2 - v^2] dv dv' by tensor quadrature."""
    v, w = _speed_quadrature(_quad_v_max(f, res), nodes)
    fv = _positive_values(f, v)
    K = res.kernel(v[:, None], v[None, :])
    weight = (w[:, None] * w[None, :]) * K * fv[None, :]
    return float(0.5 * np.sum(weight * (v[None, :] ** 2 - v[:, None] ** 2)))


@dataclass
class EntropyLedger:
    S: float
    S_dot: float
    sigma_alpha: list[float]
    J_alpha: list[float]
    sigma_R: float
    sigma_total: float
    sigma_B_residual: float

    def to_dict(self) -> dict:
        return asdict(self)


def ledger(f_now: RadialDensity, f_prev: RadialDensity, dt: float, reservoirs) -> EntropyLedger:
    """Entropy balance between two consecutive snapshots.

    S_dot is the difference quotient of the entropy, centred at the midpoint;
    fluxes and reservoir terms are evaluated at the midpoint density so all
    rates refer to the same instant. The collision term is the residual of
    the balance.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    reservoirs = list(reservoirs)
    if f_now.values.shape != f_prev.values.shape or f_now.v_max != f_prev.v_max:
        raise DomainError("snapshots must share a speed grid")
    mid = RadialDensity(f_now.v_max, 0.5 * (f_now.values + f_prev.values))
    S_now = boltzmann_entropy(f_now)
    S_dot = (S_now - boltzmann_entropy(f_prev)) / dt
    J = [flux_alpha(mid, r) for r in reservoirs]
    sig = [sigma_alpha(mid, r) for r in reservoirs]
    sigma_R = float(sum(r.beta * j for r, j in zip(reservoirs, J)))
    total = S_dot + sigma_R
    return EntropyLedger(
        S=S_now,
        S_dot=S_dot,
        sigma_alpha=sig,
        J_alpha=J,
        sigma_R=sigma_R,
        sigma_total=total,
        sigma_B_residual=total - sum(sig),
    )
