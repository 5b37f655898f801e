"""Steady state of the reservoir-coupled Boltzmann equation by contraction mapping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractionViolationError, DomainError
from .kernel import AngularKernel, contraction_factor
from .metrics import gtw_distance, moments
from .spectral import RadialCharFn, phi_map

RATIO_SLACK = 1e-6
VIOLATION_SLACK = 1e-4


def a_priori_bound(lam: float, d1: float, n: int) -> float:
    """Geometric error bound lam^n / (1 - lam) * d1 after n iterations."""
    if not 0.0 < lam < 1.0:
        raise DomainError(f"contraction factor must lie in (0, 1), got {lam}")
    if d1 < 0:
        raise DomainError("d1 must be nonnegative")
    return lam**n * d1 / (1.0 - lam)


def ratio_floor(phi: RadialCharFn) -> float:
    """Distances below this are dominated by rounding in the GTW quotient.

    Ten ulps of phi divided by the square of the first positive node.
    """
    return 10.0 * np.finfo(float).eps / phi.h**2


def iterations_needed(lam: float, d1: float, tol: float) -> int:
    if d1 <= 0.0:
        return 1
    return max(1, math.ceil(math.log(tol * (1.0 - lam) / d1) / math.log(lam)))


@dataclass
class FixedPointReport:
    phi_inf: RadialCharFn
    iterations: int
    history: list[float]
    lambda_used: float
    certified_error: float
    converged: bool = True
    m2_history: list[float] = field(default_factory=list)
    residual: float = float("nan")
    floor: float = 0.0

    @property
    def ratios(self) -> list[float]:
        """Successive-distance ratios while the distance is above the rounding floor."""
        h = self.history
        return [h[i + 1] / h[i] for i in range(len(h) - 1) if h[i] > self.floor]

    def summary(self) -> dict:
        m = moments(self.phi_inf)
        return {
            "iterations": self.iterations,
            "lambda": self.lambda_used,
            "history": list(self.history),
            "certified_error": self.certified_error,
            "converged": self.converged,
            "fixed_point_residual": self.residual,
            "m2": m.m2,
            "m4": m.m4,
        }


def solve_ness(
    phi_R: RadialCharFn,
    k: AngularKernel,
    gamma: float,
    tol: float = 1e-8,
    max_iter: int = 500,
    start: RadialCharFn | None = None,
) -> FixedPointReport:
    """Iterate f_n = Phi(f_{n-1}) from f_0 = R (or ``start``) until the bound certifies ``tol``.

    Every successive-distance ratio above the rounding floor is checked
    against the contraction factor; a ratio exceeding it by more than 1e-4
    means the discretisation is broken and raises.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    lam = contraction_factor(k, gamma)
    m2_R = moments(phi_R).m2
    if abs(m2_R - 1.0) > 1e-6:
        raise DomainError(f"reservoir law must have unit energy, got {m2_R:.9f}")

    if start is not None and abs(moments(start).m2 - 1.0) > 1e-6:
        raise DomainError("start must carry the reservoir energy for the GTW distance to apply")
    floor = ratio_floor(phi_R)
    current = phi_R if start is None else start
    history: list[float] = []
    m2_history = [moments(current).m2]
    d1 = None
    n = 0
    certified = math.inf
    while n < max_iter:
        nxt = phi_map(current, phi_R, k, gamma)
        n += 1
        d = gtw_distance(nxt, current, check_moments=False)
        history.append(d)
        m2_history.append(moments(nxt).m2)
        if d1 is None:
            d1 = d
        if len(history) >= 2 and history[-2] > floor:
            ratio = history[-1] / history[-2]
            if ratio > lam + VIOLATION_SLACK:
                raise ContractionViolationError(
                    f"iteration {n}: ratio {ratio:.6f} exceeds contraction factor {lam:.6f}"
                )
        current = nxt
        certified = a_priori_bound(lam, d1, n)
        if certified <= tol:
            break
    residual = gtw_distance(phi_map(current, phi_R, k, gamma), current, check_moments=False)
    return FixedPointReport(
        phi_inf=current,
        iterations=n,
        history=history,
        lambda_used=lam,
        certified_error=certified,
        converged=certified <= tol,
        m2_history=m2_history,
        residual=residual,
        floor=floor,
    )
