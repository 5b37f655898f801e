"""Angular collision kernels b(s) under Grad's cutoff and the rates derived from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, InvalidKernelError

DEFAULT_NODES = 64
CDF_TABLE_SIZE = 4096


@dataclass(frozen=True)
class AngularKernel:
    """Scattering kernel b on [-1, 1] with cached Gauss-Legendre nodes.

    ``b`` is normalised so that ``0.5 * integral(b) == 1``; the uniform
    probability measure on the sphere then carries total mass one.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    nodes: np.ndarray
    weights: np.ndarray
    is_even: bool
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        bvals = self.b(self.nodes)
        if np.any(bvals < 0):
            raise InvalidKernelError("b(s) must be nonnegative at every quadrature node")
        norm = 0.5 * np.dot(self.weights, bvals)
        if abs(norm - 1.0) > 1e-10:
            raise InvalidKernelError(f"kernel not normalised: 0.5*int b = {norm!r}")
        if self.is_even and abs(self.first_moment()) > 1e-10:
            raise InvalidKernelError("kernel flagged even but 0.5*int s b(s) ds != 0")
        # inverse-CDF table for sampling cosines from density b(s)/2
        grid = np.linspace(-1.0, 1.0, CDF_TABLE_SIZE)
        dens = 0.5 * self.b(grid)
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))))
        cdf /= cdf[-1]
        object.__setattr__(self, "_cdf_grid", grid)
        object.__setattr__(self, "_cdf", cdf)

    def b(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(np.asarray(self.evaluator(s), dtype=float), s.shape).copy()

    @property
    def b_nodes(self) -> np.ndarray:
        return self.b(self.nodes)

    def first_moment(self) -> float:
        """Return 0.5 * int s b(s) ds."""
        return float(0.5 * np.dot(self.weights, self.nodes * self.b(self.nodes)))

    def to_config(self) -> dict:
        return {"kind": self.name, **self.params}


def make_kernel(kind: str = "isotropic", node_count: int = DEFAULT_NODES, a: float | None = None) -> AngularKernel:
    """Build one of the shipped kernel families.

    ``isotropic`` is b = 1, ``linear`` is b(s) = 1 + a*s with |a| <= 1.
    """
    if node_count < 16:
        raise DomainError(f"node_count must be >= 16, got {node_count}")
    nodes, weights = np.polynomial.legendre.leggauss(node_count)
    if kind == "isotropic":
        return AngularKernel(lambda s: np.ones_like(s), nodes, weights, True, "isotropic", {})
    if kind == "linear":
        if a is None:
            raise InvalidKernelError("linear kernel requires parameter a")
        a = float(a)
        if not np.isfinite(a) or abs(a) > 1.0:
            raise InvalidKernelError(f"linear kernel needs |a| <= 1 so that b >= 0, got a={a}")
        return AngularKernel(lambda s: 1.0 + a * s, nodes, weights, a == 0.0, "linear", {"a": a})
    raise InvalidKernelError(f"unknown kernel kind {kind!r}")


def kernel_from_config(spec: dict, node_count: int = DEFAULT_NODES) -> AngularKernel:
    spec = dict(spec)
    kind = spec.pop("kind", "isotropic")
    a = spec.pop("a", None)
    if spec:
        raise InvalidKernelError(f"unknown kernel keys {sorted(spec)}")
    return make_kernel(kind, node_count, a=a)


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    return gamma


def contraction_factor(k: AngularKernel, gamma: float) -> float:
    """GTW contraction factor of the fixed-point map: (1-g) + g * 1/4 int (1+s) b."""
    gamma = _check_gamma(gamma)
    if k.is_even:
        return 1.0 - gamma / 2.0
    quarter = 0.25 * float(np.dot(k.weights, (1.0 + k.nodes) * k.b_nodes))
    return (1.0 - gamma) + gamma * quarter


def gtw_decay_rate(k: AngularKernel, gamma: float) -> float:
    return 1.0 - contraction_factor(k, gamma)


def moment_decay_rate(k: AngularKernel, gamma: float) -> float:
    """Relaxation rate of momentum and of the energy gap under reservoir collisions.

    Equal to (gamma/2) * (1 - 0.5 int s b(s) ds). Note this carries the
    factor gamma; the gamma-free quantity is returned by
    :func:`lambda0_as_printed` for reporting only.
    """
    gamma = _check_gamma(gamma)
    return 0.5 * gamma * (1.0 - k.first_moment())


def lambda0_as_printed(k: AngularKernel) -> float:
    """0.5 * (1 - 0.5 int s b), without the gamma factor."""
    return 0.5 * (1.0 - k.first_moment())


def sample_cosine(k: AngularKernel, rng: np.random.Generator, size=None):
    """Draw scattering cosines with density b(s)/2 by tabulated inverse CDF."""
    u = rng.random(size)
    s = np.interp(u, k._cdf, k._cdf_grid)
    return np.clip(s, -1.0, 1.0)
