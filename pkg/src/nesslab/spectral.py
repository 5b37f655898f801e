"""Isotropic characteristic functions and the Fourier-space gain operator.

For a radial law the characteristic function depends only on r = |xi|, and
the sphere integral of the gain term collapses to a single integral over the
scattering cosine s:

    Q+(f, g)^(r) = 1/2 int_{-1}^{1} phi_f(r sqrt((1+s)/2)) phi_g(r sqrt((1-s)/2)) b(s) ds

Both arguments are <= r, so the gain on a grid [0, r_max] only ever reads
values inside the grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import ConfigError, DomainError, RangeError, ShapeError, TruncationError
from .kernel import AngularKernel, _check_gamma

DEFAULT_N = 2048
DEFAULT_R_MAX = 16.0
TRUNCATION_LEVEL = 1e-10
NEGATIVE_CLIP = -1e-10


@dataclass(frozen=True, eq=False)
class RadialCharFn:
    """phi(r) sampled on r_i = i * r_max / (N - 1)."""

    r_max: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 8:
            raise ShapeError("values must be a 1-D array with at least 8 nodes")
        if not np.all(np.isfinite(values)):
            raise DomainError("characteristic function has non-finite values")
        if abs(values[0] - 1.0) > 1e-12:
            raise DomainError(f"phi(0) must equal 1, got {values[0]!r}")
        if np.max(np.abs(values)) > 1.0 + 1e-9:
            raise DomainError("|phi| exceeds 1")
        values[0] = 1.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "r_max", float(self.r_max))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        return self.r_max / (self.n - 1)

    @cached_property
    def r(self) -> np.ndarray:
        return np.linspace(0.0, self.r_max, self.n)

    def same_grid(self, other: "RadialCharFn") -> bool:
        return self.n == other.n and self.r_max == other.r_max

    @cached_property
    def slopes(self) -> np.ndarray:
        return _fd_slopes(self.values, self.r_max)

    def __call__(self, r) -> np.ndarray:
        return interpolate(self, r)


def _fornberg_first(z: np.ndarray, x0: float) -> np.ndarray:
    """Weights of the first derivative at x0 from the interpolating polynomial through z."""
    m = z.size
    w = np.zeros(m)
    for j in range(m):
        others = np.delete(z, j)
        denom = np.prod(z[j] - others)
        # derivative of the j-th Lagrange basis polynomial at x0
        total = 0.0
        for k in range(m - 1):
            total += np.prod(x0 - np.delete(others, k))
        w[j] = total / denom
    return w


@lru_cache(maxsize=16)
def _slope_stencils(n: int, r_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Five-point stencils for d/dx on the nonuniform nodes x_i = r_i^2."""
    x = np.linspace(0.0, r_max, n) ** 2
    idx = np.empty((n, 5), dtype=np.intp)
    wts = np.empty((n, 5))
    for i in range(n):
        lo = min(max(i - 2, 0), n - 5)
        st = np.arange(lo, lo + 5)
        idx[i] = st
        # shift and scale for conditioning
        scale = x[st[-1]] - x[st[0]]
        wts[i] = _fornberg_first((x[st] - x[i]) / scale, 0.0) / scale
    return idx, wts


def _fd_slopes(y: np.ndarray, r_max: float) -> np.ndarray:
    """dphi/dx at the nodes, x = r^2, fourth order on the nonuniform x grid."""
    idx, wts = _slope_stencils(y.size, r_max)
    return np.sum(y[idx] * wts, axis=1)


def _hermite(phi: RadialCharFn, r: np.ndarray) -> np.ndarray:
    # phi is analytic in x = r^2, so interpolate in x: cubics in x then
    # reproduce the Taylor terms through r^6 exactly near the origin
    h = phi.h
    idx = np.minimum((r / h).astype(np.intp), phi.n - 2)
    x0 = (idx * h) ** 2
    dx = ((idx + 1) * h) ** 2 - x0
    t = (r * r - x0) / dx
    y0 = phi.values[idx]
    y1 = phi.values[idx + 1]
    d0 = phi.slopes[idx] * dx
    d1 = phi.slopes[idx + 1] * dx
    t2 = t * t
    t3 = t2 * t
    return (
        (2 * t3 - 3 * t2 + 1) * y0
        + (t3 - 2 * t2 + t) * d0
        + (-2 * t3 + 3 * t2) * y1
        + (t3 - t2) * d1
    )


def interpolate(phi: RadialCharFn, r):
    """Cubic Hermite interpolation of phi at radius (or radii) r in [0, r_max].

    The interpolant is cubic in r^2 on each cell, with finite-difference
    slopes; it is exact at the nodes.
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > phi.r_max) or not np.all(np.isfinite(arr)):
        raise RangeError(f"radius outside [0, {phi.r_max}]")
    out = _hermite(phi, arr)
    out = np.where(arr == 0.0, 1.0, out)
    return float(out) if np.ndim(r) == 0 else out


def _grid(n: int, r_max: float) -> np.ndarray:
    if n < 8 or r_max <= 0:
        raise ConfigError("grid needs n >= 8 and r_max > 0")
    return np.linspace(0.0, r_max, n)


def charfn_maxwellian(T: float, n: int = DEFAULT_N, r_max: float = DEFAULT_R_MAX) -> RadialCharFn:
    if not T > 0:
        raise DomainError(f"temperature must be positive, got {T}")
    r = _grid(n, r_max)
    return RadialCharFn(r_max, np.exp(-0.5 * T * r * r))


def charfn_mixture(weights, temps, n: int = DEFAULT_N, r_max: float = DEFAULT_R_MAX) -> RadialCharFn:
    """Characteristic function of sum_i w_i M_{T_i}."""
    w = np.asarray(weights, dtype=float)
    T = np.asarray(temps, dtype=float)
    if w.ndim != 1 or w.shape != T.shape or w.size == 0:
        raise ConfigError("weights and temps must be nonempty lists of equal length", "reservoir")
    if np.any(w <= 0) or np.any(T <= 0):
        raise ConfigError("weights and temperatures must be positive", "reservoir")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ConfigError(f"weights sum to {w.sum()!r}, not 1", "reservoir.weights")
    r = _grid(n, r_max)
    vals = np.exp(-0.5 * np.outer(r * r, T)) @ w
    vals[0] = 1.0
    return RadialCharFn(r_max, vals)


def _check_pair(a: RadialCharFn, b: RadialCharFn):
    if not a.same_grid(b):
        raise ShapeError(f"grid mismatch: ({a.n}, {a.r_max}) vs ({b.n}, {b.r_max})")


@lru_cache(maxsize=32)
def _hermite_operator(n: int, r_max: float, radii_bytes: bytes):
    """Sparse P with P @ values equal to the Hermite interpolant at the given radii."""
    from scipy import sparse

    radii = np.frombuffer(radii_bytes, dtype=float)
    h = r_max / (n - 1)
    idx = np.minimum((radii / h).astype(np.intp), n - 2)
    x0 = (idx * h) ** 2
    dx = ((idx + 1) * h) ** 2 - x0
    t = (radii * radii - x0) / dx
    t2 = t * t
    t3 = t2 * t
    h10 = (t3 - 2 * t2 + t) * dx
    h11 = (t3 - t2) * dx
    st_idx, st_w = _slope_stencils(n, r_max)
    rows = np.arange(radii.size)
    parts_r = [rows, rows]
    parts_c = [idx, idx + 1]
    parts_v = [2 * t3 - 3 * t2 + 1, -2 * t3 + 3 * t2]
    for coef, node in ((h10, idx), (h11, idx + 1)):
        for j in range(5):
            parts_r.append(rows)
            parts_c.append(st_idx[node, j])
            parts_v.append(coef * st_w[node, j])
    mat = sparse.csr_matrix(
        (np.concatenate(parts_v), (np.concatenate(parts_r), np.concatenate(parts_c))),
        shape=(radii.size, n),
    )
    mat.sum_duplicates()
    return mat


@lru_cache(maxsize=16)
def _gain_operators(n: int, r_max: float, nodes_bytes: bytes):
    nodes = np.frombuffer(nodes_bytes, dtype=float)
    r = np.linspace(0.0, r_max, n)
    rp = np.minimum(np.outer(r, np.sqrt(0.5 * (1.0 + nodes))), r_max)
    rm = np.minimum(np.outer(r, np.sqrt(0.5 * (1.0 - nodes))), r_max)
    return (
        _hermite_operator(n, r_max, rp.ravel().tobytes()),
        _hermite_operator(n, r_max, rm.ravel().tobytes()),
    )


def _split_values(phi: RadialCharFn, k: AngularKernel):
    """Maps values -> phi(r sqrt((1+s)/2)) and phi(r sqrt((1-s)/2)), shaped (N, nodes)."""
    nodes = np.ascontiguousarray(k.nodes, dtype=float)
    plus, minus = _gain_operators(phi.n, phi.r_max, nodes.tobytes())
    shape = (phi.n, nodes.size)
    return (
        lambda v: (plus @ v).reshape(shape),
        lambda v: (minus @ v).reshape(shape),
        0.5 * k.weights * k.b_nodes,
    )


def gain(phi_f: RadialCharFn, phi_g: RadialCharFn, k: AngularKernel) -> RadialCharFn:
    """Fourier transform of the gain term Q+(f, g) for radial f and g."""
    _check_pair(phi_f, phi_g)
    at_plus, at_minus, wb = _split_values(phi_f, k)
    vals = (at_plus(phi_f.values) * at_minus(phi_g.values)) @ wb
    vals[0] = 1.0
    return RadialCharFn(phi_f.r_max, vals)


def phi_map(phi_f: RadialCharFn, phi_R: RadialCharFn, k: AngularKernel, gamma: float) -> RadialCharFn:
    """(1 - gamma) Q+(f, f) + gamma Q+(f, R), evaluated in one sweep."""
    gamma = _check_gamma(gamma)
    _check_pair(phi_f, phi_R)
    at_plus, at_minus, wb = _split_values(phi_f, k)
    # the second slot is linear, so interpolate the blended partner once
    partner = at_minus((1.0 - gamma) * phi_f.values + gamma * phi_R.values)
    vals = (at_plus(phi_f.values) * partner) @ wb
    vals[0] = 1.0
    return RadialCharFn(phi_f.r_max, vals)


@dataclass(frozen=True, eq=False)
class RadialDensity:
    """Isotropic density f(|v|) on v_j = j * v_max / (M - 1)."""

    v_max: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 8:
            raise ShapeError("density needs a 1-D array with at least 8 nodes")
        if np.any(values < NEGATIVE_CLIP):
            raise DomainError("density is negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "v_max", float(self.v_max))

    @cached_property
    def v(self) -> np.ndarray:
        return np.linspace(0.0, self.v_max, self.values.size)

    def radial_integral(self, g) -> float:
        """4 pi int g(v) v^2 dv by the trapezoid rule (g sampled on the grid)."""
        return float(4.0 * np.pi * np.trapezoid(g * self.v**2, self.v))

    def mass(self) -> float:
        return self.radial_integral(self.values)

    def moment(self, p: int) -> float:
        return self.radial_integral(self.values * self.v**p)

    def at(self, v) -> np.ndarray:
        """Cubic spline evaluation off the grid; zero beyond v_max."""
        from scipy.interpolate import CubicSpline

        spline = self.__dict__.get("_spline")
        if spline is None:
            spline = CubicSpline(self.v, self.values, bc_type=((1, 0.0), "not-a-knot"))
            self.__dict__["_spline"] = spline
        v = np.asarray(v, dtype=float)
        out = np.where(v <= self.v_max, spline(np.minimum(v, self.v_max)), 0.0)
        return np.maximum(out, 0.0)


def maxwellian_density(v, T: float):
    v = np.asarray(v, dtype=float)
    return (2.0 * np.pi * T) ** -1.5 * np.exp(-0.5 * v * v / T)


def density_mixture(weights, temps, v_max: float, m: int = 1024) -> RadialDensity:
    v = np.linspace(0.0, v_max, m)
    vals = sum(w * maxwellian_density(v, T) for w, T in zip(weights, temps))
    return RadialDensity(v_max, vals)


def density_maxwellian(T: float, v_max: float, m: int = 1024) -> RadialDensity:
    return density_mixture([1.0], [T], v_max, m)


def inverse_transform(phi: RadialCharFn, v_max: float, m: int = 1024, renormalize: bool = True) -> RadialDensity:
    """Radial Fourier inversion f(v) = (1 / 2 pi^2 v) int_0^inf r phi(r) sin(r v) dr.

    Uses the trapezoid rule on the phi grid; the integrand is even in r so the
    rule is spectrally accurate once phi has decayed at r_max.
    """
    tail = np.max(np.abs(phi.values[-8:]))
    if tail > TRUNCATION_LEVEL:
        raise TruncationError(f"|phi| = {tail:.3e} near r_max = {phi.r_max}; enlarge r_max")
    if v_max <= 0 or m < 8:
        raise ConfigError("inverse transform needs v_max > 0 and m >= 8")
    r = phi.r
    w = np.full(r.size, phi.h)
    w[0] = w[-1] = 0.5 * phi.h
    v = np.linspace(0.0, v_max, m)
    rv = np.outer(v, r)
    # sin(rv)/v written as r * sinc to handle v = 0
    kern = r * np.sinc(rv / np.pi)
    vals = (kern * r) @ (w * phi.values) / (2.0 * np.pi**2)
    vals = np.where(vals < 0.0, 0.0, vals)
    dens = RadialDensity(v_max, vals)
    mass = dens.mass()
    if abs(mass - 1.0) > 1e-6:
        raise TruncationError(f"recovered mass {mass:.9f}; enlarge v_max or refine the grid")
    if renormalize:
        dens = RadialDensity(v_max, vals / mass)
    return dens
