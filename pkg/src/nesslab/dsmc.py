"""Particle Monte Carlo for the reservoir-coupled and OU-thermostatted equations.

Each particle undergoes collision events at total rate one. In the mixture
model an event is, with probability 1 - gamma, a binary collision with
another system particle and, with probability gamma, a collision with a
fresh partner drawn from the reservoir law R (the partner is discarded).
Binary collisions update both particles and conserve momentum and energy
exactly up to rounding.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .kernel import AngularKernel, make_kernel, kernel_from_config, sample_cosine

UNIT_TOL = 1e-12


@dataclass
class ParticleEnsemble:
    velocities: np.ndarray
    rng: np.random.Generator
    time: float = 0.0

    def __post_init__(self):
        self.velocities = np.array(self.velocities, dtype=float)
        if self.velocities.ndim != 2 or self.velocities.shape[1] != 3 or self.velocities.shape[0] < 2:
            raise DomainError("velocities must be an (N, 3) array with N >= 2")
        if not np.all(np.isfinite(self.velocities)):
            raise DomainError("non-finite velocity")

    @property
    def n(self) -> int:
        return self.velocities.shape[0]

    def speeds(self) -> np.ndarray:
        return np.linalg.norm(self.velocities, axis=1)

    def observables(self) -> tuple[np.ndarray, float, float]:
        v2 = np.einsum("ij,ij->i", self.velocities, self.velocities)
        return self.velocities.mean(axis=0), float(v2.mean()), float((v2 * v2).mean())


@dataclass(frozen=True)
class MixtureCollision:
    """Collisions with a background law R = sum_i w_i M_{T_i} at weight gamma."""

    weights: tuple[float, ...]
    temps: tuple[float, ...]
    gamma: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        T = np.asarray(self.temps, dtype=float)
        if w.size == 0 or w.shape != T.shape:
            raise ConfigError("weights and temps must be nonempty and of equal length", "reservoir")
        if np.any(w <= 0) or np.any(T <= 0):
            raise ConfigError("weights and temperatures must be positive", "reservoir")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ConfigError("weights must sum to 1", "reservoir.weights")
        # gamma = 1 is admitted here for the reservoir-only equilibrium check
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]", "gamma")

    @property
    def energy(self) -> float:
        return float(3.0 * np.dot(self.weights, self.temps))


@dataclass(frozen=True)
class OUReservoirs:
    """Diffusive reservoirs given as (eta_alpha, T_alpha) pairs."""

    pairs: tuple[tuple[float, float], ...]
    collisions: bool = True

    def __post_init__(self):
        reduce_ou_reservoirs(self.pairs)

    @property
    def effective(self) -> tuple[float, float]:
        return reduce_ou_reservoirs(self.pairs)


def reduce_ou_reservoirs(pairs) -> tuple[float, float]:
    """Collapse several OU reservoirs into one: eta = sum eta_a, T = sum eta_a T_a / eta."""
    pairs = list(pairs)
    if not pairs:
        raise ConfigError("at least one reservoir is required", "reservoir.pairs")
    for eta, T in pairs:
        if not (eta > 0 and T > 0):
            raise ConfigError("eta and T must be positive", "reservoir.pairs")
    eta = float(sum(e for e, _ in pairs))
    T = float(sum(e * t for e, t in pairs) / eta)
    return eta, T


def post_collision(v, v_star, sigma):
    """Post-collision velocities v' = (v + v* + |v - v*| sigma) / 2 and its partner.

    Works on single 3-vectors or on (n, 3) stacks.
    """
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    norms = np.linalg.norm(sigma, axis=-1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise DomainError("sigma must be a unit vector")
    center = 0.5 * (v + v_star)
    half = 0.5 * np.linalg.norm(v - v_star, axis=-1)[..., None] * sigma
    return center + half, center - half


def _scatter_directions(rel: np.ndarray, cosines: np.ndarray, azimuth: np.ndarray) -> np.ndarray:
    """Unit vectors at cosine s to rel/|rel| with the given azimuth."""
    g = np.linalg.norm(rel, axis=1)
    axis = np.zeros_like(rel)
    ok = g > 0
    axis[ok] = rel[ok] / g[ok, None]
    axis[~ok] = (1.0, 0.0, 0.0)  # coincident velocities: the direction is irrelevant
    # helper vector least aligned with the axis
    helper = np.zeros_like(axis)
    helper[np.arange(len(axis)), np.argmin(np.abs(axis), axis=1)] = 1.0
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(axis, e1)
    sin = np.sqrt(np.maximum(0.0, 1.0 - cosines * cosines))
    sigma = cosines[:, None] * axis + sin[:, None] * (np.cos(azimuth)[:, None] * e1 + np.sin(azimuth)[:, None] * e2)
    return sigma / np.linalg.norm(sigma, axis=1)[:, None]


@dataclass
class CollisionDraws:
    """All randomness consumed by one collision step; reusable to couple ensembles."""

    pairs_a: np.ndarray
    pairs_b: np.ndarray
    pair_cos: np.ndarray
    pair_phi: np.ndarray
    res_idx: np.ndarray
    res_partner: np.ndarray
    res_cos: np.ndarray
    res_phi: np.ndarray


def draw_collisions(n: int, k: AngularKernel, rng: np.random.Generator, dt: float, gamma: float,
                    weights=(1.0,), temps=(1.0,)) -> CollisionDraws:
    p_int = (1.0 - gamma) * dt
    p_res = gamma * dt
    n_int = int(rng.binomial(n, p_int))
    n_res = int(rng.binomial(n - n_int, p_res / (1.0 - p_int))) if p_res > 0 else 0
    chosen = rng.choice(n, n_int + n_res, replace=False)
    internal = chosen[:n_int]
    if n_int % 2:
        # odd man out meets a uniformly drawn partner with no other event this step
        lone = internal[-1]
        internal = internal[:-1]
        busy = set(chosen.tolist())
        extra = int(rng.integers(n))
        while extra in busy:
            extra = int(rng.integers(n))
        pairs_a = np.append(internal[0::2], lone)
        pairs_b = np.append(internal[1::2], extra)
    else:
        pairs_a, pairs_b = internal[0::2], internal[1::2]
    m = pairs_a.size
    pair_cos = sample_cosine(k, rng, m)
    pair_phi = rng.uniform(0.0, 2.0 * np.pi, m)
    res_idx = chosen[n_int:]
    comp = rng.choice(len(weights), n_res, p=np.asarray(weights, dtype=float)) if n_res else np.zeros(0, dtype=np.intp)
    res_partner = np.sqrt(np.asarray(temps, dtype=float)[comp])[:, None] * rng.standard_normal((n_res, 3))
    res_cos = sample_cosine(k, rng, n_res)
    res_phi = rng.uniform(0.0, 2.0 * np.pi, n_res)
    return CollisionDraws(pairs_a, pairs_b, pair_cos, pair_phi, res_idx, res_partner, res_cos, res_phi)


def apply_collisions(vel: np.ndarray, d: CollisionDraws) -> None:
    """Apply a set of drawn collisions to ``vel`` in place."""
    if d.pairs_a.size:
        va, vb = vel[d.pairs_a], vel[d.pairs_b]
        sigma = _scatter_directions(va - vb, d.pair_cos, d.pair_phi)
        new_a, new_b = post_collision(va, vb, sigma)
        vel[d.pairs_a] = new_a
        vel[d.pairs_b] = new_b
    if d.res_idx.size:
        v = vel[d.res_idx]
        sigma = _scatter_directions(v - d.res_partner, d.res_cos, d.res_phi)
        new_v, _ = post_collision(v, d.res_partner, sigma)
        vel[d.res_idx] = new_v


def collide_step(ens: ParticleEnsemble, k: AngularKernel, res: MixtureCollision, dt: float) -> ParticleEnsemble:
    """One step of the collision dynamics; each particle has an event with probability dt."""
    if not 0.0 < dt <= 0.05:
        raise ConfigError("dt must lie in (0, 0.05] for collision steps", "dt")
    d = draw_collisions(ens.n, k, ens.rng, dt, res.gamma, res.weights, res.temps)
    apply_collisions(ens.velocities, d)
    ens.time += dt
    return ens


def ou_factors(eta: float, T: float, dt: float) -> tuple[float, float]:
    if not (eta > 0 and T > 0 and dt > 0):
        raise DomainError("eta, T and dt must be positive")
    decay = math.exp(-eta * dt)
    return decay, math.sqrt(T * (1.0 - decay * decay))


def ou_step(ens: ParticleEnsemble, eta: float, T: float, dt: float, noise: np.ndarray | None = None) -> ParticleEnsemble:
    """Exact Ornstein-Uhlenbeck transition toward M_T over a step dt."""
    decay, spread = ou_factors(eta, T, dt)
    if noise is None:
        noise = ens.rng.standard_normal(ens.velocities.shape)
    ens.velocities *= decay
    ens.velocities += spread * noise
    ens.time += dt
    return ens


# ---------------------------------------------------------------------------
# experiment driver


def sample_initial(init: dict, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw initial velocities from an isotropic law, optionally shifted."""
    init = dict(init)
    kind = init.pop("kind", "maxwellian")
    shift = np.asarray(init.pop("shift", (0.0, 0.0, 0.0)), dtype=float)
    if kind == "maxwellian":
        T = float(init.pop("T"))
        if T <= 0:
            raise ConfigError("initial temperature must be positive", "init.T")
        vel = math.sqrt(T) * rng.standard_normal((n, 3))
    elif kind == "mixture":
        w = np.asarray(init.pop("weights"), dtype=float)
        T = np.asarray(init.pop("temps"), dtype=float)
        comp = rng.choice(w.size, n, p=w / w.sum())
        vel = np.sqrt(T[comp])[:, None] * rng.standard_normal((n, 3))
    elif kind == "shell":
        energy = float(init.pop("energy"))
        g = rng.standard_normal((n, 3))
        vel = math.sqrt(energy) * g / np.linalg.norm(g, axis=1)[:, None]
    else:
        raise ConfigError(f"unknown initial law {kind!r}", "init.kind")
    if init:
        raise ConfigError(f"unknown keys {sorted(init)}", "init")
    return vel + shift


def reservoir_from_config(spec: dict):
    spec = dict(spec)
    kind = spec.pop("kind", "mixture")
    if kind == "mixture":
        res = MixtureCollision(tuple(spec.pop("weights", (0.5, 0.5))), tuple(spec.pop("temps", (0.2, 7 / 15))),
                               float(spec.pop("gamma", 0.5)))
    elif kind == "ou":
        res = OUReservoirs(tuple(tuple(map(float, p)) for p in spec.pop("pairs")), bool(spec.pop("collisions", True)))
    else:
        raise ConfigError(f"unknown reservoir kind {kind!r}", "reservoir.kind")
    if spec:
        raise ConfigError(f"unknown keys {sorted(spec)}", "reservoir")
    return res


@dataclass
class DsmcRun:
    times: np.ndarray
    mean_velocity: np.ndarray  # (n_records, 3)
    m2: np.ndarray
    m4: np.ndarray
    snapshots: dict = field(default_factory=dict)  # time -> speeds


def _advance(vel: np.ndarray, rng: np.random.Generator, k: AngularKernel, res, dt: float,
             others: tuple[np.ndarray, ...] = ()) -> None:
    """One splitting step; every array in ``others`` receives the same random draws."""
    if isinstance(res, MixtureCollision):
        d = draw_collisions(vel.shape[0], k, rng, dt, res.gamma, res.weights, res.temps)
        for arr in (vel, *others):
            apply_collisions(arr, d)
        return
    eta, T = res.effective
    if res.collisions:
        d = draw_collisions(vel.shape[0], k, rng, dt, 0.0)
        for arr in (vel, *others):
            apply_collisions(arr, d)
    decay, spread = ou_factors(eta, T, dt)
    noise = rng.standard_normal(vel.shape)
    for arr in (vel, *others):
        arr *= decay
        arr += spread * noise


def run_dsmc(config: dict) -> DsmcRun:
    """Run one replica described by ``config``; deterministic given config['seed'].

    Keys: n_particles, dt, t_end, seed, record_every (steps), snapshot_times,
    kernel, reservoir, init.
    """
    cfg = _dsmc_defaults(config)
    rng = np.random.default_rng(cfg["seed"])
    k = kernel_from_config(cfg["kernel"])
    res = reservoir_from_config(cfg["reservoir"])
    vel = sample_initial(cfg["init"], cfg["n_particles"], rng)
    return _drive(vel, rng, k, res, cfg)[0]


def run_coupled(config: dict, init_b: dict) -> tuple[DsmcRun, DsmcRun]:
    """Two ensembles driven by identical random draws (synchronous coupling)."""
    cfg = _dsmc_defaults(config)
    rng = np.random.default_rng(cfg["seed"])
    k = kernel_from_config(cfg["kernel"])
    res = reservoir_from_config(cfg["reservoir"])
    vel_a = sample_initial(cfg["init"], cfg["n_particles"], rng)
    vel_b = sample_initial(init_b, cfg["n_particles"], rng)
    return _drive(vel_a, rng, k, res, cfg, vel_b)


def _drive(vel, rng, k, res, cfg, vel_b=None):
    dt, t_end = cfg["dt"], cfg["t_end"]
    n_steps = int(round(t_end / dt))
    every = cfg["record_every"]
    snap_steps = {int(round(t / dt)): t for t in cfg["snapshot_times"]}
    runs = []
    arrays = [vel] if vel_b is None else [vel, vel_b]
    records = [([], [], [], [], {}) for _ in arrays]

    def record(n):
        for arr, (ts, mv, m2, m4, snaps) in zip(arrays, records):
            v2 = np.einsum("ij,ij->i", arr, arr)
            ts.append(n * dt)
            mv.append(arr.mean(axis=0))
            m2.append(v2.mean())
            m4.append((v2 * v2).mean())
            if n in snap_steps:
                snaps[snap_steps[n]] = np.sqrt(v2)

    record(0)
    for n in range(1, n_steps + 1):
        _advance(arrays[0], rng, k, res, dt, tuple(arrays[1:]))
        if n % every == 0 or n == n_steps or n in snap_steps:
            record(n)
    for ts, mv, m2, m4, snaps in records:
        runs.append(DsmcRun(np.array(ts), np.array(mv), np.array(m2), np.array(m4), snaps))
    return tuple(runs)


DSMC_DEFAULTS = {
    "n_particles": 100_000,
    "dt": 0.02,
    "t_end": 60.0,
    "seed": 0,
    "record_every": 25,
    "snapshot_times": [],
    "kernel": {"kind": "isotropic"},
    "reservoir": {"kind": "mixture", "weights": [0.5, 0.5], "temps": [0.2, 7 / 15], "gamma": 0.5},
    "init": {"kind": "maxwellian", "T": 1 / 3},
}


def _dsmc_defaults(config: dict) -> dict:
    unknown = set(config) - set(DSMC_DEFAULTS) - {"replicas", "workers"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", "dsmc")
    cfg = {**DSMC_DEFAULTS, **config}
    if int(cfg["n_particles"]) < 2:
        raise ConfigError("n_particles must be >= 2", "n_particles")
    if not 0.0 < float(cfg["dt"]) <= 0.05:
        raise ConfigError("dt must lie in (0, 0.05]", "dt")
    if float(cfg["t_end"]) <= 0:
        raise ConfigError("t_end must be positive", "t_end")
    if int(cfg["record_every"]) < 1:
        raise ConfigError("record_every must be >= 1", "record_every")
    cfg["n_particles"] = int(cfg["n_particles"])
    cfg["dt"] = float(cfg["dt"])
    cfg["t_end"] = float(cfg["t_end"])
    cfg["record_every"] = int(cfg["record_every"])
    return cfg


def replica_seeds(seed: int, replicas: int) -> list[int]:
    """Independent child seeds derived from one master seed."""
    children = np.random.SeedSequence(seed).spawn(replicas)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def run_replicas(config: dict, replicas: int = 16, workers: int = 1) -> list[DsmcRun]:
    seeds = replica_seeds(int(config.get("seed", 0)), replicas)
    base = {k: v for k, v in config.items() if k not in ("replicas", "workers")}
    configs = [{**base, "seed": s} for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_dsmc, configs))
    return [run_dsmc(c) for c in configs]


def replica_stats(values) -> tuple[float, float]:
    """Mean and standard error across replicas."""
    a = np.asarray(values, dtype=float)
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size))
