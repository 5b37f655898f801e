"""Acceptance suite: each criterion returns its measured values and a verdict.

Every criterion takes a seed and a scale ("full" or "quick"). Quick scale
shrinks particle counts and horizons so the suite runs in seconds; it is
used for the determinism check and in smoke tests. Results contain no
timings, so repeated runs with one seed produce identical bytes.
"""

from __future__ import annotations

import hashlib
import math
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dsmc import reduce_ou_reservoirs, replica_stats, run_coupled, run_dsmc, run_replicas
from .entropy import JumpReservoir, bgk_ness, ledger, thermal_run, thermal_step, boltzmann_entropy
from .evolve import fit_log_slope, run as evolve_run
from .io import write_csv, write_json
from .kernel import contraction_factor, lambda0_as_printed, make_kernel, moment_decay_rate
from .metrics import gtw_distance, moments, radial_w2
from .spectral import charfn_maxwellian, charfn_mixture, inverse_transform, phi_map
from .steady import a_priori_bound, solve_ness

MIXTURE_W = (0.5, 0.5)
MIXTURE_T = (0.2, 7 / 15)
SCALES = ("full", "quick")


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict
    table: tuple[list[str], list] | None = field(default=None, repr=False)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items() if not isinstance(v, (list, dict)))
        return f"[{flag}] {self.number:2d}. {self.title}: {shown}"


def _short(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def theory_constants(k, gamma: float) -> dict:
    lam = contraction_factor(k, gamma)
    return {
        "lambda": lam,
        "lambda1": 1.0 - lam,
        "lambda0_as_implemented": moment_decay_rate(k, gamma),
        "lambda0_as_printed": lambda0_as_printed(k),
        "moment_decay_rate": moment_decay_rate(k, gamma),
    }


def _child_rng(seed: int, number: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, number]))


def _child_seed(seed: int, number: int) -> int:
    return int(np.random.SeedSequence([seed, number]).generate_state(1, dtype=np.uint64)[0])


def _mixture_R():
    return charfn_mixture(MIXTURE_W, MIXTURE_T)


# ---------------------------------------------------------------------------


def criterion_1(seed: int = 0, scale: str = "full") -> CriterionResult:
    """A Maxwellian reservoir is its own steady state."""
    k = make_kernel("isotropic")
    R = charfn_maxwellian(1 / 3)
    rep = solve_ness(R, k, 0.5, tol=1e-8)
    err = gtw_distance(rep.phi_inf, R)
    ok = rep.iterations == 1 and rep.residual <= 1e-8 and err <= 1e-8
    return CriterionResult(1, "Maxwellian fixed point", ok, {
        "iterations": rep.iterations, "residual": rep.residual, "gtw_to_reservoir": err,
    })


def _random_unit_energy_mixture(rng: np.random.Generator):
    m = int(rng.integers(2, 5))
    w = rng.dirichlet(np.ones(m))
    T = rng.uniform(0.05, 1.0, m)
    T *= 1.0 / (3.0 * np.dot(w, T))
    return charfn_mixture(w / w.sum(), T)


def criterion_2(seed: int = 0, scale: str = "full") -> CriterionResult:
    """GTW contraction of the fixed-point map on random matched-moment pairs."""
    rng = _child_rng(seed, 2)
    pairs = 20 if scale == "full" else 5
    R = _mixture_R()
    rows = []
    for label, k, gamma in (("isotropic", make_kernel("isotropic"), 0.5),
                            ("linear_a0.5", make_kernel("linear", a=0.5), 0.6)):
        lam = contraction_factor(k, gamma)
        for _ in range(pairs):
            f, g = _random_unit_energy_mixture(rng), _random_unit_energy_mixture(rng)
            d0 = gtw_distance(f, g)
            d1 = gtw_distance(phi_map(f, R, k, gamma), phi_map(g, R, k, gamma))
            rows.append((label, lam, d0, d1, d1 / d0))
    worst = max(r[4] - r[1] for r in rows)
    max_iso = max(r[4] for r in rows if r[0] == "isotropic")
    max_lin = max(r[4] for r in rows if r[0] != "isotropic")
    ok = worst <= 1e-6
    table = (["kernel_id", "lambda", "d_before", "d_after", "ratio"],
             [np.array([0 if r[0] == "isotropic" else 1 for r in rows])] + [np.array([r[i] for r in rows]) for i in (1, 2, 3, 4)])
    return CriterionResult(2, "Contraction certificate", ok, {
        "pairs_per_kernel": pairs, "max_ratio_isotropic": max_iso, "max_ratio_linear": max_lin,
        "bound": 0.75, "max_excess": worst,
    }, table)


def criterion_3(seed: int = 0, scale: str = "full") -> CriterionResult:
    """Successive ratios and the a-priori error bound along the iteration."""
    k = make_kernel("isotropic")
    gamma = 0.5
    lam = contraction_factor(k, gamma)
    R = _mixture_R()
    proxy = solve_ness(R, k, gamma, tol=1e-13, max_iter=2000).phi_inf
    rep = solve_ness(R, k, gamma, tol=1e-8)
    ratios = rep.ratios
    d1 = rep.history[0]
    f = R
    ns, errs, bounds = [], [], []
    for n in range(1, rep.iterations + 1):
        f = phi_map(f, R, k, gamma)
        ns.append(n)
        errs.append(gtw_distance(f, proxy))
        bounds.append(a_priori_bound(lam, d1, n))
    max_ratio = max(ratios)
    bound_ok = all(e <= b for e, b in zip(errs, bounds))
    ok = max_ratio <= lam + 1e-6 and bound_ok and rep.converged
    return CriterionResult(3, "Geometric convergence and a-priori bound", ok, {
        "iterations": rep.iterations, "lambda": lam, "max_ratio": max_ratio,
        "bound_holds_every_n": bound_ok, "certified_error": rep.certified_error,
    }, (["n", "gtw_to_proxy", "a_priori_bound"], [np.array(ns), np.array(errs), np.array(bounds)]))


def criterion_4(seed: int = 0, scale: str = "full") -> CriterionResult:
    """NESS moments: spectral energy, and DSMC against spectral."""
    k = make_kernel("isotropic")
    rep = solve_ness(_mixture_R(), k, 0.5, tol=1e-10)
    spec = moments(rep.phi_inf)
    full = scale == "full"
    cfg = {
        "n_particles": 100_000 if full else 10_000,
        "dt": 0.02,
        "t_end": 60.0 if full else 40.0,
        "record_every": 25,
        "seed": _child_seed(seed, 4),
    }
    runs = run_replicas(cfg, replicas=16 if full else 4)
    # time average over the stationary stretch t >= 30 of each replica
    m2_rep = [float(r.m2[r.times >= 30.0].mean()) for r in runs]
    m4_rep = [float(r.m4[r.times >= 30.0].mean()) for r in runs]
    m2, m2_se = replica_stats(m2_rep)
    m4, m4_se = replica_stats(m4_rep)
    ok = (abs(spec.m2 - 1.0) <= 1e-5 and abs(m2 - 1.0) <= 3 * m2_se and abs(m4 - spec.m4) <= 3 * m4_se)
    return CriterionResult(4, "NESS moments (spectral vs DSMC)", ok, {
        "spectral_m2": spec.m2, "spectral_m4": spec.m4, "dsmc_m2": m2, "dsmc_m2_se": m2_se,
        "dsmc_m4": m4, "dsmc_m4_se": m4_se, "replicas": len(runs), "n_particles": cfg["n_particles"],
    }, (["replica", "m2", "m4"], [np.arange(len(runs)), np.array(m2_rep), np.array(m4_rep)]))


def criterion_5(seed: int = 0, scale: str = "full") -> CriterionResult:
    """Exponential approach to the NESS in the GTW distance."""
    k = make_kernel("isotropic")
    gamma = 0.5
    R = _mixture_R()
    inf = solve_ness(R, k, gamma, tol=1e-13, max_iter=2000).phi_inf
    traj = evolve_run(R, R, k, gamma, dt=0.02, t_end=40.0, phi_inf=inf, record_every=5)
    t, d, _ = traj.arrays()
    slope = fit_log_slope(t, d)
    target = -(1.0 - contraction_factor(k, gamma))
    ok = slope <= target * (1.0 - 0.02)
    return CriterionResult(5, "Exponential convergence rate", ok, {
        "fitted_slope": slope, "required_at_most": target,
    }, (["t", "gtw_to_ness"], [t, d]))


def criterion_6(seed: int = 0, scale: str = "full") -> CriterionResult:
    """Energy and momentum relaxation rates."""
    k = make_kernel("isotropic")
    gamma = 0.5
    rate = moment_decay_rate(k, gamma)
    R = _mixture_R()
    traj = evolve_run(charfn_maxwellian(0.5), R, k, gamma, dt=0.01, t_end=20.0, record_every=10, scheme="midpoint")
    t, _, gap = traj.arrays()
    exact = 0.5 * np.exp(-rate * t)
    rel = float(np.max(np.abs(gap - exact) / exact))
    full = scale == "full"
    run = run_dsmc({
        "n_particles": 100_000 if full else 20_000,
        "t_end": 12.0,
        "record_every": 10,
        "seed": _child_seed(seed, 6),
        "init": {"kind": "maxwellian", "T": 1 / 3, "shift": [1.0, 0.0, 0.0]},
    })
    slope = fit_log_slope(run.times, run.mean_velocity[:, 0], (0.05, 2.0))
    dsmc_err = abs(-slope - rate) / rate
    ok = rel <= 1e-4 and dsmc_err <= 0.05
    return CriterionResult(6, "Moment relaxation rates", ok, {
        "rate": rate, "spectral_max_rel_error": rel, "dsmc_momentum_rate": -slope, "dsmc_rel_error": dsmc_err,
    }, (["t", "energy_gap", "exact"], [t, gap, exact]))


def criterion_7(seed: int = 0, scale: str = "full") -> CriterionResult:
    """OU reservoirs: reduction, energy-gap decay, and coupled W2 contraction."""
    pairs = [[1.0, 0.2], [1.0, 0.6]]
    eta, T = reduce_ou_reservoirs(pairs)
    reduce_ok = abs(eta - 2.0) <= 1e-12 and abs(T - 0.4) <= 1e-12
    full = scale == "full"
    res = {"kind": "ou", "pairs": pairs, "collisions": True}
    base = {"n_particles": 100_000 if full else 10_000, "dt": 0.01, "t_end": 1.0, "record_every": 25,
            "reservoir": res, "init": {"kind": "maxwellian", "T": 1.0}}
    runs = run_replicas({**base, "seed": _child_seed(seed, 70)}, replicas=16 if full else 4)
    times = runs[0].times
    ratio = np.array([(r.m2 - 3 * T) / (r.m2[0] - 3 * T) for r in runs])
    exact = np.exp(-2.0 * eta * times)
    z = []
    for j in range(1, times.size):
        mean, se = replica_stats(ratio[:, j])
        z.append(abs(mean - exact[j]) / se)
    gap_ok = max(z) <= 3.0

    snaps = [round(0.05 * i, 10) for i in range(41)]
    a, b = run_coupled({**base, "t_end": 2.0, "record_every": 50, "snapshot_times": snaps,
                        "seed": _child_seed(seed, 71)}, {"kind": "shell", "energy": 0.3})
    ts = np.array(sorted(a.snapshots))
    w2 = np.array([radial_w2(a.snapshots[t], b.snapshots[t]) for t in ts])
    floor = 20.0 / math.sqrt(base["n_particles"])
    mask = w2 >= floor
    coef, cov = np.polyfit(ts[mask], np.log(w2[mask]), 1, cov=True)
    w2_rate, w2_se = -float(coef[0]), float(math.sqrt(cov[0, 0]))
    w2_ok = w2_rate + 3 * w2_se >= eta
    return CriterionResult(7, "OU reservoirs", reduce_ok and gap_ok and w2_ok, {
        "eta": eta, "T": T, "energy_gap_max_z": max(z), "w2_rate": w2_rate, "w2_rate_se": w2_se,
    }, (["t", "w2"], [ts, w2]))


def criterion_8(seed: int = 0, scale: str = "full") -> CriterionResult:
    """Radial W2 between two Maxwellian samples."""
    rng = _child_rng(seed, 8)
    n = 1_000_000
    T1, T2 = 1.0, 0.25
    x = math.sqrt(T1) * rng.standard_normal((n, 3))
    y = math.sqrt(T2) * rng.standard_normal((n, 3))
    w = radial_w2(x, y)
    exact = math.sqrt(3.0) * abs(math.sqrt(T1) - math.sqrt(T2))
    rel = abs(w - exact) / exact
    return CriterionResult(8, "W2 sanity", rel <= 0.01, {"w2": w, "exact": exact, "rel_error": rel})


ENTROPY_RESERVOIRS = (JumpReservoir(1.0, 0.2), JumpReservoir(1.0, 0.6))
ENTROPY_V_MAX = 10.0


def criterion_9(seed: int = 0, scale: str = "full") -> CriterionResult:
    """Entropy ledger at the thermalizing NESS."""
    k = make_kernel("isotropic")
    res = ENTROPY_RESERVOIRS
    phi = bgk_ness(k, res, tol=1e-12).phi_inf
    dt = 1e-3
    nxt = thermal_step(phi, k, res, dt)
    L = ledger(inverse_transform(nxt, ENTROPY_V_MAX), inverse_transform(phi, ENTROPY_V_MAX), dt, res)
    J1 = L.J_alpha[0]
    expected = (res[0].beta - res[1].beta) * J1
    flux_sum = abs(sum(L.J_alpha))
    ok = (flux_sum <= 1e-6 and abs(L.sigma_total - expected) <= 1e-6 and L.sigma_total > 0
          and abs(J1 - 0.3) <= 1e-6 and all(s >= 0 for s in L.sigma_alpha) and L.sigma_B_residual >= -1e-4)
    return CriterionResult(9, "Entropy ledger at NESS", ok, {
        "J1": J1, "flux_sum": flux_sum, "sigma_total": L.sigma_total, "expected": expected,
        "sigma_1": L.sigma_alpha[0], "sigma_2": L.sigma_alpha[1], "sigma_B_residual": L.sigma_B_residual,
    })


def criterion_10(seed: int = 0, scale: str = "full") -> CriterionResult:
    """Hot Maxwellian start: the gas entropy decreases while it cools."""
    k = make_kernel("isotropic")
    res = ENTROPY_RESERVOIRS
    dt = 0.01
    path = thermal_run(charfn_maxwellian(1.0), k, res, dt=dt, t_end=2.0, record_every=10)
    times = np.array([t for t, _ in path])
    S = np.array([boltzmann_entropy(inverse_transform(p, ENTROPY_V_MAX)) for _, p in path])
    S_dot = np.gradient(S, times)
    min_sdot = float(S_dot.min())
    return CriterionResult(10, "Non-monotone entropy", min_sdot < 0, {
        "min_S_dot": min_sdot, "t_at_min": float(times[np.argmin(S_dot)]), "S0": float(S[0]), "S_end": float(S[-1]),
    }, (["t", "S", "S_dot"], [times, S, S_dot]))


def _digest(directory: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(directory.iterdir()):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def criterion_11(seed: int = 0, scale: str = "full") -> CriterionResult:
    """Two quick-scale suite runs with one seed write identical bytes."""
    digests = []
    for _ in range(2):
        with tempfile.TemporaryDirectory() as tmp:
            run_suite(Path(tmp), seed=seed, scale="quick", numbers=range(1, 11))
            digests.append(_digest(Path(tmp)))
    return CriterionResult(11, "Determinism", digests[0] == digests[1], {"digest": digests[0][:16]})


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}


def run_suite(out_dir, seed: int = 0, scale: str = "full", numbers=None, echo=None) -> list[CriterionResult]:
    """Run the selected criteria, write one CSV per table plus validate.json."""
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    numbers = list(CRITERIA) if numbers is None else list(numbers)
    results = []
    for i in numbers:
        r = CRITERIA[i](seed, scale)
        results.append(r)
        if r.table is not None:
            write_csv(out_dir / f"criterion_{i:02d}.csv", r.table[0], r.table[1])
        if echo is not None:
            echo(r.line())
    k = make_kernel("isotropic")
    write_json(out_dir / "validate.json", {
        "seed": seed,
        "scale": scale,
        "theory": theory_constants(k, 0.5),
        "all_passed": all(r.passed for r in results),
        "criteria": {str(r.number): {"title": r.title, "passed": r.passed, "measured": r.measured} for r in results},
    })
    return results
