"""Experiment drivers: one function per experiment, each writing CSV + report.json."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import acceptance
from .config import RunConfig
from .dsmc import replica_stats, reservoir_from_config, run_replicas
from .entropy import JumpReservoir, bgk_ness, ledger, thermal_run, thermal_step
from .errors import ConfigError, NessLabError
from .evolve import fit_log_slope, run as evolve_run
from .io import write_csv, write_json
from .kernel import AngularKernel, contraction_factor, kernel_from_config, moment_decay_rate
from .spectral import charfn_maxwellian, charfn_mixture, inverse_transform
from .steady import a_priori_bound, solve_ness

NESS_ENERGY_TOL = 1e-5
SLOPE_FIT_SLACK = 0.02
LEDGER_TOL = 1e-6


def _kernel(cfg: RunConfig) -> AngularKernel:
    return kernel_from_config(cfg.kernel, cfg.kernel_nodes)


def _grid(cfg: RunConfig) -> tuple[int, float]:
    return cfg.grid["n"], cfg.grid["r_max"]


def _reservoir_charfn(cfg: RunConfig):
    n, r_max = _grid(cfg)
    return charfn_mixture(cfg.reservoir["weights"], cfg.reservoir["temps"], n, r_max)


def _initial_charfn(cfg: RunConfig):
    n, r_max = _grid(cfg)
    init = cfg.initial
    if init["kind"] == "reservoir":
        return _reservoir_charfn(cfg)
    if init["kind"] == "maxwellian":
        return charfn_maxwellian(init["T"], n, r_max)
    return charfn_mixture(init["weights"], init["temps"], n, r_max)


def _report(cfg: RunConfig, k: AngularKernel, measured: dict, assertions: dict) -> dict:
    return {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "complete": True,
        "theory": acceptance.theory_constants(k, cfg.gamma),
        "measured": measured,
        "assertions": assertions,
        "passed": all(assertions.values()),
    }


def run_ness(cfg: RunConfig, out: Path) -> dict:
    k = _kernel(cfg)
    R = _reservoir_charfn(cfg)
    start = None if cfg.initial["kind"] == "reservoir" else _initial_charfn(cfg)
    num = cfg.numerics
    rep = solve_ness(R, k, cfg.gamma, tol=num["tol"], max_iter=num["max_iter"], start=start)
    write_csv(out / "phi_inf.csv", ["r", "phi"], [rep.phi_inf.r, rep.phi_inf.values])
    n = np.arange(1, len(rep.history) + 1)
    bounds = [a_priori_bound(rep.lambda_used, rep.history[0], i) for i in n]
    write_csv(out / "history.csv", ["n", "successive_distance", "a_priori_bound", "m2"],
              [n, np.array(rep.history), np.array(bounds), np.array(rep.m2_history[1:])])
    summary = rep.summary()
    summary.pop("history")
    ratios = rep.ratios
    summary["max_ratio"] = max(ratios) if ratios else float("nan")
    assertions = {
        "certified_error_le_tol": rep.certified_error <= num["tol"],
        "unit_energy": abs(summary["m2"] - 1.0) <= NESS_ENERGY_TOL,
        "ratios_le_lambda": all(r <= rep.lambda_used + 1e-6 for r in ratios),
    }
    return _report(cfg, k, summary, assertions)


def run_evolve(cfg: RunConfig, out: Path) -> dict:
    k = _kernel(cfg)
    R = _reservoir_charfn(cfg)
    num = cfg.numerics
    ness = solve_ness(R, k, cfg.gamma, tol=num["tol"], max_iter=num["max_iter"])
    phi0 = _initial_charfn(cfg)
    traj = evolve_run(phi0, R, k, cfg.gamma, dt=num["dt"], t_end=num["t_end"], phi_inf=ness.phi_inf,
                      record_every=num["record_every"], scheme=num["scheme"])
    t, d, gap = traj.arrays()
    write_csv(out / "trajectory.csv", ["t", "gtw_to_ness", "m2_minus_1"], [t, d, gap])
    lam1 = 1.0 - contraction_factor(k, cfg.gamma)
    rate = moment_decay_rate(k, cfg.gamma)
    slope = fit_log_slope(t, d)
    gap_slope = fit_log_slope(t, gap, (1e-6, 10.0))
    measured = {"ness_certified_error": ness.certified_error, "gtw_log_slope": slope,
                "energy_gap_log_slope": gap_slope, "final_gtw": float(d[-1])}
    assertions = {}
    if math.isfinite(slope):
        assertions["gtw_slope_le_minus_lambda1"] = slope <= -lam1 * (1.0 - SLOPE_FIT_SLACK)
    if math.isfinite(gap_slope):
        assertions["energy_gap_rate"] = abs(-gap_slope - rate) <= SLOPE_FIT_SLACK * rate + 2e-3
    return _report(cfg, k, measured, assertions)


def _dsmc_base(cfg: RunConfig) -> tuple[dict, float, float]:
    """Module-level DSMC config plus the stationary energy and energy-gap rate."""
    res = dict(cfg.reservoir)
    k = _kernel(cfg)
    if res["kind"] == "mixture":
        res["gamma"] = cfg.gamma
        # the energy gap relaxes at the same rate as the momentum
        energy, rate = reservoir_from_config(res).energy, moment_decay_rate(k, cfg.gamma)
    else:
        eta, T = reservoir_from_config(res).effective
        energy, rate = 3.0 * T, 2.0 * eta
    base = {
        "n_particles": cfg.dsmc["n_particles"],
        "dt": cfg.numerics["dt"],
        "t_end": cfg.numerics["t_end"],
        "seed": cfg.seed,
        "record_every": cfg.numerics["record_every"],
        "snapshot_times": cfg.dsmc["snapshot_times"],
        "kernel": cfg.kernel,
        "reservoir": res,
        "init": dict(cfg.initial),
    }
    return base, energy, rate


def run_dsmc_experiment(cfg: RunConfig, out: Path) -> dict:
    k = _kernel(cfg)
    base, energy, rate = _dsmc_base(cfg)
    runs = run_replicas(base, replicas=cfg.dsmc["replicas"], workers=cfg.dsmc["workers"])
    t = runs[0].times
    m2 = np.array([r.m2 for r in runs])
    m4 = np.array([r.m4 for r in runs])
    u = np.array([np.linalg.norm(r.mean_velocity, axis=1) for r in runs])
    reps = len(runs)

    def se(a):
        return a.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.full(a.shape[1], np.nan)

    write_csv(out / "moments.csv", ["t", "m2", "m2_se", "m4", "m4_se", "mean_speed_drift", "mean_speed_drift_se"],
              [t, m2.mean(0), se(m2), m4.mean(0), se(m4), u.mean(0), se(u)])
    write_csv(out / "replicas_final.csv", ["replica", "m2", "m4", "ux", "uy", "uz"],
              [np.arange(reps), m2[:, -1], m4[:, -1]] + [np.array([r.mean_velocity[-1, i] for r in runs]) for i in range(3)])
    for time, speeds in sorted(runs[0].snapshots.items()):
        write_csv(out / f"speeds_t{time:g}.csv", ["speed"], [np.sort(speeds)])
    # expected energy at t_end given each replica's own initial energy
    expected = energy + (m2[:, 0] - energy) * math.exp(-rate * t[-1])
    diff = m2[:, -1] - expected
    mean, err = replica_stats(diff) if reps > 1 else (float(diff[0]), float("nan"))
    measured = {"replicas": reps, "final_m2": float(m2[:, -1].mean()),
                "final_m4": float(m4[:, -1].mean()), "stationary_energy": energy, "energy_gap_rate": rate,
                "energy_vs_theory_mean": mean, "energy_vs_theory_se": err}
    assertions = {}
    if reps > 1:
        assertions["energy_within_3se"] = abs(mean) <= 3.0 * err
    return _report(cfg, k, measured, assertions)


def run_entropy(cfg: RunConfig, out: Path) -> dict:
    k = _kernel(cfg)
    n, r_max = _grid(cfg)
    res = [JumpReservoir(eta, T) for eta, T in cfg.reservoir["pairs"]]
    num = cfg.numerics
    temps = [r.T for r in res] + ([cfg.initial["T"]] if cfg.initial["kind"] == "maxwellian" else cfg.initial["temps"])
    v_max = 10.0 * math.sqrt(max(temps))
    ness = bgk_ness(k, res, tol=num["tol"], max_iter=num["max_iter"], n=n, r_max=r_max)
    step_dt = min(1e-3, num["dt"])
    L_ness = ledger(inverse_transform(thermal_step(ness.phi_inf, k, res, step_dt), v_max),
                    inverse_transform(ness.phi_inf, v_max), step_dt, res)
    path = thermal_run(_initial_charfn(cfg), k, res, dt=num["dt"], t_end=num["t_end"],
                       record_every=num["record_every"])
    dens = [(t, inverse_transform(p, v_max)) for t, p in path]
    rows = []
    for (t0, f0), (t1, f1) in zip(dens[:-1], dens[1:]):
        L = ledger(f1, f0, t1 - t0, res)
        rows.append([0.5 * (t0 + t1), L.S, L.S_dot, *L.J_alpha, *L.sigma_alpha, L.sigma_R, L.sigma_total,
                     L.sigma_B_residual])
    a = len(res)
    header = (["t_mid", "S_end", "S_dot"] + [f"J_{i + 1}" for i in range(a)] + [f"sigma_{i + 1}" for i in range(a)]
              + ["sigma_R", "sigma_total", "sigma_B_residual"])
    write_csv(out / "ledger.csv", header, list(np.array(rows).T))
    measured = {
        "ness": L_ness.to_dict(),
        "ness_iterations": ness.iterations,
        "reservoirs": [{"eta": r.eta, "T": r.T, "beta": r.beta} for r in res],
        "min_S_dot": float(min(r[2] for r in rows)),
        "min_sigma_total_trajectory": float(min(r[-2] for r in rows)),
    }
    assertions = {
        "ness_flux_balance": abs(sum(L_ness.J_alpha)) <= LEDGER_TOL,
        "ness_sigma_alpha_nonnegative": all(s >= 0 for s in L_ness.sigma_alpha),
        "ness_sigma_total_nonnegative": L_ness.sigma_total >= -LEDGER_TOL,
        "ness_sigma_B_residual": L_ness.sigma_B_residual >= -1e-4,
    }
    return _report(cfg, k, measured, assertions)


def run_validate(cfg: RunConfig, out: Path, echo=print) -> dict:
    results = acceptance.run_suite(out, seed=cfg.seed, scale=cfg.validate["scale"],
                                     numbers=cfg.validate["criteria"], echo=echo)
    k = _kernel(cfg)
    return _report(cfg, k, {"criteria": len(results)}, {f"criterion_{r.number}": r.passed for r in results})


DRIVERS = {
    "ness": run_ness,
    "evolve": run_evolve,
    "dsmc": run_dsmc_experiment,
    "entropy": run_entropy,
    "validate": run_validate,
}


def run_experiment(cfg: RunConfig, echo=print) -> int:
    """Run ``cfg`` and write its outputs; returns the process exit status."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.dumps())
    try:
        if cfg.experiment == "validate":
            report = run_validate(cfg, out, echo)
        else:
            report = DRIVERS[cfg.experiment](cfg, out)
    except ConfigError:
        raise
    except NessLabError as exc:
        write_json(out / "report.json", {"experiment": cfg.experiment, "seed": cfg.seed, "complete": False,
                                         "error": f"{type(exc).__name__}: {exc}"})
        echo(f"error: {type(exc).__name__}: {exc} (outputs in {out} are incomplete)")
        return 1
    write_json(out / "report.json", report)
    if cfg.experiment != "validate":
        for name, ok in report["assertions"].items():
            echo(f"[{'PASS' if ok else 'FAIL'}] {name}")
    return 0 if report["passed"] else 1
