"""Run configuration: defaults, validation with key paths, and JSON round trip."""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import ConfigError, NessLabError

EXPERIMENTS = ("ness", "evolve", "dsmc", "entropy", "validate")
SCHEMES = ("euler", "midpoint")
MIXTURE_DEFAULT = {"kind": "mixture", "weights": [0.5, 0.5], "temps": [0.2, 7 / 15]}
JUMP_DEFAULT = {"kind": "jump", "pairs": [[1.0, 0.2], [1.0, 0.6]]}

NUMERICS_DEFAULTS = {
    "ness": {"dt": 0.02, "t_end": 40.0, "tol": 1e-8, "max_iter": 500, "scheme": "euler", "record_every": 5},
    "evolve": {"dt": 0.02, "t_end": 40.0, "tol": 1e-12, "max_iter": 1000, "scheme": "euler", "record_every": 5},
    "dsmc": {"dt": 0.02, "t_end": 60.0, "tol": 1e-8, "max_iter": 500, "scheme": "euler", "record_every": 25},
    "entropy": {"dt": 0.01, "t_end": 4.0, "tol": 1e-10, "max_iter": 500, "scheme": "euler", "record_every": 5},
    "validate": {"dt": 0.02, "t_end": 40.0, "tol": 1e-8, "max_iter": 500, "scheme": "euler", "record_every": 5},
}
INITIAL_DEFAULTS = {
    "ness": {"kind": "reservoir"},
    "evolve": {"kind": "reservoir"},
    "dsmc": {"kind": "maxwellian", "T": 1 / 3},
    "entropy": {"kind": "maxwellian", "T": 1.0},
    "validate": {"kind": "reservoir"},
}
DSMC_SECTION = {"n_particles": 100_000, "replicas": 16, "workers": 1, "snapshot_times": []}
TOP_KEYS = {
    "experiment", "gamma", "kernel", "kernel_nodes", "reservoir", "grid", "numerics",
    "initial", "dsmc", "validate", "seed", "output_dir",
}


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    gamma: float
    kernel: dict
    kernel_nodes: int
    reservoir: dict
    grid: dict
    numerics: dict
    initial: dict
    dsmc: dict
    validate: dict
    seed: int
    output_dir: str

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _num(value, key, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key)
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"expected an integer, got {value!r}", key)
        return int(value)
    return float(value)


def _section(raw, defaults: dict, key: str) -> dict:
    if raw is None:
        return copy.deepcopy(defaults)
    if not isinstance(raw, dict):
        raise ConfigError("expected an object", key)
    unknown = set(raw) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}", f"{key}.{sorted(unknown)[0]}")
    return {**copy.deepcopy(defaults), **copy.deepcopy(raw)}


def _check_kernel(spec, nodes) -> dict:
    from .kernel import kernel_from_config

    if not isinstance(spec, dict):
        raise ConfigError("expected an object", "kernel")
    unknown = set(spec) - {"kind", "a"}
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}", "kernel")
    try:
        kernel_from_config(spec, nodes)
    except NessLabError as exc:
        raise ConfigError(str(exc), "kernel") from None
    return dict(spec)


def _check_reservoir(spec, experiment: str) -> dict:
    if not isinstance(spec, dict):
        raise ConfigError("expected an object", "reservoir")
    kind = spec.get("kind")
    allowed = {
        "mixture": {"kind", "weights", "temps"},
        "jump": {"kind", "pairs"},
        "ou": {"kind", "pairs", "collisions"},
    }
    if kind not in allowed:
        raise ConfigError(f"unknown reservoir kind {kind!r}", "reservoir.kind")
    unknown = set(spec) - allowed[kind]
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}", f"reservoir.{sorted(unknown)[0]}")
    usable = {
        "ness": {"mixture"}, "evolve": {"mixture"}, "dsmc": {"mixture", "ou"},
        "entropy": {"jump"}, "validate": {"mixture", "jump", "ou"},
    }[experiment]
    if kind not in usable:
        raise ConfigError(f"reservoir kind {kind!r} not usable with experiment {experiment!r}", "reservoir.kind")
    out = {"kind": kind}
    if kind == "mixture":
        w = [_num(x, "reservoir.weights") for x in spec.get("weights", MIXTURE_DEFAULT["weights"])]
        T = [_num(x, "reservoir.temps") for x in spec.get("temps", MIXTURE_DEFAULT["temps"])]
        if not w or len(w) != len(T):
            raise ConfigError("weights and temps must be nonempty and of equal length", "reservoir.weights")
        if any(x <= 0 for x in w):
            raise ConfigError("weights must be positive", "reservoir.weights")
        if any(x <= 0 for x in T):
            raise ConfigError("temperatures must be positive", "reservoir.temps")
        if abs(sum(w) - 1.0) > 1e-12:
            raise ConfigError("weights must sum to 1", "reservoir.weights")
        if experiment in ("ness", "evolve") and abs(3.0 * sum(a * b for a, b in zip(w, T)) - 1.0) > 1e-6:
            raise ConfigError("reservoir energy 3 * sum(w T) must equal 1", "reservoir.temps")
        out.update(weights=w, temps=T)
    else:
        pairs = spec.get("pairs", JUMP_DEFAULT["pairs"])
        if not isinstance(pairs, list) or not pairs:
            raise ConfigError("expected a nonempty list of [eta, T] pairs", "reservoir.pairs")
        clean = []
        for i, p in enumerate(pairs):
            if not isinstance(p, (list, tuple)) or len(p) != 2:
                raise ConfigError("expected [eta, T]", f"reservoir.pairs[{i}]")
            eta, T = _num(p[0], f"reservoir.pairs[{i}]"), _num(p[1], f"reservoir.pairs[{i}]")
            if eta <= 0 or T <= 0:
                raise ConfigError("eta and T must be positive", f"reservoir.pairs[{i}]")
            clean.append([eta, T])
        out["pairs"] = clean
        if kind == "ou":
            coll = spec.get("collisions", True)
            if not isinstance(coll, bool):
                raise ConfigError("expected true or false", "reservoir.collisions")
            out["collisions"] = coll
    return out


def _check_initial(spec, experiment: str) -> dict:
    if not isinstance(spec, dict):
        raise ConfigError("expected an object", "initial")
    kind = spec.get("kind")
    spectral = experiment in ("ness", "evolve", "entropy")
    if kind == "reservoir" and experiment in ("dsmc", "entropy"):
        raise ConfigError(f"initial law 'reservoir' not usable with experiment {experiment!r}", "initial.kind")
    if spectral and (kind == "shell" or "shift" in spec):
        raise ConfigError("spectral experiments need an isotropic Maxwellian or mixture start", "initial")
    allowed = {
        "reservoir": {"kind"},
        "maxwellian": {"kind", "T", "shift"},
        "mixture": {"kind", "weights", "temps", "shift"},
        "shell": {"kind", "energy", "shift"},
    }
    if kind not in allowed:
        raise ConfigError(f"unknown initial law {kind!r}", "initial.kind")
    unknown = set(spec) - allowed[kind]
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}", f"initial.{sorted(unknown)[0]}")
    if kind == "maxwellian" and not _num(spec.get("T"), "initial.T") > 0:
        raise ConfigError("must be positive", "initial.T")
    if kind == "shell" and not _num(spec.get("energy"), "initial.energy") > 0:
        raise ConfigError("must be positive", "initial.energy")
    if kind == "mixture":
        w = [_num(x, "initial.weights") for x in spec.get("weights", [])]
        T = [_num(x, "initial.temps") for x in spec.get("temps", [])]
        if not w or len(w) != len(T) or any(x <= 0 for x in w + T):
            raise ConfigError("positive weights and temps of equal length required", "initial.weights")
        if abs(sum(w) - 1.0) > 1e-12:
            raise ConfigError("weights must sum to 1", "initial.weights")
    if "shift" in spec:
        s = spec["shift"]
        if not isinstance(s, list) or len(s) != 3:
            raise ConfigError("expected a 3-vector", "initial.shift")
        [_num(x, "initial.shift") for x in s]
    return copy.deepcopy(spec)


def parse_config(raw: dict | str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Validate a config (dict or JSON file path), fill defaults, and freeze it."""
    if raw is None:
        raw = {}
    elif isinstance(raw, (str, Path)):
        path = Path(raw)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = copy.deepcopy(raw)
    for key, value in (overrides or {}).items():
        _set_path(raw, key, value)
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError("unknown key", sorted(unknown)[0])

    experiment = raw.get("experiment", "ness")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"must be one of {EXPERIMENTS}", "experiment")
    gamma = _num(raw.get("gamma", 0.5), "gamma")
    if not 0.0 < gamma < 1.0:
        raise ConfigError(f"gamma must lie in (0, 1), got {gamma}", "gamma")
    nodes = _num(raw.get("kernel_nodes", 64), "kernel_nodes", int)
    if nodes < 16:
        raise ConfigError("must be >= 16", "kernel_nodes")
    kernel = _check_kernel(raw.get("kernel", {"kind": "isotropic"}), nodes)
    default_res = JUMP_DEFAULT if experiment == "entropy" else MIXTURE_DEFAULT
    reservoir = _check_reservoir(raw.get("reservoir", default_res), experiment)

    grid = _section(raw.get("grid"), {"n": 2048, "r_max": 16.0}, "grid")
    grid["n"] = _num(grid["n"], "grid.n", int)
    grid["r_max"] = _num(grid["r_max"], "grid.r_max")
    if grid["n"] < 16:
        raise ConfigError("must be >= 16", "grid.n")
    if grid["r_max"] <= 0:
        raise ConfigError("must be positive", "grid.r_max")

    numerics = _section(raw.get("numerics"), NUMERICS_DEFAULTS[experiment], "numerics")
    for key in ("dt", "t_end", "tol"):
        numerics[key] = _num(numerics[key], f"numerics.{key}")
        if numerics[key] <= 0:
            raise ConfigError("must be positive", f"numerics.{key}")
    for key in ("max_iter", "record_every"):
        numerics[key] = _num(numerics[key], f"numerics.{key}", int)
        if numerics[key] < 1:
            raise ConfigError("must be >= 1", f"numerics.{key}")
    dt_cap = 0.05 if experiment == "dsmc" else 0.25
    if numerics["dt"] > dt_cap:
        raise ConfigError(f"must be <= {dt_cap}", "numerics.dt")
    if numerics["scheme"] not in SCHEMES:
        raise ConfigError(f"must be one of {SCHEMES}", "numerics.scheme")

    initial = _check_initial(raw.get("initial", INITIAL_DEFAULTS[experiment]), experiment)
    dsmc = _section(raw.get("dsmc"), DSMC_SECTION, "dsmc")
    dsmc["n_particles"] = _num(dsmc["n_particles"], "dsmc.n_particles", int)
    dsmc["replicas"] = _num(dsmc["replicas"], "dsmc.replicas", int)
    if dsmc["n_particles"] < 2:
        raise ConfigError("must be >= 2", "dsmc.n_particles")
    if dsmc["replicas"] < 1:
        raise ConfigError("must be >= 1", "dsmc.replicas")
    dsmc["workers"] = _num(dsmc["workers"], "dsmc.workers", int)
    if dsmc["workers"] < 1:
        raise ConfigError("must be >= 1", "dsmc.workers")
    if not isinstance(dsmc["snapshot_times"], list):
        raise ConfigError("expected a list", "dsmc.snapshot_times")
    dsmc["snapshot_times"] = [_num(t, "dsmc.snapshot_times") for t in dsmc["snapshot_times"]]

    validate = _section(raw.get("validate"), {"scale": "full", "criteria": list(range(1, 12))}, "validate")
    if validate["scale"] not in ("full", "quick"):
        raise ConfigError("must be 'full' or 'quick'", "validate.scale")
    crit = validate["criteria"]
    if not isinstance(crit, list) or not crit:
        raise ConfigError("expected a nonempty list of criterion numbers", "validate.criteria")
    validate["criteria"] = sorted({_num(c, "validate.criteria", int) for c in crit})
    if not all(1 <= c <= 11 for c in validate["criteria"]):
        raise ConfigError("criterion numbers run from 1 to 11", "validate.criteria")

    seed = _num(raw.get("seed", 0), "seed", int)
    if not 0 <= seed < 2**64:
        raise ConfigError("must be an unsigned 64-bit integer", "seed")
    output_dir = raw.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise ConfigError("expected a path string", "output_dir")

    return RunConfig(
        experiment=experiment,
        gamma=gamma,
        kernel=kernel,
        kernel_nodes=nodes,
        reservoir=reservoir,
        grid=grid,
        numerics=numerics,
        initial=initial,
        dsmc=dsmc,
        validate=validate,
        seed=seed,
        output_dir=output_dir,
    )


def _set_path(raw: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = raw
    for p in parts[:-1]:
        nxt = node.get(p)
        if nxt is None:
            nxt = node[p] = {}
        elif not isinstance(nxt, dict):
            raise ConfigError("cannot set a key below a non-object", dotted)
        node = nxt
    node[parts[-1]] = value


def parse_override(text: str) -> tuple[str, object]:
    """Split ``key=value``; the value is read as JSON when possible, else as a string."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, value = text.split("=", 1)
    try:
        return key.strip(), json.loads(value)
    except json.JSONDecodeError:
        return key.strip(), value
