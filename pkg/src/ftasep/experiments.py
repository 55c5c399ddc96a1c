"""Reproducible experiment orchestration for the ftasep CLI.

An experiment is fully described by an :class:`ExperimentConfig`; running it
writes a manifest, experiment-specific CSV tables, a JSON summary, and (by
default) rendered figures next to the delimited output.  Outputs are a pure
function of (config, seed): trials map to streams (seed, trial index),
workers share nothing, and aggregation is by trial index, so reruns with a
different worker count produce byte-identical CSV payloads.  Files are
written into a temporary sibling directory and moved over only on success.

Config files are strict JSON mirrors of ExperimentConfig: unknown keys are
errors (reported with the line they appear on), and per-experiment
parameter choices are validated before any work starts.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    FreezeProtocol,
    SamplingPlan,
    SimState,
    StopRule,
    freezing_time_origin,
    run_until,
)
from .lattice import Configuration
from .limits import (
    compare_final_frequencies,
    consistency_check,
    critical_absorption_trial,
    default_decay_checkpoints,
    limit_table,
    subcritical_absorb_trial,
)
from .measures import (
    CylinderFunction,
    NumericalCheckError,
    bernoulli_sample,
    generator_expectation,
    maximal_island_states,
    mu_word_measure,
    ring_generator_build,
    stationary_and_classes,
)
from .rng import RngStream
from .stats import wilson_interval

EXPERIMENTS = (
    "simulate",
    "ring-exact",
    "invariance-check",
    "limit-table",
    "critical-absorption",
    "freezing-scan",
    "subcritical-compare",
)

INVARIANCE_TOL = 1e-12
UNIFORMITY_TV_TOL = 1e-9
CONSISTENCY_TOL = 1e-12


class ConfigError(ValueError):
    """Invalid experiment configuration (exit code 1)."""


class CheckFailure(RuntimeError):
    """A numerical acceptance check failed (exit code 2)."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class LatticeSpec:
    topology: str = "ring"
    L: int = 64
    k: int | None = None
    rho: float | None = None


@dataclass
class DynamicsSpec:
    t_max: float | None = None
    max_events: int | None = None
    snapshot_stride: int = 0


@dataclass
class OutputSpec:
    dir: str = "out"
    figures: bool = True
    snapshots: bool = False


@dataclass
class ExperimentConfig:
    experiment: str
    lattice: LatticeSpec = field(default_factory=LatticeSpec)
    dynamics: DynamicsSpec = field(default_factory=DynamicsSpec)
    trials: int = 1
    seed: int = 0
    output: OutputSpec = field(default_factory=OutputSpec)
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


_SECTION_FIELDS = {
    "lattice": {"topology", "L", "k", "rho"},
    "dynamics": {"t_max", "max_events", "snapshot_stride"},
    "output": {"dir", "figures", "snapshots"},
}
_TOP_FIELDS = {"experiment", "lattice", "dynamics", "trials", "seed", "output", "params"}

_PARAM_FIELDS = {
    "simulate": set(),
    "ring-exact": set(),
    "invariance-check": {"rho_grid", "max_window"},
    "limit-table": {"n_max"},
    "critical-absorption": set(),
    "freezing-scan": {"window_start", "window_max", "right_buffer", "t_max", "quiet_fraction"},
    "subcritical-compare": {"n_pattern_max"},
}


def _key_line(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def _reject_unknown(raw: dict, allowed: set, where: str, text: str, path: str) -> None:
    for key in raw:
        if key not in allowed:
            line = _key_line(text, key)
            loc = f"{path}:{line}" if line else path
            raise ConfigError(f"{loc}: unknown key {key!r} in {where}")


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and strictly validate a JSON experiment config."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return config_from_dict(raw, text=text, source=str(path))


def config_from_dict(raw: dict, text: str = "", source: str = "<config>") -> ExperimentConfig:
    _reject_unknown(raw, _TOP_FIELDS, "experiment config", text, source)
    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"{source}: experiment must be one of {', '.join(EXPERIMENTS)}; got {experiment!r}"
        )
    cfg = ExperimentConfig(experiment=experiment)
    if "lattice" in raw:
        _reject_unknown(raw["lattice"], _SECTION_FIELDS["lattice"], "lattice", text, source)
        cfg.lattice = LatticeSpec(**raw["lattice"])
    if "dynamics" in raw:
        _reject_unknown(raw["dynamics"], _SECTION_FIELDS["dynamics"], "dynamics", text, source)
        cfg.dynamics = DynamicsSpec(**raw["dynamics"])
    if "output" in raw:
        _reject_unknown(raw["output"], _SECTION_FIELDS["output"], "output", text, source)
        cfg.output = OutputSpec(**raw["output"])
    if "params" in raw:
        if not isinstance(raw["params"], dict):
            raise ConfigError(f"{source}: params must be an object")
        _reject_unknown(
            raw["params"], _PARAM_FIELDS[experiment], f"{experiment} params", text, source
        )
        cfg.params = dict(raw["params"])
    cfg.trials = int(raw.get("trials", cfg.trials))
    cfg.seed = int(raw.get("seed", cfg.seed))
    validate_config(cfg)
    return cfg


def default_config(experiment: str) -> ExperimentConfig:
    """Built-in config used when the CLI is run without a file."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    cfg = ExperimentConfig(experiment=experiment)
    if experiment == "simulate":
        cfg.lattice = LatticeSpec("ring", 64, k=32)
        cfg.dynamics = DynamicsSpec(t_max=200.0)
        cfg.trials = 4
    elif experiment == "ring-exact":
        cfg.lattice = LatticeSpec("ring", 8, k=5)
    elif experiment == "invariance-check":
        cfg.params = {"rho_grid": [0.6, 0.75, 0.9], "max_window": 5}
    elif experiment == "limit-table":
        cfg.lattice = LatticeSpec("ring", 0, rho=0.3)
        cfg.params = {"n_max": 10}
    elif experiment == "critical-absorption":
        cfg.lattice = LatticeSpec("ring", 20, k=10)
        cfg.trials = 200
    elif experiment == "freezing-scan":
        cfg.lattice = LatticeSpec("segment", 0, rho=0.3)
        cfg.trials = 50
    elif experiment == "subcritical-compare":
        cfg.lattice = LatticeSpec("ring", 1000, rho=0.3)
        cfg.trials = 50
        cfg.params = {"n_pattern_max": 3}
    validate_config(cfg)
    return cfg


def _ring_k(cfg: ExperimentConfig) -> int:
    lat = cfg.lattice
    if lat.k is not None:
        return int(lat.k)
    if lat.rho is not None:
        return round(lat.rho * lat.L)
    raise ConfigError(f"{cfg.experiment}: lattice needs k or rho")


def validate_config(cfg: ExperimentConfig) -> None:
    """Check cross-field consistency for the chosen experiment."""
    if cfg.trials < 1:
        raise ConfigError("trials must be positive")
    e = cfg.experiment
    lat = cfg.lattice
    if lat.topology not in ("ring", "segment"):
        raise ConfigError(f"unknown topology {lat.topology!r}")
    if e == "simulate":
        if lat.L < 3:
            raise ConfigError("simulate needs L >= 3")
        if lat.topology == "ring":
            k = _ring_k(cfg)
            if not 0 <= k <= lat.L:
                raise ConfigError(f"k={k} outside [0, {lat.L}]")
        elif lat.rho is None:
            raise ConfigError("segment simulate samples a product law; set rho")
        if cfg.dynamics.t_max is None and cfg.dynamics.max_events is None:
            raise ConfigError("simulate needs t_max or max_events (open-ended runs hang)")
    elif e == "ring-exact":
        if lat.topology != "ring":
            raise ConfigError("ring-exact runs on rings")
        _ring_k(cfg)
    elif e == "invariance-check":
        grid = cfg.params.get("rho_grid", [0.6, 0.75, 0.9])
        if not all(0.5 < r < 1.0 for r in grid):
            raise ConfigError("invariance-check rho_grid must lie in (1/2, 1)")
        if not 1 <= int(cfg.params.get("max_window", 5)) <= 8:
            raise ConfigError("max_window must lie in [1, 8]")
    elif e == "limit-table":
        if lat.rho is None or not 0.0 < lat.rho < 0.5:
            raise ConfigError("limit-table needs lattice.rho in (0, 1/2)")
        if not 1 <= int(cfg.params.get("n_max", 10)) <= 24:
            raise ConfigError("limit-table n_max must lie in [1, 24]")
    elif e == "critical-absorption":
        if lat.topology != "ring" or lat.L % 2 != 0:
            raise ConfigError("critical-absorption needs a ring with even L")
        k = _ring_k(cfg)
        if k != lat.L // 2:
            raise ConfigError(f"critical-absorption requires k = L/2, got k={k}")
    elif e == "freezing-scan":
        if lat.rho is None or not 0.0 < lat.rho < 0.5:
            raise ConfigError("freezing-scan needs lattice.rho in (0, 1/2)")
    elif e == "subcritical-compare":
        if lat.topology != "ring":
            raise ConfigError("subcritical-compare runs on rings")
        if lat.rho is None or not 0.0 < lat.rho < 0.5:
            raise ConfigError("subcritical-compare needs lattice.rho in (0, 1/2)")
        if lat.L < 10:
            raise ConfigError("subcritical-compare needs L >= 10")


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimatorResult:
    """Point estimate with a Wilson interval and a z-score vs a target."""

    point: float
    lo: float
    hi: float
    trials: int
    z: float

    def __post_init__(self):
        if not self.lo <= self.point <= self.hi:
            raise ValueError("interval must contain the point estimate")


def estimate_proportion(
    successes: int, trials: int, target: float | None = None, confidence: float = 0.95
) -> EstimatorResult:
    """Wilson interval for a proportion, optionally scored against a target."""
    if trials < 1:
        raise ValueError("trials must be positive")
    p = successes / trials
    lo, hi = wilson_interval(successes, trials, confidence)
    if target is not None and 0.0 < target < 1.0:
        z = (p - target) / math.sqrt(target * (1.0 - target) / trials)
    else:
        z = math.nan
    return EstimatorResult(p, lo, hi, trials, z)


# ---------------------------------------------------------------------------
# per-trial workers (top level: picklable for the process pool)
# ---------------------------------------------------------------------------


def _simulate_trial(args):
    cfg_d, trial = args
    cfg = ExperimentConfig(**{**cfg_d, "lattice": LatticeSpec(**cfg_d["lattice"]),
                              "dynamics": DynamicsSpec(**cfg_d["dynamics"]),
                              "output": OutputSpec(**cfg_d["output"])})
    stream = RngStream(cfg.seed, trial)
    lat = cfg.lattice
    if lat.topology == "ring":
        k = _ring_k(cfg)
        occ = np.zeros(lat.L, dtype=np.uint8)
        occ[stream.generator.permutation(lat.L)[:k]] = 1
        initial = Configuration.ring(bytes(occ.tolist()))
        state = SimState(initial)
    else:
        initial = bernoulli_sample(lat.rho, lat.L, stream, origin=-(lat.L // 2))
        state = SimState(initial, exit_right=True)
    dyn = cfg.dynamics
    checkpoints = None
    if dyn.t_max is not None:
        checkpoints = tuple(dyn.t_max * j / 32 for j in range(1, 33))
    plan = SamplingPlan(
        checkpoints=checkpoints,
        event_stride=dyn.snapshot_stride,
        snapshots=cfg.output.snapshots,
    )
    rec = run_until(state, StopRule(dyn.t_max, dyn.max_events), stream, plan)
    rows = [(trial,) + r for r in rec.to_csv_rows()]
    snaps = None
    if rec.snapshots is not None:
        snaps = [(trial, t, c.to_string()) for t, c in rec.snapshots]
    return rows, snaps


def _critical_trial(args):
    L, seed, trial, checkpoints = args
    out = critical_absorption_trial(L, RngStream(seed, trial), checkpoints)
    return (
        out.parity,
        out.absorption_time,
        out.events,
        out.f11.tolist(),
        out.f10.tolist(),
        out.f01.tolist(),
        out.f00.tolist(),
    )


def _freezing_trial(args):
    rho, seed, trial, proto_d = args
    proto = FreezeProtocol(**proto_d)
    stream = RngStream(seed, trial)
    initial = bernoulli_sample(
        rho, 2 * proto.window_max + 1, stream, origin=-proto.window_max
    )
    rep = freezing_time_origin(initial, stream, proto)
    return (
        rep.verdict,
        rep.conclusive,
        rep.freeze_time,
        rep.window,
        rep.x_r,
        len(rep.runs),
    )


def _subcritical_trial(args):
    L, k, seed, trial = args
    final = subcritical_absorb_trial(L, k, RngStream(seed, trial))
    return final.to_string()


def _map_trials(worker, argses, workers: int):
    if workers <= 1:
        return [worker(a) for a in argses]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, argses, chunksize=max(1, len(argses) // (4 * workers))))


# ---------------------------------------------------------------------------
# experiment bodies: return (tables, summary, passed)
# tables: name -> (header tuple, list of row tuples)
# ---------------------------------------------------------------------------


def _run_simulate(cfg: ExperimentConfig, workers: int):
    argses = [(cfg.to_dict(), t) for t in range(cfg.trials)]
    results = _map_trials(_simulate_trial, argses, workers)
    rows = [r for res in results for r in res[0]]
    tables = {
        "trajectory": (("trial", "time", "n11", "n10", "n01", "n00", "n_active", "N_t"), rows)
    }
    if cfg.output.snapshots:
        snap_rows = [s for res in results for s in (res[1] or [])]
        tables["snapshots"] = (("trial", "time", "config"), snap_rows)
    summary = {"trials": cfg.trials, "rows": len(rows)}
    return tables, summary, True


def _run_ring_exact(cfg: ExperimentConfig, workers: int):
    L, k = cfg.lattice.L, _ring_k(cfg)
    gen = ring_generator_build(L, k)
    analysis = stationary_and_classes(gen)
    rows = []
    for ci, members in enumerate(analysis.classes):
        rec = analysis.recurrent[ci]
        pi = analysis.stationary.get(ci)
        for j, i in enumerate(members):
            rows.append(
                (
                    gen.states[i].to_string(),
                    ci,
                    int(rec),
                    float(pi[j]) if pi is not None else 0.0,
                )
            )
    rows.sort()
    uniform_initial = np.full(gen.n_states, 1.0 / gen.n_states)
    absorb = analysis.absorption_probs(uniform_initial)
    class_rows = [
        (
            ci,
            len(analysis.classes[ci]),
            int(analysis.recurrent[ci]),
            gen.states[analysis.classes[ci][0]].to_string(),
            float(absorb.get(ci, 0.0)),
        )
        for ci in range(len(analysis.classes))
    ]
    summary: dict = {
        "L": L,
        "k": k,
        "n_states": gen.n_states,
        "class_count": len(analysis.classes),
        "recurrent_count": len(analysis.recurrent_classes),
        "max_residual": max(analysis.residuals.values(), default=0.0),
    }
    passed = True
    if 2 * k > L:
        targets = {c.occupancy for c in maximal_island_states(L, k)}
        rec = analysis.recurrent_classes
        summary["maximal_island_count"] = len(targets)
        if len(rec) == 1:
            members = analysis.classes[rec[0]]
            member_set = {gen.states[i].occupancy for i in members}
            pi = analysis.stationary[rec[0]]
            tv = 0.5 * float(np.abs(pi - 1.0 / len(members)).sum())
            summary["tv_from_uniform"] = tv
            summary["class_matches_maximal_islands"] = member_set == targets
            passed = tv <= UNIFORMITY_TV_TOL and member_set == targets
        else:
            summary["tv_from_uniform"] = None
            passed = False
    tables = {
        "stationary": (("state", "class", "recurrent", "probability"), rows),
        "classes": (("class", "n_states", "recurrent", "example_state", "prob_from_uniform"),
                    class_rows),
    }
    summary["pass"] = passed
    return tables, summary, passed


def _run_invariance_check(cfg: ExperimentConfig, workers: int):
    grid = cfg.params.get("rho_grid", [0.6, 0.75, 0.9])
    max_window = int(cfg.params.get("max_window", 5))
    rows = []
    worst = 0.0
    for rho in grid:
        measure = mu_word_measure(rho)
        for n in range(1, max_window + 1):
            for w in range(2**n):
                word = format(w, f"0{n}b")
                val = generator_expectation(measure, CylinderFunction.indicator(word))
                worst = max(worst, abs(val))
                rows.append((rho, n, word, val))
    passed = worst <= INVARIANCE_TOL
    summary = {
        "rho_grid": list(grid),
        "max_window": max_window,
        "max_abs_expectation": worst,
        "tolerance": INVARIANCE_TOL,
        "pass": passed,
    }
    return {"invariance": (("rho", "window", "word", "generator_expectation"), rows)}, summary, passed


def _run_limit_table(cfg: ExperimentConfig, workers: int):
    rho = cfg.lattice.rho
    n_max = int(cfg.params.get("n_max", 10))
    table = limit_table(rho, n_max)
    report = consistency_check(table)
    rows = []
    for n in range(1, n_max + 1):
        for w in range(2**n):
            word = format(w, f"0{n}b")
            rows.append((word, table.prob(word)))
    passed = report.ok(CONSISTENCY_TOL)
    summary = {
        "rho": rho,
        "n_max": n_max,
        "max_right_violation": report.max_right,
        "max_left_violation": report.max_left,
        "min_entry": report.min_entry,
        "max_entry": report.max_entry,
        "tolerance": CONSISTENCY_TOL,
        "pass": passed,
    }
    return {"limit_table": (("pattern", "probability"), rows)}, summary, passed


def _run_critical_absorption(cfg: ExperimentConfig, workers: int):
    L = cfg.lattice.L
    checkpoints = default_decay_checkpoints(L)
    argses = [(L, cfg.seed, t, checkpoints) for t in range(cfg.trials)]
    results = _map_trials(_critical_trial, argses, workers)
    ab_rows = [
        (t, r[0], r[1], r[2]) for t, r in enumerate(results)
    ]
    f11 = np.mean([r[3] for r in results], axis=0)
    f10 = np.mean([r[4] for r in results], axis=0)
    f01 = np.mean([r[5] for r in results], axis=0)
    f00 = np.mean([r[6] for r in results], axis=0)
    decay_rows = [
        (checkpoints[i], float(f11[i]), float(f10[i]), float(f01[i]), float(f00[i]))
        for i in range(len(checkpoints))
    ]
    even = sum(1 for r in results if r[0] == "even")
    est = estimate_proportion(even, cfg.trials, target=0.5)
    summary = {
        "L": L,
        "trials": cfg.trials,
        "even_fraction": est.point,
        "wilson_lo": est.lo,
        "wilson_hi": est.hi,
        "z_vs_half": est.z,
        "mean_absorption_time": float(np.mean([r[1] for r in results])),
        "max_absorption_time": float(np.max([r[1] for r in results])),
    }
    tables = {
        "absorption": (("trial", "parity", "t_abs", "events"), ab_rows),
        "pair_decay": (("t", "f11", "f10", "f01", "f00"), decay_rows),
    }
    return tables, summary, True


def _run_freezing_scan(cfg: ExperimentConfig, workers: int):
    rho = cfg.lattice.rho
    proto = FreezeProtocol(
        window_start=int(cfg.params.get("window_start", 64)),
        window_max=int(cfg.params.get("window_max", 512)),
        right_buffer=int(cfg.params.get("right_buffer", 16)),
        t_max=float(cfg.params.get("t_max", 400.0)),
        quiet_fraction=float(cfg.params.get("quiet_fraction", 0.25)),
    )
    proto_d = asdict(proto)
    argses = [(rho, cfg.seed, t, proto_d) for t in range(cfg.trials)]
    results = _map_trials(_freezing_trial, argses, workers)
    rows = [
        (t, r[0], int(r[1]), r[2] if r[2] is not None else "", r[3], r[4], r[5])
        for t, r in enumerate(results)
    ]
    conclusive = sum(1 for r in results if r[1])
    frozen = sum(1 for r in results if r[1] and r[0] == "frozen")
    frozen_frac = frozen / conclusive if conclusive else 0.0
    est = estimate_proportion(frozen, max(conclusive, 1))
    summary = {
        "rho": rho,
        "trials": cfg.trials,
        "conclusive": conclusive,
        "conclusive_fraction": conclusive / cfg.trials,
        "frozen_fraction_of_conclusive": frozen_frac,
        "wilson_lo": est.lo,
        "wilson_hi": est.hi,
        "protocol": proto_d,
    }
    tables = {
        "freezing": (
            ("trial", "verdict", "conclusive", "freeze_time", "window", "x_r", "runs"),
            rows,
        )
    }
    return tables, summary, True


def _run_subcritical_compare(cfg: ExperimentConfig, workers: int):
    rho, L = cfg.lattice.rho, cfg.lattice.L
    k = round(rho * L)
    n_pattern_max = int(cfg.params.get("n_pattern_max", 3))
    argses = [(L, k, cfg.seed, t) for t in range(cfg.trials)]
    finals = [Configuration.ring(s) for s in _map_trials(_subcritical_trial, argses, workers)]
    comparisons = compare_final_frequencies(rho, L, finals, n_pattern_max)
    rows = [
        (c.pattern, c.expected, c.observed, c.stderr, c.z, c.wilson_lo, c.wilson_hi)
        for c in comparisons
    ]
    finite = [abs(c.z) for c in comparisons if math.isfinite(c.z)]
    summary = {
        "rho": rho,
        "L": L,
        "trials": cfg.trials,
        "n_pattern_max": n_pattern_max,
        "max_abs_z": max(finite) if finite else 0.0,
        "patterns": [
            {
                "pattern": c.pattern,
                "expected": c.expected,
                "observed": c.observed,
                "ci": [c.wilson_lo, c.wilson_hi],
                "z": c.z if math.isfinite(c.z) else None,
            }
            for c in comparisons
        ],
        "caveat": (
            "absorbed ring states stand in for the infinite-lattice limit; "
            "expect O(1/L) finite-size bias on top of the statistical error"
        ),
    }
    tables = {
        "compare": (
            ("pattern", "expected", "observed", "stderr", "z", "wilson_lo", "wilson_hi"),
            rows,
        )
    }
    return tables, summary, True


_RUNNERS = {
    "simulate": _run_simulate,
    "ring-exact": _run_ring_exact,
    "invariance-check": _run_invariance_check,
    "limit-table": _run_limit_table,
    "critical-absorption": _run_critical_absorption,
    "freezing-scan": _run_freezing_scan,
    "subcritical-compare": _run_subcritical_compare,
}


# ---------------------------------------------------------------------------
# output writing
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


@dataclass
class RunResult:
    config: ExperimentConfig
    summary: dict
    passed: bool
    out_dir: Path
    files: list[str]


def run(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    """Execute one experiment; write manifest, CSVs, summary, figures.

    Outputs land in ``cfg.output.dir``; everything is staged in a temporary
    sibling directory first so a failed run leaves no partial files.
    Raises :class:`CheckFailure` after writing when a numerical check fails.
    """
    validate_config(cfg)
    runner = _RUNNERS[cfg.experiment]
    start = time.perf_counter()
    try:
        tables, summary, passed = runner(cfg, workers)
    except NumericalCheckError as exc:
        raise CheckFailure(str(exc)) from exc
    wall = time.perf_counter() - start

    out_dir = Path(cfg.output.dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(
        prefix=out_dir.name + ".tmp-", dir=out_dir.parent or Path(".")
    ) as tmp:
        tmp_dir = Path(tmp)
        files = []
        for name, (header, rows) in tables.items():
            fname = f"{name}.csv"
            _write_csv(tmp_dir / fname, header, rows)
            files.append(fname)
        with open(tmp_dir / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        files.append("summary.json")
        if cfg.output.figures:
            from . import figures

            files.extend(figures.render(cfg.experiment, tables, summary, tmp_dir))
        manifest = {
            "experiment": cfg.experiment,
            "config": cfg.to_dict(),
            "seed": cfg.seed,
            "trial_stream_ids": list(range(cfg.trials)),
            "workers": workers,
            "versions": _versions(),
            "wall_time_s": wall,
            "outputs": [
                {
                    "name": f,
                    "sha256": _sha256(tmp_dir / f),
                    "bytes": (tmp_dir / f).stat().st_size,
                }
                for f in sorted(files)
            ],
        }
        with open(tmp_dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        files.append("manifest.json")
        out_dir.mkdir(parents=True, exist_ok=True)
        for f in files:
            os.replace(tmp_dir / f, out_dir / f)

    result = RunResult(cfg, summary, passed, out_dir, sorted(files))
    if not passed:
        raise CheckFailure(
            f"{cfg.experiment}: numerical check failed; see {out_dir / 'summary.json'}"
        )
    return result


def _versions() -> dict:
    import matplotlib
    import numba
    import scipy

    return {
        "ftasep": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "matplotlib": matplotlib.__version__,
    }
