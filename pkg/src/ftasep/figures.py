"""Figure rendering for experiment reports.

Each experiment gets one or two PNGs next to its CSV output.  Everything
draws through the Agg backend so headless runs work; figures are a view of
the delimited data, never an extra source of numbers.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

DPI = 150


def render(experiment: str, tables: dict, summary: dict, out_dir: Path) -> list[str]:
    """Write the figures for one experiment; return the file names."""
    fn = _RENDERERS.get(experiment)
    if fn is None:
        return []
    return fn(tables, summary, out_dir)


def _save(fig, out_dir: Path, name: str) -> str:
    fig.savefig(out_dir / name, dpi=DPI)
    plt.close(fig)
    return name


def _render_simulate(tables, summary, out_dir):
    header, rows = tables["trajectory"]
    col = {name: i for i, name in enumerate(header)}
    by_trial = defaultdict(list)
    for r in rows:
        by_trial[r[col["trial"]]].append(r)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4), constrained_layout=True)
    for trial, trows in sorted(by_trial.items()):
        ts = [r[col["time"]] for r in trows]
        n_tot = max(
            r[col["n11"]] + r[col["n10"]] + r[col["n01"]] + r[col["n00"]] for r in trows
        )
        ax1.plot(ts, [r[col["n11"]] / n_tot for r in trows], alpha=0.7, lw=1)
        ax2.plot(ts, [r[col["N_t"]] for r in trows], alpha=0.7, lw=1)
    ax1.set_xlabel("t")
    ax1.set_ylabel("f11")
    ax1.set_title("adjacent-pair fraction")
    ax2.set_xlabel("t")
    ax2.set_ylabel("N_t")
    ax2.set_title("crossings of bond (0,1)")
    return [_save(fig, out_dir, "trajectory.png")]


def _render_ring_exact(tables, summary, out_dir):
    header, rows = tables["stationary"]
    col = {name: i for i, name in enumerate(header)}
    rec_rows = [r for r in rows if r[col["recurrent"]] == 1]
    rec_rows.sort(key=lambda r: -r[col["probability"]])
    labels = [r[col["state"]] for r in rec_rows]
    probs = [r[col["probability"]] for r in rec_rows]
    fig, ax = plt.subplots(figsize=(max(4, 0.3 * len(labels)), 3.2), constrained_layout=True)
    ax.bar(range(len(probs)), probs)
    if labels and len(labels) <= 40:
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=90, fontsize=6)
    n = len(probs)
    if n:
        ax.axhline(1.0 / n, color="k", ls="--", lw=0.8, label="uniform")
        ax.legend()
    ax.set_ylabel("stationary probability")
    ax.set_title(f"recurrent states, L={summary['L']} k={summary['k']}")
    return [_save(fig, out_dir, "stationary.png")]


def _render_invariance(tables, summary, out_dir):
    header, rows = tables["invariance"]
    col = {name: i for i, name in enumerate(header)}
    fig, ax = plt.subplots(figsize=(6, 3.4), constrained_layout=True)
    by_rho = defaultdict(list)
    for r in rows:
        by_rho[r[col["rho"]]].append(abs(r[col["generator_expectation"]]))
    for rho, vals in sorted(by_rho.items()):
        ax.semilogy(range(len(vals)), [max(v, 1e-20) for v in vals], ".", ms=3,
                    label=f"rho={rho}")
    ax.axhline(summary["tolerance"], color="r", ls="--", lw=0.8, label="tolerance")
    ax.set_xlabel("cylinder indicator index")
    ax.set_ylabel("|generator expectation|")
    ax.legend(fontsize=7)
    return [_save(fig, out_dir, "invariance.png")]


def _render_limit_table(tables, summary, out_dir):
    header, rows = tables["limit_table"]
    nonzero = [(p, v) for p, v in rows if v > 0 and len(p) <= 6]
    fig, ax = plt.subplots(figsize=(max(5, 0.18 * len(nonzero)), 3.4), constrained_layout=True)
    ax.bar(range(len(nonzero)), [v for _, v in nonzero])
    ax.set_xticks(range(len(nonzero)))
    ax.set_xticklabels([p for p, _ in nonzero], rotation=90, fontsize=5)
    ax.set_ylabel("limit probability")
    ax.set_title(f"subcritical limit law, rho={summary['rho']}")
    return [_save(fig, out_dir, "limit_table.png")]


def _render_critical(tables, summary, out_dir):
    _, decay = tables["pair_decay"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4), constrained_layout=True)
    ts = [r[0] for r in decay]
    ax1.loglog(ts, [max(r[1], 1e-6) for r in decay], "o-", ms=3, label="f11")
    ax1.loglog(ts, [max(r[4], 1e-6) for r in decay], "s--", ms=3, label="f00")
    ax1.set_xlabel("t")
    ax1.set_ylabel("pair fraction")
    ax1.legend()
    even = summary["even_fraction"]
    ax2.bar([0, 1], [even, 1.0 - even], tick_label=["even", "odd"])
    ax2.errorbar(
        [0],
        [even],
        yerr=[[even - summary["wilson_lo"]], [summary["wilson_hi"] - even]],
        fmt="none",
        ecolor="k",
        capsize=4,
    )
    ax2.axhline(0.5, color="k", ls="--", lw=0.8)
    ax2.set_ylabel("absorbed parity fraction")
    return [_save(fig, out_dir, "critical_absorption.png")]


def _render_freezing(tables, summary, out_dir):
    header, rows = tables["freezing"]
    col = {name: i for i, name in enumerate(header)}
    times = [
        r[col["freeze_time"]]
        for r in rows
        if r[col["verdict"]] == "frozen" and r[col["freeze_time"]] != ""
    ]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4), constrained_layout=True)
    if times:
        ax1.hist(times, bins=30)
    ax1.set_xlabel("freezing time of site 0")
    ax1.set_ylabel("trials")
    verdicts = defaultdict(int)
    for r in rows:
        verdicts[r[col["verdict"]]] += 1
    ax2.bar(range(len(verdicts)), list(verdicts.values()),
            tick_label=list(verdicts.keys()))
    ax2.set_ylabel("trials")
    ax2.set_title(f"rho={summary['rho']}")
    return [_save(fig, out_dir, "freezing_scan.png")]


def _render_subcritical(tables, summary, out_dir):
    header, rows = tables["compare"]
    col = {name: i for i, name in enumerate(header)}
    fig, ax = plt.subplots(figsize=(max(5, 0.35 * len(rows)), 3.6), constrained_layout=True)
    xs = range(len(rows))
    ax.errorbar(
        xs,
        [r[col["observed"]] for r in rows],
        yerr=[3 * r[col["stderr"]] for r in rows],
        fmt="o",
        ms=3,
        capsize=3,
        label="absorbed rings (3 se)",
    )
    ax.plot(xs, [r[col["expected"]] for r in rows], "_", ms=12, color="r",
            label="exact recursion")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([r[col["pattern"]] for r in rows], rotation=90, fontsize=6)
    ax.set_ylabel("word probability")
    ax.set_title(f"rho={summary['rho']}, L={summary['L']}")
    ax.legend(fontsize=7)
    return [_save(fig, out_dir, "subcritical_compare.png")]


_RENDERERS = {
    "simulate": _render_simulate,
    "ring-exact": _render_ring_exact,
    "invariance-check": _render_invariance,
    "limit-table": _render_limit_table,
    "critical-absorption": _render_critical,
    "freezing-scan": _render_freezing,
    "subcritical-compare": _render_subcritical,
}
