"""Optional figure rendering for CLI results.

Figures are a reporting convenience layered on top of the delimited output;
the CSV/JSON tables remain the byte-deterministic artifact of record.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .table import ResultTable

__all__ = ["render_figure"]


def _floats(table: ResultTable, name: str) -> np.ndarray:
    return np.array([float(v) for v in table.column(name)], dtype=np.float64)


def _plot_thresholds(table: ResultTable, ax) -> None:
    c = _floats(table, "c")
    alpha = _floats(table, "alpha")
    for a in sorted(set(alpha.tolist())):
        mask = alpha == a
        order = np.argsort(c[mask])
        ax.plot(c[mask][order], _floats(table, "lam_left")[mask][order], label=f"left, a={a:g}")
        ax.plot(c[mask][order], _floats(table, "lam_right")[mask][order], "--", label=f"right, a={a:g}")
    ax.set_xlabel("count cutoff c")
    ax.set_ylabel("mean threshold")
    ax.legend(fontsize=7)


def _plot_rates(table: ResultTable, ax) -> None:
    p = _floats(table, "p")
    rate = _floats(table, "halt_rate")
    lo = _floats(table, "ci_low")
    hi = _floats(table, "ci_high")
    order = np.argsort(p)
    ax.errorbar(p[order], rate[order],
                yerr=[rate[order] - lo[order], hi[order] - rate[order]], fmt="o-")
    ax.set_xscale("log")
    ax.set_xlabel("success probability p")
    ax.set_ylabel("halt rate")


def _plot_audit(table: ResultTable, ax) -> None:
    labels = [f"{o}:{e}" for o, e in zip(table.column("oracle"), table.column("event"))]
    ratio = _floats(table, "ratio")
    lo = _floats(table, "ci_low")
    hi = _floats(table, "ci_high")
    bound = _floats(table, "bound")
    x = np.arange(len(labels))
    ax.errorbar(x, ratio, yerr=[ratio - lo, hi - ratio], fmt="o", label="ratio")
    ax.plot(x, bound, "r_", markersize=20, label="bound")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=20, fontsize=7)
    ax.set_ylabel("probability ratio")
    ax.legend(fontsize=7)


def _plot_sample_complexity(table: ResultTable, ax) -> None:
    t = _floats(table, "t")
    ax.plot(t, _floats(table, "mean_N"), "o-", label="mean draws")
    ax.plot(t, math.e * _floats(table, "lambda_bar"), "--", label="e * design bound")
    ax.plot(t, _floats(table, "floor"), ":", label="universal floor")
    ax.set_yscale("log")
    ax.set_xlabel("step t")
    ax.set_ylabel("evaluations")
    ax.legend(fontsize=7)


def _plot_co(table: ResultTable, ax) -> None:
    t = _floats(table, "t")
    ax.plot(t, _floats(table, "opt"), label="OPT_t")
    ax.plot(t, _floats(table, "utility"), label="published utility")
    cp = _floats(table, "checkpoint")
    jumps = t[1:][np.diff(cp) > 0]
    for j in jumps:
        ax.axvline(j, color="gray", alpha=0.2, linewidth=0.5)
    ax.set_xlabel("time t")
    ax.set_ylabel("value")
    ax.legend(fontsize=7)


def _plot_baselines(table: ResultTable, ax) -> None:
    methods = table.column("method")
    lo = _floats(table, "rejection_lo")
    hi = _floats(table, "rejection_hi")
    x = np.arange(len(methods))
    mask = ~np.isnan(lo)
    ax.bar(x[mask], hi[mask] - lo[mask], bottom=lo[mask], width=0.5)
    ax.set_yscale("log")
    ax.set_xticks(x)
    ax.set_xticklabels(methods)
    ax.set_ylabel("located rejection threshold")


_RENDERERS = {
    "thresholds": _plot_thresholds,
    "gtm-accuracy": _plot_rates,
    "privacy-audit": _plot_audit,
    "sample-complexity": _plot_sample_complexity,
    "co-demo": _plot_co,
    "compare-baselines": _plot_baselines,
}


def render_figure(table: ResultTable, experiment: str, path: str) -> None:
    """Render the experiment's standard figure next to its data file."""
    renderer = _RENDERERS.get(experiment)
    if renderer is None:
        raise ValueError(f"no figure defined for experiment {experiment!r}")
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=150)
    renderer(table, ax)
    ax.set_title(experiment)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
