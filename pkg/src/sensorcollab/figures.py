"""Figure rendering for scenario results (PNG files next to the CSV)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_scenario"]

_STYLE = {
    "figure.figsize": (6.4, 4.2),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.markersize": 5,
}

_MARKERS = {"ccp": "o", "pccp": "s",
            "ccp_time_invariant": "^", "pccp_time_invariant": "v"}


def _ok_rows(rows, algorithm):
    out = [r for r in rows
           if r["algorithm"] == algorithm and str(r["status"]) == "ok"]
    return sorted(out, key=lambda r: float(r["grid_value"]))


def render_scenario(config, rows, trajectories=None, extras=None) -> Path | None:
    """Dispatch on the scenario name; returns the written path."""
    extras = extras or {}
    out = Path(config.out_dir) / f"{config.scenario}.png"
    with plt.rc_context(_STYLE):
        if config.scenario == "convergence_trace":
            fig = _convergence_figure(trajectories or {},
                                      extras.get("prior_trace"))
        elif config.scenario == "radius_sweep":
            fig = _radius_figure(config, rows)
        elif config.scenario == "timing_sweep":
            fig = _timing_figure(config, rows, extras.get("timing_fits", {}))
        elif config.scenario in ("correlation_sweep", "energy_sweep"):
            fig = _sweep_figure(config, rows)
        else:
            fig = _single_solve_figure(config, rows)
        if fig is None:
            return None
        fig.savefig(out, dpi=150, bbox_inches="tight")
        plt.close(fig)
    return out


def _sweep_figure(config, rows):
    fig, ax = plt.subplots()
    for algorithm in config.algorithms:
        data = _ok_rows(rows, algorithm)
        if not data:
            continue
        x = [float(r["grid_value"]) for r in data]
        ax.errorbar(x, [r["empirical_mse"] for r in data],
                    yerr=[3 * r["mse_stderr"] for r in data],
                    marker=_MARKERS.get(algorithm, "o"), capsize=3,
                    label=f"{algorithm} (MSE)")
        ax.plot(x, [r["analytic_trace"] for r in data], "--",
                alpha=0.7, label=f"{algorithm} (trace)")
    if config.scenario == "correlation_sweep":
        ax.set_xscale("log")
        ax.set_xlabel("correlation decay rate")
    else:
        ax.set_xlabel("total energy budget")
    ax.set_ylabel("estimation error")
    ax.legend(fontsize=8)
    return fig


def _radius_figure(config, rows):
    fig, (ax_mse, ax_links) = plt.subplots(
        2, 1, sharex=True, figsize=(6.4, 6.0),
        gridspec_kw={"height_ratios": [2, 1]})
    for algorithm in config.algorithms:
        data = _ok_rows(rows, algorithm)
        if not data:
            continue
        x = [float(r["grid_value"]) for r in data]
        ax_mse.errorbar(x, [r["empirical_mse"] for r in data],
                        yerr=[3 * r["mse_stderr"] for r in data],
                        marker=_MARKERS.get(algorithm, "o"), capsize=3,
                        label=algorithm)
    data = _ok_rows(rows, config.algorithms[0])
    if data:
        ax_links.plot([float(r["grid_value"]) for r in data],
                      [r["num_links"] for r in data], "k.-")
    ax_mse.set_ylabel("empirical MSE")
    ax_mse.legend(fontsize=8)
    ax_links.set_ylabel("links")
    ax_links.set_xlabel("collaboration radius")
    return fig


def _timing_figure(config, rows, fits):
    fig, ax = plt.subplots()
    for algorithm in config.algorithms:
        data = _ok_rows(rows, algorithm)
        if not data:
            continue
        links = [r["num_links"] for r in data]
        ax.loglog(links, [r["wall_ms"] for r in data],
                  marker=_MARKERS.get(algorithm, "o"), ls="-",
                  label=_fit_label(algorithm, fits))
    ax.set_xlabel("collaboration links")
    ax.set_ylabel("wall time [ms]")
    ax.legend(fontsize=8)
    return fig


def _fit_label(algorithm, fits):
    fit = fits.get(algorithm)
    if fit is None:
        return algorithm
    return f"{algorithm} (slope {fit['exponent']:.2f})"


def _convergence_figure(trajectories, prior_trace):
    if not trajectories:
        return None
    fig, axes = plt.subplots(1, len(trajectories),
                             figsize=(6.0 * len(trajectories), 4.2),
                             squeeze=False)
    for ax, (algorithm, runs) in zip(axes[0], sorted(trajectories.items())):
        for traj in runs:
            ax.plot(range(len(traj)), traj, alpha=0.6, lw=1)
        if prior_trace is not None:
            ax.axhline(prior_trace, color="k", ls=":", lw=1,
                       label="prior-only error")
            ax.legend(fontsize=8)
        ax.set_title(algorithm)
        ax.set_xlabel("iteration")
        ax.set_ylabel("objective")
    return fig


def _single_solve_figure(config, rows):
    fig, ax = plt.subplots()
    algorithms = [r["algorithm"] for r in rows]
    traces = [r["analytic_trace"] for r in rows]
    mses = [r["empirical_mse"] for r in rows]
    pos = range(len(rows))
    ax.bar([p - 0.2 for p in pos], traces, width=0.4, label="analytic trace")
    ax.bar([p + 0.2 for p in pos], mses, width=0.4, label="empirical MSE")
    ax.set_xticks(list(pos))
    ax.set_xticklabels(algorithms, rotation=15, fontsize=8)
    ax.set_ylabel("estimation error")
    ax.legend(fontsize=8)
    return fig
