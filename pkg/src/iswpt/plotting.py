"""Matplotlib figure rendering for design and sweep reports.

Figures are written next to the delimited outputs; rendering is
deterministic (fixed style, Agg backend, no timestamps in metadata) so
repeated runs produce identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_PNG_META = {"Software": "iswpt"}

_METHOD_STYLE = {
    "optimal": dict(color="tab:blue", marker="o"),
    "suboptimal": dict(color="tab:orange", marker="s"),
    "randomized": dict(color="tab:green", marker="^"),
    "radar-only": dict(color="tab:red", marker="*"),
    "wpt-only": dict(color="tab:purple", marker="D"),
}


def _save(fig, path):
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def render_beampattern(path, grid_deg, pattern, desired=None, alpha=None, label=None):
    """Transmit beampattern over the angle grid, with the scaled target shape."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(grid_deg, pattern, color="tab:blue", lw=1.2,
            label=label or "beampattern")
    if desired is not None and alpha is not None:
        ax.plot(grid_deg, alpha * desired, color="tab:red", lw=1.0, ls="--",
                label="scaled target")
    ax.set_xlabel("angle (deg)")
    ax.set_ylabel("gain (W)")
    ax.set_xlim(grid_deg[0], grid_deg[-1])
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right")
    fig.tight_layout()
    _save(fig, path)


def _rows_by_method(rows):
    methods = {}
    for row in rows:
        methods.setdefault(row["method"], []).append(row)
    for rows_m in methods.values():
        rows_m.sort(key=lambda r: r["rho"])
    return methods


def render_objective_vs_rho(path, rows):
    """Weighted objective against the trade-off weight, one curve per method."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for method, rows_m in sorted(_rows_by_method(rows).items()):
        style = _METHOD_STYLE.get(method, {})
        ax.plot([r["rho"] for r in rows_m], [r["objective"] for r in rows_m],
                lw=1.2, ms=4, label=method, **style)
    ax.set_xlabel(r"weight $\rho$")
    ax.set_ylabel("objective")
    ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def render_tradeoff(path, rows):
    """Radar matching loss against total received power (the trade-off curve)."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for method, rows_m in sorted(_rows_by_method(rows).items()):
        style = _METHOD_STYLE.get(method, {})
        xs = [1e3 * r["sum_power"] for r in rows_m]
        ys = [r["L_r"] for r in rows_m]
        if method in ("radar-only", "wpt-only"):
            ax.scatter(xs, ys, s=60, label=method, zorder=3,
                       color=style.get("color"), marker=style.get("marker"))
        else:
            ax.plot(xs, ys, lw=1.2, ms=4, label=method, **style)
    ax.set_xlabel("sum received power (mW)")
    ax.set_ylabel("radar beampattern MSE")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
