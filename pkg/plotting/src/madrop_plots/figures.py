"""Figure renderers for sweep results.

All figures are pure functions of the parsed rows: fixed styles, fixed
ordering of groups, no timestamps, so re-rendering the same CSV yields an
identical file.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import SweepRow

FIGURE_KINDS = ("energy_vs_theta", "surface_BN", "delta_bars", "scheme_compare")

_ENERGY_LABEL = r"$E_b/N_0$ [dB]"
_THETA_LABEL = "target average drop probability"


def _save(fig, out_path: str) -> None:
    fig.savefig(out_path, dpi=144, metadata={"Software": "madrop-plot"})
    plt.close(fig)


def _curve(rows: list[SweepRow]):
    pts = sorted((r.theta_tar, r.eb_n0_db) for r in rows)
    return [p[0] for p in pts], [p[1] for p in pts]


def energy_vs_theta(rows: list[SweepRow], out_path: str) -> None:
    """Energy against the drop budget, one curve per buffer size.

    When the limiting drop rate is available, each curve gets a marker at
    its knee: beyond that budget the curve is flat by construction.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    for B in sorted({r.B for r in rows}):
        group = [r for r in rows if r.B == B]
        xs, ys = _curve(group)
        (line,) = ax.plot(xs, ys, marker="o", markersize=3.5, label=f"B = {B}")
        knees = [r.theta_lim for r in group if r.theta_lim is not None]
        if knees:
            knee = float(np.median(knees))
            if xs[0] <= knee <= xs[-1]:
                ax.plot([knee], [np.interp(knee, xs, ys)], marker="D",
                        markersize=9, mfc="none", mec=line.get_color(),
                        mew=1.6, linestyle="none")
    ax.set_xlabel(_THETA_LABEL)
    ax.set_ylabel(_ENERGY_LABEL)
    ax.grid(alpha=0.3)
    ax.legend(title=f"N = {rows[0].N}" if len({r.N for r in rows}) == 1 else None)
    fig.tight_layout()
    _save(fig, out_path)


def surface_BN(rows: list[SweepRow], out_path: str) -> None:
    """Energy surface over buffer size and the successive-drop bound."""
    thetas = sorted({r.theta_tar for r in rows})
    fig = plt.figure(figsize=(6.4 * len(thetas), 5.2))
    for i, theta in enumerate(thetas, start=1):
        sub = [r for r in rows if r.theta_tar == theta]
        bs = sorted({r.B for r in sub})
        ns = sorted({r.N for r in sub})
        grid = np.full((len(ns), len(bs)), np.nan)
        for r in sub:
            grid[ns.index(r.N), bs.index(r.B)] = r.eb_n0_db
        ax = fig.add_subplot(1, len(thetas), i, projection="3d")
        bb, nn = np.meshgrid(bs, ns)
        ax.plot_surface(bb, nn, grid, cmap="viridis", edgecolor="k",
                        linewidth=0.3)
        ax.set_xlabel("B")
        ax.set_ylabel("N")
        ax.set_zlabel(_ENERGY_LABEL)
        ax.set_title(f"drop budget = {theta:g}")
    fig.tight_layout()
    _save(fig, out_path)


def delta_bars(rows: list[SweepRow], out_path: str) -> None:
    """Optimizer budget-exploitation slack, in percent, grouped by (B, N)."""
    usable = [r for r in rows if r.delta_measure is not None]
    if not usable:
        raise ValueError("delta_bars needs rows with a delta_measure column; "
                         "run the sweep with theta_lim enabled")
    bs = sorted({r.B for r in usable})
    ns = sorted({r.N for r in usable})
    width = 0.8 / len(ns)
    fig, ax = plt.subplots(figsize=(7.0, 4.4))
    for j, N in enumerate(ns):
        heights = []
        for B in bs:
            vals = [r.delta_measure for r in usable if r.B == B and r.N == N]
            heights.append(100.0 * float(np.mean(vals)) if vals else np.nan)
        offset = (j - (len(ns) - 1) / 2) * width
        ax.bar(np.arange(len(bs)) + offset, heights, width=width,
               label=f"N = {N}")
    ax.set_xticks(np.arange(len(bs)), [str(b) for b in bs])
    ax.set_xlabel("buffer size B")
    ax.set_ylabel(r"$\Delta$ [%]")
    ax.grid(axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, out_path)


def scheme_compare(rows: list[SweepRow], out_path: str) -> None:
    """Energy against the drop budget, one curve per scheduling scheme."""
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    for scheme in sorted({r.scheme for r in rows}):
        xs, ys = _curve([r for r in rows if r.scheme == scheme])
        ax.plot(xs, ys, marker="s", markersize=3.5, label=scheme)
    ax.set_xlabel(_THETA_LABEL)
    ax.set_ylabel(_ENERGY_LABEL)
    ax.grid(alpha=0.3)
    ax.legend(title="scheme")
    fig.tight_layout()
    _save(fig, out_path)


RENDERERS = {
    "energy_vs_theta": energy_vs_theta,
    "surface_BN": surface_BN,
    "delta_bars": delta_bars,
    "scheme_compare": scheme_compare,
}


def render(kind: str, rows: list[SweepRow], out_path: str) -> None:
    if kind not in RENDERERS:
        raise ValueError(f"unknown figure kind {kind!r}; "
                         f"expected one of {sorted(RENDERERS)}")
    RENDERERS[kind](rows, out_path)
