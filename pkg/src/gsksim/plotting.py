"""Render PD / PFA sweep results as a line chart saved to a file."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_pd_pfa(rows: list[dict], out_path: str, title: str | None = None) -> int:
    """Plot PD (solid) and PFA (dashed) versus session length, one pair of
    series per NMSE level, and save the figure to out_path.

    rows are result records with at least L, eta_db, pd, pfa keys (strings or
    numbers).  Returns the number of series drawn.
    """
    if not rows:
        raise ValueError("no result rows to plot")
    parsed = [
        (int(float(r["L"])), float(r["eta_db"]), float(r["pd"]), float(r["pfa"]))
        for r in rows
    ]
    eta_levels = sorted({p[1] for p in parsed}, reverse=True)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    n_series = 0
    for eta_db in eta_levels:
        pts = sorted(p for p in parsed if p[1] == eta_db)
        ls = [p[0] for p in pts]
        color = ax.plot(ls, [p[2] for p in pts], marker="o", linestyle="-",
                        label=f"PD, NMSE {eta_db:g} dB")[0].get_color()
        ax.plot(ls, [p[3] for p in pts], marker="x", linestyle="--", color=color,
                label=f"PFA, NMSE {eta_db:g} dB")
        n_series += 2
    ax.set_xlabel("protocol rounds L")
    ax.set_ylabel("probability")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return n_series
