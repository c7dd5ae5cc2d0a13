"""Render bound traces and parameter sweeps to image files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_trace(rows, out_path: str, title: str = "") -> None:
    """Step plot of the lower/upper bound trajectory over time.

    ``rows`` are (time_s, lb, ub, nodes, accepted) tuples as written to the
    trace CSV; missing upper bounds (no incumbent yet) are skipped.
    """
    times = [r[0] for r in rows]
    lbs = [r[1] for r in rows]
    ub_pts = [(r[0], r[2]) for r in rows if r[2] is not None]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.step(times, lbs, where="post", label="lower bound", color="black")
    if ub_pts:
        ax.step([p[0] for p in ub_pts], [p[1] for p in ub_pts],
                where="post", label="upper bound", color="tab:red",
                linestyle="-.")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("objective bound")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_gamma_sweep(rows, out_path: str, title: str = "") -> None:
    """Bounds and acceptance counts against the give-up parameter.

    ``rows`` are (gamma, lb, ub, gap, acc) tuples as written to the sweep CSV.
    """
    gammas = [r[0] for r in rows]
    lbs = [r[1] for r in rows]
    ubs = [r[2] for r in rows]
    accs = [r[4] for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(gammas, ubs, "o-", color="tab:red", label="upper bound")
    ax1.plot(gammas, lbs, "s-", color="black", label="lower bound")
    ax1.set_ylabel("objective bound")
    ax1.legend()
    ax2.plot(gammas, accs, "d-", color="tab:blue")
    ax2.set_ylabel("accepted repairs")
    ax2.set_xlabel("gamma")
    if title:
        ax1.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
