"""Figures for the CLI reports, written as SVG files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["separation_figure", "cq_figure", "save_svg"]

_STYLE = {
    "figure.figsize": (6.0, 4.5),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 11,
    "svg.hashsalt": "h1mult",
    "svg.fonttype": "none",
}


def separation_figure(report: dict):
    """Log-log plot of ratio against q with the least-squares line."""
    rows = report["rows"]
    q = np.array([r["q"] for r in rows], dtype=float)
    ratio = np.array([r["ratio"] for r in rows], dtype=float)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.loglog(q, ratio, "o", color="tab:blue", label="m3 lower / m2 upper")
        slope, icpt = report.get("fitExponent"), report.get("fitIntercept")
        if slope is not None and icpt is not None:
            fit_q = q[q >= 2]
            qq = np.geomspace(fit_q.min(), fit_q.max(), 50)
            ax.loglog(qq, np.exp(icpt) * qq ** slope, "-", color="tab:red",
                      label=f"fit: slope {slope:.3f}, R^2 {report['fitR2']:.4f}")
        ax.set_xlabel("q = K/2 - 1")
        ax.set_ylabel("ratio")
        ax.legend(loc="upper left")
        fig.tight_layout()
    return fig


def cq_figure(rows: list):
    """Family lower bound on C(q) against the ceiling sqrt(q)."""
    q = np.array([r["q"] for r in rows], dtype=float)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.loglog(q, [r["lower"] for r in rows], "o-", label="rotated Dirichlet family")
        ax.loglog(q, np.sqrt(q), "--", color="0.4", label="sqrt(q)")
        ax.set_xlabel("q")
        ax.set_ylabel("C(q) bounds")
        ax.legend(loc="upper left")
        fig.tight_layout()
    return fig


def save_svg(fig, path) -> str:
    with plt.rc_context(_STYLE):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return str(path)
