"""Figure rendering for the CLI report path.

Figures are rendered to files next to the CSV output: a transition diagram
for couplings (mass-weighted edges between the two marginals), the barrier
family in the (u, y) plane, and an empirical-versus-reference overlay for
simulation runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .coupling import Coupling
from .sets import Barrier

plt.rcParams["figure.dpi"] = 150
plt.rcParams["font.size"] = 9


def plot_coupling(c: Coupling, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    mmax = c.ms.max() if c.n_entries else 1.0
    for x, y, m in c.entries():
        ax.plot([x, y], [0, 1], color="tab:blue", alpha=max(0.08, m / mmax) * 0.9,
                lw=1.5, zorder=1)
    xm, ym = c.x_marginal(), c.y_marginal()
    ax.scatter(xm.xs, np.zeros(xm.n_atoms), s=400 * xm.ws, color="tab:red", zorder=2)
    ax.scatter(ym.xs, np.ones(ym.n_atoms), s=400 * ym.ws, color="tab:green", zorder=2)
    ax.set_yticks([0, 1])
    ax.set_yticklabels(["source", "target"])
    ax.set_xlabel("position")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_barrier(b: Barrier, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    finite = [v for sec in b.sections for comp in sec.components
              for v in comp if np.isfinite(v)]
    span = (max(finite) - min(finite)) if finite else 1.0
    ylo = (min(finite) - 0.3 * span - 0.5) if finite else -1.0
    yhi = (max(finite) + 0.3 * span + 0.5) if finite else 1.0
    grid = list(b.grid) + [1.0]
    for i, sec in enumerate(b.sections):
        u0, u1 = grid[i], grid[i + 1]
        for a, bb in sec.components:
            lo = ylo if a == -np.inf else a
            hi = yhi if bb == np.inf else bb
            if hi - lo < 1e-12:
                ax.plot([u0, u1], [lo, lo], color="tab:blue", lw=2.0)
            else:
                ax.fill_between([u0, u1], lo, hi, color="tab:blue", alpha=0.45, lw=0)
    ax.set_xlim(0, 1)
    ax.set_ylim(ylo, yhi)
    ax.set_xlabel("u")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_empirical_vs_reference(emp: Coupling, ref: Coupling, path,
                                title: str = "") -> None:
    fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharey=True)
    for ax, c, name in ((axes[0], ref, "constructed"), (axes[1], emp, "empirical")):
        mmax = c.ms.max() if c.n_entries else 1.0
        for x, y, m in c.entries():
            ax.plot([x, y], [0, 1], color="tab:blue",
                    alpha=max(0.06, m / mmax) * 0.9, lw=1.2)
        xm, ym = c.x_marginal(), c.y_marginal()
        ax.scatter(xm.xs, np.zeros(xm.n_atoms), s=300 * xm.ws, color="tab:red")
        ax.scatter(ym.xs, np.ones(ym.n_atoms), s=300 * ym.ws, color="tab:green")
        ax.set_title(name)
        ax.set_yticks([0, 1])
        ax.set_yticklabels(["start", "exit"])
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
