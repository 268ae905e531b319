"""Static figures rendered next to the CSV outputs of the CLI."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.dpi": 120,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
}


def _col(rows, key):
    return np.array([float(r[key]) if r.get(key, "") != "" else np.nan for r in rows])


def training_curves(rows, path):
    """Reward, cost, safety metrics and mixing weight per epoch."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(2, 2, figsize=(8, 5.5), sharex=True)
        epoch = _col(rows, "epoch")
        panels = [
            ("mean_reward", "mean reward"),
            ("mean_cost", "mean cost"),
            ("safety_prob", "safety probability"),
            ("mu", "mixing weight mu"),
        ]
        for ax, (key, label) in zip(axes.flat, panels):
            ax.plot(epoch, _col(rows, key), lw=1.2)
            ax.set_ylabel(label)
        ax = axes.flat[2]
        ax.plot(epoch, _col(rows, "safe_reward"), lw=1.2, label="safe reward")
        ax.legend(loc="lower right")
        for ax in axes[-1]:
            ax.set_xlabel("epoch")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def angle_histograms(edges, counts_r, counts_c, path):
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(8, 3), sharey=True)
        for ax, counts, label, color in (
            (axes[0], counts_r, "angle(update, reward gradient)", "tab:blue"),
            (axes[1], counts_c, "angle(update, cost gradient)", "tab:red"),
        ):
            ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge", color=color, alpha=0.8)
            ax.axvline(90, color="k", lw=0.8, ls="--")
            ax.set_xlim(0, 180)
            ax.set_xticks(range(0, 181, 30))
            ax.set_xlabel(f"{label} [deg]")
        axes[0].set_ylabel("epochs")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def pareto_scatter(rows, path):
    """Final safety probability against safe reward, one colour per beta."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.5))
        betas = sorted({float(r["beta"]) for r in rows})
        cmap = plt.get_cmap("viridis", max(len(betas), 2))
        for i, b in enumerate(betas):
            sel = [r for r in rows if float(r["beta"]) == b]
            ax.scatter(_col(sel, "safe_reward"), _col(sel, "safety_prob"), color=cmap(i), label=f"beta={b:g}", s=22)
        ax.set_xlabel("safe reward")
        ax.set_ylabel("safety probability")
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
