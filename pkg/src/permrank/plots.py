"""Figure rendering for experiment reports.

Each experiment's report directory gets PNG figures next to the CSV and
JSON output: log-log scaling panels with the fitted slope for the error
sweeps, and bar panels for the counterexample and oracle suites.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["plot_scaling_summary", "plot_check_suite"]

_DPI = 150


def plot_scaling_summary(summary: dict, path) -> Path:
    """Log-log error-versus-size panels, one per family, with fitted slopes."""
    families = summary["families"]
    fig, axes = plt.subplots(1, len(families), figsize=(5.2 * len(families), 4.0))
    if len(families) == 1:
        axes = [axes]
    for ax, (name, rec) in zip(axes, families.items()):
        sizes = np.asarray(rec["sizes"], dtype=float)
        means = np.asarray(rec["mean_errors"], dtype=float)
        ax.loglog(sizes, means, "o", color="tab:blue", label="mean error")
        grid = np.linspace(np.log(sizes[0]), np.log(sizes[-1]), 50)
        ax.loglog(
            np.exp(grid),
            np.exp(rec["slope"] * grid + rec["intercept"]),
            "-",
            color="tab:orange",
            label=f"slope {rec['slope']:.2f} (R² {rec['r_squared']:.2f})",
        )
        ax.set_xlabel("n")
        ax.set_ylabel("normalized squared error")
        ax.set_title(name)
        ax.legend()
        ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_check_suite(results: dict, title: str, path) -> Path:
    """One bar per boolean check (green pass, red fail), values annotated."""
    checks = {k: v for k, v in results.items() if isinstance(v, bool)}
    metrics = {
        k: v for k, v in results.items() if isinstance(v, float) and np.isfinite(v)
    }
    fig, ax = plt.subplots(figsize=(7.0, 0.55 * max(len(checks), 4) + 1.5))
    names = list(checks)
    colors = ["tab:green" if checks[k] else "tab:red" for k in names]
    ax.barh(range(len(names)), [1.0] * len(names), color=colors, alpha=0.75)
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xticks([])
    ax.set_title(title)
    caption = "   ".join(f"{k}={v:.4g}" for k, v in list(metrics.items())[:6])
    if caption:
        ax.set_xlabel(caption, fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
