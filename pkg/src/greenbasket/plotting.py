"""Figure rendering for the report command.

Each helper takes a table produced by the experiments module and writes one
PNG next to the delimited output. Matplotlib runs on the Agg backend so the
CLI works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .domain import FEATURE_COLUMNS

_METHOD_COLORS = {"g3a": "#2a9d8f", "mones": "#e9c46a", "rnsga2": "#e76f51"}


def _color(method: str) -> str:
    return _METHOD_COLORS.get(method, "#577590")


def plot_dominance(summary: pd.DataFrame, path) -> None:
    """Bar chart of pooled non-dominated ratios with bootstrap error bars."""
    fig, ax = plt.subplots(figsize=(6, 4))
    x = np.arange(len(summary))
    means = summary["mean"].to_numpy()
    err = np.stack(
        [
            means - summary["mean_ci_low"].to_numpy(),
            summary["mean_ci_high"].to_numpy() - means,
        ]
    )
    ax.bar(
        x,
        means,
        yerr=np.abs(err),
        capsize=4,
        color=[_color(m) for m in summary["method"]],
    )
    ax.set_xticks(x, summary["method"])
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("pooled non-dominated ratio")
    ax.set_title("Share of recommendations on the pooled first front")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_ratio_report(report: pd.DataFrame, path) -> None:
    """Grouped bars: mean cosine similarity and feature ratios per method."""
    ratio_cols = ["cosine_similarity"] + [f"ratio_{c}" for c in FEATURE_COLUMNS]
    labels = ["cosine"] + FEATURE_COLUMNS
    fig, ax = plt.subplots(figsize=(11, 4.5))
    x = np.arange(len(ratio_cols))
    width = 0.8 / max(len(report), 1)
    for i, (_, row) in enumerate(report.iterrows()):
        ax.bar(
            x + i * width,
            row[ratio_cols].to_numpy(dtype=float),
            width,
            label=row["method"],
            color=_color(row["method"]),
        )
    ax.axhline(1.0, color="gray", lw=0.8, ls="--")
    ax.set_xticks(x + width * (len(report) - 1) / 2, labels, rotation=45, ha="right")
    ax.set_ylabel("mean value over accepted recommendations")
    ax.set_title("Similarity and feature ratios of filtered recommendations")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_impact(impacts: dict[str, pd.DataFrame], path) -> None:
    """Horizontal bars of relative total reduction per feature and method."""
    fig, ax = plt.subplots(figsize=(8, 6))
    features = FEATURE_COLUMNS
    y = np.arange(len(features))
    height = 0.8 / max(len(impacts), 1)
    for i, (method, frame) in enumerate(sorted(impacts.items())):
        frame = frame.set_index("feature")
        rel = [
            frame.loc[f, "mean_reduction"] / frame.loc[f, "baseline_total"]
            if frame.loc[f, "baseline_total"]
            else 0.0
            for f in features
        ]
        ax.barh(y + i * height, rel, height, label=method, color=_color(method))
    ax.set_yticks(y + height * (len(impacts) - 1) / 2, features)
    ax.set_xlabel("fraction of baseline total avoided")
    ax.set_title("Counterfactual reduction of totals")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_g3a_progress(metrics: list[dict], path) -> None:
    """Weighted front-1 loss across generations for one optimization run."""
    fig, ax = plt.subplots(figsize=(6, 4))
    gens = [m["generation"] for m in metrics]
    ax.plot(gens, [m["weighted_sum"] for m in metrics], marker="o", ms=3)
    ax.set_xlabel("generation")
    ax.set_ylabel("weighted mean front-1 loss")
    ax.set_title("Training progress")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
