"""Evaluation protocol: dominance comparison, ratio reports, counterfactuals.

Methods are compared on the same intended baskets. Dominance pools every
method's recommendations per basket and measures each method's share of the
first front; the ratio report averages cosine similarity and true feature
ratios over filter-passing recommendations; the counterfactual simulation
replays the purchase corpus while randomly replacing a fraction of intended
baskets with recommendations and measures the total reductions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .dataset import baskets_from_corpus, select_top_emitters
from .domain import (
    AnchorContext,
    Catalog,
    FEATURE_COLUMNS,
    Recommendation,
    feature_ratios,
    feature_totals,
)
from .evo import GaConfig, run_rnsga2
from .g3a import G3aConfig, run_g3a
from .mones import NesConfig, run_mones
from .pareto import acceptability_filter, pooled_dominance_ratio

METHODS = ("g3a", "mones", "rnsga2")

BasketKey = tuple[str, int]
RecSets = dict[BasketKey, list[Recommendation]]


def reverse_bootstrap_ci(
    values: np.ndarray,
    statistic=np.mean,
    n_resamples: int = 10_000,
    alpha: float = 0.05,
    seed: int = 0,
) -> tuple[float, float]:
    """Basic (reverse) bootstrap interval: (2t - q_hi, 2t - q_lo)."""
    values = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    point = statistic(values)
    idx = rng.integers(0, values.size, size=(n_resamples, values.size))
    stats = statistic(values[idx], axis=1)
    q_lo, q_hi = np.quantile(stats, [alpha / 2.0, 1.0 - alpha / 2.0])
    return float(2.0 * point - q_hi), float(2.0 * point - q_lo)


def _budget_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def run_method(
    method: str,
    catalog: Catalog,
    x_star: np.ndarray,
    seed: int,
    budget: int | None = None,
    weights: np.ndarray | None = None,
) -> list[Recommendation]:
    """Dispatch one optimizer run with a per-run seed and generation budget."""
    if method == "rnsga2":
        config = GaConfig(seed=seed, weights=weights)
        if budget is not None:
            config.generations = budget
        return run_rnsga2(catalog, x_star, config).recommendations
    if method == "mones":
        config = NesConfig(seed=seed, weights=weights)
        if budget is not None:
            config.generations = budget
        return run_mones(catalog, x_star, config).recommendations
    if method == "g3a":
        config = G3aConfig(seed=seed, weights=weights)
        if budget is not None:
            config.generations = budget
        return run_g3a(catalog, x_star, config).recommendations
    raise ValueError(f"unknown method {method!r}")


def run_methods(
    catalog: Catalog,
    baskets: dict[BasketKey, np.ndarray],
    methods=METHODS,
    seed: int = 0,
    budgets: dict[str, int] | None = None,
    weights: np.ndarray | None = None,
) -> dict[str, RecSets]:
    """Run every method on every intended basket, reproducibly.

    Each (method, basket) pair gets its own derived seed so runs are
    independent of iteration order.
    """
    budgets = budgets or {}
    results: dict[str, RecSets] = {m: {} for m in methods}
    for i, (key, x_star) in enumerate(sorted(baskets.items())):
        for m, method in enumerate(methods):
            run_seed = _budget_seed(seed, i * len(methods) + m)
            results[method][key] = run_method(
                method, catalog, x_star, run_seed, budgets.get(method), weights
            )
    return results


def compare_dominance(
    per_method: dict[str, RecSets],
    n_resamples: int = 10_000,
    seed: int = 0,
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Pooled non-dominated share per method, per intended basket.

    Returns (summary, per_basket): the summary holds mean and median ratios
    with reverse-bootstrap confidence intervals over baskets; per_basket is
    the long-format table behind them.
    """
    if len(per_method) < 1:
        raise ValueError("at least one method required")
    methods = list(per_method.keys())
    key_sets = [set(rs.keys()) for rs in per_method.values()]
    if any(ks != key_sets[0] for ks in key_sets[1:]):
        raise ValueError("methods were run on different intended baskets")
    keys = sorted(key_sets[0])
    if not keys:
        raise ValueError("no intended baskets to compare")

    rows = []
    for key in keys:
        pools = {
            m: np.stack([r.losses for r in per_method[m][key]]) for m in methods
        }
        ratios = pooled_dominance_ratio(pools)
        for m in methods:
            rows.append(
                {
                    "household_id": key[0],
                    "week": key[1],
                    "method": m,
                    "ratio": ratios[m],
                }
            )
    per_basket = pd.DataFrame(rows)

    summary_rows = []
    for m in methods:
        values = per_basket.loc[per_basket["method"] == m, "ratio"].to_numpy()
        mean_lo, mean_hi = reverse_bootstrap_ci(values, np.mean, n_resamples, seed=seed)
        med_lo, med_hi = reverse_bootstrap_ci(values, np.median, n_resamples, seed=seed)
        summary_rows.append(
            {
                "method": m,
                "n_baskets": values.size,
                "mean": float(values.mean()),
                "mean_ci_low": mean_lo,
                "mean_ci_high": mean_hi,
                "median": float(np.median(values)),
                "median_ci_low": med_lo,
                "median_ci_high": med_hi,
            }
        )
    return pd.DataFrame(summary_rows), per_basket


def filter_recommendations(
    per_method: dict[str, RecSets],
    cos_min: float = 0.5,
    ratio_max: float = 1.0,
) -> dict[str, RecSets]:
    """Apply the acceptability gate per basket, preserving structure."""
    return {
        m: {key: acceptability_filter(recs, cos_min, ratio_max) for key, recs in rs.items()}
        for m, rs in per_method.items()
    }


def ratio_report(
    catalog: Catalog,
    baskets: dict[BasketKey, np.ndarray],
    filtered: dict[str, RecSets],
) -> pd.DataFrame:
    """Mean cosine similarity and true feature ratios over surviving
    recommendations, one row per method. Methods without survivors are
    omitted rather than reported as zero."""
    contexts = {key: AnchorContext.build(catalog, x) for key, x in baskets.items()}
    rows = []
    for method, rec_sets in filtered.items():
        cosines, ratio_rows = [], []
        for key, recs in rec_sets.items():
            for rec in recs:
                cosines.append(rec.cosine)
                ratio_rows.append(feature_ratios(catalog, rec.basket, contexts[key]))
        if not cosines:
            continue
        ratios = np.stack(ratio_rows).mean(axis=0)
        row = {"method": method, "n_recommendations": len(cosines),
               "cosine_similarity": float(np.mean(cosines))}
        row.update({f"ratio_{c}": float(v) for c, v in zip(FEATURE_COLUMNS, ratios)})
        rows.append(row)
    return pd.DataFrame(rows)


@dataclass
class ImpactReport:
    """Counterfactual outcome over sampled trajectories."""

    acceptance_rate: float
    n_trajectories: int
    n_baskets: int
    baseline_totals: np.ndarray  # length 10, summed over the corpus
    mean_reduction: np.ndarray  # length 10
    reduction_ci: np.ndarray  # (10, 2)
    mean_per_basket: np.ndarray  # counterfactual per-basket feature means
    mean_added_units: float
    mean_removed_units: float
    mean_replaced: float
    baskets_without_candidates: int
    per_trajectory_reduction: np.ndarray  # (n_trajectories, 10)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for j, col in enumerate(FEATURE_COLUMNS):
            rows.append(
                {
                    "feature": col,
                    "baseline_total": float(self.baseline_totals[j]),
                    "mean_reduction": float(self.mean_reduction[j]),
                    "reduction_ci_low": float(self.reduction_ci[j, 0]),
                    "reduction_ci_high": float(self.reduction_ci[j, 1]),
                    "counterfactual_mean_per_basket": float(self.mean_per_basket[j]),
                }
            )
        return pd.DataFrame(rows)


def counterfactual_simulate(
    catalog: Catalog,
    baskets: dict[BasketKey, np.ndarray],
    rec_sets: RecSets,
    acceptance_rate: float = 0.25,
    n_trajectories: int = 5000,
    seed: int = 0,
) -> ImpactReport:
    """Replace a random fraction of intended baskets with recommendations.

    Every trajectory draws floor(rate * n_baskets) baskets without
    replacement and swaps each for a uniformly chosen recommendation from
    that basket's candidate set; baskets with no candidates stay intended and
    are counted. The added/removed unit means exclude untouched baskets.
    Each trajectory has its own RNG stream derived from (seed, index), so
    results do not depend on scheduling.
    """
    if not 0.0 <= acceptance_rate <= 1.0:
        raise ValueError("acceptance rate must be in [0, 1]")
    keys = sorted(baskets.keys())
    n = len(keys)
    if n == 0:
        raise ValueError("no baskets to simulate")

    base_totals = np.stack([feature_totals(catalog, baskets[k]) for k in keys])
    baseline_sum = base_totals.sum(axis=0)

    # per-key candidate deltas: reduction vector and added/removed units
    deltas: list[np.ndarray | None] = []
    unit_changes: list[np.ndarray | None] = []
    for i, key in enumerate(keys):
        recs = rec_sets.get(key, [])
        if not recs:
            deltas.append(None)
            unit_changes.append(None)
            continue
        d = np.stack(
            [base_totals[i] - feature_totals(catalog, r.basket) for r in recs]
        )
        units = np.stack(
            [
                (
                    np.maximum(r.basket - baskets[key], 0).sum(),
                    np.maximum(baskets[key] - r.basket, 0).sum(),
                )
                for r in recs
            ]
        ).astype(float)
        deltas.append(d)
        unit_changes.append(units)

    n_replace = int(np.floor(acceptance_rate * n))
    reductions = np.zeros((n_trajectories, len(FEATURE_COLUMNS)))
    added = np.full(n_trajectories, np.nan)
    removed = np.full(n_trajectories, np.nan)
    replaced_counts = np.zeros(n_trajectories)
    missing = 0

    for t in range(n_trajectories):
        rng = np.random.default_rng([seed, t])
        chosen = rng.choice(n, size=n_replace, replace=False) if n_replace else []
        total = np.zeros(len(FEATURE_COLUMNS))
        add_units, rem_units, replaced = 0.0, 0.0, 0
        for i in chosen:
            if deltas[i] is None:
                missing += 1
                continue
            pick = int(rng.integers(0, len(deltas[i])))
            total += deltas[i][pick]
            add_units += unit_changes[i][pick, 0]
            rem_units += unit_changes[i][pick, 1]
            replaced += 1
        reductions[t] = total
        replaced_counts[t] = replaced
        if replaced:
            added[t] = add_units / replaced
            removed[t] = rem_units / replaced

    ci = np.zeros((len(FEATURE_COLUMNS), 2))
    for j in range(len(FEATURE_COLUMNS)):
        ci[j] = reverse_bootstrap_ci(reductions[:, j], np.mean, 2000, seed=seed + j)

    mean_reduction = reductions.mean(axis=0)
    return ImpactReport(
        acceptance_rate=acceptance_rate,
        n_trajectories=n_trajectories,
        n_baskets=n,
        baseline_totals=baseline_sum,
        mean_reduction=mean_reduction,
        reduction_ci=ci,
        mean_per_basket=(baseline_sum - mean_reduction) / n,
        mean_added_units=float(np.nanmean(added)) if replaced_counts.any() else 0.0,
        mean_removed_units=float(np.nanmean(removed)) if replaced_counts.any() else 0.0,
        mean_replaced=float(replaced_counts.mean()),
        baskets_without_candidates=missing,
        per_trajectory_reduction=reductions,
    )


def timing_report(
    catalog: Catalog,
    baskets: dict[BasketKey, np.ndarray],
    methods=METHODS,
    seed: int = 0,
    budgets: dict[str, int] | None = None,
) -> pd.DataFrame:
    """Wall-clock mean and deviation per method over the basket sample.

    Energy and emission measurement is intentionally not included; timing is
    the only computational-cost metric reported.
    """
    budgets = budgets or {}
    rows = []
    keys = sorted(baskets.keys())
    for method in methods:
        times = []
        for i, key in enumerate(keys):
            start = time.perf_counter()
            run_method(
                method, catalog, baskets[key], _budget_seed(seed, i), budgets.get(method)
            )
            times.append(time.perf_counter() - start)
        times = np.asarray(times)
        rows.append(
            {
                "method": method,
                "n_runs": times.size,
                "mean_seconds": float(times.mean()),
                "std_seconds": float(times.std()),
            }
        )
    return pd.DataFrame(rows)


def evaluation_baskets(
    catalog: Catalog,
    corpus: pd.DataFrame,
    n_households: int,
    weeks: int | None = None,
) -> dict[BasketKey, np.ndarray]:
    """Intended baskets of the top GHG-emitting households, optionally
    limited to the first ``weeks`` weeks."""
    top = set(select_top_emitters(corpus, catalog, n_households))
    baskets = baskets_from_corpus(corpus, catalog)
    chosen = {
        key: x
        for key, x in baskets.items()
        if key[0] in top and (weeks is None or key[1] <= weeks)
    }
    return chosen
