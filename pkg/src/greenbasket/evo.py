"""Reference-point NSGA-II over integer baskets.

The baseline evolutionary recommender: chaotic logistic-map seeding around
the intended basket, integer exponential crossover, polynomial mutation, and
survival pressure from non-dominated fronts refined by normalized distances
to reference points in objective space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import round_half_away
from .domain import (
    AnchorContext,
    Catalog,
    Recommendation,
    evaluate_objectives,
)
from .pareto import non_dominated_sort

# Default guidance: the infeasible optimum (every loss zero), the personal
# optimum (personal losses zero, environmental ratios at the anchor), and the
# environmental optimum (environmental ratios zero, personal losses at one).
DEFAULT_REFERENCE_POINTS = np.array(
    [
        [0.0] * 11,
        [0.0] * 5 + [1.0] * 6,
        [1.0] * 5 + [0.0] * 6,
    ]
)

_LOGISTIC_FIXED_POINTS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass
class GaConfig:
    population: int = 10
    generations: int = 40
    crossover_continuation: float = 0.9  # geometric run-length probability
    mutation_prob: float | None = None  # default 1/N
    eta_m: float = 20.0
    epsilon: float = 0.001  # clustering radius in normalized objective space
    seed: int = 0
    upper_bound: int | None = None  # default max(10, 2 * max(x*))
    explore_prob: float = 0.1
    weights: np.ndarray | None = None
    reference_points: np.ndarray = field(
        default_factory=lambda: DEFAULT_REFERENCE_POINTS.copy()
    )

    def validate(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0.0 <= self.crossover_continuation <= 1.0:
            raise ValueError("crossover continuation must be a probability")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")


@dataclass
class RunResult:
    recommendations: list[Recommendation]
    stats: dict


def _chaos_seed(seed: int, coordinate: int) -> float:
    """Initial logistic-map value in (0,1) derived from (seed, coordinate),
    nudged off the map's fixed points and absorbing preimages."""
    rng = np.random.default_rng([int(seed), int(coordinate)])
    z = rng.random()
    while min(abs(z - f) for f in _LOGISTIC_FIXED_POINTS) < 1e-6:
        z = rng.random()
    return z


def logistic_init(
    x_star: np.ndarray, population: int, seed: int, explore_prob: float = 0.1
) -> np.ndarray:
    """Deterministic chaotic population around the intended basket.

    Solution 0 is the intended basket itself. Solution b scales every
    positive coordinate by 0.5 + z_b where z_b is the b-th logistic-map
    iterate (z <- 4 z (1 - z)) of a per-coordinate chaos seed, then rounds.
    Zero coordinates stay zero, except that with probability ``explore_prob``
    one uniformly chosen absent product enters with quantity 1.
    """
    x_star = np.asarray(x_star, dtype=np.int64)
    if not np.any(x_star > 0):
        raise ValueError("intended basket must be non-empty")
    n = x_star.size
    population_rows = [x_star.copy()]

    positive = np.flatnonzero(x_star > 0)
    zero = np.flatnonzero(x_star == 0)
    z = np.array([_chaos_seed(seed, int(i)) for i in positive])
    explore_rng = np.random.default_rng([int(seed), n + 1])

    for _ in range(1, population):
        z = 4.0 * z * (1.0 - z)
        row = np.zeros(n, dtype=np.int64)
        row[positive] = round_half_away(x_star[positive] * (0.5 + z)).astype(np.int64)
        if zero.size and explore_rng.random() < explore_prob:
            row[zero[explore_rng.integers(0, zero.size)]] = 1
        population_rows.append(row)
    return np.stack(population_rows[:population])


def int_exp_crossover(
    x: np.ndarray, x_prime: np.ndarray, p: float, rng: np.random.Generator
) -> np.ndarray:
    """Copy a wrap-around run of genes from the second parent.

    The run starts at a uniform index and continues with probability ``p``
    per step, so its length is geometric; remaining genes come from ``x``.
    """
    if x.shape != x_prime.shape:
        raise ValueError("parents must have equal length")
    n = x.size
    child = x.copy()
    i = int(rng.integers(0, n))
    copied = 0
    while copied < n:
        child[i] = x_prime[i]
        copied += 1
        if rng.random() >= p:
            break
        i = (i + 1) % n
    return child


def poly_mutation(
    x: np.ndarray,
    eta_m: float,
    mutation_prob: float,
    upper_bound,
    rng: np.random.Generator,
) -> np.ndarray:
    """Deb's polynomial mutation on [0, upper_bound], rounded back to integers."""
    n = x.size
    ub = np.broadcast_to(np.asarray(upper_bound, dtype=float), (n,))
    if np.any(x > ub):
        raise ValueError("upper bound must cover every gene")
    child = x.astype(float).copy()
    mut_pow = 1.0 / (eta_m + 1.0)
    for i in range(n):
        if rng.random() >= mutation_prob:
            continue
        span = ub[i]
        if span <= 0:
            continue
        y = child[i]
        u = rng.random()
        if u <= 0.5:
            xy = 1.0 - y / span
            val = 2.0 * u + (1.0 - 2.0 * u) * xy ** (eta_m + 1.0)
            deltaq = val**mut_pow - 1.0
        else:
            xy = 1.0 - (span - y) / span
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy ** (eta_m + 1.0)
            deltaq = 1.0 - val**mut_pow
        child[i] = y + deltaq * span
    child = np.clip(round_half_away(child), 0, ub)
    return child.astype(np.int64)


def rnsga2_rank(
    losses: np.ndarray,
    reference_points: np.ndarray,
    epsilon: float,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """Survival ordering: fronts first, then reference-point proximity.

    Within a front each solution's preference is its best distance rank to
    any reference point (distances are Euclidean in per-column normalized
    objective space, optionally weight-scaled). Solutions within ``epsilon``
    of an already-ordered neighbour are deferred behind the rest of their
    front, which keeps near-duplicates from crowding the survivors.
    Returns solution indices in selection order.
    """
    z = np.asarray(losses, dtype=float)
    refs = np.atleast_2d(np.asarray(reference_points, dtype=float))
    if refs.shape[1] != z.shape[1]:
        raise ValueError("reference points must match the objective count")
    w = np.ones(z.shape[1]) if weights is None else np.asarray(weights, dtype=float)

    spans = z.max(axis=0) - z.min(axis=0)
    spans[spans <= 0] = 1.0
    normalized = (z - z.min(axis=0)) / spans

    # distance matrix solutions x reference points, in normalized space
    diff = (z[:, None, :] - refs[None, :, :]) / spans[None, None, :]
    dists = np.sqrt((w[None, None, :] * diff**2).sum(axis=2))

    assignment = non_dominated_sort(z)
    ordering: list[int] = []
    for front in assignment.fronts:
        members = np.asarray(front)
        ranks = np.empty((len(members), refs.shape[0]), dtype=int)
        for r in range(refs.shape[0]):
            order = np.lexsort((members, dists[members, r]))
            ranks[order, r] = np.arange(len(members))
        preference = ranks.min(axis=1)
        in_order = members[np.lexsort((members, preference))]

        chosen: list[int] = []
        deferred: list[int] = []
        for idx in in_order:
            close = any(
                np.linalg.norm(normalized[idx] - normalized[j]) < epsilon
                for j in chosen
            )
            (deferred if close else chosen).append(int(idx))
        ordering.extend(chosen)
        ordering.extend(deferred)
    return np.asarray(ordering, dtype=int)


def dedupe_baskets(
    baskets: np.ndarray, losses: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    seen: dict[tuple, int] = {}
    keep = []
    for i, row in enumerate(baskets):
        key = tuple(int(v) for v in row)
        if key not in seen:
            seen[key] = i
            keep.append(i)
    keep = np.asarray(keep, dtype=int)
    return baskets[keep], losses[keep]


def finalize_recommendations(
    baskets: np.ndarray, losses: np.ndarray
) -> list[Recommendation]:
    """Deduplicate exact baskets and keep the mutually non-dominated subset."""
    baskets, losses = dedupe_baskets(baskets, losses)
    front = non_dominated_sort(losses).fronts[0]
    return [Recommendation(basket=baskets[i], losses=losses[i]) for i in front]


def run_rnsga2(
    catalog: Catalog, x_star: np.ndarray, config: GaConfig | None = None
) -> RunResult:
    """Full RNSGA-II loop; returns non-dominated deduplicated recommendations.

    Also records the running ideal point (componentwise minimum over every
    basket evaluated so far), which elitist truncation must never worsen.
    """
    config = config or GaConfig()
    config.validate()
    ctx = AnchorContext.build(catalog, x_star)
    x_star = ctx.x_star
    rng = np.random.default_rng(config.seed)

    b = config.population
    mutation_prob = (
        config.mutation_prob if config.mutation_prob is not None else 1.0 / catalog.size
    )
    upper_bound = (
        config.upper_bound
        if config.upper_bound is not None
        else max(10, 2 * int(x_star.max()))
    )

    population = logistic_init(x_star, b, config.seed, config.explore_prob)
    losses = np.stack(
        [evaluate_objectives(catalog, row, ctx) for row in population]
    )

    ideal_history = [losses.min(axis=0)]
    for _ in range(config.generations):
        children = []
        for _ in range(b):
            ia = int(rng.integers(0, len(population)))
            ib = int(rng.integers(0, len(population)))
            child = int_exp_crossover(
                population[ia], population[ib], config.crossover_continuation, rng
            )
            child = poly_mutation(child, config.eta_m, mutation_prob, upper_bound, rng)
            children.append(child)
        children = np.stack(children)
        child_losses = np.stack(
            [evaluate_objectives(catalog, row, ctx) for row in children]
        )

        pooled = np.concatenate([population, children])
        pooled_losses = np.concatenate([losses, child_losses])
        ideal_history.append(
            np.minimum(ideal_history[-1], pooled_losses.min(axis=0))
        )

        order = rnsga2_rank(
            pooled_losses, config.reference_points, config.epsilon, config.weights
        )[:b]
        population = pooled[order]
        losses = pooled_losses[order]

    recommendations = finalize_recommendations(population, losses)
    stats = {
        "ideal_history": np.stack(ideal_history),
        "generations": config.generations,
        "population": b,
    }
    return RunResult(recommendations=recommendations, stats=stats)
