"""Multi-objective natural evolution strategies with rounded evaluation.

Each of the B lineages keeps a real-valued parent, a global step size sigma,
and a shape matrix A. Offspring are sampled as x + sigma * A z with standard
normal z, discretized by round-and-clip for evaluation only, and ranked by
(front, box volume) against the pooled parents. A (1+1)-style success rule
adapts sigma and A: retained offspring grow the step and rotate A toward the
successful direction, rejected ones shrink the step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import round_half_away
from .domain import AnchorContext, Catalog, evaluate_objectives
from .evo import RunResult, finalize_recommendations
from .pareto import RankedSolution, box_volume_rank, non_dominated_sort, zscore_normalize


@dataclass
class NesConfig:
    population: int = 10
    generations: int = 40
    sigma0: float = 1.0 / 3.0
    shape_init_high: float = 0.001  # A entries uniform in [0, this]
    init_std: float = 0.2  # parent coordinates are ReLU(N(0, init_std))
    eta_sigma_plus: float = 0.01
    eta_sigma_minus: float = 0.01 / 5.0
    eta_shape: float = 0.01 / 4.0
    seed: int = 0
    weights: np.ndarray | None = None

    def validate(self):
        if self.population < 1:
            raise ValueError("population must be >= 1")
        if self.sigma0 <= 0:
            raise ValueError("sigma0 must be positive")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")


@dataclass
class NesState:
    """One lineage: real parent, step size, shape matrix, last sampled noise."""

    x: np.ndarray
    sigma: float
    shape: np.ndarray
    last_z: np.ndarray | None = field(default=None, repr=False)

    def validate(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not np.all(np.isfinite(self.shape)):
            raise ValueError("shape matrix must be finite")


def sample_offspring(state: NesState, rng: np.random.Generator) -> np.ndarray:
    """Draw x' = x + sigma * A z and remember z for the adaptation step."""
    state.validate()
    z = rng.standard_normal(state.x.size)
    state.last_z = z
    return state.x + state.sigma * (state.shape @ z)


def round_clip(values) -> np.ndarray:
    """Round half away from zero, then clip negatives to zero."""
    return np.maximum(round_half_away(np.asarray(values, dtype=float)), 0.0).astype(
        np.int64
    )


def mones_rank(pooled_losses: np.ndarray) -> list[RankedSolution]:
    """(front, box-volume) ranks over a pooled parent+offspring loss matrix."""
    z = np.asarray(pooled_losses, dtype=float)
    alphas = non_dominated_sort(z).front_of
    betas = box_volume_rank(zscore_normalize(z))
    return [
        RankedSolution(primary_rank=int(a), secondary_rank=int(b))
        for a, b in zip(alphas, betas)
    ]


def mones_update(
    state: NesState,
    success: bool,
    eta_sigma_plus: float = 0.01,
    eta_sigma_minus: float = 0.01 / 5.0,
    eta_shape: float = 0.01 / 4.0,
) -> NesState:
    """Success-rule adaptation of (sigma, A), first-order in the shape update.

    Success: the offspring was retained, so the parent moves there, sigma
    grows by exp(eta_sigma_plus), and A <- A (I + eta_shape (z z^T - I) / 2).
    Failure: sigma shrinks by exp(-eta_sigma_minus), everything else stays.
    """
    if success:
        if state.last_z is None:
            raise ValueError("no sampled offspring recorded for this lineage")
        z = state.last_z
        offspring = state.x + state.sigma * (state.shape @ z)
        az = state.shape @ z
        state.shape = (
            state.shape * (1.0 - eta_shape / 2.0)
            + (eta_shape / 2.0) * np.outer(az, z)
        )
        state.sigma *= np.exp(eta_sigma_plus)
        state.x = offspring
    else:
        state.sigma *= np.exp(-eta_sigma_minus)
    state.last_z = None
    return state


def initial_states(n: int, config: NesConfig, rng: np.random.Generator) -> list[NesState]:
    """Parents are ReLU of centered normals; shape entries uniform near zero."""
    states = []
    for _ in range(config.population):
        x0 = np.maximum(rng.normal(0.0, config.init_std, size=n), 0.0)
        shape = rng.uniform(0.0, config.shape_init_high, size=(n, n))
        states.append(NesState(x=x0, sigma=config.sigma0, shape=shape))
    return states


def run_mones(
    catalog: Catalog, x_star: np.ndarray, config: NesConfig | None = None
) -> RunResult:
    """Evolve B lineages for up to ``generations`` and emit the final front.

    Per generation each lineage samples one offspring; candidates are the
    rounded-and-clipped offspring pooled with the current parents, ranked by
    (front, box volume), and the best B survive. A lineage counts as a
    success exactly when its offspring is among the survivors.
    """
    config = config or NesConfig()
    config.validate()
    ctx = AnchorContext.build(catalog, x_star)
    rng = np.random.default_rng(config.seed)
    b = config.population

    states = initial_states(catalog.size, config, rng)

    def losses_of(real_vector):
        return evaluate_objectives(catalog, round_clip(real_vector), ctx)

    # consumer weights scale losses before ranking; dominance and the
    # normalized box volume are invariant to positive per-column scaling,
    # so this keeps the interface without changing selection
    weights = np.ones(11) if config.weights is None else np.asarray(config.weights)

    parent_losses = np.stack([losses_of(s.x) for s in states])
    sigma_history = [[s.sigma for s in states]]

    for _ in range(config.generations):
        offspring = [sample_offspring(s, rng) for s in states]
        offspring_losses = np.stack([losses_of(o) for o in offspring])

        pooled = np.concatenate([parent_losses, offspring_losses]) * weights
        ranks = mones_rank(pooled)
        order = sorted(
            range(2 * b),
            key=lambda i: (ranks[i].primary_rank, ranks[i].secondary_rank, i),
        )
        kept = set(order[:b])

        for slot, state in enumerate(states):
            success = (b + slot) in kept
            mones_update(
                state,
                success,
                config.eta_sigma_plus,
                config.eta_sigma_minus,
                config.eta_shape,
            )
            if success:
                parent_losses[slot] = offspring_losses[slot]
        sigma_history.append([s.sigma for s in states])

    baskets = np.stack([round_clip(s.x) for s in states])
    recommendations = finalize_recommendations(baskets, parent_losses)
    stats = {
        "sigma_history": np.asarray(sigma_history),
        "generations": config.generations,
        "population": b,
    }
    return RunResult(recommendations=recommendations, stats=stats)
