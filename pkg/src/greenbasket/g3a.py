"""Gradient guided genetic algorithm.

Crossover and mutation are neural networks. Crossover embeds the population
as tokens, runs one transformer encoder and one decoder layer, and blends
each gene of a parent with the gene of the population member that scored the
highest per-gene attention. Mutation evolves solutions in continuous time
under a learned dynamics network, sampled on a uniform grid. Samples are
discretized by a rounding straight-through estimator so the eleven basket
losses stay differentiable, and after every generation the mean front-1 loss
of each objective is backpropagated through the whole evolution step into
both operator networks, each with its own RMSProp state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import RMSProp, Tensor
from .domain import (
    AnchorContext,
    Catalog,
    N_OBJECTIVES,
    evaluate_objectives,
)
from .evo import RunResult, finalize_recommendations
from .pareto import box_volume_rank, non_dominated_sort, zscore_normalize

HEALTH_SLICE = slice(2, 5)  # 0-based objective indices of the health losses


@dataclass
class G3aConfig:
    population: int = 8
    generations: int = 30
    horizon: float = 1.0  # continuous-time evolution period [0, T]
    samples_per_generation: int | None = None  # default: population
    ode_substeps: int = 3  # solver grid steps between consecutive samples
    health_scale: float = 7.0
    weights: np.ndarray | None = None  # consumer priorities, length 11
    lr_crossover: float = 1e-4
    lr_mutation: float = 1e-4
    dropout: float = 0.1
    n_heads: int = 11
    ffn_hidden: int = 2048
    mutation_hidden: int = 256
    seed: int = 0
    metrics_path: str | None = None

    def validate(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.health_scale <= 0:
            raise ValueError("health scale must be positive")
        if self.horizon <= 0:
            raise ValueError("evolution horizon must be positive")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (N_OBJECTIVES,) or np.any(w < 0):
                raise ValueError("weights must be 11 non-negative reals")


class MutationNet:
    """Dynamics network u(x): one sinusoidal hidden layer, linear output.

    The signed output lets trajectories both add and remove quantities;
    non-negativity of solutions is enforced at discretization, not here.
    """

    def __init__(self, n: int, hidden: int, rng: np.random.Generator):
        self.w1 = Tensor(rng.normal(0.0, 1.0 / np.sqrt(n), size=(n, hidden)))
        self.b1 = Tensor(rng.uniform(-np.pi, np.pi, size=hidden))
        # output scale tuned so untrained drift crosses rounding boundaries
        # within one evolution period (otherwise every sample collapses to x0)
        self.w2 = Tensor(rng.normal(0.0, 2.0 / np.sqrt(hidden), size=(hidden, n)))
        self.b2 = Tensor(np.zeros(n))

    def __call__(self, x: Tensor) -> Tensor:
        return ad.sin(x @ self.w1 + self.b1) @ self.w2 + self.b2

    def parameters(self) -> list[Tensor]:
        return [self.w1, self.b1, self.w2, self.b2]

    def named_parameters(self) -> dict[str, Tensor]:
        return {"mutation.w1": self.w1, "mutation.b1": self.b1,
                "mutation.w2": self.w2, "mutation.b2": self.b2}


class CrossoverNet:
    """Population transformer producing per-gene query/key score channels.

    Model width equals the catalog size, so each gene owns exactly one
    query/key channel; one encoder and one decoder layer, GeLU feed-forward
    blocks, post-norm residuals, dropout on sublayer outputs.
    """

    def __init__(
        self,
        n: int,
        n_heads: int,
        ffn_hidden: int,
        rng: np.random.Generator,
        dropout: float = 0.1,
    ):
        if n % n_heads != 0:
            raise ad.ShapeError(
                f"model width {n} must be divisible by {n_heads} heads"
            )
        self.n = n
        self.n_heads = n_heads
        self.dropout = dropout
        scale = 1.0 / np.sqrt(n)

        self.emb_w = Tensor(rng.normal(0.0, scale, size=(n, n)))
        self.emb_b = Tensor(np.zeros(n))
        self.enc_attn = ad.init_attention_params(n, rng)
        self.dec_self_attn = ad.init_attention_params(n, rng)
        self.dec_cross_attn = ad.init_attention_params(n, rng)

        def ffn_params():
            return {
                "w1": Tensor(rng.normal(0.0, scale, size=(n, ffn_hidden))),
                "b1": Tensor(np.zeros(ffn_hidden)),
                "w2": Tensor(rng.normal(0.0, 1.0 / np.sqrt(ffn_hidden), size=(ffn_hidden, n))),
                "b2": Tensor(np.zeros(n)),
            }

        self.enc_ffn = ffn_params()
        self.dec_ffn = ffn_params()
        self.norms = {
            name: (Tensor(np.ones(n)), Tensor(np.zeros(n)))
            for name in ("enc1", "enc2", "dec1", "dec2", "dec3")
        }
        self.score_wq = Tensor(rng.normal(0.0, scale, size=(n, n)))
        self.score_wk = Tensor(rng.normal(0.0, scale, size=(n, n)))

    def _ln(self, name: str, x: Tensor) -> Tensor:
        gamma, beta = self.norms[name]
        return ad.layer_norm(x, gamma, beta)

    def _ffn(self, params: dict, x: Tensor) -> Tensor:
        return ad.gelu(x @ params["w1"] + params["b1"]) @ params["w2"] + params["b2"]

    def _drop(self, x: Tensor, rng, train) -> Tensor:
        return ad.dropout(x, self.dropout, rng, train)

    def forward(
        self, population: np.ndarray, rng: np.random.Generator, train: bool = True
    ) -> tuple[Tensor, Tensor]:
        """Map the (B, N) population to per-gene query/key matrices (B, N)."""
        tokens = Tensor(np.asarray(population, dtype=float))
        e0 = tokens @ self.emb_w + self.emb_b

        attn, _ = ad.multi_head_attention(e0, e0, e0, self.n_heads, self.enc_attn)
        e1 = self._ln("enc1", e0 + self._drop(attn, rng, train))
        e2 = self._ln("enc2", e1 + self._drop(self._ffn(self.enc_ffn, e1), rng, train))

        attn, _ = ad.multi_head_attention(e0, e0, e0, self.n_heads, self.dec_self_attn)
        d1 = self._ln("dec1", e0 + self._drop(attn, rng, train))
        attn, _ = ad.multi_head_attention(d1, e2, e2, self.n_heads, self.dec_cross_attn)
        d2 = self._ln("dec2", d1 + self._drop(attn, rng, train))
        d3 = self._ln("dec3", d2 + self._drop(self._ffn(self.dec_ffn, d2), rng, train))

        return d3 @ self.score_wq, e2 @ self.score_wk

    def parameters(self) -> list[Tensor]:
        params = [self.emb_w, self.emb_b, self.score_wq, self.score_wk]
        for attn in (self.enc_attn, self.dec_self_attn, self.dec_cross_attn):
            params.extend(attn.values())
        for ffn in (self.enc_ffn, self.dec_ffn):
            params.extend(ffn.values())
        for gamma, beta in self.norms.values():
            params.extend((gamma, beta))
        return params

    def named_parameters(self) -> dict[str, Tensor]:
        named = {"crossover.emb_w": self.emb_w, "crossover.emb_b": self.emb_b,
                 "crossover.score_wq": self.score_wq, "crossover.score_wk": self.score_wk}
        for prefix, attn in (
            ("enc_attn", self.enc_attn),
            ("dec_self_attn", self.dec_self_attn),
            ("dec_cross_attn", self.dec_cross_attn),
        ):
            named.update({f"crossover.{prefix}.{k}": v for k, v in attn.items()})
        for prefix, ffn in (("enc_ffn", self.enc_ffn), ("dec_ffn", self.dec_ffn)):
            named.update({f"crossover.{prefix}.{k}": v for k, v in ffn.items()})
        for name, (gamma, beta) in self.norms.items():
            named[f"crossover.norm.{name}.gamma"] = gamma
            named[f"crossover.norm.{name}.beta"] = beta
        return named


def blend_offspring(population: np.ndarray, q: Tensor, k: Tensor) -> Tensor:
    """Per-gene parent selection and sigmoid blend.

    Gene i of parent b picks the population member b* with the largest score
    q[b,i] * k[b',i]; the selection index is a constant, the blend weight
    sigmoid(q[b,i] * k[b*,i]) stays differentiable:
        offspring[b,i] = s * x[b,i] + (1 - s) * x[b*,i]
    """
    x = np.asarray(population, dtype=float)
    scores = q.data[:, None, :] * k.data[None, :, :]  # (B, B, N), detached
    b_star = scores.argmax(axis=1)  # (B, N)

    s = ad.sigmoid(q * ad.gather_rows(k, b_star))
    cols = np.broadcast_to(np.arange(x.shape[1]), b_star.shape)
    x_selected = Tensor(x[b_star, cols])
    return s * Tensor(x) + (Tensor(np.ones_like(x)) - s) * x_selected


def neural_crossover(
    population: np.ndarray,
    net: CrossoverNet,
    rng: np.random.Generator,
    train: bool = True,
) -> Tensor:
    """One offspring row per population row, as a differentiable real matrix."""
    population = np.asarray(population)
    if population.ndim != 2 or population.shape[1] != net.n:
        raise ad.ShapeError(
            f"population shape {population.shape} does not match net width {net.n}"
        )
    q, k = net.forward(population, rng, train)
    return blend_offspring(population, q, k)


def neural_mutation(
    offspring: Tensor,
    net: MutationNet,
    n_samples: int,
    substeps: int = 3,
    horizon: float = 1.0,
) -> list[tuple[float, Tensor]]:
    """Continuous-time evolution of the offspring matrix under the dynamics
    net, sampled at k * T / n_samples for k = 1..n_samples."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    sample_times = [horizon * k / n_samples for k in range(1, n_samples + 1)]
    return ad.ode_integrate(
        net, offspring, (0.0, horizon), n_samples * substeps, sample_times
    )


def discretize(states: Tensor) -> Tensor:
    """Round through the straight-through estimator, then clamp negatives."""
    return ad.relu(ad.fractional_decouple(states))


def init_population(
    x_star: np.ndarray,
    net: MutationNet,
    population: int,
    substeps: int = 3,
    horizon: float = 1.0,
) -> np.ndarray:
    """Integrate the untrained mutation dynamics from the intended basket and
    discretize the trajectory samples at t = T/B, 2T/B, ..., T."""
    if population < 1:
        raise ValueError("population must be >= 1")
    x0 = Tensor(np.asarray(x_star, dtype=float)[None, :])
    samples = neural_mutation(x0, net, population, substeps, horizon)
    rows = [discretize(state).data[0] for _, state in samples]
    return np.stack(rows).astype(np.int64)


def objective_graph(
    samples: list[Tensor], catalog: Catalog, ctx: AnchorContext
) -> tuple[Tensor, Tensor]:
    """Discretize samples and evaluate all 11 losses as one (K, 11) graph node.

    Requires every anchor feature total to be positive (true for any
    non-empty basket on a positive-coefficient catalog).
    """
    if np.any(ctx.totals == 0.0):
        raise ValueError("anchor has a zero feature total; not differentiable")
    stacked = ad.concatenate(samples, axis=0) if len(samples) > 1 else samples[0]
    d = discretize(stacked)
    kk = d.data.shape[0]

    totals = d @ Tensor(catalog.coeffs)
    ratios = totals * Tensor(1.0 / ctx.totals)

    dot = d @ Tensor(ctx.x_star.astype(float)[:, None])
    sumsq = ad.tsum(d * d, axis=1, keepdims=True)
    zero_rows = (sumsq.data == 0.0).astype(float)
    norm = ad.sqrt(sumsq + Tensor(zero_rows))  # zero rows get norm 1, cos 0
    cosine = dot * (1.0 / ctx.norm) / norm
    taste = Tensor(np.ones((kk, 1))) - cosine

    cost = ad.slice_cols(ratios, 0, 1)
    health = [
        (Tensor(np.ones((kk, 1))) - ad.slice_cols(ratios, j, j + 1)) ** 2.0
        for j in (1, 2, 3)
    ]
    env = ad.slice_cols(ratios, 4, 10)
    losses = ad.concatenate([taste, cost, *health, env], axis=1)
    return losses, d


def g3a_select_loss(
    samples: list[Tensor],
    catalog: Catalog,
    ctx: AnchorContext,
    population: np.ndarray,
) -> tuple[list[Tensor], np.ndarray, dict]:
    """Mean front-1 loss per objective (graph nodes) and the survivors.

    The per-objective means are taken over the first front of the discretized
    trajectory samples and stay connected to the graph. Survival is elitist in
    the MO-NES style: the current population is pooled with the samples and
    the best B by (front, box-volume) rank carry over.
    """
    losses, discretized = objective_graph(samples, catalog, ctx)
    detached = losses.data.copy()
    kk = detached.shape[0]

    assignment = non_dominated_sort(detached)
    front1 = assignment.fronts[0]
    mask = np.zeros((kk, 1))
    mask[front1] = 1.0 / len(front1)
    zeta_bar_row = Tensor(mask.T) @ losses  # (1, 11)
    zeta_bar = [ad.slice_cols(zeta_bar_row, j, j + 1) for j in range(N_OBJECTIVES)]

    b = population.shape[0]
    parent_losses = np.stack(
        [evaluate_objectives(catalog, row, ctx) for row in population]
    )
    pooled_losses = np.concatenate([detached, parent_losses])
    pooled_rows = np.concatenate(
        [discretized.data.astype(np.int64), population.astype(np.int64)]
    )
    # duplicates carry no extra information and would crowd out the survivors
    first_seen: dict[tuple, int] = {}
    for i, row in enumerate(pooled_rows):
        first_seen.setdefault(tuple(row.tolist()), i)
    distinct = np.asarray(sorted(first_seen.values()), dtype=int)

    if len(distinct) == 1:
        keep = [int(distinct[0])]
    else:
        alpha = non_dominated_sort(pooled_losses[distinct]).front_of
        beta = box_volume_rank(zscore_normalize(pooled_losses[distinct]))
        order = sorted(range(len(distinct)), key=lambda i: (alpha[i], beta[i], i))
        keep = [distinct[i] for i in order[:b]]
    while len(keep) < b:  # fewer distinct rows than slots: pad with the best
        keep.append(keep[0])
    selected = pooled_rows[keep]

    info = {
        "front_sizes": [len(f) for f in assignment.fronts],
        "zeta_bar": zeta_bar_row.data.ravel().copy(),
    }
    return zeta_bar, selected, info


def backprop_update(
    zeta_bar: list[Tensor],
    crossover_opt: RMSProp,
    mutation_opt: RMSProp,
    weights: np.ndarray | None = None,
    health_scale: float = 7.0,
) -> None:
    """Per-objective backward passes, then one step of each operator's
    optimizer. Health losses are scaled at gradient time only."""
    w = np.ones(N_OBJECTIVES) if weights is None else np.asarray(weights, dtype=float)
    for j, loss in enumerate(zeta_bar):
        seed = w[j] * (health_scale if HEALTH_SLICE.start <= j < HEALTH_SLICE.stop else 1.0)
        if seed != 0.0:
            loss.backward(seed=seed)
    crossover_opt.step()
    mutation_opt.step()
    crossover_opt.zero_grad()
    mutation_opt.zero_grad()


def save_operator_checkpoint(
    mutation_net: MutationNet, crossover_net: CrossoverNet, path
) -> None:
    named = {**mutation_net.named_parameters(), **crossover_net.named_parameters()}
    ad.save_params(named, path)


def load_operator_checkpoint(
    mutation_net: MutationNet, crossover_net: CrossoverNet, path
) -> None:
    """Restore both operator networks in place from a checkpoint file."""
    loaded = ad.load_params(path)
    named = {**mutation_net.named_parameters(), **crossover_net.named_parameters()}
    missing = set(named) - set(loaded)
    if missing:
        raise ValueError(f"checkpoint misses parameters: {sorted(missing)}")
    for name, tensor in named.items():
        if loaded[name].shape != tensor.data.shape:
            raise ValueError(
                f"checkpoint shape mismatch for {name}: "
                f"{loaded[name].shape} vs {tensor.data.shape}"
            )
        tensor.data = loaded[name]


def run_g3a(
    catalog: Catalog, x_star: np.ndarray, config: G3aConfig | None = None
) -> RunResult:
    """Initialize from the intended basket, evolve for ``generations``, and
    emit the deduplicated non-dominated integer baskets of the final
    population."""
    config = config or G3aConfig()
    config.validate()
    ctx = AnchorContext.build(catalog, x_star)
    rng = np.random.default_rng(config.seed)

    mutation_net = MutationNet(catalog.size, config.mutation_hidden, rng)
    crossover_net = CrossoverNet(
        catalog.size, config.n_heads, config.ffn_hidden, rng, config.dropout
    )
    crossover_opt = RMSProp(crossover_net.parameters(), lr=config.lr_crossover)
    mutation_opt = RMSProp(mutation_net.parameters(), lr=config.lr_mutation)

    n_samples = config.samples_per_generation or config.population
    population = init_population(
        ctx.x_star, mutation_net, config.population, config.ode_substeps, config.horizon
    )

    weights = (
        np.ones(N_OBJECTIVES) if config.weights is None else np.asarray(config.weights)
    )
    metrics: list[dict] = []
    for generation in range(config.generations):
        offspring = neural_crossover(population, crossover_net, rng, train=True)
        samples = neural_mutation(
            offspring, mutation_net, n_samples, config.ode_substeps, config.horizon
        )
        zeta_bar, selected, info = g3a_select_loss(
            [state for _, state in samples], catalog, ctx, population
        )
        metrics.append(
            {
                "generation": generation,
                "zeta_bar": info["zeta_bar"].tolist(),
                "front_sizes": info["front_sizes"],
                "weighted_sum": float(weights @ info["zeta_bar"]),
            }
        )
        backprop_update(
            zeta_bar, crossover_opt, mutation_opt, config.weights, config.health_scale
        )
        population = selected

    final_losses = np.stack(
        [evaluate_objectives(catalog, row, ctx) for row in population]
    )
    recommendations = finalize_recommendations(population, final_losses)

    if config.metrics_path:
        with open(config.metrics_path, "w") as fh:
            for entry in metrics:
                fh.write(json.dumps(entry) + "\n")

    stats = {
        "metrics": metrics,
        "generations": config.generations,
        "population": config.population,
        "mutation_params": mutation_net.named_parameters(),
        "crossover_params": crossover_net.named_parameters(),
    }
    return RunResult(recommendations=recommendations, stats=stats)
