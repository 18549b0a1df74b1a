"""Dominance relations, front sorting, and secondary ranking.

All functions take an (n, M) loss matrix where every column is minimized.
Tie-breaking is always by ascending input index so results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import DimensionError, Recommendation


class InsufficientSampleError(ValueError):
    """Raised when a statistic needs at least two rows."""


@dataclass(frozen=True)
class FrontAssignment:
    """Result of recursive non-dominated peeling.

    ``front_of[i]`` is the 1-based front index of solution i; ``fronts[a]``
    lists the input indices of front a+1 in ascending order.
    """

    front_of: np.ndarray
    fronts: list[list[int]]


@dataclass(frozen=True)
class RankedSolution:
    primary_rank: int  # non-dominated front index (1-based)
    secondary_rank: int  # box-volume order within the comparison set (1-based)


def dominates(a, b) -> bool:
    """True iff loss vector ``a`` dominates ``b`` (<= everywhere, < somewhere)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"loss vectors differ in shape: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def non_dominated_sort(losses) -> FrontAssignment:
    """Recursive peeling into fronts F_1, F_2, ... (Deb-style fast sort).

    Rows with +inf entries participate normally: they are dominated by any
    row that is finite wherever they are infinite and no worse elsewhere.
    """
    z = np.asarray(losses, dtype=float)
    if z.size == 0:
        return FrontAssignment(front_of=np.zeros(0, dtype=int), fronts=[])
    if z.ndim != 2:
        raise DimensionError("losses must be a 2-D matrix")
    n = z.shape[0]

    # dom[i, j] = True iff row i dominates row j.
    le = np.all(z[:, None, :] <= z[None, :, :], axis=2)
    lt = np.any(z[:, None, :] < z[None, :, :], axis=2)
    dom = le & lt

    n_dominators = dom.sum(axis=0)
    dominated_by = [np.flatnonzero(dom[i]) for i in range(n)]

    front_of = np.zeros(n, dtype=int)
    fronts: list[list[int]] = []
    current = np.flatnonzero(n_dominators == 0)
    rank = 1
    while current.size:
        fronts.append(sorted(int(i) for i in current))
        front_of[current] = rank
        nxt = []
        for i in current:
            for j in dominated_by[i]:
                n_dominators[j] -= 1
                if n_dominators[j] == 0:
                    nxt.append(j)
        current = np.asarray(sorted(set(nxt)), dtype=int)
        rank += 1
    return FrontAssignment(front_of=front_of, fronts=fronts)


def zscore_normalize(losses) -> np.ndarray:
    """Per-column standardization; constant columns map to all-zeros."""
    z = np.asarray(losses, dtype=float)
    if z.ndim != 2 or z.shape[0] < 2:
        raise InsufficientSampleError("z-score normalization needs at least 2 rows")
    mean = z.mean(axis=0)
    std = z.std(axis=0)
    out = np.zeros_like(z)
    ok = std > 0
    out[:, ok] = (z[:, ok] - mean[ok]) / std[ok]
    return out


def box_volume_rank(normalized) -> np.ndarray:
    """Secondary rank from per-solution box volume against a dominated point.

    The reference point is the componentwise maximum plus one, so every
    solution strictly dominates it; the volume of solution i is the product
    of its per-axis gaps to that point. Returns 1-based ranks, rank 1 for the
    largest volume, ties broken by ascending input index.
    """
    z = np.asarray(normalized, dtype=float)
    if z.ndim != 2:
        raise DimensionError("normalized losses must be a 2-D matrix")
    ref = z.max(axis=0) + 1.0
    volumes = np.prod(ref[None, :] - z, axis=1)
    order = np.lexsort((np.arange(len(volumes)), -volumes))
    beta = np.empty(len(volumes), dtype=int)
    beta[order] = np.arange(1, len(volumes) + 1)
    return beta


def acceptability_filter(
    solutions: list[Recommendation],
    cos_min: float = 0.5,
    ratio_max: float = 1.0,
) -> list[Recommendation]:
    """Keep recommendations similar enough to the anchor and strictly cheaper
    and cleaner than it: cosine > cos_min, cost and every environmental ratio
    < ratio_max. The anchor itself fails the strict inequalities (ratios 1.0).
    """
    kept = []
    for sol in solutions:
        losses = sol.losses
        if 1.0 - losses[0] <= cos_min:
            continue
        if losses[1] >= ratio_max:
            continue
        if np.any(losses[5:] >= ratio_max):
            continue
        kept.append(sol)
    return kept


def pooled_dominance_ratio(per_method: dict[str, np.ndarray]) -> dict[str, float]:
    """Share of each method's solutions that sit on the pooled first front.

    Exact duplicates across methods do not dominate each other, so they all
    count as non-dominated.
    """
    if not per_method:
        raise ValueError("at least one method is required")
    names = list(per_method.keys())
    blocks = []
    for name in names:
        block = np.asarray(per_method[name], dtype=float)
        if block.ndim != 2 or block.shape[0] == 0:
            raise ValueError(f"method {name!r} must contribute a non-empty matrix")
        blocks.append(block)
    pooled = np.vstack(blocks)
    assignment = non_dominated_sort(pooled)
    in_f1 = assignment.front_of == 1

    ratios = {}
    offset = 0
    for name, block in zip(names, blocks):
        n = block.shape[0]
        ratios[name] = float(in_f1[offset : offset + n].mean())
        offset += n
    return ratios
