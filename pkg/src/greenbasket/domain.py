"""Catalog, basket, and objective-function definitions.

The recommendation problem scores an integer basket x against the consumer's
intended basket x* with 11 losses (lower is better for all of them):

    index 1      taste       1 - cosine(x, x*)
    index 2      cost        ratio of basket costs
    indices 3-5  health      squared relative deviation of energy/protein/fat
    indices 6-11 environment ratios of GHG, acidification, eutrophication,
                             land use, water, stressed water

Feature coefficients live in a catalog matrix with one row per product and
ten columns (cost plus three nutrition plus six environmental features).
Everything here is pure and operates on plain numpy arrays, so the same
functions back the optimizers, the HTTP service, and the experiment harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Column order of the coefficient matrix (feature indices 2..11).
FEATURE_COLUMNS = [
    "price_usd",
    "energy_kcal",
    "protein_g",
    "fat_g",
    "ghg_kgco2e",
    "acid_kgso2e",
    "eutro_kgpo4e",
    "land_m2",
    "water_l",
    "stressed_water_l",
]

N_FEATURES = len(FEATURE_COLUMNS)  # 10 coefficient-backed features
N_OBJECTIVES = 11  # taste + the 10 above
HEALTH_INDICES = (3, 4, 5)  # 1-based objective indices with squared-ratio loss
ENV_INDICES = (6, 7, 8, 9, 10, 11)

CANONICAL_UNITS = ("kg", "L", "piece")


class DimensionError(ValueError):
    """Raised when a vector length does not match the catalog size."""


class InvalidAnchorError(ValueError):
    """Raised when the intended basket has no positive entries."""


class UndefinedRatioError(ZeroDivisionError):
    """Raised when a feature ratio is requested against a zero total."""

    def __init__(self, feature_index: int):
        super().__init__(f"feature {feature_index}: reference total is zero")
        self.feature_index = feature_index


@dataclass(frozen=True)
class Catalog:
    """Immutable product catalog with per-unit feature coefficients.

    ``coeffs`` is an (N, 10) matrix with columns ordered as FEATURE_COLUMNS.
    All coefficients are non-negative; product ids are unique.
    """

    product_ids: tuple[str, ...]
    names: tuple[str, ...]
    units: tuple[str, ...]
    coeffs: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[1] != N_FEATURES:
            raise DimensionError(
                f"coeffs must be (N, {N_FEATURES}), got {coeffs.shape}"
            )
        if coeffs.shape[0] != len(self.product_ids):
            raise DimensionError("coefficient rows must match product count")
        if len(self.names) != len(self.product_ids) or len(self.units) != len(
            self.product_ids
        ):
            raise DimensionError("names/units must match product count")
        if len(set(self.product_ids)) != len(self.product_ids):
            raise ValueError("product ids must be unique")
        if np.any(coeffs < 0):
            raise ValueError("catalog coefficients must be non-negative")
        for unit in self.units:
            if unit not in CANONICAL_UNITS:
                raise ValueError(f"unknown canonical unit {unit!r}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(
            self, "_index", {pid: i for i, pid in enumerate(self.product_ids)}
        )

    @property
    def size(self) -> int:
        return len(self.product_ids)

    def index_of(self, product_id: str) -> int:
        try:
            return self._index[product_id]
        except KeyError:
            raise KeyError(f"unknown product id {product_id!r}") from None

    def __contains__(self, product_id: str) -> bool:
        return product_id in self._index

    def basket_from_mapping(self, quantities: dict[str, int]) -> np.ndarray:
        """Build a basket vector from a product_id -> quantity mapping."""
        x = np.zeros(self.size, dtype=np.int64)
        for pid, qty in quantities.items():
            x[self.index_of(pid)] = int(qty)
        return validate_basket(x, self.size)


def validate_basket(x, n: int) -> np.ndarray:
    """Coerce to a non-negative integer basket vector of length ``n``."""
    arr = np.asarray(x)
    if arr.shape != (n,):
        raise DimensionError(f"basket length {arr.shape} does not match catalog ({n},)")
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if not np.allclose(arr, rounded, atol=1e-9):
            raise ValueError("basket quantities must be integral")
        arr = rounded
    arr = arr.astype(np.int64)
    if np.any(arr < 0):
        raise ValueError("basket quantities must be non-negative")
    return arr


def feature_totals(catalog: Catalog, basket) -> np.ndarray:
    """Total feature quantities of a basket: totals[j] = sum_i c[i,j] * x[i].

    Returns a length-10 vector aligned with FEATURE_COLUMNS.
    """
    x = validate_basket(basket, catalog.size)
    return x.astype(float) @ catalog.coeffs


def feature_ratio(catalog: Catalog, x, x_ref, feature_index: int) -> float:
    """Ratio of total feature quantities v_j(x) / v_j(x_ref).

    ``feature_index`` is the 1-based objective index in 2..11.
    """
    if not 2 <= feature_index <= 11:
        raise ValueError("feature index must be in 2..11")
    col = feature_index - 2
    num = feature_totals(catalog, x)[col]
    den = feature_totals(catalog, x_ref)[col]
    if den == 0.0:
        raise UndefinedRatioError(feature_index)
    return float(num / den)


def cosine_similarity(x, x_star) -> float:
    """Cosine of two non-negative quantity vectors; 0 when either is empty."""
    a = np.asarray(x, dtype=float)
    b = np.asarray(x_star, dtype=float)
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b) / (na * nb)


@dataclass(frozen=True)
class AnchorContext:
    """Cached quantities of the intended basket x*, reused across evaluations."""

    x_star: np.ndarray
    totals: np.ndarray  # v_j(x*), length 10
    norm: float  # ||x*||

    @classmethod
    def build(cls, catalog: Catalog, x_star) -> "AnchorContext":
        x = validate_basket(x_star, catalog.size)
        if not np.any(x > 0):
            raise InvalidAnchorError("intended basket must contain at least one item")
        x.setflags(write=False)
        totals = feature_totals(catalog, x)
        totals.setflags(write=False)
        return cls(x_star=x, totals=totals, norm=math.sqrt(float(x @ x)))


def evaluate_objectives(catalog: Catalog, basket, context: AnchorContext) -> np.ndarray:
    """Map a basket to its 11-dimensional loss vector against the anchor.

    Conventions for degenerate inputs:
      * an empty basket has taste loss 1 (maximally dissimilar),
      * a zero anchor total for feature j yields ratio 0 when the basket total
        is also 0 and +inf otherwise, so flagged baskets can never dominate.
    """
    x = validate_basket(basket, catalog.size)
    totals = x.astype(float) @ catalog.coeffs

    losses = np.empty(N_OBJECTIVES, dtype=float)
    norm_x = math.sqrt(float(x @ x))
    if norm_x == 0.0:
        losses[0] = 1.0
    else:
        losses[0] = 1.0 - float(x @ context.x_star.astype(float)) / (
            norm_x * context.norm
        )

    ratios = np.empty(N_FEATURES, dtype=float)
    for j in range(N_FEATURES):
        den = context.totals[j]
        if den == 0.0:
            ratios[j] = 0.0 if totals[j] == 0.0 else math.inf
        else:
            ratios[j] = totals[j] / den

    losses[1] = ratios[0]
    for j in (2, 3, 4):  # objectives 3..5
        losses[j] = (1.0 - ratios[j - 1]) ** 2 if math.isfinite(ratios[j - 1]) else math.inf
    losses[5:] = ratios[4:]
    return losses


@dataclass(frozen=True)
class Recommendation:
    """An integer basket together with its loss vector against one anchor."""

    basket: np.ndarray
    losses: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "basket", np.asarray(self.basket, dtype=np.int64)
        )
        object.__setattr__(self, "losses", np.asarray(self.losses, dtype=float))
        self.basket.setflags(write=False)
        self.losses.setflags(write=False)

    @property
    def cosine(self) -> float:
        return 1.0 - float(self.losses[0])


def feature_ratios(catalog: Catalog, basket, context: AnchorContext) -> np.ndarray:
    """True ratios rho_j for j=2..11 (health entries are plain ratios here,
    unlike the squared losses in the objective vector)."""
    totals = feature_totals(catalog, basket)
    ratios = np.empty(N_FEATURES, dtype=float)
    for j in range(N_FEATURES):
        den = context.totals[j]
        if den == 0.0:
            ratios[j] = 0.0 if totals[j] == 0.0 else math.inf
        else:
            ratios[j] = totals[j] / den
    return ratios


def recommendation_from_basket(
    catalog: Catalog, basket, context: AnchorContext
) -> Recommendation:
    x = validate_basket(basket, catalog.size)
    return Recommendation(basket=x, losses=evaluate_objectives(catalog, x, context))
