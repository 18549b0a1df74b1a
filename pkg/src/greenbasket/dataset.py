"""Catalog construction: transaction ingestion and the synthetic stand-in.

Real ingestion joins three CSV sources (transactions with imperial unit
labels, an environmental table, and a nutrition table) on normalized
category strings, converts quantities to metric, and averages unit prices.
Because the licensed grocery corpus cannot ship with the repository, a
seeded synthetic generator produces a statistically plausible catalog and
weekly purchase corpus of the same shape for desk-scale runs.
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .domain import Catalog, FEATURE_COLUMNS, N_FEATURES

POUND_KG = 0.45359237
GALLON_L = 3.785411784

CATALOG_HEADER = ["product_id", "name", "unit"] + FEATURE_COLUMNS
CORPUS_HEADER = ["household_id", "week", "product_id", "quantity"]

ENV_COLUMNS = FEATURE_COLUMNS[4:]
NUTRITION_COLUMNS = FEATURE_COLUMNS[1:4]


class UnknownUnitError(ValueError):
    def __init__(self, label: str):
        super().__init__(f"no unit rule matches label {label!r}")
        self.label = label


class AmbiguousUnitError(ValueError):
    def __init__(self, label: str, patterns: list[str]):
        super().__init__(f"label {label!r} matches multiple rules: {patterns}")
        self.label = label


class EmptyCatalogError(ValueError):
    """Raised when ingestion drops every product."""


@dataclass(frozen=True)
class UnitRule:
    pattern: str
    canonical_unit: str  # kg, L, or piece
    factor: float

    def matches(self, label: str) -> bool:
        return re.fullmatch(self.pattern, label.strip(), re.IGNORECASE) is not None


DEFAULT_UNIT_RULES = [
    UnitRule(r"lbs?|pounds?", "kg", POUND_KG),
    UnitRule(r"ozs?|ounces?", "kg", POUND_KG / 16.0),
    UnitRule(r"kgs?|kilograms?", "kg", 1.0),
    UnitRule(r"g|gr|grams?", "kg", 0.001),
    UnitRule(r"gal|gallons?", "L", GALLON_L),
    UnitRule(r"qts?|quarts?", "L", GALLON_L / 4.0),
    UnitRule(r"pts?|pints?", "L", GALLON_L / 8.0),
    UnitRule(r"fl\.? ?ozs?|floz", "L", GALLON_L / 128.0),
    UnitRule(r"l|lt|ltr|liters?|litres?", "L", 1.0),
    UnitRule(r"ml|milliliters?|millilitres?", "L", 0.001),
    UnitRule(r"ct|cnt|count|ea|each|pcs?|pieces?|units?", "piece", 1.0),
]


def normalize_unit(
    label: str, value: float, rules: list[UnitRule] | None = None
) -> tuple[str, float]:
    """Convert a raw quantity to its canonical unit via the first regex rule.

    Exactly one rule may match; pounds become kilograms, gallons litres, and
    count-like labels stay as pieces.
    """
    rules = DEFAULT_UNIT_RULES if rules is None else rules
    hits = [r for r in rules if r.matches(label)]
    if not hits:
        raise UnknownUnitError(label)
    if len(hits) > 1:
        raise AmbiguousUnitError(label, [r.pattern for r in hits])
    rule = hits[0]
    return rule.canonical_unit, value * rule.factor


def _slug(label: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", label.strip().lower()).strip("_")


def _norm_key(label: str) -> str:
    return " ".join(str(label).strip().casefold().split())


def build_catalog(
    transactions: pd.DataFrame,
    env_table: pd.DataFrame,
    nutrition_table: pd.DataFrame,
    rules: list[UnitRule] | None = None,
    estimator: str = "mean",
) -> tuple[Catalog, dict]:
    """Join the three sources into a per-unit coefficient catalog.

    The price coefficient of a product is the mean (or median) of
    paid_price / canonical_quantity over its transactions; environmental and
    nutrition coefficients are copied from the category tables. Products with
    mixed weight/volume labels or without a category match are dropped and
    listed in the returned ingestion report.
    """
    if estimator not in ("mean", "median"):
        raise ValueError("estimator must be 'mean' or 'median'")
    rules = DEFAULT_UNIT_RULES if rules is None else rules

    env_lookup = {
        _norm_key(row["category"]): [float(row[c]) for c in ENV_COLUMNS]
        for _, row in env_table.iterrows()
    }
    nut_lookup = {
        _norm_key(row["category"]): [float(row[c]) for c in NUTRITION_COLUMNS]
        for _, row in nutrition_table.iterrows()
    }

    rule_hits: dict[str, int] = {r.pattern: 0 for r in rules}
    per_product: dict[str, dict] = {}
    dropped: list[dict] = []
    bad_units: set[str] = set()

    for _, row in transactions.iterrows():
        label = str(row["product_label"])
        key = _norm_key(label)
        qty = float(row["quantity_value"])
        if qty <= 0:
            raise ValueError(f"non-positive quantity for {label!r}")
        price = float(row["paid_price"])
        if price < 0:
            raise ValueError(f"negative price for {label!r}")
        try:
            unit, canonical_qty = normalize_unit(str(row["quantity_unit_label"]), qty, rules)
        except UnknownUnitError as err:
            if key not in bad_units:
                dropped.append({"label": label, "reason": f"unknown unit {err.label!r}"})
                bad_units.add(key)
            continue
        for r in rules:
            if r.matches(str(row["quantity_unit_label"])):
                rule_hits[r.pattern] += 1
                break
        entry = per_product.setdefault(
            key, {"label": label, "units": set(), "unit_prices": []}
        )
        entry["units"].add(unit)
        entry["unit_prices"].append(price / canonical_qty)

    rows = []
    for key in sorted(per_product, key=lambda k: _slug(per_product[k]["label"])):
        entry = per_product[key]
        if key in bad_units:
            continue
        if len(entry["units"]) > 1:
            dropped.append({"label": entry["label"], "reason": "mixed unit families"})
            continue
        if key not in env_lookup:
            dropped.append({"label": entry["label"], "reason": "missing in env table"})
            continue
        if key not in nut_lookup:
            dropped.append({"label": entry["label"], "reason": "missing in nutrition table"})
            continue
        prices = np.asarray(entry["unit_prices"], dtype=float)
        price = float(np.mean(prices) if estimator == "mean" else np.median(prices))
        rows.append(
            {
                "product_id": _slug(entry["label"]),
                "name": entry["label"],
                "unit": next(iter(entry["units"])),
                "coeffs": [price] + nut_lookup[key] + env_lookup[key],
            }
        )

    if not rows:
        raise EmptyCatalogError("no product survived the ingestion join")

    catalog = Catalog(
        product_ids=tuple(r["product_id"] for r in rows),
        names=tuple(r["name"] for r in rows),
        units=tuple(r["unit"] for r in rows),
        coeffs=np.asarray([r["coeffs"] for r in rows], dtype=float),
    )
    report = {
        "n_products": catalog.size,
        "n_transactions": int(len(transactions)),
        "dropped": dropped,
        "unit_rule_hits": rule_hits,
        "estimator": estimator,
    }
    return catalog, report


# Default per-feature coefficient ranges for the synthetic catalog
# (per canonical unit; loosely food-scaled, strictly positive).
DEFAULT_COEFF_RANGES = {
    "price_usd": (0.5, 12.0),
    "energy_kcal": (50.0, 3200.0),
    "protein_g": (1.0, 120.0),
    "fat_g": (0.5, 90.0),
    "ghg_kgco2e": (0.2, 30.0),
    "acid_kgso2e": (0.005, 0.5),
    "eutro_kgpo4e": (0.002, 0.25),
    "land_m2": (0.3, 120.0),
    "water_l": (20.0, 3500.0),
    "stressed_water_l": (5.0, 900.0),
}

_ADJECTIVES = [
    "organic", "frozen", "fresh", "smoked", "dried", "whole", "canned",
    "roasted", "wild", "local", "aged", "sweet",
]
_NOUNS = [
    "oats", "milk", "beef", "apples", "rice", "cheese", "beans", "yogurt",
    "bread", "salmon", "lentils", "tomatoes", "butter", "eggs", "chicken",
    "pasta", "spinach", "coffee", "honey", "nuts", "flour", "juice",
]


@dataclass
class SynthConfig:
    """Knobs for the deterministic synthetic catalog + corpus generator."""

    seed: int = 0
    n_households: int = 50
    n_weeks: int = 10
    n_products: int = 132
    repertoire_size: int = 20  # products a household ever buys
    min_items: int = 4  # distinct products per weekly basket
    max_items: int = 10
    max_quantity: int = 5
    coeff_ranges: dict = field(default_factory=lambda: dict(DEFAULT_COEFF_RANGES))
    # share of cross-feature correlation injected via a per-product intensity
    intensity_mix: float = 0.6

    def validate(self):
        if min(self.n_households, self.n_weeks, self.n_products) < 1:
            raise ValueError("household, week, and product counts must be >= 1")
        if not 1 <= self.min_items <= self.max_items:
            raise ValueError("need 1 <= min_items <= max_items")
        if self.max_items > self.n_products:
            raise ValueError("basket cannot hold more distinct products than exist")
        if self.max_quantity < 1:
            raise ValueError("max_quantity must be >= 1")
        for name, (lo, hi) in self.coeff_ranges.items():
            if lo < 0 or hi < lo:
                raise ValueError(f"bad coefficient range for {name}: ({lo}, {hi})")


def synth_generate(config: SynthConfig) -> tuple[Catalog, pd.DataFrame, dict]:
    """Generate a catalog and weekly purchase corpus, reproducibly per seed.

    Coefficients are uniform draws inside the configured ranges, mixed with a
    per-product intensity so that price and environmental footprint correlate
    (cheap staples stay cheap everywhere, premium items cost everywhere).
    Quantities come from integer draws only.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    n = config.n_products

    names = []
    for i in range(n):
        adj = _ADJECTIVES[int(rng.integers(0, len(_ADJECTIVES)))]
        noun = _NOUNS[int(rng.integers(0, len(_NOUNS)))]
        names.append(f"{adj} {noun} #{i + 1}")
    units = [("kg", "L", "piece")[int(rng.integers(0, 3))] for _ in range(n)]

    intensity = rng.random(n)
    coeffs = np.empty((n, N_FEATURES))
    for j, col in enumerate(FEATURE_COLUMNS):
        lo, hi = config.coeff_ranges[col]
        u = config.intensity_mix * intensity + (1 - config.intensity_mix) * rng.random(n)
        coeffs[:, j] = lo + (hi - lo) * u

    catalog = Catalog(
        product_ids=tuple(f"P{i + 1:03d}" for i in range(n)),
        names=tuple(names),
        units=tuple(units),
        coeffs=coeffs,
    )

    records = []
    for h in range(config.n_households):
        household = f"H{h + 1:03d}"
        repertoire = rng.choice(n, size=min(config.repertoire_size, n), replace=False)
        weights = rng.random(len(repertoire))
        weights /= weights.sum()
        for week in range(1, config.n_weeks + 1):
            n_items = int(rng.integers(config.min_items, config.max_items + 1))
            n_items = min(n_items, len(repertoire))
            chosen = rng.choice(repertoire, size=n_items, replace=False, p=weights)
            for idx in sorted(int(i) for i in chosen):
                quantity = 1 + int(rng.binomial(config.max_quantity - 1, 0.25))
                records.append(
                    {
                        "household_id": household,
                        "week": week,
                        "product_id": catalog.product_ids[idx],
                        "quantity": quantity,
                    }
                )

    corpus = pd.DataFrame.from_records(records, columns=CORPUS_HEADER)
    stats = {
        "n_households": config.n_households,
        "n_weeks": config.n_weeks,
        "n_products": n,
        "n_baskets": int(corpus.groupby(["household_id", "week"]).ngroups),
        "n_rows": int(len(corpus)),
        "mean_items_per_basket": float(
            corpus.groupby(["household_id", "week"]).size().mean()
        ),
        "seed": config.seed,
    }
    return catalog, corpus, stats


def corpus_from_transactions(
    transactions: pd.DataFrame,
    catalog: Catalog,
    rules: list[UnitRule] | None = None,
) -> pd.DataFrame:
    """Aggregate raw transactions into the weekly integer basket corpus.

    Quantities are canonical units rounded to integers, at least 1 per
    purchase; products that did not survive catalog ingestion are skipped.
    """
    rules = DEFAULT_UNIT_RULES if rules is None else rules
    known = set(catalog.product_ids)
    bucket: dict[tuple[str, int, str], int] = {}
    for _, row in transactions.iterrows():
        pid = _slug(str(row["product_label"]))
        if pid not in known:
            continue
        try:
            _, qty = normalize_unit(str(row["quantity_unit_label"]), float(row["quantity_value"]), rules)
        except UnknownUnitError:
            continue
        units = max(1, int(np.floor(abs(qty) + 0.5)))
        key = (str(row["household_id"]), int(row["week"]), pid)
        bucket[key] = bucket.get(key, 0) + units
    records = [
        {"household_id": h, "week": w, "product_id": p, "quantity": q}
        for (h, w, p), q in sorted(bucket.items())
    ]
    return pd.DataFrame.from_records(records, columns=CORPUS_HEADER)


def baskets_from_corpus(
    corpus: pd.DataFrame, catalog: Catalog
) -> dict[tuple[str, int], np.ndarray]:
    """Pivot the long corpus into dense intended-basket vectors keyed by
    (household_id, week)."""
    baskets: dict[tuple[str, int], np.ndarray] = {}
    for (household, week), group in corpus.groupby(["household_id", "week"], sort=True):
        x = np.zeros(catalog.size, dtype=np.int64)
        for _, row in group.iterrows():
            x[catalog.index_of(row["product_id"])] += int(row["quantity"])
        baskets[(str(household), int(week))] = x
    return baskets


def select_top_emitters(corpus: pd.DataFrame, catalog: Catalog, k: int) -> list[str]:
    """Households ranked by total GHG over all their baskets, top k.

    Ties break by ascending household id; asking for more households than
    exist returns everyone with a warning.
    """
    if corpus.empty:
        raise ValueError("corpus is empty")
    ghg_col = FEATURE_COLUMNS.index("ghg_kgco2e")
    per_product_ghg = {
        pid: catalog.coeffs[i, ghg_col] for i, pid in enumerate(catalog.product_ids)
    }
    ghg = corpus["product_id"].map(per_product_ghg) * corpus["quantity"]
    totals = ghg.groupby(corpus["household_id"]).sum()
    if k > len(totals):
        warnings.warn(
            f"requested top {k} emitters but only {len(totals)} households exist",
            stacklevel=2,
        )
        k = len(totals)
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    return [household for household, _ in ranked[:k]]


def write_catalog_csv(catalog: Catalog, path) -> None:
    df = pd.DataFrame(
        {
            "product_id": catalog.product_ids,
            "name": catalog.names,
            "unit": catalog.units,
        }
    )
    for j, col in enumerate(FEATURE_COLUMNS):
        df[col] = catalog.coeffs[:, j]
    df.to_csv(path, index=False, float_format="%.10g")


def read_catalog_csv(path) -> Catalog:
    df = pd.read_csv(path)
    missing = [c for c in CATALOG_HEADER if c not in df.columns]
    if missing:
        raise ValueError(f"catalog file misses columns: {missing}")
    return Catalog(
        product_ids=tuple(str(p) for p in df["product_id"]),
        names=tuple(str(nm) for nm in df["name"]),
        units=tuple(str(u) for u in df["unit"]),
        coeffs=df[FEATURE_COLUMNS].to_numpy(dtype=float),
    )


def write_corpus_csv(corpus: pd.DataFrame, path) -> None:
    corpus.to_csv(path, index=False)


def read_corpus_csv(path) -> pd.DataFrame:
    df = pd.read_csv(path)
    missing = [c for c in CORPUS_HEADER if c not in df.columns]
    if missing:
        raise ValueError(f"basket file misses columns: {missing}")
    return df


def write_report_json(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
