"""Objective-function tests against brute-force oracles and hand evaluation."""

import math

import numpy as np
import pytest

from greenbasket.domain import (
    AnchorContext,
    Catalog,
    DimensionError,
    InvalidAnchorError,
    N_FEATURES,
    UndefinedRatioError,
    cosine_similarity,
    evaluate_objectives,
    feature_ratio,
    feature_totals,
    feature_ratios,
)


def totals_oracle(coeffs, basket):
    """Scalar-loop summation of c[i][j] * x[i], independent of numpy matmul."""
    n, m = coeffs.shape
    out = [0.0] * m
    for j in range(m):
        for i in range(n):
            out[j] += coeffs[i][j] * basket[i]
    return np.array(out)


def random_catalog(rng, n=10):
    coeffs = rng.uniform(0.1, 5.0, size=(n, N_FEATURES))
    return Catalog(
        product_ids=tuple(f"P{i:03d}" for i in range(n)),
        names=tuple(f"product {i}" for i in range(n)),
        units=tuple(["kg", "L", "piece"][i % 3] for i in range(n)),
        coeffs=coeffs,
    )


@pytest.fixture
def catalog():
    return random_catalog(np.random.default_rng(7))


class TestFeatureTotals:
    def test_empty_basket_is_zero(self, catalog):
        assert np.all(feature_totals(catalog, np.zeros(10, dtype=int)) == 0.0)

    def test_single_item_linearity(self):
        coeffs = np.zeros((3, N_FEATURES))
        coeffs[1, 0] = 2.5
        cat = Catalog(
            product_ids=("a", "b", "c"),
            names=("a", "b", "c"),
            units=("kg", "kg", "kg"),
            coeffs=coeffs,
        )
        x = np.array([0, 1, 0])
        assert feature_totals(cat, x)[0] == 2.5

    def test_matches_loop_oracle(self, catalog):
        rng = np.random.default_rng(11)
        for _ in range(20):
            x = rng.integers(0, 6, size=10)
            expected = totals_oracle(catalog.coeffs, x)
            got = feature_totals(catalog, x)
            np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_length_mismatch(self, catalog):
        with pytest.raises(DimensionError):
            feature_totals(catalog, np.zeros(3, dtype=int))


class TestFeatureRatio:
    def test_identity_ratio(self, catalog):
        x = np.arange(10)
        for j in range(2, 12):
            assert feature_ratio(catalog, x, x, j) == 1.0

    def test_doubled_basket(self, catalog):
        x = np.arange(1, 11)
        for j in range(2, 12):
            assert feature_ratio(catalog, 2 * x, x, j) == pytest.approx(2.0, rel=1e-12)

    def test_matches_quotient_of_oracles(self, catalog):
        rng = np.random.default_rng(3)
        x = rng.integers(0, 5, size=10)
        ref = rng.integers(1, 5, size=10)
        for j in range(2, 12):
            expected = totals_oracle(catalog.coeffs, x)[j - 2] / totals_oracle(
                catalog.coeffs, ref
            )[j - 2]
            assert feature_ratio(catalog, x, ref, j) == pytest.approx(
                expected, rel=1e-12
            )

    def test_zero_denominator(self):
        coeffs = np.ones((2, N_FEATURES))
        coeffs[:, 3] = 0.0
        cat = Catalog(
            product_ids=("a", "b"),
            names=("a", "b"),
            units=("kg", "kg"),
            coeffs=coeffs,
        )
        with pytest.raises(UndefinedRatioError) as err:
            feature_ratio(cat, [1, 1], [1, 1], 5)
        assert err.value.feature_index == 5


class TestEvaluateObjectives:
    def test_anchor_evaluates_to_identity(self, catalog):
        x_star = np.array([2, 0, 1, 3, 0, 0, 4, 0, 1, 2])
        ctx = AnchorContext.build(catalog, x_star)
        z = evaluate_objectives(catalog, x_star, ctx)
        assert z[0] == pytest.approx(0.0, abs=1e-15)
        assert z[1] == pytest.approx(1.0, rel=1e-12)
        np.testing.assert_allclose(z[2:5], 0.0, atol=1e-15)
        np.testing.assert_allclose(z[5:], 1.0, rtol=1e-12)

    def test_empty_basket_convention(self, catalog):
        x_star = np.array([1, 2, 0, 0, 1, 0, 0, 0, 0, 0])
        ctx = AnchorContext.build(catalog, x_star)
        z = evaluate_objectives(catalog, np.zeros(10, dtype=int), ctx)
        assert z[0] == 1.0
        assert z[1] == 0.0
        np.testing.assert_allclose(z[2:5], 1.0)
        np.testing.assert_allclose(z[5:], 0.0)

    def test_triple_scaled_basket(self, catalog):
        # Hand evaluation with rho_j = 3: taste 0 by scale invariance, cost 3,
        # health (1-3)^2 = 4, environment 3.
        x_star = np.array([1, 0, 2, 0, 1, 1, 0, 0, 3, 0])
        ctx = AnchorContext.build(catalog, x_star)
        z = evaluate_objectives(catalog, 3 * x_star, ctx)
        assert z[0] == pytest.approx(0.0, abs=1e-12)
        assert z[1] == pytest.approx(3.0, rel=1e-12)
        np.testing.assert_allclose(z[2:5], 4.0, rtol=1e-12)
        np.testing.assert_allclose(z[5:], 3.0, rtol=1e-12)

    def test_empty_anchor_rejected(self, catalog):
        with pytest.raises(InvalidAnchorError):
            AnchorContext.build(catalog, np.zeros(10, dtype=int))

    def test_zero_anchor_feature_flags_infinity(self):
        coeffs = np.ones((2, N_FEATURES))
        coeffs[0, 4] = 0.0  # GHG of product a is zero
        cat = Catalog(
            product_ids=("a", "b"),
            names=("a", "b"),
            units=("kg", "kg"),
            coeffs=coeffs,
        )
        ctx = AnchorContext.build(cat, [1, 0])  # anchor GHG total is 0
        flagged = evaluate_objectives(cat, [0, 1], ctx)
        assert math.isinf(flagged[5])
        same = evaluate_objectives(cat, [2, 0], ctx)
        assert same[5] == 0.0

    def test_item_removal_strictly_decreases_cost_and_env(self, catalog):
        rng = np.random.default_rng(5)
        x_star = rng.integers(1, 5, size=10)
        ctx = AnchorContext.build(catalog, x_star)
        base = evaluate_objectives(catalog, x_star, ctx)
        for i in range(10):
            removed = x_star.copy()
            removed[i] -= 1
            z = evaluate_objectives(catalog, removed, ctx)
            assert z[1] < base[1]
            assert np.all(z[5:] < base[5:])

    def test_taste_scale_invariance(self, catalog):
        rng = np.random.default_rng(9)
        x = rng.integers(0, 4, size=10)
        x[0] = 1
        ctx = AnchorContext.build(catalog, rng.integers(1, 4, size=10))
        z1 = evaluate_objectives(catalog, x, ctx)
        z2 = evaluate_objectives(catalog, 5 * x, ctx)
        assert z1[0] == pytest.approx(z2[0], abs=1e-12)

    def test_matches_direct_formula_with_oracle_totals(self, catalog):
        rng = np.random.default_rng(21)
        x_star = rng.integers(1, 5, size=10)
        ctx = AnchorContext.build(catalog, x_star)
        for _ in range(25):
            x = rng.integers(0, 6, size=10)
            z = evaluate_objectives(catalog, x, ctx)
            vx = totals_oracle(catalog.coeffs, x)
            vs = totals_oracle(catalog.coeffs, x_star)
            rho = vx / vs
            expected = np.concatenate(
                (
                    [1.0 - cosine_similarity(x, x_star) if np.any(x) else 1.0],
                    [rho[0]],
                    (1.0 - rho[1:4]) ** 2,
                    rho[4:],
                )
            )
            np.testing.assert_allclose(z, expected, rtol=1e-12)


def test_feature_ratios_helper_matches_oracle(catalog):
    rng = np.random.default_rng(2)
    x_star = rng.integers(1, 4, size=10)
    ctx = AnchorContext.build(catalog, x_star)
    x = rng.integers(0, 4, size=10)
    expected = totals_oracle(catalog.coeffs, x) / totals_oracle(
        catalog.coeffs, x_star
    )
    np.testing.assert_allclose(feature_ratios(catalog, x, ctx), expected, rtol=1e-12)


def test_catalog_rejects_negative_coefficients():
    coeffs = np.ones((2, N_FEATURES))
    coeffs[1, 2] = -0.5
    with pytest.raises(ValueError):
        Catalog(
            product_ids=("a", "b"),
            names=("a", "b"),
            units=("kg", "kg"),
            coeffs=coeffs,
        )


def test_catalog_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        Catalog(
            product_ids=("a", "a"),
            names=("a", "b"),
            units=("kg", "kg"),
            coeffs=np.ones((2, N_FEATURES)),
        )
