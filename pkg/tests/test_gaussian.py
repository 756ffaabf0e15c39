"""Tests for the Gaussian information-theoretic primitives.

Expected values are frozen from closed-form log-determinant arithmetic
computed independently of the implementation path.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infoflow import (
    ConsistencyError,
    CovModel,
    DegenerateDataError,
    RidgePolicy,
    conditional_mi,
    dual_total_correlation,
    estimate_covariance,
    gaussian_entropy,
    mutual_information,
    o_information,
    total_correlation,
)

LOG_2PIE = math.log(2 * math.pi * math.e)

# Noisy-sum system: third variable is the sum of the first two plus noise.
SUM_COV = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 3.0]])
# Common-driver system: exchangeable correlated triple.
DRIVER_COV = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]])


def cov_model(matrix, labels=None):
    matrix = np.asarray(matrix, dtype=float)
    labels = labels or tuple(f"v{i}" for i in range(len(matrix)))
    return CovModel(labels=labels, matrix=matrix, sample_count=1000)


def random_spd(rng, d):
    a = rng.standard_normal((d, d + 2))
    return a @ a.T / (d + 2) + 0.1 * np.eye(d)


class TestEstimateCovariance:
    def test_hand_computed_small_sample(self):
        # Two identical columns over [(0,0),(1,1),(2,2)]: divisor T-1 gives all ones.
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
        model = estimate_covariance(X)
        assert np.allclose(model.matrix, [[1.0, 1.0], [1.0, 1.0]], atol=1e-7)
        assert model.sample_count == 3

    def test_duplicate_column_triggers_recorded_ridge(self):
        rng = np.random.default_rng(0)
        col = rng.standard_normal(500)
        model = estimate_covariance(np.column_stack([col, col]))
        assert model.ridge_applied > 0
        assert np.linalg.det(model.matrix) > 0

    def test_independent_columns_nearly_diagonal(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((100_000, 2))
        model = estimate_covariance(X)
        assert abs(model.matrix[0, 1]) < 0.02
        assert model.ridge_applied == 0.0

    def test_zero_variance_column_identified(self):
        X = np.column_stack([np.random.default_rng(2).standard_normal(50), np.full(50, 3.0)])
        with pytest.raises(DegenerateDataError, match="V1"):
            estimate_covariance(X)

    def test_requires_more_rows_than_columns(self):
        with pytest.raises(ValueError):
            estimate_covariance(np.eye(3))

    def test_labels_must_be_unique(self):
        with pytest.raises(ValueError):
            CovModel(labels=("a", "a"), matrix=np.eye(2), sample_count=10)


class TestEntropy:
    def test_unit_variance_scalar(self):
        model = cov_model([[1.0]])
        assert gaussian_entropy(model, ("v0",)) == pytest.approx(0.5 * LOG_2PIE, abs=1e-12)

    def test_independent_pair_is_additive(self):
        model = cov_model(np.eye(2))
        assert gaussian_entropy(model, ("v0", "v1")) == pytest.approx(LOG_2PIE, abs=1e-12)

    def test_correlated_pair_log_det(self):
        model = cov_model([[2.0, 1.0], [1.0, 2.0]])
        expected = LOG_2PIE + 0.5 * math.log(3.0)
        assert gaussian_entropy(model, ("v0", "v1")) == pytest.approx(expected, abs=1e-12)

    def test_degenerate_subset_rejected(self):
        model = cov_model([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(DegenerateDataError, match="degenerate"):
            gaussian_entropy(model, ("v0", "v1"))

    def test_empty_subset_rejected(self):
        with pytest.raises(ValueError):
            gaussian_entropy(cov_model(np.eye(2)), ())


class TestMutualInformation:
    def test_half_correlation_closed_form(self):
        model = cov_model([[1.0, 0.5], [0.5, 1.0]])
        assert mutual_information(model, ("v0",), ("v1",)) == pytest.approx(
            0.5 * math.log(4.0 / 3.0), abs=1e-12
        )

    def test_independent_blocks_zero(self):
        model = cov_model(np.eye(4))
        assert mutual_information(model, ("v0", "v1"), ("v2", "v3")) == 0.0

    def test_near_duplicate_with_ridge_is_large_finite(self):
        rng = np.random.default_rng(3)
        col = rng.standard_normal(2000)
        model = estimate_covariance(
            np.column_stack([col, col]), policy=RidgePolicy(lam=1e-8)
        )
        mi = mutual_information(model, ("V0",), ("V1",))
        assert np.isfinite(mi) and mi > 5.0

    def test_overlapping_subsets_rejected(self):
        with pytest.raises(ValueError):
            mutual_information(cov_model(np.eye(2)), ("v0",), ("v0",))


class TestConditionalMI:
    def test_markov_chain_conditional_independence(self):
        # a -> c -> b with unit innovations: a,b independent given c.
        cov = np.array([[1.0, 1.0, 1.0], [1.0, 2.0, 2.0], [1.0, 2.0, 3.0]])
        model = cov_model(cov, labels=("a", "c", "b"))
        assert conditional_mi(model, ("a",), ("b",), ("c",)) == 0.0

    def test_empty_condition_reduces_to_mi(self):
        model = cov_model([[1.0, 0.5], [0.5, 1.0]])
        assert conditional_mi(model, ("v0",), ("v1",), ()) == pytest.approx(
            0.5 * math.log(4.0 / 3.0), abs=1e-12
        )

    def test_log_det_oracle_value(self):
        # Conditioning on the first variable of the noisy-sum covariance:
        # residual covariance of (v1, v2) is [[1,1],[1,2]], so rho^2 = 1/2.
        model = cov_model(SUM_COV, labels=("c", "a", "b"))
        assert conditional_mi(model, ("a",), ("b",), ("c",)) == pytest.approx(
            0.5 * math.log(2.0), abs=1e-9
        )

    def test_pairwise_disjoint_enforced(self):
        model = cov_model(np.eye(3))
        with pytest.raises(ValueError):
            conditional_mi(model, ("v0",), ("v1",), ("v1",))


class TestHigherOrder:
    def test_tc_independent_zero(self):
        assert total_correlation(cov_model(np.eye(3)), ("v0", "v1", "v2")) == 0.0

    def test_tc_noisy_sum(self):
        model = cov_model(SUM_COV)
        assert total_correlation(model, model.labels) == pytest.approx(
            0.5 * math.log(3.0), abs=1e-9
        )

    def test_tc_common_driver(self):
        model = cov_model(DRIVER_COV)
        assert total_correlation(model, model.labels) == pytest.approx(
            0.5 * math.log(2.0), abs=1e-9
        )

    def test_dtc_independent_zero(self):
        assert dual_total_correlation(cov_model(np.eye(3)), ("v0", "v1", "v2")) == 0.0

    def test_dtc_noisy_sum(self):
        # Conditional variances are 1/2, 1/2, 1 -> DTC = ln 2.
        model = cov_model(SUM_COV)
        assert dual_total_correlation(model, model.labels) == pytest.approx(
            math.log(2.0), abs=1e-9
        )

    def test_dtc_common_driver(self):
        model = cov_model(DRIVER_COV)
        expected = 0.5 * (math.log(4.0) - 3.0 * math.log(4.0 / 3.0))
        assert dual_total_correlation(model, model.labels) == pytest.approx(expected, abs=1e-9)

    def test_o_information_pair_exactly_zero(self):
        model = cov_model(SUM_COV)
        assert o_information(model, ("v0", "v2")) == 0.0

    def test_o_information_synergistic_sum(self):
        model = cov_model(SUM_COV)
        expected = 0.5 * math.log(3.0) - math.log(2.0)
        assert o_information(model, model.labels) == pytest.approx(expected, abs=1e-9)

    def test_o_information_redundant_driver(self):
        model = cov_model(DRIVER_COV)
        assert o_information(model, model.labels) == pytest.approx(
            0.5 * math.log(32.0 / 27.0), abs=1e-9
        )

    def test_minimum_subset_sizes(self):
        model = cov_model(np.eye(3))
        for fn in (total_correlation, dual_total_correlation, o_information):
            with pytest.raises(ValueError):
                fn(model, ("v0",))


class TestInvariants:
    @given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=3, max_value=8))
    @settings(max_examples=60, deadline=None)
    def test_tc_dtc_nonnegative_and_pairs_zero(self, seed, d):
        rng = np.random.default_rng(seed)
        model = cov_model(random_spd(rng, d))
        subset = model.labels
        assert total_correlation(model, subset) >= 0.0
        assert dual_total_correlation(model, subset) >= 0.0
        assert abs(o_information(model, subset[:2])) <= 1e-12

    def test_conditioning_reduces_entropy(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            model = cov_model(random_spd(rng, 5))
            labs = model.labels
            h_marginal = gaussian_entropy(model, labs[:1])
            h_conditional = gaussian_entropy(model, labs[:3]) - gaussian_entropy(model, labs[1:3])
            assert h_conditional <= h_marginal + 1e-9

    def test_scale_invariance(self):
        rng = np.random.default_rng(12)
        base = random_spd(rng, 4)
        model = cov_model(base)
        for c in (1e-3, 1e3):
            scales = np.ones(4)
            scales[2] = c
            scaled = cov_model(base * np.outer(scales, scales))
            labs = model.labels
            assert mutual_information(scaled, labs[:1], labs[1:3]) == pytest.approx(
                mutual_information(model, labs[:1], labs[1:3]), abs=1e-9
            )
            assert conditional_mi(scaled, labs[:1], labs[1:2], labs[2:]) == pytest.approx(
                conditional_mi(model, labs[:1], labs[1:2], labs[2:]), abs=1e-9
            )
            for fn in (total_correlation, dual_total_correlation, o_information):
                assert fn(scaled, labs) == pytest.approx(fn(model, labs), abs=1e-9)

    def test_clamp_only_near_zero(self):
        model = cov_model(np.eye(2))
        assert mutual_information(model, ("v0",), ("v1",)) == 0.0
        # a genuinely negative "nonnegative" quantity must raise
        from infoflow.gaussian import _clamp_nonneg

        with pytest.raises(ConsistencyError):
            _clamp_nonneg(-1e-6, "test quantity")

    def test_monte_carlo_consistency_block_bootstrap(self):
        # 1e6 draws of the common-driver Gaussian reproduce analytic
        # TC/DTC/O within 3 block-bootstrap standard errors.
        rng = np.random.default_rng(21)
        chol = np.linalg.cholesky(DRIVER_COV)
        draws = rng.standard_normal((1_000_000, 3)) @ chol.T
        model = estimate_covariance(draws)
        labs = model.labels

        analytic = {
            "tc": 0.5 * math.log(2.0),
            "dtc": 0.5 * (math.log(4.0) - 3.0 * math.log(4.0 / 3.0)),
            "o": 0.5 * math.log(32.0 / 27.0),
        }
        estimates = {
            "tc": total_correlation(model, labs),
            "dtc": dual_total_correlation(model, labs),
            "o": o_information(model, labs),
        }

        n_blocks = 100
        blocks = np.array_split(draws, n_blocks)
        boot = {key: [] for key in analytic}
        for b in range(120):
            picked = rng.integers(0, n_blocks, size=n_blocks)
            sample = np.vstack([blocks[i] for i in picked])
            bm = estimate_covariance(sample)
            boot["tc"].append(total_correlation(bm, labs))
            boot["dtc"].append(dual_total_correlation(bm, labs))
            boot["o"].append(o_information(bm, labs))
        for key in analytic:
            se = np.std(boot[key], ddof=1)
            assert abs(estimates[key] - analytic[key]) < 3 * se, key
