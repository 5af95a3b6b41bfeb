"""Calibration metrics: binning, ECE, classwise ECE, NLL, KLD, error rate."""

import math

import numpy as np
import pytest

from focal_calib import (
    DomainError,
    EmptyDataError,
    PredictionSet,
    ScoreKind,
    apply_psi_dataset,
    bin_reliability,
    cw_ece,
    ece,
    error_rate,
    kld,
    kld_rows,
    nll,
)
from focal_calib.metrics import bin_index


def _preds(scores, labels):
    return PredictionSet(np.asarray(scores, float), np.asarray(labels, int))


class TestBinAssignment:
    def test_zero_confidence_goes_to_first_bin(self):
        assert bin_index(np.array([0.0]), 10)[0] == 1

    def test_full_confidence_stays_in_top_bin(self):
        assert bin_index(np.array([1.0]), 10)[0] == 10

    def test_interior_values(self):
        idx = bin_index(np.array([0.05, 0.15, 0.95]), 10)
        np.testing.assert_array_equal(idx, [1, 2, 10])

    def test_edge_goes_to_lower_adjacent_bin(self):
        # bins are (lo, hi]: an exact edge belongs to the bin it closes
        assert bin_index(np.array([0.1]), 10)[0] == 1

    @pytest.mark.parametrize("n_bins", [1, 10, 15])
    def test_assignment_is_total(self, n_bins):
        rng = np.random.default_rng(0)
        conf = np.concatenate([[0.0, 1.0], rng.uniform(0, 1, 500)])
        idx = bin_index(conf, n_bins)
        assert idx.min() >= 1 and idx.max() <= n_bins


class TestBinReliability:
    def test_perfectly_confident_and_correct(self):
        preds = _preds([[1.0, 0.0], [0.0, 1.0]], [1, 2])
        assert bin_reliability(preds, 10).ece == 0.0

    def test_single_sample_hand_value(self):
        preds = _preds([[0.75, 0.25]], [1])
        report = bin_reliability(preds, 10)
        assert report.ece == pytest.approx(abs(1.0 - 0.75), abs=1e-15)

    def test_two_samples_one_bin_hand_value(self):
        preds = _preds([[0.6, 0.4], [0.8, 0.2]], [1, 2])
        report = bin_reliability(preds, 1)
        assert report.ece == pytest.approx(abs(0.5 - 0.7), abs=1e-15)

    def test_counts_sum_to_n(self):
        rng = np.random.default_rng(1)
        scores = rng.dirichlet(np.ones(4), size=300)
        labels = rng.integers(1, 5, size=300)
        report = bin_reliability(_preds(scores, labels), 15)
        assert report.n == 300

    def test_ece_recomputable_bit_for_bit(self):
        rng = np.random.default_rng(2)
        scores = rng.dirichlet(np.ones(3), size=500)
        labels = rng.integers(1, 4, size=500)
        report = bin_reliability(_preds(scores, labels), 10)
        assert report.recompute_ece() == report.ece

    def test_empty_dataset(self):
        preds = PredictionSet(np.zeros((0, 2)), np.zeros(0, dtype=int))
        with pytest.raises(EmptyDataError):
            bin_reliability(preds, 10)

    def test_ece_bounds(self):
        rng = np.random.default_rng(3)
        scores = rng.dirichlet(np.ones(5), size=200)
        labels = rng.integers(1, 6, size=200)
        assert 0.0 <= ece(_preds(scores, labels), 10) <= 1.0

    def test_logits_rejected(self):
        preds = PredictionSet(np.array([[1.0, -1.0]]), np.array([1]), ScoreKind.LOGITS)
        with pytest.raises(DomainError):
            bin_reliability(preds, 10)


class TestClasswiseEce:
    def test_hand_value_two_class(self):
        preds = _preds([[0.9, 0.1]], [1])
        expected = 0.5 * (abs(1.0 - 0.9) + abs(0.0 - 0.1))
        assert cw_ece(preds, 1) == pytest.approx(expected, abs=1e-15)

    def test_calibrated_constant_predictor(self):
        # constant prediction matching exact class frequencies
        scores = np.tile([0.75, 0.25], (4, 1))
        labels = np.array([1, 1, 1, 2])
        assert cw_ece(_preds(scores, labels), 1) == pytest.approx(0.0, abs=1e-15)

    def test_bounded(self):
        rng = np.random.default_rng(4)
        scores = rng.dirichlet(np.ones(3), size=150)
        labels = rng.integers(1, 4, size=150)
        assert 0.0 <= cw_ece(_preds(scores, labels), 10) <= 1.0


class TestNll:
    def test_certain_predictions(self):
        preds = _preds([[1.0, 0.0], [0.0, 1.0]], [1, 2])
        assert nll(preds) == 0.0

    def test_hand_values(self):
        assert nll(_preds([[0.5, 0.5]], [1])) == pytest.approx(math.log(2), abs=1e-15)
        two = _preds([[0.5, 0.5], [0.5, 0.5]], [1, 2])
        assert nll(two) == pytest.approx(2 * math.log(2), abs=1e-15)

    def test_sum_vs_mean(self):
        rng = np.random.default_rng(5)
        preds = _preds(rng.dirichlet(np.ones(3), size=64), rng.integers(1, 4, size=64))
        assert nll(preds) / 64 == pytest.approx(nll(preds, mean=True), abs=1e-12)

    def test_strict_zero_is_inf(self):
        preds = _preds([[0.0, 1.0]], [1])
        assert nll(preds) == math.inf
        assert math.isfinite(nll(preds, safe=True))

    def test_empty(self):
        with pytest.raises(EmptyDataError):
            nll(PredictionSet(np.zeros((0, 2)), np.zeros(0, dtype=int)))


class TestKld:
    def test_identical_is_zero(self):
        assert kld([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_hand_value(self):
        assert kld([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)

    def test_absolute_continuity_violation(self):
        assert kld([0.5, 0.5], [1.0, 0.0]) == math.inf

    def test_nonnegative_random_pairs(self):
        rng = np.random.default_rng(6)
        for _ in range(10_000):
            k = int(rng.integers(2, 6))
            p = rng.dirichlet(np.ones(k))
            q = rng.dirichlet(np.ones(k))
            assert kld(p, q) >= 0.0

    def test_zero_only_at_equality(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            p = rng.dirichlet(np.ones(3))
            q = rng.dirichlet(np.ones(3))
            if kld(p, q) < 1e-12:
                np.testing.assert_allclose(p, q, atol=1e-5)

    def test_rows_matches_scalar(self):
        rng = np.random.default_rng(8)
        P = rng.dirichlet(np.ones(4), size=50)
        Q = rng.dirichlet(np.ones(4), size=50)
        batch = kld_rows(P, Q)
        singles = [kld(p, q) for p, q in zip(P, Q)]
        np.testing.assert_allclose(batch, singles, atol=1e-12)


class TestErrorRate:
    def test_all_correct(self):
        preds = _preds([[1.0, 0.0], [0.0, 1.0]], [1, 2])
        assert error_rate(preds) == 0.0

    def test_all_wrong(self):
        preds = _preds([[1.0, 0.0], [0.0, 1.0]], [2, 1])
        assert error_rate(preds) == 1.0

    def test_half(self):
        preds = _preds([[0.9, 0.1], [0.9, 0.1]], [1, 2])
        assert error_rate(preds) == 0.5

    def test_tie_breaks_to_lowest_index(self):
        preds = _preds([[0.5, 0.5]], [1])
        assert error_rate(preds) == 0.0

    def test_invariant_under_recovery_transform(self):
        rng = np.random.default_rng(9)
        scores = rng.dirichlet(np.ones(4), size=400)
        labels = rng.integers(1, 5, size=400)
        preds = _preds(scores, labels)
        for gamma in (0.5, 2.0, 5.0):
            transformed = apply_psi_dataset(preds, gamma)
            assert error_rate(transformed) == error_rate(preds)
            # values do change, only the decision is invariant
            if gamma > 0:
                assert ece(transformed, 10) != ece(preds, 10)
