"""Regression and classification statistics against brute-force oracles."""

import numpy as np
import pytest
import scipy.stats

from thermofuse.errors import DomainError, MetricUndefinedError, ShapeError
from thermofuse.metrics import (
    DESTABILIZING,
    STABILIZING,
    average_ranks,
    classification_report,
    classify_sign,
    mse,
    r2,
    regression_report,
    rmse,
    spearman,
)
from oracles import mse_bf, r2_bf, rmse_bf, spearman_bf


class TestSpearman:
    def test_identical_ranking_is_one(self):
        assert spearman([1.0, 5.0, 9.0], [1.0, 5.0, 9.0]) == pytest.approx(1.0)

    def test_reversed_ranking_is_minus_one(self):
        assert spearman([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) == pytest.approx(-1.0)

    def test_textbook_example_is_exactly_0_8(self):
        assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == 0.8

    def test_ties_use_midranks(self):
        x = [1.0, 1.0, 2.0, 3.0]
        np.testing.assert_array_equal(average_ranks(x), [1.5, 1.5, 3.0, 4.0])
        y = [4.0, 2.0, 2.0, 1.0]
        expected = scipy.stats.spearmanr(x, y).statistic
        assert spearman(x, y) == pytest.approx(expected, abs=1e-12)

    def test_constant_vector_is_undefined(self):
        with pytest.raises(MetricUndefinedError):
            spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        x, y = rng.standard_normal(20), rng.standard_normal(20)
        assert spearman(x, y) == pytest.approx(spearman(y, x), abs=1e-15)

    def test_invariant_under_monotone_transforms(self):
        rng = np.random.default_rng(1)
        x, y = rng.standard_normal(30), rng.standard_normal(30)
        base = spearman(x, y)
        assert spearman(np.exp(x), y) == pytest.approx(base, abs=1e-12)
        assert spearman(x, 3.0 * y + 7.0) == pytest.approx(base, abs=1e-12)
        assert spearman(np.exp(x), np.exp(y)) == pytest.approx(base, abs=1e-12)

    def test_matches_scipy_with_heavy_ties(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            x = rng.integers(0, 4, size=15).astype(float)
            y = rng.integers(0, 4, size=15).astype(float)
            if len(set(x)) < 2 or len(set(y)) < 2:
                continue
            assert spearman(x, y) == pytest.approx(
                scipy.stats.spearmanr(x, y).statistic, abs=1e-12)


class TestRegression:
    def test_r2_perfect_prediction(self):
        assert r2([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 1.0

    def test_r2_mean_prediction_is_zero(self):
        assert r2([2.0, 2.0, 2.0], [1.0, 2.0, 3.0]) == 0.0

    def test_r2_hand_computed(self):
        assert r2([1.0, 2.0, 4.0], [1.0, 2.0, 3.0]) == pytest.approx(0.5)

    def test_r2_constant_target_undefined(self):
        with pytest.raises(MetricUndefinedError):
            r2([1.0, 2.0], [5.0, 5.0])

    def test_r2_is_not_symmetric(self):
        pred, target = [1.0, 2.0, 4.0], [1.0, 2.0, 3.0]
        assert r2(pred, target) != r2(target, pred)

    def test_mse_examples(self):
        assert mse([1.0, 2.0, 3.0], [2.0, 2.0, 2.0]) == pytest.approx(2 / 3)
        with pytest.raises(ShapeError):
            mse([1.0], [1.0, 2.0])

    def test_report_invariants(self):
        rng = np.random.default_rng(3)
        pred, target = rng.standard_normal(25), rng.standard_normal(25)
        rep = regression_report(pred, target)
        assert rep.rmse == pytest.approx(np.sqrt(rep.mse), abs=1e-12)
        assert -1.0 <= rep.spearman <= 1.0
        assert rep.n == 25

    def test_oracle_equivalence_on_random_pairs(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            n = int(rng.integers(2, 40))
            pred = rng.standard_normal(n)
            target = rng.standard_normal(n)
            assert mse(pred, target) == pytest.approx(mse_bf(pred, target), abs=1e-9)
            assert rmse(pred, target) == pytest.approx(rmse_bf(pred, target), abs=1e-9)
            assert r2(pred, target) == pytest.approx(r2_bf(pred, target), abs=1e-9)
            assert spearman(pred, target) == pytest.approx(
                spearman_bf(pred.tolist(), target.tolist()), abs=1e-9)


class TestClassification:
    def test_sign_convention(self):
        assert classify_sign(1.5) == DESTABILIZING
        assert classify_sign(-0.8) == STABILIZING
        assert classify_sign(0.0) == STABILIZING

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            classify_sign(float("nan"))

    def test_all_correct(self):
        labels = [DESTABILIZING, STABILIZING, DESTABILIZING]
        rep = classification_report(labels, labels)
        assert rep.accuracy == 1.0
        assert (rep.tp, rep.fp, rep.tn, rep.fn) == (2, 0, 1, 0)

    def test_hand_counted_confusion(self):
        pred = [DESTABILIZING, DESTABILIZING, DESTABILIZING, STABILIZING]
        true = [DESTABILIZING, DESTABILIZING, STABILIZING, DESTABILIZING]
        rep = classification_report(pred, true)
        assert (rep.tp, rep.fp, rep.fn, rep.tn) == (2, 1, 1, 0)
        assert rep.precision == pytest.approx(2 / 3)
        assert rep.recall == pytest.approx(2 / 3)
        assert rep.f1 == pytest.approx(2 / 3)

    def test_recall_one_iff_no_false_negatives(self):
        rng = np.random.default_rng(5)
        seen_fn0 = seen_fn_pos = False
        for _ in range(200):
            n = int(rng.integers(2, 12))
            pred = [DESTABILIZING if v else STABILIZING for v in rng.integers(0, 2, n)]
            true = [DESTABILIZING if v else STABILIZING for v in rng.integers(0, 2, n)]
            rep = classification_report(pred, true)
            if rep.recall is None:
                continue
            assert (rep.recall == 1.0) == (rep.fn == 0)
            seen_fn0 |= rep.fn == 0
            seen_fn_pos |= rep.fn > 0
        assert seen_fn0 and seen_fn_pos

    def test_accuracy_is_exact_count_arithmetic(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            n = int(rng.integers(1, 20))
            pred = [DESTABILIZING if v else STABILIZING for v in rng.integers(0, 2, n)]
            true = [DESTABILIZING if v else STABILIZING for v in rng.integers(0, 2, n)]
            rep = classification_report(pred, true)
            assert rep.accuracy == (rep.tp + rep.tn) / n
            assert rep.tp + rep.tn + rep.fp + rep.fn == n

    def test_undefined_rates_are_none(self):
        rep = classification_report([STABILIZING, STABILIZING],
                                    [STABILIZING, STABILIZING])
        assert rep.precision is None  # no predicted positives
        assert rep.recall is None     # no true positives
        assert rep.f1 is None
