import itertools

import numpy as np
import pytest

from hetsem.errors import InvalidArgumentError
from hetsem.evaluate import (
    flatness_test,
    kernel_conditional_variance,
    ppi_roc_auc,
    silverman_bandwidth,
    structure_metrics,
)


def brute_force_counts(truth, estimate):
    """Pair-by-pair confusion counter, independent of the vectorized path."""
    p = truth.shape[0]
    tp = fp = tn = fn = 0
    for j, l in itertools.permutations(range(p), 2):
        t, e = truth[j, l], estimate[j, l]
        if t and e:
            tp += 1
        elif not t and e:
            fp += 1
        elif t and not e:
            fn += 1
        else:
            tn += 1
    return tp, fp, tn, fn


class TestStructureMetrics:
    def test_perfect_recovery(self):
        r = np.zeros((4, 4), dtype=int)
        r[1, 0] = r[2, 1] = 1
        m = structure_metrics(r, r)
        assert (m.tpr, m.fdr, m.mcc) == (1.0, 0.0, 1.0)

    def test_hand_enumerated_case(self):
        # truth {1->2, 2->3}, estimate {1->2, 3->2} on p = 3 (1-based labels)
        truth = np.zeros((3, 3), dtype=int)
        truth[1, 0] = 1
        truth[2, 1] = 1
        est = np.zeros((3, 3), dtype=int)
        est[1, 0] = 1
        est[1, 2] = 1
        m = structure_metrics(truth, est)
        assert (m.tp, m.fp, m.fn, m.tn) == (1, 1, 1, 3)
        assert m.tpr == 0.5 and m.fdr == 0.5
        assert abs(m.mcc - 0.25) < 1e-12

    def test_empty_estimate_conventions(self):
        truth = np.zeros((3, 3), dtype=int)
        truth[1, 0] = 1
        m = structure_metrics(truth, np.zeros((3, 3), dtype=int))
        assert m.tpr == 0.0 and m.fdr == 0.0 and m.mcc == 0.0

    def test_counts_total_all_ordered_pairs(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            p = int(rng.integers(2, 7))
            truth = rng.integers(0, 2, size=(p, p))
            est = rng.integers(0, 2, size=(p, p))
            np.fill_diagonal(truth, 0)
            np.fill_diagonal(est, 0)
            m = structure_metrics(truth, est)
            assert m.tp + m.fp + m.tn + m.fn == p * (p - 1)
            assert (m.tp, m.fp, m.tn, m.fn) == brute_force_counts(truth, est)

    def test_mcc_symmetry(self):
        rng = np.random.default_rng(11)
        truth = rng.integers(0, 2, size=(5, 5))
        est = rng.integers(0, 2, size=(5, 5))
        np.fill_diagonal(truth, 0)
        np.fill_diagonal(est, 0)
        assert structure_metrics(truth, est).mcc == pytest.approx(
            structure_metrics(est, truth).mcc
        )

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(13)
        truth = rng.integers(0, 2, size=(6, 6))
        est = rng.integers(0, 2, size=(6, 6))
        np.fill_diagonal(truth, 0)
        np.fill_diagonal(est, 0)
        perm = rng.permutation(6)
        a = structure_metrics(truth, est)
        b = structure_metrics(truth[np.ix_(perm, perm)], est[np.ix_(perm, perm)])
        assert a == b

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            structure_metrics(np.zeros((3, 3), dtype=int), np.zeros((4, 4), dtype=int))


class TestRocAuc:
    def test_perfect_ranking(self):
        truth = np.zeros((3, 3), dtype=int)
        truth[1, 0] = 1
        scores = np.zeros((3, 3))
        scores[1, 0] = 0.9
        assert ppi_roc_auc(truth, scores) == pytest.approx(1.0)

    def test_all_ties_is_half(self):
        truth = np.zeros((3, 3), dtype=int)
        truth[1, 0] = 1
        assert ppi_roc_auc(truth, np.full((3, 3), 0.5)) == pytest.approx(0.5)

    def test_matches_threshold_sweep(self):
        rng = np.random.default_rng(5)
        truth = rng.integers(0, 2, size=(5, 5))
        np.fill_diagonal(truth, 0)
        truth[1, 0] = 1
        truth[0, 1] = 0
        scores = rng.random((5, 5))
        off = ~np.eye(5, dtype=bool)
        labels, vals = truth[off].astype(bool), scores[off]
        # explicit sweep over thresholds, trapezoid over (FPR, TPR)
        thresholds = np.concatenate([[np.inf], np.sort(np.unique(vals))[::-1], [-np.inf]])
        tprs, fprs = [], []
        for th in thresholds:
            pred = vals > th
            tprs.append((pred & labels).sum() / labels.sum())
            fprs.append((pred & ~labels).sum() / (~labels).sum())
        sweep_auc = np.trapezoid(tprs, fprs)
        assert ppi_roc_auc(truth, scores) == pytest.approx(sweep_auc)


class TestKernelVariance:
    def test_iid_normal_curve_near_one(self):
        rng = np.random.default_rng(0)
        n = 10_000
        z = rng.uniform(-1, 1, n)
        x = rng.normal(size=n)
        curve = kernel_conditional_variance(x, z)
        assert np.abs(curve.estimate - 1.0).max() < 0.1

    def test_deterministic_conditional_is_near_zero(self):
        rng = np.random.default_rng(1)
        z = rng.uniform(-1, 1, 5000)
        curve = kernel_conditional_variance(z.copy(), z)
        # smoothing bias only: local variance of a unit-slope line ~ bandwidth^2
        assert np.median(curve.estimate) < 2.0 * curve.bandwidth**2

    def test_scale_equivariance(self):
        rng = np.random.default_rng(2)
        z = rng.uniform(-1, 1, 2000)
        x = rng.normal(size=2000)
        c = 3.0
        base = kernel_conditional_variance(x, z, bandwidth=0.2)
        scaled = kernel_conditional_variance(c * x, z, bandwidth=0.2)
        assert np.allclose(scaled.estimate, c * c * base.estimate, rtol=1e-10)

    def test_rejects_tiny_samples_and_constant_z(self):
        with pytest.raises(InvalidArgumentError):
            kernel_conditional_variance(np.ones(5), np.linspace(0, 1, 5))
        with pytest.raises(InvalidArgumentError):
            kernel_conditional_variance(np.random.default_rng(0).normal(size=50), np.ones(50))

    def test_grid_must_lie_in_range(self):
        rng = np.random.default_rng(3)
        z = rng.uniform(0, 1, 100)
        with pytest.raises(InvalidArgumentError):
            kernel_conditional_variance(rng.normal(size=100), z, grid=np.array([-1.0, 0.5]))

    def test_silverman_positive(self):
        z = np.random.default_rng(4).uniform(-1, 1, 500)
        assert silverman_bandwidth(z) > 0


class TestFlatness:
    def test_constant_curve_is_flat(self):
        rng = np.random.default_rng(0)
        z = rng.uniform(-1, 1, 2000)
        x = rng.normal(size=2000)
        curve = kernel_conditional_variance(x, z)
        res = flatness_test(curve, x, z, reps=100, rng=np.random.default_rng(1))
        assert res.flat

    def test_varying_curve_is_not_flat(self):
        rng = np.random.default_rng(1)
        z = rng.uniform(-1, 1, 2000)
        b = 0.5 * np.sin(np.pi * z)
        x = rng.normal(size=2000) * np.sqrt(b * b + b + 1.0)
        curve = kernel_conditional_variance(x, z)
        res = flatness_test(curve, x, z, reps=100, rng=np.random.default_rng(2))
        assert not res.flat

    def test_score_orders_analytic_curves(self):
        z = np.linspace(-0.9, 0.9, 200)
        b = 0.5 * np.sin(np.pi * z)
        varying = b * b + b + 1.0
        rng = np.random.default_rng(3)
        zz = rng.uniform(-1, 1, 1000)
        flat_curve = kernel_conditional_variance(rng.normal(size=1000), zz)
        from hetsem.evaluate import VarianceCurve

        analytic = VarianceCurve(grid=z, estimate=varying, bandwidth=0.1)
        flat_score = flatness_test(flat_curve, rng.normal(size=1000), zz, reps=50).score
        varying_score = flatness_test(analytic, rng.normal(size=1000), zz, reps=50).score
        assert varying_score > flat_score
