"""Closed-form projector tests: frozen hand-derived cases plus invariants.

Every frozen scale/objective below was cross-checked against the brute-force
reference fits in binquant.bruteforce before being committed here.
"""

import math

import numpy as np
import pytest

from binquant import (Codebook, ValidationError, lloyd_mbit, lower_median,
                      project_binary_l1, project_binary_l2,
                      project_ternary_l1, project_ternary_l2,
                      relax_projection, weighted_median)


def rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


class TestBinaryL2:
    def test_mixed_sign_vector(self):
        r = project_binary_l2(np.array([1.0, -2.0, 3.0]))
        assert r.quantized.scale == 2.0
        assert r.quantized.codes.tolist() == [1, -1, 1]
        assert r.objective == pytest.approx(math.sqrt(2.0), abs=1e-15)

    def test_constant_vector_is_exact(self):
        for c in (0.5, 1.0, 7.25):
            r = project_binary_l2(np.array([c, c, c]))
            assert r.quantized.scale == c
            assert r.quantized.codes.tolist() == [1, 1, 1]
            assert r.objective == 0.0
            assert not r.degenerate

    def test_zero_vector_degenerate(self):
        r = project_binary_l2(np.zeros(3))
        assert r.quantized.scale == 0.0
        assert r.quantized.codes.tolist() == [1, 1, 1]
        assert r.objective == 0.0
        assert r.degenerate

    def test_scale_is_mean_magnitude(self):
        w = rng(0).normal(size=101)
        r = project_binary_l2(w)
        assert r.quantized.scale == pytest.approx(np.mean(np.abs(w)), abs=1e-15)

    def test_fine_grid_confirms_optimality(self):
        w = np.array([1.0, -2.0, 3.0])
        codes = np.sign(w)
        for s in np.linspace(0.0, 4.0, 2001):
            assert np.linalg.norm(s * codes - w) >= project_binary_l2(w).objective - 1e-12


class TestBinaryL1:
    def test_mixed_sign_vector(self):
        r = project_binary_l1(np.array([1.0, -2.0, 3.0]))
        assert r.quantized.scale == 2.0
        assert r.quantized.codes.tolist() == [1, -1, 1]
        assert r.objective == 2.0

    def test_outlier_robustness_contrast_with_l2(self):
        w = np.array([1.0, -1.0, 10.0])
        assert project_binary_l1(w).quantized.scale == 1.0
        assert project_binary_l1(w).quantized.codes.tolist() == [1, -1, 1]
        assert project_binary_l2(w).quantized.scale == 4.0

    def test_single_element(self):
        r = project_binary_l1(np.array([5.0]))
        assert r.quantized.scale == 5.0
        assert r.quantized.codes.tolist() == [1]
        assert r.objective == 0.0

    def test_even_length_lower_median(self):
        # objective is constant on s in [1, 3]; the lower-median rule pins s = 1
        r = project_binary_l1(np.array([1.0, -3.0]))
        assert r.quantized.scale == 1.0
        assert r.objective == 2.0
        for s in np.linspace(1.0, 3.0, 11):
            assert np.abs(s * r.quantized.codes - np.array([1.0, -3.0])).sum() \
                == pytest.approx(2.0, abs=1e-12)

    def test_median_equals_mean_makes_l1_and_l2_agree(self):
        w = np.array([1.0, -2.0, 3.0, -2.0, 1.0, 3.0])  # |w| median == mean == 2
        a, b = project_binary_l1(w), project_binary_l2(w)
        assert a.quantized.scale == b.quantized.scale == 2.0
        assert a.quantized.codes.tolist() == b.quantized.codes.tolist()


class TestTernaryL1:
    def test_three_entry_scan(self):
        r = project_ternary_l1(np.array([0.1, -0.9, 1.0]))
        assert r.support_size == 2
        assert r.quantized.scale == 0.9
        assert r.quantized.codes.tolist() == [0, -1, 1]
        assert r.objective == pytest.approx(0.2, abs=1e-15)

    def test_alternative_support_sizes_are_worse(self):
        # t = 1 keeps only the largest entry; t = 3 keeps everything
        w = np.array([0.1, -0.9, 1.0])
        t1 = 1.0   # drop .1 + .9, fit {1.0} exactly -> 0.1 + 0.9
        t3 = 0.9   # fit all three at the median magnitude 0.9
        best = project_ternary_l1(w).objective
        assert best < t3 < t1

    def test_exactly_representable(self):
        r = project_ternary_l1(np.array([2.0, 2.0]))
        assert r.support_size == 2
        assert r.quantized.scale == 2.0
        assert r.quantized.codes.tolist() == [1, 1]
        assert r.objective == 0.0

    def test_zero_vector(self):
        r = project_ternary_l1(np.zeros(3))
        assert r.quantized.scale == 0.0
        assert r.quantized.codes.tolist() == [0, 0, 0]
        assert r.objective == 0.0
        assert r.degenerate


class TestTernaryL2:
    def test_three_entry_scores(self):
        # prefix-score scan: t=1 -> 1.0, t=2 -> 1.805, t=3 -> 1.3333
        w = np.array([0.1, -0.9, 1.0])
        mags = np.sort(np.abs(w))[::-1]
        scores = [np.cumsum(mags)[t - 1] ** 2 / t for t in (1, 2, 3)]
        assert scores[0] == pytest.approx(1.0)
        assert scores[1] == pytest.approx(1.805)
        assert scores[2] == pytest.approx(4.0 / 3.0)
        r = project_ternary_l2(w)
        assert r.support_size == 2
        assert r.quantized.scale == pytest.approx(0.95, abs=1e-15)
        assert r.quantized.codes.tolist() == [0, -1, 1]

    def test_single_spike(self):
        for c in (0.3, 1.0, 9.0):
            r = project_ternary_l2(np.array([c, 0.0, 0.0]))
            assert r.support_size == 1
            assert r.quantized.scale == c
            assert r.quantized.codes.tolist() == [1, 0, 0]
            assert r.objective == 0.0

    def test_equal_magnitudes_keep_everything(self):
        r = project_ternary_l2(np.ones(4))
        assert r.support_size == 4
        assert r.quantized.scale == 1.0
        assert r.quantized.codes.tolist() == [1, 1, 1, 1]

    def test_l1_l2_disagreement_witness(self):
        w = np.array([0.1, -0.9, 1.0])
        assert project_ternary_l2(w).quantized.scale == pytest.approx(0.95, abs=1e-15)
        assert project_ternary_l1(w).quantized.scale == 0.9


class TestWeightedMedian:
    def test_weighted_case(self):
        assert weighted_median(np.array([0.5, 1.0, 0.8]), np.array([1.0, 3.0, 1.0])) == 1.0

    def test_objective_values_confirm(self):
        vals = np.array([0.5, 1.0, 0.8])
        wts = np.array([1.0, 3.0, 1.0])
        def obj(s):
            return float(np.sum(wts * np.abs(s - vals)))
        assert obj(1.0) == pytest.approx(0.7)
        assert obj(0.8) == pytest.approx(0.9)
        assert obj(weighted_median(vals, wts)) <= min(obj(v) for v in vals) + 1e-15

    def test_single_value(self):
        assert weighted_median(np.array([3.25]), np.array([0.37])) == 3.25

    def test_equal_weights_reduce_to_plain_median(self):
        assert weighted_median(np.array([0.5, 1.0, 0.8]), np.ones(3)) == 0.8

    def test_is_global_l1_minimizer_randomized(self):
        for seed in range(50):
            r = rng(seed)
            vals = r.normal(size=7)
            wts = r.uniform(0.1, 3.0, size=7)
            m = weighted_median(vals, wts)
            best = min(float(np.sum(wts * np.abs(v - vals))) for v in vals)
            assert float(np.sum(wts * np.abs(m - vals))) <= best + 1e-12

    def test_lower_median_even_and_odd(self):
        assert lower_median(np.array([3.0, 1.0, 2.0])) == 2.0
        assert lower_median(np.array([4.0, 1.0, 3.0, 2.0])) == 2.0


class TestLloydMbit:
    CB = Codebook((1.0, 2.0))

    def test_hand_iterated_case(self):
        r = lloyd_mbit(np.array([0.5, 2.0, -0.8]), self.CB, init_scale=1.0)
        assert r.quantized.codes.tolist() == [1.0, 2.0, -1.0]
        assert r.quantized.scale == 1.0     # flat optimum [0.8, 1.0]; rule picks 1.0
        assert r.objective == pytest.approx(0.7, abs=1e-15)

    def test_exactly_representable_converges_immediately(self):
        w = 0.75 * np.array([1.0, -2.0, 2.0, -1.0])
        r = lloyd_mbit(w, self.CB, init_scale=0.75)
        assert r.objective == 0.0
        assert len(r.trace) <= 2

    def test_trace_is_monotone_nonincreasing(self):
        for seed in range(40):
            w = rng(seed).normal(size=9)
            r = lloyd_mbit(w, self.CB)
            diffs = np.diff(r.trace)
            assert np.all(diffs <= 1e-12), r.trace

    def test_fixed_point_stable_under_single_updates(self):
        from binquant.projections import assign_codes
        for seed in range(20):
            w = rng(seed + 100).normal(size=8)
            r = lloyd_mbit(w, self.CB)
            q, s = r.quantized.codes, r.quantized.scale
            # re-running the assignment at the final scale changes nothing
            assert assign_codes(w, s, self.CB).tolist() == q.tolist()
            # re-running the scale update at the final codes changes nothing
            nz = q != 0
            s2 = max(0.0, weighted_median(w[nz] / q[nz], np.abs(q[nz])))
            obj2 = float(np.sum(np.abs(s2 * q - w)))
            assert obj2 >= r.objective - 1e-12

    def test_zero_vector_degenerate(self):
        r = lloyd_mbit(np.zeros(4), self.CB)
        assert r.quantized.scale == 0.0
        assert r.objective == 0.0
        assert r.degenerate

    def test_include_zero_codebook(self):
        cb = Codebook((1.0,), include_zero=True)
        r = lloyd_mbit(np.array([0.05, 1.0, -1.1]), cb, init_scale=1.0)
        assert r.quantized.codes.tolist() == [0.0, 1.0, -1.0]

    def test_codebook_validation(self):
        with pytest.raises(ValidationError):
            Codebook(())
        with pytest.raises(ValidationError):
            Codebook((0.0, 1.0))
        with pytest.raises(ValidationError):
            Codebook((1.0, 1.0))
        with pytest.raises(ValidationError):
            Codebook((-1.0, 2.0))


class TestRelaxProjection:
    def test_lambda_zero_is_identity(self):
        w = rng(1).normal(size=(3, 4))
        out = relax_projection(w, 0.0)
        assert np.array_equal(out, w)

    def test_hand_case(self):
        out = relax_projection(np.array([1.0, -2.0, 3.0]), 1.0, norm="l2")
        assert out.tolist() == [1.5, -2.0, 2.5]

    def test_large_lambda_limit_is_hard_projection(self):
        w = rng(2).normal(size=17)
        hard = project_binary_l2(w).quantized.dense()
        soft = relax_projection(w, 1e9, norm="l2")
        assert np.max(np.abs(soft - hard)) < 1e-8

    def test_l1_variant_uses_median_scale(self):
        w = np.array([1.0, -1.0, 10.0])
        out = relax_projection(w, 1e12, norm="l1")
        assert np.max(np.abs(out - project_binary_l1(w).quantized.dense())) < 1e-10

    def test_preserves_shape(self):
        w = rng(3).normal(size=(2, 5))
        assert relax_projection(w, 0.5).shape == (2, 5)

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValidationError):
            relax_projection(np.ones(3), -0.1)


class TestInputValidation:
    @pytest.mark.parametrize("fn", [project_binary_l1, project_binary_l2,
                                    project_ternary_l1, project_ternary_l2])
    def test_rejects_empty_and_nonfinite(self, fn):
        with pytest.raises(ValidationError):
            fn(np.array([]))
        with pytest.raises(ValidationError):
            fn(np.array([1.0, np.nan]))
        with pytest.raises(ValidationError):
            fn(np.array([np.inf, 1.0]))

    def test_matrix_input_is_flattened(self):
        w = np.array([[1.0, -2.0], [3.0, -4.0]])
        r = project_binary_l2(w)
        assert r.quantized.scale == 2.5
        assert r.quantized.codes.tolist() == [1, -1, 1, -1]


class TestMedianRobustnessProperty:
    def test_outlier_scaling_leaves_l1_scale_unchanged(self):
        for seed in range(200):
            w = rng(seed).normal(size=9)
            j = int(np.abs(w).argmax())
            w2 = w.copy()
            w2[j] *= 100.0
            assert project_binary_l1(w2).quantized.scale \
                == project_binary_l1(w).quantized.scale
            assert project_binary_l2(w2).quantized.scale \
                > project_binary_l2(w).quantized.scale
