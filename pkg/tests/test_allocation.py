import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from marketflow import (AllocationFlag, Allocator, BehaviorParams,
                        DomainBoundError, ModifierOrder, allocate_ratio,
                        allocate_redistribution, allocate_softmax,
                        allocate_wta, allocation_matrix,
                        competitiveness_view, market_allocation, modify)

score_vectors = st.lists(st.floats(-1.0, 1.0, allow_nan=False),
                         min_size=1, max_size=8).map(np.asarray)


class TestRatio:
    def test_positive_mass_split(self):
        out = allocate_ratio(np.array([0.4, 0.2, -0.1]))
        assert np.allclose(out.h, [2 / 3, 1 / 3, 0.0], atol=1e-15)
        assert out.flag is AllocationFlag.OK

    def test_all_nonpositive_falls_back_to_uniform(self):
        out = allocate_ratio(np.array([-0.3, 0.0, -0.1]))
        assert np.allclose(out.h, [1 / 3, 1 / 3, 1 / 3])
        assert out.flag is AllocationFlag.UNIFORM_FALLBACK

    def test_scale_invariance(self):
        a = np.array([0.5, 0.25, -0.4])
        assert np.allclose(allocate_ratio(a).h, allocate_ratio(7.0 * a).h,
                           atol=1e-12)


class TestSoftmax:
    def test_equal_scores_uniform(self):
        out = allocate_softmax(np.zeros(3))
        assert np.allclose(out.h, [1 / 3, 1 / 3, 1 / 3], atol=1e-15)

    def test_known_values(self):
        out = allocate_softmax(np.array([1.0, 0.0, -1.0]))
        assert np.allclose(out.h, [0.66524, 0.24473, 0.09003], atol=1e-5)

    def test_negative_scores_still_positive_share(self):
        out = allocate_softmax(np.array([-0.2, 0.1]))
        assert out.h[0] == pytest.approx(np.exp(-0.3) / (np.exp(-0.3) + 1),
                                         abs=1e-12)
        assert out.h[0] == pytest.approx(0.42556, abs=1e-5)

    def test_temperature_sharpens(self):
        a = np.array([0.3, 0.1])
        cold = allocate_softmax(a, temperature=0.1)
        hot = allocate_softmax(a, temperature=10.0)
        assert cold.h[0] > hot.h[0]

    def test_rejects_nonpositive_temperature(self):
        with pytest.raises(DomainBoundError):
            allocate_softmax(np.array([0.1]), temperature=0.0)

    def test_extreme_scores_do_not_overflow(self):
        out = allocate_softmax(np.array([800.0, -800.0]))
        assert np.isfinite(out.h).all()
        assert out.h[0] == pytest.approx(1.0)


class TestRedistribution:
    def test_incumbent_share_moves_to_positives(self):
        out = allocate_redistribution(np.array([0.0, 0.3, 0.1]), incumbent=0)
        assert np.allclose(out.h, [0.6, 0.3, 0.1], atol=1e-15)
        assert out.flag is AllocationFlag.OK

    def test_no_positive_challenger_keeps_everything(self):
        out = allocate_redistribution(np.array([0.0, -0.2, -0.5]), incumbent=0)
        assert np.allclose(out.h, [1.0, 0.0, 0.0])

    def test_overflow_rescaled_when_claims_exceed_one(self):
        out = allocate_redistribution(np.array([0.0, 0.7, 0.5]), incumbent=0)
        assert np.allclose(out.h, [0.0, 7 / 12, 5 / 12], atol=1e-15)
        assert out.flag is AllocationFlag.OVERFLOW_RESCALED

    def test_incumbent_positive_score_is_ignored(self):
        # only challengers claim; the incumbent's own score buys nothing
        out = allocate_redistribution(np.array([0.9, 0.3, 0.1]), incumbent=0)
        assert np.allclose(out.h, [0.6, 0.3, 0.1])

    def test_incumbent_out_of_range(self):
        with pytest.raises(ValueError):
            allocate_redistribution(np.array([0.1, 0.2]), incumbent=5)


class TestWtaDelta:
    def test_all_mass_on_winner(self):
        out = allocate_wta(np.array([0.1, 0.9, 0.3]), i_max=1)
        assert np.array_equal(out.h, [0.0, 1.0, 0.0])


class TestMarketAllocation:
    def test_wta_one_short_circuits_every_allocator(self):
        scores = np.array([0.2, 0.8, 0.5])
        i_max = 1
        for alloc in Allocator:
            out = market_allocation(scores, allocator=alloc, wta=1.0,
                                    i_max=i_max)
            assert np.array_equal(out.h, [0.0, 1.0, 0.0]), alloc

    def test_redistribution_downgrades_to_ratio_without_incumbent(self):
        # market-level flows have no single incumbent column
        scores = np.array([0.4, 0.2, -0.1])
        out = market_allocation(scores, Allocator.REDISTRIBUTION,
                                wta=0.3, i_max=0)
        assert np.allclose(out.h, allocate_ratio(scores).h)


class TestAllocationMatrix:
    def test_pairwise_redistribution_columns(self):
        pairwise = np.array([[0.0, 0.2], [-0.2, 0.0]])
        out = allocation_matrix(pairwise, Allocator.REDISTRIBUTION,
                                wta=0.0, i_max=0)
        # column j uses j as incumbent: column 0 keeps everything (no
        # positive challenger), column 1 cedes 0.2 to segment 0
        assert np.allclose(out.H[:, 0], [1.0, 0.0], atol=1e-15)
        assert np.allclose(out.H[:, 1], [0.2, 0.8], atol=1e-15)

    def test_zero_matrix_softmax_is_uniform(self):
        out = allocation_matrix(np.zeros((3, 3)), Allocator.SOFTMAX,
                                wta=0.0, i_max=0)
        assert np.allclose(out.H, np.full((3, 3), 1 / 3), atol=1e-15)

    def test_wta_one_gives_delta_columns(self):
        pairwise = np.array([[0.0, 0.5, 0.1],
                             [-0.5, 0.0, -0.2],
                             [-0.1, 0.2, 0.0]])
        out = allocation_matrix(pairwise, Allocator.RATIO,
                                wta=1.0, i_max=0)
        assert np.array_equal(out.H, np.tile([[1.0], [0.0], [0.0]], (1, 3)))

    def test_diag_bias_keeps_fraction_at_home(self):
        pairwise = np.array([[0.0, 0.4], [-0.4, 0.0]])
        plain = allocation_matrix(pairwise, Allocator.RATIO, 0.0, 0)
        biased = allocation_matrix(pairwise, Allocator.RATIO, 0.0, 0,
                                   diag_bias=0.5)
        assert biased.H[1, 1] > plain.H[1, 1]
        assert np.allclose(biased.H.sum(axis=0), 1.0, atol=1e-12)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            allocation_matrix(np.zeros((2, 3)), Allocator.RATIO, 0.0, 0)

    def test_rejects_bad_diag_bias(self):
        with pytest.raises(DomainBoundError):
            allocation_matrix(np.zeros((2, 2)), Allocator.RATIO, 0.0, 0,
                              diag_bias=1.5)


class TestProperties:
    @given(score_vectors)
    @settings(max_examples=100, deadline=None)
    def test_ratio_normalized_and_nonnegative(self, scores):
        out = allocate_ratio(scores)
        assert abs(out.h.sum() - 1.0) < 1e-12
        assert (out.h >= 0.0).all()

    @given(score_vectors, st.floats(0.05, 20.0))
    @settings(max_examples=100, deadline=None)
    def test_softmax_normalized_strictly_positive(self, scores, temp):
        out = allocate_softmax(scores, temperature=temp)
        assert abs(out.h.sum() - 1.0) < 1e-12
        assert (out.h > 0.0).all()

    @given(score_vectors, st.integers(0, 7))
    @settings(max_examples=100, deadline=None)
    def test_redistribution_normalized(self, scores, seed):
        incumbent = seed % scores.shape[0]
        out = allocate_redistribution(scores, incumbent=incumbent)
        assert abs(out.h.sum() - 1.0) < 1e-12
        assert (out.h >= 0.0).all()

    @given(score_vectors)
    @settings(max_examples=100, deadline=None)
    def test_ratio_gives_nothing_to_nonpositive_scores(self, scores):
        out = allocate_ratio(scores)
        if out.flag is AllocationFlag.OK:
            assert (out.h[scores <= 0.0] == 0.0).all()

    @given(st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=2,
                    max_size=6), st.randoms(use_true_random=False))
    @settings(max_examples=60, deadline=None)
    def test_ratio_permutation_equivariance(self, raw, rnd):
        scores = np.asarray(raw)
        perm = list(range(len(raw)))
        rnd.shuffle(perm)
        direct = allocate_ratio(scores[perm]).h
        permuted = allocate_ratio(scores).h[perm]
        assert np.allclose(direct, permuted, atol=1e-12)


def test_full_pipeline_interior_allocation(table1_doc):
    """Moderate wta keeps the allocation interior even for the leader."""
    view = competitiveness_view(table1_doc.panel, 1.0)
    mod = modify(view, table1_doc.behavior)
    out = market_allocation(mod.market_mod, table1_doc.behavior.allocator,
                            table1_doc.behavior.wta, mod.i_max,
                            temperature=table1_doc.behavior.softmax_temperature)
    assert out.h.max() < 1.0
    assert out.h.min() > 0.0
