import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from marketflow import (AttributePanel, DegenerateWeightsError, ScoreScale,
                        attribute_weights, competitiveness_view, market_score,
                        pairwise_score)

SCALE = ScoreScale(1.0, 10.0)


def single_stamp_panel(perf_rows, imp_rows, scale=SCALE):
    perf = np.asarray([perf_rows], dtype=float)
    imp = np.asarray([imp_rows], dtype=float)
    return AttributePanel(times=[1.0], perf=perf, imp=imp, scale=scale)


@st.composite
def panels(draw):
    n = draw(st.integers(2, 6))
    k = draw(st.integers(1, 4))
    box = st.floats(1.0, 10.0, allow_nan=False)
    perf = draw(st.lists(st.lists(box, min_size=k, max_size=k),
                         min_size=n, max_size=n))
    imp = draw(st.lists(st.lists(st.floats(1.0, 10.0, allow_nan=False),
                                 min_size=k, max_size=k),
                        min_size=n, max_size=n))
    return single_stamp_panel(perf, imp)


class TestAttributeWeights:
    def test_equal_importance_splits_evenly(self):
        panel = single_stamp_panel([[5.0, 5.0]], [[5.0, 5.0]])
        assert np.allclose(attribute_weights(panel, 1.0, 0), [0.5, 0.5], atol=1e-15)

    def test_eight_two(self):
        panel = single_stamp_panel([[5.0, 5.0]], [[8.0, 2.0]])
        assert np.allclose(attribute_weights(panel, 1.0, 0), [0.8, 0.2], atol=1e-15)

    def test_three_three_four(self):
        panel = single_stamp_panel([[5.0, 5.0, 5.0]], [[3.0, 3.0, 4.0]])
        assert np.allclose(attribute_weights(panel, 1.0, 0), [0.3, 0.3, 0.4], atol=1e-15)

    def test_zero_importance_row_raises(self):
        panel = single_stamp_panel([[5.0, 5.0]], [[0.0, 0.0]],
                                   scale=ScoreScale(0.0, 10.0))
        with pytest.raises(DegenerateWeightsError):
            attribute_weights(panel, 1.0, 0)

    @given(panels())
    @settings(max_examples=60, deadline=None)
    def test_weights_sum_to_one(self, panel):
        for i in range(panel.n):
            w = attribute_weights(panel, 1.0, i)
            assert abs(w.sum() - 1.0) <= 1e-12
            assert np.all(w >= 0.0) and np.all(w <= 1.0)


class TestMarketScore:
    def test_table1_first_stamp_first_segment(self, table1_doc):
        assert market_score(table1_doc.panel, 1.0, 0) == pytest.approx(6.0, abs=1e-12)

    def test_table1_first_stamp_third_segment(self, table1_doc):
        assert market_score(table1_doc.panel, 1.0, 2) == pytest.approx(5.0, abs=1e-12)

    def test_max_performance_hits_scale_top(self):
        panel = single_stamp_panel([[10.0, 10.0]], [[7.0, 3.0]])
        assert market_score(panel, 1.0, 0) == 10.0

    @given(panels())
    @settings(max_examples=60, deadline=None)
    def test_score_stays_on_scale(self, panel):
        for i in range(panel.n):
            score = market_score(panel, 1.0, i)
            assert SCALE.s_min <= score <= SCALE.s_max

    def test_raising_performance_never_lowers_score(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            perf = rng.uniform(1.0, 9.0, size=(2, 3))
            imp = rng.uniform(1.0, 10.0, size=(2, 3))
            panel = single_stamp_panel(perf, imp)
            base = market_score(panel, 1.0, 0)
            z = rng.integers(0, 3)
            bumped = perf.copy()
            bumped[0, z] = min(10.0, bumped[0, z] + rng.uniform(0.0, 1.0))
            panel2 = single_stamp_panel(bumped, imp)
            assert market_score(panel2, 1.0, 0) >= base - 1e-12


class TestPairwiseScore:
    def test_table1_one_versus_three(self, table1_doc):
        assert pairwise_score(table1_doc.panel, 1.0, 0, 2) == pytest.approx(1 / 9, abs=1e-12)

    def test_self_comparison_is_zero(self, table1_doc):
        for i in range(3):
            assert pairwise_score(table1_doc.panel, 1.0, i, i) == 0.0

    def test_table1_three_versus_one_mirrors(self, table1_doc):
        assert pairwise_score(table1_doc.panel, 1.0, 2, 0) == pytest.approx(-1 / 9, abs=1e-12)

    @given(panels())
    @settings(max_examples=60, deadline=None)
    def test_antisymmetry_is_exact(self, panel):
        view = competitiveness_view(panel, 1.0)
        assert np.array_equal(view.pairwise + view.pairwise.T,
                              np.zeros((panel.n, panel.n)))

    @given(panels())
    @settings(max_examples=60, deadline=None)
    def test_entries_within_unit_band(self, panel):
        view = competitiveness_view(panel, 1.0)
        assert np.all(view.pairwise >= -1.0) and np.all(view.pairwise <= 1.0)

    def test_raising_performance_never_lowers_edge(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            perf = rng.uniform(1.0, 9.0, size=(3, 2))
            imp = rng.uniform(1.0, 10.0, size=(3, 2))
            panel = single_stamp_panel(perf, imp)
            base = pairwise_score(panel, 1.0, 0, 1)
            bumped = perf.copy()
            z = rng.integers(0, 2)
            bumped[0, z] = min(10.0, bumped[0, z] + rng.uniform(0.0, 1.0))
            panel2 = single_stamp_panel(bumped, imp)
            assert pairwise_score(panel2, 1.0, 0, 1) >= base - 1e-12


class TestCompetitivenessView:
    def test_table1_market_vector_and_tie_break(self, table1_doc):
        view = competitiveness_view(table1_doc.panel, 1.0)
        assert np.allclose(view.market, [6.0, 6.0, 5.0], atol=1e-12)
        # segments 1 and 2 tie at 6.0; the lowest index wins
        assert view.i_max == 0

    def test_single_segment(self):
        panel = single_stamp_panel([[4.0, 8.0]], [[5.0, 5.0]])
        view = competitiveness_view(panel, 1.0)
        assert view.market.shape == (1,)
        assert view.pairwise.shape == (1, 1) and view.pairwise[0, 0] == 0.0
        assert view.i_max == 0

    def test_diagonal_is_zero(self, table1_doc):
        view = competitiveness_view(table1_doc.panel, 3.0)
        assert np.all(np.diag(view.pairwise) == 0.0)

    def test_view_uses_each_segments_own_weights(self):
        # segment 0 cares about attribute 0 only; segment 1 about attribute 1
        panel = single_stamp_panel([[9.0, 1.0], [1.0, 9.0]],
                                   [[10.0, 1e-9], [1e-9, 10.0]],
                                   scale=ScoreScale(0.0, 10.0))
        view = competitiveness_view(panel, 1.0)
        assert view.market[0] == pytest.approx(9.0, abs=1e-6)
        assert view.market[1] == pytest.approx(9.0, abs=1e-6)
        # the upper-triangle entry is computed with segment 0's weights
        assert view.pairwise[0, 1] == pytest.approx(0.8, abs=1e-6)
        assert view.pairwise[1, 0] == pytest.approx(-0.8, abs=1e-6)
