import numpy as np
import pytest

from marketflow import (AttributePanel, BehaviorParams, DomainBoundError,
                        IntegrationMethod, IntegratorConfig, ModifierOrder,
                        NewCustomerSeries, RefreshMode, ScoreScale,
                        new_entrant_rates, obsolescence_rate, refresh_rates,
                        rhs, simulate)
from marketflow.behavior import ModifiedScores


def scores_from(market_mod, wta=0.0):
    market_mod = np.asarray(market_mod, dtype=float)
    n = market_mod.shape[0]
    return ModifiedScores(market_mod=market_mod,
                          pairwise_mod=np.zeros((n, n)),
                          i_max=int(np.argmax(market_mod)), wta=wta,
                          gamma=-1.0, c=0.0,
                          modifier_order=ModifierOrder.NONE)


def flat_panel(n=3, value=5.0, t0=0.0):
    """One-stamp panel where every segment scores `value` on a [0, 10] scale."""
    perf = np.full((1, n, 2), value)
    imp = np.full((1, n, 2), 5.0)
    return AttributePanel(times=np.array([t0]), perf=perf, imp=imp,
                          scale=ScoreScale(0.0, 10.0))


class TestObsolescenceRate:
    def test_hand_value(self):
        out = obsolescence_rate(np.array([100.0]), np.array([0.9]),
                                decay=2.0, stickiness=0.5)
        assert out[0] == pytest.approx(10.0, abs=1e-12)

    def test_top_score_never_churns(self):
        out = obsolescence_rate(np.array([40.0]), np.array([1.0]), 3.0, 0.2)
        assert out[0] == 0.0

    def test_full_stickiness_never_churns(self):
        out = obsolescence_rate(np.array([40.0]), np.array([0.2]), 3.0, 1.0)
        assert out[0] == 0.0

    def test_empty_segment_has_no_outflow(self):
        out = obsolescence_rate(np.array([0.0]), np.array([0.1]), 3.0, 0.0)
        assert out[0] == 0.0

    def test_rejects_out_of_domain_decay(self):
        with pytest.raises(DomainBoundError):
            obsolescence_rate(np.array([1.0]), np.array([0.5]), -1.0, 0.0)


class TestRefreshRates:
    def test_wta_one_routes_pool_to_winner(self):
        params = BehaviorParams(wta=1.0)
        out = refresh_rates(np.array([5.0, 3.0, 2.0]),
                            scores_from([0.1, 0.9, 0.3], wta=1.0), params)
        assert np.array_equal(out, [0.0, 10.0, 0.0])

    def test_market_pool_split_by_allocation(self):
        params = BehaviorParams(wta=0.0)
        out = refresh_rates(np.array([4.0, 3.0, 3.0]),
                            scores_from([0.5, 0.3, 0.2]), params)
        assert np.allclose(out, [5.0, 3.0, 2.0], atol=1e-12)

    def test_zero_outflow_refreshes_nothing(self):
        params = BehaviorParams()
        out = refresh_rates(np.zeros(3), scores_from([0.5, 0.3, 0.2]), params)
        assert np.array_equal(out, np.zeros(3))

    def test_pairwise_mode_conserves_pool(self):
        params = BehaviorParams(refresh_mode=RefreshMode.PAIRWISE_MATRIX)
        pairwise = np.array([[0.0, 0.4, 0.2],
                             [-0.4, 0.0, -0.1],
                             [-0.2, 0.1, 0.0]])
        scores = ModifiedScores(market_mod=np.array([0.5, 0.1, 0.2]),
                                pairwise_mod=pairwise, i_max=0, wta=0.0,
                                gamma=-1.0, c=0.0,
                                modifier_order=ModifierOrder.NONE)
        d_od = np.array([2.0, 5.0, 3.0])
        out = refresh_rates(d_od, scores, params)
        assert out.sum() == pytest.approx(d_od.sum(), abs=1e-12)
        assert (out >= 0.0).all()

    def test_single_segment_gets_own_outflow_back(self):
        for wta in (0.0, 0.5, 1.0):
            params = BehaviorParams(wta=wta)
            out = refresh_rates(np.array([7.0]), scores_from([0.4], wta), params)
            assert out[0] == pytest.approx(7.0, abs=1e-12)


class TestNewEntrantRates:
    def test_split_by_market_allocation(self):
        out = new_entrant_rates(50.0, scores_from([0.5, 0.3, 0.2]),
                                BehaviorParams(wta=0.0))
        assert np.allclose(out, [25.0, 15.0, 10.0], atol=1e-12)

    def test_wta_one_sends_all_to_winner(self):
        out = new_entrant_rates(50.0, scores_from([0.5, 0.9], wta=1.0),
                                BehaviorParams(wta=1.0))
        assert np.array_equal(out, [0.0, 50.0])

    def test_rejects_negative_rate(self):
        with pytest.raises(DomainBoundError):
            new_entrant_rates(-1.0, scores_from([0.5]), BehaviorParams())


class TestRhs:
    def test_full_stickiness_no_entrants_freezes_market(self):
        panel = flat_panel()
        params = BehaviorParams(stickiness=1.0)
        rates = rhs(panel, params, NewCustomerSeries.constant(0.0),
                    np.array([10.0, 20.0, 30.0]), 0.0)
        assert np.array_equal(rates.d_od, np.zeros(3))
        assert np.array_equal(rates.d_rd, np.zeros(3))
        assert np.array_equal(rates.d_bnd, np.zeros(3))
        assert np.array_equal(rates.d_d, np.zeros(3))

    def test_single_segment_refresh_equals_outflow(self):
        from marketflow import Allocator
        panel = flat_panel(n=1, value=4.0)
        for alloc in Allocator:
            params = BehaviorParams(stickiness=0.2, decay=2.0, allocator=alloc)
            rates = rhs(panel, params, NewCustomerSeries.constant(0.0),
                        np.array([50.0]), 0.0)
            assert rates.d_rd[0] == pytest.approx(rates.d_od[0], abs=1e-12)
            assert rates.d_d[0] == pytest.approx(0.0, abs=1e-12)

    def test_rejects_wrong_size_vector(self):
        with pytest.raises(ValueError):
            rhs(flat_panel(n=3), BehaviorParams(),
                NewCustomerSeries.constant(0.0), np.array([1.0]), 0.0)

    def test_rates_are_nonnegative(self, table1_doc):
        rng = np.random.default_rng(11)
        for _ in range(50):
            sizes = rng.uniform(0.0, 200.0, size=table1_doc.panel.n)
            t = rng.uniform(1.0, 6.0)
            rates = rhs(table1_doc.panel, table1_doc.behavior,
                        table1_doc.new_customers, sizes, t)
            assert (rates.d_od >= 0).all()
            assert (rates.d_rd >= 0).all()
            assert (rates.d_bnd >= 0).all()


class TestSimulate:
    def test_euler_first_step_matches_rhs(self, table1_doc):
        cfg = IntegratorConfig(dt=0.05, horizon=0.05)
        traj = simulate(table1_doc.panel, table1_doc.initial_sizes,
                        table1_doc.behavior, table1_doc.new_customers, cfg)
        rates = rhs(table1_doc.panel, table1_doc.behavior,
                    table1_doc.new_customers,
                    np.asarray(table1_doc.initial_sizes), 1.0)
        expected = np.asarray(table1_doc.initial_sizes) + 0.05 * rates.d_d
        assert np.allclose(traj.sizes[1], expected, rtol=0, atol=1e-12)

    def test_zero_dynamics_holds_exactly(self):
        panel = flat_panel()
        params = BehaviorParams(stickiness=1.0)
        cfg = IntegratorConfig(dt=0.1, horizon=2.0)
        d0 = np.array([10.0, 20.0, 30.0])
        traj = simulate(panel, d0, params, NewCustomerSeries.constant(0.0), cfg)
        assert np.array_equal(traj.sizes, np.tile(d0, (traj.times.size, 1)))

    def test_conservation_per_step(self, table1_doc):
        traj = table1_doc.simulate()
        reconstructed = (traj.sizes[0] + traj.cum_bnd + traj.cum_rd
                         - traj.cum_od)
        scale = 1.0 + np.abs(traj.sizes)
        assert (np.abs(reconstructed - traj.sizes) / scale).max() < 1e-9

    def test_partial_final_step_lands_on_horizon(self):
        panel = flat_panel(t0=2.0)
        cfg = IntegratorConfig(dt=0.25, horizon=1.03)
        traj = simulate(panel, np.array([5.0, 5.0, 5.0]), BehaviorParams(),
                        NewCustomerSeries.constant(1.0), cfg)
        assert traj.step_count == 5
        assert traj.times[-1] == pytest.approx(3.03, abs=1e-12)
        assert traj.times[1] - traj.times[0] == pytest.approx(0.25)

    def test_limiter_keeps_sizes_nonnegative(self):
        panel = AttributePanel(
            times=np.array([0.0]),
            perf=np.array([[[9.5], [0.5]]]),
            imp=np.array([[[5.0], [5.0]]]),
            scale=ScoreScale(0.0, 10.0))
        params = BehaviorParams(wta=0.9, stickiness=0.0, decay=45.0,
                                gamma=-1e-3)
        cfg = IntegratorConfig(dt=0.05, horizon=3.0,
                               method=IntegrationMethod.RK4)
        traj = simulate(panel, np.array([1.0, 120.0]), params,
                        NewCustomerSeries.constant(0.0), cfg)
        assert (traj.sizes >= 0.0).all()

    def test_determinism(self, smooth_doc):
        a = smooth_doc.simulate()
        b = smooth_doc.simulate()
        assert np.array_equal(a.sizes, b.sizes)
        assert np.array_equal(a.rate_rd, b.rate_rd)

    def test_euler_warns_when_decay_outruns_step(self):
        panel = flat_panel()
        params = BehaviorParams(decay=25.0)
        cfg = IntegratorConfig(dt=0.05, horizon=0.1)
        with pytest.warns(UserWarning, match="unstable"):
            simulate(panel, np.array([1.0, 1.0, 1.0]), params,
                     NewCustomerSeries.constant(0.0), cfg)

    def test_rk4_tracks_exponential_decay(self):
        # a lone segment with nothing refreshed back decays as exp(-k_eff t)
        panel = AttributePanel(
            times=np.array([0.0]),
            perf=np.array([[[5.0]]]),
            imp=np.array([[[5.0]]]),
            scale=ScoreScale(0.0, 10.0))
        params = BehaviorParams(stickiness=0.0, decay=2.0,
                                modifier_order=ModifierOrder.NONE)
        cfg = IntegratorConfig(dt=0.01, horizon=1.0,
                               method=IntegrationMethod.RK4)
        traj = simulate(panel, np.array([100.0]), params,
                        NewCustomerSeries.constant(0.0), cfg)
        # refresh routes the outflow straight back, so sizes stay constant;
        # the accountants still integrate the gross flow k*(1-a)*D
        assert traj.sizes[-1, 0] == pytest.approx(100.0, abs=1e-9)
        k_eff = 2.0 * (1.0 - 0.5)
        assert traj.cum_od[-1, 0] == pytest.approx(100.0 * k_eff, rel=1e-6)

    def test_rejects_negative_initial_sizes(self):
        with pytest.raises(DomainBoundError):
            simulate(flat_panel(), np.array([-1.0, 1.0, 1.0]),
                     BehaviorParams(), NewCustomerSeries.constant(0.0),
                     IntegratorConfig())


class TestIntegratorConfig:
    def test_step_count_exact_multiple(self):
        assert IntegratorConfig(dt=0.05, horizon=5.0).step_count == 100

    def test_step_count_with_remainder(self):
        assert IntegratorConfig(dt=0.25, horizon=1.03).step_count == 5

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(DomainBoundError):
            IntegratorConfig(dt=0.0, horizon=1.0)

    def test_tiny_dt_saturates_instead_of_overflowing(self):
        cfg = IntegratorConfig(dt=1e-320, horizon=1.0)
        assert cfg.step_count >= 10 ** 15


class TestNewCustomerSeries:
    def test_constant(self):
        assert NewCustomerSeries.constant(10.0).rate_at(3.7) == 10.0

    def test_stamped_hold(self):
        series = NewCustomerSeries.stamped([0.0, 1.0], [5.0, 9.0])
        assert series.rate_at(0.5) == 5.0

    def test_stamped_linear(self):
        from marketflow import Interpolation
        series = NewCustomerSeries.stamped([0.0, 1.0], [5.0, 9.0])
        assert series.rate_at(0.5, Interpolation.LINEAR) == pytest.approx(7.0)

    def test_rejects_negative_rate(self):
        with pytest.raises(DomainBoundError):
            NewCustomerSeries.constant(-2.0)
