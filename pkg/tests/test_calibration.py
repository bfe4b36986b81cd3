import numpy as np
import pytest

from marketflow import (AttributePanel, BehaviorParams, FitResult,
                        IntegratorConfig, ModelError, NewCustomerSeries,
                        ParamSpec, ScoreScale, default_param_specs, fit,
                        parse_param_specs, share_loss, simulate)


def uniform_trajectory():
    panel = AttributePanel(times=np.array([0.0]),
                           perf=np.full((1, 3, 1), 5.0),
                           imp=np.full((1, 3, 1), 5.0),
                           scale=ScoreScale(0.0, 10.0))
    return simulate(panel, np.array([50.0, 50.0, 50.0]),
                    BehaviorParams(stickiness=1.0),
                    NewCustomerSeries.constant(0.0),
                    IntegratorConfig(dt=0.5, horizon=2.0))


def observed_from(traj, stamps):
    idx = [int(np.argmin(np.abs(traj.times - t))) for t in stamps]
    return np.asarray(stamps, dtype=float), traj.shares[idx]


class TestShareLoss:
    def test_perfect_match_is_zero(self, table1_doc):
        traj = table1_doc.simulate()
        observed = observed_from(traj, [2.0, 3.0, 4.0, 5.0, 6.0])
        assert share_loss(observed, traj) == 0.0

    def test_uniform_against_skewed_oracle(self):
        traj = uniform_trajectory()
        observed = (np.array([1.0]), np.array([[0.5, 0.25, 0.25]]))
        assert share_loss(observed, traj) == pytest.approx(1.0 / 72.0,
                                                           abs=1e-15)

    def test_single_segment_is_always_perfect(self):
        panel = AttributePanel(times=np.array([0.0]),
                               perf=np.array([[[5.0]]]),
                               imp=np.array([[[5.0]]]),
                               scale=ScoreScale(0.0, 10.0))
        traj = simulate(panel, np.array([10.0]), BehaviorParams(decay=0.5),
                        NewCustomerSeries.constant(3.0),
                        IntegratorConfig(dt=0.25, horizon=1.0))
        observed = (np.array([0.5, 1.0]), np.array([[1.0], [1.0]]))
        assert share_loss(observed, traj) == 0.0

    def test_stamp_snaps_to_nearest_step(self, table1_doc):
        traj = table1_doc.simulate()
        idx = int(np.argmin(np.abs(traj.times - 2.0)))
        observed = (np.array([2.02]), traj.shares[idx][None, :])
        assert share_loss(observed, traj) == 0.0

    def test_sizes_mode(self):
        traj = uniform_trajectory()
        observed = (np.array([2.0]), traj.sizes[-1][None, :] + 1.0)
        assert share_loss(observed, traj, on="sizes") == pytest.approx(1.0)

    def test_empty_observations_rejected(self):
        with pytest.raises(ModelError, match="empty"):
            share_loss((np.array([]), np.zeros((0, 3))),
                       uniform_trajectory())

    def test_stamp_outside_horizon_rejected(self):
        observed = (np.array([9.0]), np.full((1, 3), 1 / 3))
        with pytest.raises(ModelError, match="horizon"):
            share_loss(observed, uniform_trajectory())

    def test_shape_mismatch_rejected(self):
        observed = (np.array([1.0]), np.full((1, 2), 0.5))
        with pytest.raises(ModelError, match="shape"):
            share_loss(observed, uniform_trajectory())


class TestParamSpec:
    def test_infeasible_box_rejected(self):
        with pytest.raises(ModelError, match="infeasible"):
            ParamSpec("wta", lower=0.8, upper=0.2, initial=0.5)

    def test_initial_outside_box_rejected(self):
        with pytest.raises(ModelError, match="outside"):
            ParamSpec("wta", lower=0.0, upper=0.5, initial=0.9)

    def test_defaults_cover_scenario_settings(self, table1_doc):
        specs = {s.name: s for s in default_param_specs(table1_doc)}
        assert specs["wta"].initial == table1_doc.behavior.wta
        assert (specs["wta"].lower, specs["wta"].upper) == (0.0, 1.0)
        assert (specs["k"].lower, specs["k"].upper) == (0.0, 50.0)
        assert specs["gamma"].upper < 0.0

    def test_importance_spec_uses_scale_box(self, table1_doc):
        (spec,) = default_param_specs(table1_doc, names=("imp.quality",))
        assert spec.lower == 1.0  # scale s_min
        assert spec.upper == 10.0
        assert spec.initial == 5.0

    def test_unknown_names_rejected(self, table1_doc):
        with pytest.raises(ModelError, match="unknown"):
            default_param_specs(table1_doc, names=("price_elasticity",))
        with pytest.raises(ModelError, match="unknown"):
            default_param_specs(table1_doc, names=("imp.bogus",))

    def test_parse_from_tree(self, table1_doc):
        specs = parse_param_specs(
            [{"name": "wta", "lower": 0.1, "initial": 0.4},
             {"name": "k", "fixed": True}], table1_doc)
        assert specs[0].lower == 0.1 and specs[0].upper == 1.0
        assert specs[0].initial == 0.4
        assert specs[1].fixed

    def test_parse_rejects_non_list(self, table1_doc):
        with pytest.raises(ModelError):
            parse_param_specs({"name": "wta"}, table1_doc)


@pytest.fixture(scope="module")
def table1_observed(table1_doc):
    traj = table1_doc.simulate()
    return observed_from(traj, [2.0, 3.0, 4.0, 5.0, 6.0])


class TestFit:
    def test_budget_one_evaluates_initial_point_only(self, table1_doc,
                                                     table1_observed):
        specs = [ParamSpec("wta", 0.0, 1.0, 0.6)]
        result = fit(table1_doc, specs, table1_observed, budget=1, seed=0)
        assert result.evaluations == 1
        assert result.best["wta"] == 0.6
        assert len(result.trace) == 1

    def test_budget_respected_and_trace_non_increasing(self, table1_doc,
                                                       table1_observed):
        specs = [ParamSpec("wta", 0.0, 1.0, 0.6)]
        result = fit(table1_doc, specs, table1_observed, budget=40, seed=3)
        assert result.evaluations <= 40
        assert all(b <= a for a, b in zip(result.trace, result.trace[1:]))
        assert 0.0 <= result.best["wta"] <= 1.0

    def test_improves_on_initial_point(self, table1_doc, table1_observed):
        specs = [ParamSpec("wta", 0.0, 1.0, 0.9)]
        result = fit(table1_doc, specs, table1_observed, budget=60, seed=0)
        assert result.loss <= result.trace[0]
        assert result.loss < 1e-4

    def test_recovers_known_wta(self, table1_doc, table1_observed):
        specs = [ParamSpec("wta", 0.0, 1.0, 0.65)]
        result = fit(table1_doc, specs, table1_observed, budget=150, seed=0)
        assert result.best["wta"] == pytest.approx(0.3, abs=0.05)
        assert result.converged

    def test_deterministic(self, table1_doc, table1_observed):
        specs = [ParamSpec("wta", 0.0, 1.0, 0.5),
                 ParamSpec("s", 0.0, 1.0, 0.3, fixed=True)]
        a = fit(table1_doc, specs, table1_observed, budget=50, seed=7)
        b = fit(table1_doc, specs, table1_observed, budget=50, seed=7)
        assert a.to_tree() == b.to_tree()

    def test_pinned_box_counts_one_evaluation(self, table1_doc,
                                              table1_observed):
        specs = [ParamSpec("s", 0.3, 0.3, 0.3)]
        result = fit(table1_doc, specs, table1_observed, budget=20, seed=0)
        assert result.evaluations == 1
        assert result.best["s"] == 0.3
        assert result.converged

    def test_all_fixed_rejected(self, table1_doc, table1_observed):
        specs = [ParamSpec("wta", 0.0, 1.0, 0.3, fixed=True)]
        with pytest.raises(ModelError, match="free"):
            fit(table1_doc, specs, table1_observed, budget=10)

    def test_zero_budget_rejected(self, table1_doc, table1_observed):
        with pytest.raises(ModelError, match="budget"):
            fit(table1_doc, [ParamSpec("wta", 0.0, 1.0, 0.3)],
                table1_observed, budget=0)

    def test_fixed_parameter_is_input_not_output(self, table1_doc,
                                                 table1_observed):
        specs = [ParamSpec("wta", 0.0, 1.0, 0.5),
                 ParamSpec("k", 5.0, 5.0, 5.0, fixed=True)]
        result = fit(table1_doc, specs, table1_observed, budget=30, seed=1)
        assert set(result.best) == {"wta"}
        # holding decay at 5 instead of the true 2 leaves residual error
        free_only = fit(table1_doc, [specs[0]], table1_observed,
                        budget=30, seed=1)
        assert result.loss > free_only.loss

    def test_sensitivity_probes_bracket_optimum(self, table1_doc,
                                                table1_observed):
        specs = [ParamSpec("wta", 0.0, 1.0, 0.5)]
        result = fit(table1_doc, specs, table1_observed, budget=80, seed=0)
        assert set(result.sensitivity) == {"wta"}
        low, high = result.sensitivity["wta"]
        assert low >= result.loss - 1e-12
        assert high >= result.loss - 1e-12

    def test_importance_parameter_is_fittable(self, table1_doc,
                                              table1_observed):
        specs = [ParamSpec("imp.quality", 1.0, 10.0, 5.0)]
        result = fit(table1_doc, specs, table1_observed, budget=5, seed=0)
        assert "imp.quality" in result.best
        assert 1.0 <= result.best["imp.quality"] <= 10.0

    def test_result_tree_is_json_ready(self, table1_doc, table1_observed):
        import json
        specs = [ParamSpec("wta", 0.0, 1.0, 0.4)]
        result = fit(table1_doc, specs, table1_observed, budget=10, seed=0)
        tree = json.loads(json.dumps(result.to_tree()))
        assert tree["evaluations"] == result.evaluations
        assert isinstance(result, FitResult)
