import copy
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from marketflow import (AttributePanel, BehaviorParams, IntegratorConfig,
                        ModelError, NewCustomerSeries, ScenarioParseError,
                        ScoreScale, apply_overrides, load_attribute_csv,
                        load_observed_csv, load_run, parse_scenario,
                        parse_tree, persist_run, read_trajectory_json,
                        simulate, write_observed_csv, write_scenario,
                        write_trajectory)
from marketflow.scenario import coerce_override_value, list_scenarios


def broken(tree, mutate):
    tree = copy.deepcopy(tree)
    mutate(tree)
    return tree


def codes(excinfo):
    return {d.code for d in excinfo.value.diagnostics}


def paths(excinfo):
    return [d.path for d in excinfo.value.diagnostics]


class TestParseScenario:
    def test_table1_shape(self, table1_doc):
        assert table1_doc.n == 3
        assert table1_doc.panel.k == 2
        assert table1_doc.panel.times.shape == (6,)
        assert table1_doc.panel.times[0] == 1.0
        assert table1_doc.integrator.horizon == 5.0

    def test_syntax_error_carries_position(self):
        with pytest.raises(ScenarioParseError) as excinfo:
            parse_scenario('{"name": "x", }')
        (diag,) = excinfo.value.diagnostics
        assert diag.code == "syntax_error"
        assert "line 1" in diag.message

    def test_missing_field_is_schema_violation(self, table1_doc):
        with pytest.raises(ScenarioParseError) as excinfo:
            parse_tree(broken(table1_doc.tree,
                              lambda t: t.pop("initial_sizes")))
        assert "schema_violation" in codes(excinfo)
        assert any("initial_sizes" in p for p in paths(excinfo))

    def test_out_of_scale_perf_is_validation_failure(self, table1_doc):
        def mutate(t):
            t["panel"]["perf"][1][0][1] = 0.0  # below s_min=1
        with pytest.raises(ScenarioParseError) as excinfo:
            parse_tree(broken(table1_doc.tree, mutate))
        assert codes(excinfo) == {"validation_failure"}
        joined = " ".join(paths(excinfo))
        assert "panel.perf" in joined
        assert "quality" in joined or "attribute" in joined

    def test_out_of_domain_behavior_is_domain_error(self, table1_doc):
        def mutate(t):
            t["behavior"]["wta"] = 1.5
        with pytest.raises(ScenarioParseError) as excinfo:
            parse_tree(broken(table1_doc.tree, mutate))
        assert "domain_error" in codes(excinfo)
        assert "behavior.wta" in paths(excinfo)
        msg = [d for d in excinfo.value.diagnostics if d.path == "behavior.wta"][0]
        assert not msg.message.startswith("behavior.wta")  # path not repeated

    def test_unknown_field_rejected_strict_tolerated_lax(self, table1_doc):
        tree = broken(table1_doc.tree, lambda t: t.update(bogus_knob=1))
        with pytest.raises(ScenarioParseError) as excinfo:
            parse_tree(tree)
        assert any("bogus_knob" in p for p in paths(excinfo))
        with pytest.warns(UserWarning, match="bogus_knob"):
            doc = parse_tree(tree, lax=True)
        assert doc.n == 3

    def test_several_faults_reported_together(self, table1_doc):
        def mutate(t):
            t["behavior"]["wta"] = 2.0
            t["integrator"]["dt"] = -0.1
            t.pop("segments")
        with pytest.raises(ScenarioParseError) as excinfo:
            parse_tree(broken(table1_doc.tree, mutate))
        assert len(excinfo.value.diagnostics) >= 3

    def test_unsupported_format_version(self, table1_doc):
        with pytest.raises(ScenarioParseError) as excinfo:
            parse_tree(broken(table1_doc.tree,
                              lambda t: t.update(format_version=99)))
        assert any("format_version" in p for p in paths(excinfo))

    def test_round_trip_is_exact(self, table1_doc):
        text = write_scenario(table1_doc)
        again = parse_scenario(text, name=table1_doc.name)
        assert again.tree == table1_doc.tree
        assert again.content_id == table1_doc.content_id
        assert np.array_equal(again.panel.perf, table1_doc.panel.perf)

    def test_non_object_root_rejected(self):
        with pytest.raises(ScenarioParseError):
            parse_scenario("[1, 2, 3]")


class TestOverrides:
    def test_dict_path(self, table1_doc):
        out = apply_overrides(table1_doc.tree, {"behavior.wta": 0.9})
        assert out["behavior"]["wta"] == 0.9
        assert table1_doc.tree["behavior"]["wta"] == 0.3  # copy, not in place

    def test_list_index_path(self, table1_doc):
        out = apply_overrides(table1_doc.tree, {"initial_sizes.2": 55.0})
        assert out["initial_sizes"][2] == 55.0

    def test_unknown_path_rejected(self, table1_doc):
        with pytest.raises(ScenarioParseError) as excinfo:
            apply_overrides(table1_doc.tree, {"behavior.wta_rate": 0.9})
        assert paths(excinfo) == ["behavior.wta_rate"]

    def test_bad_list_index_rejected(self, table1_doc):
        with pytest.raises(ScenarioParseError):
            apply_overrides(table1_doc.tree, {"initial_sizes.nope": 1.0})

    def test_coerce_values(self):
        assert coerce_override_value("0.5") == 0.5
        assert coerce_override_value("true") is True
        assert coerce_override_value("[1, 2]") == [1, 2]
        assert coerce_override_value("softmax") == "softmax"


class TestAttributeCsv:
    def test_dense_csv_matches_inline_panel(self, table1_doc):
        lines = ["t, segment, attribute, perf, imp"]
        for ti, t in enumerate(table1_doc.panel.times):
            for i, seg in enumerate(table1_doc.panel.segments):
                for z, attr in enumerate(table1_doc.panel.attributes):
                    lines.append(f"{t},{seg},{attr},"
                                 f"{table1_doc.panel.perf[ti, i, z]},"
                                 f"{table1_doc.panel.imp[ti, i, z]}")
        assert len(lines) == 37  # header + 6 stamps * 3 segments * 2 attrs
        loaded = load_attribute_csv(io.StringIO("\n".join(lines)))
        assert loaded["segments"] == list(table1_doc.panel.segments)
        assert loaded["attributes"] == list(table1_doc.panel.attributes)
        assert np.array_equal(loaded["times"], table1_doc.panel.times)
        assert np.array_equal(loaded["perf"], table1_doc.panel.perf)
        assert np.array_equal(loaded["imp"], table1_doc.panel.imp)

    def test_row_order_does_not_matter(self):
        text = ("t, segment, attribute, perf, imp\n"
                "1,b,q,4,5\n"
                "0,a,q,2,5\n"
                "0,b,q,3,5\n"
                "1,a,q,5,5\n")
        loaded = load_attribute_csv(io.StringIO(text))
        assert loaded["segments"] == ["b", "a"]  # first appearance wins
        assert np.array_equal(loaded["times"], [0.0, 1.0])
        assert loaded["perf"][0, 1, 0] == 2.0

    def test_duplicate_cell(self):
        text = ("t, segment, attribute, perf, imp\n"
                "0,a,q,2,5\n0,a,q,3,5\n")
        with pytest.raises(ModelError, match="duplicate"):
            load_attribute_csv(io.StringIO(text))

    def test_missing_cell(self):
        text = ("t, segment, attribute, perf, imp\n"
                "0,a,q,2,5\n0,b,q,3,5\n1,a,q,2,5\n")
        with pytest.raises(ModelError, match="missing"):
            load_attribute_csv(io.StringIO(text))

    def test_ragged_row(self):
        text = "t, segment, attribute, perf, imp\n0,a,q,2\n"
        with pytest.raises(ModelError, match="expected 5 fields"):
            load_attribute_csv(io.StringIO(text))

    def test_non_numeric(self):
        text = "t, segment, attribute, perf, imp\n0,a,q,high,5\n"
        with pytest.raises(ModelError, match="non-numeric"):
            load_attribute_csv(io.StringIO(text))

    def test_wrong_header(self):
        with pytest.raises(ModelError, match="header"):
            load_attribute_csv(io.StringIO("time,seg,attr,p,i\n"))

    def test_scenario_with_csv_panel(self, table1_doc, tmp_path):
        lines = ["t, segment, attribute, perf, imp"]
        for ti, t in enumerate(table1_doc.panel.times):
            for i, seg in enumerate(table1_doc.panel.segments):
                for z, attr in enumerate(table1_doc.panel.attributes):
                    lines.append(f"{t},{seg},{attr},"
                                 f"{table1_doc.panel.perf[ti, i, z]},"
                                 f"{table1_doc.panel.imp[ti, i, z]}")
        (tmp_path / "panel.csv").write_text("\n".join(lines) + "\n")
        tree = copy.deepcopy(table1_doc.tree)
        tree["panel"] = {"csv": "panel.csv",
                        "interpolation": table1_doc.panel.interpolation.value}
        doc = parse_tree(tree, name="csvref", base_dir=tmp_path)
        assert np.array_equal(doc.panel.perf, table1_doc.panel.perf)
        # the resolved tree inlines the panel, so content ids agree too
        assert doc.tree["panel"]["perf"] == table1_doc.tree["panel"]["perf"]

    def test_scenario_with_missing_csv(self, table1_doc, tmp_path):
        tree = copy.deepcopy(table1_doc.tree)
        tree["panel"] = {"csv": "nothere.csv", "interpolation": "hold"}
        with pytest.raises(ScenarioParseError) as excinfo:
            parse_tree(tree, name="csvref", base_dir=tmp_path)
        assert "io_error" in codes(excinfo)


def two_state_trajectory():
    panel = AttributePanel(times=np.array([0.0]),
                           perf=np.array([[[5.0]]]),
                           imp=np.array([[[5.0]]]),
                           scale=ScoreScale(0.0, 10.0))
    return simulate(panel, np.array([10.0]), BehaviorParams(decay=0.5),
                    NewCustomerSeries.constant(2.0),
                    IntegratorConfig(dt=1.0, horizon=1.0))


class TestTrajectorySerialization:
    def test_csv_shape_and_rate_placement(self, table1_doc):
        traj = table1_doc.simulate()
        text = write_trajectory(traj, "csv").decode()
        rows = text.strip().split("\n")
        assert len(rows) == 1 + traj.times.shape[0]
        header = rows[0].split(",")
        n = traj.n
        assert header[:2] == ["t", "D_1"]
        assert header[1 + n] == "dOD_1"
        assert header[1 + 4 * n] == "share_1"
        first = rows[1].split(",")
        assert float(first[1 + n]) == traj.rate_od[0, 0]
        last = rows[-1].split(",")
        assert last[1 + n:1 + 4 * n] == [""] * (3 * n)
        assert float(last[1]) == traj.sizes[-1, 0]

    def test_one_step_single_segment_gives_three_rows(self):
        text = write_trajectory(two_state_trajectory(), "csv").decode()
        assert len(text.strip().split("\n")) == 3

    def test_csv_numbers_round_trip_exactly(self, table1_doc):
        traj = table1_doc.simulate()
        rows = write_trajectory(traj, "csv").decode().strip().split("\n")
        for s in (1, 57, len(rows) - 1):
            got = np.array([float(v) for v in rows[s].split(",")[1:1 + traj.n]])
            assert np.array_equal(got, traj.sizes[s - 1])

    def test_share_rows_sum_to_one(self, table1_doc):
        traj = table1_doc.simulate()
        assert np.abs(traj.shares.sum(axis=1) - 1.0).max() < 1e-9

    def test_json_round_trip_exact(self, smooth_doc):
        traj = smooth_doc.simulate()
        again = read_trajectory_json(write_trajectory(traj, "json"))
        for name in ("times", "sizes", "cum_bnd", "cum_rd", "cum_od",
                     "rate_od", "rate_rd", "rate_bnd"):
            assert np.array_equal(getattr(again, name), getattr(traj, name)), name
        assert again.params_used == traj.params_used
        assert again.scenario_id == traj.scenario_id

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            write_trajectory(two_state_trajectory(), "yaml")


class TestObservedCsv:
    def test_round_trip(self):
        times = np.array([1.0, 2.0, 3.0])
        shares = np.array([[0.5, 0.5], [0.25, 0.75], [0.125, 0.875]])
        text = write_observed_csv(times, shares)
        t2, s2 = load_observed_csv(io.StringIO(text))
        assert np.array_equal(t2, times)
        assert np.array_equal(s2, shares)

    def test_rows_sorted_by_time(self):
        text = "t,share_1,share_2\n3,0.5,0.5\n1,0.25,0.75\n"
        times, shares = load_observed_csv(io.StringIO(text))
        assert np.array_equal(times, [1.0, 3.0])
        assert shares[0, 0] == 0.25

    def test_sum_not_one_rejected(self):
        text = "t,share_1,share_2\n1,0.5,0.6\n"
        with pytest.raises(ModelError, match="sum"):
            load_observed_csv(io.StringIO(text))

    def test_segment_count_checked(self):
        text = "t,share_1,share_2\n1,0.5,0.5\n"
        with pytest.raises(ModelError, match="segments"):
            load_observed_csv(io.StringIO(text), n=3)

    def test_bad_header(self):
        with pytest.raises(ModelError, match="header"):
            load_observed_csv(io.StringIO("t,weight_1\n1,1.0\n"))


class TestRunPersistence:
    def test_persist_and_load(self, table1_doc, tmp_path):
        traj = table1_doc.simulate()
        run_id = persist_run(tmp_path, table1_doc, traj)
        assert run_id == table1_doc.content_id
        manifest, doc, loaded = load_run(tmp_path, run_id)
        assert manifest["id"] == run_id
        assert manifest["scenario_name"] == table1_doc.name
        assert manifest["step_count"] == traj.step_count
        assert doc.tree == table1_doc.tree
        assert np.array_equal(loaded.sizes, traj.sizes)

    def test_idempotent(self, table1_doc, tmp_path):
        traj = table1_doc.simulate()
        first = persist_run(tmp_path, table1_doc, traj)
        marker = tmp_path / first / "manifest.json"
        before = marker.read_bytes()
        assert persist_run(tmp_path, table1_doc, traj) == first
        assert marker.read_bytes() == before
        assert len(list(tmp_path.iterdir())) == 1  # no staging leftovers

    def test_different_overrides_get_different_ids(self, table1_doc, tmp_path):
        other = parse_tree(apply_overrides(table1_doc.tree,
                                           {"behavior.wta": 1.0}),
                           name=table1_doc.name)
        assert other.content_id != table1_doc.content_id

    def test_unknown_run_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_run(tmp_path, "nope")


class TestListScenarios:
    def test_finds_shipped_scenarios(self):
        from pathlib import Path
        found = list_scenarios(Path(__file__).resolve().parent.parent / "scenarios")
        assert {"table1", "smooth"} <= set(found)

    def test_missing_directory_is_empty(self, tmp_path):
        assert list_scenarios(tmp_path / "ghost") == {}


json_scalars = st.one_of(st.none(), st.booleans(),
                         st.floats(allow_nan=False, allow_infinity=False),
                         st.integers(-10**6, 10**6), st.text(max_size=20))


class TestParserTotality:
    @given(st.text(max_size=200))
    @settings(max_examples=120, deadline=None)
    def test_arbitrary_text_never_crashes(self, text):
        try:
            parse_scenario(text)
        except ScenarioParseError as exc:
            assert exc.diagnostics

    @given(st.recursive(json_scalars,
                        lambda inner: st.one_of(
                            st.lists(inner, max_size=4),
                            st.dictionaries(st.text(max_size=8), inner,
                                            max_size=4)),
                        max_leaves=12))
    @settings(max_examples=120, deadline=None)
    def test_arbitrary_trees_never_crash(self, tree):
        try:
            parse_tree(tree)
        except ScenarioParseError as exc:
            assert exc.diagnostics

    @given(st.sampled_from([
        "behavior.wta", "behavior.gamma", "behavior.allocator",
        "integrator.dt", "integrator.method", "initial_sizes",
        "panel.times", "panel.perf", "scale.s_max", "segments",
        "new_customers.rate", "format_version",
    ]), json_scalars)
    @settings(max_examples=150, deadline=None)
    def test_single_field_mutations_never_crash(self, table1_tree, dotted, value):
        tree = copy.deepcopy(table1_tree)
        node = tree
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node[part]
        node[parts[-1]] = value
        try:
            parse_tree(tree)
        except ScenarioParseError as exc:
            assert exc.diagnostics
