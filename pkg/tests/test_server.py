import json
import shutil
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from marketflow import write_observed_csv
from marketflow.server import create_app

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture()
def client(tmp_path):
    for name in ("table1.scenario", "smooth.scenario"):
        shutil.copy(SCENARIOS / name, tmp_path / name)
    app = create_app(tmp_path)
    with TestClient(app) as c:
        yield c


class TestScenarioEndpoints:
    def test_listing(self, client):
        body = client.get("/api/scenarios").json()
        names = {item["name"] for item in body["scenarios"]}
        assert names == {"table1", "smooth"}
        table1 = next(i for i in body["scenarios"] if i["name"] == "table1")
        assert table1["segments"] == ["D1", "D2", "D3"]
        assert table1["horizon"] == 5.0

    def test_listing_skips_broken_files(self, client, tmp_path):
        (tmp_path / "broken.scenario").write_text("{nope")
        body = client.get("/api/scenarios").json()
        names = {item["name"] for item in body["scenarios"]}
        assert "broken" not in names
        assert {"table1", "smooth"} <= names

    def test_get_one(self, client):
        body = client.get("/api/scenarios/table1").json()
        assert body["name"] == "table1"
        assert body["scenario"]["behavior"]["wta"] == 0.3

    def test_get_unknown_is_404(self, client):
        response = client.get("/api/scenarios/ghost")
        assert response.status_code == 404
        assert response.json()["code"] == "not_found"


class TestSimulateEndpoint:
    def test_basic_run(self, client):
        response = client.post("/api/simulate", json={"scenario": "table1"})
        assert response.status_code == 200
        body = response.json()
        assert body["scenario"] == "table1"
        assert body["run_id"]
        assert len(body["trajectory"]["times"]) == 101
        shares = body["trajectory"]["shares"]
        assert abs(sum(shares[-1]) - 1.0) < 1e-9
        assert set(body["series"]["market"]) == {"D1", "D2", "D3"}

    def test_identical_requests_identical_bodies(self, client):
        a = client.post("/api/simulate", json={"scenario": "table1"})
        b = client.post("/api/simulate", json={"scenario": "table1"})
        assert a.content == b.content

    def test_overrides_apply(self, client):
        base = client.post("/api/simulate", json={"scenario": "table1"}).json()
        mod = client.post("/api/simulate", json={
            "scenario": "table1",
            "overrides": {"behavior.wta": 1.0},
        }).json()
        assert mod["run_id"] != base["run_id"]
        assert mod["trajectory"]["sizes"] != base["trajectory"]["sizes"]

    def test_inline_doc(self, client, table1_doc):
        tree = json.loads(json.dumps(table1_doc.tree))
        response = client.post("/api/simulate", json={"doc": tree})
        assert response.status_code == 200
        assert response.json()["scenario"] == table1_doc.tree["name"]

    def test_unknown_scenario_404(self, client):
        response = client.post("/api/simulate", json={"scenario": "ghost"})
        assert response.status_code == 404

    def test_domain_error_400_with_path(self, client):
        response = client.post("/api/simulate", json={
            "scenario": "table1",
            "overrides": {"behavior.wta": 1.5},
        })
        assert response.status_code == 400
        body = response.json()
        assert body["code"] == "domain_error"
        assert body["path"] == "behavior.wta"

    def test_validation_failure_422_citing_cell(self, client, table1_doc):
        tree = json.loads(json.dumps(table1_doc.tree))
        tree["panel"]["perf"][0][0][0] = 11.0  # above s_max
        response = client.post("/api/simulate", json={"doc": tree})
        assert response.status_code == 422
        body = response.json()
        assert body["code"] == "validation_failure"
        assert "panel.perf" in body["path"]

    def test_step_cap_rejects_tiny_dt(self, client):
        response = client.post("/api/simulate", json={
            "scenario": "table1",
            "overrides": {"integrator.dt": 1e-9},
        })
        assert response.status_code == 400
        assert "cap" in response.json()["message"]

    def test_missing_body_shape_400(self, client):
        response = client.post("/api/simulate", json={})
        assert response.status_code == 400
        response = client.post("/api/simulate", json={"doc": 7})
        assert response.status_code == 400

    def test_non_json_body_400(self, client):
        response = client.post("/api/simulate", content=b"not json",
                               headers={"content-type": "application/json"})
        assert response.status_code == 400
        assert response.json()["code"] == "schema_violation"


class TestRunReplay:
    def test_replay_round_trips_exactly(self, client):
        first = client.post("/api/simulate", json={"scenario": "smooth"}).json()
        replay = client.get(f"/api/runs/{first['run_id']}")
        assert replay.status_code == 200
        body = replay.json()
        assert body["trajectory"]["sizes"] == first["trajectory"]["sizes"]
        assert body["manifest"]["scenario_name"] == "smooth"
        assert body["scenario"]["name"] == "smooth"

    def test_unknown_run_404(self, client):
        assert client.get("/api/runs/doesnotexist").status_code == 404

    def test_runs_persist_on_disk(self, client, tmp_path):
        body = client.post("/api/simulate", json={"scenario": "table1"}).json()
        run_dir = tmp_path / "runs" / body["run_id"]
        assert (run_dir / "manifest.json").is_file()
        assert (run_dir / "scenario.json").is_file()
        assert (run_dir / "trajectory.json").is_file()


class TestFitEndpoint:
    def observed_inline(self, table1_doc):
        traj = table1_doc.simulate()
        stamps = np.array([2.0, 4.0, 6.0])
        idx = [int(np.argmin(np.abs(traj.times - t))) for t in stamps]
        return write_observed_csv(stamps, traj.shares[idx])

    def test_fit_respects_budget(self, client, table1_doc):
        response = client.post("/api/fit", json={
            "scenario": "table1",
            "observed_csv": self.observed_inline(table1_doc),
            "spec": [{"name": "wta", "initial": 0.5}],
            "budget": 40,
            "seed": 0,
        })
        assert response.status_code == 200
        body = response.json()
        assert body["fit"]["evaluations"] <= 40
        assert set(body["fit"]["best"]) == {"wta"}

    def test_missing_observed_csv_400(self, client):
        response = client.post("/api/fit", json={"scenario": "table1"})
        assert response.status_code == 400
        assert response.json()["path"] == "observed_csv"

    def test_malformed_observed_csv_400(self, client):
        response = client.post("/api/fit", json={
            "scenario": "table1",
            "observed_csv": "t,share_1,share_2,share_3\n2,0.9,0.9,0.9\n",
        })
        assert response.status_code == 400

    def test_bad_budget_type_400(self, client, table1_doc):
        response = client.post("/api/fit", json={
            "scenario": "table1",
            "observed_csv": self.observed_inline(table1_doc),
            "budget": "lots",
        })
        assert response.status_code == 400
        assert response.json()["path"] == "budget"


class TestStaticMount:
    def test_ui_served_when_directory_given(self, tmp_path):
        scen_dir = tmp_path / "scenarios"
        scen_dir.mkdir()
        shutil.copy(SCENARIOS / "table1.scenario", scen_dir / "table1.scenario")
        static = tmp_path / "static"
        static.mkdir()
        (static / "index.html").write_text("<h1>what-if</h1>")
        with TestClient(create_app(scen_dir, static_dir=static)) as c:
            page = c.get("/")
            assert page.status_code == 200
            assert "what-if" in page.text
            assert c.get("/api/scenarios").status_code == 200

    def test_no_static_directory_root_404s(self, tmp_path):
        with TestClient(create_app(tmp_path)) as c:
            assert c.get("/").status_code == 404
