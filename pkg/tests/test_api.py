from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from ce_lcrt.api import create_app
from ce_lcrt.runner import run_lod, run_mmd
from ce_lcrt.config import RunConfig


@pytest.fixture(scope="module")
def client() -> TestClient:
    return TestClient(create_app(deadline_seconds=300.0))


ROW1_CONFIG = {
    "design": {"family": "crxo", "periods": 2, "allocation": {"num": 1, "den": 2}},
    "economics": {"sigmaE": 1.0, "sigmaC": 3000.0, "ceilingRatio": 20000.0,
                  "inmb": 4000.0, "alpha": 0.05},
    "budget": {"total": 300000.0, "clusterCost": 3000.0, "individualCost": 250.0},
    "icc": {"rho0E": 0.05, "rho1E": 0.025, "rho0C": 0.05, "rho1C": 0.025,
            "rho0EC": 0.02, "rho1EC": 0.01, "rho2EC": 0.5},
}

TRIAL_ICC = {"rho0E": 0.048, "rho1E": 0.042, "rho0C": 0.020, "rho1C": 0.018,
             "rho0EC": 0.007, "rho1EC": 0.004, "rho2EC": 0.75}


class TestHealth:
    def test_ok(self, client):
        response = client.get("/api/v1/health")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "ok"
        assert body["result"]["status"] == "ok"
        from ce_lcrt import __version__

        assert body["result"]["version"] == __version__


class TestValidateIcc:
    def test_valid_point(self, client):
        response = client.post("/api/v1/validate-icc",
                               json={"icc": ROW1_CONFIG["icc"], "J": 2, "K": 14})
        assert response.status_code == 200
        result = response.json()["result"]
        assert result["ok"] and result["minEigenvalue"] > 0

    def test_ordering_violation_is_422(self, client):
        icc = dict(ROW1_CONFIG["icc"], rho1E=0.06)
        response = client.post("/api/v1/validate-icc", json={"icc": icc, "J": 2, "K": 14})
        assert response.status_code == 422
        report = response.json()["error"]["report"]
        failing = [c["id"] for c in report["constraints"] if not c["ok"]]
        assert failing == ["(i)"]

    def test_eigen_violation_is_422(self, client):
        icc = {"rho0E": 0.1, "rho1E": 0.0, "rho0C": 0.1, "rho1C": 0.0,
               "rho0EC": 0.0, "rho1EC": 0.0, "rho2EC": 0.9999}
        response = client.post("/api/v1/validate-icc", json={"icc": icc, "J": 3, "K": 2})
        assert response.status_code == 422
        report = response.json()["error"]["report"]
        assert report["minEigenvalue"] < 0

    def test_malformed_body_is_400(self, client):
        response = client.post("/api/v1/validate-icc",
                               content=b"{not json", headers={"content-type": "application/json"})
        assert response.status_code == 400

    def test_missing_grid_is_400(self, client):
        response = client.post("/api/v1/validate-icc", json={"icc": ROW1_CONFIG["icc"]})
        assert response.status_code == 400


class TestLodEndpoint:
    def test_matches_engine_byte_for_byte(self, client):
        response = client.post("/api/v1/lod", json=ROW1_CONFIG)
        assert response.status_code == 200
        api_result = response.json()["result"]
        direct = run_lod(RunConfig.from_dict(ROW1_CONFIG))
        assert json.dumps(api_result, sort_keys=True) == json.dumps(direct, sort_keys=True)
        assert api_result["integer"]["I"] == 30

    def test_infeasible_budget_is_422(self, client):
        config = dict(ROW1_CONFIG, budget={"total": 100.0, "clusterCost": 3000.0,
                                           "individualCost": 250.0})
        response = client.post("/api/v1/lod", json=config)
        assert response.status_code == 422
        assert response.json()["error"]["code"] == "EMPTY_FEASIBLE_SET"


class TestMmdEndpoint:
    def test_singleton_box_matches_runner(self, client):
        config = dict(ROW1_CONFIG)
        config.pop("icc")
        config["iccBox"] = {"min": ROW1_CONFIG["icc"], "max": ROW1_CONFIG["icc"]}
        response = client.post("/api/v1/mmd", json=config)
        assert response.status_code == 200
        api_result = response.json()["result"]
        direct = run_mmd(RunConfig.from_dict(config))
        assert json.dumps(api_result, sort_keys=True) == json.dumps(direct, sort_keys=True)

    def test_reinvestment_pa_design(self, client):
        config = {
            "design": {"family": "pa", "periods": 8, "allocation": {"num": 1, "den": 2}},
            "economics": {"sigmaE": 6.48, "sigmaC": 11635.0, "ceilingRatio": 216.0,
                          "inmb": 2089.0, "alpha": 0.05},
            "budget": {"total": 600000.0, "clusterCost": 3000.0, "individualCost": 250.0},
            "iccBox": {"min": dict(TRIAL_ICC, rho0EC=0.0, rho1EC=0.0, rho2EC=0.5),
                       "max": dict(TRIAL_ICC, rho0EC=0.01, rho1EC=0.005, rho2EC=0.8)},
        }
        response = client.post("/api/v1/mmd", json=config)
        assert response.status_code == 200
        result = response.json()["result"]
        assert (result["I"], result["K"]) == (66, 3)
        assert result["worstCaseRE"] == pytest.approx(0.990, abs=3e-3)


class TestSweepEndpoint:
    def test_single_point_matches_lod(self, client):
        body = dict(ROW1_CONFIG, axis="cac", grid=[0.5])
        response = client.post("/api/v1/sweep", json=body)
        assert response.status_code == 200
        rows = response.json()["result"]
        assert len(rows) == 1
        lod = client.post("/api/v1/lod", json=ROW1_CONFIG).json()["result"]
        assert rows[0]["I"] == lod["integer"]["I"]
        assert rows[0]["K"] == lod["integer"]["K"]

    def test_missing_axis_is_400(self, client):
        response = client.post("/api/v1/sweep", json=dict(ROW1_CONFIG, grid=[0.5]))
        assert response.status_code == 400


class TestDeadline:
    def test_mmd_deadline_maps_to_504(self):
        client = TestClient(create_app(deadline_seconds=0.0))
        config = dict(ROW1_CONFIG)
        config.pop("icc")
        config["iccBox"] = {
            "min": dict(ROW1_CONFIG["icc"], rho0EC=0.01, rho1EC=0.005, rho2EC=0.5),
            "max": dict(ROW1_CONFIG["icc"], rho0E=0.10, rho1E=0.04, rho0C=0.08,
                        rho1C=0.032, rho0EC=0.02, rho1EC=0.01, rho2EC=0.8),
        }
        response = client.post("/api/v1/mmd", json=config)
        assert response.status_code == 504
        assert response.json()["error"]["code"] == "DEADLINE"
