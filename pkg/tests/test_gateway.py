"""HTTP service tests over the documented endpoints."""

import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from greenbasket.dataset import SynthConfig, baskets_from_corpus, synth_generate
from greenbasket.domain import AnchorContext, feature_ratios
from greenbasket.gateway import GatewayConfig, create_app, replay_feedback_log


@pytest.fixture(scope="module")
def catalog_and_basket():
    catalog, corpus, _ = synth_generate(
        SynthConfig(seed=31, n_households=2, n_weeks=1, n_products=22)
    )
    baskets = baskets_from_corpus(corpus, catalog)
    x_star = baskets[("H001", 1)]
    basket_map = {
        catalog.product_ids[i]: int(q) for i, q in enumerate(x_star) if q > 0
    }
    return catalog, basket_map, x_star


@pytest.fixture()
def client(catalog_and_basket, tmp_path):
    catalog, _, _ = catalog_and_basket
    config = GatewayConfig(feedback_log=str(tmp_path / "feedback.jsonl"))
    app = create_app(catalog, config)
    with TestClient(app) as tc:
        yield tc, config


def wait_for_job(tc, job_id, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        body = tc.get(f"/jobs/{job_id}").json()
        if body["status"] != "pending":
            return body
        time.sleep(0.05)
    raise TimeoutError("job did not finish")


def submit_and_wait(tc, payload):
    response = tc.post("/optimize", json=payload)
    assert response.status_code == 200, response.text
    return wait_for_job(tc, response.json()["job_id"])


class TestBasics:
    def test_health(self, client):
        tc, _ = client
        body = tc.get("/health").json()
        assert body == {"status": "ok", "catalog_loaded": True}

    def test_catalog_endpoint(self, client, catalog_and_basket):
        tc, _ = client
        catalog, _, _ = catalog_and_basket
        body = tc.get("/catalog").json()
        assert body["n_products"] == catalog.size
        assert body["products"][0]["product_id"] == catalog.product_ids[0]
        assert "price_usd" in body["products"][0]

    def test_catalog_not_loaded(self, tmp_path):
        app = create_app(None, GatewayConfig(feedback_log=str(tmp_path / "f.jsonl")))
        with TestClient(app) as tc:
            assert tc.get("/catalog").status_code == 409
            response = tc.post(
                "/optimize", json={"basket": {"P001": 1}, "method": "rnsga2"}
            )
            assert response.status_code == 409


class TestOptimize:
    def test_empty_basket_rejected(self, client):
        tc, _ = client
        response = tc.post("/optimize", json={"basket": {}, "method": "rnsga2"})
        assert response.status_code == 400

    def test_zero_quantity_basket_rejected(self, client):
        tc, _ = client
        response = tc.post("/optimize", json={"basket": {"P001": 0}})
        assert response.status_code == 400

    def test_unknown_product_rejected(self, client):
        tc, _ = client
        response = tc.post(
            "/optimize", json={"basket": {"NOPE": 1}, "method": "rnsga2"}
        )
        assert response.status_code == 400

    def test_unknown_method_rejected(self, client, catalog_and_basket):
        tc, _ = client
        _, basket, _ = catalog_and_basket
        response = tc.post("/optimize", json={"basket": basket, "method": "sgd"})
        assert response.status_code == 400

    def test_bad_weights_rejected(self, client, catalog_and_basket):
        tc, _ = client
        _, basket, _ = catalog_and_basket
        response = tc.post(
            "/optimize",
            json={"basket": basket, "method": "rnsga2", "weights": [1.0, 2.0]},
        )
        assert response.status_code == 400

    def test_unknown_job_is_404(self, client):
        tc, _ = client
        assert tc.get("/jobs/missing").status_code == 404

    def test_deterministic_recommendations(self, client, catalog_and_basket):
        tc, _ = client
        _, basket, _ = catalog_and_basket
        payload = {"basket": basket, "method": "rnsga2", "seed": 7, "budget": 3}
        first = submit_and_wait(tc, payload)
        second = submit_and_wait(tc, payload)
        assert first["status"] == second["status"] == "completed"
        assert first["recommendations"] == second["recommendations"]

    def test_default_weights_equal_omitted(self, client, catalog_and_basket):
        tc, _ = client
        _, basket, _ = catalog_and_basket
        base = {"basket": basket, "method": "rnsga2", "seed": 3, "budget": 3}
        without = submit_and_wait(tc, base)
        with_ones = submit_and_wait(tc, {**base, "weights": [1.0] * 11})
        assert without["recommendations"] == with_ones["recommendations"]

    def test_response_ratios_recomputable(self, client, catalog_and_basket):
        tc, _ = client
        catalog, basket, x_star = catalog_and_basket
        body = submit_and_wait(
            tc, {"basket": basket, "method": "rnsga2", "seed": 5, "budget": 3}
        )
        ctx = AnchorContext.build(catalog, x_star)
        for rec in body["recommendations"]:
            x = np.zeros(catalog.size, dtype=np.int64)
            for pid, qty in rec["basket"].items():
                x[catalog.index_of(pid)] = qty
            expected = feature_ratios(catalog, x, ctx)
            got = np.array([rec["ratios"][c] for c in rec["ratios"]])
            np.testing.assert_allclose(got, expected, atol=1e-10)
            if rec["passed_filter"]:
                assert rec["cosine_similarity"] > 0.5
                assert rec["ratios"]["price_usd"] < 1.0

    def test_concurrent_requests_match_sequential(self, client, catalog_and_basket):
        tc, _ = client
        _, basket, _ = catalog_and_basket
        payload_a = {"basket": basket, "method": "rnsga2", "seed": 11, "budget": 3}
        payload_b = {"basket": basket, "method": "rnsga2", "seed": 12, "budget": 3}
        # fire both before waiting on either
        job_a = tc.post("/optimize", json=payload_a).json()["job_id"]
        job_b = tc.post("/optimize", json=payload_b).json()["job_id"]
        body_a = wait_for_job(tc, job_a)
        body_b = wait_for_job(tc, job_b)
        again_a = submit_and_wait(tc, payload_a)
        again_b = submit_and_wait(tc, payload_b)
        assert body_a["recommendations"] == again_a["recommendations"]
        assert body_b["recommendations"] == again_b["recommendations"]
        assert body_a["recommendations"] != body_b["recommendations"]


class TestFeedback:
    def test_accept_writes_one_line(self, client, catalog_and_basket):
        tc, config = client
        _, basket, _ = catalog_and_basket
        body = submit_and_wait(
            tc, {"basket": basket, "method": "rnsga2", "seed": 2, "budget": 2}
        )
        job_id = body["job_id"]
        response = tc.post(f"/jobs/{job_id}/feedback", json={"accepted_index": 0})
        assert response.status_code == 200
        lines = open(config.feedback_log).read().strip().splitlines()
        assert len(lines) == 1
        entry = json.loads(lines[0])
        assert entry["job_id"] == job_id
        assert entry["choice"] == 0

    def test_decline_logs_null_choice(self, client, catalog_and_basket):
        tc, config = client
        _, basket, _ = catalog_and_basket
        body = submit_and_wait(
            tc, {"basket": basket, "method": "rnsga2", "seed": 2, "budget": 2}
        )
        tc.post(f"/jobs/{body['job_id']}/feedback", json={"accepted_index": None})
        entry = json.loads(open(config.feedback_log).read().strip())
        assert entry["choice"] is None

    def test_unknown_job_and_bad_index(self, client, catalog_and_basket):
        tc, _ = client
        _, basket, _ = catalog_and_basket
        assert (
            tc.post("/jobs/nope/feedback", json={"accepted_index": 0}).status_code
            == 404
        )
        body = submit_and_wait(
            tc, {"basket": basket, "method": "rnsga2", "seed": 2, "budget": 2}
        )
        response = tc.post(
            f"/jobs/{body['job_id']}/feedback",
            json={"accepted_index": len(body["recommendations"])},
        )
        assert response.status_code == 422

    def test_replay_reconstructs_counts(self, client, catalog_and_basket):
        tc, config = client
        _, basket, _ = catalog_and_basket
        body = submit_and_wait(
            tc, {"basket": basket, "method": "rnsga2", "seed": 2, "budget": 2}
        )
        job_id = body["job_id"]
        tc.post(f"/jobs/{job_id}/feedback", json={"accepted_index": 0})
        tc.post(f"/jobs/{job_id}/feedback", json={"accepted_index": None})
        tc.post(f"/jobs/{job_id}/feedback", json={"accepted_index": 0})
        counts = replay_feedback_log(config.feedback_log)
        assert counts["accepted"] == 2
        assert counts["declined"] == 1
        assert counts["per_job"][job_id] == [0, None, 0]


class TestConfig:
    def test_config_file_roundtrip(self, tmp_path):
        path = tmp_path / "gateway.conf"
        path.write_text(
            "# service settings\n"
            "catalog = /data/catalog.csv\n"
            "default_method = g3a\n"
            "port = 9001\n"
            "seed = 42\n"
            "feedback_log = /tmp/fb.jsonl\n"
        )
        config = GatewayConfig.from_file(path)
        assert config.catalog_path == "/data/catalog.csv"
        assert config.default_method == "g3a"
        assert config.port == 9001
        assert config.seed == 42

    def test_env_overrides(self, tmp_path, monkeypatch):
        config = GatewayConfig(catalog_path="a.csv", port=8000)
        monkeypatch.setenv("GREENBASKET_PORT", "9999")
        monkeypatch.setenv("GREENBASKET_CATALOG", "b.csv")
        config.apply_env_overrides()
        assert config.port == 9999
        assert config.catalog_path == "b.csv"

    def test_bad_config_rejected(self, tmp_path):
        path = tmp_path / "bad.conf"
        path.write_text("nonsense line without equals\n")
        with pytest.raises(ValueError):
            GatewayConfig.from_file(path)
        path.write_text("default_method = quantum\n")
        with pytest.raises(ValueError):
            GatewayConfig.from_file(path)
