import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from safeevop import DecisionSpace, EvopConfig, EvopSession, Measurement, NoiseModel
from safeevop.engine import SessionState
from safeevop.service import create_app


def config_body(**overrides):
    body = {
        "space": {"lower": [0.0, 0.0], "upper": [1.0, 1.0]},
        "initial_reference": [0.5, 0.5],
        "noise": {"sigma_phi": 0.01, "sigma_g": [0.005]},
        "delta_e": 0.05,
        "max_cycles": 3,
    }
    body.update(overrides)
    return body


@pytest.fixture
def client(tmp_path):
    return TestClient(create_app(tmp_path / "state"))


def make_session(client, **overrides):
    resp = client.post("/sessions", json=config_body(**overrides))
    assert resp.status_code == 201
    return resp.json()["session_id"]


def measure_all(client, sid, respond):
    """Measure every pending suggestion until the cycle is ready."""
    while True:
        got = client.get(f"/sessions/{sid}/suggestion").json()
        if got["status"] != "suggestion":
            return got["status"]
        sug = got["suggestion"]
        phi, g = respond(sug)
        r = client.post(
            f"/sessions/{sid}/measurements",
            json={"suggestion_id": sug["id"], "phi_hat": phi, "g_hat": g},
        )
        assert r.status_code == 200


def flat(sug):
    return 0.25, [-0.8]


class TestCreateSession:
    def test_valid_config_created(self, client):
        sid = make_session(client)
        assert isinstance(sid, str) and sid

    def test_table_style_config(self, client):
        sid = make_session(
            client,
            space={"lower": [3.0, 70.0], "upper": [6.0, 100.0]},
            initial_reference=[3.5, 72.0],
            noise={"sigma_phi": 0.5, "sigma_g": [5e-4]},
        )
        got = client.get(f"/sessions/{sid}/suggestion").json()
        assert got["suggestion"]["u_raw"] == [3.5, 72.0]
        assert got["suggestion"]["purpose"] == "reference"

    def test_zero_delta_is_400(self, client):
        resp = client.post("/sessions", json=config_body(delta_e=0.0))
        assert resp.status_code == 400

    def test_bad_bounds_is_400(self, client):
        resp = client.post(
            "/sessions", json=config_body(space={"lower": [1.0, 0.0], "upper": [1.0, 1.0]})
        )
        assert resp.status_code == 400

    def test_duplicate_creates_distinct_ids(self, client):
        assert make_session(client) != make_session(client)

    def test_chebyshev_policy_accepted(self, client):
        sid = make_session(
            client,
            noise={
                "sigma_phi": 0.01,
                "sigma_g": [0.005],
                "policy": {"kind": "chebyshev", "confidence": 0.99},
            },
        )
        measure_all(client, sid, flat)
        resp = client.post(f"/sessions/{sid}/advance")
        assert resp.status_code == 200
        # robust values use the chebyshev multiplier 1/sqrt(1-0.99) = 10
        robust = resp.json()["certificate"]["per_constraint"][0]["robust_value"]
        assert robust == pytest.approx(-0.8 + 10 * 0.005, rel=1e-9)

    def test_chebyshev_without_confidence_400(self, client):
        resp = client.post(
            "/sessions",
            json=config_body(
                noise={"sigma_phi": 0.01, "sigma_g": [0.005], "policy": {"kind": "chebyshev"}}
            ),
        )
        assert resp.status_code == 400


class TestSuggestionEndpoint:
    def test_fresh_session_serves_reference(self, client):
        sid = make_session(client)
        got = client.get(f"/sessions/{sid}/suggestion").json()
        assert got["status"] == "suggestion"
        assert got["suggestion"]["purpose"] == "reference"

    def test_idempotent_until_measured(self, client):
        sid = make_session(client)
        a = client.get(f"/sessions/{sid}/suggestion").json()
        b = client.get(f"/sessions/{sid}/suggestion").json()
        assert a == b

    def test_cycle_ready_after_all_measured(self, client):
        sid = make_session(client)
        status = measure_all(client, sid, flat)
        assert status == "cycle_ready"

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope/suggestion").status_code == 404


class TestMeasurementEndpoint:
    def test_stale_id_409(self, client):
        sid = make_session(client)
        sug = client.get(f"/sessions/{sid}/suggestion").json()["suggestion"]
        ok = client.post(
            f"/sessions/{sid}/measurements",
            json={"suggestion_id": sug["id"], "phi_hat": 0.0, "g_hat": [-0.5]},
        )
        assert ok.status_code == 200
        stale = client.post(
            f"/sessions/{sid}/measurements",
            json={"suggestion_id": sug["id"], "phi_hat": 0.0, "g_hat": [-0.5]},
        )
        assert stale.status_code == 409

    def test_out_of_order_id_409(self, client):
        sid = make_session(client)
        resp = client.post(
            f"/sessions/{sid}/measurements",
            json={"suggestion_id": "exp-00099", "phi_hat": 0.0, "g_hat": [-0.5]},
        )
        assert resp.status_code == 409

    def test_nan_422(self, client):
        sid = make_session(client)
        sug = client.get(f"/sessions/{sid}/suggestion").json()["suggestion"]
        # hand-encode so the NaN literal reaches the server
        payload = json.dumps(
            {"suggestion_id": sug["id"], "phi_hat": float("nan"), "g_hat": [-0.5]}
        )
        resp = client.post(
            f"/sessions/{sid}/measurements",
            content=payload,
            headers={"content-type": "application/json"},
        )
        assert resp.status_code == 422

    def test_wrong_width_422(self, client):
        sid = make_session(client)
        sug = client.get(f"/sessions/{sid}/suggestion").json()["suggestion"]
        resp = client.post(
            f"/sessions/{sid}/measurements",
            json={"suggestion_id": sug["id"], "phi_hat": 0.0, "g_hat": [-0.5, -0.5]},
        )
        assert resp.status_code == 422

    def test_unknown_session_404(self, client):
        resp = client.post(
            "/sessions/nope/measurements",
            json={"suggestion_id": "exp-00001", "phi_hat": 0.0, "g_hat": [0.0]},
        )
        assert resp.status_code == 404


class TestAdvanceEndpoint:
    def test_not_ready_409(self, client):
        sid = make_session(client)
        assert client.post(f"/sessions/{sid}/advance").status_code == 409

    def test_report_payload(self, client):
        sid = make_session(client)
        measure_all(client, sid, flat)
        resp = client.post(f"/sessions/{sid}/advance")
        assert resp.status_code == 200
        report = resp.json()
        assert report["k"] == 1
        assert len(report["grad_phi"]) == 2
        assert len(report["kappa"]) == 1
        assert "certificate" in report and "per_constraint" in report["certificate"]
        assert len(report["new_reference_raw"]) == 2
        assert report["session_state"] == "awaiting_measurement"

    def test_finished_after_max_cycles(self, client):
        sid = make_session(client, max_cycles=1)
        measure_all(client, sid, flat)
        resp = client.post(f"/sessions/{sid}/advance")
        assert resp.json()["session_state"] == "finished"
        got = client.get(f"/sessions/{sid}/suggestion").json()
        assert got["status"] == "finished"
        assert client.post(f"/sessions/{sid}/advance").status_code == 409


class TestFullState:
    def test_state_document(self, client):
        sid = make_session(client)
        measure_all(client, sid, flat)
        client.post(f"/sessions/{sid}/advance")
        doc = client.get(f"/sessions/{sid}").json()
        assert doc["session_id"] == sid
        assert doc["state"] == "awaiting_measurement"
        assert doc["k"] == 2
        assert doc["certificate"] is not None
        assert doc["certificate"]["safe"] is True
        assert len(doc["history"]) == 5
        assert doc["last_report"]["k"] == 1

    def test_certificate_none_before_first_cycle(self, client):
        sid = make_session(client)
        doc = client.get(f"/sessions/{sid}").json()
        assert doc["certificate"] is None
        assert doc["last_report"] is None


class TestPersistence:
    def test_crash_between_requests_loses_nothing(self, tmp_path):
        state_dir = tmp_path / "state"
        first = TestClient(create_app(state_dir))
        sid = make_session(first)
        sug = first.get(f"/sessions/{sid}/suggestion").json()["suggestion"]
        first.post(
            f"/sessions/{sid}/measurements",
            json={"suggestion_id": sug["id"], "phi_hat": 0.125, "g_hat": [-0.375]},
        )
        # simulated restart: a fresh app over the same state directory
        second = TestClient(create_app(state_dir))
        doc = second.get(f"/sessions/{sid}").json()
        assert doc["history"][0]["phi_hat"] == 0.125
        status = measure_all(second, sid, flat)
        assert status == "cycle_ready"
        assert second.post(f"/sessions/{sid}/advance").status_code == 200

    def test_persisted_numbers_exact(self, tmp_path):
        state_dir = tmp_path / "state"
        client = TestClient(create_app(state_dir))
        sid = make_session(client)
        sug = client.get(f"/sessions/{sid}/suggestion").json()["suggestion"]
        phi = 0.1 + 0.2  # 0.30000000000000004
        client.post(
            f"/sessions/{sid}/measurements",
            json={"suggestion_id": sug["id"], "phi_hat": phi, "g_hat": [-1.0 / 3.0]},
        )
        envelope = json.loads((state_dir / f"{sid}.json").read_text())
        assert envelope["engine"]["rows"]["phi"][0] == phi
        assert envelope["engine"]["rows"]["g"][0][0] == -1.0 / 3.0

    def test_reload_gives_identical_next_outputs(self, tmp_path):
        state_dir = tmp_path / "state"
        client = TestClient(create_app(state_dir))
        sid = make_session(client)
        measure_all(client, sid, flat)
        before = client.post(f"/sessions/{sid}/advance").json()
        fresh = TestClient(create_app(state_dir))
        a = client.get(f"/sessions/{sid}/suggestion").json()
        b = fresh.get(f"/sessions/{sid}/suggestion").json()
        assert a == b
        doc = fresh.get(f"/sessions/{sid}").json()
        trimmed = {k: v for k, v in before.items() if k not in ("new_reference_raw", "session_state")}
        assert doc["last_report"] == trimmed


class TestApiEngineEquivalence:
    def test_http_and_in_process_reports_match(self, tmp_path):
        rng = np.random.default_rng(31)
        values = []

        def scripted(sug):
            u = sug["u_scaled"] if isinstance(sug, dict) else sug.u_scaled.coords
            phi = float(u[0] ** 2 + 0.5 * u[1] + rng.normal(0, 0.01))
            g = [float(u[0] + u[1] - 1.7 + rng.normal(0, 0.005))]
            values.append((phi, g))
            return phi, g

        client = TestClient(create_app(tmp_path / "state"))
        sid = make_session(client, max_cycles=3)
        http_reports = []
        while True:
            status = measure_all(client, sid, scripted)
            if status == "finished":
                break
            http_reports.append(client.post(f"/sessions/{sid}/advance").json())

        replay = iter(values)
        session = EvopSession(
            EvopConfig(
                space=DecisionSpace(np.zeros(2), np.ones(2)),
                initial_reference=np.array([0.5, 0.5]),
                noise=NoiseModel(sigma_phi=0.01, sigma_g=np.array([0.005])),
                delta_e=0.05,
                max_cycles=3,
            )
        )
        engine_reports = []
        while session.state != SessionState.FINISHED:
            if session.state == SessionState.CYCLE_READY:
                engine_reports.append(session.advance_cycle().to_dict())
                continue
            sug = session.next_suggestion()
            phi, g = next(replay)
            session.ingest_measurement(Measurement(sug.id, phi, np.array(g)))

        assert len(http_reports) == len(engine_reports) == 3
        for http_r, eng_r in zip(http_reports, engine_reports):
            trimmed = {
                k: v
                for k, v in http_r.items()
                if k not in ("new_reference_raw", "session_state")
            }
            assert trimmed == eng_r
