"""HTTP facade over EVOP sessions for live, human-run experiment campaigns.

The service holds no plant model: the operator (or a scripted client) is the
experimental system. It wraps sessions in a JSON-file-per-session store so a
campaign survives restarts -- every mutation is persisted (write to a temp
file, atomic rename) before the response is acknowledged, which makes a kill
between any two requests lossless.

Routes (all JSON; vectors are arrays ordered by variable/constraint index):

    POST /sessions                         create; 201 {"session_id": ...}
    GET  /sessions/{id}/suggestion         pending suggestion / cycle_ready / finished
    POST /sessions/{id}/measurements       submit values for the pending suggestion
    POST /sessions/{id}/advance            run the cycle computation; returns the report
    GET  /sessions/{id}                    full state incl. certificate and history

Sessions are serialized per id: concurrent requests against one session are
processed one at a time; distinct sessions are independent. Binds to
localhost by default -- this is an operator-side tool, not a multi-tenant
server.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .backoff import Chebyshev, GaussianThreeSigma, NoiseModel
from .engine import EvopConfig, EvopSession, Measurement
from .errors import (
    DimensionMismatchError,
    DuplicateMeasurementError,
    InvalidConfigError,
    NoCycleCompletedError,
    NonFiniteError,
    NotReadyError,
    SafeEvopError,
    SessionFinishedError,
    UnknownSuggestionError,
)
from .space import DecisionSpace

STATE_DIR_ENV = "SAFEEVOP_STATE_DIR"


class SpaceBody(BaseModel):
    lower: list[float]
    upper: list[float]


class PolicyBody(BaseModel):
    kind: Literal["gaussian-3sigma", "chebyshev"] = "gaussian-3sigma"
    confidence: float | None = None


class NoiseBody(BaseModel):
    sigma_phi: float
    sigma_g: list[float]
    policy: PolicyBody = PolicyBody()


class ConfigBody(BaseModel):
    space: SpaceBody
    initial_reference: list[float]
    noise: NoiseBody
    delta_e: float
    anneal: bool = False
    backoff_enabled: bool = True
    auto_shrink: bool = False
    max_cycles: int = 40


class MeasurementBody(BaseModel):
    suggestion_id: str
    phi_hat: float
    g_hat: list[float]


def _to_engine_config(body: ConfigBody) -> EvopConfig:
    try:
        if body.noise.policy.kind == "chebyshev":
            if body.noise.policy.confidence is None:
                raise InvalidConfigError("chebyshev policy requires a confidence")
            policy = Chebyshev(confidence=body.noise.policy.confidence)
        else:
            policy = GaussianThreeSigma()
        space = DecisionSpace(
            np.asarray(body.space.lower, float), np.asarray(body.space.upper, float)
        )
        noise = NoiseModel(
            sigma_phi=body.noise.sigma_phi,
            sigma_g=np.asarray(body.noise.sigma_g, float),
            bound_policy=policy,
        )
        return EvopConfig(
            space=space,
            initial_reference=np.asarray(body.initial_reference, float),
            noise=noise,
            delta_e=body.delta_e,
            anneal=body.anneal,
            backoff_enabled=body.backoff_enabled,
            auto_shrink=body.auto_shrink,
            max_cycles=body.max_cycles,
        )
    except InvalidConfigError:
        raise
    except (ValueError, SafeEvopError) as exc:
        raise InvalidConfigError(str(exc)) from exc


def _suggestion_dict(s) -> dict:
    return {
        "id": s.id,
        "u_raw": [float(v) for v in s.u_raw],
        "u_scaled": [float(v) for v in s.u_scaled.coords],
        "purpose": s.purpose,
    }


def _certificate_dict(cert) -> dict:
    return {
        "center_scaled": [float(v) for v in cert.ball.center.coords],
        "radius": cert.ball.radius,
        "safe": cert.safe,
        "per_constraint": [
            {
                "kappa": [float(v) for v in e.kappa.kappa],
                "backoff": e.backoff,
                "robust_value": e.robust_value,
                "margin": e.margin,
            }
            for e in cert.per_constraint
        ],
    }


class SessionStore:
    """In-memory session map backed by one JSON file per session."""

    def __init__(self, state_dir: Path):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self._global_lock = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        self._sessions: dict[str, dict] = {}  # id -> {"session", "config_body", "history"}

    def lock(self, session_id: str) -> threading.Lock:
        with self._global_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def _path(self, session_id: str) -> Path:
        return self.state_dir / f"{session_id}.json"

    def create(self, body: ConfigBody) -> str:
        config = _to_engine_config(body)
        session = EvopSession(config)
        session_id = uuid.uuid4().hex
        with self.lock(session_id):
            self._sessions[session_id] = {
                "session": session,
                "config_body": body.model_dump(),
                "history": [],
            }
            self.persist(session_id)
        return session_id

    def get(self, session_id: str) -> dict:
        with self._global_lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        path = self._path(session_id)
        if not path.exists():
            raise HTTPException(status_code=404, detail="unknown session")
        envelope = json.loads(path.read_text())
        body = ConfigBody(**envelope["config"])
        session = EvopSession.from_state(_to_engine_config(body), envelope["engine"])
        entry = {
            "session": session,
            "config_body": envelope["config"],
            "history": envelope["history"],
        }
        with self._global_lock:
            self._sessions.setdefault(session_id, entry)
            return self._sessions[session_id]

    def persist(self, session_id: str) -> None:
        entry = self._sessions[session_id]
        envelope = {
            "session_id": session_id,
            "config": entry["config_body"],
            "engine": entry["session"].to_state(),
            "history": entry["history"],
        }
        path = self._path(session_id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(envelope, indent=2))
        os.replace(tmp, path)


def create_app(state_dir=None) -> FastAPI:
    """Build the service; ``state_dir`` falls back to ``$SAFEEVOP_STATE_DIR``."""
    if state_dir is None:
        state_dir = os.environ.get(STATE_DIR_ENV, "safeevop-state")
    store = SessionStore(Path(state_dir))
    app = FastAPI(title="safeevop session service")
    app.state.store = store
    # the operator console is served statically from a different origin;
    # the service itself binds to localhost, so open CORS is acceptable
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.post("/sessions", status_code=201)
    def create_session(body: ConfigBody):
        try:
            session_id = store.create(body)
        except InvalidConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"session_id": session_id}

    @app.get("/sessions/{session_id}/suggestion")
    def get_suggestion(session_id: str):
        entry = store.get(session_id)
        with store.lock(session_id):
            session: EvopSession = entry["session"]
            state = session.state.value
            if state == "finished":
                return {"status": "finished"}
            if state == "cycle_ready":
                return {"status": "cycle_ready"}
            return {"status": "suggestion", "suggestion": _suggestion_dict(session.next_suggestion())}

    @app.post("/sessions/{session_id}/measurements")
    def post_measurement(session_id: str, body: MeasurementBody):
        entry = store.get(session_id)
        with store.lock(session_id):
            session: EvopSession = entry["session"]
            pending = session.next_suggestion() if session.state.value == "awaiting_measurement" else None
            try:
                session.ingest_measurement(
                    Measurement(
                        suggestion_id=body.suggestion_id,
                        phi_hat=body.phi_hat,
                        g_hat=np.asarray(body.g_hat, float),
                    )
                )
            except (UnknownSuggestionError, DuplicateMeasurementError, SessionFinishedError) as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            except (NonFiniteError, DimensionMismatchError) as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            entry["history"].append(
                {
                    "k": session.k,
                    "suggestion": _suggestion_dict(pending),
                    "phi_hat": body.phi_hat,
                    "g_hat": list(body.g_hat),
                }
            )
            store.persist(session_id)
        return {"status": "ok", "session_state": session.state.value}

    @app.post("/sessions/{session_id}/advance")
    def advance(session_id: str):
        entry = store.get(session_id)
        with store.lock(session_id):
            session: EvopSession = entry["session"]
            try:
                report = session.advance_cycle()
            except (NotReadyError, SessionFinishedError) as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            store.persist(session_id)
            payload = report.to_dict()
            payload["new_reference_raw"] = [float(v) for v in session.reference_raw]
            payload["session_state"] = session.state.value
        return payload

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        entry = store.get(session_id)
        with store.lock(session_id):
            session: EvopSession = entry["session"]
            state = session.state.value
            pending = session.next_suggestion() if state == "awaiting_measurement" else None
            try:
                certificate = _certificate_dict(session.session_certificate())
            except NoCycleCompletedError:
                certificate = None
            return {
                "session_id": session_id,
                "state": state,
                "k": session.k,
                "delta_e": session.delta_e,
                "noise_scale": session.noise_scale,
                "config": entry["config_body"],
                "reference_raw": [float(v) for v in session.reference_raw],
                "reference_scaled": [float(v) for v in session.reference.coords],
                "pending_suggestion": None if pending is None else _suggestion_dict(pending),
                "certificate": certificate,
                "last_report": None if session.last_report is None else session.last_report.to_dict(),
                "history": entry["history"],
            }

    return app
