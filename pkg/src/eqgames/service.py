"""JSON-over-HTTP API for systems, checks, determinizations and live games.

Sessions are kept in memory with a TTL; every accepted move bumps a
version counter and moves must quote the version they saw (optimistic
concurrency), while a per-session lock serializes concurrent mutations.
"""

from __future__ import annotations

import threading
import time
import uuid
from typing import Optional, Union

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import engine as eng
from . import game as gm
from . import semantics as sm
from .semantics import DetState, Semantics, InstanceViolation
from .systems import ParseError, parse_aut, parse_pts

SESSION_TTL_SECONDS = 3600.0


class SystemUpload(BaseModel):
    kind: str  # 'aut' | 'pts'
    text: str


class CheckRequest(BaseModel):
    system_id: str
    semantics: str
    left: Union[int, str, dict]
    right: Union[int, str, dict]
    depth: Union[int, str] = eng.LIMIT
    budget: int = eng.DEFAULT_BUDGET


class SessionRequest(BaseModel):
    system_id: str
    semantics: str
    left: Union[int, str, dict]
    right: Union[int, str, dict]
    rounds: Union[int, str]
    human_role: Optional[str] = None
    max_strikes: int = 3


class MoveRequest(BaseModel):
    version: int
    kind: str  # 'duplicator_relation' | 'spoiler_pick' | 'request_engine_move'
    payload: Optional[Union[list, dict]] = None


class ReplayRequest(BaseModel):
    system_id: str
    semantics: str
    left: Union[int, str, dict]
    right: Union[int, str, dict]
    rounds: Union[int, str]
    human_role: Optional[str] = None
    max_strikes: int = 3
    transcript: list


class ApiSession:
    def __init__(self, session: gm.GameSession):
        self.session = session
        self.version = 0
        self.created = time.monotonic()
        self.last_activity = self.created
        self.lock = threading.Lock()


class ServiceState:
    def __init__(self):
        self.systems: dict = {}
        self.sessions: dict[str, ApiSession] = {}
        self.lock = threading.Lock()

    def evict_stale(self):
        now = time.monotonic()
        with self.lock:
            stale = [sid for (sid, s) in self.sessions.items()
                     if now - s.last_activity > SESSION_TTL_SECONDS]
            for sid in stale:
                del self.sessions[sid]


def _system_json(system_id: str, system) -> dict:
    transitions = []
    if hasattr(system, "transitions"):
        kind = "aut"
        for (src, lab, dst) in sorted(system.transitions):
            transitions.append({"src": src, "label": system.alphabet[lab], "dst": dst})
    else:
        kind = "pts"
        for state, row in enumerate(system.rows):
            for (lab, dst, w) in row:
                transitions.append({"src": state, "label": system.alphabet[lab],
                                    "weight": str(w), "dst": dst})
    return {
        "system_id": system_id,
        "kind": kind,
        "num_states": system.num_states,
        "alphabet": list(system.alphabet),
        "initial": system.initial,
        "transitions": transitions,
    }


def _parse_endpoint_state(sem: Semantics, value) -> DetState:
    if isinstance(value, int):
        return sm.embed(sem, value)
    if isinstance(value, str):
        stripped = value.strip()
        if stripped.lstrip("-").isdigit():
            return sm.embed(sem, int(stripped))
        return sm.parse_detstate(stripped)
    if isinstance(value, dict):
        return DetState.from_json(value)
    raise ValueError(f"cannot interpret state {value!r}")


def _snapshot_payload(api: ApiSession) -> dict:
    snap = api.session.snapshot()
    snap["version"] = api.version
    try:
        snap["engine_hint"] = api.session.engine_hint()
    except Exception:  # pragma: no cover - hints must never break a snapshot
        snap["engine_hint"] = None
    return snap


def create_app() -> FastAPI:
    app = FastAPI(title="eqgames", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    state = ServiceState()
    app.state.service = state

    def get_system(system_id: str):
        system = state.systems.get(system_id)
        if system is None:
            raise HTTPException(status_code=404, detail=f"unknown system {system_id}")
        return system

    def get_session(session_id: str) -> ApiSession:
        state.evict_stale()
        api = state.sessions.get(session_id)
        if api is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        api.last_activity = time.monotonic()
        return api

    @app.post("/systems")
    def upload_system(body: SystemUpload):
        try:
            if body.kind == "aut":
                system = parse_aut(body.text)
            elif body.kind == "pts":
                system = parse_pts(body.text)
            else:
                raise HTTPException(status_code=422,
                                    detail=f"kind must be 'aut' or 'pts', got {body.kind!r}")
        except ParseError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        system_id = uuid.uuid4().hex[:12]
        with state.lock:
            state.systems[system_id] = system
        return _system_json(system_id, system)

    @app.get("/systems/{system_id}")
    def show_system(system_id: str):
        return _system_json(system_id, get_system(system_id))

    @app.post("/check")
    def check(body: CheckRequest):
        system = get_system(body.system_id)
        try:
            sem = Semantics.parse(body.semantics)
            left = _parse_endpoint_state(sem, body.left)
            right = _parse_endpoint_state(sem, body.right)
            verdict = eng.decide_pair_detstates(sem, system, left, right,
                                                body.depth, body.budget)
        except (InstanceViolation, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except eng.BudgetExceeded as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"left": left.to_json(), "right": right.to_json(),
                "semantics": sem.value, "verdict": verdict.to_json()}

    @app.get("/systems/{system_id}/determinization")
    def determinization(system_id: str,
                        semantics: str = Query(...),
                        seeds: Optional[list[str]] = Query(default=None),
                        budget: int = Query(default=eng.DEFAULT_BUDGET)):
        system = get_system(system_id)
        try:
            sem = Semantics.parse(semantics)
            if seeds:
                seed_states = [sm.parse_detstate(s) for s in seeds]
            else:
                seed_states = [sm.embed(sem, system.initial)]
            graph = eng.explore(sem, system, seed_states, budget)
        except (InstanceViolation, ValueError, eng.BudgetExceeded) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return eng.export_determinization(graph)

    @app.post("/sessions")
    def open_session(body: SessionRequest):
        system = get_system(body.system_id)
        try:
            sem = Semantics.parse(body.semantics)
            session = gm.new_session(
                sem, system,
                _parse_endpoint_state(sem, body.left),
                _parse_endpoint_state(sem, body.right),
                body.rounds, human_role=body.human_role,
                max_strikes=body.max_strikes)
        except (InstanceViolation, ValueError, eng.BudgetExceeded) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        api = ApiSession(session)
        with state.lock:
            state.sessions[session.session_id] = api
        return _snapshot_payload(api)

    @app.get("/sessions/{session_id}")
    def show_session(session_id: str):
        return _snapshot_payload(get_session(session_id))

    @app.post("/sessions/{session_id}/move")
    def move(session_id: str, body: MoveRequest):
        api = get_session(session_id)
        with api.lock:
            if body.version != api.version:
                raise HTTPException(
                    status_code=409,
                    detail=f"stale version {body.version}; current is {api.version}")
            session = api.session
            try:
                if body.kind == "request_engine_move":
                    session.step_engines()
                elif body.kind == "duplicator_relation":
                    claims = gm.MoveRelation.from_json(
                        body.payload or [], directed=session.semantics.directed)
                    ok, why = session.duplicator_move(claims, by="human")
                    if not ok:
                        api.version += 1
                        raise HTTPException(status_code=422, detail=why)
                elif body.kind == "spoiler_pick":
                    payload = body.payload or {}
                    pair = (DetState.from_json(payload["left"]),
                            DetState.from_json(payload["right"]),
                            payload.get("dir"))
                    session.spoiler_pick(pair, by="human")
                else:
                    raise HTTPException(status_code=422,
                                        detail=f"unknown move kind {body.kind!r}")
            except HTTPException:
                raise
            except (InstanceViolation, ValueError, KeyError) as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            api.version += 1
            return _snapshot_payload(api)

    @app.post("/replay")
    def replay(body: ReplayRequest):
        system = get_system(body.system_id)
        try:
            sem = Semantics.parse(body.semantics)
            session = gm.replay_transcript(
                sem, system,
                _parse_endpoint_state(sem, body.left),
                _parse_endpoint_state(sem, body.right),
                body.rounds, body.transcript,
                human_role=body.human_role, max_strikes=body.max_strikes)
        except (InstanceViolation, ValueError, eng.BudgetExceeded) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        accepted = session.transcript == body.transcript
        return {"accepted": accepted,
                "winner": session.winner,
                "reason": session.reason,
                "transcript": session.transcript}

    return app


app = create_app()
