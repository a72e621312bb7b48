import json
import random
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from eqgames import fixtures
from eqgames.engine import LIMIT, decide
from eqgames.game import play_engine_vs_engine
from eqgames.semantics import DetState, Semantics, embed
from eqgames.service import create_app

from corpus import applicable_instances, lts_corpus

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "api" / "schema"


@pytest.fixture()
def client():
    with TestClient(create_app()) as c:
        yield c


def _validator(name):
    import jsonschema
    from referencing import Registry, Resource

    resources = []
    for path in SCHEMA_DIR.glob("*.json"):
        doc = json.loads(path.read_text())
        resources.append((doc["$id"], Resource.from_contents(doc)))
    registry = Registry().with_resources(resources)
    schema = json.loads((SCHEMA_DIR / name).read_text())
    return jsonschema.Draft7Validator(schema, registry=registry)


def _upload(client, text, kind):
    response = client.post("/systems", json={"kind": kind, "text": text})
    assert response.status_code == 200, response.text
    return response.json()


def test_upload_and_fetch_system(client):
    body = _upload(client, fixtures.SYS1_AUT, "aut")
    _validator("system.json").validate(body)
    assert body["num_states"] == 7
    assert body["alphabet"] == ["a", "b"]
    again = client.get(f"/systems/{body['system_id']}")
    assert again.json() == body


def test_upload_pts(client):
    body = _upload(client, fixtures.SYS4_PTS, "pts")
    _validator("system.json").validate(body)
    assert body["kind"] == "pts"
    assert any("weight" in t for t in body["transitions"])


def test_upload_parse_error_422(client):
    response = client.post("/systems", json={"kind": "aut", "text": "not a system"})
    assert response.status_code == 422


def test_unknown_system_404(client):
    assert client.get("/systems/zzz").status_code == 404
    response = client.post("/check", json={"system_id": "zzz", "semantics": "trace",
                                           "left": 0, "right": 1})
    assert response.status_code == 404


def test_check_endpoint_trace_example(client):
    sid = _upload(client, fixtures.SYS1_AUT, "aut")["system_id"]
    response = client.post("/check", json={
        "system_id": sid, "semantics": "trace",
        "left": "{0,2}", "right": "{2,5}", "depth": "limit"})
    assert response.status_code == 200
    body = response.json()
    _validator("verdict.json").validate(body["verdict"])
    assert body["verdict"]["kind"] == "equivalent_limit"


def test_check_identity_pair(client):
    sid = _upload(client, fixtures.SYS1_AUT, "aut")["system_id"]
    response = client.post("/check", json={
        "system_id": sid, "semantics": "trace", "left": 3, "right": 3})
    assert response.json()["verdict"]["equivalent"]


def test_check_instance_violation_422(client):
    sid = _upload(client, fixtures.SYS1_AUT, "aut")["system_id"]
    response = client.post("/check", json={
        "system_id": sid, "semantics": "serial-trace", "left": 0, "right": 2})
    assert response.status_code == 422
    assert "serial" in response.json()["detail"]


def test_check_matches_engine_on_random_corpus(client):
    rng = random.Random(1001)
    checked = 0
    for lts in lts_corpus(18, seed=606):
        from eqgames.systems import render_aut
        sid = _upload(client, render_aut(lts), "aut")["system_id"]
        for sem in applicable_instances(lts):
            x = rng.randrange(lts.num_states)
            y = rng.randrange(lts.num_states)
            response = client.post("/check", json={
                "system_id": sid, "semantics": sem.value,
                "left": x, "right": y, "depth": "limit"})
            assert response.status_code == 200
            direct = decide(sem, lts, x, y, LIMIT)
            assert response.json()["verdict"]["equivalent"] == direct.equivalent
            checked += 1
    assert checked >= 50


def test_determinization_endpoint(client):
    sid = _upload(client, fixtures.SYS1_AUT, "aut")["system_id"]
    response = client.get(f"/systems/{sid}/determinization",
                          params={"semantics": "trace",
                                  "seeds": ["{0,2}", "{2,5}"]})
    assert response.status_code == 200
    body = response.json()
    _validator("detgraph.json").validate(body)
    assert len(body["graph"]["states"]) == 7


def test_session_paper_flow_over_api(client):
    sid = _upload(client, fixtures.SYS1_AUT, "aut")["system_id"]
    snap = client.post("/sessions", json={
        "system_id": sid, "semantics": "trace",
        "left": "{0,2}", "right": "{2,5}", "rounds": 3,
        "human_role": "duplicator"}).json()
    _validator("session.json").validate(snap)
    session_id = snap["session_id"]
    assert snap["phase"] == "await_duplicator"
    assert snap["candidate_pairs"]

    claims = [
        {"left": {"kind": "set", "states": [1, 3]},
         "right": {"kind": "set", "states": [3]}, "dir": None},
        {"left": {"kind": "set", "states": [4, 6]},
         "right": {"kind": "set", "states": [4]}, "dir": None},
    ]
    snap = client.post(f"/sessions/{session_id}/move", json={
        "version": snap["version"], "kind": "duplicator_relation",
        "payload": claims}).json()
    assert snap["phase"] == "await_spoiler"

    snap = client.post(f"/sessions/{session_id}/move", json={
        "version": snap["version"], "kind": "request_engine_move"}).json()
    assert snap["phase"] == "await_duplicator"

    snap = client.post(f"/sessions/{session_id}/move", json={
        "version": snap["version"], "kind": "duplicator_relation",
        "payload": []}).json()
    assert snap["phase"] == "finished"
    assert snap["winner"] == "duplicator"

    # the API transcript matches a directly played session with the same moves
    from eqgames.game import MoveRelation, new_session
    direct = new_session(Semantics.TRACE, fixtures.sys1(),
                         DetState.of_set({0, 2}), DetState.of_set({2, 5}), 3,
                         human_role="duplicator")
    direct.duplicator_move(MoveRelation.from_json(claims))
    direct.spoiler_pick(direct.engine_spoiler_move(), by="engine")
    direct.duplicator_move(MoveRelation.of([]))
    assert direct.transcript == snap["transcript"]


def test_stale_version_409(client):
    sid = _upload(client, fixtures.SYS1_AUT, "aut")["system_id"]
    snap = client.post("/sessions", json={
        "system_id": sid, "semantics": "trace",
        "left": "{0,2}", "right": "{2,5}", "rounds": 2}).json()
    session_id = snap["session_id"]
    ok = client.post(f"/sessions/{session_id}/move", json={
        "version": snap["version"], "kind": "request_engine_move"})
    assert ok.status_code == 200
    stale = client.post(f"/sessions/{session_id}/move", json={
        "version": snap["version"], "kind": "request_engine_move"})
    assert stale.status_code == 409


def test_inadmissible_move_422_with_explanation(client):
    sid = _upload(client, fixtures.SYS1_AUT, "aut")["system_id"]
    snap = client.post("/sessions", json={
        "system_id": sid, "semantics": "trace",
        "left": "{0}", "right": "{5}", "rounds": 2,
        "human_role": "duplicator"}).json()
    response = client.post(f"/sessions/{snap['session_id']}/move", json={
        "version": snap["version"], "kind": "duplicator_relation", "payload": []})
    assert response.status_code == 422
    assert "congruence closure" in response.json()["detail"]
    # the rejection mutated the session (a strike), so the version moved on
    after = client.get(f"/sessions/{snap['session_id']}").json()
    assert after["version"] == snap["version"] + 1
    assert after["strikes"] == 1


def test_engine_vs_engine_sessions_match_decide(client):
    rng = random.Random(77)
    ran = 0
    for lts in lts_corpus(17, seed=505):
        from eqgames.systems import render_aut
        sid = _upload(client, render_aut(lts), "aut")["system_id"]
        for sem in applicable_instances(lts)[:3]:
            x = rng.randrange(lts.num_states)
            y = rng.randrange(lts.num_states)
            rounds = rng.randint(0, 3)
            snap = client.post("/sessions", json={
                "system_id": sid, "semantics": sem.value,
                "left": x, "right": y, "rounds": rounds}).json()
            while snap["phase"] != "finished":
                snap = client.post(f"/sessions/{snap['session_id']}/move", json={
                    "version": snap["version"],
                    "kind": "request_engine_move"}).json()
            direct = play_engine_vs_engine(sem, lts, embed(sem, x), embed(sem, y),
                                           rounds)
            assert snap["winner"] == direct.winner, (sem, x, y, rounds)
            ran += 1
    assert ran >= 50


def test_snapshot_determines_session_replay(client):
    sid = _upload(client, fixtures.SYS2_AUT, "aut")["system_id"]
    snap = client.post("/sessions", json={
        "system_id": sid, "semantics": "failure",
        "left": "{0,1,2}", "right": "{0,2}", "rounds": 2}).json()
    session_id = snap["session_id"]
    while snap["phase"] != "finished":
        snap = client.post(f"/sessions/{session_id}/move", json={
            "version": snap["version"], "kind": "request_engine_move"}).json()
    response = client.post("/replay", json={
        "system_id": sid, "semantics": "failure",
        "left": "{0,1,2}", "right": "{0,2}", "rounds": 2,
        "transcript": snap["transcript"]})
    assert response.status_code == 200
    body = response.json()
    assert body["accepted"] and body["winner"] == snap["winner"]


def test_replay_rejects_tampered_transcript(client):
    sid = _upload(client, fixtures.SYS1_AUT, "aut")["system_id"]
    snap = client.post("/sessions", json={
        "system_id": sid, "semantics": "trace",
        "left": "{0,2}", "right": "{2,5}", "rounds": 1}).json()
    while snap["phase"] != "finished":
        snap = client.post(f"/sessions/{snap['session_id']}/move", json={
            "version": snap["version"], "kind": "request_engine_move"}).json()
    tampered = [dict(e) for e in snap["transcript"]]
    tampered[-1] = dict(tampered[-1], round=99)
    response = client.post("/replay", json={
        "system_id": sid, "semantics": "trace",
        "left": "{0,2}", "right": "{2,5}", "rounds": 1,
        "transcript": tampered})
    assert response.status_code == 200
    assert not response.json()["accepted"]


def test_session_ttl_eviction(client, monkeypatch):
    import eqgames.service as service_mod
    sid = _upload(client, fixtures.SYS1_AUT, "aut")["system_id"]
    snap = client.post("/sessions", json={
        "system_id": sid, "semantics": "trace",
        "left": "{0,2}", "right": "{2,5}", "rounds": 1}).json()
    assert client.get(f"/sessions/{snap['session_id']}").status_code == 200
    monkeypatch.setattr(service_mod, "SESSION_TTL_SECONDS", 0.0)
    assert client.get(f"/sessions/{snap['session_id']}").status_code == 404


def test_get_is_idempotent(client):
    sid = _upload(client, fixtures.SYS3_AUT, "aut")["system_id"]
    snap = client.post("/sessions", json={
        "system_id": sid, "semantics": "bisimilarity",
        "left": 0, "right": 4, "rounds": 2}).json()
    a = client.get(f"/sessions/{snap['session_id']}").json()
    b = client.get(f"/sessions/{snap['session_id']}").json()
    assert a == b
    _validator("session.json").validate(a)
