import json

import pytest
from fastapi.testclient import TestClient

from adhesive_selector import service


@pytest.fixture(scope="module")
def client(ctx):
    return TestClient(service.create_app(ctx))


def _new_session(client):
    r = client.post("/sessions")
    assert r.status_code == 200
    body = r.json()
    return body["id"], body["view"]


def _set(client, sid, symbol, value):
    return client.post(
        f"/sessions/{sid}/assignments", json={"symbol": symbol, "value": value}
    )


def test_schema(client):
    r = client.get("/kb/schema")
    assert r.status_code == 200
    schema = r.json()
    assert len(schema["tiles"]) == 26
    by_name = {t["symbol"]: t for t in schema["tiles"]}
    assert by_name["MinBondStrength"]["kind"] == "rat"
    assert by_name["MinBondStrength"]["label"] == "Min Bond Strength"
    assert by_name["ReqCureMethod"]["candidates"][0] == "cure_room_temp"
    assert {c["symbol"] for c in schema["criteria"]} >= {"EffPrice", "EffStrength"}
    assert "Hidden" not in schema["categories"]


def test_create_session_initial_view(client):
    _sid, view = _new_session(client)
    assert view["status"] == "consistent"
    assert view["remaining"]["count"] == 55
    assert view["choices"] == []
    assert view["inconsistency"] is None
    assert len(view["tiles"]) == 26


def test_distinct_session_ids(client):
    s1, _ = _new_session(client)
    s2, _ = _new_session(client)
    assert s1 != s2


def test_set_and_retract_roundtrip(client):
    sid, _ = _new_session(client)
    r = _set(client, sid, "MinBondStrength", "15")
    assert r.status_code == 200
    view = r.json()["view"]
    assert view["choices"] == [{"symbol": "MinBondStrength", "value": "15"}]
    assert view["remaining"]["count"] < 55
    tile = next(t for t in view["tiles"] if t["symbol"] == "MinBondStrength")
    assert tile["value"] == "15" and tile["origin"] == "user"

    r = client.delete(f"/sessions/{sid}/assignments/MinBondStrength")
    assert r.status_code == 200
    view = r.json()["view"]
    assert view["choices"] == []
    assert view["remaining"]["count"] == 55


def test_set_replaces_previous_value(client):
    sid, _ = _new_session(client)
    _set(client, sid, "MinBondStrength", "10")
    view = _set(client, sid, "MinBondStrength", "20").json()["view"]
    assert view["choices"] == [{"symbol": "MinBondStrength", "value": "20"}]


def test_candidate_guard(client):
    sid, _ = _new_session(client)
    view = _set(client, sid, "MinBondStrength", "15").json()["view"]
    schema = client.get("/kb/schema").json()
    full = {t["symbol"]: t["candidates"] for t in schema["tiles"] if t["candidates"]}
    gone = None
    for t in view["tiles"]:
        if t["kind"] == "enum" and t["candidates"] is not None:
            removed = [v for v in full[t["symbol"]] if v not in t["candidates"]]
            if removed:
                gone = (t["symbol"], removed[0])
                break
    assert gone is not None, "expected some eliminated enumerated value"
    r = _set(client, sid, gone[0], gone[1])
    assert r.status_code == 409
    assert r.json()["code"] == "candidate-violation"


def test_numeric_escape_hatch_reaches_inconsistency(client):
    """Numeric inputs are never candidate-guarded; they may create an
    inconsistency, which is then reported with a core."""
    sid, _ = _new_session(client)
    _set(client, sid, "MinOperatingTemperature", "20")
    r = _set(client, sid, "MaxOperatingTemperature", "10")
    assert r.status_code == 200
    view = r.json()["view"]
    assert view["status"] == "inconsistent"
    items = view["inconsistency"]["items"]
    assert items == [
        "MinOperatingTemperature = 20",
        "MaxOperatingTemperature = 10",
        "minimum operating temperature may not exceed the maximum",
    ]
    r = client.get(f"/sessions/{sid}/inconsistency")
    assert r.status_code == 200
    assert r.json()["items"] == items
    # retracting one side restores consistency
    r = client.delete(f"/sessions/{sid}/assignments/MaxOperatingTemperature")
    assert r.json()["view"]["status"] == "consistent"


def test_explanation_endpoint(client):
    sid, _ = _new_session(client)
    _set(client, sid, "Support", "fixed")
    _set(client, sid, "deltaLength", "0.2")
    view = _set(client, sid, "BondThickness", "1").json()["view"]
    tile = next(t for t in view["tiles"] if t["symbol"] == "MinElongation")
    assert tile["origin"] == "propagated" and tile["value"] == "0.2"
    r = client.get(f"/sessions/{sid}/explanation", params={"symbol": "MinElongation"})
    assert r.status_code == 200
    ex = r.json()
    assert ex["target"] == {"symbol": "MinElongation", "value": "0.2"}
    assert any("row" in law["label"] for law in ex["laws"])
    # symbols without a propagated value are rejected
    r = client.get(f"/sessions/{sid}/explanation", params={"symbol": "MaxPrice"})
    assert r.status_code == 409


def test_optimize_endpoint(client):
    sid, _ = _new_session(client)
    _set(client, sid, "MinBondStrength", "40")
    r = client.post(
        f"/sessions/{sid}/optimize",
        json={"symbol": "EffStrength", "direction": "maximize"},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["symbol"] == "EffStrength"
    assert "adhesive" in body and float(body["value"]) >= 40


def test_error_statuses(client):
    sid, _ = _new_session(client)
    assert client.get("/sessions/absent").status_code == 404
    assert _set(client, sid, "NoSuchSymbol", "1").status_code == 404
    assert _set(client, sid, "MinBondStrength", "oops").status_code == 422
    assert _set(client, sid, "MinBondStrength", "9999").status_code == 422
    assert _set(client, sid, "ReqSolventFree", "maybe").status_code == 422
    assert _set(client, sid, "BondThickness", "1.5").status_code == 422
    assert client.delete(f"/sessions/{sid}/assignments/MaxPrice").status_code == 404
    assert client.get(f"/sessions/{sid}/inconsistency").status_code == 409
    r = client.post(
        f"/sessions/{sid}/optimize", json={"symbol": "EffPrice", "direction": "sideways"}
    )
    assert r.status_code == 422


def test_replay_is_pure(client, ctx):
    """A session view equals the view recomputed from its assignment log."""
    sid, _ = _new_session(client)
    _set(client, sid, "MinBondStrength", "15")
    _set(client, sid, "ReqWaterResistance", "high")
    client.delete(f"/sessions/{sid}/assignments/MinBondStrength")
    view = client.get(f"/sessions/{sid}").json()["view"]
    from adhesive_selector.model import Assignment

    replayed = service.compute_view(
        ctx, (Assignment("ReqWaterResistance", (), "high", "user"),)
    )
    assert json.dumps(view, sort_keys=True) == json.dumps(replayed, sort_keys=True)


def test_rationals_are_decimal_strings(client):
    sid, _ = _new_session(client)
    view = _set(client, sid, "deltaLength", "0.3").json()["view"]
    tile = next(t for t in view["tiles"] if t["symbol"] == "deltaLength")
    assert tile["bounds"] == {"lo": "0.3", "hi": "0.3"}
