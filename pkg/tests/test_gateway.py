import pytest
from fastapi.testclient import TestClient

from conftest import corpus_source, fresh_ws
from evoarch.gateway import create_app
from evoarch.hypercode import HyperText
from evoarch.workspace import Workspace

FIG13 = corpus_source("fig13_system.adl").to_carrier()

DOUBLER = """
value ic = connection(integer) ;
value oc = connection(integer) ;
value sink = location(0) ;
replicate { via ic receive n ; via oc send 2 * n }
"""


def make_client(seed=1, budget=20_000):
    ws = Workspace(seed=seed, step_budget=budget)
    app = create_app(ws, heartbeat_seconds=30.0)
    return ws, TestClient(app)


def eval_text(client, text):
    doc = HyperText.from_carrier(text).to_json()
    return client.post("/v1/eval", json={"hypertext": doc})


class TestRoutes:
    def test_empty_listings(self):
        _, client = make_client()
        assert client.get("/v1/bindings").json() == []
        assert client.get("/v1/behaviours").json() == []

    def test_eval_creates_bindings(self):
        _, client = make_client()
        resp = eval_text(client, FIG13)
        assert resp.status_code == 200
        body = resp.json()
        assert "CS_system1" in body["bindings"]
        names = {b["name"] for b in client.get("/v1/bindings").json()}
        assert "CS_system1" in names

    def test_parse_and_type_errors_structured(self):
        _, client = make_client()
        r = eval_text(client, "value = 3")
        assert r.status_code == 400
        assert r.json()["phase"] == "parse"
        r = eval_text(client, "value x = nope")
        assert r.status_code == 400
        body = r.json()
        assert body["phase"] == "type" and "nope" in body["message"]

    def test_unknown_value_404(self):
        _, client = make_client()
        assert client.get("/v1/values/99999/reify").status_code == 404

    def test_not_quiescent_409(self):
        ws, client = make_client(budget=10)
        eval_text(client, """
            value a = connection() ; value b = connection() ;
            replicate { via a receive ; via b send } ;
            replicate { via b receive ; via a send } ;
            { via a send }
        """)
        busy = next(b for b in ws.runtime.behaviours if b.has_internal_work())
        vid = ws.store.intern(busy)
        assert client.get(f"/v1/values/{vid}/reify").status_code == 409

    def test_behaviours_listing_and_decompose(self):
        ws, client = make_client()
        eval_text(client, FIG13)
        listing = client.get("/v1/behaviours").json()
        comp = next(x for x in listing if x["status"] == "COMPOSITE")
        resp = client.post(f"/v1/behaviours/{comp['handle']}/decompose",
                           json={"timeoutSteps": 1000})
        assert resp.status_code == 200
        views = resp.json()
        assert [v["label"] for v in views] == ["client", "server"]
        assert all(v["status"] == "BLOCKED" for v in views)

    def test_decompose_unknown_handle(self):
        _, client = make_client()
        assert client.post("/v1/behaviours/c99/decompose", json={}).status_code == 404

    def test_reify_reflect_compose_flow(self):
        ws, client = make_client()
        eval_text(client, DOUBLER)
        abs_src = ("value worker_abs = abstraction() "
                   "replicate { via ic receive n ; via oc send 2 * n }")
        eval_text(client, abs_src)
        vid = next(b["id"] for b in client.get("/v1/bindings").json()
                   if b["name"] == "worker_abs")
        doc = client.get(f"/v1/values/{vid}/reify").json()
        assert doc["version"] == 1 and doc["manifest"]
        reflected = client.post("/v1/reflect", json={"hypertext": doc})
        assert reflected.status_code == 200
        new_id = reflected.json()["id"]
        assert new_id != vid
        composed = client.post("/v1/compose", json={
            "parts": [{"label": "twin", "id": new_id}], "unifications": []})
        assert composed.status_code == 200
        handle = composed.json()["handle"]
        listing = client.get("/v1/behaviours").json()
        assert any(x["handle"] == handle for x in listing)

    def test_reflect_dangling_400(self):
        _, client = make_client()
        doc = HyperText.from_carrier("⟦x#4242⟧").to_json()
        r = client.post("/v1/reflect", json={"hypertext": doc})
        assert r.status_code == 400

    def test_compose_unification_type_error_400(self):
        ws, client = make_client()
        eval_text(client, """
            value p = { value cp = connection(integer) ; via cp receive x } ;
            value q = { value cq = connection(string) ; via cq receive y }
        """)
        pid = ws.store.intern(ws.lookup("p"))
        qid = ws.store.intern(ws.lookup("q"))
        r = client.post("/v1/compose", json={
            "parts": [{"label": "a", "id": pid}, {"label": "b", "id": qid}],
            "unifications": [["a::cp", "b::cq"]]})
        assert r.status_code == 400

    def test_style_check_route(self):
        ws, client = make_client(seed=3)
        import test_styles
        eval_text(client, test_styles.TAGGED_SYSTEM)
        comp = next(x for x in client.get("/v1/behaviours").json()
                    if x["status"] == "COMPOSITE")
        r = client.get(f"/v1/styles/Client_Server/check",
                       params={"handle": comp["handle"]})
        assert r.status_code == 200
        assert r.json()["ok"] is True
        assert client.get("/v1/styles/NoSuch/check",
                          params={"handle": comp["handle"]}).status_code == 404

    def test_topology_route(self):
        ws, client = make_client(seed=3)
        import test_styles
        eval_text(client, test_styles.TAGGED_SYSTEM)
        comp = next(x for x in client.get("/v1/behaviours").json()
                    if x["status"] == "COMPOSITE")
        topo = client.get("/v1/snapshot/topology",
                          params={"handle": comp["handle"]}).json()
        assert len(topo["components"]) == 2
        assert len(topo["connectors"]) == 3


class TestEventStream:
    def test_three_outputs_in_order(self):
        ws, client = make_client()
        eval_text(client, DOUBLER)
        with client.websocket_connect("/v1/events?cursor=0") as sock:
            for k in (1, 2, 3):
                eval_text(client,
                          "{ via ic send %d ; via oc receive r ; sink := r }" % k)
            got = []
            while len(got) < 3:
                msg = sock.receive_json()
                if msg.get("kind") == "SEND_RECV" and msg["subjects"][2].startswith("k"):
                    # collect deliveries on the output channel
                    oc_root = ws.lookup("oc").root().id
                    if msg["subjects"][2] == f"k{oc_root}":
                        got.append(int(msg["payload"]))
        assert got == [2, 4, 6]

    def test_idle_heartbeat(self):
        _, client = make_client()
        with client.websocket_connect("/v1/events") as sock:
            assert sock.receive_json()["type"] == "heartbeat"

    def test_two_subscribers_identical(self):
        ws, client = make_client()
        eval_text(client, DOUBLER)
        eval_text(client, "{ via ic send 4 ; via oc receive r ; sink := r }")
        def drain():
            seen = []
            with client.websocket_connect("/v1/events?cursor=0") as sock:
                while True:
                    msg = sock.receive_json()
                    if msg["type"] == "eval-complete" and msg["run"] == "run-2":
                        seen.append(msg)
                        break
                    seen.append(msg)
            return seen
        assert drain() == drain()

    def test_resync_on_bad_cursor(self):
        _, client = make_client()
        with client.websocket_connect("/v1/events?cursor=999") as sock:
            assert sock.receive_json()["type"] == "resync"

    def test_stream_order_matches_trace(self):
        ws, client = make_client()
        eval_text(client, DOUBLER)
        eval_text(client, "{ via ic send 5 ; via oc receive r ; sink := r }")
        trace = client.get("/v1/trace").json()
        steps = [t["step"] for t in trace if t["type"] == "trace"]
        assert steps == sorted(steps)
        assert steps == [e.step for e in ws.runtime.events]

    def test_binding_notifications(self):
        _, client = make_client()
        eval_text(client, "value x = 1")
        log = client.get("/v1/trace").json()
        assert {"type": "binding", "name": "x", "id": 1} in log
