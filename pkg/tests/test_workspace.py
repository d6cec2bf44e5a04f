import io

import pytest

from conftest import corpus_source, fresh_ws
from evoarch.hypercode import NotQuiescent
from evoarch.runtime import trace_hash
from evoarch.workspace import EvalError, Workspace, run_repl


class TestEval:
    def test_arithmetic_binding(self, ws):
        r = ws.eval_source("value x = 2 + 2")
        assert r.new_bindings["x"][2] == "4"

    def test_figures_in_sequence(self):
        ws = fresh_ws(seed=2)
        ws.eval_source(corpus_source("fig11_client_abs.adl"))
        ws.eval_source("""
            value exp_input = connection( exp_view ) ;
            value counter = location(0) ;
            value start_experiment = function() -> integer { 0 } ;
            value stop_experiment = function() -> integer { 0 } ;
            value server_abs = abstraction()
            { value s_start = connection();
              value s_stop = connection();
              value s_put = connection( exp_view );
              via s_start receive ;
              start_experiment();
              replicate choose{
                { via s_stop receive ; stop_experiment() } or
                { via exp_input receive current_view ;
                  counter := counter + 1 ;
                  via s_put send current_view } }
            }
        """)
        ws.eval_source("""
            value CS_system1 =
            compose{
              client as client_abs() and server as server_abs()
              where{
                client::c_start unifies server::s_start,
                client::c_stop unifies server::s_stop,
                client::c_get unifies server::s_put }
            }
        """)
        for name in ("client_abs", "server_abs", "CS_system1"):
            assert name in ws.bindings

    def test_failed_input_is_transactional(self, ws):
        ws.eval_source("value keep = 1")
        fp = ws.fingerprint()
        with pytest.raises(EvalError):
            ws.eval_source("value a = 2 ; value b = nope")
        assert ws.fingerprint() == fp
        assert "a" not in ws.bindings and ws.lookup("keep") == 1

    def test_bindings_persist_across_inputs(self, ws):
        ws.eval_source("value c = connection(integer)")
        ws.eval_source("value b = { via c receive n }")
        ws.eval_source("{ via c send 9 }")
        assert ws.lookup("b").terminated


class TestSnapshots:
    def test_empty_workspace_round_trip(self, tmp_path):
        ws = fresh_ws()
        path = tmp_path / "empty.snap"
        ws.save_snapshot(path)
        loaded = Workspace.load_snapshot(path)
        assert loaded.bindings == {}

    def test_not_quiescent_rejected(self, tmp_path):
        ws = fresh_ws(seed=1, budget=10)
        # ping-pong pair that never quiesces; the budget stops it mid-flight
        ws.eval_source("""
            value a = connection() ; value b = connection() ;
            replicate { via a receive ; via b send } ;
            replicate { via b receive ; via a send } ;
            { via a send }
        """)
        with pytest.raises(NotQuiescent):
            ws.save_snapshot(tmp_path / "no.snap")

    def test_mid_scenario_fidelity(self, tmp_path):
        setup = """
            value ic = connection(integer) ;
            value oc = connection(integer) ;
            value out = location(0) ;
            replicate { via ic receive n ; via oc send 2 * n }
        """
        probes = ["{ via ic send %d ; via oc receive r ; out := r }" % k
                  for k in (3, 8, 13)]

        straight = fresh_ws(seed=6)
        straight.eval_source(setup)
        straight.eval_source(probes[0])
        mark = len(straight.runtime.events)
        for p in probes[1:]:
            straight.eval_source(p)
        expected = [e.line() for e in straight.runtime.events[mark:]]

        saved = fresh_ws(seed=6)
        saved.eval_source(setup)
        saved.eval_source(probes[0])
        path = tmp_path / "mid.snap"
        saved.save_snapshot(path)
        resumed = Workspace.load_snapshot(path)
        for p in probes[1:]:
            resumed.eval_source(p)
        got = [e.line() for e in resumed.runtime.events]
        assert got == expected
        assert resumed.lookup("out").content == 26

    def test_fidelity_over_scenario_corpus(self, tmp_path):
        # ten varied services: save/load between probe phases never changes
        # the subsequent trace
        for i in range(10):
            factor = (i % 4) + 1
            if i % 3 == 2:
                setup = ("value ic = connection(string) ; "
                         "value oc = connection(string) ; "
                         "value out = location(\"\") ; "
                         "replicate { via ic receive s ; via oc send s }")
                probes = ['{ via ic send "m%d" ; via oc receive r ; out := r }'
                          % k for k in range(4)]
            else:
                setup = ("value ic = connection(integer) ; "
                         "value oc = connection(integer) ; "
                         "value tally = location(0) ; "
                         "value out = location(0) ; "
                         "replicate { via ic receive n ; tally := tally + 1 ; "
                         f"via oc send {factor} * n }}")
                probes = ["{ via ic send %d ; via oc receive r ; out := r }"
                          % (k + i) for k in range(4)]

            straight = fresh_ws(seed=100 + i)
            straight.eval_source(setup)
            straight.eval_source(probes[0])
            straight.eval_source(probes[1])
            mark = len(straight.runtime.events)
            for p in probes[2:]:
                straight.eval_source(p)
            want = [e.line() for e in straight.runtime.events[mark:]]

            saved = fresh_ws(seed=100 + i)
            saved.eval_source(setup)
            saved.eval_source(probes[0])
            saved.eval_source(probes[1])
            path = tmp_path / f"fid{i}.snap"
            saved.save_snapshot(path)
            resumed = Workspace.load_snapshot(path)
            for p in probes[2:]:
                resumed.eval_source(p)
            got = [e.line() for e in resumed.runtime.events]
            assert got == want, f"scenario {i}"
            assert resumed.lookup("out").content == straight.lookup("out").content

    def test_snapshot_file_format(self, tmp_path):
        ws = fresh_ws()
        ws.eval_source("value x = 5")
        path = tmp_path / "f.snap"
        ws.save_snapshot(path)
        head = path.read_text(encoding="utf-8").splitlines()[0]
        assert head == "EVOARCH-SNAP 1"

    def test_corrupt_file_rejected(self, tmp_path):
        from evoarch.workspace import SnapshotError
        bad = tmp_path / "bad.snap"
        bad.write_text("EVOARCH-SNAP 1\n{not json", encoding="utf-8")
        with pytest.raises(SnapshotError):
            Workspace.load_snapshot(bad)
        worse = tmp_path / "worse.snap"
        worse.write_text("SOMETHING ELSE\n{}", encoding="utf-8")
        with pytest.raises(SnapshotError):
            Workspace.load_snapshot(worse)

    def test_styles_and_aliases_survive(self, tmp_path):
        ws = fresh_ws()
        ws.eval_source("type exp_view = string ; "
                       "Client is style extending Component")
        path = tmp_path / "s.snap"
        ws.save_snapshot(path)
        loaded = Workspace.load_snapshot(path)
        assert "Client" in loaded.styles.names()
        loaded.eval_source("value c = connection(exp_view)")
        assert loaded.lookup("c").payload_types[0].render() == "string"


class TestGarbageCollection:
    def test_sweep_keeps_bindings(self, ws):
        ws.eval_source("value keep = location(5)")
        ws.sweep()
        assert ws.lookup("keep").content == 5

    def test_sweep_collects_unreferenced_entries(self, ws):
        ws.eval_source("value temp = location(1)")
        vid = ws.bindings["temp"]
        ws.eval_source("value temp = 2")   # rebind; the location is garbage
        dead = ws.sweep()
        assert vid in dead
        assert not ws.store.has(vid)

    def test_no_dangling_after_sweep(self, ws):
        ws.eval_source("value a = sequence(1, 2) ; value b = view(x = a)")
        ws.sweep()
        for vid in ws.bindings.values():
            assert ws.store.has(vid)

    def test_links_inside_reflected_code_keep_targets_alive(self, ws):
        ws.eval_source("""
            value counter = location(0) ;
            value ic = connection(integer) ;
            value bump = abstraction() { via ic receive n ; counter := counter + n }
        """)
        twin_id = ws.hypercode.reflect(
            ws.hypercode.reify(ws.bindings["bump"]))
        counter_id = ws.store.intern(ws.lookup("counter"))
        # drop every binding except the twin; its body links must keep the
        # captured location and channel alive through the sweep
        ws.eval_source("value counter = 0 ; value bump = 0")
        ws.bindings = {"twin": twin_id}
        ws.env = type(ws.env)()
        ws.env.define("twin", ws.store.get(twin_id))
        ws.sweep()
        assert ws.store.has(counter_id)
        twin = ws.store.get(twin_id)
        ws.runtime.instantiate(twin, [])
        ws.runtime.run(100)
        chan = ws.store.get(counter_id)
        assert chan.content == 0

    def test_location_cycle_collected(self, ws):
        ws.eval_source("value cyc = location(any(0))")
        ws.eval_source("cyc := any(cyc)")         # location -> any -> location
        vid = ws.bindings["cyc"]
        ws.eval_source("value cyc = 0")
        ws.sweep()
        assert not ws.store.has(vid)


class TestRepl:
    def run_script(self, ws, script):
        out = io.StringIO()
        run_repl(ws, io.StringIO(script), out, prompts=False)
        return out.getvalue()

    def test_empty_bindings_listing(self, ws):
        out = self.run_script(ws, ":bindings\n")
        assert "(no bindings)" in out

    def test_eval_and_listing(self, ws):
        out = self.run_script(ws, "value x = 2 + 2 ;\n:bindings\n")
        assert "value x : integer = 4" in out
        assert "x : integer" in out

    def test_reify_meta_command(self, ws):
        script = (
            "value counter = location(0) ;\n"
            "value ic = connection(integer) ;\n"
            "value oc = connection(integer) ;\n"
            "value doubler = abstraction() replicate {\n"
            "  via ic receive n ; counter := counter + 1 ; via oc send 2 * n } ;\n"
            ":reify doubler\n")
        out = self.run_script(ws, script)
        assert "abstraction() replicate" in out
        assert "⟦counter#" in out

    def test_behaviours_listing(self, ws):
        out = self.run_script(
            ws, "value c = connection() ;\nvalue b = { via c receive } ;\n:behaviours\n")
        assert "status=BLOCKED" in out

    def test_error_recovery(self, ws):
        out = self.run_script(ws, "value x = nosuch ;\nvalue y = 1 ;\n:bindings\n")
        assert "error (type)" in out
        assert "y : integer" in out

    def test_save_and_load_round_trip(self, tmp_path, ws):
        snap = tmp_path / "repl.snap"
        out = self.run_script(
            ws, f"value x = 41 + 1 ;\n:save {snap}\n")
        assert "saved" in out
        other = fresh_ws()
        out = self.run_script(other, f":load {snap}\n:bindings\n")
        assert "x : integer" in out

    def test_braces_inside_strings_do_not_confuse_input_splitting(self, ws):
        out = self.run_script(ws, 'value s = "{" ;\nvalue n = 1 ;\n:bindings\n')
        assert "s : string" in out and "n : integer" in out
