import itertools
import random

import pytest

from conftest import corpus_source, fresh_ws
from evoarch import styles as ST
from evoarch.runtime import trace_hash
from evoarch.syntax import (Attached, Connected, FBin, FNot, InStyle, Quant,
                            parse_text)
from evoarch.workspace import EvalError, Workspace

STYLE_SRC = corpus_source("fig03_client_server_style.adl").to_carrier()

TAGGED_SYSTEM = STYLE_SRC + """ ;
type exp_view = string ;
value exp_input = connection( exp_view ) styled PC ;
value c_display = connection( exp_view ) styled PC ;
value user_input = connection() styled PC ;

value client_abs = abstraction() styled Client
{ value c_start = connection() styled PC ;
  value c_stop = connection() styled PC ;
  value c_get = connection( exp_view ) styled PC ;
  via c_start send ;
  replicate choose{
    { via c_get receive ev : exp_view ; via c_display send ev } or
    { via user_input receive ; via c_stop send } }
} ;
value server_abs = abstraction() styled Server
{ value s_start = connection() styled PC ;
  value s_stop = connection() styled PC ;
  value s_put = connection( exp_view ) styled PC ;
  via s_start receive ;
  replicate choose{
    { via s_stop receive } or
    { via exp_input receive current_view ; via s_put send current_view } }
} ;
value CS_system1 =
compose{
  client as client_abs() and server as server_abs()
  where{
    client::c_start unifies server::s_start,
    client::c_stop unifies server::s_stop,
    client::c_get unifies server::s_put }
}
"""


class TestRegistry:
    def test_register_figure_styles(self, ws):
        ws.eval_source(STYLE_SRC)
        assert {"Client_Server", "Client", "Server", "PC"} <= ws.styles.names()

    def test_duplicate_rejected(self, ws):
        ws.eval_source("Client is style extending Component")
        with pytest.raises(EvalError):
            ws.eval_source("Client is style extending Component")

    def test_empty_constraints_always_conform(self, ws):
        ws.eval_source("Loose is style extending Component ; "
                       "value k = connection() ; value b = { via k receive } ; "
                       "value g = compose { x as b }")
        report = ws.check_style("Loose", ws.lookup("g"))
        assert report.ok


class TestSnapshot:
    def test_client_server_topology(self):
        ws = fresh_ws(seed=3)
        ws.eval_source(TAGGED_SYSTEM)
        snap = ST.snapshot(ws.runtime, ws.lookup("CS_system1"))
        assert len(snap.components) == 2
        assert len(snap.connectors) == 3
        for handle, _ in snap.components:
            attached = {c for h, c in snap.attachments if h == handle}
            assert len(attached) == 3

    def test_unit_composition_no_connections(self, ws):
        ws.eval_source("value k = connection() ; value lone = { via k receive } ; "
                       "value g = compose { only as lone }")
        # the lone behaviour declared no connections of its own
        snap = ST.snapshot(ws.runtime, ws.lookup("g"))
        assert len(snap.components) == 1
        assert snap.connectors == []

    def test_snapshot_never_mutates(self):
        ws = fresh_ws(seed=3)
        ws.eval_source(TAGGED_SYSTEM)
        before = trace_hash(ws.runtime.events)
        fp = ws.fingerprint()
        ST.snapshot(ws.runtime, ws.lookup("CS_system1"))
        assert trace_hash(ws.runtime.events) == before
        assert ws.fingerprint() == fp

    def test_evolved_topology_shares_channels(self):
        # after evolution the client's c_get and the view server's s_put are
        # one connector attached to exactly those two components
        ws = fresh_ws(seed=3)
        ws.eval_source(TAGGED_SYSTEM)
        ws.eval_source("value cs_seq = decompose CS_system1")
        ws.eval_source("""
            value view_server_abs = abstraction() styled Server
            { value s_put = connection( exp_view ) styled PC ;
              replicate { via exp_input receive cv ; via s_put send cv } } ;
            value command_server_abs = abstraction() styled Server
            { value s_start = connection() styled PC ;
              value s_stop = connection() styled PC ;
              replicate choose{ { via s_start receive } or { via s_stop receive } } } ;
            value CS_system2 =
            compose{
              client as cs_seq::1.bhvr
              and view_server as view_server_abs()
              and command_server as command_server_abs()
              where{
                client::c_start unifies command_server::s_start,
                client::c_stop unifies command_server::s_stop,
                client::c_get unifies view_server::s_put }
            }
        """)
        snap = ST.snapshot(ws.runtime, ws.lookup("CS_system2"))
        assert len(snap.components) == 3
        client = ws.lookup("cs_seq").items[0].get("bhvr")
        c_get_root = client.find_connection("c_get").root().id
        attached = sorted(h for h, c in snap.attachments if c == c_get_root)
        view_server = ws.lookup("CS_system2").part_by_label("view_server")
        assert attached == sorted([client.handle, view_server.handle])


class TestConstraints:
    def test_client_server_conforms(self):
        ws = fresh_ws(seed=3)
        ws.eval_source(TAGGED_SYSTEM)
        report = ws.check_style("Client_Server", ws.lookup("CS_system1"))
        assert report.ok, [v.line() for v in report.violations]

    def test_two_clients_sharing_connector_violate(self):
        ws = fresh_ws(seed=3)
        ws.eval_source(STYLE_SRC + """ ;
            value shared = connection() styled PC ;
            value c1 = abstraction() styled Client
              { value p = connection() styled PC ; free { shared } ; via shared receive } ;
            value c2 = abstraction() styled Client
              { value q = connection() styled PC ; free { shared } ; via shared send } ;
            value pair = compose { one as c1() and two as c2() }
        """)
        report = ws.check_style("Client_Server", ws.lookup("pair"))
        assert not report.ok
        witness_pairs = [v for v in report.violations if len(v.witness) == 2]
        assert witness_pairs, [v.line() for v in report.violations]
        comp = ws.lookup("pair")
        handles = {p.handle for p in comp.parts}
        for v in witness_pairs:
            assert set(v.witness.values()) <= handles

    def test_empty_topology_vacuous(self, ws):
        ws.eval_source(STYLE_SRC)
        snap = ST.TopologySnapshot([], [], frozenset())
        report = ST.check_constraints(ws.styles.get("Client_Server"), snap)
        assert report.ok

    def test_connected_symmetric(self):
        rng = random.Random(8)
        for _ in range(50):
            snap = _random_snapshot(rng)
            for (a, _), (b, _) in itertools.product(snap.components, repeat=2):
                env_ab = {"x": (a, frozenset()), "y": (b, frozenset())}
                env_ba = {"x": (b, frozenset()), "y": (a, frozenset())}
                c = Connected("x", "y")
                assert ST._eval(c, env_ab, snap, "components") == \
                    ST._eval(c, env_ba, snap, "components")


def _random_snapshot(rng, max_components=5, max_connectors=6):
    tags = ["Client", "Server", "PC", None]
    comps = [(f"b{i}", frozenset({t} if (t := rng.choice(tags[:2] + [None])) else set()))
             for i in range(rng.randint(0, max_components))]
    conns = [(i + 1, frozenset({"PC"} if rng.random() < 0.7 else set()))
             for i in range(rng.randint(0, max_connectors))]
    attach = set()
    for h, _ in comps:
        for cid, _ in conns:
            if rng.random() < 0.4:
                attach.add((h, cid))
    return ST.TopologySnapshot(comps, conns, frozenset(attach))


# -- an independent, comprehension-style evaluator as the oracle --------------

def oracle_eval(f, env, snap, default_domain):
    def domain(name):
        return snap.components if name == "components" else snap.connectors

    if isinstance(f, Quant):
        dom = domain(f.domain or default_domain)
        combos = itertools.product(dom, repeat=len(f.vars))
        results = [oracle_eval(f.body, {**env, **dict(zip(f.vars, c))},
                               snap, default_domain) for c in combos]
        return all(results) if f.kind == "forall" else any(results)
    if isinstance(f, FNot):
        return not oracle_eval(f.body, env, snap, default_domain)
    if isinstance(f, FBin):
        a = oracle_eval(f.left, env, snap, default_domain)
        b = oracle_eval(f.right, env, snap, default_domain)
        return {"and": a and b, "or": a or b, "implies": (not a) or b}[f.op]
    if isinstance(f, InStyle):
        return f.style in env[f.var][1]
    if isinstance(f, Connected):
        a, b = env[f.left][0], env[f.right][0]
        return a != b and any((a, cid) in snap.attachments and
                              (b, cid) in snap.attachments
                              for cid, _ in snap.connectors)
    if isinstance(f, Attached):
        return (env[f.left][0], env[f.right][0]) in snap.attachments
    raise AssertionError(f)


class TestOracleEquivalence:
    def test_checker_agrees_with_brute_force(self, ws):
        ws.eval_source(STYLE_SRC)
        style = ws.styles.get("Client_Server")
        rng = random.Random(17)
        for _ in range(120):
            snap = _random_snapshot(rng)
            report = ST.check_constraints(style, snap)
            expected_ok = all(
                oracle_eval(f, {}, snap, block.domain)
                for block in style.blocks for f in block.formulas)
            assert report.ok == expected_ok, snap


class TestCli:
    def test_check_style_cli(self, tmp_path, capsys):
        from evoarch.cli import main
        good = tmp_path / "good.adl"
        good.write_text(TAGGED_SYSTEM, encoding="utf-8")
        assert main(["check-style", str(good), "--style", "Client_Server"]) == 0
        out = capsys.readouterr().out
        assert "OK" in out

    def test_check_style_cli_violations(self, tmp_path, capsys):
        from evoarch.cli import main
        bad = tmp_path / "bad.adl"
        bad.write_text(STYLE_SRC + """ ;
            value shared = connection() styled PC ;
            value c1 = abstraction() styled Client
              { free { shared } ; via shared receive } ;
            value c2 = abstraction() styled Client
              { free { shared } ; via shared send } ;
            value pair = compose { one as c1() and two as c2() }
        """, encoding="utf-8")
        assert main(["check-style", str(bad), "--style", "Client_Server"]) == 1
        out = capsys.readouterr().out
        assert "VIOLATION" in out
