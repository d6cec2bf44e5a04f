import random

import pytest

from conftest import corpus_paths, fresh_ws
from evoarch import typesys as T
from evoarch.syntax import Parser, parse, parse_text, read_hypertext_file, tokenize
from evoarch.typesys import Checker, TypeCheckError, TypeEnv, check_program, equivalent
from evoarch.values import inject_any, project_any, ProjectionError


def check(src, styles=None):
    prog = parse_text(src)
    env = TypeEnv()
    Checker(styles=styles).check_program(prog, env)
    return prog, env


def random_type(rng, depth=0):
    opts = ["integer", "real", "boolean", "string", "any", "behaviour",
            "location", "sequence", "view", "function", "connection", "abstraction"]
    pick = rng.choice(opts if depth < 4 else opts[:6])
    if pick in T._BASE:
        return T._BASE[pick]
    if pick == "location":
        return T.location_of(random_type(rng, depth + 1))
    if pick == "sequence":
        return T.sequence_of(random_type(rng, depth + 1))
    if pick == "view":
        return T.view_of([(f"f{i}", random_type(rng, depth + 1))
                          for i in range(rng.randint(0, 3))])
    if pick == "function":
        return T.function_of([random_type(rng, depth + 1)
                              for _ in range(rng.randint(0, 3))],
                             random_type(rng, depth + 1))
    if pick == "connection":
        return T.connection_of([random_type(rng, depth + 1)
                                for _ in range(rng.randint(0, 3))])
    return T.abstraction_of([random_type(rng, depth + 1)
                             for _ in range(rng.randint(0, 3))])


class TestTypeCompleteness:
    def test_constructors_accept_any_nesting(self):
        rng = random.Random(11)
        for _ in range(500):
            t = random_type(rng)
            assert equivalent(t, t)

    def test_type_syntax_round_trip(self):
        rng = random.Random(12)
        for _ in range(300):
            t = random_type(rng)
            p = Parser(tokenize(t.render()))
            assert equivalent(T.resolve_type(p.parse_type()), t)


class TestEquivalence:
    def test_reflexive_connection(self):
        a = T.connection_of([T.INTEGER])
        b = T.connection_of([T.INTEGER])
        assert equivalent(a, b)

    def test_view_fields_order_significant(self):
        a = T.view_of([("a", T.INTEGER), ("b", T.REAL)])
        b = T.view_of([("b", T.REAL), ("a", T.INTEGER)])
        assert not equivalent(a, b)

    def test_nested_location_sequence_any(self):
        a = T.location_of(T.sequence_of(T.ANY))
        b = T.location_of(T.sequence_of(T.ANY))
        assert equivalent(a, b)

    def test_duplicate_view_fields_rejected(self):
        with pytest.raises(TypeCheckError):
            T.view_of([("a", T.INTEGER), ("a", T.REAL)])


class TestAnyPackages:
    def test_inject_scalar(self):
        av = inject_any(5)
        assert equivalent(av.typ, T.INTEGER) and av.value == 5

    def test_inject_nests(self):
        inner = inject_any(5)
        outer = inject_any(inner)
        assert equivalent(outer.typ, T.ANY)
        assert outer.value is inner

    def test_inject_empty_view(self):
        from evoarch.values import ViewVal
        av = inject_any(ViewVal([], [], []))
        assert equivalent(av.typ, T.view_of([]))

    def test_project_round_trip(self):
        assert project_any(inject_any(5), T.INTEGER) == 5

    def test_project_mismatch(self):
        with pytest.raises(ProjectionError):
            project_any(inject_any(5), T.STRING)

    def test_project_connection_round_trip(self):
        ws = fresh_ws()
        ws.eval_source('value c = connection(string) ; value a = any(c)')
        av = ws.lookup("a")
        assert project_any(av, T.connection_of([T.STRING])) is ws.lookup("c")

    def test_project_generated_round_trips(self):
        rng = random.Random(3)
        for _ in range(100):
            t = random_type(rng, depth=3)
            av = inject_any(object.__new__(_Opaque), t)
            assert project_any(av, t) is av.value


class _Opaque:
    pass


class TestChecking:
    def test_doubling_server_is_behaviour(self):
        prog, env = check("""
            value in_channel = connection(integer) ;
            value out_channel = connection(integer) ;
            replicate{ via in_channel receive num ; via out_channel send 2 * num }
        """)
        assert prog.children[-1].typ.render() == "behaviour"

    def test_payload_mismatch_rejected(self):
        with pytest.raises(TypeCheckError):
            check("value c = connection(string) ; via c send 5")

    def test_application_of_abstraction_yields_behaviour(self):
        prog, env = check("""
            value ic = connection(integer) ;
            value oc = connection(integer) ;
            value server = abstraction() replicate { via ic receive n ; via oc send 2 * n } ;
            server()
        """)
        assert env.lookup("server").render() == "abstraction[]"
        assert prog.children[-1].typ.render() == "behaviour"

    def test_every_subterm_annotated(self):
        prog, _ = check("value x = 1 + 2 * 3")
        def walk(t):
            assert t.typ is not None, t.kind
            for c in t.children:
                walk(c)
        walk(prog.children[0])

    def test_corpus_checks(self):
        for path in corpus_paths():
            prog = parse(read_hypertext_file(path))
            check_program(prog)

    def test_decompose_view_typing(self):
        _, env = check("""
            value ch = connection() ;
            value b = { via ch send } ;
            value s = decompose b ;
            value lab = s::1.label ;
            value bv = s::1.bhvr ;
            value cs = s::1.connections
        """)
        assert env.lookup("lab").render() == "string"
        assert env.lookup("bv").render() == "behaviour"
        assert env.lookup("cs").render() == "sequence[any]"

    def test_location_deref_annotations(self):
        prog, _ = check("value counter = location(0) ; counter := counter + 1")
        assign = prog.children[1]
        assert assign.children[0].deref == 0
        assert assign.children[1].children[0].deref == 1

    def test_receive_binder_annotation_must_match(self):
        with pytest.raises(TypeCheckError):
            check("value c = connection(integer) ; { via c receive x : string }")

    def test_binder_type_inferred_from_channel(self):
        check("value c = connection(string) ; "
              "value d = connection(string) ; "
              "{ via c receive x ; via d send x }")

    def test_errors(self):
        cases = {
            "value f = function(x : integer) -> integer { x } ; value y = f(1, 2)": "arity",
            "replicate { value x = 1 ; via c send }": "unguarded",
            "value b = { via missing send }": "unbound",
            "value f = function(x : integer) -> integer { via x send }": "effect",
            "value l = location(0) ; l := \"s\"": "type",
            "value l = location(0) ; value x = l::1": "type",
            "value v = view(a = 1) ; value x = v.b": "field",
            "value x = 1 + 2.5": "arith",
            "value x = if 1 then 2 else 3": "type",
            "type t = nosuch": "unknown-type",
        }
        for src, code in cases.items():
            with pytest.raises(TypeCheckError):
                check(src)

    def test_replicate_choose_guards_enforced(self):
        check("""value c = connection() ; value d = connection() ;
                 replicate choose { { via c receive } or { via d receive } }""")
        with pytest.raises(TypeCheckError):
            check("""value c = connection() ;
                     replicate choose { { via c receive } or { value x = 1 } }""")

    def test_diagnostic_record_format(self):
        src = "value c = connection(string) ;\nvia c send 5"
        try:
            check(src)
            assert False
        except TypeCheckError as e:
            record = e.at(src)
            assert record.startswith("ERROR 2:")
            parts = record.split(None, 3)
            assert parts[0] == "ERROR" and ":" in parts[1]

    def test_type_alias(self):
        _, env = check("type exp_view = string ; value c = connection(exp_view) ; "
                       "{ via c send \"v\" }")
        assert env.lookup("c").render() == "connection[string]"

    def test_style_tags_validated(self):
        check("Client is style extending Component ; "
              "value a = abstraction() styled Client { value c = connection() ; via c send }")
        with pytest.raises(TypeCheckError):
            check("value a = abstraction() styled Nope { value c = connection() ; via c send }")
