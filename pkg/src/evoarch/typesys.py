"""Structural type representation and static checking.

Types are purely structural: two types are equivalent when they have the same
shape, with view fields compared in order.  Constructors are total — any type
may appear wherever a type is expected (type completeness), so the checker
never restricts constructor domains.  Locations are implicitly dereferenced in
value contexts; the checker records each dereference on the term so the
evaluator stays context-free.
"""

from __future__ import annotations

from dataclasses import dataclass



class TypeCheckError(Exception):
    def __init__(self, message, offset=0, code="type", expected=None, found=None):
        self.message = message
        self.offset = offset
        self.code = code
        self.expected = expected
        self.found = found
        super().__init__(message)

    def at(self, text):
        """Render as a line-oriented diagnostic record against source text."""
        line = text.count("\n", 0, self.offset) + 1
        col = self.offset - (text.rfind("\n", 0, self.offset) + 1) + 1
        return f"ERROR {line}:{col} {self.code} {self.message}"


# ---------------------------------------------------------------------------
# Type representation

@dataclass(frozen=True)
class TypeRep:
    variant: str
    args: tuple = ()            # component types
    result: object = None       # function result type
    fields: tuple = ()          # view: ((name, TypeRep), ...)

    def __post_init__(self):
        names = [n for n, _ in self.fields]
        if len(set(names)) != len(names):
            raise TypeCheckError("duplicate view field names", code="view-fields")

    def render(self):
        v = self.variant
        if v in ("integer", "real", "boolean", "string", "any", "behaviour"):
            return v
        if v in ("location", "sequence"):
            return f"{v}[{self.args[0].render()}]"
        if v in ("connection", "abstraction"):
            return f"{v}[{', '.join(a.render() for a in self.args)}]"
        if v == "view":
            return "view[" + ", ".join(f"{n} : {t.render()}" for n, t in self.fields) + "]"
        if v == "function":
            params = ", ".join(a.render() for a in self.args)
            sep = " " if params else ""
            return f"function[{params}{sep}-> {self.result.render()}]"
        raise TypeCheckError(f"unknown type variant {v}")

    def __repr__(self):
        return f"TypeRep<{self.render()}>"


INTEGER = TypeRep("integer")
REAL = TypeRep("real")
BOOLEAN = TypeRep("boolean")
STRING = TypeRep("string")
ANY = TypeRep("any")
BEHAVIOUR = TypeRep("behaviour")


def location_of(t):
    return TypeRep("location", (t,))


def sequence_of(t):
    return TypeRep("sequence", (t,))


def view_of(fields):
    return TypeRep("view", fields=tuple(fields))


def function_of(params, result):
    return TypeRep("function", tuple(params), result=result)


def connection_of(payloads):
    return TypeRep("connection", tuple(payloads))


def abstraction_of(params):
    return TypeRep("abstraction", tuple(params))


# Views returned by decompose: label, quiesced behaviour, interface connections.
DECOMPOSE_VIEW = view_of([("label", STRING), ("bhvr", BEHAVIOUR),
                          ("connections", sequence_of(ANY))])
DECOMPOSE_RESULT = sequence_of(DECOMPOSE_VIEW)


def equivalent(a, b):
    """Structural equivalence; view fields are order-significant."""
    return a == b


_BASE = {"integer": INTEGER, "real": REAL, "boolean": BOOLEAN, "string": STRING,
         "any": ANY, "behaviour": BEHAVIOUR}


def resolve_type(te, aliases=None, depth=0):
    """Resolve TypeExpr syntax to a TypeRep, expanding alias names."""
    aliases = aliases or {}
    if depth > 64:
        raise TypeCheckError("type alias nesting too deep (recursive types are not supported)",
                             te.span[0], code="recursive-type")
    name = te.name
    if name in _BASE:
        return _BASE[name]
    if name == "location":
        return location_of(resolve_type(te.args[0], aliases, depth + 1))
    if name == "sequence":
        return sequence_of(resolve_type(te.args[0], aliases, depth + 1))
    if name == "view":
        return view_of([(n, resolve_type(t, aliases, depth + 1)) for n, t in (te.fields or [])])
    if name == "connection":
        return connection_of([resolve_type(a, aliases, depth + 1) for a in te.args])
    if name == "abstraction":
        return abstraction_of([resolve_type(a, aliases, depth + 1) for a in te.args])
    if name == "function":
        return function_of([resolve_type(a, aliases, depth + 1) for a in te.args],
                           resolve_type(te.result, aliases, depth + 1))
    if name in aliases:
        return aliases[name]
    raise TypeCheckError(f"unknown type name '{name}'", te.span[0], code="unknown-type")


# ---------------------------------------------------------------------------
# Environments

class TypeEnv:
    """Block-structured name environment; lookup resolves innermost-first."""

    def __init__(self, parent=None):
        self.bindings = {}
        self.aliases = {}
        self.parent = parent

    def child(self):
        return TypeEnv(self)

    def define(self, name, t):
        self.bindings[name] = t

    def define_alias(self, name, t):
        self.aliases[name] = t

    def lookup(self, name):
        env = self
        while env is not None:
            if name in env.bindings:
                return env.bindings[name]
            env = env.parent
        return None

    def alias_table(self):
        table = {}
        chain = []
        env = self
        while env is not None:
            chain.append(env)
            env = env.parent
        for env in reversed(chain):
            table.update(env.aliases)
        return table


# ---------------------------------------------------------------------------
# Checker

_SCALARS = (INTEGER, REAL, BOOLEAN, STRING)

ROOT_STYLE_KINDS = ("Component", "Connector", "Style")


class Checker:
    """Static checker; annotates every term with its type (`term.typ`).

    ctx is "bhv" for behaviour positions and "expr" inside function bodies,
    where communication, assignment and behaviour creation are rejected.
    """

    def __init__(self, styles=None, link_type=None):
        self.styles = dict(styles or {})   # style name -> extends kind
        self.link_type = link_type         # link id -> TypeRep (hyper-code links)

    # -- helpers

    def fail(self, term, message, code="type", expected=None, found=None):
        raise TypeCheckError(message, term.span[0], code=code,
                             expected=expected, found=found)

    def auto_deref(self, term, t):
        if t.variant == "location":
            term.deref = (term.deref or 0) + 1
            return self.auto_deref(term, t.args[0])
        return t

    def coerce(self, term, t, expected, what="value"):
        """Accept t as expected, dereferencing locations when that helps."""
        if equivalent(t, expected):
            return t
        u = t
        hops = 0
        while u.variant == "location":
            u = u.args[0]
            hops += 1
            if equivalent(u, expected):
                term.deref = (term.deref or 0) + hops
                return u
        self.fail(term, f"{what} has type {t.render()}, expected {expected.render()}",
                  expected=expected.render(), found=t.render())

    def resolve(self, te, env):
        return resolve_type(te, env.alias_table())

    # -- entry points

    def check_program(self, program, env, ctx="bhv"):
        t = None
        for stmt in program.children:
            t = self.check(stmt, env, ctx)
        program.typ = t or BEHAVIOUR
        return program.typ

    def check(self, term, env, ctx="bhv"):
        method = getattr(self, "_k_" + term.kind, None)
        if method is None:
            self.fail(term, f"cannot type term kind {term.kind}")
        term.deref = 0   # re-checking a term must not accumulate dereferences
        t = method(term, env, ctx)
        term.typ = t
        return t

    # -- literals, names, links

    def _k_literal(self, term, env, ctx):
        v = term.value
        if isinstance(v, bool):
            return BOOLEAN
        if isinstance(v, int):
            return INTEGER
        if isinstance(v, float):
            return REAL
        if isinstance(v, str):
            return STRING
        self.fail(term, f"unsupported literal {v!r}")

    def _k_ident(self, term, env, ctx):
        t = env.lookup(term.name)
        if t is None:
            self.fail(term, f"unbound identifier '{term.name}'", code="unbound")
        return t

    def _k_link(self, term, env, ctx):
        if self.link_type is None:
            self.fail(term, "value links are not available in this context", code="dangling-link")
        t = self.link_type(term.link_ref)
        if t is None:
            self.fail(term, f"dangling value link #{term.link_ref}", code="dangling-link")
        return t

    # -- operators

    def _k_binop(self, term, env, ctx):
        op = term.op
        a, b = term.children
        ta = self.auto_deref(a, self.check(a, env, ctx))
        tb = self.auto_deref(b, self.check(b, env, ctx))
        if op in ("+", "-", "*", "/"):
            if equivalent(ta, INTEGER) and equivalent(tb, INTEGER):
                return INTEGER
            if equivalent(ta, REAL) and equivalent(tb, REAL):
                return REAL
            if op == "+" and equivalent(ta, STRING) and equivalent(tb, STRING):
                return STRING
            self.fail(term, f"operator '{op}' needs matching numeric operands, "
                            f"found {ta.render()} and {tb.render()}", code="arith")
        if op in ("=", "~="):
            if ta not in _SCALARS or not equivalent(ta, tb):
                self.fail(term, f"'{op}' compares equal scalar types, "
                                f"found {ta.render()} and {tb.render()}", code="compare")
            return BOOLEAN
        if op in ("<", "<=", ">", ">="):
            if ta not in (INTEGER, REAL, STRING) or not equivalent(ta, tb):
                self.fail(term, f"'{op}' needs matching ordered operands, "
                                f"found {ta.render()} and {tb.render()}", code="compare")
            return BOOLEAN
        if op in ("and", "or"):
            for t, c in ((ta, a), (tb, b)):
                if not equivalent(t, BOOLEAN):
                    self.fail(c, f"'{op}' needs boolean operands, found {t.render()}", code="bool")
            return BOOLEAN
        self.fail(term, f"unknown operator '{op}'")

    def _k_unop(self, term, env, ctx):
        e = term.children[0]
        t = self.auto_deref(e, self.check(e, env, ctx))
        if term.op == "-":
            if t not in (INTEGER, REAL):
                self.fail(term, f"unary '-' needs a numeric operand, found {t.render()}")
            return t
        if not equivalent(t, BOOLEAN):
            self.fail(term, f"'not' needs a boolean operand, found {t.render()}")
        return BOOLEAN

    def _k_if_expr(self, term, env, ctx):
        cond, then, other = term.children
        tc = self.auto_deref(cond, self.check(cond, env, ctx))
        if not equivalent(tc, BOOLEAN):
            self.fail(cond, f"if condition must be boolean, found {tc.render()}")
        tt = self.check(then, env, ctx)
        te = self.check(other, env, ctx)
        if not equivalent(tt, te):
            self.fail(term, f"if branches disagree: {tt.render()} vs {te.render()}")
        return tt

    # -- blocks and declarations

    _ACTION_KINDS = ("send", "receive", "assign", "free_clause", "replicate",
                     "choose")

    def _k_block(self, term, env, ctx):
        scope = env.child()
        t = BEHAVIOUR
        acts = False
        for i, stmt in enumerate(term.children):
            t = self.check(stmt, scope, ctx)
            if stmt.kind in self._ACTION_KINDS or equivalent(t, BEHAVIOUR):
                acts = True
            if stmt.kind == "receive":
                chan_t = stmt.typ_channel
                for b, pt in zip(stmt.binders, chan_t.args):
                    scope.define(b.name, pt)
        if not term.children:
            return BEHAVIOUR
        if ctx == "expr":
            last = term.children[-1]
            if last.kind in ("value_decl", "type_decl"):
                self.fail(last, "a block expression must end with an expression")
            return t
        # any action makes the block a behaviour, whatever its last statement;
        # action-free blocks ending in a value are expression blocks
        return BEHAVIOUR if acts else t

    def _k_value_decl(self, term, env, ctx):
        rhs = term.children[0]
        # pre-bind literal signatures so declarations may be self-recursive
        if rhs.kind == "function_lit":
            sig = function_of([self.resolve(p.type_ann, env) for p in rhs.params],
                              self.resolve(rhs.type_ann, env))
            env.define(term.name, sig)
        elif rhs.kind == "abstraction_lit":
            sig = abstraction_of([self.resolve(p.type_ann, env) for p in rhs.params])
            env.define(term.name, sig)
        t = self.check(rhs, env, ctx)
        env.define(term.name, t)
        return t

    def _k_type_decl(self, term, env, ctx):
        env.define_alias(term.name, self.resolve(term.type_ann, env))
        return BEHAVIOUR

    # -- constructors

    def _k_connection_new(self, term, env, ctx):
        payloads = [self.resolve(a, env) for a in (term.type_ann or [])]
        if term.style_tag is not None:
            self._check_style_tag(term, term.style_tag)
        return connection_of(payloads)

    def _k_location_new(self, term, env, ctx):
        return location_of(self.check(term.children[0], env, ctx))

    def _k_seq_lit(self, term, env, ctx):
        if term.type_ann is not None:
            elem = self.resolve(term.type_ann, env)
            for e in term.children:
                self.coerce(e, self.check(e, env, ctx), elem, "sequence element")
            return sequence_of(elem)
        elem = self.check(term.children[0], env, ctx)
        for e in term.children[1:]:
            t = self.check(e, env, ctx)
            if not equivalent(t, elem):
                self.fail(e, f"sequence elements disagree: {elem.render()} vs {t.render()}")
        return sequence_of(elem)

    def _k_view_lit(self, term, env, ctx):
        fields = []
        for name, e in zip(term.field_names, term.children):
            fields.append((name, self.check(e, env, ctx)))
        if len(set(term.field_names)) != len(term.field_names):
            self.fail(term, "duplicate view field names", code="view-fields")
        return view_of(fields)

    def _k_any_inject(self, term, env, ctx):
        self.check(term.children[0], env, ctx)
        return ANY

    def _k_abstraction_lit(self, term, env, ctx):
        if ctx == "expr":
            self.fail(term, "abstractions cannot be created inside function bodies", code="effect")
        params = [(p.name, self.resolve(p.type_ann, env)) for p in term.params]
        if term.style_tag is not None:
            self._check_style_tag(term, term.style_tag)
        scope = env.child()
        for name, t in params:
            scope.define(name, t)
        self.check(term.children[0], scope, "bhv")
        return abstraction_of([t for _, t in params])

    def _k_function_lit(self, term, env, ctx):
        params = [(p.name, self.resolve(p.type_ann, env)) for p in term.params]
        result = self.resolve(term.type_ann, env)
        scope = env.child()
        for name, t in params:
            scope.define(name, t)
        body_t = self.check(term.children[0], scope, "expr")
        self.coerce(term.children[0], body_t, result, "function body")
        return function_of([t for _, t in params], result)

    def _k_apply(self, term, env, ctx):
        callee = term.children[0]
        args = term.children[1:]
        ct = self.auto_deref(callee, self.check(callee, env, ctx))
        if ct.variant == "function":
            want = ct.args
            result = ct.result
        elif ct.variant == "abstraction":
            if ctx == "expr":
                self.fail(term, "abstractions cannot be applied inside function bodies",
                          code="effect")
            want = ct.args
            result = BEHAVIOUR
        else:
            self.fail(callee, f"cannot apply a value of type {ct.render()}", code="apply")
        if len(args) != len(want):
            self.fail(term, f"arity mismatch: expected {len(want)} arguments, got {len(args)}",
                      code="arity")
        for a, w in zip(args, want):
            self.coerce(a, self.check(a, env, ctx), w, "argument")
        return result

    # -- communication and state

    def _channel_type(self, term, env, ctx):
        chan = term.children[0]
        t = self.auto_deref(chan, self.check(chan, env, ctx))
        if t.variant == "connection":
            return t
        if equivalent(t, ANY):
            return None   # dynamically projected at the rendezvous point
        self.fail(chan, f"'via' needs a connection, found {t.render()}", code="via")

    def _k_send(self, term, env, ctx):
        if ctx == "expr":
            self.fail(term, "communication is not allowed in expression context", code="effect")
        ct = self._channel_type(term, env, ctx)
        payloads = term.children[1:]
        if ct is not None:
            if len(payloads) != len(ct.args):
                self.fail(term, f"send arity mismatch: channel carries {len(ct.args)} "
                                f"values, got {len(payloads)}", code="arity")
            for p, w in zip(payloads, ct.args):
                self.coerce(p, self.check(p, env, ctx), w, "payload")
        else:
            for p in payloads:
                self.check(p, env, ctx)
        term.typ_channel = ct
        return BEHAVIOUR

    def _k_receive(self, term, env, ctx):
        if ctx == "expr":
            self.fail(term, "communication is not allowed in expression context", code="effect")
        ct = self._channel_type(term, env, ctx)
        if ct is None:
            self.fail(term.children[0], "receive needs a statically typed connection", code="via")
        if len(term.binders) != len(ct.args):
            self.fail(term, f"receive arity mismatch: channel carries {len(ct.args)} "
                            f"values, got {len(term.binders)} binders", code="arity")
        for b, w in zip(term.binders, ct.args):
            if b.type_ann is not None:
                ann = self.resolve(b.type_ann, env)
                if not equivalent(ann, w):
                    self.fail(term, f"binder '{b.name}' declared {ann.render()} but channel "
                                    f"carries {w.render()}")
        term.typ_channel = ct
        return BEHAVIOUR

    def _k_assign(self, term, env, ctx):
        if ctx == "expr":
            self.fail(term, "assignment is not allowed in expression context", code="effect")
        target, rhs = term.children
        tt = self.check(target, env, ctx)
        if tt.variant != "location":
            self.fail(target, f"assignment target must be a location, found {tt.render()}",
                      code="assign")
        self.coerce(rhs, self.check(rhs, env, ctx), tt.args[0], "assigned value")
        return BEHAVIOUR

    def _k_free_clause(self, term, env, ctx):
        if ctx == "expr":
            self.fail(term, "free is not allowed in expression context", code="effect")
        for name in term.names:
            if env.lookup(name) is None:
                self.fail(term, f"free names an unbound identifier '{name}'", code="unbound")
        return BEHAVIOUR

    # -- control

    def _k_replicate(self, term, env, ctx):
        if ctx == "expr":
            self.fail(term, "replicate is not allowed in expression context", code="effect")
        body = term.children[0]
        self._check_guarded(body)
        self.check(body, env, "bhv")
        return BEHAVIOUR

    def _check_guarded(self, body):
        """Replication is guarded: the body's first action must communicate."""
        first = body
        if body.kind == "block":
            if not body.children:
                raise TypeCheckError("replicate body cannot be empty", body.span[0],
                                     code="unguarded")
            first = body.children[0]
        if first.kind in ("send", "receive"):
            return
        if first.kind == "choose" and first is body:
            for branch in body.children:
                head = branch
                if branch.kind == "block" and branch.children:
                    head = branch.children[0]
                if head.kind not in ("send", "receive"):
                    raise TypeCheckError(
                        "replicate over choose needs a communication guard in every branch",
                        branch.span[0], code="unguarded")
            return
        raise TypeCheckError("replicate body must start with a communication guard",
                             body.span[0], code="unguarded")

    def _k_choose(self, term, env, ctx):
        if ctx == "expr":
            self.fail(term, "choose is not allowed in expression context", code="effect")
        for branch in term.children:
            self.check(branch, env, "bhv")
        return BEHAVIOUR

    def _k_typecase(self, term, env, ctx):
        scrutinee = term.children[0]
        st = self.auto_deref(scrutinee, self.check(scrutinee, env, ctx))
        if not equivalent(st, ANY):
            self.fail(scrutinee, f"typecase inspects an any value, found {st.render()}")
        bodies = term.children[1:]
        types = []
        for i, b in enumerate(term.binders):
            scope = env.child()
            scope.define(b.name, self.resolve(b.type_ann, env))
            term.binders[i].resolved = self.resolve(b.type_ann, env)
            types.append(self.check(bodies[i], scope, ctx))
        if term.has_else:
            types.append(self.check(bodies[-1], env, ctx))
        if types and all(equivalent(t, types[0]) for t in types):
            if term.has_else or ctx == "bhv":
                return types[0]
            return types[0]
        if ctx == "expr":
            self.fail(term, "typecase branches disagree in type")
        return BEHAVIOUR

    # -- composition and reflection

    def _k_compose(self, term, env, ctx):
        if ctx == "expr":
            self.fail(term, "compose is not allowed in expression context", code="effect")
        seen = set()
        for label in term.labels:
            if label is not None:
                if label in seen:
                    self.fail(term, f"duplicate composition label '{label}'", code="labels")
                seen.add(label)
        for part in term.children:
            t = self.auto_deref(part, self.check(part, env, "bhv"))
            if not equivalent(t, BEHAVIOUR):
                self.fail(part, f"compose parts must be behaviours, found {t.render()}")
        for p, q in term.unifications or []:
            for path in (p, q):
                if path.base not in seen:
                    self.fail(term, f"unification path '{path.render()}' does not start "
                                    f"from a composition label", code="path")
        return BEHAVIOUR

    def _k_decompose(self, term, env, ctx):
        if ctx == "expr":
            self.fail(term, "decompose is not allowed in expression context", code="effect")
        e = term.children[0]
        t = self.auto_deref(e, self.check(e, env, ctx))
        if not equivalent(t, BEHAVIOUR):
            self.fail(e, f"decompose needs a behaviour, found {t.render()}")
        return DECOMPOSE_RESULT

    def _k_reify(self, term, env, ctx):
        self.check(term.children[0], env, ctx)
        return STRING

    def _k_reflect(self, term, env, ctx):
        e = term.children[0]
        t = self.auto_deref(e, self.check(e, env, ctx))
        if not equivalent(t, STRING):
            self.fail(e, f"reflect takes hyper-text (a string), found {t.render()}")
        return ANY

    # -- access paths

    def _k_seq_index(self, term, env, ctx):
        e = term.children[0]
        t = self.auto_deref(e, self.check(e, env, ctx))
        if t.variant != "sequence":
            self.fail(e, f"'::{term.index}' indexes a sequence, found {t.render()}")
        if term.index < 1:
            self.fail(term, "sequence indices are 1-based", code="index")
        return t.args[0]

    def _k_label_qualify(self, term, env, ctx):
        e = term.children[0]
        t = self.auto_deref(e, self.check(e, env, ctx))
        if not equivalent(t, BEHAVIOUR) and not equivalent(t, ANY):
            self.fail(e, f"'::{term.name}' looks up a behaviour interface, found {t.render()}")
        return ANY   # interface payload types are resolved at run time

    def _k_field_access(self, term, env, ctx):
        e = term.children[0]
        t = self.auto_deref(e, self.check(e, env, ctx))
        if t.variant != "view":
            self.fail(e, f"'.{term.name}' accesses a view field, found {t.render()}")
        for n, ft in t.fields:
            if n == term.name:
                return ft
        self.fail(term, f"view has no field '{term.name}'", code="field")

    # -- styles

    def _check_style_tag(self, term, tag):
        if tag not in self.styles:
            self.fail(term, f"unknown style '{tag}'", code="style")

    def _k_style_decl(self, term, env, ctx):
        self._register_style(term)
        return BEHAVIOUR

    def _register_style(self, term):
        if term.name in self.styles or term.name in ROOT_STYLE_KINDS:
            self.fail(term, f"style '{term.name}' is already defined", code="style")
        extends = term.extends or "Style"
        if extends not in ROOT_STYLE_KINDS:
            self.fail(term, f"styles extend Component, Connector or Style, not '{extends}'",
                      code="style")
        self.styles[term.name] = extends
        body = term.style_body
        if body is None:
            return
        for element in body.elements:
            self._register_style(element)
        for block in body.blocks:
            for f in block.formulas:
                self._check_formula(term, f, set())
        for analysis in body.analyses:
            bound = set()
            for var, style in analysis.params:
                if style not in self.styles and style not in ROOT_STYLE_KINDS:
                    self.fail(term, f"analysis parameter uses unknown style '{style}'",
                              code="style")
                bound.add(var)
            for block in analysis.blocks:
                for f in block.formulas:
                    self._check_formula(term, f, bound)

    def _check_formula(self, term, f, bound):
        from .syntax import Quant, FNot, FBin, InStyle, Connected, Attached
        if isinstance(f, Quant):
            self._check_formula(term, f.body, bound | set(f.vars))
        elif isinstance(f, FNot):
            self._check_formula(term, f.body, bound)
        elif isinstance(f, FBin):
            self._check_formula(term, f.left, bound)
            self._check_formula(term, f.right, bound)
        elif isinstance(f, InStyle):
            if f.var not in bound:
                self.fail(term, f"constraint variable '{f.var}' is unbound", code="style")
            if f.style not in self.styles and f.style not in ROOT_STYLE_KINDS:
                self.fail(term, f"constraint names unknown style '{f.style}'", code="style")
        elif isinstance(f, (Connected, Attached)):
            for v in (f.left, f.right):
                if v not in bound:
                    self.fail(term, f"constraint variable '{v}' is unbound", code="style")
        else:
            self.fail(term, f"unknown constraint formula node {f!r}")


def check_program(program, env=None, styles=None, link_type=None):
    """Type-check a parsed program; returns the env extended by its declarations."""
    env = env or TypeEnv()
    Checker(styles=styles, link_type=link_type).check_program(program, env)
    return env
