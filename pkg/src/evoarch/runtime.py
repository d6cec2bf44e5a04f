"""The reduction engine.

Behaviours reduce one step at a time under a single sequential scheduler.
Internal work (declarations, expression evaluation, moving up to the next
communication) is performed deterministically, lowest handle first; when no
internal work remains the scheduler draws uniformly from the seeded generator
over all enabled rendezvous.  Communication is synchronous: one ready send and
one ready receive on the same canonical channel exchange values atomically.

A behaviour sitting at a communication offer is at its reduction limit; with
no ready partner anywhere the system is quiescent, which is the precondition
for decomposition, reification and snapshots.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from . import typesys as T
from .syntax import Term
from .values import (AbstractionVal, AnyVal, ChannelVal, Env, FunctionVal,
                     LocationVal, Process, ProjectionError, SeqVal, ViewVal,
                     inject_any, render_value, value_type)

QUIESCENT = "QUIESCENT"


class RuntimeFault(Exception):
    """Internal fault: a condition the static checker should have excluded."""


class UnificationTypeError(Exception):
    pass


class UnresolvedPathError(Exception):
    pass


class QuiescenceTimeout(Exception):
    pass


class CompositionError(Exception):
    pass


@dataclass
class TraceEvent:
    step: int
    kind: str
    subjects: tuple
    payload: str = None

    def line(self):
        subj = ",".join(str(s) for s in self.subjects)
        if self.payload is None:
            return f"{self.step} {self.kind} {subj}"
        return f"{self.step} {self.kind} {subj} {self.payload}"


def trace_hash(events):
    h = hashlib.sha256()
    for e in events:
        h.update(e.line().encode())
        h.update(b"\n")
    return h.hexdigest()


@dataclass
class Frame:
    env: Env
    stmts: list
    idx: int = 0
    interface: bool = False


@dataclass
class Offer:
    kind: str                  # "send" | "recv"
    chan: ChannelVal
    payloads: list = None      # send: evaluated values
    binders: list = None       # recv: Param list
    branch: int = None         # choose branch index, if committed via choice
    cont: list = None          # statements following the guard
    cont_env: Env = None
    replicate: bool = False    # firing spawns a fresh copy and keeps waiting


class BehaviourState(Process):
    """A live process: residual continuation, environment, interface."""

    def __init__(self, runtime, handle, frames, label=None, style_tag=None):
        self.runtime = runtime
        self.handle = handle
        self.frames = frames
        self.label = label
        self.parent = None              # enclosing composite or spawning behaviour
        self.connections = []           # [(name, ChannelVal)] interface
        self.exports = {}               # bindings exposed via `free`
        self.style_tag = style_tag
        self.poised = False
        self.offers = []
        self.internal_branches = []     # choose branches ready without a partner
        self.choose_env = None
        self.choose_term = None
        self.terminated = False
        self.detached = False           # set by decompose; cleared on recompose

    # reduction-limit bookkeeping -------------------------------------------

    def is_suspended(self):
        """Decomposition partially stops the system: detached constituents
        (and their spawned copies) hold their state but do not reduce."""
        node = self
        while node is not None:
            if getattr(node, "detached", False):
                return True
            node = node.parent
        return False

    def has_internal_work(self):
        if self.terminated or self.is_suspended():
            return False
        if not self.poised:
            return True
        return bool(self.internal_branches)

    def at_reduction_limit(self):
        return self.terminated or (self.poised and not self.internal_branches)

    @property
    def status(self):
        if self.terminated:
            return "TERMINATED"
        if self.has_internal_work():
            return "RUNNING"
        if any(self.runtime._partner_exists(self, o) for o in self.offers):
            return "RUNNING"
        return "BLOCKED"

    def residual_term(self):
        """Remaining continuation as a renderable term (innermost work first)."""
        term = None
        for fr in reversed(self.frames):
            rest = list(fr.stmts[fr.idx:])
            if term is not None:
                rest = [term] + rest
            if len(rest) == 1 and term is None:
                term = rest[0]
                continue
            term = Term("block", rest)
        if term is None:
            term = Term("block", [])
        return term

    def current_env(self):
        if self.frames:
            return self.frames[-1].env
        return None

    def add_connection(self, name, chan):
        self.connections = [(n, c) for n, c in self.connections if n != name]
        self.connections.append((name, chan))

    def find_connection(self, name):
        for n, c in self.connections:
            if n == name:
                return c
        return None

    def __repr__(self):
        return f"<behaviour {self.handle} {self.status}>"


class Composite(Process):
    """Handle over behaviours composed to run in parallel."""

    def __init__(self, handle, labels, parts):
        self.handle = handle
        self.labels = labels            # aligned with parts; None = unlabelled
        self.parts = parts              # BehaviourState | Composite
        self.unify_log = []             # channels whose root-parent we set
        self.unify_paths = []           # the composition's textual where-clause
        self.parent = None
        self.label = None
        self.dissolved = False
        self.detached = False

    def member_behaviours(self):
        out = []
        for p in self.parts:
            if isinstance(p, Composite):
                out.extend(p.member_behaviours())
            else:
                out.append(p)
        return out

    def part_by_label(self, label):
        for lab, p in zip(self.labels, self.parts):
            if lab == label:
                return p
        return None

    def __repr__(self):
        return f"<composite {self.handle}>"


class Runtime:
    """Scheduler state: behaviours, channels, composites, trace, seeded RNG."""

    def __init__(self, seed=0, check_tags=True):
        self.seed = seed
        self.rng = random.Random(seed)
        self.behaviours = []
        self.channels = []
        self.composites = []
        self.events = []
        self.step_no = 0
        self.behaviour_counter = 0
        self.composite_counter = 0
        self.chan_counter = 0
        self.check_tags = check_tags
        self.default_timeout = 100_000
        self.reify_hook = None          # value -> carrier string (set by workspace)
        self.reflect_hook = None        # carrier string -> value

    def __getstate__(self):
        # the store hooks are bound methods; the owning Hypercode re-wires
        # them after unpickling
        state = dict(self.__dict__)
        for hook in ("reify_hook", "reflect_hook", "link_lookup"):
            state.pop(hook, None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self.reify_hook = None
        self.reflect_hook = None

    # -- trace

    def emit(self, kind, subjects, payload=None):
        self.step_no += 1
        ev = TraceEvent(self.step_no, kind, tuple(subjects), payload)
        self.events.append(ev)
        return ev

    # -- construction

    def new_channel(self, payload_types, style_tag=None):
        self.chan_counter += 1
        chan = ChannelVal(self.chan_counter, payload_types, style_tag)
        self.channels.append(chan)
        return chan

    def new_behaviour(self, term, env, label=None, style_tag=None, binds=None):
        self.behaviour_counter += 1
        scope = env.child()
        for name, v in (binds or {}).items():
            scope.define(name, v)
        if term.kind == "block":
            frames = [Frame(scope, list(term.children), interface=True)]
        else:
            frames = [Frame(scope, [term], interface=True)]
        b = BehaviourState(self, f"b{self.behaviour_counter}", frames, label, style_tag)
        self.behaviours.append(b)
        self.emit("SPAWN", (b.handle,))
        return b

    def instantiate(self, abs_val, args):
        """Apply an abstraction: a fresh running behaviour binding the params."""
        if not isinstance(abs_val, AbstractionVal):
            raise RuntimeFault("instantiate needs an abstraction value")
        if len(args) != len(abs_val.params):
            raise RuntimeFault(f"abstraction arity mismatch: expected "
                               f"{len(abs_val.params)}, got {len(args)}")
        binds = {}
        for (name, pt), v in zip(abs_val.params, args):
            if self.check_tags and not T.equivalent(value_type(v), pt):
                raise RuntimeFault(f"abstraction argument '{name}' has type "
                                   f"{value_type(v).render()}, expected {pt.render()}")
            binds[name] = v
        b = self.new_behaviour(abs_val.body, abs_val.env,
                               style_tag=abs_val.style_tag, binds=binds)
        for name, v in binds.items():
            if isinstance(v, ChannelVal):
                b.add_connection(name, v)
        return b

    # -- expression evaluation (internal actions; may spawn/compose)

    def eval(self, term, env, owner=None):
        v = self._eval(term, env, owner)
        for _ in range(term.deref or 0):
            if not isinstance(v, LocationVal):
                raise RuntimeFault("dereference of a non-location")
            v = v.content
        return v

    def _eval(self, term, env, owner):
        k = term.kind
        if k == "literal":
            return term.value
        if k == "ident":
            try:
                return env.lookup(term.name)
            except KeyError:
                raise RuntimeFault(f"unbound identifier '{term.name}' at run time")
        if k == "link":
            return self.link_lookup(term.link_ref)
        if k == "binop":
            return self._eval_binop(term, env, owner)
        if k == "unop":
            v = self.eval(term.children[0], env, owner)
            return (not v) if term.op == "not" else (-v)
        if k == "if_expr":
            cond = self.eval(term.children[0], env, owner)
            return self.eval(term.children[1 if cond else 2], env, owner)
        if k == "connection_new":
            payloads = tuple(term.typ.args)
            return self.new_channel(payloads, term.style_tag)
        if k == "location_new":
            v = self.eval(term.children[0], env, owner)
            return LocationVal(v, term.typ.args[0])
        if k == "seq_lit":
            items = [self.eval(c, env, owner) for c in term.children]
            return SeqVal(items, term.typ.args[0])
        if k == "view_lit":
            values = [self.eval(c, env, owner) for c in term.children]
            types = [ft for _, ft in term.typ.fields]
            return ViewVal(list(term.field_names), values, types)
        if k == "any_inject":
            inner = term.children[0]
            return inject_any(self.eval(inner, env, owner), inner.typ if not inner.deref else None)
        if k == "function_lit":
            params = [(p.name, rt) for p, rt in zip(term.params, term.typ.args)]
            return FunctionVal(params, term.typ.result, term.children[0], env)
        if k == "abstraction_lit":
            params = [(p.name, rt) for p, rt in zip(term.params, term.typ.args)]
            return AbstractionVal(params, term.children[0], env, term.style_tag)
        if k == "apply":
            return self._eval_apply(term, env, owner)
        if k == "block":
            if term.typ is not None and not T.equivalent(term.typ, T.BEHAVIOUR):
                return self._eval_block_expr(term, env, owner)
            return self.new_behaviour(term, env)
        if k in ("replicate", "choose"):
            return self.new_behaviour(term, env)
        if k == "typecase":
            return self._eval_typecase_expr(term, env, owner)
        if k == "seq_index":
            seq = self.eval(term.children[0], env, owner)
            if not isinstance(seq, SeqVal):
                raise RuntimeFault("'::' index applied to a non-sequence")
            if term.index > len(seq.items):
                raise RuntimeFault(f"sequence index {term.index} out of range "
                                   f"(length {len(seq.items)})")
            return seq.items[term.index - 1]
        if k == "label_qualify":
            return self._eval_label_qualify(term, env, owner)
        if k == "field_access":
            v = self.eval(term.children[0], env, owner)
            if not isinstance(v, ViewVal) or term.name not in v.names:
                raise RuntimeFault(f"no view field '{term.name}'")
            return v.get(term.name)
        if k == "compose":
            return self._eval_compose(term, env, owner)
        if k == "decompose":
            target = self.eval(term.children[0], env, owner)
            return self.decompose(target, self.default_timeout)
        if k == "reify":
            if self.reify_hook is None:
                raise RuntimeFault("no value store attached to this runtime")
            return self.reify_hook(self.eval(term.children[0], env, owner))
        if k == "reflect":
            if self.reflect_hook is None:
                raise RuntimeFault("no value store attached to this runtime")
            carrier = self.eval(term.children[0], env, owner)
            return self.reflect_hook(carrier)
        raise RuntimeFault(f"cannot evaluate term kind {k!r}")

    def link_lookup(self, ref):
        raise RuntimeFault("no value store attached to this runtime")

    def _eval_binop(self, term, env, owner):
        op = term.op
        a = self.eval(term.children[0], env, owner)
        if op == "and":
            return bool(a) and bool(self.eval(term.children[1], env, owner))
        if op == "or":
            return bool(a) or bool(self.eval(term.children[1], env, owner))
        b = self.eval(term.children[1], env, owner)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if isinstance(a, int) and isinstance(b, int):
                if b == 0:
                    raise RuntimeFault("division by zero")
                q = abs(a) // abs(b)
                return q if (a >= 0) == (b >= 0) else -q
            if b == 0.0:
                raise RuntimeFault("division by zero")
            return a / b
        if op == "=":
            return a == b
        if op == "~=":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        raise RuntimeFault(f"unknown operator {op!r}")

    def _eval_apply(self, term, env, owner):
        callee = self.eval(term.children[0], env, owner)
        args = [self.eval(a, env, owner) for a in term.children[1:]]
        if isinstance(callee, FunctionVal):
            scope = callee.env.child()
            if len(args) != len(callee.params):
                raise RuntimeFault("function arity mismatch")
            for (name, _), v in zip(callee.params, args):
                scope.define(name, v)
            return self._eval_block_expr(callee.body, scope, owner)
        if isinstance(callee, AbstractionVal):
            return self.instantiate(callee, args)
        raise RuntimeFault("application of a non-applicable value")

    def _eval_block_expr(self, block, env, owner):
        scope = env.child()
        result = None
        for stmt in block.children:
            if stmt.kind == "value_decl":
                result = self.eval(stmt.children[0], scope, owner)
                scope.define(stmt.name, result)
            elif stmt.kind == "type_decl":
                result = None
            else:
                result = self.eval(stmt, scope, owner)
        return result

    def _eval_typecase_expr(self, term, env, owner):
        av = self.eval(term.children[0], env, owner)
        if not isinstance(av, AnyVal):
            raise RuntimeFault("typecase inspects an any value")
        bodies = term.children[1:]
        for i, b in enumerate(term.binders):
            want = getattr(b, "resolved", None)
            if want is not None and T.equivalent(av.typ, want):
                scope = env.child()
                scope.define(b.name, av.value)
                return self.eval(bodies[i], scope, owner)
        if term.has_else:
            return self.eval(bodies[-1], env, owner)
        raise ProjectionError(f"typecase found no branch for {av.typ.render()}")

    def _eval_label_qualify(self, term, env, owner):
        v = self.eval(term.children[0], env, owner)
        if isinstance(v, AnyVal):
            v = v.value
        if isinstance(v, Composite):
            part = v.part_by_label(term.name)
            if part is None:
                raise UnresolvedPathError(f"composite has no part labelled '{term.name}'")
            return inject_any(part, T.BEHAVIOUR)
        if isinstance(v, BehaviourState):
            chan = v.find_connection(term.name)
            if chan is None:
                raise UnresolvedPathError(f"behaviour {v.handle} exposes no "
                                          f"connection '{term.name}'")
            return inject_any(chan)
        raise UnresolvedPathError(f"'::{term.name}' applies to behaviours")

    # -- statement-level internal reduction

    def internal_step(self, b):
        if b.poised and b.internal_branches:
            return self._commit_internal_choice(b)
        while b.frames and b.frames[-1].idx >= len(b.frames[-1].stmts):
            b.frames.pop()
        if not b.frames:
            b.terminated = True
            b.poised = False
            b.offers = []
            return self.emit("TERMINATE", (b.handle,))
        fr = b.frames[-1]
        s = fr.stmts[fr.idx]
        k = s.kind
        # poised actions stay in the continuation until they fire, so the
        # residual term always shows the pending communication
        if k in ("send", "receive"):
            self._poise_action(b, s, fr.env)
            return self._after_poise(b)
        if k == "replicate":
            self._poise_replicate(b, s, fr.env)
            return self._after_poise(b)
        if k == "choose":
            self._poise_choose(b, s, fr.env)
            return self._after_poise(b)
        if k == "block":
            fr.idx += 1
            b.frames.append(Frame(fr.env.child(), list(s.children)))
            return None
        if k == "value_decl":
            v = self.eval(s.children[0], fr.env, b)
            fr.env.define(s.name, v)
            if isinstance(v, ChannelVal) and fr.interface:
                b.add_connection(s.name, v)
            fr.idx += 1
            return None
        if k == "type_decl":
            fr.idx += 1
            return None
        if k == "assign":
            loc = self.eval(s.children[0], fr.env, b)
            v = self.eval(s.children[1], fr.env, b)
            if not isinstance(loc, LocationVal):
                raise RuntimeFault("assignment target is not a location")
            if self.check_tags and not T.equivalent(value_type(v), loc.content_type):
                raise RuntimeFault("assignment violates the location's content type")
            loc.content = v
            fr.idx += 1
            return self.emit("ASSIGN", (b.handle,), render_value(v))
        if k == "free_clause":
            for name in s.names:
                try:
                    v = fr.env.lookup(name)
                except KeyError:
                    raise RuntimeFault(f"free names unbound identifier '{name}'")
                b.exports[name] = v
                if isinstance(v, ChannelVal):
                    b.add_connection(name, v)
            fr.idx += 1
            return None
        if k == "typecase":
            return self._step_typecase(b, fr, s)
        if k == "if_expr" and s.typ is not None and T.equivalent(s.typ, T.BEHAVIOUR):
            cond = self.eval(s.children[0], fr.env, b)
            fr.idx += 1
            chosen = s.children[1 if cond else 2]
            b.frames.append(Frame(fr.env.child(), [chosen]))
            return None
        # plain expression statement (may spawn/compose as a side effect)
        self.eval(s, fr.env, b)
        fr.idx += 1
        return None

    def _step_typecase(self, b, fr, s):
        av = self.eval(s.children[0], fr.env, b)
        if not isinstance(av, AnyVal):
            raise RuntimeFault("typecase inspects an any value")
        fr.idx += 1
        bodies = s.children[1:]
        for i, binder in enumerate(s.binders):
            want = getattr(binder, "resolved", None)
            if want is not None and T.equivalent(av.typ, want):
                scope = fr.env.child()
                scope.define(binder.name, av.value)
                b.frames.append(Frame(scope, [bodies[i]]))
                return None
        if s.has_else:
            b.frames.append(Frame(fr.env.child(), [bodies[-1]]))
            return None
        raise ProjectionError(f"typecase found no branch for {av.typ.render()}")

    # -- poising (moving up to the reduction limit)

    def _resolve_channel(self, term, env, owner):
        chan = self.eval(term.children[0], env, owner)
        if isinstance(chan, AnyVal):
            chan = chan.value
        if isinstance(chan, LocationVal):
            chan = chan.content
        if not isinstance(chan, ChannelVal):
            raise ProjectionError("'via' target is not a connection")
        return chan

    def _poise_action(self, b, s, env):
        chan = self._resolve_channel(s, env, b)
        if s.kind == "send":
            payloads = [self.eval(p, env, b) for p in s.children[1:]]
            offer = Offer("send", chan, payloads=payloads, cont=None, cont_env=env)
        else:
            offer = Offer("recv", chan, binders=list(s.binders), cont=None, cont_env=env)
        b.offers = [offer]
        b.internal_branches = []
        b.poised = True

    def _branch_guard(self, branch):
        if branch.kind == "block" and branch.children:
            head = branch.children[0]
            if head.kind in ("send", "receive"):
                return head, branch.children[1:]
        if branch.kind in ("send", "receive"):
            return branch, []
        return None, None

    def _poise_choose(self, b, s, env):
        offers = []
        internal = []
        for i, branch in enumerate(s.children):
            guard, cont = self._branch_guard(branch)
            if guard is None:
                internal.append(i)
                continue
            chan = self._resolve_channel(guard, env, b)
            if guard.kind == "send":
                payloads = [self.eval(p, env, b) for p in guard.children[1:]]
                offers.append(Offer("send", chan, payloads=payloads,
                                    branch=i, cont=cont, cont_env=env))
            else:
                offers.append(Offer("recv", chan, binders=list(guard.binders),
                                    branch=i, cont=cont, cont_env=env))
        b.offers = offers
        b.internal_branches = internal
        b.choose_term = s
        b.choose_env = env
        b.poised = True

    def _poise_replicate(self, b, s, env):
        body = s.children[0]
        offers = []
        if body.kind == "choose":
            for i, branch in enumerate(body.children):
                guard, cont = self._branch_guard(branch)
                if guard is None:
                    raise RuntimeFault("unguarded replicate branch survived checking")
                offers.append(self._replicate_offer(b, guard, cont, env, branch=i))
        else:
            guard, cont = self._branch_guard(body)
            if guard is None:
                raise RuntimeFault("unguarded replicate survived checking")
            offers.append(self._replicate_offer(b, guard, cont, env))
        b.offers = offers
        b.internal_branches = []
        b.poised = True

    def _replicate_offer(self, b, guard, cont, env, branch=None):
        chan = self._resolve_channel(guard, env, b)
        if guard.kind == "send":
            payloads = [self.eval(p, env, b) for p in guard.children[1:]]
            return Offer("send", chan, payloads=payloads, branch=branch,
                         cont=cont, cont_env=env, replicate=True)
        return Offer("recv", chan, binders=list(guard.binders), branch=branch,
                     cont=cont, cont_env=env, replicate=True)

    def _after_poise(self, b):
        if not any(self._partner_exists(b, o) for o in b.offers) and not b.internal_branches:
            return self.emit("BLOCK", (b.handle,))
        return None

    def _commit_internal_choice(self, b):
        ready = list(b.internal_branches)
        idx = self.resolve_choice(ready)
        branch = b.choose_term.children[idx]
        b.poised = False
        b.offers = []
        b.internal_branches = []
        ev = self.emit("CHOICE_COMMIT", (b.handle,), f"branch={idx + 1}")
        b.frames[-1].idx += 1
        b.frames.append(Frame(b.choose_env.child(), [branch]))
        b.choose_term = None
        b.choose_env = None
        return ev

    def resolve_choice(self, ready):
        """Uniform committed choice over the ready branch set (seeded)."""
        if not ready:
            raise RuntimeFault("choice over an empty ready set")
        return ready[self.rng.randrange(len(ready))]

    # -- rendezvous

    def _live_offerers(self):
        for b in self.behaviours:
            if not b.terminated and b.poised and not b.is_suspended():
                yield b

    def _partner_exists(self, b, offer):
        root = offer.chan.root()
        want = "recv" if offer.kind == "send" else "send"
        for other in self._live_offerers():
            if other is b:
                continue
            for o in other.offers:
                if o.kind == want and o.chan.root() is root:
                    return True
        return False

    def rendezvous_candidates(self):
        """All enabled (sender, send offer, receiver, recv offer) tuples,
        in deterministic order."""
        sends = []
        recvs = []
        for b in self._live_offerers():
            if b.internal_branches:
                continue   # internal commit preempts the guards
            for o in b.offers:
                (sends if o.kind == "send" else recvs).append((b, o))
        out = []
        for sb, so in sends:
            for rb, ro in recvs:
                if sb is rb:
                    continue
                if so.chan.root() is ro.chan.root():
                    out.append((sb, so, rb, ro))
        return out

    def _advance_party(self, b, offer, binds):
        """Move a party past its fired guard; returns the continuing behaviour."""
        if offer.replicate:
            # the waiting replicate stays; the firing copy continues the body
            self.behaviour_counter += 1
            scope = offer.cont_env.child()
            for name, v in binds.items():
                scope.define(name, v)
            inst = BehaviourState(self, f"b{self.behaviour_counter}",
                                  [Frame(scope, list(offer.cont))])
            inst.parent = b   # copies follow their replicate through detachment
            inst.style_tag = b.style_tag
            self.behaviours.append(inst)
            self.emit("REPLICATE_CLONE", (b.handle, inst.handle))
            if offer.branch is not None:
                self.emit("CHOICE_COMMIT", (inst.handle,), f"branch={offer.branch + 1}")
            return inst
        b.poised = False
        b.offers = []
        b.internal_branches = []
        b.choose_term = None
        b.choose_env = None
        b.frames[-1].idx += 1   # step past the fired choose or plain action
        if offer.cont is not None:
            self.emit("CHOICE_COMMIT", (b.handle,), f"branch={offer.branch + 1}")
            scope = offer.cont_env.child()
            for name, v in binds.items():
                scope.define(name, v)
            b.frames.append(Frame(scope, list(offer.cont)))
        else:
            env = offer.cont_env
            for name, v in binds.items():
                env.define(name, v)
        return b

    def _execute_rendezvous(self, sb, so, rb, ro):
        values = list(so.payloads)
        root = so.chan.root()
        if self.check_tags:
            for v, pt in zip(values, root.payload_types):
                if not T.equivalent(value_type(v), pt):
                    raise RuntimeFault(
                        f"communicated value of type {value_type(v).render()} on a "
                        f"channel carrying {pt.render()}")
        binds = {}
        if ro.binders:
            for b_, v in zip(ro.binders, values):
                binds[b_.name] = v
        sender = self._advance_party(sb, so, {})
        receiver = self._advance_party(rb, ro, binds)
        payload = ", ".join(render_value(v) for v in values) if values else None
        return self.emit("SEND_RECV", (sender.handle, receiver.handle, f"k{root.id}"),
                         payload)

    # -- the scheduler

    def step(self):
        """One reduction: internal work first (deterministic), else a seeded
        uniform pick over enabled rendezvous; QUIESCENT when neither exists."""
        for b in self.behaviours:
            if b.has_internal_work():
                return self.internal_step(b)
        pairs = self.rendezvous_candidates()
        if not pairs:
            return QUIESCENT
        sb, so, rb, ro = pairs[self.rng.randrange(len(pairs))]
        return self._execute_rendezvous(sb, so, rb, ro)

    def run(self, budget):
        """Reduce until quiescent or the step budget is exhausted."""
        steps = 0
        while steps < budget:
            if self.step() is QUIESCENT:
                return ("quiescent", steps)
            steps += 1
        return ("budget", steps)

    def is_quiescent(self):
        return all(not b.has_internal_work() for b in self.behaviours) \
            and not self.rendezvous_candidates()

    # -- composition / decomposition

    def compose(self, labelled_parts, unify_paths):
        """Group parts under one handle and unify the listed channel pairs."""
        labels = [lab for lab, _ in labelled_parts]
        parts = [p for _, p in labelled_parts]
        for p in parts:
            if not isinstance(p, (BehaviourState, Composite)):
                raise CompositionError("compose parts must be behaviours")
            if isinstance(p, BehaviourState) and p.terminated:
                raise CompositionError(f"behaviour {p.handle} has terminated")
            if p.parent is not None:
                raise CompositionError("part is already inside a composition")
            if isinstance(p, Composite) and p.dissolved:
                raise CompositionError("composite was decomposed")
        self.composite_counter += 1
        comp = Composite(f"c{self.composite_counter}", labels, parts)
        for lab, p in zip(labels, parts):
            p.detached = False   # recomposition resumes detached constituents
            p.parent = comp
            if lab is not None:
                p.label = lab
        # parts advance to their reduction limits so that the connections
        # declared by their bodies exist before unification paths resolve
        self._drain(lambda: self._members_of(comp), self.default_timeout)
        for path_a, path_b in unify_paths:
            ca = self._resolve_unify_path(comp, path_a)
            cb = self._resolve_unify_path(comp, path_b)
            self._unify(comp, ca, cb)
        comp.unify_paths = list(unify_paths)
        self.composites.append(comp)
        self.emit("COMPOSE", (comp.handle,) + tuple(
            p.handle for p in parts))
        return comp

    def _members_of(self, comp):
        members = comp.member_behaviours()
        seen = set(id(m) for m in members)
        for b in self.behaviours:
            p = b.parent
            while p is not None and p is not comp:
                p = p.parent
            if p is comp and id(b) not in seen:
                members.append(b)
        return members

    def _resolve_unify_path(self, comp, path):
        node = comp.part_by_label(path.base)
        if node is None:
            raise UnresolvedPathError(f"no part labelled '{path.base}'")
        for kind, arg in path.steps:
            if kind == "label" and isinstance(node, Composite):
                nxt = node.part_by_label(arg)
                if nxt is None:
                    raise UnresolvedPathError(f"no part labelled '{arg}' in "
                                              f"'{path.render()}'")
                node = nxt
            elif kind == "label" and isinstance(node, BehaviourState):
                chan = node.find_connection(arg)
                if chan is None:
                    raise UnresolvedPathError(
                        f"behaviour '{path.base}' exposes no connection '{arg}'")
                node = chan
            elif kind == "index" and isinstance(node, Composite):
                if not 1 <= arg <= len(node.parts):
                    raise UnresolvedPathError(f"part index {arg} out of range")
                node = node.parts[arg - 1]
            else:
                raise UnresolvedPathError(f"cannot resolve '{path.render()}'")
        if not isinstance(node, ChannelVal):
            raise UnresolvedPathError(f"'{path.render()}' does not name a connection")
        return node

    def _unify(self, comp, a, b):
        ra, rb = a.root(), b.root()
        if not T.equivalent(T.connection_of(ra.payload_types),
                            T.connection_of(rb.payload_types)):
            raise UnificationTypeError(
                f"cannot unify connection[{', '.join(t.render() for t in ra.payload_types)}]"
                f" with connection[{', '.join(t.render() for t in rb.payload_types)}]")
        if ra is rb:
            return
        rb.parent = ra
        comp.unify_log.append(rb)

    def decompose(self, target, timeout_steps):
        """Quiesce constituents, undo this composition's unifications, and
        return the labelled views in composition order."""
        if isinstance(target, AnyVal):
            target = target.value
        if isinstance(target, BehaviourState):
            if target.parent is not None:
                raise CompositionError(
                    f"behaviour {target.handle} is inside a composition; "
                    f"decompose the enclosing composite instead")
            self._drain([target], timeout_steps)
            target.detached = True
            self.emit("DECOMPOSE", (target.handle,))
            return self._views([(target.label or "", target)])
        if not isinstance(target, Composite) or target.dissolved:
            raise CompositionError("decompose needs a live composite behaviour")
        self._drain(lambda: self._members_of(target), timeout_steps)
        for chan in reversed(target.unify_log):
            chan.parent = None
        target.unify_log = []
        target.dissolved = True
        self.composites = [c for c in self.composites if c is not target]
        views = []
        for lab, part in zip(target.labels, target.parts):
            part.parent = None
            part.detached = True   # constituents hold state until recomposed
            views.append((lab or "", part))
        for b in self.behaviours:
            if b.parent is target:
                b.parent = None
        self.emit("DECOMPOSE", (target.handle,) + tuple(p.handle for p in target.parts))
        return self._views(views)

    def _drain(self, members, timeout_steps):
        """Run members' internal work only, up to their reduction limits."""
        steps = 0
        refresh = members if callable(members) else (lambda: members)
        while True:
            busy = None
            for b in refresh():
                if b.has_internal_work():
                    busy = b
                    break
            if busy is None:
                return
            if steps >= timeout_steps:
                raise QuiescenceTimeout(
                    f"behaviour {busy.handle} still has enabled internal work "
                    f"after {timeout_steps} steps")
            self.internal_step(busy)
            steps += 1

    def _views(self, labelled):
        views = []
        for lab, part in labelled:
            conns = [inject_any(c) for _, c in getattr(part, "connections", [])]
            views.append(ViewVal(
                ["label", "bhvr", "connections"],
                [lab, part, SeqVal(conns, T.ANY)],
                [T.STRING, T.BEHAVIOUR, T.sequence_of(T.ANY)]))
        return SeqVal(views, T.DECOMPOSE_VIEW)

    def _eval_compose(self, term, env, owner):
        labelled = []
        for label, part_term in zip(term.labels, term.children):
            v = self.eval(part_term, env, owner)
            if isinstance(v, AnyVal):
                v = v.value
            labelled.append((label, v))
        return self.compose(labelled, term.unifications or [])

    # -- top-level statement execution (the workspace's input runner)

    def exec_statement(self, stmt, env):
        """Execute one top-level statement synchronously; behaviours it spawns
        reduce later, under run()."""
        k = stmt.kind
        if k == "value_decl":
            v = self.eval(stmt.children[0], env, None)
            env.define(stmt.name, v)
            return stmt.name, v
        if k in ("send", "receive", "replicate", "choose", "free_clause"):
            self.new_behaviour(stmt, env)
            return None, None
        if k == "assign":
            loc = self.eval(stmt.children[0], env, None)
            v = self.eval(stmt.children[1], env, None)
            if not isinstance(loc, LocationVal):
                raise RuntimeFault("assignment target is not a location")
            loc.content = v
            self.emit("ASSIGN", (0,), render_value(v))
            return None, None
        if k in ("type_decl", "style_decl"):
            return None, None
        v = self.eval(stmt, env, None)
        return None, v
