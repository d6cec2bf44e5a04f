"""The persistent workspace: named bindings over a value store, script and
REPL evaluation, and snapshot persistence.

Evaluation is transactional per input: a failed input leaves bindings, store
and scheduler exactly as they were.  Snapshots require quiescence and store
every value through its hyper-text representation plus scheduler metadata, so
a reloaded workspace continues with an identical trace.
"""

from __future__ import annotations

import hashlib
import json
import pickle
import sys

from . import styles as ST
from .hypercode import Hypercode, HyperText, NotQuiescent, ReflectError
from .runtime import (BehaviourState, Composite, CompositionError,
                      QuiescenceTimeout, Runtime, RuntimeFault,
                      UnificationTypeError, UnresolvedPathError)
from .syntax import (ParseError, Parser, SourceSegmentList, Term, parse,
                     render, tokenize, _render_style_decl)
from .typesys import Checker, TypeCheckError, TypeEnv, resolve_type
from .values import (AbstractionVal, AnyVal, ChannelVal, Env, FunctionVal,
                     LocationVal, ProjectionError, SeqVal, ViewVal,
                     render_value, value_type)

SNAPSHOT_MAGIC = "EVOARCH-SNAP 1"


class EvalError(Exception):
    def __init__(self, phase, message, position=None):
        self.phase = phase          # parse | type | runtime
        self.message = message
        self.position = position
        super().__init__(f"{phase} error: {message}")


class SnapshotError(Exception):
    pass


class EvalResult:
    def __init__(self, new_bindings, rendered_value, events, status):
        self.new_bindings = new_bindings    # name -> (id, type rendering, value rendering)
        self.rendered_value = rendered_value
        self.events = events
        self.status = status                # quiescent | budget

    def summary(self):
        return f"{len(self.events)} events, {self.status}"


class Workspace:
    """One serialized command stream over one runtime, store and binding table."""

    def __init__(self, seed=0, step_budget=1_000_000):
        self.seed = seed
        self.step_budget = step_budget
        self.runtime = Runtime(seed)
        self.runtime.default_timeout = step_budget
        self.hypercode = Hypercode(self.runtime)
        self.store = self.hypercode.store
        self.env = Env()
        self.bindings = {}              # name -> value link identifier
        self.aliases = {}               # type aliases
        self.styles = ST.StyleRegistry()
        self.style_sources = []
        self.eval_count = 0

    # -- typing plumbing

    def type_env(self):
        env = TypeEnv()
        for name, vid in self.bindings.items():
            env.define(name, value_type(self.store.get(vid)))
        for name, t in self.aliases.items():
            env.define_alias(name, t)
        return env

    def checker(self):
        known = {name: s.extends for name, s in self.styles.styles.items()}
        return Checker(styles=known,
                       link_type=lambda ref: (value_type(self.store.get(ref))
                                              if self.store.has(ref) else None))

    def lookup(self, name):
        if name not in self.bindings:
            raise KeyError(name)
        return self.store.get(self.bindings[name])

    # -- evaluation

    def eval_source(self, src, budget=None):
        """Parse, check and run one input; transactional on failure."""
        if isinstance(src, str):
            src = SourceSegmentList.from_carrier(src)
        checkpoint = self._checkpoint()
        mark = len(self.runtime.events)
        evo_mark = self._evolution_mark()
        try:
            return self._eval_inner(src, budget, mark, evo_mark)
        except ParseError as e:
            self._restore(checkpoint, mark)
            raise EvalError("parse", str(e), e.offset)
        except TypeCheckError as e:
            self._restore(checkpoint, mark)
            raise EvalError("type", e.message, e.offset)
        except (RuntimeFault, UnificationTypeError, UnresolvedPathError,
                CompositionError, ProjectionError, ReflectError, NotQuiescent,
                QuiescenceTimeout) as e:
            self._restore(checkpoint, mark)
            raise EvalError("runtime", str(e))

    def _eval_inner(self, src, budget, mark, evo_mark):
        program = parse(src)
        tenv = self.type_env()
        self.checker().check_program(program, tenv)
        new_bindings = {}
        rendered = None
        for stmt in program.children:
            if stmt.kind == "style_decl":
                self.styles.register(stmt)
                self.style_sources.append(_render_style_decl(stmt))
                continue
            if stmt.kind == "type_decl":
                self.aliases[stmt.name] = resolve_type(stmt.type_ann, dict(self.aliases))
                continue
            name, v = self.runtime.exec_statement(stmt, self.env)
            if name is not None:
                vid = self.store.intern(self.env.lookup(name))
                self.bindings[name] = vid
                new_bindings[name] = (vid, value_type(self.env.lookup(name)).render(),
                                      render_value(self.env.lookup(name)))
                rendered = new_bindings[name][2]
            elif v is not None:
                rendered = render_value(v)
        status, _ = self.runtime.run(self.step_budget if budget is None else budget)
        if self._evolution_mark() != evo_mark:
            self._check_styles_after_evolution()
        self.eval_count += 1
        return EvalResult(new_bindings, rendered,
                          self.runtime.events[mark:], status)

    def _evolution_mark(self):
        n = sum(1 for e in self.runtime.events if e.kind in ("COMPOSE", "DECOMPOSE"))
        return (n, getattr(self.hypercode, "reflect_count", 0))

    def _check_styles_after_evolution(self):
        """Constraint checking runs automatically after compose/decompose/
        reflect; it reports violations as trace events and never blocks."""
        for comp in self.runtime.composites:
            if comp.dissolved:
                continue
            snap = ST.snapshot(self.runtime, comp)
            for style in self.styles.styles.values():
                if not style.blocks:
                    continue
                report = ST.check_constraints(style, snap)
                for violation in report.violations:
                    self.runtime.emit("CONSTRAINT_VIOLATION",
                                      (comp.handle, style.name), violation.line())

    # -- transactional checkpointing (in-process rollback, not persistence)

    def _state_refs(self):
        return (self.runtime, self.store, self.env, self.bindings, self.aliases,
                self.styles, self.style_sources)

    def _checkpoint(self):
        return pickle.dumps(self._state_refs(), protocol=pickle.HIGHEST_PROTOCOL)

    def _restore(self, blob, mark):
        (self.runtime, self.store, self.env, self.bindings, self.aliases,
         self.styles, self.style_sources) = pickle.loads(blob)
        self.runtime.default_timeout = self.step_budget
        self.hypercode = Hypercode(self.runtime, self.store)
        del self.runtime.events[mark:]

    def fingerprint(self):
        """Stable digest of bindings, store and scheduler state."""
        return hashlib.sha256(self._checkpoint()).hexdigest()

    # -- style checking on demand

    def check_style(self, style_name, target):
        style = self.styles.get(style_name)
        snap = ST.snapshot(self.runtime, target)
        return ST.check_constraints(style, snap)

    # -- garbage collection

    def sweep(self):
        """Reachability sweep with bindings, live behaviours and composites as
        roots; drops collected store entries and unreachable terminated
        behaviours."""
        roots = [self.store.get(vid) for vid in self.bindings.values()]
        roots += [b for b in self.runtime.behaviours if not b.terminated]
        roots += [c for c in self.runtime.composites if not c.dissolved]
        roots += list(_env_values(self.env))
        dead = self.store.sweep(roots)
        self.runtime.behaviours = [
            b for b in self.runtime.behaviours
            if not b.terminated or self.store._by_identity.get(id(b)) is not None]
        self.runtime.channels = [
            c for c in self.runtime.channels
            if self.store._by_identity.get(id(c)) is not None]
        return dead

    # -- snapshots ----------------------------------------------------------

    def save_snapshot(self, path):
        if not self.runtime.is_quiescent():
            raise NotQuiescent("snapshot requires a quiescent system "
                               "(every behaviour at its reduction limit)")
        self.sweep()
        doc = _Saver(self).build()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(SNAPSHOT_MAGIC + "\n")
            json.dump(doc, fh)

    @staticmethod
    def load_snapshot(path):
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header != SNAPSHOT_MAGIC:
                raise SnapshotError(f"not a snapshot file (header {header!r})")
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as e:
                raise SnapshotError(f"corrupt snapshot: {e}")
        return _Loader(doc).build()

    # -- REPL ---------------------------------------------------------------

    def repl(self, stdin=None, stdout=None, prompts=True):
        run_repl(self, stdin or sys.stdin, stdout or sys.stdout, prompts)


def _env_values(env):
    seen = set()
    while env is not None and id(env) not in seen:
        seen.add(id(env))
        yield from env.vars.values()
        env = env.parent


# ---------------------------------------------------------------------------
# Snapshot codec

def _type_str(t):
    return t.render()


def _parse_type_str(s):
    p = Parser(tokenize(s))
    te = p.parse_type()
    return resolve_type(te)


def _term_doc(term):
    return HyperText(render(term)).to_json()


def _parse_doc(doc):
    return parse(HyperText.from_json(doc).source)


class _Saver:
    def __init__(self, ws):
        self.ws = ws
        self.records = {}
        self.envs = {}
        self.env_ids = {}
        self.pending = []

    def vref(self, v):
        vid = self.ws.store.intern(v)
        if vid not in self.records:
            self.records[vid] = None     # reserve against cycles
            self.pending.append((vid, v))
        return vid

    def eref(self, env):
        eid = self.env_ids.get(id(env))
        if eid is None:
            eid = len(self.env_ids) + 1
            self.env_ids[id(env)] = eid
            self.envs[eid] = env
        return eid

    def _keep_linked(self, v):
        """Hyper-code links inside stored code keep their targets in the
        snapshot even when nothing else references them."""
        from .hypercode import _link_refs_of
        for ref in _link_refs_of(v):
            if self.ws.store.has(ref):
                self.vref(self.ws.store.get(ref))

    def build(self):
        ws = self.ws
        rt = ws.runtime
        for vid in ws.bindings.values():
            self.vref(ws.store.get(vid))
        behaviours = [self.vref(b) for b in rt.behaviours]
        channels = [self.vref(c) for c in rt.channels]
        composites = [self.vref(c) for c in rt.composites if not c.dissolved]
        self.eref(ws.env)
        while self.pending:
            vid, v = self.pending.pop()
            self.records[vid] = self.record(v)
        env_docs = {}
        done = set()
        while len(done) < len(self.envs):
            for eid, env in list(self.envs.items()):
                if eid in done:
                    continue
                done.add(eid)
                parent = self.eref(env.parent) if env.parent is not None else None
                env_docs[str(eid)] = {
                    "parent": parent,
                    "vars": {n: self.vref(v) for n, v in env.vars.items()},
                }
                while self.pending:
                    vid, v = self.pending.pop()
                    self.records[vid] = self.record(v)
        return {
            "version": 1,
            "seed": ws.seed,
            "budget": ws.step_budget,
            "rng": _rng_to_json(rt.rng.getstate()),
            "counters": {
                "behaviour": rt.behaviour_counter,
                "composite": rt.composite_counter,
                "channel": rt.chan_counter,
                "step": rt.step_no,
                "store_next": ws.store.next_id,
            },
            "values": {str(k): r for k, r in self.records.items()},
            "envs": env_docs,
            "workspace_env": self.eref(ws.env),
            "behaviours": behaviours,
            "channels": channels,
            "composites": composites,
            "bindings": dict(ws.bindings),
            "aliases": {n: _type_str(t) for n, t in ws.aliases.items()},
            "styles": list(ws.style_sources),
        }

    def record(self, v):
        if isinstance(v, bool):
            return {"k": "bool", "v": v}
        if isinstance(v, int):
            return {"k": "int", "v": v}
        if isinstance(v, float):
            return {"k": "real", "v": v}
        if isinstance(v, str):
            return {"k": "str", "v": v}
        if isinstance(v, LocationVal):
            return {"k": "loc", "content": self.vref(v.content),
                    "type": _type_str(v.content_type)}
        if isinstance(v, ChannelVal):
            return {"k": "chan", "cid": v.id,
                    "payload": [_type_str(t) for t in v.payload_types],
                    "parent": self.vref(v.parent) if v.parent is not None else None,
                    "tag": v.style_tag}
        if isinstance(v, SeqVal):
            return {"k": "seq", "items": [self.vref(x) for x in v.items],
                    "elem": _type_str(v.elem_type)}
        if isinstance(v, ViewVal):
            return {"k": "view", "names": list(v.names),
                    "values": [self.vref(x) for x in v.values],
                    "types": [_type_str(t) for t in v.types]}
        if isinstance(v, AnyVal):
            return {"k": "any", "value": self.vref(v.value),
                    "type": _type_str(v.typ)}
        if isinstance(v, FunctionVal):
            self._keep_linked(v)
            return {"k": "fun",
                    "params": [[n, _type_str(t)] for n, t in v.params],
                    "result": _type_str(v.result_type),
                    "body": _term_doc(v.body), "env": self.eref(v.env)}
        if isinstance(v, AbstractionVal):
            self._keep_linked(v)
            return {"k": "abs",
                    "params": [[n, _type_str(t)] for n, t in v.params],
                    "body": _term_doc(v.body), "env": self.eref(v.env),
                    "tag": v.style_tag}
        if isinstance(v, BehaviourState):
            self._keep_linked(v)
            residual = v.residual_term()
            env = v.current_env()
            return {"k": "bhv", "handle": v.handle, "label": v.label,
                    "tag": v.style_tag,
                    "parent": self.vref(v.parent) if v.parent is not None else None,
                    "terminated": v.terminated, "detached": v.detached,
                    "residual": _term_doc(residual),
                    "env": self.eref(env) if env is not None else None,
                    "interface": bool(v.frames and v.frames[0].interface),
                    "connections": [[n, self.vref(c)] for n, c in v.connections],
                    "exports": {n: self.vref(x) for n, x in v.exports.items()}}
        if isinstance(v, Composite):
            return {"k": "comp", "handle": v.handle,
                    "labels": list(v.labels),
                    "parts": [self.vref(p) for p in v.parts],
                    "unify": [self.vref(c) for c in v.unify_log],
                    "paths": [[a.render(), b.render()] for a, b in v.unify_paths],
                    "dissolved": v.dissolved, "detached": v.detached}
        raise SnapshotError(f"cannot serialize value {v!r}")


def _rng_to_json(state):
    version, internal, gauss = state
    return [version, list(internal), gauss]


def _rng_from_json(doc):
    version, internal, gauss = doc
    return (version, tuple(internal), gauss)


class _Loader:
    def __init__(self, doc):
        if doc.get("version") != 1:
            raise SnapshotError(f"unsupported snapshot version {doc.get('version')!r}")
        self.doc = doc
        self.values = {}
        self.envs = {}

    def build(self):
        doc = self.doc
        ws = Workspace(seed=doc["seed"], step_budget=doc["budget"])
        rt = ws.runtime
        try:
            self._build_envs(doc["envs"])
            self._build_values(doc["values"], rt)
            self._wire(doc["values"], doc["envs"])
        except (KeyError, ValueError, TypeCheckError, ParseError) as e:
            raise SnapshotError(f"corrupt snapshot: {e}")
        rt.behaviours = [self.values[v] for v in doc["behaviours"]]
        rt.channels = [self.values[v] for v in doc["channels"]]
        rt.composites = [self.values[v] for v in doc["composites"]]
        ws.env = self.envs[doc["workspace_env"]]
        ws.store.entries = {int(k): self.values[int(k)] for k in doc["values"]}
        ws.store.next_id = doc["counters"]["store_next"]
        ws.store._by_scalar = {}
        ws.store._by_identity = {}
        for vid, v in ws.store.entries.items():
            if isinstance(v, (bool, int, float, str)):
                ws.store._by_scalar.setdefault((type(v).__name__, v), vid)
            else:
                ws.store._by_identity[id(v)] = vid
        ws.bindings = dict(doc["bindings"])
        ws.aliases = {n: _parse_type_str(s) for n, s in doc["aliases"].items()}
        for src in doc["styles"]:
            program = parse(src)
            for stmt in program.children:
                ws.styles.register(stmt)
            ws.style_sources.append(src)
        self._typecheck(ws)
        rt.behaviour_counter = doc["counters"]["behaviour"]
        rt.composite_counter = doc["counters"]["composite"]
        rt.chan_counter = doc["counters"]["channel"]
        # re-poise silently: channels and payloads re-evaluate to the saved
        # values, and the step counter resumes where the save left off
        saved_events = rt.events
        rt.events = []
        rt._drain(lambda: [b for b in rt.behaviours if not b.terminated],
                  10_000_000)
        rt.events = saved_events
        rt.step_no = doc["counters"]["step"]
        rt.rng.setstate(_rng_from_json(doc["rng"]))
        return ws

    def _build_envs(self, env_docs):
        for eid in env_docs:
            self.envs[int(eid)] = Env()

    def _build_values(self, records, rt):
        from .runtime import Frame
        for key, rec in records.items():
            vid = int(key)
            k = rec["k"]
            if k in ("bool", "int", "real", "str"):
                self.values[vid] = rec["v"]
            elif k == "loc":
                self.values[vid] = LocationVal(None, _parse_type_str(rec["type"]))
            elif k == "chan":
                self.values[vid] = ChannelVal(
                    rec["cid"], [_parse_type_str(s) for s in rec["payload"]],
                    rec.get("tag"))
            elif k == "seq":
                self.values[vid] = SeqVal([], _parse_type_str(rec["elem"]))
            elif k == "view":
                self.values[vid] = ViewVal(list(rec["names"]), [],
                                           [_parse_type_str(s) for s in rec["types"]])
            elif k == "any":
                self.values[vid] = AnyVal(None, _parse_type_str(rec["type"]))
            elif k == "fun":
                self.values[vid] = FunctionVal(
                    [(n, _parse_type_str(s)) for n, s in rec["params"]],
                    _parse_type_str(rec["result"]),
                    _parse_doc(rec["body"]), None)
            elif k == "abs":
                self.values[vid] = AbstractionVal(
                    [(n, _parse_type_str(s)) for n, s in rec["params"]],
                    _parse_doc(rec["body"]), None, rec.get("tag"))
            elif k == "bhv":
                residual = _parse_doc(rec["residual"])
                b = BehaviourState(rt, rec["handle"], [], rec.get("label"),
                                   rec.get("tag"))
                b.terminated = rec["terminated"]
                b.detached = rec.get("detached", False)
                if not b.terminated:
                    b.frames = [Frame(None, list(residual.children),
                                      interface=rec.get("interface", False))]
                self.values[vid] = b
            elif k == "comp":
                c = Composite(rec["handle"], list(rec["labels"]), [])
                c.dissolved = rec["dissolved"]
                c.detached = rec.get("detached", False)
                from .syntax import parse_path
                c.unify_paths = [(parse_path(a), parse_path(b))
                                 for a, b in rec.get("paths", [])]
                self.values[vid] = c
            else:
                raise SnapshotError(f"unknown value kind {k!r}")

    def _wire(self, records, env_docs):
        for eid, rec in env_docs.items():
            env = self.envs[int(eid)]
            if rec["parent"] is not None:
                env.parent = self.envs[rec["parent"]]
            for name, vid in rec["vars"].items():
                env.vars[name] = self.values[vid]
        for key, rec in records.items():
            vid = int(key)
            v = self.values[vid]
            k = rec["k"]
            if k == "loc":
                v.content = self.values[rec["content"]]
            elif k == "chan":
                if rec["parent"] is not None:
                    v.parent = self.values[rec["parent"]]
            elif k == "seq":
                v.items = [self.values[i] for i in rec["items"]]
            elif k == "view":
                v.values = [self.values[i] for i in rec["values"]]
            elif k == "any":
                v.value = self.values[rec["value"]]
            elif k in ("fun", "abs"):
                v.env = self.envs[rec["env"]]
            elif k == "bhv":
                if v.frames and rec["env"] is not None:
                    v.frames[0].env = self.envs[rec["env"]]
                if rec["parent"] is not None:
                    v.parent = self.values[rec["parent"]]
                v.connections = [(n, self.values[c]) for n, c in rec["connections"]]
                v.exports = {n: self.values[x] for n, x in rec["exports"].items()}
            elif k == "comp":
                v.parts = [self.values[p] for p in rec["parts"]]
                v.unify_log = [self.values[c] for c in rec["unify"]]

    def _typecheck(self, ws):
        """Reloaded hyper-code must parse and type-check before it runs."""
        checker = ws.checker()
        for v in self.values.values():
            try:
                if isinstance(v, FunctionVal):
                    env = _type_env_of(v.env, ws)
                    for n, t in v.params:
                        env.define(n, t)
                    checker.check(v.body, env, "expr")
                elif isinstance(v, AbstractionVal):
                    env = _type_env_of(v.env, ws)
                    for n, t in v.params:
                        env.define(n, t)
                    checker.check(v.body, env, "bhv")
                elif isinstance(v, BehaviourState) and v.frames:
                    env = _type_env_of(v.frames[0].env, ws)
                    block = Term("block", list(v.frames[0].stmts))
                    checker.check(block, env, "bhv")
            except TypeCheckError as e:
                raise SnapshotError(f"snapshot fails to re-check: {e}")


def _type_env_of(env, ws):
    chain = []
    e = env
    while e is not None:
        chain.append(e)
        e = e.parent
    tenv = TypeEnv()
    for name, t in ws.aliases.items():
        tenv.define_alias(name, t)
    for e in reversed(chain):
        for name, v in e.vars.items():
            tenv.define(name, value_type(v))
    return tenv


# ---------------------------------------------------------------------------
# REPL

LINK_RE_UNDERLINE = ("\x1b[4m", "\x1b[0m")


def _decorate_links(text, tty):
    if not tty:
        return text
    out = []
    for ch in text:
        if ch == "⟦":
            out.append(LINK_RE_UNDERLINE[0] + ch)
        elif ch == "⟧":
            out.append(ch + LINK_RE_UNDERLINE[1])
        else:
            out.append(ch)
    return "".join(out)


def _balanced(text):
    depth = 0
    in_string = False
    in_comment = False
    skip = False
    for ch in text:
        if skip:
            skip = False
            continue
        if in_comment:
            if ch == "\n":
                in_comment = False
            continue
        if in_string:
            if ch == "\\":
                skip = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "!":
            in_comment = True
        elif ch in "({[":
            depth += 1
        elif ch in ")}]":
            depth -= 1
    return depth <= 0 and not in_string


def run_repl(ws, stdin, stdout, prompts=True):
    tty = hasattr(stdout, "isatty") and stdout.isatty()

    def out(text=""):
        stdout.write(text + "\n")
        stdout.flush()

    def prompt(cont):
        if prompts:
            stdout.write("... " if cont else "evoarch> ")
            stdout.flush()

    pending = []
    prompt(False)
    for raw in stdin:
        line = raw.rstrip("\n")
        if not pending and line.startswith(":"):
            if not _meta_command(ws, line, out, tty):
                return
            prompt(False)
            continue
        pending.append(line)
        text = "\n".join(pending)
        complete = text.strip() and _balanced(text) and \
            (line.strip().endswith(";") or not line.strip())
        if not complete:
            prompt(bool(text.strip()))
            continue
        pending = []
        _evaluate_input(ws, text, out, tty)
        prompt(False)
    if pending and "\n".join(pending).strip():
        _evaluate_input(ws, "\n".join(pending), out, tty)


def _evaluate_input(ws, text, out, tty):
    try:
        result = ws.eval_source(text)
    except EvalError as e:
        out(f"error ({e.phase}): {e.message}")
        return
    for name, (vid, ty, rendered) in result.new_bindings.items():
        out(f"value {name} : {ty} = {_decorate_links(rendered, tty)}")
    if not result.new_bindings and result.rendered_value is not None:
        out(_decorate_links(result.rendered_value, tty))
    out(f"-- {result.summary()}")


def _meta_command(ws, line, out, tty):
    parts = line.split(None, 1)
    cmd, arg = parts[0], (parts[1].strip() if len(parts) > 1 else "")
    if cmd in (":quit", ":q", ":exit"):
        return False
    if cmd == ":bindings":
        if not ws.bindings:
            out("(no bindings)")
        for name, vid in ws.bindings.items():
            out(f"{name} : {value_type(ws.store.get(vid)).render()} = #{vid}")
        return True
    if cmd == ":behaviours":
        live = [b for b in ws.runtime.behaviours]
        if not live:
            out("(no behaviours)")
        for b in live:
            conns = ", ".join(n for n, _ in b.connections)
            label = b.label or "-"
            extra = " detached" if b.is_suspended() else ""
            out(f"{b.handle} label={label} status={b.status}{extra} "
                f"connections=[{conns}]")
        return True
    if cmd == ":reify":
        try:
            v = ws.lookup(arg)
            ht = ws.hypercode.reify_value(v)
            out(_decorate_links(ht.carrier(), tty))
        except (KeyError, NotQuiescent, RuntimeFault) as e:
            out(f"error: cannot reify '{arg}': {e}")
        return True
    if cmd == ":seed":
        try:
            ws.seed = int(arg)
            ws.runtime.rng.seed(ws.seed)
            out(f"seed set to {ws.seed}")
        except ValueError:
            out("usage: :seed N")
        return True
    if cmd == ":save":
        try:
            ws.save_snapshot(arg)
            out(f"saved {arg}")
        except (NotQuiescent, OSError, SnapshotError) as e:
            out(f"error: {e}")
        return True
    if cmd == ":load":
        try:
            loaded = Workspace.load_snapshot(arg)
        except (OSError, SnapshotError) as e:
            out(f"error: {e}")
            return True
        ws.__dict__.update(loaded.__dict__)
        out(f"loaded {arg}")
        return True
    if cmd == ":trace":
        n = int(arg) if arg else 10
        for e in ws.runtime.events[-n:]:
            out(e.line())
        return True
    out(f"unknown command {cmd}; try :bindings :behaviours :reify :seed "
        f":save :load :trace :quit")
    return True
