"""The value store and the entity/representation machinery.

Entities are live language values; representations are hyper-texts — source
segments mixing text with links into the store.  `reify` maps an entity to a
representation (closure-captured values become links), `reflect` maps a
representation back to an entity (shared links reflect to shared entities),
`execute` runs an entity, and `transform` edits a representation while
preserving untouched link identities.
"""

from __future__ import annotations

from .syntax import (LinkSegment, SourceSegmentList, TextSegment, ParseError,
                     Term, free_identifiers, parse, render, substitute_free)
from .typesys import Checker, TypeCheckError, TypeEnv
from .values import (AbstractionVal, AnyVal, ChannelVal, FunctionVal,
                     LocationVal, SeqVal, ViewVal, inject_any, value_type)
from .runtime import BehaviourState, Composite, RuntimeFault

HYPERTEXT_VERSION = 1


class UnknownIdentifier(Exception):
    pass


class NotQuiescent(Exception):
    pass


class ReflectError(Exception):
    def __init__(self, message, phase="runtime", position=None):
        self.phase = phase
        self.position = position
        super().__init__(message)


class EditError(Exception):
    pass


class HyperText:
    """A representation: source segments plus a manifest of link ids.

    Display names in the manifest are for the reader only; stripping them
    does not change what the representation reflects to.
    """

    def __init__(self, source):
        self.source = source

    @property
    def segments(self):
        return self.source.segments

    def manifest(self):
        seen = {}
        for seg in self.segments:
            if isinstance(seg, LinkSegment) and seg.link not in seen:
                seen[seg.link] = seg.display
        return [{"id": i, "d": d} for i, d in seen.items()]

    def link_ids(self):
        return self.source.link_ids()

    def carrier(self):
        return self.source.to_carrier()

    def strip_names(self):
        src = SourceSegmentList()
        for seg in self.segments:
            if isinstance(seg, LinkSegment):
                src.append_link(seg.link, "")
            else:
                src.append_text(seg.text)
        return HyperText(src)

    def to_json(self):
        segs = []
        for seg in self.segments:
            if isinstance(seg, TextSegment):
                segs.append({"t": seg.text})
            else:
                segs.append({"l": seg.link, "d": seg.display})
        return {"version": HYPERTEXT_VERSION, "segments": segs,
                "manifest": self.manifest()}

    @staticmethod
    def from_json(doc):
        if doc.get("version") != HYPERTEXT_VERSION:
            raise ReflectError(f"unsupported hypertext version {doc.get('version')!r}",
                              phase="parse")
        src = SourceSegmentList()
        for seg in doc.get("segments", []):
            if "t" in seg:
                src.append_text(seg["t"])
            elif "l" in seg:
                src.append_link(int(seg["l"]), seg.get("d", ""))
            else:
                raise ReflectError(f"malformed segment {seg!r}", phase="parse")
        return HyperText(src)

    @staticmethod
    def from_carrier(text):
        return HyperText(SourceSegmentList.from_carrier(text))

    def __eq__(self, other):
        return isinstance(other, HyperText) and self.carrier() == other.carrier()

    def __repr__(self):
        return f"HyperText({self.carrier()!r})"


class ValueStore:
    """Live values addressable by link identifier; identifiers are stable and
    never reused while referenced."""

    def __init__(self):
        self.entries = {}
        self.ref_counts = {}
        self.next_id = 1
        self._by_identity = {}
        self._by_scalar = {}

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("_by_identity", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._by_identity = {}
        for vid, v in self.entries.items():
            if not isinstance(v, (bool, int, float, str)):
                self._by_identity[id(v)] = vid

    def intern(self, v):
        """Register a value; the same entity always gets the same identifier."""
        if isinstance(v, (bool, int, float, str)):
            key = (type(v).__name__, v)
            vid = self._by_scalar.get(key)
            if vid is None:
                vid = self._fresh(v)
                self._by_scalar[key] = vid
            return vid
        vid = self._by_identity.get(id(v))
        if vid is not None and self.entries.get(vid) is v:
            return vid
        vid = self._fresh(v)
        self._by_identity[id(v)] = vid
        return vid

    def _fresh(self, v):
        vid = self.next_id
        self.next_id += 1
        self.entries[vid] = v
        return vid

    def get(self, vid):
        if vid not in self.entries:
            raise UnknownIdentifier(f"no value with link identifier #{vid}")
        return self.entries[vid]

    def has(self, vid):
        return vid in self.entries

    def sweep(self, roots):
        """Reachability sweep: keep entries reachable from the roots, rebuild
        reference counts, drop the rest (collects location cycles).  Link
        references inside stored code count as references: hyper-code keeps
        its captured values alive even when nothing else names them."""
        reachable = set()
        counts = {}
        stack = []

        def touch(v):
            if isinstance(v, (bool, int, float, str)):
                key = (type(v).__name__, v)
                vid = self._by_scalar.get(key)
            else:
                vid = self._by_identity.get(id(v))
                if vid is not None and self.entries.get(vid) is not v:
                    vid = None
            if vid is not None:
                counts[vid] = counts.get(vid, 0) + 1
                if vid in reachable:
                    return
                reachable.add(vid)
            stack.append(v)

        def touch_ref(ref):
            if ref in self.entries:
                counts[ref] = counts.get(ref, 0) + 1
                if ref not in reachable:
                    reachable.add(ref)
                    stack.append(self.entries[ref])

        for r in roots:
            touch(r)
        seen_obj = set()
        while stack:
            v = stack.pop()
            if not isinstance(v, (bool, int, float, str)):
                if id(v) in seen_obj:
                    continue
                seen_obj.add(id(v))
            for child in _children_of(v):
                touch(child)
            for ref in _link_refs_of(v):
                touch_ref(ref)
        dead = [vid for vid in self.entries if vid not in reachable]
        for vid in dead:
            v = self.entries.pop(vid)
            if isinstance(v, (bool, int, float, str)):
                self._by_scalar.pop((type(v).__name__, v), None)
            elif self._by_identity.get(id(v)) == vid:
                self._by_identity.pop(id(v), None)
        self.ref_counts = counts
        return dead


def _link_refs_of(v):
    from .syntax import collect_link_refs
    refs = set()
    if isinstance(v, (FunctionVal, AbstractionVal)):
        collect_link_refs(v.body, refs)
    elif isinstance(v, BehaviourState):
        for fr in v.frames:
            for stmt in fr.stmts[fr.idx:]:
                collect_link_refs(stmt, refs)
        for o in v.offers:
            for stmt in o.cont or []:
                collect_link_refs(stmt, refs)
    return refs


def _env_chain_values(env):
    seen = set()
    while env is not None:
        if id(env) in seen:
            break
        seen.add(id(env))
        yield from env.vars.values()
        env = env.parent


def _children_of(v):
    if isinstance(v, LocationVal):
        yield v.content
    elif isinstance(v, ChannelVal):
        if v.parent is not None:
            yield v.parent
    elif isinstance(v, SeqVal):
        yield from v.items
    elif isinstance(v, ViewVal):
        yield from v.values
    elif isinstance(v, AnyVal):
        yield v.value
    elif isinstance(v, (FunctionVal, AbstractionVal)):
        yield from _env_chain_values(v.env)
    elif isinstance(v, BehaviourState):
        for fr in v.frames:
            yield from _env_chain_values(fr.env)
        for o in v.offers:
            yield o.chan
            for p in o.payloads or []:
                yield p
        for _, c in v.connections:
            yield c
        yield from v.exports.values()
    elif isinstance(v, Composite):
        yield from v.parts


class Hypercode:
    """Binds a value store to a runtime and implements the four domain
    operations over entities and representations."""

    def __init__(self, runtime, store=None):
        self.runtime = runtime
        self.store = store or ValueStore()
        self.reflect_count = 0
        runtime.reify_hook = self.reify_value_carrier
        runtime.reflect_hook = self.reflect_carrier_any
        runtime.link_lookup = self.store.get

    # -- reify

    def intern(self, v):
        return self.store.intern(v)

    def reify(self, vid):
        """Entity -> representation.  Code-bearing entities render as their
        (residual) source with links for every captured extant value."""
        v = self.store.get(vid)
        return self.reify_value(v)

    def reify_value(self, v):
        if isinstance(v, (bool, int, float, str)):
            return HyperText(render(Term("literal", value=v)))
        if isinstance(v, (LocationVal, ChannelVal)):
            src = SourceSegmentList()
            src.append_link(self.intern(v), "")
            return HyperText(src)
        if isinstance(v, SeqVal):
            return self._reify_container("sequence", [("", x) for x in v.items],
                                         type_suffix=f"[{v.elem_type.render()}]"
                                         if not v.items else "")
        if isinstance(v, ViewVal):
            return self._reify_container("view", list(zip(v.names, v.values)))
        if isinstance(v, AnyVal):
            inner = self.reify_value(v.value)
            src = SourceSegmentList.from_text("any(")
            src.segments.extend(inner.segments)
            src.append_text(")")
            return HyperText(src)
        if isinstance(v, FunctionVal):
            term = Term("function_lit", [self._linked_body(v.body, v.env,
                                                           [n for n, _ in v.params])],
                        params=_param_syntax(v.params), type_ann=v.result_type)
            return HyperText(render(term))
        if isinstance(v, AbstractionVal):
            term = Term("abstraction_lit", [self._linked_body(v.body, v.env,
                                                              [n for n, _ in v.params])],
                        params=_param_syntax(v.params), style_tag=v.style_tag)
            return HyperText(render(term))
        if isinstance(v, BehaviourState):
            if not v.at_reduction_limit():
                raise NotQuiescent(f"behaviour {v.handle} is running; reify needs "
                                   f"a behaviour at its reduction limit")
            residual = v.residual_term()
            env = v.current_env()
            return HyperText(render(self._linked_body(residual, env, [])))
        if isinstance(v, Composite):
            src = SourceSegmentList.from_text("compose {\n  ")
            for i, (label, part) in enumerate(zip(v.labels, v.parts)):
                if i:
                    src.append_text(" and\n  ")
                if label:
                    src.append_text(f"{label} as ")
                src.append_link(self.intern(part), label or "")
            if v.unify_paths:
                pairs = ",\n    ".join(f"{a.render()} unifies {b.render()}"
                                       for a, b in v.unify_paths)
                src.append_text("\n  where {\n    " + pairs + "\n  }")
            src.append_text("\n}")
            return HyperText(src)
        raise RuntimeFault(f"cannot reify {v!r}")

    def _reify_container(self, ctor, named_items, type_suffix=""):
        src = SourceSegmentList.from_text(ctor + type_suffix + "(")
        for i, (name, item) in enumerate(named_items):
            if i:
                src.append_text(", ")
            if name:
                src.append_text(f"{name} = ")
            if isinstance(item, (bool, int, float, str)):
                src.segments.extend(self.reify_value(item).segments)
            else:
                src.append_link(self.intern(item), "")
        src.append_text(")")
        return HyperText(src)

    def _linked_body(self, body, env, bound_params):
        """Replace free identifiers that resolve in the closure environment
        with links to the (interned) captured values."""
        mapping = {}
        for name in free_identifiers(body):
            if name in bound_params or env is None:
                continue
            try:
                captured = env.lookup(name)
            except KeyError:
                continue
            mapping[name] = (self.intern(captured), name)
        return substitute_free(body, mapping)

    def reify_value_carrier(self, v):
        return self.reify_value(v).carrier()

    # -- reflect

    def reflect(self, ht, type_env=None, styles=None):
        """Representation -> entity: parse, check (links typed by their stored
        values), evaluate, intern.  Shared links become shared entities."""
        entity = self.reflect_value(ht, type_env, styles)
        return self.intern(entity)

    def reflect_value(self, ht, type_env=None, styles=None):
        self.reflect_count += 1
        try:
            program = parse(ht.source)
        except ParseError as e:
            raise ReflectError(str(e), phase="parse", position=e.offset)
        exprs = [s for s in program.children]
        if len(exprs) != 1:
            raise ReflectError("a representation reflects as a single expression",
                               phase="parse")
        expr = exprs[0]
        if expr.kind in ("value_decl", "type_decl", "style_decl", "assign",
                         "send", "receive", "free_clause"):
            raise ReflectError(f"a representation reflects as a single expression, "
                               f"not a {expr.kind}", phase="parse")

        def link_type(ref):
            if not self.store.has(ref):
                return None
            return value_type(self.store.get(ref))

        checker = Checker(styles=styles, link_type=link_type)
        try:
            checker.check(expr, (type_env or TypeEnv()).child(), "bhv")
        except TypeCheckError as e:
            raise ReflectError(str(e), phase="type", position=e.offset)
        from .values import Env
        return self.runtime.eval(expr, Env())

    def reflect_carrier_any(self, carrier):
        v = self.reflect_value(HyperText.from_carrier(carrier))
        return inject_any(v)

    # -- execute

    def execute(self, vid):
        """Run an entity: instantiate a nullary abstraction, evaluate a nullary
        function, resume a behaviour; returns the result's identifier."""
        v = self.store.get(vid)
        if isinstance(v, AbstractionVal):
            if v.params:
                raise RuntimeFault("execute needs a nullary abstraction")
            return self.intern(self.runtime.instantiate(v, []))
        if isinstance(v, FunctionVal):
            if v.params:
                raise RuntimeFault("execute needs a nullary function")
            result = self.runtime._eval_block_expr(v.body, v.env, None)
            return self.intern(result)
        if isinstance(v, (BehaviourState, Composite)):
            v.detached = False   # resume-if-detached; otherwise a no-op
            return vid
        raise RuntimeFault(f"entity #{vid} is not executable")

    # -- transform

    def transform(self, ht, edits):
        return transform(ht, edits)


def transform(ht, edits):
    """Apply a segment/range edit script; untouched link identifiers are
    preserved verbatim."""
    segs = [TextSegment(s.text) if isinstance(s, TextSegment)
            else LinkSegment(s.link, s.display) for s in ht.segments]
    for edit in edits:
        op = edit[0]
        if op == "replaceTextRange":
            _, idx, start, end, new = edit
            seg = _text_seg(segs, idx)
            if not (0 <= start <= end <= len(seg.text)):
                raise EditError(f"range {start}:{end} out of bounds for "
                                f"segment {idx}")
            seg.text = seg.text[:start] + new + seg.text[end:]
        elif op == "removeSegment":
            _, idx = edit
            if not (0 <= idx < len(segs)):
                raise EditError(f"segment index {idx} out of bounds")
            del segs[idx]
        elif op == "insertLink":
            _, idx, pos, link_id, display = edit
            seg = _text_seg(segs, idx)
            if not (0 <= pos <= len(seg.text)):
                raise EditError(f"position {pos} out of bounds for segment {idx}")
            before, after = seg.text[:pos], seg.text[pos:]
            repl = [TextSegment(before), LinkSegment(link_id, display),
                    TextSegment(after)]
            segs[idx:idx + 1] = [s for s in repl
                                 if not (isinstance(s, TextSegment) and not s.text)]
        else:
            raise EditError(f"unknown edit operation {op!r}")
    src = SourceSegmentList()
    for s in segs:
        if isinstance(s, TextSegment):
            src.append_text(s.text)
        else:
            src.append_link(s.link, s.display)
    return HyperText(src)


def _text_seg(segs, idx):
    if not (0 <= idx < len(segs)):
        raise EditError(f"segment index {idx} out of bounds")
    seg = segs[idx]
    if not isinstance(seg, TextSegment):
        raise EditError(f"segment {idx} is a link, not text")
    return seg


def _param_syntax(params):
    from .syntax import Param
    return [Param(name, t) for name, t in params]
