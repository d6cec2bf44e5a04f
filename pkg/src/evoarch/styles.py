"""Architectural styles: tagged families of components/connectors with
structural constraints checked over topology snapshots of running systems.

A snapshot is immutable: components are a composite's constituent behaviours,
connectors are the canonical (post-unification) channel groups attached to
them.  `connected(a, b)` holds when some connector is attached to both ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import Attached, Connected, FBin, FNot, InStyle, Quant, render_formula
from .runtime import BehaviourState, Composite


class StyleRegistryError(Exception):
    pass


@dataclass
class StyleDef:
    name: str
    extends: str                      # Component | Connector | Style
    blocks: list = field(default_factory=list)     # ConstraintBlock list
    analyses: dict = field(default_factory=dict)   # name -> AnalysisDef


@dataclass
class TopologySnapshot:
    components: list                  # [(handle, frozenset(tags))]
    connectors: list                  # [(channel id, frozenset(tags))]
    attachments: frozenset            # {(handle, channel id)}


@dataclass
class Violation:
    formula: str
    witness: dict

    def line(self):
        if not self.witness:
            return self.formula
        binds = ", ".join(f"{k}={v}" for k, v in sorted(self.witness.items()))
        return f"{self.formula} [{binds}]"


@dataclass
class ConformanceReport:
    style: str
    violations: list

    @property
    def ok(self):
        return not self.violations


class StyleRegistry:
    def __init__(self):
        self.styles = {}

    def register(self, term):
        """Register a style declaration term (and its element styles)."""
        if term.name in self.styles:
            raise StyleRegistryError(f"style '{term.name}' is already registered")
        body = term.style_body
        style = StyleDef(term.name, term.extends or "Style")
        if body is not None:
            style.blocks = list(body.blocks)
            style.analyses = {a.name: a for a in body.analyses}
            for element in body.elements:
                self.register(element)
        self.styles[term.name] = style
        return style

    def get(self, name):
        if name not in self.styles:
            raise StyleRegistryError(f"unknown style '{name}'")
        return self.styles[name]

    def names(self):
        return set(self.styles)


def snapshot(runtime, composite):
    """Immutable topology of a live composite; never mutates runtime state."""
    if isinstance(composite, Composite) and composite.dissolved:
        raise StyleRegistryError("snapshot of a decomposed composite")
    if isinstance(composite, BehaviourState):
        parts = [composite]
    else:
        parts = list(composite.parts)
    components = []
    attachments = set()
    roots = {}
    for part in parts:
        tags = frozenset({part.style_tag} if getattr(part, "style_tag", None) else set())
        components.append((part.handle, tags))
        for _, chan in getattr(part, "connections", []):
            root = chan.root()
            roots.setdefault(root.id, root)
            attachments.add((part.handle, root.id))
    connectors = []
    for rid, root in sorted(roots.items()):
        tags = set()
        for chan in runtime.channels:
            if chan.root() is root and chan.style_tag:
                tags.add(chan.style_tag)
        connectors.append((rid, frozenset(tags)))
    return TopologySnapshot(components, connectors, frozenset(attachments))


def _domain(snap, name):
    if name == "components":
        return snap.components
    if name == "connectors":
        return snap.connectors
    raise StyleRegistryError(f"unknown constraint domain '{name}'")


def _eval(f, env, snap, default_domain):
    if isinstance(f, Quant):
        dom = _domain(snap, f.domain or default_domain)
        combos = _bindings(dom, len(f.vars))
        if f.kind == "forall":
            return all(_eval(f.body, {**env, **dict(zip(f.vars, c))}, snap,
                             default_domain) for c in combos)
        return any(_eval(f.body, {**env, **dict(zip(f.vars, c))}, snap,
                         default_domain) for c in combos)
    if isinstance(f, FNot):
        return not _eval(f.body, env, snap, default_domain)
    if isinstance(f, FBin):
        a = _eval(f.left, env, snap, default_domain)
        if f.op == "and":
            return a and _eval(f.right, env, snap, default_domain)
        if f.op == "or":
            return a or _eval(f.right, env, snap, default_domain)
        return (not a) or _eval(f.right, env, snap, default_domain)
    if isinstance(f, InStyle):
        _, tags = env[f.var]
        return f.style in tags
    if isinstance(f, Connected):
        a, _ = env[f.left]
        b, _ = env[f.right]
        if a == b:
            return False
        for cid, _ in snap.connectors:
            if (a, cid) in snap.attachments and (b, cid) in snap.attachments:
                return True
        return False
    if isinstance(f, Attached):
        a, _ = env[f.left]
        c, _ = env[f.right]
        return (a, c) in snap.attachments
    raise StyleRegistryError(f"unknown formula node {f!r}")


def _bindings(domain, n):
    if n == 0:
        return [()]
    out = [()]
    for _ in range(n):
        out = [c + (e,) for c in out for e in domain]
    return out


def check_constraints(style, snap):
    """Evaluate a style's constraint blocks over a snapshot; violations carry
    witness bindings for failed universal formulas."""
    violations = []
    for block in style.blocks:
        for formula in block.formulas:
            if _eval(formula, {}, snap, block.domain):
                continue
            witnesses = _witnesses(formula, snap, block.domain)
            if witnesses:
                for w in witnesses:
                    violations.append(Violation(render_formula(formula), w))
            else:
                violations.append(Violation(render_formula(formula), {}))
    return ConformanceReport(style.name, violations)


def _witnesses(formula, snap, default_domain):
    """Counterexample bindings for a failed top-level universal formula."""
    if not isinstance(formula, Quant) or formula.kind != "forall":
        return []
    dom = _domain(snap, formula.domain or default_domain)
    out = []
    for combo in _bindings(dom, len(formula.vars)):
        env = dict(zip(formula.vars, combo))
        if not _eval(formula.body, env, snap, default_domain):
            out.append({v: e[0] for v, e in env.items()})
    return out
