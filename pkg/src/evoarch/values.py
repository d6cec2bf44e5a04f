"""Runtime values and their runtime types.

Scalars use native Python values; everything with identity (locations,
channels, behaviours, closures) is a class instance so that hyper-code links
can share it.
"""

from __future__ import annotations

from . import typesys as T


class ProjectionError(Exception):
    pass


class Env:
    """Runtime name environment; a chain of scopes shared by closures."""

    __slots__ = ("vars", "parent")

    def __init__(self, parent=None):
        self.vars = {}
        self.parent = parent

    def child(self):
        return Env(self)

    def define(self, name, v):
        self.vars[name] = v

    def lookup(self, name):
        env = self
        while env is not None:
            if name in env.vars:
                return env.vars[name]
            env = env.parent
        raise KeyError(name)

    def has(self, name):
        try:
            self.lookup(name)
            return True
        except KeyError:
            return False


class LocationVal:
    """Mutable cell; all holders observe assignments."""

    __slots__ = ("content", "content_type")

    def __init__(self, content, content_type):
        self.content = content
        self.content_type = content_type


class ChannelVal:
    """A connection; unification groups channels union-find style."""

    __slots__ = ("id", "payload_types", "parent", "style_tag")

    def __init__(self, id, payload_types, style_tag=None):
        self.id = id
        self.payload_types = tuple(payload_types)
        self.parent = None
        self.style_tag = style_tag

    def root(self):
        c = self
        while c.parent is not None:
            c = c.parent
        return c


class SeqVal:
    __slots__ = ("items", "elem_type")

    def __init__(self, items, elem_type):
        self.items = list(items)
        self.elem_type = elem_type


class ViewVal:
    __slots__ = ("names", "values", "types")

    def __init__(self, names, values, types):
        self.names = list(names)
        self.values = list(values)
        self.types = list(types)

    def get(self, name):
        return self.values[self.names.index(name)]


class AnyVal:
    """An infinite-union package: a value together with its type."""

    __slots__ = ("value", "typ")

    def __init__(self, value, typ):
        self.value = value
        self.typ = typ


class FunctionVal:
    __slots__ = ("params", "result_type", "body", "env")

    def __init__(self, params, result_type, body, env):
        self.params = params          # [(name, TypeRep)]
        self.result_type = result_type
        self.body = body
        self.env = env


class AbstractionVal:
    __slots__ = ("params", "body", "env", "style_tag")

    def __init__(self, params, body, env, style_tag=None):
        self.params = params
        self.body = body
        self.env = env
        self.style_tag = style_tag


class Process:
    """Marker base for behaviour values (behaviour states and composites)."""


def value_type(v):
    if isinstance(v, bool):
        return T.BOOLEAN
    if isinstance(v, int):
        return T.INTEGER
    if isinstance(v, float):
        return T.REAL
    if isinstance(v, str):
        return T.STRING
    if isinstance(v, LocationVal):
        return T.location_of(v.content_type)
    if isinstance(v, ChannelVal):
        return T.connection_of(v.payload_types)
    if isinstance(v, SeqVal):
        return T.sequence_of(v.elem_type)
    if isinstance(v, ViewVal):
        return T.view_of(list(zip(v.names, v.types)))
    if isinstance(v, AnyVal):
        return T.ANY
    if isinstance(v, FunctionVal):
        return T.function_of([t for _, t in v.params], v.result_type)
    if isinstance(v, AbstractionVal):
        return T.abstraction_of([t for _, t in v.params])
    if isinstance(v, Process):
        return T.BEHAVIOUR
    raise TypeError(f"not a language value: {v!r}")


def inject_any(v, t=None):
    """Package a value with (a representation of) its type."""
    return AnyVal(v, t if t is not None else value_type(v))


def project_any(av, t):
    """Unpack an any package at an expected type; exact structural match."""
    if not isinstance(av, AnyVal):
        raise ProjectionError(f"projection of a non-any value {render_value(av)}")
    if not T.equivalent(av.typ, t):
        raise ProjectionError(f"projection expected {t.render()}, "
                              f"package carries {av.typ.render()}")
    return av.value


def render_value(v, depth=0):
    """Short human rendering used by traces, the REPL and diagnostics."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if depth > 6:
        return "..."
    if isinstance(v, LocationVal):
        return f"location({render_value(v.content, depth + 1)})"
    if isinstance(v, ChannelVal):
        return f"connection<{v.id}>"
    if isinstance(v, SeqVal):
        return "sequence(" + ", ".join(render_value(x, depth + 1) for x in v.items) + ")"
    if isinstance(v, ViewVal):
        inner = ", ".join(f"{n} = {render_value(x, depth + 1)}"
                          for n, x in zip(v.names, v.values))
        return f"view({inner})"
    if isinstance(v, AnyVal):
        return f"any({render_value(v.value, depth + 1)} : {v.typ.render()})"
    if isinstance(v, FunctionVal):
        return value_type(v).render()
    if isinstance(v, AbstractionVal):
        return value_type(v).render()
    if isinstance(v, Process):
        return f"behaviour<{v.handle}>"
    return repr(v)


def values_equal(a, b):
    """Language equality: structural on data, identity on stateful values."""
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    if isinstance(a, (int, float, str)) and isinstance(b, (int, float, str)):
        return type(a) is type(b) and a == b
    if isinstance(a, SeqVal) and isinstance(b, SeqVal):
        return (T.equivalent(a.elem_type, b.elem_type)
                and len(a.items) == len(b.items)
                and all(values_equal(x, y) for x, y in zip(a.items, b.items)))
    if isinstance(a, ViewVal) and isinstance(b, ViewVal):
        return (a.names == b.names
                and all(T.equivalent(x, y) for x, y in zip(a.types, b.types))
                and all(values_equal(x, y) for x, y in zip(a.values, b.values)))
    if isinstance(a, AnyVal) and isinstance(b, AnyVal):
        return T.equivalent(a.typ, b.typ) and values_equal(a.value, b.value)
    return a is b
