"""Concrete syntax: lexer, parser, renderer and hyper-text carrier format.

Source programs are segment lists mixing plain text and links to live values.
The textual carrier for a link is `⟦name#id⟧` (the name part is optional and
carries no semantics).  `!` starts a line comment, `;` is the sequencing
operator, blocks use `{ }`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

LINK_OPEN = "\u27e6"   # ⟦
LINK_CLOSE = "\u27e7"  # ⟧

HYPERTEXT_MAGIC = "EVOARCH-HYPERTEXT 1"


class ParseError(Exception):
    def __init__(self, message, line=0, col=0, offset=0, expected=()):
        self.message = message
        self.line = line
        self.col = col
        self.offset = offset
        self.expected = tuple(expected)
        loc = f"{line}:{col}: " if line else ""
        super().__init__(f"{loc}{message}")


# ---------------------------------------------------------------------------
# Source segments

@dataclass
class TextSegment:
    text: str


@dataclass
class LinkSegment:
    link: int
    display: str = ""


class SourceSegmentList:
    """Ordered mix of text segments and value links."""

    def __init__(self, segments=None):
        self.segments = list(segments or [])

    def append_text(self, text):
        if self.segments and isinstance(self.segments[-1], TextSegment):
            self.segments[-1].text += text
        else:
            self.segments.append(TextSegment(text))

    def append_link(self, link, display=""):
        self.segments.append(LinkSegment(link, display))

    def to_carrier(self):
        """Concatenated text with links spelled in the ⟦name#id⟧ carrier form."""
        out = []
        for seg in self.segments:
            if isinstance(seg, TextSegment):
                out.append(seg.text)
            else:
                out.append(f"{LINK_OPEN}{seg.display}#{seg.link}{LINK_CLOSE}")
        return "".join(out)

    def link_ids(self):
        return [s.link for s in self.segments if isinstance(s, LinkSegment)]

    @staticmethod
    def from_text(text):
        src = SourceSegmentList()
        src.append_text(text)
        return src

    @staticmethod
    def from_carrier(text):
        """Split carrier text back into segments."""
        src = SourceSegmentList()
        pos = 0
        while True:
            i = text.find(LINK_OPEN, pos)
            if i < 0:
                if pos < len(text):
                    src.append_text(text[pos:])
                return src
            if i > pos:
                src.append_text(text[pos:i])
            j = text.find(LINK_CLOSE, i)
            if j < 0:
                raise ParseError("unterminated link token", offset=i)
            body = text[i + 1:j]
            name, sep, num = body.partition("#")
            if not sep or not num.isdigit():
                raise ParseError(f"malformed link token {body!r}", offset=i)
            src.append_link(int(num), name)
            pos = j + 1

    def __eq__(self, other):
        return isinstance(other, SourceSegmentList) and self.to_carrier() == other.to_carrier()

    def __repr__(self):
        return f"SourceSegmentList({self.to_carrier()!r})"


# ---------------------------------------------------------------------------
# Lexer

KEYWORDS = {
    "value", "type", "via", "send", "receive", "replicate", "choose", "or",
    "and", "not", "as", "compose", "decompose", "where", "unifies", "free",
    "abstraction", "function", "connection", "location", "sequence", "view",
    "any", "typecase", "else", "reify", "reflect", "if", "then", "is",
    "style", "styled", "extending", "true", "false",
}

_PUNCT = [
    ":=", "::", "->", "<=", ">=", "~=",
    "{", "}", "(", ")", "[", "]", ";", ",", "=", "<", ">",
    "+", "-", "*", "/", ":", ".", "|",
]

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r\n]+)
    | (?P<comment>![^\n]*)
    | (?P<link>\u27e6[^\u27e7]*\u27e7)
    | (?P<real>\d+\.\d+)
    | (?P<nat>\d+)
    | (?P<str>"(?:[^"\\]|\\.)*")
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<punct>%s)
    """ % "|".join(re.escape(p) for p in _PUNCT),
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str          # NAT REAL STR IDENT LINK KW EOF or a punct literal
    value: object
    offset: int
    line: int
    col: int


def tokenize(text):
    toks = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if not m:
            col = pos - line_start + 1
            raise ParseError(f"unexpected character {text[pos]!r}", line, col, pos)
        col = pos - line_start + 1
        kind = m.lastgroup
        raw = m.group()
        if kind in ("ws", "comment"):
            pass
        elif kind == "link":
            body = raw[1:-1]
            name, sep, num = body.partition("#")
            if not sep or not num.isdigit():
                raise ParseError(f"malformed link token {raw!r}", line, col, pos)
            toks.append(Token("LINK", (name, int(num)), pos, line, col))
        elif kind == "real":
            toks.append(Token("REAL", float(raw), pos, line, col))
        elif kind == "nat":
            toks.append(Token("NAT", int(raw), pos, line, col))
        elif kind == "str":
            body = raw[1:-1]
            body = body.replace('\\"', '"').replace("\\\\", "\\").replace("\\n", "\n").replace("\\t", "\t")
            toks.append(Token("STR", body, pos, line, col))
        elif kind == "ident":
            toks.append(Token("KW" if raw in KEYWORDS else "IDENT", raw, pos, line, col))
        else:
            toks.append(Token(raw, raw, pos, line, col))
        nl = raw.count("\n")
        if nl:
            line += nl
            line_start = pos + raw.rindex("\n") + 1
        pos = m.end()
    toks.append(Token("EOF", None, n, line, n - line_start + 1))
    return toks


# ---------------------------------------------------------------------------
# Abstract syntax

@dataclass
class TypeExpr:
    """Unresolved type syntax; resolved against alias bindings by the checker."""
    name: str
    args: list = field(default_factory=list)          # inner/param types
    fields: list = None                               # view: [(name, TypeExpr)]
    result: object = None                             # function result TypeExpr
    span: tuple = (0, 0)


@dataclass
class Param:
    name: str
    type_ann: TypeExpr = None


@dataclass
class PathExpr:
    """`base ('::' (nat|ident))* ('.' ident)*` — sequence indexing is 1-based."""
    base: str
    steps: list = field(default_factory=list)         # ("index", n) | ("label", s) | ("field", s)

    def render(self):
        out = [self.base]
        for kind, arg in self.steps:
            out.append(f".{arg}" if kind == "field" else f"::{arg}")
        return "".join(out)


# Style constraint formulas (quantifier trees over finite topology domains).

@dataclass
class Quant:
    kind: str           # "forall" | "exists"
    vars: list
    body: object
    domain: str = None  # "components" | "connectors"; None = enclosing block's


@dataclass
class FNot:
    body: object


@dataclass
class FBin:
    op: str             # "and" | "or" | "implies"
    left: object
    right: object


@dataclass
class InStyle:
    var: str
    style: str


@dataclass
class Connected:
    left: str
    right: str


@dataclass
class Attached:
    left: str
    right: str


@dataclass
class ConstraintBlock:
    domain: str         # "components" | "connectors"
    formulas: list


@dataclass
class AnalysisDef:
    name: str
    params: list        # [(var, styleName)]
    blocks: list


@dataclass
class StyleBody:
    elements: list = field(default_factory=list)
    blocks: list = field(default_factory=list)
    analyses: list = field(default_factory=list)


@dataclass
class Term:
    kind: str
    children: list = field(default_factory=list)
    name: str = None
    value: object = None
    op: str = None
    params: list = None            # abstraction/function literals
    binders: list = None           # receive, typecase branches
    type_ann: object = None        # TypeExpr (or list for connection_new)
    style_tag: str = None
    labels: list = None            # compose part labels
    unifications: list = None      # compose [(PathExpr, PathExpr)]
    field_names: list = None       # view literals
    names: list = None             # free clauses
    index: int = None              # seq_index
    has_else: bool = False         # typecase
    link_ref: int = None           # hyper-code link identity
    extends: str = None            # style_decl
    style_body: object = None      # style_decl
    span: tuple = (0, 0)
    typ: object = None             # TypeRep annotation, set by the checker
    typ_channel: object = None     # send/receive: checked channel type
    deref: int = 0                 # implicit location dereferences at this use

    def pretty_kind(self):
        return self.kind


def term_equal(a, b, semantic=False):
    """Structural equality ignoring spans and type annotations.

    With semantic=True, link display names are ignored too (they are not part
    of the semantics of hyper-code)."""
    if a is None or b is None:
        return a is b
    if a.kind != b.kind or len(a.children) != len(b.children):
        return False
    fields = ("name", "value", "op", "style_tag", "field_names", "names", "index",
              "has_else", "link_ref", "extends", "labels")
    if semantic and a.kind == "link":
        fields = tuple(f for f in fields if f != "name")
    for fa in fields:
        if getattr(a, fa) != getattr(b, fa):
            return False
    if not _params_equal(a.params, b.params) or not _params_equal(a.binders, b.binders):
        return False
    if not _type_ann_equal(a.type_ann, b.type_ann):
        return False
    if (a.unifications is None) != (b.unifications is None):
        return False
    if a.unifications is not None:
        ua = [(p.render(), q.render()) for p, q in a.unifications]
        ub = [(p.render(), q.render()) for p, q in b.unifications]
        if ua != ub:
            return False
    if repr_style_body(a.style_body) != repr_style_body(b.style_body):
        return False
    return all(term_equal(x, y, semantic) for x, y in zip(a.children, b.children))


def _params_equal(pa, pb):
    if (pa is None) != (pb is None):
        return False
    if pa is None:
        return True
    if len(pa) != len(pb):
        return False
    return all(p.name == q.name and _type_ann_equal(p.type_ann, q.type_ann)
               for p, q in zip(pa, pb))


def _type_ann_equal(ta, tb):
    if isinstance(ta, list) or isinstance(tb, list):
        if not (isinstance(ta, list) and isinstance(tb, list)) or len(ta) != len(tb):
            return False
        return all(render_type_expr(x) == render_type_expr(y) for x, y in zip(ta, tb))
    return render_type_expr(ta) == render_type_expr(tb)


def repr_style_body(sb):
    if sb is None:
        return None
    return render_style_body(sb)


# ---------------------------------------------------------------------------
# Parser

_EXPR_START = {"NAT", "REAL", "STR", "IDENT", "LINK", "(", "{", "-"}
_EXPR_START_KW = {"true", "false", "not", "if", "connection", "location", "sequence",
                  "view", "any", "abstraction", "function", "compose", "decompose",
                  "reify", "reflect", "replicate", "choose", "typecase"}

_BASE_TYPES = {"integer", "real", "boolean", "string", "any", "behaviour"}


class Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0
        self.bracket_depth = 0
        # (operator, depth) pairs: the operator separates alternatives at that
        # bracket depth (choose branches, typecase branches, compose parts),
        # so expression chaining on it stops there
        self.separators = []

    # -- token plumbing

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, kind, value=None):
        t = self.peek()
        if value is None:
            return t.kind == kind
        return t.kind == kind and t.value == value

    def at_kw(self, word):
        return self.at("KW", word)

    def advance(self):
        t = self.toks[self.i]
        if t.kind in ("(", "{", "["):
            self.bracket_depth += 1
        elif t.kind in (")", "}", "]"):
            self.bracket_depth -= 1
        if self.i < len(self.toks) - 1:
            self.i += 1
        return t

    def _op_chains(self, op):
        return not any(sep == op and depth == self.bracket_depth
                       for sep, depth in self.separators)

    def expect(self, kind, value=None, expected=None):
        if not self.at(kind, value):
            t = self.peek()
            want = expected or (value or kind)
            raise ParseError(f"expected {want}, found {self._describe(t)}",
                             t.line, t.col, t.offset, expected=(str(want),))
        return self.advance()

    def expect_kw(self, word):
        return self.expect("KW", word)

    def _describe(self, t):
        if t.kind == "EOF":
            return "end of input"
        return repr(t.value)

    def error(self, msg, expected=()):
        t = self.peek()
        raise ParseError(msg, t.line, t.col, t.offset, expected=expected)

    def _starts_expr(self):
        t = self.peek()
        if t.kind in _EXPR_START:
            return True
        return t.kind == "KW" and t.value in _EXPR_START_KW

    # -- program and statements

    def parse_program(self):
        start = self.peek().offset
        stmts = self.parse_statements(("EOF",))
        end = self.peek().offset
        self.expect("EOF")
        return Term("block", stmts, value="program", span=(start, end))

    def parse_statements(self, stops):
        stmts = []
        while True:
            while self.at(";"):
                self.advance()
            t = self.peek()
            if t.kind in stops or (t.kind == "KW" and t.value in stops):
                return stmts
            stmts.append(self.parse_statement())
            if not (self.at(";") or self.peek().kind in stops
                    or (self.peek().kind == "KW" and self.peek().value in stops)):
                self.error(f"expected ';' or end of block, found {self._describe(self.peek())}",
                           expected=(";",))

    def parse_statement(self):
        t = self.peek()
        if t.kind == "KW":
            if t.value == "value":
                return self.parse_value_decl()
            if t.value == "type":
                return self.parse_type_decl()
            if t.value == "via":
                return self.parse_via()
            if t.value == "free":
                return self.parse_free()
        if t.kind == "IDENT" and self.peek(1).kind == "KW" and self.peek(1).value == "is":
            return self.parse_style_decl()
        expr = self.parse_expr()
        if self.at(":="):
            self.advance()
            rhs = self.parse_expr()
            return Term("assign", [expr, rhs], span=(expr.span[0], rhs.span[1]))
        return expr

    def parse_value_decl(self):
        start = self.expect_kw("value").offset
        name = self.expect("IDENT").value
        self.expect("=")
        rhs = self.parse_expr()
        return Term("value_decl", [rhs], name=name, span=(start, rhs.span[1]))

    def parse_type_decl(self):
        start = self.expect_kw("type").offset
        name = self.expect("IDENT").value
        self.expect("=")
        te = self.parse_type()
        return Term("type_decl", name=name, type_ann=te, span=(start, te.span[1]))

    def parse_via(self):
        start = self.expect_kw("via").offset
        chan = self.parse_postfix()
        if self.at_kw("send"):
            end = self.advance().offset
            payloads = []
            if self._starts_expr():
                payloads.append(self.parse_expr())
                while self.at(","):
                    self.advance()
                    payloads.append(self.parse_expr())
                end = payloads[-1].span[1]
            return Term("send", [chan] + payloads, span=(start, end))
        if self.at_kw("receive"):
            end = self.advance().offset
            binders = []
            if self.at("IDENT"):
                binders.append(self.parse_binder())
                while self.at(","):
                    self.advance()
                    binders.append(self.parse_binder())
                end = self.toks[self.i - 1].offset
            return Term("receive", [chan], binders=binders, span=(start, end))
        self.error("expected 'send' or 'receive' after channel expression",
                   expected=("send", "receive"))

    def parse_binder(self):
        name = self.expect("IDENT").value
        ann = None
        if self.at(":"):
            self.advance()
            ann = self.parse_type()
        return Param(name, ann)

    def parse_free(self):
        start = self.expect_kw("free").offset
        self.expect("{")
        names = []
        if self.at("IDENT"):
            names.append(self.advance().value)
            while self.at(","):
                self.advance()
                names.append(self.expect("IDENT").value)
        end = self.expect("}").offset
        return Term("free_clause", names=names, span=(start, end + 1))

    # -- expressions

    def parse_expr(self):
        return self.parse_or()

    def parse_or(self):
        left = self.parse_and()
        while self.at_kw("or") and self._op_chains("or"):
            self.advance()
            right = self.parse_and()
            left = Term("binop", [left, right], op="or", span=(left.span[0], right.span[1]))
        return left

    def parse_and(self):
        left = self.parse_cmp()
        while self.at_kw("and") and self._op_chains("and"):
            self.advance()
            right = self.parse_cmp()
            left = Term("binop", [left, right], op="and", span=(left.span[0], right.span[1]))
        return left

    def parse_cmp(self):
        left = self.parse_add()
        for op in ("=", "~=", "<=", ">=", "<", ">"):
            if self.at(op):
                self.advance()
                right = self.parse_add()
                return Term("binop", [left, right], op=op, span=(left.span[0], right.span[1]))
        return left

    def parse_add(self):
        left = self.parse_mul()
        while self.at("+") or self.at("-"):
            op = self.advance().value
            right = self.parse_mul()
            left = Term("binop", [left, right], op=op, span=(left.span[0], right.span[1]))
        return left

    def parse_mul(self):
        left = self.parse_unary()
        while self.at("*") or self.at("/"):
            op = self.advance().value
            right = self.parse_unary()
            left = Term("binop", [left, right], op=op, span=(left.span[0], right.span[1]))
        return left

    def parse_unary(self):
        if self.at("-"):
            start = self.advance().offset
            e = self.parse_unary()
            return Term("unop", [e], op="-", span=(start, e.span[1]))
        if self.at_kw("not"):
            start = self.advance().offset
            e = self.parse_unary()
            return Term("unop", [e], op="not", span=(start, e.span[1]))
        return self.parse_postfix()

    def parse_postfix(self):
        e = self.parse_primary()
        while True:
            if self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    args.append(self.parse_expr())
                    while self.at(","):
                        self.advance()
                        args.append(self.parse_expr())
                end = self.expect(")").offset
                e = Term("apply", [e] + args, span=(e.span[0], end + 1))
            elif self.at("::"):
                self.advance()
                if self.at("NAT"):
                    t = self.advance()
                    e = Term("seq_index", [e], index=t.value, span=(e.span[0], t.offset + len(str(t.value))))
                else:
                    t = self.expect("IDENT", expected="sequence index or label")
                    e = Term("label_qualify", [e], name=t.value, span=(e.span[0], t.offset + len(t.value)))
            elif self.at("."):
                self.advance()
                t = self.expect("IDENT")
                e = Term("field_access", [e], name=t.value, span=(e.span[0], t.offset + len(t.value)))
            else:
                return e

    def parse_primary(self):
        t = self.peek()
        if t.kind == "NAT" or t.kind == "REAL" or t.kind == "STR":
            self.advance()
            return Term("literal", value=t.value, span=(t.offset, self.peek().offset))
        if t.kind == "LINK":
            self.advance()
            name, ref = t.value
            return Term("link", name=name, link_ref=ref, span=(t.offset, self.peek().offset))
        if t.kind == "IDENT":
            self.advance()
            return Term("ident", name=t.value, span=(t.offset, t.offset + len(t.value)))
        if t.kind == "(":
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind == "{":
            return self.parse_block()
        if t.kind == "KW":
            handler = getattr(self, "_primary_" + t.value, None)
            if handler:
                return handler()
        self.error(f"expected an expression, found {self._describe(t)}",
                   expected=("expression",))

    def parse_block(self):
        start = self.expect("{").offset
        stmts = self.parse_statements(("}",))
        end = self.expect("}").offset
        return Term("block", stmts, span=(start, end + 1))

    def _primary_true(self):
        t = self.advance()
        return Term("literal", value=True, span=(t.offset, t.offset + 4))

    def _primary_false(self):
        t = self.advance()
        return Term("literal", value=False, span=(t.offset, t.offset + 5))

    def _primary_if(self):
        start = self.advance().offset
        cond = self.parse_expr()
        self.expect_kw("then")
        then = self.parse_expr()
        self.expect_kw("else")
        other = self.parse_expr()
        return Term("if_expr", [cond, then, other], span=(start, other.span[1]))

    def _primary_connection(self):
        start = self.advance().offset
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.parse_type())
            while self.at(","):
                self.advance()
                args.append(self.parse_type())
        end = self.expect(")").offset
        tag = self._opt_style_tag()
        return Term("connection_new", type_ann=args, style_tag=tag, span=(start, end + 1))

    def _primary_location(self):
        start = self.advance().offset
        self.expect("(")
        init = self.parse_expr()
        end = self.expect(")").offset
        return Term("location_new", [init], span=(start, end + 1))

    def _primary_sequence(self):
        start = self.advance().offset
        elem_type = None
        if self.at("["):
            self.advance()
            elem_type = self.parse_type()
            self.expect("]")
        self.expect("(")
        elems = []
        if not self.at(")"):
            elems.append(self.parse_expr())
            while self.at(","):
                self.advance()
                elems.append(self.parse_expr())
        end = self.expect(")").offset
        if elem_type is None and not elems:
            self.error("empty sequence literal needs an element type: sequence[t]()")
        return Term("seq_lit", elems, type_ann=elem_type, span=(start, end + 1))

    def _primary_view(self):
        start = self.advance().offset
        self.expect("(")
        names, values = [], []
        if not self.at(")"):
            while True:
                names.append(self.expect("IDENT").value)
                self.expect("=")
                values.append(self.parse_expr())
                if not self.at(","):
                    break
                self.advance()
        end = self.expect(")").offset
        return Term("view_lit", values, field_names=names, span=(start, end + 1))

    def _primary_any(self):
        start = self.advance().offset
        self.expect("(")
        e = self.parse_expr()
        end = self.expect(")").offset
        return Term("any_inject", [e], span=(start, end + 1))

    def _primary_abstraction(self):
        start = self.advance().offset
        params = self.parse_param_list()
        tag = self._opt_style_tag()
        body = self.parse_behaviour_body()
        return Term("abstraction_lit", [body], params=params, style_tag=tag,
                    span=(start, body.span[1]))

    def _primary_function(self):
        start = self.advance().offset
        params = self.parse_param_list()
        self.expect("->")
        result = self.parse_type()
        body = self.parse_block()
        return Term("function_lit", [body], params=params, type_ann=result,
                    span=(start, body.span[1]))

    def parse_param_list(self):
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                name = self.expect("IDENT").value
                self.expect(":")
                params.append(Param(name, self.parse_type()))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        return params

    def parse_behaviour_body(self):
        """Body of an abstraction: a block, replicate, choose or typecase."""
        if self.at("{") or self.at_kw("replicate") or self.at_kw("choose") or self.at_kw("typecase"):
            return self.parse_statement()
        self.error("expected an abstraction body (block, replicate, choose or typecase)",
                   expected=("{", "replicate", "choose"))

    def _primary_replicate(self):
        start = self.advance().offset
        body = self.parse_behaviour_body()
        return Term("replicate", [body], span=(start, body.span[1]))

    def _primary_choose(self):
        start = self.advance().offset
        self.expect("{")
        self.separators.append(("or", self.bracket_depth))
        try:
            branches = [self.parse_statement()]
            while self.at_kw("or"):
                self.advance()
                branches.append(self.parse_statement())
        finally:
            self.separators.pop()
        end = self.expect("}").offset
        if len(branches) < 2:
            raise ParseError("choose needs at least 2 branches",
                             self.peek().line, self.peek().col, start, expected=("or",))
        return Term("choose", branches, span=(start, end + 1))

    def _primary_typecase(self):
        start = self.advance().offset
        scrutinee = self.parse_expr()
        self.expect("{")
        self.separators.append(("or", self.bracket_depth))
        binders, bodies = [], []
        has_else = False
        try:
            while True:
                if self.at_kw("else"):
                    self.advance()
                    self.expect("->")
                    bodies.append(self.parse_statement())
                    has_else = True
                    break
                name = self.expect("IDENT").value
                self.expect(":")
                ann = self.parse_type()
                self.expect("->")
                binders.append(Param(name, ann))
                bodies.append(self.parse_statement())
                if self.at_kw("or"):
                    self.advance()
                    continue
                break
        finally:
            self.separators.pop()
        end = self.expect("}").offset
        return Term("typecase", [scrutinee] + bodies, binders=binders,
                    has_else=has_else, span=(start, end + 1))

    def _primary_compose(self):
        start = self.advance().offset
        self.expect("{")
        self.separators.append(("and", self.bracket_depth))
        labels, parts = [], []
        try:
            while True:
                label = None
                if self.at("IDENT") and self.peek(1).kind == "KW" \
                        and self.peek(1).value == "as":
                    label = self.advance().value
                    self.advance()
                labels.append(label)
                parts.append(self.parse_statement())
                if self.at_kw("and"):
                    self.advance()
                    continue
                break
        finally:
            self.separators.pop()
        unifications = []
        if self.at_kw("where"):
            self.advance()
            self.expect("{")
            while True:
                p = self.parse_path_tokens()
                self.expect_kw("unifies")
                q = self.parse_path_tokens()
                unifications.append((p, q))
                if self.at(","):
                    self.advance()
                    continue
                break
            self.expect("}")
        end = self.expect("}").offset
        return Term("compose", parts, labels=labels, unifications=unifications,
                    span=(start, end + 1))

    def parse_path_tokens(self):
        base = self.expect("IDENT").value
        steps = []
        while self.at("::"):
            self.advance()
            if self.at("NAT"):
                steps.append(("index", self.advance().value))
            else:
                steps.append(("label", self.expect("IDENT").value))
        while self.at("."):
            self.advance()
            steps.append(("field", self.expect("IDENT").value))
        return PathExpr(base, steps)

    def _primary_decompose(self):
        start = self.advance().offset
        e = self.parse_postfix()
        return Term("decompose", [e], span=(start, e.span[1]))

    def _primary_reify(self):
        start = self.advance().offset
        e = self.parse_postfix()
        return Term("reify", [e], span=(start, e.span[1]))

    def _primary_reflect(self):
        start = self.advance().offset
        e = self.parse_postfix()
        return Term("reflect", [e], span=(start, e.span[1]))

    def _opt_style_tag(self):
        if self.at_kw("styled"):
            self.advance()
            return self.expect("IDENT").value
        return None

    # -- types

    def parse_type(self):
        t = self.peek()
        start = t.offset
        if t.kind == "IDENT":
            self.advance()
            return TypeExpr(t.value, span=(start, start + len(t.value)))
        if t.kind != "KW":
            self.error("expected a type", expected=("type",))
        word = t.value
        if word in ("any",):
            self.advance()
            return TypeExpr("any", span=(start, start + 3))
        if word in ("location", "sequence"):
            self.advance()
            self.expect("[")
            inner = self.parse_type()
            end = self.expect("]").offset
            return TypeExpr(word, [inner], span=(start, end + 1))
        if word == "view":
            self.advance()
            self.expect("[")
            fields = []
            if not self.at("]"):
                while True:
                    name = self.expect("IDENT").value
                    self.expect(":")
                    fields.append((name, self.parse_type()))
                    if not self.at(","):
                        break
                    self.advance()
            end = self.expect("]").offset
            return TypeExpr("view", fields=fields, span=(start, end + 1))
        if word in ("connection", "abstraction"):
            self.advance()
            self.expect("[")
            args = []
            if not self.at("]"):
                while True:
                    args.append(self.parse_type())
                    if not self.at(","):
                        break
                    self.advance()
            end = self.expect("]").offset
            return TypeExpr(word, args, span=(start, end + 1))
        if word == "function":
            self.advance()
            self.expect("[")
            args = []
            if not self.at("->"):
                while True:
                    args.append(self.parse_type())
                    if not self.at(","):
                        break
                    self.advance()
            self.expect("->")
            result = self.parse_type()
            end = self.expect("]").offset
            return TypeExpr("function", args, result=result, span=(start, end + 1))
        self.error(f"expected a type, found {self._describe(t)}", expected=("type",))

    # -- styles (Figure-3 structural subset)

    def parse_style_decl(self):
        start = self.peek().offset
        name = self.expect("IDENT").value
        self.expect_kw("is")
        self.expect_kw("style")
        extends = None
        if self.at_kw("extending"):
            self.advance()
            t = self.peek()
            if t.kind in ("IDENT", "KW"):
                extends = self.advance().value
            else:
                self.error("expected a style name after 'extending'")
        body = None
        end = self.toks[self.i - 1].offset
        if self.at_kw("where"):
            self.advance()
            self.expect("{")
            body = self.parse_style_body()
            end = self.expect("}").offset
        return Term("style_decl", name=name, extends=extends, style_body=body,
                    span=(start, end + 1))

    def _at_ident_word(self, word):
        t = self.peek()
        return t.kind == "IDENT" and t.value == word

    def _expect_ident_word(self, word):
        if not self._at_ident_word(word):
            self.error(f"expected '{word}'", expected=(word,))
        return self.advance()

    def parse_style_body(self):
        body = StyleBody()
        while True:
            while self.at(";"):
                self.advance()
            if self._at_ident_word("elements"):
                self.advance()
                self.expect("{")
                while not self.at("}"):
                    while self.at(";"):
                        self.advance()
                    if self.at("}"):
                        break
                    body.elements.append(self.parse_style_decl())
                self.expect("}")
            elif self._at_ident_word("constraints"):
                self.advance()
                self.expect("{")
                while not self.at("}"):
                    while self.at(";"):
                        self.advance()
                    if self.at("}"):
                        break
                    body.blocks.append(self.parse_constraint_block())
                self.expect("}")
            elif self._at_ident_word("analysis"):
                self.advance()
                self.expect("{")
                while not self.at("}"):
                    while self.at(";"):
                        self.advance()
                    if self.at("}"):
                        break
                    body.analyses.append(self.parse_analysis())
                self.expect("}")
            else:
                return body

    def parse_constraint_block(self):
        self._expect_ident_word("to")
        t = self.peek()
        if not (t.kind == "IDENT" and t.value in ("components", "connectors")):
            self.error("expected 'components' or 'connectors'",
                       expected=("components", "connectors"))
        domain = self.advance().value
        self._expect_ident_word("apply")
        self.expect("{")
        formulas = [self.parse_formula()]
        while self.at(","):
            self.advance()
            formulas.append(self.parse_formula())
        self.expect("}")
        return ConstraintBlock(domain, formulas)

    def parse_analysis(self):
        name = self.expect("IDENT").value
        self.expect_kw("is")
        self._expect_ident_word("property")
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                var = self.expect("IDENT").value
                self._expect_ident_word("in")
                self.expect_kw("style")
                pstyle = self.expect("IDENT").value
                params.append((var, pstyle))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        self.expect("{")
        blocks = []
        while not self.at("}"):
            while self.at(";"):
                self.advance()
            if self.at("}"):
                break
            blocks.append(self.parse_constraint_block())
        self.expect("}")
        return AnalysisDef(name, params, blocks)

    def parse_formula(self):
        left = self.parse_formula_or()
        if self._at_ident_word("implies"):
            self.advance()
            right = self.parse_formula()   # right-associative
            return FBin("implies", left, right)
        return left

    def parse_formula_or(self):
        left = self.parse_formula_and()
        while self.at_kw("or"):
            self.advance()
            left = FBin("or", left, self.parse_formula_and())
        return left

    def parse_formula_and(self):
        left = self.parse_formula_not()
        while self.at_kw("and"):
            self.advance()
            left = FBin("and", left, self.parse_formula_not())
        return left

    def parse_formula_not(self):
        if self.at_kw("not"):
            self.advance()
            return FNot(self.parse_formula_not())
        return self.parse_formula_atom()

    def parse_formula_atom(self):
        t = self.peek()
        if t.kind == "IDENT" and t.value in ("forall", "exists") and self.peek(1).kind == "(":
            kind = self.advance().value
            self.expect("(")
            vars_ = [self.expect("IDENT").value]
            while self.at(","):
                self.advance()
                vars_.append(self.expect("IDENT").value)
            domain = None
            if self.at(":"):
                self.advance()
                d = self.expect("IDENT")
                if d.value not in ("components", "connectors"):
                    self.error("quantifier domain must be components or connectors")
                domain = d.value
            self.expect("|")
            body = self.parse_formula()
            self.expect(")")
            return Quant(kind, vars_, body, domain)
        if t.kind == "(":
            self.advance()
            f = self.parse_formula()
            self.expect(")")
            return f
        # var-led atoms: `x in style S`, `x connected to y`, `x attached to y`
        var = self.expect("IDENT").value
        if self._at_ident_word("in"):
            self.advance()
            self.expect_kw("style")
            t2 = self.peek()
            if t2.kind not in ("IDENT", "KW"):
                self.error("expected a style name")
            return InStyle(var, self.advance().value)
        if self._at_ident_word("connected"):
            self.advance()
            self._expect_ident_word("to")
            return Connected(var, self.expect("IDENT").value)
        if self._at_ident_word("attached"):
            self.advance()
            self._expect_ident_word("to")
            return Attached(var, self.expect("IDENT").value)
        self.error("expected 'in style', 'connected to' or 'attached to'",
                   expected=("in", "connected", "attached"))


def parse(src):
    """Parse a SourceSegmentList (or plain string) into a program Term."""
    if isinstance(src, str):
        src = SourceSegmentList.from_text(src)
    return Parser(tokenize(src.to_carrier())).parse_program()


def parse_text(text):
    return parse(SourceSegmentList.from_carrier(text))


def parse_path(s):
    """Parse a `base::step.field` path string."""
    toks = tokenize(s)
    p = Parser(toks)
    path = p.parse_path_tokens()
    if not p.at("EOF"):
        p.error("trailing input after path")
    return path


# ---------------------------------------------------------------------------
# Renderer

_PREC = {
    "or": 1, "and": 2,
    "=": 3, "~=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3,
    "+": 4, "-": 4, "*": 5, "/": 5,
}
_UNARY_PREC = 6


def render_type_expr(te):
    if te is None:
        return None
    if hasattr(te, "variant"):      # a resolved TypeRep from a reified term
        return te.render()
    if te.name == "view":
        inner = ", ".join(f"{n} : {render_type_expr(t)}" for n, t in (te.fields or []))
        return f"view[{inner}]"
    if te.name == "function":
        params = ", ".join(render_type_expr(a) for a in te.args)
        sep = " " if params else ""
        return f"function[{params}{sep}-> {render_type_expr(te.result)}]"
    if te.name in ("location", "sequence", "connection", "abstraction"):
        inner = ", ".join(render_type_expr(a) for a in te.args)
        return f"{te.name}[{inner}]"
    return te.name


def render_formula(f, prec=0):
    if isinstance(f, Quant):
        dom = f" : {f.domain}" if f.domain else ""
        return f"{f.kind}({', '.join(f.vars)}{dom} | {render_formula(f.body)})"
    if isinstance(f, FNot):
        return f"not {render_formula(f.body, 4)}"
    if isinstance(f, FBin):
        levels = {"implies": 1, "or": 2, "and": 3}
        p = levels[f.op]
        lhs = render_formula(f.left, p + (1 if f.op == "implies" else 0))
        rhs = render_formula(f.right, p)
        s = f"{lhs} {f.op} {rhs}"
        return f"({s})" if p < prec else s
    if isinstance(f, InStyle):
        return f"{f.var} in style {f.style}"
    if isinstance(f, Connected):
        return f"{f.left} connected to {f.right}"
    if isinstance(f, Attached):
        return f"{f.left} attached to {f.right}"
    raise TypeError(f"unknown formula node {f!r}")


def render_style_body(body):
    parts = []
    if body.elements:
        elems = " ;\n    ".join(_render_style_decl(e) for e in body.elements)
        parts.append("  elements {\n    " + elems + "\n  }")
    if body.blocks:
        blk = " ;\n    ".join(_render_constraint_block(b) for b in body.blocks)
        parts.append("  constraints {\n    " + blk + "\n  }")
    if body.analyses:
        an = " ;\n    ".join(_render_analysis(a) for a in body.analyses)
        parts.append("  analysis {\n    " + an + "\n  }")
    return "\n".join(parts)


def _render_constraint_block(b):
    formulas = ",\n      ".join(render_formula(f) for f in b.formulas)
    return f"to {b.domain} apply {{ {formulas} }}"


def _render_analysis(a):
    params = ", ".join(f"{v} in style {s}" for v, s in a.params)
    blocks = " ;\n      ".join(_render_constraint_block(b) for b in a.blocks)
    return f"{a.name} is property({params}) {{ {blocks} }}"


def _render_style_decl(t):
    s = f"{t.name} is style"
    if t.extends:
        s += f" extending {t.extends}"
    if t.style_body is not None:
        s += " where {\n" + render_style_body(t.style_body) + "\n}"
    return s


class _Emitter:
    def __init__(self):
        self.src = SourceSegmentList()
        self.indent = 0

    def text(self, s):
        self.src.append_text(s)

    def link(self, ref, display):
        self.src.append_link(ref, display or "")

    def newline(self):
        self.text("\n" + "  " * self.indent)


def render(t):
    """Render a Term back to a SourceSegmentList; parse(render(t)) == t."""
    em = _Emitter()
    if t.kind == "block" and t.value == "program":
        for i, stmt in enumerate(t.children):
            if i:
                em.text(" ;")
                em.newline()
            _render(stmt, em)
    else:
        _render(t, em)
    return em.src


def render_text(t):
    return render(t).to_carrier()


def _render_literal(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        body = v.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
        return f'"{body}"'
    return repr(v)


def _render(t, em, prec=0, sep=None):
    # `sep` names an operator that separates alternatives in the enclosing
    # construct (choose/typecase: "or"; compose: "and"); expressions rooted in
    # it are parenthesised, and the restriction flows through every position
    # that stays outside brackets in the rendered text
    k = t.kind
    if k == "literal":
        em.text(_render_literal(t.value))
    elif k == "ident":
        em.text(t.name)
    elif k == "link":
        em.link(t.link_ref, t.name)
    elif k == "binop":
        p = _PREC[t.op]
        wrap = p < prec or (sep is not None and t.op == sep)
        inner_sep = None if wrap else sep
        if wrap:
            em.text("(")
        # comparisons are non-associative: parenthesise comparison children
        left_prec = p + 1 if p == 3 else p
        _render(t.children[0], em, left_prec, inner_sep)
        em.text(f" {t.op} ")
        _render(t.children[1], em, p + 1, inner_sep)
        if wrap:
            em.text(")")
    elif k == "unop":
        wrap = _UNARY_PREC < prec
        if wrap:
            em.text("(")
        em.text("- " if t.op == "-" else "not ")
        _render(t.children[0], em, _UNARY_PREC)
        if wrap:
            em.text(")")
    elif k == "if_expr":
        wrap = prec > 0
        inner_sep = None if wrap else sep
        if wrap:
            em.text("(")
        em.text("if ")
        _render(t.children[0], em, 0, inner_sep)
        em.text(" then ")
        _render(t.children[1], em, 0, inner_sep)
        em.text(" else ")
        _render(t.children[2], em, 0, inner_sep)
        if wrap:
            em.text(")")
    elif k == "apply":
        _render(t.children[0], em, _UNARY_PREC + 1)
        em.text("(")
        for i, a in enumerate(t.children[1:]):
            if i:
                em.text(", ")
            _render(a, em)
        em.text(")")
    elif k == "seq_index":
        _render(t.children[0], em, _UNARY_PREC + 1)
        em.text(f"::{t.index}")
    elif k == "label_qualify":
        _render(t.children[0], em, _UNARY_PREC + 1)
        em.text(f"::{t.name}")
    elif k == "field_access":
        _render(t.children[0], em, _UNARY_PREC + 1)
        em.text(f".{t.name}")
    elif k == "block":
        em.text("{")
        em.indent += 1
        for i, s in enumerate(t.children):
            if i:
                em.text(" ;")
            em.newline()
            _render(s, em)
        em.indent -= 1
        em.newline()
        em.text("}")
    elif k == "value_decl":
        em.text(f"value {t.name} = ")
        _render(t.children[0], em, 0, sep)
    elif k == "type_decl":
        em.text(f"type {t.name} = {render_type_expr(t.type_ann)}")
    elif k == "send":
        em.text("via ")
        _render(t.children[0], em, _UNARY_PREC + 1)
        em.text(" send")
        for i, p in enumerate(t.children[1:]):
            em.text("," if i else " ")
            if i:
                em.text(" ")
            _render(p, em, 0, sep)
    elif k == "receive":
        em.text("via ")
        _render(t.children[0], em, _UNARY_PREC + 1)
        em.text(" receive")
        for i, b in enumerate(t.binders):
            em.text("," if i else " ")
            if i:
                em.text(" ")
            em.text(b.name)
            if b.type_ann is not None:
                em.text(f" : {render_type_expr(b.type_ann)}")
    elif k == "assign":
        _render(t.children[0], em, _UNARY_PREC + 1)
        em.text(" := ")
        _render(t.children[1], em, 0, sep)
    elif k == "replicate":
        em.text("replicate ")
        _render(t.children[0], em, 0, sep)
    elif k == "choose":
        em.text("choose {")
        em.indent += 1
        for i, b in enumerate(t.children):
            if i:
                em.text(" or")
            em.newline()
            _render(b, em, 0, "or")
        em.indent -= 1
        em.newline()
        em.text("}")
    elif k == "typecase":
        em.text("typecase ")
        _render(t.children[0], em, _UNARY_PREC + 1)
        em.text(" {")
        em.indent += 1
        bodies = t.children[1:]
        for i, b in enumerate(t.binders):
            if i:
                em.text(" or")
            em.newline()
            em.text(f"{b.name} : {render_type_expr(b.type_ann)} -> ")
            _render(bodies[i], em, 0, "or")
        if t.has_else:
            if t.binders:
                em.text(" or")
            em.newline()
            em.text("else -> ")
            _render(bodies[-1], em, 0, "or")
        em.indent -= 1
        em.newline()
        em.text("}")
    elif k == "compose":
        em.text("compose {")
        em.indent += 1
        for i, part in enumerate(t.children):
            if i:
                em.text(" and")
            em.newline()
            if t.labels[i]:
                em.text(f"{t.labels[i]} as ")
            _render(part, em, 0, "and")
        if t.unifications:
            em.newline()
            em.text("where {")
            em.indent += 1
            for i, (p, q) in enumerate(t.unifications):
                if i:
                    em.text(",")
                em.newline()
                em.text(f"{p.render()} unifies {q.render()}")
            em.indent -= 1
            em.newline()
            em.text("}")
        em.indent -= 1
        em.newline()
        em.text("}")
    elif k in ("decompose", "reify", "reflect"):
        wrap = prec > _UNARY_PREC   # prefix ops bind looser than postfix
        if wrap:
            em.text("(")
        em.text(k + " ")
        _render(t.children[0], em, _UNARY_PREC + 1)
        if wrap:
            em.text(")")
    elif k == "free_clause":
        em.text("free {" + ", ".join(t.names) + "}")
    elif k == "connection_new":
        em.text("connection(")
        em.text(", ".join(render_type_expr(a) for a in (t.type_ann or [])))
        em.text(")")
        if t.style_tag:
            em.text(f" styled {t.style_tag}")
    elif k == "location_new":
        em.text("location(")
        _render(t.children[0], em)
        em.text(")")
    elif k == "seq_lit":
        em.text("sequence")
        if t.type_ann is not None:
            em.text(f"[{render_type_expr(t.type_ann)}]")
        em.text("(")
        for i, e in enumerate(t.children):
            if i:
                em.text(", ")
            _render(e, em)
        em.text(")")
    elif k == "view_lit":
        em.text("view(")
        for i, (n, e) in enumerate(zip(t.field_names, t.children)):
            if i:
                em.text(", ")
            em.text(f"{n} = ")
            _render(e, em)
        em.text(")")
    elif k == "any_inject":
        em.text("any(")
        _render(t.children[0], em)
        em.text(")")
    elif k == "abstraction_lit":
        em.text("abstraction(")
        em.text(", ".join(f"{p.name} : {render_type_expr(p.type_ann)}" for p in t.params))
        em.text(")")
        if t.style_tag:
            em.text(f" styled {t.style_tag}")
        em.text(" ")
        _render(t.children[0], em)
    elif k == "function_lit":
        em.text("function(")
        em.text(", ".join(f"{p.name} : {render_type_expr(p.type_ann)}" for p in t.params))
        em.text(f") -> {render_type_expr(t.type_ann)} ")
        _render(t.children[0], em)
    elif k == "style_decl":
        em.text(_render_style_decl(t))
    else:
        raise TypeError(f"cannot render term kind {k!r}")


# ---------------------------------------------------------------------------
# Free identifiers and link substitution (used by reification)

def _walk_free(t, bound, hit):
    k = t.kind
    if k == "ident":
        if t.name not in bound:
            hit(t.name)
        return
    if k == "block":
        names = set()
        for s in t.children:
            _walk_free(s, bound | names, hit)
            if s.kind == "value_decl" or s.kind == "type_decl":
                names.add(s.name)
            elif s.kind == "receive":
                names.update(b.name for b in s.binders)
        return
    if k in ("abstraction_lit", "function_lit"):
        inner = bound | {p.name for p in t.params}
        _walk_free(t.children[0], inner, hit)
        return
    if k == "typecase":
        _walk_free(t.children[0], bound, hit)
        bodies = t.children[1:]
        for i, b in enumerate(t.binders):
            _walk_free(bodies[i], bound | {b.name}, hit)
        if t.has_else:
            _walk_free(bodies[-1], bound, hit)
        return
    if k == "value_decl":
        # a bare declaration outside a block: name scopes nothing here
        _walk_free(t.children[0], bound, hit)
        return
    if k == "receive":
        _walk_free(t.children[0], bound, hit)
        return
    if k == "free_clause":
        for n in t.names:
            if n not in bound:
                hit(n)
        return
    for c in t.children:
        _walk_free(c, bound, hit)


def free_identifiers(t):
    """Names used by t that are not bound within it."""
    seen = []
    found = set()

    def hit(name):
        if name not in found:
            found.add(name)
            seen.append(name)

    _walk_free(t, set(), hit)
    return seen


def substitute_free(t, mapping):
    """Copy of t with free identifiers in `mapping` replaced by link terms.

    mapping: name -> (link id, display name).  Bound occurrences are left
    untouched; free_clause name lists are never rewritten.
    """
    return _subst(t, mapping, set())


def _clone(t, children=None, **overrides):
    data = dict(
        kind=t.kind, children=children if children is not None else list(t.children),
        name=t.name, value=t.value, op=t.op, params=t.params, binders=t.binders,
        type_ann=t.type_ann, style_tag=t.style_tag, labels=t.labels,
        unifications=t.unifications, field_names=t.field_names, index=t.index,
        has_else=t.has_else, link_ref=t.link_ref, extends=t.extends,
        style_body=t.style_body, span=t.span,
    )
    data.update(overrides)
    return Term(**data)


def _subst(t, mapping, bound):
    k = t.kind
    if k == "ident":
        if t.name not in bound and t.name in mapping:
            ref, display = mapping[t.name]
            return Term("link", name=display, link_ref=ref, span=t.span)
        return t
    if k == "block":
        names = set()
        out = []
        for s in t.children:
            out.append(_subst(s, mapping, bound | names))
            if s.kind in ("value_decl", "type_decl"):
                names.add(s.name)
            elif s.kind == "receive":
                names.update(b.name for b in s.binders)
        return _clone(t, out)
    if k in ("abstraction_lit", "function_lit"):
        inner = bound | {p.name for p in t.params}
        return _clone(t, [_subst(t.children[0], mapping, inner)])
    if k == "typecase":
        out = [_subst(t.children[0], mapping, bound)]
        bodies = t.children[1:]
        for i, b in enumerate(t.binders):
            out.append(_subst(bodies[i], mapping, bound | {b.name}))
        if t.has_else:
            out.append(_subst(bodies[-1], mapping, bound))
        return _clone(t, out)
    if k == "free_clause":
        return t
    return _clone(t, [_subst(c, mapping, bound) for c in t.children])


def collect_link_refs(t, out=None):
    """All value-link identifiers referenced anywhere in a term."""
    if out is None:
        out = set()
    if t.link_ref is not None:
        out.add(t.link_ref)
    for c in t.children:
        collect_link_refs(c, out)
    return out


# ---------------------------------------------------------------------------
# Hyper-text files

def write_hypertext_file(path, src):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(HYPERTEXT_MAGIC + "\n")
        fh.write(src.to_carrier())


def read_hypertext_file(path):
    with open(path, encoding="utf-8") as fh:
        body = fh.read()
    if body.startswith(HYPERTEXT_MAGIC + "\n"):
        return SourceSegmentList.from_carrier(body[len(HYPERTEXT_MAGIC) + 1:])
    return SourceSegmentList.from_carrier(body)
