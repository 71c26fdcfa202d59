"""Parsers and printers for formulas, programs, CCS, choreographies and proof scripts."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Callable

from . import ccs as C
from . import chor as H
from .derivation import RULES, Derivation, DerivationError, Node, RuleApp
from .syntax import (
    BOT,
    EMPTY,
    EPSILON,
    TOP,
    And,
    Box,
    Choice,
    Dia,
    Foreign,
    Formula,
    Inst,
    Or,
    Pos,
    Program,
    Seq,
    Star,
    Test,
    mk_iff,
    mk_implies,
    negate,
    render_sequent,
)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan, expected: list[str] | None = None) -> None:
        super().__init__(f"{span.line}:{span.column}: {message}")
        self.message = message
        self.span = span
        self.expected = expected or []


def _span(text: str, start: int, end: int) -> SourceSpan:
    start = max(0, min(start, len(text)))
    end = max(start, min(end, len(text)))
    line = text.count("\n", 0, start) + 1
    column = start - (text.rfind("\n", 0, start) + 1) + 1
    return SourceSpan(start, end, line, column)


# ---------------------------------------------------------------- lexer


@dataclass(frozen=True)
class Tok:
    kind: str  # ident, name, num, str, punct, eof
    text: str
    start: int
    end: int


_PUNCT = ("<->", "->", ":=", "~", "&", "|", "[", "]", "<", ">", "(", ")", "?", ";",
          "+", "*", "{", "}", ".", "'", "#", ",")
_IDENT = re.compile(r"@?[A-Za-z_][A-Za-z0-9_]*")
_NUM = re.compile(r"[0-9]+")


@dataclass
class Lexer:
    """On-demand lexer with one token of lookahead.

    Lexing lazily lets the program parser hand the raw text of a ``ccs{...}``
    block to another parser.
    """

    text: str
    pos: int = 0
    offset: int = 0
    _peeked: Tok | None = field(default=None, repr=False)

    def _skip(self) -> None:
        t = self.text
        while self.pos < len(t):
            ch = t[self.pos]
            if ch.isspace():
                self.pos += 1
            elif ch == "%":
                nl = t.find("\n", self.pos)
                self.pos = len(t) if nl < 0 else nl + 1
            else:
                break

    def _lex(self) -> Tok:
        self._skip()
        t, i = self.text, self.pos
        if i >= len(t):
            return Tok("eof", "", i, i)
        ch = t[i]
        if ch == "`":
            j = t.find("`", i + 1)
            if j < 0:
                self._fail("unterminated quoted name", i, len(t))
            self.pos = j + 1
            return Tok("name", t[i + 1:j], i, j + 1)
        if ch == '"':
            j = i + 1
            buf = []
            while j < len(t) and t[j] != '"':
                if t[j] == "\\" and j + 1 < len(t):
                    j += 1
                buf.append(t[j])
                j += 1
            if j >= len(t):
                self._fail("unterminated string", i, len(t))
            self.pos = j + 1
            return Tok("str", "".join(buf), i, j + 1)
        m = _IDENT.match(t, i)
        if m:
            self.pos = m.end()
            return Tok("ident", m.group(), i, m.end())
        m = _NUM.match(t, i)
        if m:
            self.pos = m.end()
            return Tok("num", m.group(), i, m.end())
        for p in _PUNCT:
            if t.startswith(p, i):
                self.pos = i + len(p)
                return Tok("punct", p, i, i + len(p))
        self._fail(f"unexpected character {ch!r}", i, i + 1)
        raise AssertionError

    def peek(self) -> Tok:
        if self._peeked is None:
            self._peeked = self._lex()
        return self._peeked

    def next(self) -> Tok:
        tok = self.peek()
        self._peeked = None
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("punct", "ident", "num") and tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            tok = self.peek()
            self._fail(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                       tok.start, tok.end, [text])
        return self.next()

    def expect_ident(self, what: str = "identifier") -> Tok:
        tok = self.peek()
        if tok.kind != "ident":
            self._fail(f"expected {what}, found {tok.text or 'end of input'!r}",
                       tok.start, tok.end, [what])
        return self.next()

    def raw_block(self) -> tuple[str, int]:
        """Text up to the ``}`` matching an already consumed ``{``."""
        assert self._peeked is None
        depth, i, t = 1, self.pos, self.text
        while i < len(t):
            if t[i] == "{":
                depth += 1
            elif t[i] == "}":
                depth -= 1
                if depth == 0:
                    inner = t[self.pos:i]
                    start = self.pos
                    self.pos = i + 1
                    return inner, start
            i += 1
        self._fail("unterminated block", self.pos, len(t), ["}"])
        raise AssertionError

    def at_eof(self) -> bool:
        return self.peek().kind == "eof"

    def expect_eof(self) -> None:
        tok = self.peek()
        if tok.kind != "eof":
            self._fail(f"unexpected {tok.text!r} after end of term", tok.start, tok.end, ["end of input"])

    def _fail(self, msg: str, start: int, end: int, expected: list[str] | None = None) -> None:
        full = self.text
        raise ParseError(msg, _span(full, start, end), expected)


def _shift(err: ParseError, outer: str, offset: int) -> ParseError:
    s = err.span
    return ParseError(err.message, _span(outer, s.start + offset, s.end + offset), err.expected)


# ---------------------------------------------------------------- formulas and programs

_FORMULA_KW = {"true", "false"}
_PROGRAM_KW = {"skip", "abort", "ccs", "chor"}


class _LogicParser:
    def __init__(self, text: str) -> None:
        self.lx = Lexer(text)

    def formula(self) -> Formula:
        f = self.imp()
        while self.lx.accept("<->"):
            f = mk_iff(f, self.imp())
        return f

    def imp(self) -> Formula:
        f = self.disj()
        if self.lx.accept("->"):
            return mk_implies(f, self.imp())
        return f

    def disj(self) -> Formula:
        f = self.conj()
        while self.lx.at("|"):
            self.lx.next()
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.lx.accept("&"):
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        lx = self.lx
        tok = lx.peek()
        if lx.accept("~"):
            return negate(self.unary())
        if lx.accept("["):
            p = self.program()
            lx.expect("]")
            return Box(p, self.unary())
        if lx.accept("<"):
            p = self.program()
            lx.expect(">")
            return Dia(p, self.unary())
        if lx.accept("("):
            f = self.formula()
            lx.expect(")")
            return f
        if lx.accept("true"):
            return TOP
        if lx.accept("false"):
            return BOT
        if tok.kind == "name":
            lx.next()
            return Pos(tok.text)
        if tok.kind == "ident" and tok.text not in _PROGRAM_KW:
            lx.next()
            parts = [tok.text]
            while lx.at("."):
                lx.next()
                parts.append(lx.expect_ident("atom component").text)
            return Pos(".".join(parts))
        lx._fail(f"expected a formula, found {tok.text or 'end of input'!r}", tok.start, tok.end,
                 ["true", "false", "atom", "~", "[", "<", "("])
        raise AssertionError

    def program(self) -> Program:
        p = self.seq()
        while self.lx.accept("+"):
            p = Choice(p, self.seq())
        return p

    def seq(self) -> Program:
        p = self.post()
        while self.lx.accept(";"):
            p = Seq(p, self.post())
        return p

    def post(self) -> Program:
        p = self.prim()
        while self.lx.accept("*"):
            p = Star(p)
        return p

    def prim(self) -> Program:
        lx = self.lx
        tok = lx.peek()
        if lx.accept("("):
            p = self.program()
            lx.expect(")")
            return p
        if lx.accept("?"):
            return Test(self.unary())
        if lx.accept("skip"):
            return EPSILON
        if lx.accept("abort"):
            return EMPTY
        if tok.kind == "ident" and tok.text in ("ccs", "chor"):
            lx.next()
            lx.expect("{")
            inner, start = lx.raw_block()
            try:
                if tok.text == "ccs":
                    term: Any = parse_ccs_process(inner)
                else:
                    term = parse_chor_term(inner)
            except ParseError as err:
                raise _shift(err, lx.text, start) from None
            return foreign(tok.text, term)
        if tok.kind == "name":
            lx.next()
            return Inst(tok.text)
        if tok.kind == "ident" and tok.text not in _FORMULA_KW:
            lx.next()
            return Inst(tok.text)
        lx._fail(f"expected a program, found {tok.text or 'end of input'!r}", tok.start, tok.end,
                 ["skip", "abort", "label", "?", "ccs{", "chor{", "("])
        raise AssertionError


def foreign(sem: str, term: Any) -> Program:
    """Embed a foreign term; syntactically terminated terms become ``skip``."""
    if sem == "ccs" and C.is_inert(term):
        return EPSILON
    if sem == "chor" and isinstance(term, H.Nil):
        return EPSILON
    return Foreign(sem, term)


def parse_formula(text: str) -> Formula:
    p = _LogicParser(text)
    f = p.formula()
    p.lx.expect_eof()
    return f


def parse_program(text: str) -> Program:
    p = _LogicParser(text)
    prog = p.program()
    p.lx.expect_eof()
    return prog


def parse_sequent(text: str) -> frozenset[Formula]:
    """Comma-separated formulas; the empty string is the empty sequent."""
    p = _LogicParser(text)
    out: set[Formula] = set()
    if p.lx.at_eof():
        return frozenset()
    out.add(p.formula())
    while p.lx.accept(","):
        out.add(p.formula())
    p.lx.expect_eof()
    return frozenset(out)


# ---------------------------------------------------------------- CCS

_CCS_RESERVED = {"tau", "new", "in"}


class _CcsParser:
    def __init__(self, text: str) -> None:
        self.lx = Lexer(text)

    def par(self) -> C.CcsProcess:
        p = self.sum()
        while self.lx.accept("|"):
            p = C.Par(p, self.sum())
        return p

    def sum(self) -> C.CcsProcess:
        p = self.pre()
        while self.lx.accept("+"):
            p = C.Sum(p, self.pre())
        return p

    def action_name(self) -> str:
        tok = self.lx.expect_ident("action name")
        if tok.text in _CCS_RESERVED or tok.text.startswith("@"):
            self.lx._fail(f"{tok.text!r} cannot name an action", tok.start, tok.end)
        return tok.text

    def pre(self) -> C.CcsProcess:
        lx = self.lx
        tok = lx.peek()
        if lx.accept("("):
            p = self.par()
            lx.expect(")")
            return p
        if tok.kind == "num":
            if tok.text != "0":
                lx._fail("only 0 is a process constant", tok.start, tok.end, ["0"])
            lx.next()
            return C.NIL
        if lx.accept("'"):
            name = self.action_name()
            lx.expect(".")
            return C.Prefix(C.CoAct(name), self.pre())
        if lx.accept("tau"):
            lx.expect(".")
            return C.Prefix(C.TAU, self.pre())
        if lx.accept("new"):
            name = self.action_name()
            lx.expect("in")
            return C.Restrict(name, self.pre())
        if tok.kind == "ident" and tok.text not in _CCS_RESERVED and not tok.text.startswith("@"):
            lx.next()
            if lx.accept("."):
                return C.Prefix(C.Act(tok.text), self.pre())
            return C.Name(tok.text)
        lx._fail(f"expected a process, found {tok.text or 'end of input'!r}", tok.start, tok.end,
                 ["0", "action", "'", "tau", "new", "name", "("])
        raise AssertionError


def parse_ccs_process(text: str) -> C.CcsProcess:
    p = _CcsParser(text)
    proc = p.par()
    p.lx.expect_eof()
    return proc


def parse_ccs(text: str) -> tuple[C.CcsDefs, list[str]]:
    """Definition file ``X := P`` entries; returns the definitions and their names in order."""
    p = _CcsParser(text)
    defs = C.CcsDefs()
    order: list[str] = []
    while not p.lx.at_eof():
        tok = p.lx.expect_ident("definition name")
        p.lx.expect(":=")
        if tok.text in defs:
            p.lx._fail(f"duplicate definition {tok.text}", tok.start, tok.end)
        defs[tok.text] = p.par()
        order.append(tok.text)
    return defs, order


# ---------------------------------------------------------------- choreographies

_CHOR_RESERVED = {"if", "else"}


class _ChorParser:
    def __init__(self, text: str) -> None:
        self.lx = Lexer(text)

    def ident(self, what: str) -> str:
        tok = self.lx.expect_ident(what)
        if tok.text in _CHOR_RESERVED or tok.text.startswith("@"):
            self.lx._fail(f"{tok.text!r} is reserved", tok.start, tok.end)
        return tok.text

    def expr(self) -> str:
        tok = self.lx.peek()
        if tok.kind in ("ident", "num", "str"):
            self.lx.next()
            return tok.text
        self.lx._fail("expected an expression", tok.start, tok.end, ["expression"])
        raise AssertionError

    def chor(self) -> H.Choreography:
        lx = self.lx
        tok = lx.peek()
        if tok.kind == "num" and tok.text == "0":
            lx.next()
            return H.NIL
        if lx.accept("("):
            c = self.chor()
            lx.expect(")")
            return c
        if lx.accept("if"):
            pid = self.ident("process name")
            lx.expect(".")
            cond = self.ident("condition")
            lx.expect("{")
            then = self.chor()
            lx.expect("}")
            lx.expect("else")
            lx.expect("{")
            else_ = self.chor()
            lx.expect("}")
            lx.expect(";")
            return H.Cond(pid, cond, then, else_, self.chor())
        if tok.kind == "ident":
            first = self.ident("process or definition name")
            instr = self.instr(first)
            if instr is None:
                return H.Call(first)
            lx.expect(";")
            return H.SeqI(instr, self.chor())
        lx._fail(f"expected a choreography, found {tok.text or 'end of input'!r}", tok.start, tok.end,
                 ["0", "if", "instruction", "name"])
        raise AssertionError

    def instr(self, first: str) -> H.ChorInstr | None:
        lx = self.lx
        if lx.accept("#"):
            return H.Cont(first, self.ident("process name"))
        if lx.accept("->"):
            dst = self.ident("process name")
            lx.expect("[")
            lbl = self.ident("selection label")
            lx.expect("]")
            if dst == first:
                lx._fail("selection needs two distinct processes", lx.pos - 1, lx.pos)
            return H.Sel(first, dst, lbl)
        if lx.accept("."):
            e = self.expr()
            if lx.accept(":="):
                return H.Assign(first, e, self.expr())
            lx.expect("->")
            dst = self.ident("process name")
            lx.expect(".")
            var = self.ident("variable")
            if dst == first:
                lx._fail("communication needs two distinct processes", lx.pos - 1, lx.pos)
            return H.Com(first, e, dst, var)
        return None


def parse_chor_term(text: str) -> H.Choreography:
    p = _ChorParser(text)
    c = p.chor()
    p.lx.expect_eof()
    return c


def parse_chor(text: str) -> tuple[H.ChorDefs, list[str]]:
    """Definition file ``X := C`` entries; definitions must involve some process."""
    p = _ChorParser(text)
    defs = H.ChorDefs()
    order: list[str] = []
    spans: dict[str, Tok] = {}
    while not p.lx.at_eof():
        tok = p.lx.expect_ident("definition name")
        p.lx.expect(":=")
        if tok.text in defs:
            p.lx._fail(f"duplicate definition {tok.text}", tok.start, tok.end)
        defs[tok.text] = p.chor()
        spans[tok.text] = tok
        order.append(tok.text)
    for name in order:
        try:
            involved = H.pn(H.Call(name), defs)
        except Exception as exc:
            tok = spans[name]
            raise ParseError(f"definition {name}: {exc}", _span(text, tok.start, tok.end)) from None
        if not involved:
            tok = spans[name]
            raise ParseError(f"definition {name} involves no process", _span(text, tok.start, tok.end))
    return defs, order


# ---------------------------------------------------------------- proof scripts


@dataclass(frozen=True)
class _SAtom:
    text: str
    quoted: bool
    start: int
    end: int


_SExpr = Any  # _SAtom | list


def _read_sexpr(text: str) -> list[_SExpr]:
    pos = 0
    stack: list[list[_SExpr]] = [[]]
    opens: list[int] = []
    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            pos += 1
        elif ch in ";%":
            nl = text.find("\n", pos)
            pos = len(text) if nl < 0 else nl + 1
        elif ch == "(":
            stack.append([])
            opens.append(pos)
            pos += 1
        elif ch == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", _span(text, pos, pos + 1), ["("])
            done = stack.pop()
            opens.pop()
            stack[-1].append(done)
            pos += 1
        elif ch == '"':
            j, buf = pos + 1, []
            while j < len(text) and text[j] != '"':
                if text[j] == "\\" and j + 1 < len(text):
                    j += 1
                buf.append(text[j])
                j += 1
            if j >= len(text):
                raise ParseError("unterminated string", _span(text, pos, len(text)), ['"'])
            stack[-1].append(_SAtom("".join(buf), True, pos, j + 1))
            pos = j + 1
        else:
            j = pos
            while j < len(text) and not text[j].isspace() and text[j] not in '()"':
                j += 1
            stack[-1].append(_SAtom(text[pos:j], False, pos, j))
            pos = j
    if len(stack) != 1:
        raise ParseError("unbalanced '('", _span(text, opens[-1], opens[-1] + 1), [")"])
    return stack[0]


class _ProofReader:
    def __init__(self, text: str) -> None:
        self.text = text

    def err(self, msg: str, at: _SExpr, expected: list[str] | None = None) -> ParseError:
        start, end = self._extent(at)
        return ParseError(msg, _span(self.text, start, end), expected)

    def _extent(self, x: _SExpr) -> tuple[int, int]:
        if isinstance(x, _SAtom):
            return x.start, x.end
        if x:
            return self._extent(x[0])[0], self._extent(x[-1])[1]
        return 0, 0

    def head(self, x: _SExpr) -> str | None:
        if isinstance(x, list) and x and isinstance(x[0], _SAtom) and not x[0].quoted:
            return x[0].text
        return None

    def sub(self, parser: Callable[[str], Any], atom: _SExpr) -> Any:
        if not isinstance(atom, _SAtom):
            raise self.err("expected a string", atom)
        try:
            return parser(atom.text)
        except ParseError as err:
            off = atom.start + 1 if atom.quoted else atom.start
            raise _shift(err, self.text, off) from None

    def read(self) -> Derivation:
        top = _read_sexpr(self.text)
        if len(top) != 1 or self.head(top[0]) != "proof":
            raise ParseError("expected a single (proof ...) form", _span(self.text, 0, len(self.text)), ["(proof"])
        items = top[0][1:]
        conclusion = None
        nodes: dict[str, Node] = {}
        order: list[str] = []
        where: dict[str, _SExpr] = {}
        for item in items:
            h = self.head(item)
            if h == "conclusion":
                if len(item) != 2:
                    raise self.err("conclusion takes one sequent string", item)
                conclusion = self.sub(parse_sequent, item[1])
            elif h == "node":
                nid, node = self.node(item)
                if nid in nodes:
                    raise self.err(f"duplicate node {nid}", item)
                nodes[nid] = node
                order.append(nid)
                where[nid] = item
            else:
                raise self.err("expected (conclusion ...) or (node ...)", item, ["conclusion", "node"])
        if not order:
            raise ParseError("proof has no nodes", _span(self.text, 0, len(self.text)), ["node"])
        try:
            d = Derivation(nodes, order[0])
        except DerivationError as exc:
            bad = next((n for n in order if n in str(exc)), order[0])
            raise self.err(str(exc), where[bad]) from None
        if conclusion is not None and conclusion != d.conclusion:
            raise self.err("conclusion differs from the root sequent", items[0])
        return d

    def node(self, item: list[_SExpr]) -> tuple[str, Node]:
        if len(item) != 4 or not isinstance(item[1], _SAtom):
            raise self.err("expected (node ID (seq ...) (rule ...))", item)
        nid = item[1].text
        if self.head(item[2]) != "seq" or len(item[2]) != 2:
            raise self.err("expected (seq \"...\")", item[2], ["seq"])
        seq = self.sub(parse_sequent, item[2][1])
        rule_form = item[3]
        if self.head(rule_form) != "rule" or len(rule_form) < 2:
            raise self.err("expected (rule NAME ...)", rule_form, ["rule"])
        name_atom = rule_form[1]
        if not isinstance(name_atom, _SAtom) or name_atom.text not in RULES:
            raise self.err("unknown rule", name_atom, list(RULES))
        rule = name_atom.text
        principal = cut = label = None
        premises: tuple[str, ...] = ()
        target = None
        rest = rule_form[2:]
        if rule == "loop":
            if len(rest) != 1 or not isinstance(rest[0], _SAtom):
                raise self.err("expected (rule loop TARGET)", rule_form)
            target = rest[0].text
            rest = []
        for field_ in rest:
            h = self.head(field_)
            if h == "principal" and len(field_) == 2:
                principal = self.sub(parse_formula, field_[1])
            elif h == "cutformula" and len(field_) == 2:
                cut = self.sub(parse_formula, field_[1])
            elif h == "label" and len(field_) == 2:
                label = self.sub(parse_program, field_[1])
            elif h == "premises":
                if not all(isinstance(a, _SAtom) for a in field_[1:]):
                    raise self.err("premises are node ids", field_)
                premises = tuple(a.text for a in field_[1:])
            else:
                raise self.err("unknown rule annotation", field_,
                               ["principal", "cutformula", "label", "premises"])
        if rule == "w" and principal is None:
            raise self.err("rule w needs (principal ...)", rule_form, ["principal"])
        if rule == "cut" and cut is None:
            raise self.err("rule cut needs (cutformula ...)", rule_form, ["cutformula"])
        if rule == "k" and label is None:
            raise self.err("rule k needs (label ...)", rule_form, ["label"])
        return nid, Node(seq, RuleApp(rule, principal, cut, label, premises, target))


def parse_proof(text: str) -> Derivation:
    return _ProofReader(text).read()


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_proof(d: Derivation) -> str:
    lines = ["(proof", f"  (conclusion {_q(render_sequent(d.conclusion))})"]
    for nid in d.walk():
        node = d.nodes[nid]
        app = node.app
        parts = [f"(rule {app.rule}"]
        if app.rule == "loop":
            parts[0] += f" {app.target}"
        if app.principal is not None:
            parts.append(f"(principal {_q(str(app.principal))})")
        if app.cut_formula is not None:
            parts.append(f"(cutformula {_q(str(app.cut_formula))})")
        if app.k_label is not None:
            lab = str(app.k_label)
            parts.append(f"(label {lab if re.fullmatch(r'[A-Za-z_][A-Za-z0-9_]*', lab) else _q(lab)})")
        if app.premises:
            parts.append("(premises " + " ".join(app.premises) + ")")
        rule_s = " ".join(parts) + ")"
        lines.append(f"  (node {nid} (seq {_q(render_sequent(node.seq))}) {rule_s})")
    lines[-1] += ")"
    return "\n".join(lines)


def render(x: Any) -> str:
    """Canonical text of a formula, program, process, choreography or derivation."""
    if isinstance(x, Derivation):
        return render_proof(x)
    return str(x)
