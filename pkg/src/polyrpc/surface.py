"""Concrete ASCII syntax: tokenizer, recursive-descent parser, pretty-printer.

Terms::

    \\(x : A) @ Loc . M          lambda (several "(x : A)" groups nest)
    /\\ l [: static|dynamic], ... . V
    /!\\ a, ... . V
    M N      M [@ Loc ...]      M [A]      fst M      snd M      (M, N)
    letrec f : A = V in N
    M + N    M - N    M * N    M ++ N    if0(M, N, P)
    req(M, N)    call(M, N)    gen(Loc){M}{N}    #name{M, ...; A, ...; Loc, ...}

Types::

    A -Loc-> B     A * B     forall l [: kind], ... . A     forall! a, ... . A

A type identifier is a type variable when an enclosing ``/!\\`` or ``forall!``
binds it, and a base type otherwise. ``--`` starts a line comment.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .subst import flv, ftv, subst_term_loc, subst_term_type, subst_term_value, subst_type_loc, subst_type_type
from .syntax import (
    CLIENT, KEYWORDS, SERVER, App, Arrow, Base, Call, Const, DefRef, ForallLoc, ForallTy,
    Gen, Kind, Lam, Letrec, LocApp, LocConst, LocLam, LocVar, Location, Pair, Prim,
    Product, Proj, Req, Term, TyApp, TyLam, TyVar, Type, Var, fresh,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


# ------------------------------------------------------------------ lexing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<int>\d+)
  | (?P<forallbang>forall!)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>/!\\|/\\|\\|->|\+\+|[-+*()\[\]{},.:@=;\#])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | string | sym | kw | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            if kind == "forallbang":
                kind = "kw"
            elif kind == "ident" and chunk in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ----------------------------------------------------------------- parsing


@dataclass
class Definition:
    """A lifted top-level function of a sliced program file."""

    name: str
    params: tuple[str, ...]
    ty_params: tuple[str, ...]
    loc_params: tuple[str, ...]
    body: Term


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = tokenize(text)
        self.i = 0
        self.spans: dict[int, tuple[int, int]] = {}

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "kw") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def ident(self) -> str:
        if self.tok.kind != "ident":
            self.fail("expected an identifier")
        return self.advance().text

    def fail(self, message: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"{message}, found {found}", t.line, t.col)

    def mark(self, node, tok: Token):
        self.spans.setdefault(id(node), (tok.line, tok.col))
        return node

    # locations and kinds
    def location(self) -> Location:
        name = self.ident()
        if name == "c":
            return CLIENT
        if name == "s":
            return SERVER
        return LocVar(name)

    def loc_binders(self) -> list[tuple[str, Kind]]:
        out = []
        while True:
            name = self.ident()
            if name in ("c", "s"):
                self.fail("location constants cannot be bound")
            kind = Kind.STATIC
            if self.at(":"):
                self.advance()
                if self.at("static", "dynamic"):
                    kind = Kind(self.advance().text)
                else:
                    self.fail("expected 'static' or 'dynamic'")
            out.append((name, kind))
            if not self.at(","):
                return out
            self.advance()

    def names(self) -> list[str]:
        out = [self.ident()]
        while self.at(","):
            self.advance()
            out.append(self.ident())
        return out

    # types
    def type(self, tyvars: frozenset[str]) -> Type:
        if self.at("forall"):
            self.advance()
            binders = self.loc_binders()
            self.expect(".")
            body = self.type(tyvars)
            for name, kind in reversed(binders):
                body = ForallLoc(name, kind, body)
            return body
        if self.at("forall!"):
            self.advance()
            names = self.names()
            self.expect(".")
            body = self.type(tyvars | set(names))
            for name in reversed(names):
                body = ForallTy(name, body)
            return body
        dom = self.product_type(tyvars)
        if self.at("-"):
            self.advance()
            loc = self.location()
            self.expect("->")
            return Arrow(dom, loc, self.type(tyvars))
        return dom

    def product_type(self, tyvars) -> Type:
        ty = self.type_atom(tyvars)
        while self.at("*"):
            self.advance()
            ty = Product(ty, self.type_atom(tyvars))
        return ty

    def type_atom(self, tyvars) -> Type:
        if self.at("("):
            self.advance()
            ty = self.type(tyvars)
            self.expect(")")
            return ty
        name = self.ident()
        return TyVar(name) if name in tyvars else Base(name)

    # terms
    _BINDER_STARTS = ("\\", "/\\", "/!\\", "letrec")

    def term(self, tyvars: frozenset[str]) -> Term:
        start = self.tok
        if self.at("\\"):
            self.advance()
            params = []
            while self.at("("):
                self.advance()
                x = self.ident()
                self.expect(":")
                params.append((x, self.type(tyvars)))
                self.expect(")")
            if not params:
                self.fail("expected '(' after '\\'")
            self.expect("@")
            loc = self.location()
            self.expect(".")
            body = self.term(tyvars)
            for x, ty in reversed(params):
                body = Lam(loc, x, ty, body)
            return self.mark(body, start)
        if self.at("/\\"):
            self.advance()
            binders = self.loc_binders()
            self.expect(".")
            body = self.term(tyvars)
            for name, kind in reversed(binders):
                body = self._abstraction(LocLam, (name, kind), body, start)
            return self.mark(body, start)
        if self.at("/!\\"):
            self.advance()
            names = self.names()
            self.expect(".")
            body = self.term(tyvars | set(names))
            for name in reversed(names):
                body = self._abstraction(TyLam, (name,), body, start)
            return self.mark(body, start)
        if self.at("letrec"):
            self.advance()
            f = self.ident()
            self.expect(":")
            ty = self.type(tyvars)
            self.expect("=")
            value = self.term(tyvars)
            self.expect("in")
            body = self.term(tyvars)
            try:
                node = Letrec(f, ty, value, body)
            except ValueError as exc:
                raise ParseError(str(exc), start.line, start.col) from None
            return self.mark(node, start)
        return self.additive(tyvars)

    def _abstraction(self, cls, head, body, start: Token):
        try:
            return cls(*head, body)
        except ValueError as exc:
            raise ParseError(str(exc), start.line, start.col) from None

    def additive(self, tyvars) -> Term:
        left = self.multiplicative(tyvars)
        while self.at("+", "-", "++"):
            op = self.advance()
            right = self.multiplicative(tyvars)
            left = self.mark(Prim(op.text, (left, right)), op)
        return left

    def multiplicative(self, tyvars) -> Term:
        left = self.application(tyvars)
        while self.at("*"):
            op = self.advance()
            right = self.application(tyvars)
            left = self.mark(Prim("*", (left, right)), op)
        return left

    def application(self, tyvars) -> Term:
        fun = self.operand(tyvars)
        while True:
            start = self.tok
            if self.at(*self._BINDER_STARTS):
                return self.mark(App(fun, self.term(tyvars)), start)
            if not self.starts_operand():
                return fun
            fun = self.mark(App(fun, self.operand(tyvars)), start)

    def starts_operand(self) -> bool:
        t = self.tok
        if t.kind in ("ident", "int", "string"):
            return True
        return self.at("(", "fst", "snd", "req", "call", "gen", "if0", "#")

    def operand(self, tyvars) -> Term:
        if self.at("fst", "snd"):
            start = self.advance()
            index = 1 if start.text == "fst" else 2
            return self.mark(Proj(index, self.operand(tyvars)), start)
        return self.postfix(tyvars)

    def postfix(self, tyvars) -> Term:
        m = self.atom(tyvars)
        while self.at("["):
            start = self.advance()
            if self.at("@"):
                self.advance()
                locs = [self.location()]
                while not self.at("]"):
                    locs.append(self.location())
                for loc in locs:
                    m = self.mark(LocApp(m, loc), start)
            else:
                m = self.mark(TyApp(m, self.type(tyvars)), start)
            self.expect("]")
        return m

    def atom(self, tyvars) -> Term:
        t = self.tok
        if t.kind == "ident":
            self.advance()
            return self.mark(Var(t.text), t)
        if t.kind == "int":
            self.advance()
            return self.mark(Const(int(t.text)), t)
        if t.kind == "string":
            self.advance()
            return self.mark(Const(json.loads(t.text)), t)
        if self.at("("):
            self.advance()
            if self.at("-") and self.toks[self.i + 1].kind == "int" and self.toks[self.i + 2].text == ")":
                self.advance()
                n = int(self.advance().text)
                self.expect(")")
                return self.mark(Const(-n), t)
            first = self.term(tyvars)
            if self.at(","):
                self.advance()
                second = self.term(tyvars)
                self.expect(")")
                return self.mark(Pair(first, second), t)
            self.expect(")")
            return first
        if self.at("req", "call"):
            self.advance()
            self.expect("(")
            f = self.term(tyvars)
            self.expect(",")
            a = self.term(tyvars)
            self.expect(")")
            return self.mark((Req if t.text == "req" else Call)(f, a), t)
        if self.at("if0"):
            self.advance()
            self.expect("(")
            args = [self.term(tyvars)]
            for _ in range(2):
                self.expect(",")
                args.append(self.term(tyvars))
            self.expect(")")
            return self.mark(Prim("if0", tuple(args)), t)
        if self.at("gen"):
            self.advance()
            self.expect("(")
            callee = self.location()
            self.expect(")")
            self.expect("{")
            f = self.term(tyvars)
            self.expect("}")
            self.expect("{")
            a = self.term(tyvars)
            self.expect("}")
            return self.mark(Gen(callee, f, a), t)
        if self.at("#"):
            self.advance()
            name = self.ident()
            self.expect("{")
            args = self._section(lambda: self.term(tyvars))
            self.expect(";")
            tys = self._section(lambda: self.type(tyvars))
            self.expect(";")
            locs = self._section(self.location)
            self.expect("}")
            return self.mark(DefRef(name, tuple(args), tuple(tys), tuple(locs)), t)
        self.fail("expected a term")

    def _section(self, item) -> list:
        if self.at(";", "}"):
            return []
        out = [item()]
        while self.at(","):
            self.advance()
            out.append(item())
        return out

    def param_section(self) -> list[str]:
        return self._section(self.ident)

    def finish(self) -> None:
        if self.tok.kind != "eof":
            self.fail("unexpected trailing input")


@dataclass
class SourceFile:
    path: str
    text: str
    parsed: Term
    spans: dict[int, tuple[int, int]] = field(default_factory=dict)

    def span(self, node) -> tuple[int, int] | None:
        return self.spans.get(id(node))


def parse(text: str) -> Term:
    return parse_source(text).parsed


def parse_source(text: str, path: str = "<input>") -> SourceFile:
    p = _Parser(text)
    m = p.term(frozenset())
    p.finish()
    return SourceFile(path, text, m, p.spans)


def read_source(path: str | Path) -> SourceFile:
    text = Path(path).read_text(encoding="utf-8")
    return parse_source(text, str(path))


def parse_type(text: str) -> Type:
    p = _Parser(text)
    ty = p.type(frozenset())
    p.finish()
    return ty


def parse_definitions(text: str) -> list[Definition]:
    """Parse a sliced program file: ``def name {xs; as; ls} = M`` repeated."""
    p = _Parser(text)
    out = []
    while p.tok.kind != "eof":
        p.expect("def")
        name = p.ident()
        p.expect("{")
        params = p.param_section()
        p.expect(";")
        ty_params = p.param_section()
        p.expect(";")
        loc_params = p.param_section()
        p.expect("}")
        p.expect("=")
        body = p.term(frozenset(ty_params))
        out.append(Definition(name, tuple(params), tuple(ty_params), tuple(loc_params), body))
    return out


# ---------------------------------------------------------------- printing

# precedence levels for terms
_TOP, _ADD, _MUL, _APP, _POSTFIX = 0, 1, 2, 3, 5


def print_type(ty: Type) -> str:
    return _type(_sanitize_type(ty), 0)


def _type(ty: Type, level: int) -> str:
    # levels: 0 arrow/forall, 1 product, 2 atom
    match ty:
        case Base(name) | TyVar(name):
            return name
        case Arrow(dom, loc, cod):
            text = f"{_type(dom, 1)} -{loc}-> {_type(cod, 0)}"
            return f"({text})" if level > 0 else text
        case Product(a, b):
            text = f"{_type(a, 1)} * {_type(b, 2)}"
            return f"({text})" if level > 1 else text
        case ForallTy(a, body):
            text = f"forall! {a} . {_type(body, 0)}"
            return f"({text})" if level > 0 else text
        case ForallLoc(l, kind, body):
            binder = l if kind is Kind.STATIC else f"{l} : {kind}"
            text = f"forall {binder} . {_type(body, 0)}"
            return f"({text})" if level > 0 else text
    raise TypeError(f"not a type: {ty!r}")


def print_term(m: Term) -> str:
    return _term(_sanitize_term(m), _TOP)


def _wrap(text: str, needed: bool) -> str:
    return f"({text})" if needed else text


def _term(m: Term, level: int) -> str:
    match m:
        case Var(x):
            return x
        case Const(v) if isinstance(v, str):
            return json.dumps(v, ensure_ascii=False)
        case Const(v):
            return str(v) if v >= 0 else f"(-{-v})"
        case Lam(loc, x, ty, body):
            return _wrap(f"\\({x}:{print_type(ty)})@{loc}.{_term(body, _TOP)}", level > _TOP)
        case TyLam(a, body):
            return _wrap(f"/!\\{a}.{_term(body, _TOP)}", level > _TOP)
        case LocLam(l, kind, body):
            binder = l if kind is Kind.STATIC else f"{l}:{kind}"
            return _wrap(f"/\\{binder}.{_term(body, _TOP)}", level > _TOP)
        case Letrec(f, ty, v, body):
            text = f"letrec {f} : {print_type(ty)} = {_term(v, _TOP)} in {_term(body, _TOP)}"
            return _wrap(text, level > _TOP)
        case Prim("if0", args):
            return "if0(" + ", ".join(_term(a, _TOP) for a in args) + ")"
        case Prim(op, (a, b)) if op == "*":
            return _wrap(f"{_term(a, _MUL)} * {_term(b, _APP)}", level > _MUL)
        case Prim(op, (a, b)):
            return _wrap(f"{_term(a, _ADD)} {op} {_term(b, _MUL)}", level > _ADD)
        case App(f, a):
            return _wrap(f"{_term(f, _APP)} {_term(a, _POSTFIX)}", level > _APP)
        case Proj(i, a):
            word = "fst" if i == 1 else "snd"
            return _wrap(f"{word} {_term(a, _POSTFIX)}", level > _APP)
        case TyApp(f, ty):
            return f"{_term(f, _POSTFIX)} [{print_type(ty)}]"
        case LocApp(f, loc):
            return f"{_term(f, _POSTFIX)} [@{loc}]"
        case Pair(a, b):
            return f"({_term(a, _TOP)}, {_term(b, _TOP)})"
        case Req(f, a):
            return f"req({_term(f, _TOP)}, {_term(a, _TOP)})"
        case Call(f, a):
            return f"call({_term(f, _TOP)}, {_term(a, _TOP)})"
        case Gen(callee, f, a):
            return f"gen({callee}){{{_term(f, _TOP)}}}{{{_term(a, _TOP)}}}"
        case DefRef(name, args, tys, locs):
            sections = (
                ", ".join(_term(a, _TOP) for a in args),
                ", ".join(print_type(t) for t in tys),
                ", ".join(str(loc) for loc in locs),
            )
            return f"#{name}{{{'; '.join(sections)}}}"
    raise TypeError(f"not a term: {m!r}")


def print_definitions(defs) -> str:
    chunks = []
    for d in defs:
        head = f"def {d.name} {{{', '.join(d.params)}; {', '.join(d.ty_params)}; {', '.join(d.loc_params)}}}"
        chunks.append(f"{head} =\n  {print_term(d.body)}\n")
    return "\n".join(chunks)


# ----------------------------------------------- binder names the syntax can't show


def _base_names(x) -> set[str]:
    match x:
        case Base(name):
            return {name}
        case TyVar():
            return set()
        case Arrow(a, _, b) | Product(a, b):
            return _base_names(a) | _base_names(b)
        case ForallTy(_, body) | ForallLoc(_, _, body):
            return _base_names(body)
    out: set[str] = set()
    for part in _parts(x):
        out |= _base_names(part)
    return out


def _parts(m: Term) -> list:
    match m:
        case Lam(_, _, ty, body):
            return [ty, body]
        case TyApp(f, ty):
            return [f, ty]
        case Letrec(_, ty, v, body):
            return [ty, v, body]
        case DefRef(_, args, tys, _):
            return [*args, *tys]
    from .subst import _term_children

    return list(_term_children(m))


def _clean_name(name: str, taken: set[str]) -> str:
    while name in taken or name in KEYWORDS or name in ("c", "s"):
        name = fresh(name if name not in ("c", "s") else "l")
    return name


def _sanitize_type(ty: Type) -> Type:
    match ty:
        case Base() | TyVar():
            return ty
        case Arrow(a, loc, b):
            return Arrow(_sanitize_type(a), loc, _sanitize_type(b))
        case Product(a, b):
            return Product(_sanitize_type(a), _sanitize_type(b))
        case ForallTy(a, body):
            clash = _base_names(body) | ftv(body) - {a}
            if a in clash or a in KEYWORDS:
                new = _clean_name(a, clash)
                body = subst_type_type(body, TyVar(new), a)
                a = new
            return ForallTy(a, _sanitize_type(body))
        case ForallLoc(l, kind, body):
            if l in ("c", "s") or l in KEYWORDS:
                new = _clean_name(l, flv(body))
                body = subst_type_loc(body, LocVar(new), l)
                l = new
            return ForallLoc(l, kind, _sanitize_type(body))
    raise TypeError(f"not a type: {ty!r}")


def _sanitize_term(m: Term) -> Term:
    """Rename binders whose names would not survive a print/parse round trip."""
    from .subst import _map_children

    match m:
        case Var() | Const():
            return m
        case Lam(loc, x, ty, body):
            if x in KEYWORDS:
                new = _clean_name(x, set())
                body = subst_term_value(body, Var(new), x)
                x = new
            return Lam(loc, x, _sanitize_type(ty), _sanitize_term(body))
        case TyLam(a, body):
            clash = _base_names(body)
            if a in clash or a in KEYWORDS:
                new = _clean_name(a, clash | ftv(body))
                body = subst_term_type(body, TyVar(new), a)
                a = new
            return TyLam(a, _sanitize_term(body))
        case LocLam(l, kind, body):
            if l in ("c", "s") or l in KEYWORDS:
                new = _clean_name(l, flv(body))
                body = subst_term_loc(body, LocVar(new), l)
                l = new
            return LocLam(l, kind, _sanitize_term(body))
        case Letrec(f, ty, v, body):
            if f in KEYWORDS:
                new = _clean_name(f, set())
                v = subst_term_value(v, Var(new), f)
                body = subst_term_value(body, Var(new), f)
                f = new
            return Letrec(f, _sanitize_type(ty), _sanitize_term(v), _sanitize_term(body))
    return _map_children(m, _sanitize_term, _sanitize_type, lambda loc: loc)
