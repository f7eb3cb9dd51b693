"""Free variables, capture-avoiding substitutions, and alpha-equivalence.

Three namespaces are kept apart throughout: term variables, type variables and
location variables. Every substitution renames a binder only when it would
capture a free name of the thing being substituted in.
"""

from __future__ import annotations

from typing import Iterable, Union

from .syntax import (
    App, Arrow, Base, Call, Const, DefRef, ForallLoc, ForallTy, Gen, Lam, Letrec,
    LocApp, LocConst, LocLam, LocVar, Location, Pair, Prim, Product, Proj, Req,
    Term, TyApp, TyLam, TyVar, Type, TypeEnv, Var, fresh,
)

# ------------------------------------------------------------ free variables


def fv(m: Term) -> set[str]:
    """Free term variables."""
    match m:
        case Var(x):
            return {x}
        case Lam(_, x, _, body):
            return fv(body) - {x}
        case Letrec(f, _, v, body):
            return (fv(v) | fv(body)) - {f}
        case Const():
            return set()
    out: set[str] = set()
    for child in _term_children(m):
        out |= fv(child)
    return out


def ftv(x: Type | Term) -> set[str]:
    """Free type variables of a type or of a term's annotations."""
    match x:
        case Base():
            return set()
        case TyVar(a):
            return {a}
        case Arrow(dom, _, cod) | Product(dom, cod):
            return ftv(dom) | ftv(cod)
        case ForallTy(a, body):
            return ftv(body) - {a}
        case ForallLoc(_, _, body):
            return ftv(body)
        case Lam(_, _, ty, body):
            return ftv(ty) | ftv(body)
        case TyLam(a, body):
            return ftv(body) - {a}
        case TyApp(fun, ty):
            return ftv(fun) | ftv(ty)
        case Letrec(_, ty, v, body):
            return ftv(ty) | ftv(v) | ftv(body)
        case DefRef(_, args, tys, _):
            out = set().union(*(ftv(t) for t in tys)) if tys else set()
            for a in args:
                out |= ftv(a)
            return out
    out = set()
    for child in _term_children(x):
        out |= ftv(child)
    return out


def flv(x: Location | Type | Term | TypeEnv) -> set[str]:
    """Free location variables; over an environment, its bound location
    variables together with those free in its term bindings."""
    match x:
        case LocConst():
            return set()
        case LocVar(name):
            return {name}
        case Base() | TyVar():
            return set()
        case Arrow(dom, loc, cod):
            return flv(dom) | flv(loc) | flv(cod)
        case Product(a, b):
            return flv(a) | flv(b)
        case ForallTy(_, body):
            return flv(body)
        case ForallLoc(l, _, body):
            return flv(body) - {l}
        case TypeEnv():
            out = set(x.locvars)
            for ty in x.terms.values():
                out |= flv(ty)
            return out
        case Lam(loc, _, ty, body):
            return flv(loc) | flv(ty) | flv(body)
        case LocLam(l, _, body):
            return flv(body) - {l}
        case TyApp(fun, ty):
            return flv(fun) | flv(ty)
        case LocApp(fun, loc):
            return flv(fun) | flv(loc)
        case Gen(callee, fun, arg):
            return flv(callee) | flv(fun) | flv(arg)
        case Letrec(_, ty, v, body):
            return flv(ty) | flv(v) | flv(body)
        case DefRef(_, args, tys, locs):
            out = set()
            for a in args:
                out |= flv(a)
            for t in tys:
                out |= flv(t)
            for loc in locs:
                out |= flv(loc)
            return out
    out = set()
    for child in _term_children(x):
        out |= flv(child)
    return out


def _term_children(m: Term) -> Iterable[Term]:
    match m:
        case Var() | Const():
            return ()
        case Lam(_, _, _, body) | TyLam(_, body) | LocLam(_, _, body):
            return (body,)
        case TyApp(fun, _) | LocApp(fun, _):
            return (fun,)
        case App(a, b) | Pair(a, b) | Req(a, b) | Call(a, b) | Gen(_, a, b):
            return (a, b)
        case Proj(_, arg):
            return (arg,)
        case Prim(_, args) | DefRef(_, args, _, _):
            return args
        case Letrec(_, _, v, body):
            return (v, body)
    raise TypeError(f"not a term: {m!r}")


# ------------------------------------------------------- generic traversal


def _map_children(m: Term, term_fn, type_fn, loc_fn) -> Term:
    """Rebuild a non-binding node by mapping its immediate parts."""
    match m:
        case App(a, b):
            return App(term_fn(a), term_fn(b))
        case Pair(a, b):
            return Pair(term_fn(a), term_fn(b))
        case Req(a, b):
            return Req(term_fn(a), term_fn(b))
        case Call(a, b):
            return Call(term_fn(a), term_fn(b))
        case Gen(callee, a, b):
            return Gen(loc_fn(callee), term_fn(a), term_fn(b))
        case Proj(i, arg):
            return Proj(i, term_fn(arg))
        case TyApp(fun, ty):
            return TyApp(term_fn(fun), type_fn(ty))
        case LocApp(fun, loc):
            return LocApp(term_fn(fun), loc_fn(loc))
        case Prim(op, args):
            return Prim(op, tuple(term_fn(a) for a in args))
        case DefRef(name, args, tys, locs):
            return DefRef(
                name,
                tuple(term_fn(a) for a in args),
                tuple(type_fn(t) for t in tys),
                tuple(loc_fn(loc) for loc in locs),
            )
    raise TypeError(f"not a non-binding term: {m!r}")


# ------------------------------------------------------ location substitution


def subst_loc(target: Location, loc: Location, l: str) -> Location:
    """``target{loc/l}``."""
    if isinstance(target, LocVar) and target.name == l:
        return loc
    return target


def subst_type_loc(a: Type, loc: Location, l: str) -> Type:
    """``a{loc/l}``."""
    match a:
        case Base() | TyVar():
            return a
        case Arrow(dom, at, cod):
            return Arrow(subst_type_loc(dom, loc, l), subst_loc(at, loc, l), subst_type_loc(cod, loc, l))
        case Product(x, y):
            return Product(subst_type_loc(x, loc, l), subst_type_loc(y, loc, l))
        case ForallTy(alpha, body):
            return ForallTy(alpha, subst_type_loc(body, loc, l))
        case ForallLoc(l2, kind, body):
            if l2 == l:
                return a
            if isinstance(loc, LocVar) and loc.name == l2 and l in flv(body):
                renamed = fresh(l2)
                body = subst_type_loc(body, LocVar(renamed), l2)
                l2 = renamed
            return ForallLoc(l2, kind, subst_type_loc(body, loc, l))
    raise TypeError(f"not a type: {a!r}")


def subst_term_loc(m: Term, loc: Location, l: str) -> Term:
    """``m{loc/l}``: replace free occurrences of location variable ``l``."""

    def go(t: Term) -> Term:
        match t:
            case Var() | Const():
                return t
            case Lam(at, x, ty, body):
                return Lam(subst_loc(at, loc, l), x, subst_type_loc(ty, loc, l), go(body))
            case TyLam(alpha, body):
                return TyLam(alpha, go(body))
            case LocLam(l2, kind, body):
                if l2 == l:
                    return t
                if isinstance(loc, LocVar) and loc.name == l2 and l in flv(body):
                    renamed = fresh(l2)
                    body = subst_term_loc(body, LocVar(renamed), l2)
                    l2 = renamed
                return LocLam(l2, kind, go(body))
            case Letrec(f, ty, v, body):
                return Letrec(f, subst_type_loc(ty, loc, l), go(v), go(body))
        return _map_children(t, go, lambda ty: subst_type_loc(ty, loc, l), lambda x: subst_loc(x, loc, l))

    if l not in flv(m):
        return m
    return go(m)


# ---------------------------------------------------------- type substitution


def subst_type_type(a: Type, b: Type, alpha: str) -> Type:
    """``a{b/alpha}``."""
    b_ftv = ftv(b)
    b_flv = flv(b)

    def go(t: Type) -> Type:
        match t:
            case Base():
                return t
            case TyVar(name):
                return b if name == alpha else t
            case Arrow(dom, loc, cod):
                return Arrow(go(dom), loc, go(cod))
            case Product(x, y):
                return Product(go(x), go(y))
            case ForallTy(beta, body):
                if beta == alpha:
                    return t
                if beta in b_ftv and alpha in ftv(body):
                    renamed = fresh(beta)
                    body = subst_type_type(body, TyVar(renamed), beta)
                    beta = renamed
                return ForallTy(beta, go(body))
            case ForallLoc(l, kind, body):
                if l in b_flv and alpha in ftv(body):
                    renamed = fresh(l)
                    body = subst_type_loc(body, LocVar(renamed), l)
                    l = renamed
                return ForallLoc(l, kind, go(body))
        raise TypeError(f"not a type: {t!r}")

    return go(a)


def subst_term_type(m: Term, b: Type, alpha: str) -> Term:
    """``m{b/alpha}``: substitute a type for a type variable in annotations."""
    b_ftv = ftv(b)
    b_flv = flv(b)

    def ty(t: Type) -> Type:
        return subst_type_type(t, b, alpha)

    def go(t: Term) -> Term:
        match t:
            case Var() | Const():
                return t
            case Lam(at, x, pty, body):
                return Lam(at, x, ty(pty), go(body))
            case TyLam(beta, body):
                if beta == alpha:
                    return t
                if beta in b_ftv and alpha in ftv(body):
                    renamed = fresh(beta)
                    body = subst_term_type(body, TyVar(renamed), beta)
                    beta = renamed
                return TyLam(beta, go(body))
            case LocLam(l, kind, body):
                if l in b_flv and alpha in ftv(body):
                    renamed = fresh(l)
                    body = subst_term_loc(body, LocVar(renamed), l)
                    l = renamed
                return LocLam(l, kind, go(body))
            case Letrec(f, lty, v, body):
                return Letrec(f, ty(lty), go(v), go(body))
        return _map_children(t, go, ty, lambda loc: loc)

    if alpha not in ftv(m):
        return m
    return go(m)


# ---------------------------------------------------------- term substitution


def subst_term_value(m: Term, v: Term, x: str) -> Term:
    """``m{v/x}``: replace free occurrences of ``x`` by ``v``, renaming binders
    of ``m`` that would capture a free term, type or location variable of ``v``."""
    v_fv = fv(v)
    v_ftv = ftv(v)
    v_flv = flv(v)

    def go(t: Term) -> Term:
        match t:
            case Var(name):
                return v if name == x else t
            case Const():
                return t
            case Lam(at, y, ty, body):
                if y == x:
                    return t
                if y in v_fv and x in fv(body):
                    renamed = fresh(y)
                    body = subst_term_value(body, Var(renamed), y)
                    y = renamed
                return Lam(at, y, ty, go(body))
            case TyLam(beta, body):
                if beta in v_ftv and x in fv(body):
                    renamed = fresh(beta)
                    body = subst_term_type(body, TyVar(renamed), beta)
                    beta = renamed
                return TyLam(beta, go(body))
            case LocLam(l, kind, body):
                if l in v_flv and x in fv(body):
                    renamed = fresh(l)
                    body = subst_term_loc(body, LocVar(renamed), l)
                    l = renamed
                return LocLam(l, kind, go(body))
            case Letrec(f, ty, val, body):
                if f == x:
                    return t
                if f in v_fv and x in (fv(val) | fv(body)):
                    renamed = fresh(f)
                    val = subst_term_value(val, Var(renamed), f)
                    body = subst_term_value(body, Var(renamed), f)
                    f = renamed
                return Letrec(f, ty, go(val), go(body))
        return _map_children(t, go, lambda ty: ty, lambda loc: loc)

    if x not in fv(m):
        return m
    return go(m)


# ----------------------------------------------------------- alpha-equivalence

_Scope = dict  # name -> binder depth, one per namespace and per side


class _AlphaEq:
    def __init__(self) -> None:
        self.depth = 0

    def bind(self, scopes: tuple[_Scope, _Scope], x: str, y: str) -> tuple[_Scope, _Scope]:
        self.depth += 1
        left, right = dict(scopes[0]), dict(scopes[1])
        left[x] = right[y] = self.depth
        return left, right

    @staticmethod
    def same_name(x: str, y: str, sx: _Scope, sy: _Scope) -> bool:
        bx, by = sx.get(x), sy.get(y)
        if bx is None and by is None:
            return x == y
        return bx == by

    def loc(self, a: Location, b: Location, ls: tuple[_Scope, _Scope]) -> bool:
        if isinstance(a, LocConst) or isinstance(b, LocConst):
            return a == b
        return self.same_name(a.name, b.name, *ls)

    def type(self, a: Type, b: Type, ts, ls) -> bool:
        match a, b:
            case Base(x), Base(y):
                return x == y
            case TyVar(x), TyVar(y):
                return self.same_name(x, y, *ts)
            case Arrow(d1, l1, c1), Arrow(d2, l2, c2):
                return self.loc(l1, l2, ls) and self.type(d1, d2, ts, ls) and self.type(c1, c2, ts, ls)
            case Product(x1, y1), Product(x2, y2):
                return self.type(x1, x2, ts, ls) and self.type(y1, y2, ts, ls)
            case ForallTy(x, b1), ForallTy(y, b2):
                return self.type(b1, b2, self.bind(ts, x, y), ls)
            case ForallLoc(x, k1, b1), ForallLoc(y, k2, b2):
                return k1 == k2 and self.type(b1, b2, ts, self.bind(ls, x, y))
        return False

    def term(self, a: Term, b: Term, vs, ts, ls) -> bool:
        match a, b:
            case Var(x), Var(y):
                return self.same_name(x, y, *vs)
            case Const(x), Const(y):
                return type(x) is type(y) and x == y
            case Lam(l1, x, t1, b1), Lam(l2, y, t2, b2):
                return (
                    self.loc(l1, l2, ls)
                    and self.type(t1, t2, ts, ls)
                    and self.term(b1, b2, self.bind(vs, x, y), ts, ls)
                )
            case TyLam(x, b1), TyLam(y, b2):
                return self.term(b1, b2, vs, self.bind(ts, x, y), ls)
            case LocLam(x, k1, b1), LocLam(y, k2, b2):
                return k1 == k2 and self.term(b1, b2, vs, ts, self.bind(ls, x, y))
            case Letrec(f, t1, v1, b1), Letrec(g, t2, v2, b2):
                inner = self.bind(vs, f, g)
                return self.type(t1, t2, ts, ls) and self.term(v1, v2, inner, ts, ls) and self.term(b1, b2, inner, ts, ls)
            case App(f1, x1), App(f2, x2):
                return self.term(f1, f2, vs, ts, ls) and self.term(x1, x2, vs, ts, ls)
            case Req(f1, x1), Req(f2, x2):
                return self.term(f1, f2, vs, ts, ls) and self.term(x1, x2, vs, ts, ls)
            case Call(f1, x1), Call(f2, x2):
                return self.term(f1, f2, vs, ts, ls) and self.term(x1, x2, vs, ts, ls)
            case Pair(f1, x1), Pair(f2, x2):
                return self.term(f1, f2, vs, ts, ls) and self.term(x1, x2, vs, ts, ls)
            case Gen(c1, f1, x1), Gen(c2, f2, x2):
                return self.loc(c1, c2, ls) and self.term(f1, f2, vs, ts, ls) and self.term(x1, x2, vs, ts, ls)
            case Proj(i, x1), Proj(j, x2):
                return i == j and self.term(x1, x2, vs, ts, ls)
            case TyApp(f1, t1), TyApp(f2, t2):
                return self.term(f1, f2, vs, ts, ls) and self.type(t1, t2, ts, ls)
            case LocApp(f1, l1), LocApp(f2, l2):
                return self.term(f1, f2, vs, ts, ls) and self.loc(l1, l2, ls)
            case Prim(o1, a1), Prim(o2, a2):
                return o1 == o2 and len(a1) == len(a2) and all(
                    self.term(x, y, vs, ts, ls) for x, y in zip(a1, a2)
                )
            case DefRef(n1, a1, t1, l1), DefRef(n2, a2, t2, l2):
                return (
                    n1 == n2
                    and len(a1) == len(a2) and len(t1) == len(t2) and len(l1) == len(l2)
                    and all(self.term(x, y, vs, ts, ls) for x, y in zip(a1, a2))
                    and all(self.type(x, y, ts, ls) for x, y in zip(t1, t2))
                    and all(self.loc(x, y, ls) for x, y in zip(l1, l2))
                )
        return False


_EMPTY = ({}, {})

AlphaTarget = Union[Term, Type]


def alpha_eq(a: AlphaTarget, b: AlphaTarget) -> bool:
    """Structural equality up to consistent renaming of bound term, type and
    location variables. Accepts two terms or two types."""
    checker = _AlphaEq()
    if _is_type(a) and _is_type(b):
        return checker.type(a, b, _EMPTY, _EMPTY)
    if _is_type(a) or _is_type(b):
        return False
    return checker.term(a, b, _EMPTY, _EMPTY, _EMPTY)


def _is_type(x) -> bool:
    return isinstance(x, (Base, Arrow, TyVar, ForallTy, ForallLoc, Product))
