"""Syntax-directed typing ``env |-_at m : A`` for the polymorphic calculus and
for its monomorphic, pair-extended target.

Both judgments share one checker; the monomorphic one additionally rejects
location abstraction, location application and location variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .subst import _term_children, alpha_eq, flv, ftv, fv, subst_type_loc, subst_type_type
from .syntax import (
    CLIENT, INT, SERVER, STRING, App, Arrow, Base, Call, Const, DefRef, ForallLoc,
    ForallTy, Gen, Kind, Lam, Letrec, LocApp, LocConst, LocLam, LocVar, Location,
    Pair, Prim, Product, Proj, Req, Term, TyApp, TyLam, TyVar, Type, TypeEnv, Var,
    fresh,
)

ERROR_KINDS = (
    "UnboundVar", "UnboundTyVar", "UnboundLocVar", "ArrowExpected",
    "ForallTyExpected", "ForallLocExpected", "ArgMismatch", "LocationMismatch",
    "PairExpected", "ProductExpected", "PolyFormInMono",
)


class TypeCheckError(Exception):
    """A failed typing judgment. ``kind`` names the rule that failed and
    ``site`` is the offending subterm."""

    def __init__(self, kind: str, site, detail: str) -> None:
        assert kind in ERROR_KINDS, kind
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.site = site
        self.detail = detail


@dataclass(frozen=True)
class TypingResult:
    type: Type
    height: int


Judgment = Callable[[TypeEnv, Location, Term, TypingResult], None]


@dataclass(frozen=True)
class AppSite:
    """Caller and callee locations of one application, as written in the source."""

    at: Location
    callee: Location


class _Checker:
    def __init__(self, mono: bool, on_judgment: Judgment | None, record: dict | None) -> None:
        self.mono = mono
        self.on_judgment = on_judgment
        self.record = record

    # -- renaming of shadowed binders ------------------------------------
    # A binder whose name is already in scope gets a fresh internal name so
    # environment types never confuse the two. ``tren``/``lren`` map source
    # names to internal ones.

    @staticmethod
    def resolve_type(ty: Type, tren: dict, lren: dict) -> Type:
        for src, internal in tren.items():
            if src != internal:
                ty = subst_type_type(ty, TyVar(internal), src)
        for src, internal in lren.items():
            if src != internal:
                ty = subst_type_loc(ty, LocVar(internal), src)
        return ty

    @staticmethod
    def resolve_loc(loc: Location, lren: dict) -> Location:
        if isinstance(loc, LocVar) and loc.name in lren:
            return LocVar(lren[loc.name])
        return loc

    @staticmethod
    def source_loc(loc: Location, lren: dict) -> Location:
        if isinstance(loc, LocVar):
            for src, internal in lren.items():
                if internal == loc.name:
                    return LocVar(src)
        return loc

    # -- well-formedness of annotations ----------------------------------

    def check_loc(self, env: TypeEnv, loc: Location, site) -> None:
        if isinstance(loc, LocVar):
            if self.mono:
                raise TypeCheckError("PolyFormInMono", site, f"location variable {loc} in a monomorphic term")
            if loc.name not in env.locvars:
                raise TypeCheckError("UnboundLocVar", site, f"unbound location variable {loc}")

    def check_type(self, env: TypeEnv, ty: Type, site) -> None:
        if self.mono and _has_location_polymorphism(ty):
            raise TypeCheckError("PolyFormInMono", site, "location-polymorphic type in a monomorphic term")
        unbound = ftv(ty) - env.tyvars
        if unbound:
            raise TypeCheckError("UnboundTyVar", site, f"unbound type variable {min(unbound)}")
        unbound = flv(ty) - env.locvars
        if unbound:
            raise TypeCheckError("UnboundLocVar", site, f"unbound location variable {min(unbound)}")

    # -- the rules ---------------------------------------------------------

    def check(self, env: TypeEnv, at: Location, m: Term, tren: dict, lren: dict) -> TypingResult:
        ty, height = self._rule(env, at, m, tren, lren)
        result = TypingResult(ty, height)
        if self.on_judgment is not None:
            self.on_judgment(env, at, m, result)
        return result

    def _rule(self, env, at, m, tren, lren) -> tuple[Type, int]:
        match m:
            case Var(x):
                if x not in env.terms:
                    raise TypeCheckError("UnboundVar", m, f"unbound variable {x}")
                return env.terms[x], 1

            case Const(v):
                return (STRING if isinstance(v, str) else INT), 1

            case Lam(loc, x, pty, body):
                loc = self.resolve_loc(loc, lren)
                pty = self.resolve_type(pty, tren, lren)
                self.check_loc(env, loc, m)
                self.check_type(env, pty, m)
                r = self.check(env.with_var(x, pty), loc, body, tren, lren)
                return Arrow(pty, loc, r.type), r.height + 1

            case App(fun, arg) | Req(fun, arg) | Call(fun, arg) | Gen(_, fun, arg):
                rf = self.check(env, at, fun, tren, lren)
                if not isinstance(rf.type, Arrow):
                    raise TypeCheckError("ArrowExpected", fun, "applying a non-function")
                ra = self.check(env, at, arg, tren, lren)
                if not alpha_eq(rf.type.dom, ra.type):
                    raise TypeCheckError("ArgMismatch", arg, "argument type does not match the parameter type")
                self._check_app_form(env, at, m, rf.type.loc, lren)
                if self.record is not None and isinstance(m, App):
                    self.record[id(m)] = AppSite(self.source_loc(at, lren), self.source_loc(rf.type.loc, lren))
                return rf.type.cod, max(rf.height, ra.height) + 1

            case TyLam(alpha, body):
                inner = fresh(alpha) if alpha in env.tyvars else alpha
                r = self.check(env.with_tyvar(inner), at, body, {**tren, alpha: inner}, lren)
                return ForallTy(inner, r.type), r.height + 1

            case TyApp(fun, targ):
                rf = self.check(env, at, fun, tren, lren)
                if not isinstance(rf.type, ForallTy):
                    raise TypeCheckError("ForallTyExpected", fun, "type application of a non-polymorphic term")
                targ = self.resolve_type(targ, tren, lren)
                self.check_type(env, targ, m)
                return subst_type_type(rf.type.body, targ, rf.type.tyvar), rf.height + 1

            case LocLam(l, kind, body):
                if self.mono:
                    raise TypeCheckError("PolyFormInMono", m, "location abstraction in a monomorphic term")
                inner = fresh(l) if l in env.locvars else l
                r = self.check(env.with_locvar(inner), at, body, tren, {**lren, l: inner})
                return ForallLoc(inner, kind, r.type), r.height + 1

            case LocApp(fun, larg):
                if self.mono:
                    raise TypeCheckError("PolyFormInMono", m, "location application in a monomorphic term")
                rf = self.check(env, at, fun, tren, lren)
                if not isinstance(rf.type, ForallLoc):
                    raise TypeCheckError("ForallLocExpected", fun, "location application of a non-location-polymorphic term")
                larg = self.resolve_loc(larg, lren)
                self.check_loc(env, larg, m)
                if self.record is not None:
                    self.record[id(m)] = rf.type.kind
                return subst_type_loc(rf.type.body, larg, rf.type.locvar), rf.height + 1

            case Pair(a, b):
                ra = self.check(env, at, a, tren, lren)
                rb = self.check(env, at, b, tren, lren)
                return Product(ra.type, rb.type), max(ra.height, rb.height) + 1

            case Proj(i, arg):
                r = self.check(env, at, arg, tren, lren)
                if not isinstance(r.type, Product):
                    raise TypeCheckError("ProductExpected", arg, "projection from a non-pair")
                return (r.type.fst if i == 1 else r.type.snd), r.height + 1

            case Prim(op, args):
                results = [self.check(env, at, a, tren, lren) for a in args]
                return self._prim(op, args, [r.type for r in results]), max(r.height for r in results) + 1

            case Letrec(f, lty, value, body):
                lty = self.resolve_type(lty, tren, lren)
                self.check_type(env, lty, m)
                inner_env = env.with_var(f, lty)
                rv = self.check(inner_env, at, value, tren, lren)
                if not alpha_eq(rv.type, lty):
                    raise TypeCheckError("ArgMismatch", value, f"letrec {f}: value type does not match its annotation")
                rb = self.check(inner_env, at, body, tren, lren)
                return rb.type, max(rv.height, rb.height) + 1

            case DefRef():
                raise ValueError("closure references of sliced programs are not type checked")
        raise TypeError(f"not a term: {m!r}")

    def _check_app_form(self, env, at, m, callee: Location, lren) -> None:
        match m:
            case Req():
                if at != CLIENT or callee != SERVER:
                    raise TypeCheckError("LocationMismatch", m, "req must run on the client and call a server function")
            case Call():
                if at != SERVER or callee != CLIENT:
                    raise TypeCheckError("LocationMismatch", m, "call must run on the server and call a client function")
            case Gen(target, _, _):
                target = self.resolve_loc(target, lren)
                self.check_loc(env, target, m)
                if target != callee:
                    raise TypeCheckError("LocationMismatch", m, "gen callee location differs from the function's location")

    @staticmethod
    def _prim(op: str, args, types: list[Type]) -> Type:
        if op == "if0":
            if types[0] != INT:
                raise TypeCheckError("ArgMismatch", args[0], "if0 scrutinee must be an int")
            if not alpha_eq(types[1], types[2]):
                raise TypeCheckError("ArgMismatch", args[2], "if0 branches have different types")
            return types[1]
        want = STRING if op == "++" else INT
        for a, t in zip(args, types):
            if t != want:
                raise TypeCheckError("ArgMismatch", a, f"{op} expects {want.name} operands")
        return want


def _has_location_polymorphism(ty: Type) -> bool:
    match ty:
        case ForallLoc():
            return True
        case Arrow(a, loc, b):
            return isinstance(loc, LocVar) or _has_location_polymorphism(a) or _has_location_polymorphism(b)
        case Product(a, b):
            return _has_location_polymorphism(a) or _has_location_polymorphism(b)
        case ForallTy(_, body):
            return _has_location_polymorphism(body)
    return False


def _has_poly_forms(m: Term):
    """Return the first location abstraction/application inside ``m``, if any."""
    if isinstance(m, (LocLam, LocApp)):
        return m
    for child in _term_children(m):
        found = _has_poly_forms(child)
        if found is not None:
            return found
    return None


# ------------------------------------------------------------------ public


def _occurrence(m: Term, namespace: str, name: str) -> Term | None:
    """The first subterm that mentions ``name`` free, in the given namespace."""
    match m:
        case Var(x) if namespace == "var" and x == name:
            return m
        case Lam(_, x, _, _) if namespace == "var" and x == name:
            return None
        case Letrec(f, _, _, _) if namespace == "var" and f == name:
            return None
        case TyLam(a, _) if namespace == "ty" and a == name:
            return None
        case LocLam(l, _, _) if namespace == "loc" and l == name:
            return None
    if namespace != "var":
        frees = ftv if namespace == "ty" else flv
        annotations: list = []
        match m:
            case Lam(loc, _, a, _):
                annotations = [loc, a]
            case TyApp(_, a) | Letrec(_, a, _, _):
                annotations = [a]
            case LocApp(_, loc) | Gen(loc, _, _):
                annotations = [loc]
        for ann in annotations:
            if not (namespace == "ty" and not _is_type(ann)) and name in frees(ann):
                return m
    for child in _term_children(m):
        found = _occurrence(child, namespace, name)
        if found is not None:
            return found
    return None


def _is_type(x) -> bool:
    return not isinstance(x, (LocConst, LocVar))


def check_well_formed(env: TypeEnv, at: Location, m: Term) -> None:
    """Verify the closure conditions of a well-formed judgment; raise on failure."""
    unbound = fv(m) - set(env.terms)
    if unbound:
        x = min(unbound)
        raise TypeCheckError("UnboundVar", _occurrence(m, "var", x) or m, f"unbound variable {x}")
    tyvars = ftv(m)
    for ty in env.terms.values():
        tyvars |= ftv(ty)
    unbound = tyvars - env.tyvars
    if unbound:
        a = min(unbound)
        raise TypeCheckError("UnboundTyVar", _occurrence(m, "ty", a) or m, f"unbound type variable {a}")
    unbound = (flv(env) | flv(at) | flv(m)) - env.locvars
    if unbound:
        l = min(unbound)
        raise TypeCheckError("UnboundLocVar", _occurrence(m, "loc", l) or m, f"unbound location variable {l}")


def check_poly(
    env: TypeEnv,
    at: Location,
    m: Term,
    *,
    on_judgment: Judgment | None = None,
    record: dict | None = None,
) -> TypingResult:
    """Type ``m`` at location ``at`` in the polymorphic calculus.

    ``on_judgment`` is called for every derived sub-judgment. ``record``, when
    given, is filled with ``id(node) -> info`` for applications (their
    :class:`AppSite`) and location applications (the kind of the abstraction).
    """
    check_well_formed(env, at, m)
    return _Checker(False, on_judgment, record).check(env, at, m, {}, {})


def check_mono(
    env: TypeEnv,
    at: Location,
    m: Term,
    *,
    on_judgment: Judgment | None = None,
    record: dict | None = None,
) -> TypingResult:
    """Type ``m`` in the monomorphic calculus extended with pairs."""
    if not isinstance(at, LocConst):
        raise TypeCheckError("PolyFormInMono", m, f"judgment location {at} is not a constant")
    poly = _has_poly_forms(m)
    if poly is not None:
        raise TypeCheckError("PolyFormInMono", poly, "location abstraction or application in a monomorphic term")
    for ty in env.terms.values():
        if _has_location_polymorphism(ty):
            raise TypeCheckError("PolyFormInMono", m, "location-polymorphic type in the environment")
    check_well_formed(env, at, m)
    return _Checker(True, on_judgment, record).check(env, at, m, {}, {})


def type_of(m: Term, at: Location = CLIENT) -> Type:
    """Type of a closed term in the polymorphic calculus."""
    return check_poly(TypeEnv(), at, m).type


def kind_of_locvar(kind: Kind) -> str:
    return kind.value
