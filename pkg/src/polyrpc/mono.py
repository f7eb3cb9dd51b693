"""Monomorphization: location abstractions become (client, server) pairs and
location applications become projections.

The translation threads an environment ``rho`` from location variables to the
location they stand for instead of substituting eagerly. In the selective
variant, dynamic variables map to themselves and survive into the output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

from .subst import _map_children, flv
from .syntax import (
    CLIENT, SERVER, Arrow, Base, Const, DefRef, ForallLoc, ForallTy, Kind, Lam, Letrec,
    LocApp, LocConst, LocLam, LocVar, Location, Pair, Product, Proj, Term, TyApp,
    TyLam, TyVar, Type, TypeEnv, Var,
)


class MonoError(Exception):
    pass


class FreeLocationVariable(MonoError):
    pass


class KindMismatch(MonoError):
    pass


@dataclass(frozen=True)
class MonoReport:
    output: Term
    leaf_count: int
    duplication_depth: int


Rho = Mapping[str, Location]


def _resolve(loc: Location, rho: Rho) -> Location:
    if isinstance(loc, LocVar):
        if loc.name not in rho:
            raise FreeLocationVariable(f"free location variable {loc.name}")
        return rho[loc.name]
    return loc


def _mono_type(a: Type, rho: Rho, selective: bool) -> Type:
    match a:
        case Base() | TyVar():
            return a
        case Arrow(dom, loc, cod):
            return Arrow(_mono_type(dom, rho, selective), _resolve(loc, rho), _mono_type(cod, rho, selective))
        case ForallTy(alpha, body):
            return ForallTy(alpha, _mono_type(body, rho, selective))
        case ForallLoc(l, kind, body):
            if selective and kind is Kind.DYNAMIC:
                return ForallLoc(l, kind, _mono_type(body, {**rho, l: LocVar(l)}, selective))
            return Product(
                _mono_type(body, {**rho, l: CLIENT}, selective),
                _mono_type(body, {**rho, l: SERVER}, selective),
            )
        case Product(fst, snd):
            return Product(_mono_type(fst, rho, selective), _mono_type(snd, rho, selective))
    raise TypeError(f"not a type: {a!r}")


def mono_type(a: Type) -> Type:
    """Translate a location-closed type; location quantifiers become products."""
    if flv(a):
        raise FreeLocationVariable(f"free location variable {min(flv(a))} in type")
    return _mono_type(a, {}, False)


def mono_env(env: TypeEnv) -> TypeEnv:
    if env.locvars:
        raise FreeLocationVariable(f"environment binds location variable {min(env.locvars)}")
    return TypeEnv({x: mono_type(a) for x, a in env.terms.items()}, env.tyvars, frozenset())


KindOf = Callable[[TypeEnv, Term], Kind]


class _Translator:
    """One pass over a term. ``kind_of`` is given only in selective mode; it
    reports the kind of the abstraction a location application instantiates."""

    def __init__(self, kind_of: KindOf | None = None) -> None:
        self.kind_of = kind_of
        self.memo: dict = {}
        self.flv_cache: dict[int, frozenset[str]] = {}

    @property
    def selective(self) -> bool:
        return self.kind_of is not None

    def flv_of(self, m: Term) -> frozenset[str]:
        key = id(m)
        if key not in self.flv_cache:
            self.flv_cache[key] = frozenset(flv(m))
        return self.flv_cache[key]

    def type(self, a: Type, rho: Rho) -> Type:
        return _mono_type(a, rho, self.selective)

    def term(self, m: Term, rho: Rho, env: TypeEnv | None) -> tuple[Term, int, int]:
        """Return ``(output, leaves, depth)``."""
        if env is None:
            key = (id(m), frozenset((l, rho[l]) for l in self.flv_of(m) if l in rho))
            hit = self.memo.get(key)
            if hit is None:
                hit = self.memo[key] = self._term(m, rho, None)
            return hit
        return self._term(m, rho, env)

    def _term(self, m: Term, rho: Rho, env: TypeEnv | None) -> tuple[Term, int, int]:
        match m:
            case Var() | Const():
                return m, 0, 0

            case LocLam(l, kind, body):
                if self.selective and kind is Kind.DYNAMIC:
                    out, leaves, depth = self.term(body, {**rho, l: LocVar(l)}, _bind_loc(env, l))
                    return LocLam(l, kind, out), leaves, depth
                inner_env = _bind_loc(env, l)
                c_out, c_leaves, c_depth = self.term(body, {**rho, l: CLIENT}, inner_env)
                s_out, s_leaves, s_depth = self.term(body, {**rho, l: SERVER}, inner_env)
                leaf = 0 if _expands(body, self.selective) else 1
                return Pair(c_out, s_out), c_leaves + s_leaves + 2 * leaf, 1 + max(c_depth, s_depth)

            case LocApp(fun, loc):
                target = _resolve(loc, rho)
                out, leaves, depth = self.term(fun, rho, env)
                dynamic = self.selective and self.kind_of(env, fun) is Kind.DYNAMIC
                if dynamic:
                    return LocApp(out, target), leaves, depth
                if isinstance(target, LocVar):
                    if self.selective:
                        raise KindMismatch(f"dynamic location {target} instantiates a static abstraction")
                    raise FreeLocationVariable(f"location variable {target} as an argument")
                return Proj(1 if target == CLIENT else 2, out), leaves, depth

            case Lam(loc, x, a, body):
                out, leaves, depth = self.term(body, rho, _bind_var(env, x, a))
                return Lam(_resolve(loc, rho), x, self.type(a, rho), out), leaves, depth

            case TyLam(alpha, body):
                out, leaves, depth = self.term(body, rho, _bind_ty(env, alpha))
                return TyLam(alpha, out), leaves, depth

            case Letrec(f, a, value, body):
                inner = _bind_var(env, f, a)
                v_out, v_leaves, v_depth = self.term(value, rho, inner)
                b_out, b_leaves, b_depth = self.term(body, rho, inner)
                return Letrec(f, self.type(a, rho), v_out, b_out), v_leaves + b_leaves, max(v_depth, b_depth)

            case DefRef():
                raise MonoError("closure references belong to sliced programs")

        # structural cases: every child shares the binders of ``m``
        totals = [0, 0]

        def child(t: Term) -> Term:
            out, leaves, depth = self.term(t, rho, env)
            totals[0] += leaves
            totals[1] = max(totals[1], depth)
            return out

        out = _map_children(m, child, lambda a: self.type(a, rho), lambda loc: _resolve(loc, rho))
        return out, totals[0], totals[1]


def _expands(m: Term, selective: bool) -> bool:
    return isinstance(m, LocLam) and not (selective and m.kind is Kind.DYNAMIC)


def _bind_var(env: TypeEnv | None, x: str, a: Type) -> TypeEnv | None:
    return None if env is None else env.with_var(x, a)


def _bind_ty(env: TypeEnv | None, alpha: str) -> TypeEnv | None:
    return None if env is None else env.with_tyvar(alpha)


def _bind_loc(env: TypeEnv | None, l: str) -> TypeEnv | None:
    return None if env is None else env.with_locvar(l)


def _require_closed(m: Term) -> None:
    free = flv(m)
    if free:
        raise FreeLocationVariable(f"free location variable {min(free)} in term")


def mono_report(m: Term) -> MonoReport:
    """Translate ``m`` and report how many instantiations it produced."""
    _require_closed(m)
    out, leaves, depth = _Translator().term(m, {}, None)
    return MonoReport(out, leaves, depth)


def mono_term(m: Term) -> Term:
    return mono_report(m).output


def mono_letrec(decl: Letrec) -> Letrec:
    """Translate a recursive binding element-wise.

    Recursive references ``f[c]``/``f[s]`` inside each instantiation become
    projections of the bound name itself, so the knot is tied through ``f``
    rather than by re-expanding the abstraction.
    """
    out = mono_term(decl)
    assert isinstance(out, Letrec)
    return out


def _kind_via_typing(env: TypeEnv, fun: Term) -> Kind:
    from .typecheck import check_poly

    ty = check_poly(env, CLIENT, fun).type
    if not isinstance(ty, ForallLoc):
        raise KindMismatch(f"location application of a term of type {ty}")
    return ty.kind


def selective_report(m: Term, env: TypeEnv | None = None) -> MonoReport:
    """Expand static location abstractions and keep dynamic ones."""
    env = TypeEnv() if env is None else env
    free = flv(m) - env.locvars
    if free:
        raise FreeLocationVariable(f"free location variable {min(free)} in term")
    out, leaves, depth = _Translator(_kind_via_typing).term(m, {l: LocVar(l) for l in env.locvars}, env)
    return MonoReport(out, leaves, depth)


def selective_mono(m: Term) -> Term:
    return selective_report(m).output
