"""Split a monomorphic (or selectively monomorphized) program into a client
fragment and a server fragment.

Every lambda is lifted to a named top-level definition that takes its free
term, type and location variables as parameters. Its occurrence becomes a
closure reference ``#name{args; tys; locs}``. Applications become local
applications, ``req``, ``call`` or ``gen`` depending on where caller and callee
live.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .subst import flv, ftv, fv, subst_term_loc, subst_term_type, subst_term_value
from .surface import Definition
from .syntax import (
    CLIENT, SERVER, App, Arrow, Call, Const, DefRef, Gen, Kind, Lam, Letrec, LocApp,
    LocConst, LocLam, LocVar, Location, Pair, Prim, Proj, Req, Term, TyApp, TyLam,
    TyVar, TypeEnv, Var,
)
from .typecheck import check_poly


class UnplaceableDefinition(Exception):
    pass


@dataclass
class SlicedProgram:
    client_top: Term
    client_defs: dict[str, Definition] = field(default_factory=dict)
    server_defs: dict[str, Definition] = field(default_factory=dict)
    entry: str = "main"

    def defs_at(self, site: LocConst) -> dict[str, Definition]:
        return self.client_defs if site == CLIENT else self.server_defs

    def definition(self, name: str) -> Definition:
        if name in self.client_defs:
            return self.client_defs[name]
        return self.server_defs[name]


def gen_dispatch(caller: LocConst, callee: LocConst) -> str:
    """How an application from ``caller`` to a function at ``callee`` runs."""
    if not isinstance(caller, LocConst) or not isinstance(callee, LocConst):
        raise ValueError(f"dispatch needs two constant locations, got {caller} and {callee}")
    if caller == callee:
        return "local"
    return "req" if caller == CLIENT else "call"


def app_form(at: Location, callee: Location, fun: Term, arg: Term) -> Term:
    """Pick the application form for a call from ``at`` to ``callee``."""
    if at == callee:
        return App(fun, arg)
    if isinstance(at, LocConst) and isinstance(callee, LocConst):
        return (Req if gen_dispatch(at, callee) == "req" else Call)(fun, arg)
    return Gen(callee, fun, arg)


def callee_location(env: TypeEnv, at: Location, fun: Term) -> Location:
    ty = check_poly(env, at, fun).type
    assert isinstance(ty, Arrow), ty
    return ty.loc


def compile_app(env: TypeEnv, at: Location, app: App) -> Term:
    """Rewrite one application according to the caller and callee locations."""
    return app_form(at, callee_location(env, at, app.fun), app.fun, app.arg)


class _Slicer:
    def __init__(self) -> None:
        self.program = SlicedProgram(Const(0))
        self.names = itertools.count(1)

    def lift(self, lam: Lam, env: TypeEnv, body: Term) -> DefRef:
        name = f"{lam.param}_fn{next(self.names)}"
        params = tuple(sorted(fv(lam)))
        ty_params = tuple(sorted(ftv(lam) & env.tyvars))
        loc_params = tuple(sorted(flv(lam)))
        d = Definition(name, params, ty_params, loc_params, Lam(lam.loc, lam.param, lam.param_type, body))
        if lam.loc == CLIENT:
            self.program.client_defs[name] = d
        elif lam.loc == SERVER:
            self.program.server_defs[name] = d
        else:
            # bound by a dynamic abstraction: either side may run it
            self.program.client_defs[name] = d
            self.program.server_defs[name] = d
        return DefRef(
            name,
            tuple(Var(x) for x in params),
            tuple(TyVar(a) for a in ty_params),
            tuple(LocVar(l) for l in loc_params),
        )

    def compile(self, m: Term, env: TypeEnv, at: Location) -> Term:
        match m:
            case Var() | Const():
                return m
            case Lam(loc, x, a, body):
                return self.lift(m, env, self.compile(body, env.with_var(x, a), loc))
            case App(fun, arg):
                callee = callee_location(env, at, fun)
                return app_form(at, callee, self.compile(fun, env, at), self.compile(arg, env, at))
            case TyLam(alpha, body):
                return TyLam(alpha, self.compile(body, env.with_tyvar(alpha), at))
            case TyApp(fun, ty):
                return TyApp(self.compile(fun, env, at), ty)
            case LocLam(l, kind, body):
                if kind is not Kind.DYNAMIC:
                    raise UnplaceableDefinition(f"static location variable {l} survived monomorphization")
                return LocLam(l, kind, self.compile(body, env.with_locvar(l), at))
            case LocApp(fun, loc):
                return LocApp(self.compile(fun, env, at), loc)
            case Pair(a, b):
                return Pair(self.compile(a, env, at), self.compile(b, env, at))
            case Proj(i, arg):
                return Proj(i, self.compile(arg, env, at))
            case Prim(op, args):
                return Prim(op, tuple(self.compile(a, env, at) for a in args))
            case Letrec(f, a, value, body):
                inner = env.with_var(f, a)
                return Letrec(f, a, self.compile(value, inner, at), self.compile(body, inner, at))
        raise ValueError(f"{type(m).__name__} is already a sliced form")


def slice_program(m: Term) -> SlicedProgram:
    """Slice a closed program whose entry point runs on the client."""
    check_poly(TypeEnv(), CLIENT, m)
    slicer = _Slicer()
    slicer.program.client_top = slicer.compile(m, TypeEnv(), CLIENT)
    return slicer.program


def instantiate(d: Definition, ref: DefRef) -> Term:
    """The body of ``d`` with its captured parameters filled in from ``ref``."""
    if (len(ref.args), len(ref.ty_args), len(ref.loc_args)) != (len(d.params), len(d.ty_params), len(d.loc_params)):
        raise ValueError(f"closure {ref.name} has the wrong number of captured values")
    body = d.body
    # fresh placeholders first so that a captured value mentioning another
    # parameter's name is not substituted twice
    holes = {x: f"{x}_hole{i}" for i, x in enumerate(d.params)}
    for x, hole in holes.items():
        body = subst_term_value(body, Var(hole), x)
    for (x, hole), v in zip(holes.items(), ref.args):
        body = subst_term_value(body, v, hole)
    for alpha, ty in zip(d.ty_params, ref.ty_args):
        body = subst_term_type(body, ty, alpha)
    for l, loc in zip(d.loc_params, ref.loc_args):
        body = subst_term_loc(body, loc, l)
    return body


def decompile(m: Term, program: SlicedProgram) -> Term:
    """Map a sliced term back to the unified calculus, for comparing results."""
    match m:
        case DefRef(name, args, tys, locs):
            ref = DefRef(name, tuple(decompile(a, program) for a in args), tys, locs)
            lam = instantiate(program.definition(name), ref)
            return Lam(lam.loc, lam.param, lam.param_type, decompile(lam.body, program))
        case Req(f, a) | Call(f, a) | Gen(_, f, a) | App(f, a):
            return App(decompile(f, program), decompile(a, program))
        case Var() | Const():
            return m
        case Lam(loc, x, a, body):
            return Lam(loc, x, a, decompile(body, program))
        case TyLam(alpha, body):
            return TyLam(alpha, decompile(body, program))
        case TyApp(fun, ty):
            return TyApp(decompile(fun, program), ty)
        case LocLam(l, kind, body):
            return LocLam(l, kind, decompile(body, program))
        case LocApp(fun, loc):
            return LocApp(decompile(fun, program), loc)
        case Pair(a, b):
            return Pair(decompile(a, program), decompile(b, program))
        case Proj(i, arg):
            return Proj(i, decompile(arg, program))
        case Prim(op, args):
            return Prim(op, tuple(decompile(a, program) for a in args))
        case Letrec(f, a, value, body):
            return Letrec(f, a, decompile(value, program), decompile(body, program))
    raise TypeError(f"not a term: {m!r}")


def count_gen_sites(m: Term, program: SlicedProgram | None = None) -> int:
    """Number of ``gen`` forms in ``m`` and, if given, in every definition body
    of ``program`` (shared definitions are counted once)."""
    from .subst import _term_children

    def count(t: Term) -> int:
        return (1 if isinstance(t, Gen) else 0) + sum(count(c) for c in _term_children(t))

    total = count(m)
    if program is not None:
        defs = {**program.server_defs, **program.client_defs}
        total += sum(count(d.body) for d in defs.values())
    return total
