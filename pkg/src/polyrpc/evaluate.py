"""Big-step evaluation ``M ⇓_a V`` for the polymorphic calculus and its
pair-extended monomorphic target.

Every rule application costs one unit of fuel. Each application also records a
``(caller, callee)`` event so local and remote calls can be told apart.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

from .subst import _term_children, subst_term_loc, subst_term_type, subst_term_value
from .syntax import (
    App, Call, Const, DefRef, Gen, Lam, Letrec, LocApp, LocConst, LocLam, Location,
    Pair, Prim, Proj, Req, Term, TyApp, TyLam, Var, is_value,
)

DEFAULT_FUEL = 100_000


class EvalError(Exception):
    pass


class OutOfFuel(EvalError):
    pass


class Stuck(EvalError):
    pass


class PolyFormInMono(EvalError):
    pass


AppEvent = tuple[LocConst, LocConst]


@dataclass
class EvalOutcome:
    value: Term
    steps_used: int
    app_events: list[AppEvent] = field(default_factory=list)

    def remote_events(self) -> list[AppEvent]:
        return [(a, b) for a, b in self.app_events if a != b]


def format_event(event: AppEvent) -> str:
    caller, callee = event
    kind = "local" if caller == callee else "remote"
    return f"app caller={caller} callee={callee} kind={kind}"


def unroll(v: Term) -> Term:
    """Expose the function value behind a recursive knot ``letrec f = V in f``."""
    while isinstance(v, Letrec):
        v = subst_term_value(v.value, v, v.name)
    return v


def apply_prim(op: str, args: list[Term]) -> Term:
    lits = [a.literal if isinstance(a, Const) else None for a in args]
    want = str if op == "++" else int
    if not all(isinstance(x, want) and not isinstance(x, bool) for x in lits):
        raise Stuck(f"{op} applied to {', '.join(map(str, args))}")
    match op:
        case "+":
            return Const(lits[0] + lits[1])
        case "-":
            return Const(lits[0] - lits[1])
        case "*":
            return Const(lits[0] * lits[1])
        case "++":
            return Const(lits[0] + lits[1])
    raise Stuck(f"unknown primitive {op}")


class _Machine:
    def __init__(self, fuel: int, mono: bool) -> None:
        self.fuel = fuel
        self.steps = 0
        self.mono = mono
        self.events: list[AppEvent] = []

    def tick(self) -> None:
        if self.steps >= self.fuel:
            raise OutOfFuel(f"evaluation exceeded {self.fuel} steps")
        self.steps += 1

    def eval(self, m: Term, at: LocConst) -> Term:
        self.tick()
        match m:
            case Pair(a, b):
                return Pair(self.eval(a, at), self.eval(b, at))

            case _ if is_value(m):
                return m

            case App(fun, arg):
                f = unroll(self.eval(fun, at))
                if not isinstance(f, Lam):
                    raise Stuck(f"applying a non-function: {f}")
                w = self.eval(arg, at)
                if not isinstance(f.loc, LocConst):
                    raise Stuck(f"function at unresolved location {f.loc}")
                self.events.append((at, f.loc))
                return self.eval(subst_term_value(f.body, w, f.param), f.loc)

            case TyApp(fun, ty):
                f = unroll(self.eval(fun, at))
                if not isinstance(f, TyLam):
                    raise Stuck(f"type application of {f}")
                return subst_term_type(f.body, ty, f.tyvar)

            case LocApp(fun, loc):
                if not isinstance(loc, LocConst):
                    raise Stuck(f"location application to the variable {loc}")
                f = unroll(self.eval(fun, at))
                if not isinstance(f, LocLam):
                    raise Stuck(f"location application of {f}")
                return subst_term_loc(f.body, loc, f.locvar)

            case Proj(i, arg):
                p = unroll(self.eval(arg, at))
                if not isinstance(p, Pair):
                    raise Stuck(f"projection from {p}")
                return p.fst if i == 1 else p.snd

            case Prim("if0", (cond, yes, no)):
                n = self.eval(cond, at)
                if not isinstance(n, Const) or not isinstance(n.literal, int):
                    raise Stuck(f"if0 on {n}")
                return self.eval(yes if n.literal == 0 else no, at)

            case Prim(op, args):
                return apply_prim(op, [self.eval(a, at) for a in args])

            case Letrec(f, _, value, body):
                knot = Letrec(f, m.ty, value, Var(f))
                return self.eval(subst_term_value(body, knot, f), at)

            case Req() | Call() | Gen():
                raise Stuck(f"{type(m).__name__.lower()} only runs on the client-server runtime")

        raise Stuck(f"no rule applies to {m}")


def _first_poly_form(m: Term) -> Term | None:
    if isinstance(m, (LocLam, LocApp)):
        return m
    if isinstance(m, Lam) and not isinstance(m.loc, LocConst):
        return m
    for child in _term_children(m):
        found = _first_poly_form(child)
        if found is not None:
            return found
    return None


def _run(m: Term, at: Location, fuel: int, mono: bool) -> EvalOutcome:
    if not isinstance(at, LocConst):
        raise ValueError(f"evaluation location must be c or s, got {at}")
    if isinstance(m, DefRef):
        raise Stuck("closure references only run on the client-server runtime")
    if mono:
        bad = _first_poly_form(m)
        if bad is not None:
            raise PolyFormInMono(f"location-polymorphic form {bad}")
    machine = _Machine(fuel, mono)
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10_000))
    try:
        value = machine.eval(m, at)
    except RecursionError:
        raise OutOfFuel("evaluation nested too deeply") from None
    finally:
        sys.setrecursionlimit(old)
    return EvalOutcome(value, machine.steps, machine.events)


def eval_poly(m: Term, at: Location, fuel: int = DEFAULT_FUEL) -> EvalOutcome:
    """Evaluate a closed term of the polymorphic calculus at ``at``."""
    return _run(m, at, fuel, mono=False)


def eval_mono(m: Term, at: Location, fuel: int = DEFAULT_FUEL) -> EvalOutcome:
    """Evaluate a closed monomorphic (pair-extended) term at ``at``."""
    return _run(m, at, fuel, mono=True)
