"""Random closed well-typed terms of the polymorphic calculus.

Generation is goal-directed: pick a type, then build a term of that type by
choosing a typing rule whose conclusion fits, with backtracking when a choice
leads nowhere. Every result is re-checked by the type checker.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

from .subst import alpha_eq, subst_type_loc, subst_type_type
from .syntax import (
    CLIENT, INT, SERVER, STRING, App, Arrow, Base, Const, ForallLoc, ForallTy, Kind,
    Lam, LocApp, LocLam, LocVar, Location, Prim, Product, Term, TyApp, TyLam,
    TyVar, Type, TypeEnv, Var,
)
from .typecheck import check_poly

RULES = ("T-Var", "T-Abs", "T-App", "T-Tabs", "T-Tapp", "T-Labs", "T-Lapp", "Const", "Prim")

DEFAULT_WEIGHTS = {
    "T-Var": 3.0, "T-Abs": 3.0, "T-App": 3.0, "T-Tabs": 2.0, "T-Tapp": 1.5,
    "T-Labs": 2.0, "T-Lapp": 2.0, "Const": 1.0, "Prim": 1.0,
}

_TERM_NAMES = ("x", "y", "z", "f", "g")
_STRINGS = ("", "a", "hi", 'q"uote', "λ")


class GenerationExhausted(Exception):
    pass


class _Fail(Exception):
    pass


class _Exhausted(Exception):
    """The current attempt used up its step budget."""


@dataclass
class GenConfig:
    max_depth: int = 4
    max_loclam_nesting: int = 2
    seed: int = 0
    weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    dynamic_kinds: bool = False
    attempts: int = 200
    # productions tried per attempt before giving up on it
    step_budget: int = 400


class TermGenerator:
    """Stateful generator; successive calls draw from one seeded stream."""

    def __init__(self, cfg: GenConfig) -> None:
        if cfg.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.coverage: Counter[str] = Counter()
        self.steps = 0
        # location abstractions enclosing the production being built
        self.nesting = 0

    # ------------------------------------------------------------ names

    def term_name(self) -> str:
        return self.rng.choice(_TERM_NAMES)

    @staticmethod
    def unused(stem: str, taken: frozenset[str]) -> str:
        if stem not in taken:
            return stem
        i = 1
        while f"{stem}{i}" in taken:
            i += 1
        return f"{stem}{i}"

    def kind(self) -> Kind:
        if self.cfg.dynamic_kinds and self.rng.random() < 0.5:
            return Kind.DYNAMIC
        return Kind.STATIC

    # ------------------------------------------------------------ types

    def location(self, env: TypeEnv) -> Location:
        options: list[Location] = [CLIENT, SERVER, *(LocVar(l) for l in sorted(env.locvars))]
        return self.rng.choice(options)

    def type(self, env: TypeEnv, size: int, loc_budget: int) -> Type:
        leaves: list[Type] = [INT, STRING, *(TyVar(a) for a in sorted(env.tyvars))]
        if size <= 0:
            return self.rng.choice(leaves)
        roll = self.rng.random()
        if roll < 0.3:
            return self.rng.choice(leaves)
        if roll < 0.7:
            return Arrow(self.type(env, size - 1, loc_budget), self.location(env), self.type(env, size - 1, loc_budget))
        if roll < 0.85 and loc_budget > 0:
            l = self.unused("l", env.locvars)
            return ForallLoc(l, self.kind(), self.type(env.with_locvar(l), size - 1, loc_budget - 1))
        a = self.unused("a", env.tyvars)
        return ForallTy(a, self.type(env.with_tyvar(a), size - 1, loc_budget))

    def allowed(self, rule: str) -> bool:
        return self.cfg.weights.get(rule, 0) > 0

    def goal_type(self) -> Type:
        cfg = self.cfg
        if cfg.max_depth == 1:
            # no room for a quantifier binder
            dom, cod = self.rng.choice((INT, STRING)), self.rng.choice((INT, STRING))
            return Arrow(dom, self.location(TypeEnv()), cod) if self.rng.random() < 0.5 else cod
        if self.rng.random() < 0.15 and cfg.max_loclam_nesting > 0:
            # a full chain of location quantifiers, so deep nesting shows up
            env = TypeEnv()
            names = []
            for _ in range(cfg.max_loclam_nesting):
                l = self.unused("l", env.locvars)
                names.append(l)
                env = env.with_locvar(l)
            ty = Arrow(INT, LocVar(names[-1]), INT)
            for l in reversed(names):
                ty = ForallLoc(l, self.kind(), ty)
            return ty
        return self.type(TypeEnv(), min(3, cfg.max_depth), cfg.max_loclam_nesting)

    # ------------------------------------------------------------ terms

    def term(self, env: TypeEnv, at: Location, goal: Type, depth: int) -> Term:
        self.steps += 1
        if self.steps > self.cfg.step_budget:
            raise _Exhausted()
        if depth <= 1:
            return self.value(env, goal, depth)
        rules = [r for r in RULES if self.cfg.weights.get(r, 0) > 0]
        order = []
        while rules:
            pick = self.rng.choices(rules, [self.cfg.weights[r] for r in rules])[0]
            rules.remove(pick)
            order.append(pick)
        for rule in order:
            try:
                return getattr(self, "_" + rule.replace("-", "_").lower())(env, at, goal, depth)
            except _Fail:
                continue
        raise _Fail()

    def value(self, env: TypeEnv, goal: Type, depth: int) -> Term:
        """A value of type ``goal``, built without further budget."""
        match goal:
            case Arrow(dom, loc, cod):
                if not self.allowed("T-Abs"):
                    raise _Fail()
                x = self.term_name()
                return Lam(loc, x, dom, self.leaf(env.with_var(x, dom), loc, cod, depth))
            case ForallTy():
                return self._t_tabs(env, CLIENT, goal, depth)
            case ForallLoc():
                return self._t_labs(env, CLIENT, goal, depth)
        return self.leaf(env, CLIENT, goal, depth)

    def leaf(self, env: TypeEnv, at: Location, goal: Type, depth: int) -> Term:
        names = [x for x, t in env.terms.items() if alpha_eq(t, goal)] if self.allowed("T-Var") else []
        if names and (self.rng.random() < 0.7 or goal not in (INT, STRING)):
            return Var(self.rng.choice(names))
        if goal in (INT, STRING) and self.allowed("Const"):
            return self._const(env, at, goal, depth)
        if isinstance(goal, (Arrow, ForallTy, ForallLoc)):
            return self.value(env, goal, depth)
        raise _Fail()

    def _t_var(self, env, at, goal, depth) -> Term:
        names = [x for x, t in env.terms.items() if alpha_eq(t, goal)]
        if not names:
            raise _Fail()
        return Var(self.rng.choice(names))

    def _const(self, env, at, goal, depth) -> Term:
        if goal == INT:
            return Const(self.rng.randint(-5, 20))
        if goal == STRING:
            return Const(self.rng.choice(_STRINGS))
        raise _Fail()

    def _prim(self, env, at, goal, depth) -> Term:
        roll = self.rng.random()
        if roll < 0.25:
            out = Prim("if0", (
                self.term(env, at, INT, depth - 1),
                self.term(env, at, goal, depth - 1),
                self.term(env, at, goal, depth - 1),
            ))
        elif goal == INT:
            op = self.rng.choice(("+", "-", "*"))
            out = Prim(op, (self.term(env, at, INT, depth - 1), self.term(env, at, INT, depth - 1)))
        elif goal == STRING:
            out = Prim("++", (self.term(env, at, STRING, depth - 1), self.term(env, at, STRING, depth - 1)))
        else:
            raise _Fail()
        return out

    def _t_abs(self, env, at, goal, depth) -> Term:
        if not isinstance(goal, Arrow):
            raise _Fail()
        x = self.term_name()
        body = self.term(env.with_var(x, goal.dom), goal.loc, goal.cod, depth - 1)
        return Lam(goal.loc, x, goal.dom, body)

    def _t_app(self, env, at, goal, depth) -> Term:
        # prefer argument types for which a function already lies in scope
        candidates = [t for t in env.terms.values() if isinstance(t, Arrow) and alpha_eq(t.cod, goal)]
        if candidates and self.rng.random() < 0.6:
            fty = self.rng.choice(candidates)
        else:
            fty = Arrow(self.type(env, 1, 0), self.location(env), goal)
        fun = self.term(env, at, fty, depth - 1)
        arg = self.term(env, at, fty.dom, depth - 1)
        return App(fun, arg)

    def _t_tabs(self, env, at, goal, depth) -> Term:
        if not isinstance(goal, ForallTy) or not self.allowed("T-Tabs"):
            raise _Fail()
        a = self.unused(goal.tyvar, env.tyvars)
        body_ty = subst_type_type(goal.body, TyVar(a), goal.tyvar)
        inner = env.with_tyvar(a)
        body = self.value(inner, body_ty, depth - 1) if depth <= 1 else self._value_goal(inner, at, body_ty, depth - 1)
        return TyLam(a, body)

    def _t_labs(self, env, at, goal, depth) -> Term:
        if not isinstance(goal, ForallLoc) or not self.allowed("T-Labs"):
            raise _Fail()
        if self.nesting >= self.cfg.max_loclam_nesting:
            raise _Fail()
        l = self.unused(goal.locvar, env.locvars)
        body_ty = subst_type_loc(goal.body, LocVar(l), goal.locvar)
        inner = env.with_locvar(l)
        self.nesting += 1
        try:
            if depth <= 1:
                body = self.value(inner, body_ty, depth - 1)
            else:
                body = self._value_goal(inner, at, body_ty, depth - 1)
        finally:
            self.nesting -= 1
        return LocLam(l, goal.kind, body)

    def _value_goal(self, env, at, goal, depth) -> Term:
        """A syntactic value of type ``goal`` with room for a non-trivial body."""
        match goal:
            case Arrow():
                return self._t_abs(env, at, goal, depth)
            case ForallTy():
                return self._t_tabs(env, at, goal, depth)
            case ForallLoc():
                return self._t_labs(env, at, goal, depth)
        return self.leaf(env, at, goal, depth)

    def _t_tapp(self, env, at, goal, depth) -> Term:
        a = self.unused("a", env.tyvars | _tyvars_in(goal))
        parts = [t for t in _subtypes(goal) if isinstance(t, (Base, TyVar)) or self.rng.random() < 0.3]
        if parts and self.rng.random() < 0.8:
            arg = self.rng.choice(parts)
            body = _abstract_type(goal, arg, TyVar(a))
        else:
            arg = self.type(env, 1, 0)
            body = goal
        fun = self.term(env, at, ForallTy(a, body), depth - 1)
        return TyApp(fun, arg)

    def _t_lapp(self, env, at, goal, depth) -> Term:
        l = self.unused("l", env.locvars | _locvars_in(goal))
        present = sorted(_locations_in(goal), key=str)
        if present and self.rng.random() < 0.8:
            arg = self.rng.choice(present)
            body = _abstract_loc(goal, arg, LocVar(l))
        else:
            arg = self.location(env)
            body = goal
        fun = self.term(env, at, ForallLoc(l, self.kind(), body), depth - 1)
        return LocApp(fun, arg)

    # ------------------------------------------------------------ entry

    def generate(self) -> tuple[Term, Type, Location]:
        for _ in range(self.cfg.attempts):
            goal = self.goal_type()
            at = self.rng.choice((CLIENT, SERVER))
            depth = self.rng.randint(1, self.cfg.max_depth)
            self.steps = 0
            self.nesting = 0
            try:
                m = self.term(TypeEnv(), at, goal, depth)
            except (_Fail, _Exhausted):
                continue
            ty = check_poly(TypeEnv(), at, m).type
            if not alpha_eq(ty, goal):
                raise AssertionError(f"generator produced {m} : {ty}, wanted {goal}")
            self.coverage.update(rule_counts(m))
            return m, ty, at
        raise GenerationExhausted(f"no derivation found in {self.cfg.attempts} attempts")

    def random_type(self, env: TypeEnv = TypeEnv(), size: int = 2, loc_nesting: int = 0) -> Type:
        """A type well-formed in ``env``."""
        return self.type(env, size, loc_nesting)

    def generate_in(self, env: TypeEnv, goal: Type | None = None, value: bool = False) -> tuple[Term, Type, Location]:
        """A term well-typed in the open environment ``env``.

        With ``goal`` the term has exactly that type; with ``value`` it is a
        syntactic value.
        """
        for _ in range(self.cfg.attempts):
            ty = goal if goal is not None else self.type(env, 2, self.cfg.max_loclam_nesting)
            at = self.location(env)
            depth = self.rng.randint(1, self.cfg.max_depth)
            self.steps = 0
            self.nesting = 0
            try:
                if value:
                    m = self._value_goal(env, at, ty, depth) if depth > 1 else self.value(env, ty, depth)
                else:
                    m = self.term(env, at, ty, depth)
            except (_Fail, _Exhausted):
                continue
            got = check_poly(env, at, m).type
            if not alpha_eq(got, ty):
                raise AssertionError(f"generator produced {m} : {got}, wanted {ty}")
            self.coverage.update(rule_counts(m))
            return m, got, at
        raise GenerationExhausted(f"no derivation found in {self.cfg.attempts} attempts")

    def corpus(self, count: int) -> list[tuple[Term, Type, Location]]:
        return [self.generate() for _ in range(count)]


def gen_well_typed(cfg: GenConfig) -> tuple[Term, Type, Location]:
    """One closed well-typed term with its type and evaluation location."""
    return TermGenerator(cfg).generate()


# -------------------------------------------------------------- type surgery


def _subtypes(t: Type) -> list[Type]:
    out = [t]
    match t:
        case Arrow(a, _, b) | Product(a, b):
            out += _subtypes(a) + _subtypes(b)
        case ForallTy(_, b) | ForallLoc(_, _, b):
            # subtypes under a binder may mention it; keep only closed pieces
            out += [s for s in _subtypes(b) if not _mentions_bound(s, t)]
    return out


def _mentions_bound(s: Type, binder: Type) -> bool:
    if isinstance(binder, ForallTy):
        return binder.tyvar in _tyvars_in(s)
    return binder.locvar in _locvars_in(s)


def _tyvars_in(t: Type) -> frozenset[str]:
    match t:
        case TyVar(a):
            return frozenset({a})
        case Arrow(a, _, b) | Product(a, b):
            return _tyvars_in(a) | _tyvars_in(b)
        case ForallTy(a, b):
            return _tyvars_in(b) | {a}
        case ForallLoc(_, _, b):
            return _tyvars_in(b)
    return frozenset()


def _locvars_in(t: Type) -> frozenset[str]:
    match t:
        case Arrow(a, loc, b):
            here = frozenset({loc.name}) if isinstance(loc, LocVar) else frozenset()
            return here | _locvars_in(a) | _locvars_in(b)
        case Product(a, b):
            return _locvars_in(a) | _locvars_in(b)
        case ForallTy(_, b):
            return _locvars_in(b)
        case ForallLoc(l, _, b):
            return _locvars_in(b) | {l}
    return frozenset()


def _locations_in(t: Type, bound: frozenset[str] = frozenset()) -> set[Location]:
    match t:
        case Arrow(a, loc, b):
            here = set() if isinstance(loc, LocVar) and loc.name in bound else {loc}
            return here | _locations_in(a, bound) | _locations_in(b, bound)
        case Product(a, b):
            return _locations_in(a, bound) | _locations_in(b, bound)
        case ForallTy(_, b):
            return _locations_in(b, bound)
        case ForallLoc(l, _, b):
            return _locations_in(b, bound | {l})
    return set()


def _abstract_type(t: Type, target: Type, var: TyVar) -> Type:
    """Replace occurrences of ``target`` outside binders that capture it."""
    if t == target:
        return var
    match t:
        case Arrow(a, loc, b):
            return Arrow(_abstract_type(a, target, var), loc, _abstract_type(b, target, var))
        case Product(a, b):
            return Product(_abstract_type(a, target, var), _abstract_type(b, target, var))
        case ForallTy(a, b):
            if a in _tyvars_in(target):
                return t
            return ForallTy(a, _abstract_type(b, target, var))
        case ForallLoc(l, k, b):
            if l in _locvars_in(target):
                return t
            return ForallLoc(l, k, _abstract_type(b, target, var))
    return t


def _abstract_loc(t: Type, target: Location, var: LocVar) -> Type:
    match t:
        case Arrow(a, loc, b):
            new_loc = var if loc == target else loc
            return Arrow(_abstract_loc(a, target, var), new_loc, _abstract_loc(b, target, var))
        case Product(a, b):
            return Product(_abstract_loc(a, target, var), _abstract_loc(b, target, var))
        case ForallTy(a, b):
            return ForallTy(a, _abstract_loc(b, target, var))
        case ForallLoc(l, k, b):
            if isinstance(target, LocVar) and target.name == l:
                return t
            return ForallLoc(l, k, _abstract_loc(b, target, var))
    return t


def is_static_only(m: Term) -> bool:
    from .subst import _term_children

    if isinstance(m, LocLam) and m.kind is not Kind.STATIC:
        return False
    return all(is_static_only(c) for c in _term_children(m))



_RULE_OF = {
    Var: "T-Var", Lam: "T-Abs", App: "T-App", TyLam: "T-Tabs", TyApp: "T-Tapp",
    LocLam: "T-Labs", LocApp: "T-Lapp", Const: "Const", Prim: "Prim",
}


def rule_counts(m: Term) -> Counter[str]:
    """How often each typing rule concludes a judgment in the derivation of ``m``."""
    from .subst import _term_children

    counts: Counter[str] = Counter()
    stack = [m]
    while stack:
        t = stack.pop()
        counts[_RULE_OF[type(t)]] += 1
        stack.extend(_term_children(t))
    return counts
