"""Abstract syntax shared by every pass: locations, kinds, types, terms, environments."""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field
from typing import Mapping, Union


# ---------------------------------------------------------------- locations


@dataclass(frozen=True)
class LocConst:
    """A location constant: ``c`` (client) or ``s`` (server)."""

    site: str

    def __post_init__(self) -> None:
        if self.site not in ("c", "s"):
            raise ValueError(f"location constant must be 'c' or 's', got {self.site!r}")

    def __str__(self) -> str:
        return self.site


@dataclass(frozen=True)
class LocVar:
    name: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("location variable name must be nonempty")

    def __str__(self) -> str:
        return self.name


Location = Union[LocConst, LocVar]

CLIENT = LocConst("c")
SERVER = LocConst("s")
SITES = (CLIENT, SERVER)


class Kind(enum.Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"

    def __str__(self) -> str:
        return self.value


# -------------------------------------------------------------------- types


@dataclass(frozen=True)
class Base:
    name: str


@dataclass(frozen=True)
class Arrow:
    dom: Type
    loc: Location
    cod: Type


@dataclass(frozen=True)
class TyVar:
    name: str


@dataclass(frozen=True)
class ForallTy:
    tyvar: str
    body: Type


@dataclass(frozen=True)
class ForallLoc:
    locvar: str
    kind: Kind
    body: Type


@dataclass(frozen=True)
class Product:
    fst: Type
    snd: Type


Type = Union[Base, Arrow, TyVar, ForallTy, ForallLoc, Product]

INT = Base("int")
STRING = Base("string")
UNIT = Base("unit")


# -------------------------------------------------------------------- terms


class _Term:
    __slots__ = ()

    def __str__(self) -> str:
        from .surface import print_term

        return print_term(self)


@dataclass(frozen=True)
class Var(_Term):
    name: str


@dataclass(frozen=True)
class Lam(_Term):
    loc: Location
    param: str
    param_type: Type
    body: Term


@dataclass(frozen=True)
class App(_Term):
    fun: Term
    arg: Term


@dataclass(frozen=True)
class TyLam(_Term):
    tyvar: str
    body: Term

    def __post_init__(self) -> None:
        if not is_value(self.body):
            raise ValueError("type abstraction body must be a value")


@dataclass(frozen=True)
class TyApp(_Term):
    fun: Term
    ty_arg: Type


@dataclass(frozen=True)
class LocLam(_Term):
    locvar: str
    kind: Kind
    body: Term

    def __post_init__(self) -> None:
        if not is_value(self.body):
            raise ValueError("location abstraction body must be a value")


@dataclass(frozen=True)
class LocApp(_Term):
    fun: Term
    loc_arg: Location


@dataclass(frozen=True)
class Pair(_Term):
    fst: Term
    snd: Term


@dataclass(frozen=True)
class Proj(_Term):
    index: int
    arg: Term

    def __post_init__(self) -> None:
        if self.index not in (1, 2):
            raise ValueError(f"projection index must be 1 or 2, got {self.index}")


@dataclass(frozen=True)
class Req(_Term):
    """Client-to-server call in a sliced program."""

    fun: Term
    arg: Term


@dataclass(frozen=True)
class Call(_Term):
    """Server-to-client call in a sliced program."""

    fun: Term
    arg: Term


@dataclass(frozen=True)
class Gen(_Term):
    """Application whose local/remote flavour is decided at run time from ``callee``."""

    callee: Location
    fun: Term
    arg: Term


@dataclass(frozen=True)
class Const(_Term):
    literal: int | str

    def __post_init__(self) -> None:
        if isinstance(self.literal, bool) or not isinstance(self.literal, (int, str)):
            raise ValueError(f"constants are ints or strings, got {self.literal!r}")


@dataclass(frozen=True)
class Prim(_Term):
    op: str
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        if self.op not in PRIM_ARITY:
            raise ValueError(f"unknown primitive {self.op!r}")
        if len(self.args) != PRIM_ARITY[self.op]:
            raise ValueError(f"{self.op} takes {PRIM_ARITY[self.op]} arguments")


@dataclass(frozen=True)
class Letrec(_Term):
    """``letrec name : ty = value in body``; ``value`` must be function-like."""

    name: str
    ty: Type
    value: Term
    body: Term

    def __post_init__(self) -> None:
        if not is_function_like(self.value):
            raise ValueError("letrec binds a function, a pair of functions, or an abstraction over one")


@dataclass(frozen=True)
class DefRef(_Term):
    """Closure over a lifted top-level definition of a sliced program.

    ``args``, ``ty_args`` and ``loc_args`` line up with the definition's captured
    term, type and location parameters.
    """

    name: str
    args: tuple[Term, ...] = ()
    ty_args: tuple[Type, ...] = ()
    loc_args: tuple[Location, ...] = ()


Term = Union[
    Var, Lam, App, TyLam, TyApp, LocLam, LocApp, Pair, Proj,
    Req, Call, Gen, Const, Prim, Letrec, DefRef,
]

# int ops, string concatenation, and a conditional: if0 n a b is a when n == 0 else b
# (only the chosen branch is evaluated)
PRIM_ARITY = {"+": 2, "-": 2, "*": 2, "++": 2, "if0": 3}


def is_value(m: Term) -> bool:
    match m:
        case Var() | Lam() | Const() | DefRef():
            return True
        case TyLam(_, body) | LocLam(_, _, body):
            return is_value(body)
        case Pair(a, b):
            return is_value(a) and is_value(b)
        case Letrec(name, _, _, Var(ref)):
            # an unrolled recursive knot stands for its function value
            return name == ref
    return False


def is_function_like(m: Term) -> bool:
    match m:
        case Lam() | DefRef():
            return True
        case TyLam(_, body) | LocLam(_, _, body):
            return is_function_like(body)
        case Pair(a, b):
            return is_function_like(a) and is_function_like(b)
    return False


# ------------------------------------------------------------- environments


@dataclass(frozen=True)
class TypeEnv:
    """Typing context: term bindings plus in-scope type and location variables."""

    terms: Mapping[str, Type] = field(default_factory=dict)
    tyvars: frozenset[str] = frozenset()
    locvars: frozenset[str] = frozenset()

    def with_var(self, name: str, ty: Type) -> TypeEnv:
        terms = dict(self.terms)
        terms.pop(name, None)
        terms[name] = ty
        return TypeEnv(terms, self.tyvars, self.locvars)

    def with_tyvar(self, name: str) -> TypeEnv:
        return TypeEnv(self.terms, self.tyvars | {name}, self.locvars)

    def with_locvar(self, name: str) -> TypeEnv:
        return TypeEnv(self.terms, self.tyvars, self.locvars | {name})

    def dom(self) -> frozenset[str]:
        return frozenset(self.terms) | self.tyvars | self.locvars

    def rng(self) -> list[Type]:
        return list(self.terms.values())


EMPTY_ENV = TypeEnv()


# --------------------------------------------------------------- fresh names

_counter = itertools.count(1)
_SUFFIX = re.compile(r"^(.*?)_\d+$")

# names the surface syntax reserves; fresh names never collide with them
KEYWORDS = frozenset(
    {"letrec", "in", "fst", "snd", "forall", "static", "dynamic",
     "req", "call", "gen", "def", "if0"}
)


def fresh(hint: str) -> str:
    """Return a name never produced before, derived from ``hint``."""
    m = _SUFFIX.match(hint)
    stem = (m.group(1) if m else hint) or "v"
    return f"{stem}_{next(_counter)}"
