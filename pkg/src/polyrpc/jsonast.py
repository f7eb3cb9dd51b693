"""JSON dump of terms and types: one object per node, ``"node"`` names the constructor.

Locations are ``"c"``, ``"s"`` or ``{"var": name}``.
"""

from __future__ import annotations

import json
from typing import Any

from .syntax import (
    App, Arrow, Base, Call, Const, DefRef, ForallLoc, ForallTy, Gen, Kind, Lam,
    Letrec, LocApp, LocConst, LocLam, LocVar, Location, Pair, Prim, Product, Proj,
    Req, Term, TyApp, TyLam, TyVar, Type, Var,
)

# field name in JSON -> (attribute, category); categories drive (de)serialization
_FIELDS: dict[type, list[tuple[str, str, str]]] = {
    Var: [("name", "name", "str")],
    Lam: [("loc", "loc", "loc"), ("param", "param", "str"),
          ("paramType", "param_type", "type"), ("body", "body", "term")],
    App: [("fun", "fun", "term"), ("arg", "arg", "term")],
    TyLam: [("tyvar", "tyvar", "str"), ("body", "body", "term")],
    TyApp: [("fun", "fun", "term"), ("tyArg", "ty_arg", "type")],
    LocLam: [("locvar", "locvar", "str"), ("kind", "kind", "kind"), ("body", "body", "term")],
    LocApp: [("fun", "fun", "term"), ("locArg", "loc_arg", "loc")],
    Pair: [("fst", "fst", "term"), ("snd", "snd", "term")],
    Proj: [("index", "index", "int"), ("arg", "arg", "term")],
    Req: [("fun", "fun", "term"), ("arg", "arg", "term")],
    Call: [("fun", "fun", "term"), ("arg", "arg", "term")],
    Gen: [("callee", "callee", "loc"), ("fun", "fun", "term"), ("arg", "arg", "term")],
    Const: [("literal", "literal", "lit")],
    Prim: [("op", "op", "str"), ("args", "args", "terms")],
    Letrec: [("name", "name", "str"), ("type", "ty", "type"),
             ("value", "value", "term"), ("body", "body", "term")],
    DefRef: [("name", "name", "str"), ("args", "args", "terms"),
             ("tyArgs", "ty_args", "types"), ("locArgs", "loc_args", "locs")],
    Base: [("name", "name", "str")],
    Arrow: [("dom", "dom", "type"), ("loc", "loc", "loc"), ("cod", "cod", "type")],
    TyVar: [("name", "name", "str")],
    ForallTy: [("tyvar", "tyvar", "str"), ("body", "body", "type")],
    ForallLoc: [("locvar", "locvar", "str"), ("kind", "kind", "kind"), ("body", "body", "type")],
    Product: [("fst", "fst", "type"), ("snd", "snd", "type")],
}

_BY_NAME = {cls.__name__: cls for cls in _FIELDS}


def loc_to_json(loc: Location) -> Any:
    if isinstance(loc, LocConst):
        return loc.site
    return {"var": loc.name}


def loc_from_json(obj: Any) -> Location:
    if isinstance(obj, str):
        return LocConst(obj)
    if isinstance(obj, dict) and set(obj) == {"var"}:
        return LocVar(obj["var"])
    raise ValueError(f"not a location: {obj!r}")


def to_json(node: Term | Type) -> dict:
    """Convert a term or type to plain JSON data."""
    out: dict[str, Any] = {"node": type(node).__name__}
    for key, attr, cat in _FIELDS[type(node)]:
        out[key] = _encode(getattr(node, attr), cat)
    return out


def _encode(value, cat: str):
    match cat:
        case "term" | "type":
            return to_json(value)
        case "terms" | "types":
            return [to_json(v) for v in value]
        case "loc":
            return loc_to_json(value)
        case "locs":
            return [loc_to_json(v) for v in value]
        case "kind":
            return value.value
    return value


def from_json(obj: dict) -> Term | Type:
    """Inverse of :func:`to_json`."""
    try:
        cls = _BY_NAME[obj["node"]]
    except (KeyError, TypeError):
        raise ValueError(f"not an AST node: {obj!r}") from None
    fields = _FIELDS[cls]
    if set(obj) != {"node", *(key for key, _, _ in fields)}:
        raise ValueError(f"unexpected fields for {cls.__name__}: {sorted(obj)}")
    return cls(*(_decode(obj[key], cat) for key, _, cat in fields))


def _decode(value, cat: str):
    match cat:
        case "term" | "type":
            return from_json(value)
        case "terms" | "types":
            return tuple(from_json(v) for v in value)
        case "loc":
            return loc_from_json(value)
        case "locs":
            return tuple(loc_from_json(v) for v in value)
        case "kind":
            return Kind(value)
    return value


def dumps(node: Term | Type, **kwargs) -> str:
    return json.dumps(to_json(node), ensure_ascii=False, **kwargs)


def loads(text: str) -> Term | Type:
    return from_json(json.loads(text))
