import pytest
from hypothesis import given, strategies as st

from conftest import COMPOSE
from polyrpc.propgen import GenConfig, TermGenerator
from polyrpc.subst import _term_children, alpha_eq, subst_loc, subst_term_loc, subst_type_loc
from polyrpc.surface import parse, parse_type
from polyrpc.syntax import (
    CLIENT, SERVER, Arrow, LocLam, LocApp, LocVar, Pair, Proj, TyVar, TypeEnv,
    is_value,
)
from polyrpc.typecheck import (
    TypeCheckError, check_mono, check_poly, check_well_formed, type_of,
)

EMPTY = TypeEnv()


def kind_of_error(fn, *args):
    with pytest.raises(TypeCheckError) as info:
        fn(*args)
    return info.value.kind


# ---------------------------------------------------------------- examples


def test_location_polymorphic_identity():
    assert alpha_eq(type_of(parse(r"/\l . \(x : base) @ l . x")), parse_type("forall l . base -l-> base"))


def test_application_at_a_location_variable():
    env = TypeEnv(
        {
            "f": Arrow(TyVar("b"), LocVar("l2"), TyVar("g")),
            "g": Arrow(TyVar("a"), LocVar("l1"), TyVar("b")),
            "x": TyVar("a"),
        },
        frozenset({"a", "b", "g"}),
        frozenset({"l1", "l2"}),
    )
    assert check_poly(env, LocVar("l2"), parse("g x")).type == TyVar("b")


def test_composition_type():
    expected = parse_type(
        "forall l1 . forall l2 . forall! a . forall! b . forall! g . "
        "(b -l2-> g) -l2-> (a -l1-> b) -l2-> (a -l2-> g)"
    )
    assert alpha_eq(type_of(parse(COMPOSE)), expected)


def test_mono_pair_and_projection():
    pair = parse(r"(\(x:base)@c.x, \(x:base)@s.x)")
    assert check_mono(EMPTY, CLIENT, pair).type == parse_type("(base -c-> base) * (base -s-> base)")
    assert check_mono(EMPTY, CLIENT, Proj(1, pair)).type == parse_type("base -c-> base")


def test_mono_rejects_location_polymorphism():
    assert kind_of_error(check_mono, EMPTY, CLIENT, parse(r"/\l.\(x:base)@l.x")) == "PolyFormInMono"
    assert kind_of_error(check_mono, EMPTY, CLIENT, parse(r"f [@c]")) == "PolyFormInMono"


def test_well_formedness():
    assert kind_of_error(check_well_formed, EMPTY, CLIENT, parse(r"\(x:base)@l.x")) == "UnboundLocVar"
    check_well_formed(EMPTY, CLIENT, parse(r"\(x:base)@c.x"))
    env = TypeEnv(locvars=frozenset({"l"}))
    assert kind_of_error(check_well_formed, env, LocVar("l"), parse("x")) == "UnboundVar"
    assert kind_of_error(check_well_formed, EMPTY, LocVar("l"), parse("1")) == "UnboundLocVar"


@pytest.mark.parametrize("source, kind", [
    ("1 2", "ArrowExpected"),
    (r"(\(x:int)@c.x) 1 [int]", "ForallTyExpected"),
    ("1 [@c]", "ForallLocExpected"),
    (r'(\(x:int)@c.x) "s"', "ArgMismatch"),
    ("fst 1", "ProductExpected"),
    (r"\(x:a)@c.x", None),
    ('1 + "s"', "ArgMismatch"),
    (r"if0(0, 1, \(x:int)@c.x)", "ArgMismatch"),
    (r"req(\(x:int)@c.x, 1)", "LocationMismatch"),
    (r"call(\(x:int)@c.x, 1)", "LocationMismatch"),
])
def test_error_kinds(source, kind):
    m = parse(source)
    if kind is None:
        check_poly(EMPTY, CLIENT, m)  # an unknown type name is an opaque base type
    else:
        assert kind_of_error(check_poly, EMPTY, CLIENT, m) == kind


def test_req_and_call_at_the_right_sites():
    assert check_poly(EMPTY, CLIENT, parse(r"req(\(x:int)@s.x, 1)")).type == parse_type("int")
    assert check_poly(EMPTY, SERVER, parse(r"call(\(x:int)@c.x, 1)")).type == parse_type("int")
    env = TypeEnv(locvars=frozenset({"l"}))
    assert check_poly(env, LocVar("l"), parse(r"gen(c){\(x:int)@c.x}{1}")).type == parse_type("int")


def test_remote_application_is_not_a_type_error():
    assert check_poly(EMPTY, CLIENT, parse(r"(\(x:int)@s.x) 1")).type == parse_type("int")


def test_derivation_heights():
    assert check_poly(EMPTY, CLIENT, parse("1")).height == 1
    assert check_poly(EMPTY, CLIENT, parse(r"\(x:int)@c.x")).height == 2
    assert check_poly(EMPTY, CLIENT, parse(r"(\(x:int)@c.x) 1")).height == 3


def test_shadowed_location_binders_keep_types_apart():
    m = parse(r"/\l . \(f : int -l-> int) @ c . /\l . \(g : int -l-> int) @ c . f")
    ty = type_of(m)
    inner = ty.body.cod.body.cod
    outer_loc = ty.body.dom.loc
    assert isinstance(inner, Arrow) and inner.loc == outer_loc
    assert check_poly(EMPTY, CLIENT, parse(r"/!\a . \(x:a)@c. /!\a . \(y:a)@c. x")).type.body.cod.body.cod == TyVar("a")


def test_letrec_typing():
    m = parse(r"letrec f : int -c-> int = \(n:int)@c. if0(n, 0, f (n - 1)) in f 3")
    assert type_of(m) == parse_type("int")
    bad = parse(r"letrec f : int -c-> int = \(n:int)@s. n in f 3")
    assert kind_of_error(check_poly, EMPTY, CLIENT, bad) == "ArgMismatch"


# -------------------------------------------------------------- properties

seeds = st.integers(0, 2**31)


def judgments(m, at):
    seen = []
    check_poly(EMPTY, at, m, on_judgment=lambda env, loc, t, r: seen.append((env, loc, t, r)))
    return seen


@given(seeds)
def test_checking_is_deterministic(seed):
    m, ty, at = TermGenerator(GenConfig(seed=seed)).generate()
    first, second = check_poly(EMPTY, at, m), check_poly(EMPTY, at, m)
    assert first == second and alpha_eq(first.type, ty)


@given(seeds)
def test_values_have_the_same_type_at_every_location(seed):
    m, _, at = TermGenerator(GenConfig(seed=seed, max_depth=6)).generate()
    for env, loc, t, r in judgments(m, at):
        if is_value(t):
            for other in (CLIENT, SERVER, *(LocVar(l) for l in env.locvars)):
                assert alpha_eq(check_poly(env, other, t).type, r.type)


def instantiate_judgment(env, at, m, l, a):
    terms = {x: subst_type_loc(t, a, l) for x, t in env.terms.items()}
    return TypeEnv(terms, env.tyvars, env.locvars - {l}), subst_loc(at, a, l), subst_term_loc(m, a, l)


@given(seeds, st.sampled_from([CLIENT, SERVER]))
def test_location_substitution_preserves_derivation_height(seed, a):
    m, _, at = TermGenerator(GenConfig(seed=seed, max_depth=6, max_loclam_nesting=3)).generate()
    for env, loc, t, r in judgments(m, at):
        for l in env.locvars:
            env2, loc2, t2 = instantiate_judgment(env, loc, t, l, a)
            r2 = check_poly(env2, loc2, t2)
            assert r2.height == r.height
            assert alpha_eq(r2.type, subst_type_loc(r.type, a, l))


def has_location_forms(m):
    if isinstance(m, (LocLam, LocApp, Pair, Proj)):
        return True
    return any(has_location_forms(c) for c in _term_children(m))


@given(seeds)
def test_poly_and_mono_checkers_agree_on_location_free_terms(seed):
    weights = {"T-Var": 3, "T-Abs": 3, "T-App": 3, "T-Tabs": 1, "T-Tapp": 1, "Const": 1, "Prim": 1}
    cfg = GenConfig(seed=seed, max_loclam_nesting=0, weights=weights)
    m, ty, at = TermGenerator(cfg).generate()
    if not has_location_forms(m):
        assert check_mono(EMPTY, at, m) == check_poly(EMPTY, at, m)


def test_judgment_location_must_be_constant_for_mono():
    assert kind_of_error(check_mono, EMPTY, LocVar("l"), parse("1")) == "PolyFormInMono"
