import pytest
from hypothesis import given, strategies as st

from conftest import COMPOSE_KINDED, IDENTITY
from polyrpc.evaluate import eval_mono, eval_poly
from polyrpc.mono import (
    FreeLocationVariable, KindMismatch, mono_env, mono_letrec, mono_report, mono_term,
    mono_type, selective_mono,
)
from polyrpc.propgen import GenConfig, TermGenerator
from polyrpc.subst import alpha_eq, flv, subst_term_type, subst_term_value, subst_type_type
from polyrpc.surface import parse, parse_type, print_term
from polyrpc.syntax import (
    CLIENT, SERVER, Base, Gen, Kind, Lam, Letrec, LocLam, LocVar, Pair, Proj, TyVar,
    TypeEnv, Var,
)
from polyrpc.typecheck import check_mono, check_poly

BASE = Base("base")


def nested_static(n: int):
    names = ", ".join(f"l{i}" for i in range(n))
    return parse(rf"/\{names} . \(x : base) @ l0 . x")


def test_mono_types():
    assert mono_type(BASE) == BASE
    assert mono_type(parse_type("forall l . base -l-> base")) == parse_type("(base -c-> base) * (base -s-> base)")
    with pytest.raises(FreeLocationVariable):
        mono_type(parse_type("base -l-> base"))


def test_identity_becomes_a_pair():
    assert alpha_eq(mono_term(parse(IDENTITY)), parse(r"(\(x:base)@c.x, \(x:base)@s.x)"))
    assert print_term(mono_term(parse(IDENTITY))) == r"(\(x:base)@c.x, \(x:base)@s.x)"


def test_location_application_becomes_projection():
    m = parse(IDENTITY)
    assert mono_term(parse(f"({IDENTITY}) [@c]")) == Proj(1, mono_term(m))
    assert mono_term(parse(f"({IDENTITY}) [@s]")) == Proj(2, mono_term(m))


def test_three_nested_abstractions_give_eight_leaves():
    body = r"/\l1, l2, l3 . \(f : int -l1-> int) @ l2 . \(xs : int) @ l3 . f xs"
    report = mono_report(parse(body))
    assert report.leaf_count == 8
    assert report.duplication_depth == 3


@pytest.mark.parametrize("n", range(1, 7))
def test_leaf_count_doubles_per_binder(n):
    assert mono_report(nested_static(n)).leaf_count == 2**n


def test_environments():
    assert mono_env(TypeEnv()) == TypeEnv()
    env = TypeEnv({"x": parse_type("forall l . base -l-> base")})
    assert mono_env(env).terms["x"] == parse_type("(base -c-> base) * (base -s-> base)")
    with pytest.raises(FreeLocationVariable):
        mono_env(TypeEnv({"x": BASE}, locvars=frozenset({"l"})))


def test_free_location_variables_are_rejected():
    with pytest.raises(FreeLocationVariable):
        mono_term(parse(r"\(x:base)@l.x"))
    with pytest.raises(FreeLocationVariable):
        mono_term(parse(rf"/\l . \(x:base)@c. ({IDENTITY}) [@l]").body)


MAP = (
    r"letrec map : forall l . (int -l-> int) -l-> int -l-> int = "
    r"/\l . \(f : int -l-> int) @ l . \(xs : int) @ l . "
    r"if0(xs, 0, f xs + map [@l] f (xs - 1)) in "
)


def test_letrec_ties_the_knot_through_the_bound_name():
    m = parse(MAP + r"map [@s] (\(y:int)@s. y * 2) 3")
    out = mono_letrec(m)
    assert isinstance(out, Letrec) and out.name == "map"
    client, server = out.value.fst, out.value.snd
    assert client.loc == CLIENT and server.loc == SERVER
    assert "fst map" in print_term(client) and "snd map" in print_term(server)
    assert eval_mono(out, CLIENT).value == eval_poly(m, CLIENT).value


def test_letrec_without_location_abstraction_is_element_wise():
    m = parse(r"letrec f : int -c-> int = \(n:int)@c. if0(n, 0, f (n - 1)) in f 2")
    assert mono_letrec(m) == m


def test_multi_variable_letrec_matches_direct_expansion():
    src = (
        r"letrec h : forall l1 . forall l2 . int -l1-> int -l2-> int = "
        r"/\l1, l2 . \(n:int)@l1. \(k:int)@l2. if0(n, k, h [@l2] [@l1] (n - 1) k) in "
    )
    for a in "cs":
        for b in "cs":
            m = parse(src + f"h [@{a}] [@{b}] 3 5")
            out = mono_letrec(m)
            assert mono_report(m).leaf_count == 4
            assert eval_mono(out, CLIENT).value == eval_poly(m, CLIENT).value
            poly_remote = eval_poly(m, CLIENT).remote_events()
            assert eval_mono(out, CLIENT).remote_events() == poly_remote


def test_selective_examples():
    static = parse(r"/\l : static . \(x:base)@l.x")
    assert selective_mono(static) == mono_term(static)
    dynamic = parse(r"/\l : dynamic . \(x:base)@l.x")
    assert selective_mono(dynamic) == dynamic
    out = selective_mono(parse(COMPOSE_KINDED))
    assert isinstance(out, Pair)
    for copy, site in ((out.fst, CLIENT), (out.snd, SERVER)):
        assert isinstance(copy, LocLam) and copy.kind is Kind.DYNAMIC
        assert flv(copy) == set()
        assert site in _arrow_locations(check_poly(TypeEnv(), CLIENT, copy).type)


def _arrow_locations(ty):
    from polyrpc.syntax import Arrow, ForallLoc, ForallTy

    match ty:
        case Arrow(a, loc, b):
            return {loc} | _arrow_locations(a) | _arrow_locations(b)
        case ForallTy(_, b) | ForallLoc(_, _, b):
            return _arrow_locations(b)
    return set()


def test_selective_output_keeps_dynamic_applications():
    m = parse(r"(/\l : dynamic . \(x:int)@l.x) [@s] 3")
    out = selective_mono(m)
    assert print_term(out) == r"(/\l:dynamic.\(x:int)@l.x) [@s] 3"
    assert eval_poly(out, CLIENT).value == eval_poly(m, CLIENT).value


def test_dynamic_variable_cannot_instantiate_a_static_abstraction():
    m = parse(rf"/\k : dynamic . \(x:int)@k. ({IDENTITY}) [@k]")
    with pytest.raises(KindMismatch):
        selective_mono(m)


# -------------------------------------------------------------- properties

seeds = st.integers(0, 2**31)


@given(seeds)
def test_translation_preserves_types(seed):
    m, ty, at = TermGenerator(GenConfig(seed=seed, max_depth=6)).generate()
    assert alpha_eq(check_mono(TypeEnv(), at, mono_term(m)).type, mono_type(ty))


@given(seeds)
def test_translation_commutes_with_evaluation(seed):
    m, _, at = TermGenerator(GenConfig(seed=seed, max_depth=6)).generate()
    poly = eval_poly(m, at)
    mono = eval_mono(mono_term(m), at)
    assert alpha_eq(mono.value, mono_term(poly.value))
    assert mono.remote_events() == poly.remote_events()


@given(seeds)
def test_type_substitution_commutes_with_translation(seed):
    gen = TermGenerator(GenConfig(seed=seed))
    env = TypeEnv(tyvars=frozenset({"a"}))
    a = gen.random_type(env, size=3, loc_nesting=2)
    b = gen.random_type(TypeEnv(), size=2, loc_nesting=1)
    assert alpha_eq(mono_type(subst_type_type(a, b, "a")), subst_type_type(mono_type(a), mono_type(b), "a"))


@given(seeds)
def test_term_type_substitution_commutes_with_translation(seed):
    gen = TermGenerator(GenConfig(seed=seed, max_depth=5))
    v, _, _ = gen.generate_in(TypeEnv(tyvars=frozenset({"a"})), value=True)
    b = gen.random_type(TypeEnv(), size=2, loc_nesting=1)
    assert alpha_eq(mono_term(subst_term_type(v, b, "a")), subst_term_type(mono_term(v), mono_type(b), "a"))


@given(seeds)
def test_value_substitution_commutes_with_translation(seed):
    gen = TermGenerator(GenConfig(seed=seed, max_depth=5))
    w, a, _ = gen.generate_in(TypeEnv(), value=True)
    m, _, _ = gen.generate_in(TypeEnv({"x": a}))
    assert alpha_eq(mono_term(subst_term_value(m, w, "x")), subst_term_value(mono_term(m), mono_term(w), "x"))


@given(seeds)
def test_all_static_selective_agrees_with_plain(seed):
    m, _, _ = TermGenerator(GenConfig(seed=seed, max_depth=6)).generate()
    assert selective_mono(m) == mono_term(m)


@given(seeds)
def test_selective_output_is_well_typed(seed):
    m, ty, at = TermGenerator(GenConfig(seed=seed, max_depth=5, dynamic_kinds=True)).generate()
    out = selective_mono(m)
    check_poly(TypeEnv(), at, out)
    assert alpha_eq(mono_term(eval_poly(m, at).value), mono_term(eval_poly(out, at).value))


def test_gen_forms_pass_through():
    m = Gen(CLIENT, Var("f"), Var("x"))
    assert mono_term(Lam(CLIENT, "f", BASE, Lam(CLIENT, "x", BASE, m))).body.body == m
    assert TyVar("a") == mono_type(TyVar("a"))
    assert LocVar("l") not in flv(mono_term(parse(IDENTITY)))
