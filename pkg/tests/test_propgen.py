import pytest
from hypothesis import given, strategies as st

from polyrpc.mono import mono_report
from polyrpc.propgen import (
    RULES, GenConfig, GenerationExhausted, TermGenerator, gen_well_typed, is_static_only,
    rule_counts,
)
from polyrpc.subst import alpha_eq
from polyrpc.syntax import CLIENT, INT, Const, Lam, Letrec, LocLam, TypeEnv
from polyrpc.typecheck import check_poly


def contains(m, kind):
    from polyrpc.subst import _term_children

    return isinstance(m, kind) or any(contains(c, kind) for c in _term_children(m))


def test_depth_one_gives_a_lambda_or_constant():
    gen = TermGenerator(GenConfig(seed=3, max_depth=1, max_loclam_nesting=0))
    for _ in range(50):
        m, _, _ = gen.generate()
        assert isinstance(m, (Lam, Const))


def test_generated_terms_recheck():
    m, ty, at = gen_well_typed(GenConfig(seed=11, max_depth=4))
    assert alpha_eq(check_poly(TypeEnv(), at, m).type, ty)


def test_fixed_seed_is_reproducible():
    a = TermGenerator(GenConfig(seed=7, max_depth=6)).corpus(30)
    b = TermGenerator(GenConfig(seed=7, max_depth=6)).corpus(30)
    assert a == b


def test_three_nested_location_abstractions_appear():
    gen = TermGenerator(GenConfig(seed=5, max_depth=6, max_loclam_nesting=3))
    assert any(mono_report(m).leaf_count == 8 for m, _, _ in gen.corpus(300))


def test_every_rule_is_covered(corpus):
    counts = sum((rule_counts(m) for m, _, _ in corpus), start=rule_counts(Const(0)))
    for rule in RULES:
        assert counts[rule] > 0, rule


def test_corpus_is_well_typed_and_letrec_free(corpus):
    for m, ty, at in corpus:
        assert alpha_eq(check_poly(TypeEnv(), at, m).type, ty)
        assert not contains(m, Letrec)


def test_kinds_are_static_unless_asked():
    for m, _, _ in TermGenerator(GenConfig(seed=9, max_depth=6)).corpus(100):
        assert is_static_only(m)
    dyn = TermGenerator(GenConfig(seed=9, max_depth=6, dynamic_kinds=True)).corpus(200)
    assert not all(is_static_only(m) for m, _, _ in dyn)


def test_zero_weights_exhaust_generation():
    weights = {rule: 0.0 for rule in RULES}
    with pytest.raises(GenerationExhausted):
        TermGenerator(GenConfig(seed=1, weights=weights, attempts=5)).generate()


def test_depth_must_be_positive():
    with pytest.raises(ValueError):
        TermGenerator(GenConfig(max_depth=0))


def test_open_generation_respects_the_goal():
    gen = TermGenerator(GenConfig(seed=2))
    m, ty, at = gen.generate_in(TypeEnv({"x": INT}), goal=INT)
    assert ty == INT and check_poly(TypeEnv({"x": INT}), at, m).type == INT


@given(st.integers(0, 2**31), st.integers(1, 7))
def test_generator_soundness(seed, depth):
    m, ty, at = TermGenerator(GenConfig(seed=seed, max_depth=depth, dynamic_kinds=True)).generate()
    assert alpha_eq(check_poly(TypeEnv(), at, m).type, ty)
    assert at in (CLIENT, check_poly(TypeEnv(), at, m) and at)


def test_loclam_nesting_is_bounded():
    def nesting(m):
        from polyrpc.subst import _term_children

        inner = max((nesting(c) for c in _term_children(m)), default=0)
        return inner + (1 if isinstance(m, LocLam) else 0)

    for m, _, _ in TermGenerator(GenConfig(seed=4, max_depth=8, max_loclam_nesting=2)).corpus(200):
        assert nesting(m) <= 2
