import pytest
from hypothesis import given, strategies as st

from conftest import COMPOSE, COMPOSE_KINDED, compose_at, hand_corpus
from polyrpc.evaluate import Stuck, eval_mono, eval_poly
from polyrpc.mono import mono_term, selective_mono
from polyrpc.propgen import GenConfig, TermGenerator
from polyrpc.runtime import Message, ProtocolViolation, run_cs
from polyrpc.slicing import (
    SlicedProgram, UnplaceableDefinition, app_form, compile_app, count_gen_sites,
    decompile, gen_dispatch, slice_program,
)
from polyrpc.subst import alpha_eq, flv
from polyrpc.surface import parse
from polyrpc.syntax import (
    CLIENT, SERVER, App, Arrow, Call, Const, DefRef, Gen, Lam, LocVar, Pair, Req, TyVar,
    TypeEnv, Var,
)


def directions(result):
    return [e.direction for e in result.trace]


def sliced_agrees(m, at=CLIENT):
    """Run the sliced program and compare with the reference evaluators."""
    mono = mono_term(m)
    result = run_cs(slice_program(mono))
    program = slice_program(mono)
    expected = mono_term(eval_poly(m, at).value)
    assert alpha_eq(decompile(result.value, program), expected)
    assert result.remote_count() == len(eval_mono(mono, at).remote_events())
    return result


# ---------------------------------------------------------------- dispatch


def test_dispatch_table():
    assert gen_dispatch(CLIENT, CLIENT) == "local"
    assert gen_dispatch(SERVER, SERVER) == "local"
    assert gen_dispatch(CLIENT, SERVER) == "req"
    assert gen_dispatch(SERVER, CLIENT) == "call"
    with pytest.raises(ValueError):
        gen_dispatch(LocVar("l"), CLIENT)


def test_static_choice_agrees_with_dispatch():
    f, x = Var("f"), Var("x")
    expected = {"local": App, "req": Req, "call": Call}
    for caller in (CLIENT, SERVER):
        for callee in (CLIENT, SERVER):
            assert type(app_form(caller, callee, f, x)) is expected[gen_dispatch(caller, callee)]
    assert app_form(LocVar("l2"), LocVar("l1"), f, x) == Gen(LocVar("l1"), f, x)
    assert app_form(LocVar("l"), LocVar("l"), f, x) == App(f, x)


def test_compile_app_examples():
    local = parse(r"(\(x:int)@c.x) 1")
    assert compile_app(TypeEnv(), CLIENT, local) == local
    remote = parse(r"(\(x:int)@s.x) 1")
    assert compile_app(TypeEnv(), CLIENT, remote) == Req(remote.fun, remote.arg)
    env = TypeEnv(
        {"g": Arrow(TyVar("a"), LocVar("l1"), TyVar("b")), "x": TyVar("a")},
        frozenset({"a", "b"}),
        frozenset({"l1", "l2"}),
    )
    assert compile_app(env, LocVar("l2"), parse("g x")) == Gen(LocVar("l1"), Var("g"), Var("x"))


# ----------------------------------------------------------------- slicing


def test_remote_application_is_sliced_into_a_request():
    p = slice_program(parse(r"(\(x:int)@s.x) 1"))
    assert isinstance(p.client_top, Req) and isinstance(p.client_top.fun, DefRef)
    assert p.client_top.fun.name in p.server_defs and not p.client_defs


def test_pure_client_program_has_no_server_side():
    p = slice_program(parse(r"(\(x:int)@c.x) 1"))
    assert p.server_defs == {} and len(p.client_defs) == 1
    assert isinstance(p.client_top, App)


def test_definitions_are_placed_by_location():
    p = slice_program(mono_term(parse(COMPOSE)))
    for site in (CLIENT, SERVER):
        for d in p.defs_at(site).values():
            assert isinstance(d.body, Lam) and d.body.loc == site


def test_dynamic_definitions_are_shared_and_use_gen():
    p = slice_program(selective_mono(parse(COMPOSE_KINDED)))
    shared = set(p.client_defs) & set(p.server_defs)
    assert shared and all(isinstance(p.client_defs[n].body.loc, LocVar) for n in shared)
    # one gen site in each of the two instantiated copies
    assert isinstance(p.client_top, Pair)
    assert count_gen_sites(p.client_top, p) == 2
    for n in set(p.client_defs) - shared:
        assert flv(p.client_defs[n].body) == set()


def test_static_location_variable_cannot_be_placed():
    with pytest.raises(UnplaceableDefinition):
        slice_program(parse(r"/\l . \(x:int)@c.x"))


def test_captured_variables_become_closure_arguments():
    p = slice_program(parse(r"(\(y:int)@c. (\(x:int)@s. x + y) 2) 1"))
    inner = next(iter(p.server_defs.values()))
    assert inner.params == ("y",)


# ----------------------------------------------------------------- runtime


def test_remote_identity_round_trip():
    r = run_cs(slice_program(mono_term(parse(hand_corpus()["identity-s"]))))
    assert r.value == Const(1) and directions(r) == ["req", "reply"]


def test_pure_client_run_has_empty_trace():
    r = run_cs(slice_program(mono_term(parse(hand_corpus()["identity-c"]))))
    assert r.value == Const(1) and r.trace == []


def test_server_calls_back_into_the_client():
    r = run_cs(slice_program(mono_term(parse(hand_corpus()["authenticate"]))))
    assert r.value == Const("secret-ok")
    assert directions(r) == ["req", "call", "reply", "reply"]


def test_gen_dispatches_on_the_running_site():
    src = compose_at("s", "c").replace(COMPOSE, COMPOSE_KINDED)
    r = run_cs(slice_program(selective_mono(parse(src))))
    assert r.value == Const(42)
    assert directions(r) == ["req", "reply"]


@pytest.mark.parametrize("name", sorted(hand_corpus()))
def test_hand_corpus_agrees_with_the_reference(name):
    sliced_agrees(parse(hand_corpus()[name]))


def test_messages_round_trip_through_json():
    msg = Message("req", DefRef("k", (Const(1),), (), (SERVER,)), Const("a"))
    assert Message.decode(msg.encode()) == msg


def test_reply_without_request_is_a_protocol_violation(monkeypatch):
    from polyrpc import runtime

    real = runtime.Message.decode

    def forge(wire):
        msg = real(wire)
        return Message("reply", None, msg.arg) if msg.tag == "req" else msg

    monkeypatch.setattr(runtime.Message, "decode", staticmethod(forge))
    with pytest.raises(ProtocolViolation):
        run_cs(slice_program(parse(r"(\(x:int)@s.x) 1")))


def test_definition_on_the_wrong_side_is_stuck():
    p = slice_program(parse(r"(\(x:int)@s.x) 1"))
    moved = SlicedProgram(p.client_top, dict(p.server_defs), {})
    with pytest.raises((Stuck, KeyError)):
        run_cs(moved)


def test_out_of_fuel():
    from polyrpc.evaluate import OutOfFuel

    loop = parse(r"letrec f : int -s-> int = \(n:int)@s. f n in f 0")
    with pytest.raises(OutOfFuel):
        run_cs(slice_program(loop), fuel=300)


# -------------------------------------------------------------- properties

seeds = st.integers(0, 2**31)


@given(seeds)
def test_sliced_run_matches_evaluation(seed):
    m, _, _ = TermGenerator(GenConfig(seed=seed, max_depth=6)).generate()
    sliced_agrees(m)


@given(seeds)
def test_runs_are_deterministic(seed):
    m, _, _ = TermGenerator(GenConfig(seed=seed, max_depth=6)).generate()
    p = slice_program(mono_term(m))
    first, second = run_cs(p), run_cs(p)
    assert first.value == second.value and first.trace == second.trace
    assert first.steps_used == second.steps_used


@given(seeds)
def test_requests_and_replies_balance(seed):
    m, _, _ = TermGenerator(GenConfig(seed=seed, max_depth=6)).generate()
    r = run_cs(slice_program(mono_term(m)))
    depth = 0
    for event in r.trace:
        depth += -1 if event.direction == "reply" else 1
        assert depth >= 0
    assert depth == 0
