"""A deterministic two-endpoint simulation of a sliced program.

Each endpoint evaluates by substitution. An activation is a generator that
yields outgoing ``req``/``call`` messages and is resumed with the reply. The
scheduler moves JSON-encoded messages between inboxes; exactly one endpoint is
runnable at a time, and the server keeps its stack across a nested ``call``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Generator

from . import jsonast
from .evaluate import DEFAULT_FUEL, OutOfFuel, Stuck, apply_prim, unroll
from .slicing import SlicedProgram, gen_dispatch, instantiate
from .subst import subst_term_loc, subst_term_type, subst_term_value
from .syntax import (
    CLIENT, SERVER, App, Call, Const, DefRef, Gen, Lam, Letrec, LocApp, LocConst,
    LocLam, Pair, Prim, Proj, Req, Term, TyApp, TyLam, Var, is_value,
)


class ProtocolViolation(Exception):
    pass


@dataclass(frozen=True)
class TraceEvent:
    direction: str
    payload: str

    def __str__(self) -> str:
        return f"{self.direction} {self.payload}"


@dataclass
class Message:
    tag: str
    fn: Term | None
    arg: Term

    def encode(self) -> str:
        return json.dumps({
            "tag": self.tag,
            "fn": None if self.fn is None else jsonast.to_json(self.fn),
            "arg": jsonast.to_json(self.arg),
        })

    @staticmethod
    def decode(wire: str) -> Message:
        obj = json.loads(wire)
        fn = None if obj["fn"] is None else jsonast.from_json(obj["fn"])
        return Message(obj["tag"], fn, jsonast.from_json(obj["arg"]))

    def summary(self) -> str:
        if self.fn is None:
            return str(self.arg)
        return f"{self.fn} {self.arg}"


Activation = Generator[Message, Term, Term]


@dataclass
class Endpoint:
    site: LocConst
    stack: list[Activation] = field(default_factory=list)
    inbox: deque[str] = field(default_factory=deque)
    awaiting: int = 0


@dataclass
class RunResult:
    value: Term
    trace: list[TraceEvent]
    steps_used: int

    def remote_count(self) -> int:
        return sum(1 for e in self.trace if e.direction in ("req", "call"))


class _Fuel:
    def __init__(self, limit: int) -> None:
        self.limit = limit
        self.used = 0

    def tick(self) -> None:
        if self.used >= self.limit:
            raise OutOfFuel(f"run exceeded {self.limit} steps")
        self.used += 1


class _Interpreter:
    """Evaluation at one endpoint; remote applications yield messages."""

    def __init__(self, site: LocConst, program: SlicedProgram, fuel: _Fuel) -> None:
        self.site = site
        self.defs = program.defs_at(site)
        self.fuel = fuel

    def eval(self, m: Term) -> Activation:
        self.fuel.tick()
        match m:
            case Pair(a, b):
                va = yield from self.eval(a)
                vb = yield from self.eval(b)
                return Pair(va, vb)

            case _ if is_value(m):
                return m

            case App(fun, arg):
                f = yield from self.eval(fun)
                a = yield from self.eval(arg)
                return (yield from self.apply_local(f, a))

            case Req(fun, arg) | Call(fun, arg):
                tag = "req" if isinstance(m, Req) else "call"
                if gen_dispatch(self.site, SERVER if tag == "req" else CLIENT) != tag:
                    raise Stuck(f"{tag} issued on the wrong endpoint {self.site}")
                f = yield from self.eval(fun)
                a = yield from self.eval(arg)
                return (yield Message(tag, f, a))

            case Gen(callee, fun, arg):
                if not isinstance(callee, LocConst):
                    raise Stuck(f"gen callee {callee} is not a location")
                f = yield from self.eval(fun)
                a = yield from self.eval(arg)
                how = gen_dispatch(self.site, callee)
                if how == "local":
                    return (yield from self.apply_local(f, a))
                return (yield Message(how, f, a))

            case TyApp(fun, ty):
                f = unroll((yield from self.eval(fun)))
                if not isinstance(f, TyLam):
                    raise Stuck(f"type application of {f}")
                return subst_term_type(f.body, ty, f.tyvar)

            case LocApp(fun, loc):
                if not isinstance(loc, LocConst):
                    raise Stuck(f"location application to the variable {loc}")
                f = unroll((yield from self.eval(fun)))
                if not isinstance(f, LocLam):
                    raise Stuck(f"location application of {f}")
                return subst_term_loc(f.body, loc, f.locvar)

            case Proj(i, arg):
                p = unroll((yield from self.eval(arg)))
                if not isinstance(p, Pair):
                    raise Stuck(f"projection from {p}")
                return p.fst if i == 1 else p.snd

            case Prim("if0", (cond, yes, no)):
                n = yield from self.eval(cond)
                if not isinstance(n, Const) or not isinstance(n.literal, int):
                    raise Stuck(f"if0 on {n}")
                return (yield from self.eval(yes if n.literal == 0 else no))

            case Prim(op, args):
                vals = []
                for a in args:
                    vals.append((yield from self.eval(a)))
                return apply_prim(op, vals)

            case Letrec(f, ty, value, body):
                knot = Letrec(f, ty, value, Var(f))
                return (yield from self.eval(subst_term_value(body, knot, f)))

            case Lam():
                raise Stuck("unlifted lambda in a sliced program")

        raise Stuck(f"no rule applies to {m}")

    def apply_local(self, f: Term, a: Term) -> Activation:
        f = unroll(f)
        if not isinstance(f, DefRef):
            raise Stuck(f"applying a non-function: {f}")
        if f.name not in self.defs:
            raise Stuck(f"{f.name} is not defined on {self.site}")
        lam = instantiate(self.defs[f.name], f)
        if not isinstance(lam, Lam) or lam.loc != self.site:
            raise Stuck(f"{f.name} does not run on {self.site}")
        return (yield from self.eval(subst_term_value(lam.body, a, lam.param)))


def run_cs(program: SlicedProgram, fuel: int = DEFAULT_FUEL) -> RunResult:
    """Run ``program`` from its client entry point; return its value and trace."""
    meter = _Fuel(fuel)
    interp = {site: _Interpreter(site, program, meter) for site in (CLIENT, SERVER)}
    ends = {site: Endpoint(site) for site in (CLIENT, SERVER)}
    peer = {CLIENT: SERVER, SERVER: CLIENT}
    trace: list[TraceEvent] = []

    client = ends[CLIENT]
    client.stack.append(interp[CLIENT].eval(program.client_top))
    active, resume = client, None

    def send(sender: Endpoint, msg: Message) -> Endpoint:
        trace.append(TraceEvent(msg.tag, msg.summary()))
        receiver = ends[peer[sender.site]]
        receiver.inbox.append(msg.encode())
        return receiver

    while True:
        if active.inbox:
            msg = Message.decode(active.inbox.popleft())
            if msg.tag == "reply":
                if active.awaiting == 0 or not active.stack:
                    raise ProtocolViolation(f"{active.site} received a reply with no pending request")
                active.awaiting -= 1
                resume = msg.arg
            else:
                expected = "req" if active.site == SERVER else "call"
                if msg.tag != expected:
                    raise ProtocolViolation(f"{active.site} cannot serve a {msg.tag}")
                active.stack.append(interp[active.site].apply_local(msg.fn, msg.arg))
                resume = None

        top = active.stack[-1]
        try:
            out = top.send(resume)
        except StopIteration as done:
            active.stack.pop()
            value = done.value
            if active is client and not client.stack:
                if client.inbox or ends[SERVER].stack:
                    raise ProtocolViolation("client finished with communication outstanding")
                return RunResult(value, trace, meter.used)
            active = send(active, Message("reply", None, value))
            continue
        active.awaiting += 1
        active = send(active, out)
        resume = None
