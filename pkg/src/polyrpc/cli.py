"""``prpc``: type-check, evaluate, monomorphize, slice, run and generate programs."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .evaluate import DEFAULT_FUEL, OutOfFuel, Stuck, eval_poly, format_event
from .mono import MonoError, mono_report, selective_report
from .propgen import GenConfig, TermGenerator
from .runtime import ProtocolViolation, run_cs
from .slicing import SlicedProgram, UnplaceableDefinition, slice_program
from .surface import (
    Definition, ParseError, SourceFile, parse_definitions, print_definitions, print_term,
    print_type, read_source,
)
from .syntax import CLIENT, SERVER, LocApp, LocConst, LocLam, TypeEnv
from .typecheck import TypeCheckError, check_mono, check_poly

USER_ERROR = 1
INTERNAL_ERROR = 2


class _Failure(Exception):
    def __init__(self, message: str, code: int = USER_ERROR) -> None:
        super().__init__(message)
        self.code = code


def _site(name: str) -> LocConst:
    return CLIENT if name == "c" else SERVER


def _default_fuel() -> int:
    raw = os.environ.get("PRPC_FUEL")
    if raw is None:
        return DEFAULT_FUEL
    try:
        return int(raw)
    except ValueError:
        raise _Failure(f"PRPC_FUEL must be an integer, got {raw!r}") from None


def _load(path: str) -> SourceFile:
    try:
        return read_source(path)
    except OSError as e:
        raise _Failure(f"{path}: {e.strerror}") from None
    except ParseError as e:
        raise _Failure(f"{path}:{e.line}:{e.col}: ParseError: {e.message}") from None


def _type_error(src: SourceFile, err: TypeCheckError) -> _Failure:
    line, col = src.span(err.site) or src.span(src.parsed) or (1, 1)
    return _Failure(f"{src.path}:{line}:{col}: {err.kind}: {err.detail}")


def _typecheck(src: SourceFile, at: LocConst, mono: bool = False):
    try:
        check = check_mono if mono else check_poly
        return check(TypeEnv(), at, src.parsed)
    except TypeCheckError as e:
        raise _type_error(src, e) from None


def _has_location_forms(m) -> bool:
    from .subst import _term_children

    if isinstance(m, (LocLam, LocApp)):
        return True
    return any(_has_location_forms(c) for c in _term_children(m))


# ------------------------------------------------------------ subcommands


def cmd_check(args) -> int:
    src = _load(args.file)
    result = _typecheck(src, _site(args.at), args.mono)
    print(print_type(result.type))
    return 0


def cmd_eval(args) -> int:
    src = _load(args.file)
    at = _site(args.at)
    _typecheck(src, at)
    fuel = args.fuel if args.fuel is not None else _default_fuel()
    outcome = eval_poly(src.parsed, at, fuel)
    print(print_term(outcome.value))
    if args.trace:
        for event in outcome.app_events:
            print(format_event(event))
    return 0


def _translate(src: SourceFile, selective: bool):
    _typecheck(src, CLIENT)
    try:
        return (selective_report if selective else mono_report)(src.parsed)
    except MonoError as e:
        raise _Failure(f"{src.path}: {type(e).__name__}: {e}") from None


def cmd_mono(args) -> int:
    src = _load(args.file)
    report = _translate(src, args.selective)
    text = print_term(report.output)
    if args.report:
        print(json.dumps({
            "output": text,
            "leafCount": report.leaf_count,
            "duplicationDepth": report.duplication_depth,
        }))
    else:
        print(text)
    return 0


def write_sliced(program: SlicedProgram, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    main = Definition(program.entry, (), (), (), program.client_top)
    (out_dir / "client.prpc").write_text(
        print_definitions([*program.client_defs.values(), main]), encoding="utf-8")
    (out_dir / "server.prpc").write_text(
        print_definitions(list(program.server_defs.values())), encoding="utf-8")
    manifest = {
        "entry": program.entry,
        "client": "client.prpc",
        "server": "server.prpc",
        "clientDefs": sorted(program.client_defs),
        "serverDefs": sorted(program.server_defs),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def read_sliced(directory: Path) -> SlicedProgram:
    try:
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
        files = {}
        for side in ("client", "server"):
            path = directory / manifest.get(side, f"{side}.prpc")
            try:
                files[side] = parse_definitions(path.read_text(encoding="utf-8"))
            except ParseError as e:
                raise _Failure(f"{path}:{e.line}:{e.col}: ParseError: {e.message}") from None
    except OSError as e:
        raise _Failure(f"{directory}: {e.strerror}: {e.filename}") from None
    entry = manifest["entry"]
    client = {d.name: d for d in files["client"]}
    if entry not in client:
        raise _Failure(f"{directory}: entry {entry} is not defined in the client program")
    top = client.pop(entry).body
    return SlicedProgram(top, client, {d.name: d for d in files["server"]}, entry)


def cmd_slice(args) -> int:
    src = _load(args.file)
    report = _translate(src, args.selective) if _has_location_forms(src.parsed) else None
    term = src.parsed if report is None else report.output
    if report is None:
        _typecheck(src, CLIENT)
    try:
        program = slice_program(term)
    except UnplaceableDefinition as e:
        raise _Failure(f"{src.path}: UnplaceableDefinition: {e}") from None
    write_sliced(program, Path(args.out_dir))
    print(f"wrote {len(program.client_defs)} client and {len(program.server_defs)} server definitions to {args.out_dir}")
    return 0


def cmd_run(args) -> int:
    program = read_sliced(Path(args.dir))
    fuel = args.fuel if args.fuel is not None else _default_fuel()
    result = run_cs(program, fuel)
    print(print_term(result.value))
    if args.trace:
        for event in result.trace:
            print(event)
    return 0


def cmd_gen(args) -> int:
    cfg = GenConfig(max_depth=args.depth, max_loclam_nesting=args.loc_nesting, seed=args.seed)
    gen = TermGenerator(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(args.count)))
    for i in range(args.count):
        m, ty, at = gen.generate()
        header = f"-- type: {print_type(ty)}\n-- at: {at}\n"
        (out / f"term_{i:0{width}d}.prpc").write_text(header + print_term(m) + "\n", encoding="utf-8")
    print(f"wrote {args.count} terms to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prpc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="print the type of a program")
    p.add_argument("file")
    p.add_argument("--at", choices=("c", "s"), default="c")
    p.add_argument("--mono", action="store_true", help="use the monomorphic judgment")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("eval", help="evaluate a program")
    p.add_argument("file")
    p.add_argument("--at", choices=("c", "s"), default="c")
    p.add_argument("--fuel", type=int)
    p.add_argument("--trace", action="store_true", help="print one line per application")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("mono", help="monomorphize a program")
    p.add_argument("file")
    p.add_argument("--selective", action="store_true", help="keep dynamic location abstractions")
    p.add_argument("--report", action="store_true", help="print a JSON object with instantiation counts")
    p.set_defaults(func=cmd_mono)

    p = sub.add_parser("slice", help="split a program into client and server files")
    p.add_argument("file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--selective", action="store_true")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("run", help="run a sliced program directory")
    p.add_argument("dir")
    p.add_argument("--fuel", type=int)
    p.add_argument("--trace", action="store_true", help="print the message trace")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gen", help="write random well-typed programs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--loc-nesting", type=int, default=2)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Failure as e:
        print(e, file=sys.stderr)
        return e.code
    except OutOfFuel as e:
        print(f"OutOfFuel: {e}", file=sys.stderr)
        return USER_ERROR
    except (Stuck, ProtocolViolation) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
