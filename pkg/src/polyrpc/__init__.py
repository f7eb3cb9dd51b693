"""Type checking, evaluation, monomorphization and client/server slicing for a
location-polymorphic RPC calculus."""

from .evaluate import EvalOutcome, OutOfFuel, Stuck, eval_mono, eval_poly
from .mono import (
    FreeLocationVariable, KindMismatch, MonoReport, mono_env, mono_letrec, mono_report,
    mono_term, mono_type, selective_mono, selective_report,
)
from .propgen import GenConfig, GenerationExhausted, TermGenerator, gen_well_typed
from .runtime import ProtocolViolation, RunResult, run_cs
from .slicing import (
    SlicedProgram, compile_app, count_gen_sites, decompile, gen_dispatch, slice_program,
)
from .subst import (
    alpha_eq, flv, ftv, fv, subst_loc, subst_term_loc, subst_term_type,
    subst_term_value, subst_type_loc, subst_type_type,
)
from .surface import (
    ParseError, parse, parse_definitions, parse_type, print_definitions, print_term, print_type,
)
from .syntax import (
    CLIENT, EMPTY_ENV, INT, SERVER, STRING, UNIT, App, Arrow, Base, Call, Const, DefRef,
    ForallLoc, ForallTy, Gen, Kind, Lam, Letrec, LocApp, LocConst, LocLam, LocVar, Pair,
    Prim, Product, Proj, Req, TyApp, TyLam, TyVar, TypeEnv, Var, is_value,
)
from .typecheck import (
    TypeCheckError, TypingResult, check_mono, check_poly, check_well_formed, type_of,
)
