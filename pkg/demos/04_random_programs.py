# Draw random well-typed programs and check the pipeline on each of them.
from polyrpc import (
    GenConfig, TermGenerator, alpha_eq, check_mono, decompile, eval_mono, eval_poly, mono_term,
    mono_type, print_term, print_type, run_cs, slice_program,
)
from polyrpc import CLIENT, TypeEnv

gen = TermGenerator(GenConfig(seed=2026, max_depth=6, max_loclam_nesting=2))
remote = 0
for i in range(200):
    m, ty, at = gen.generate()
    mono = mono_term(m)
    assert alpha_eq(check_mono(TypeEnv(), at, mono).type, mono_type(ty))
    assert alpha_eq(eval_mono(mono, at).value, mono_term(eval_poly(m, at).value))
    program = slice_program(mono)
    result = run_cs(program)
    assert alpha_eq(decompile(result.value, program), mono_term(eval_poly(m, CLIENT).value))
    remote += result.remote_count()
    if i < 3:
        print(print_term(m), ":", print_type(ty))

print("200 programs checked,", remote, "remote calls in total")
print("rules used:", dict(gen.coverage))
