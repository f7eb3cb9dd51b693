# Keep one location variable alive until run time and let gen pick the dispatch.
from pathlib import Path

from polyrpc import (
    count_gen_sites, mono_term, parse, print_term, run_cs, selective_mono, slice_program,
)

HERE = Path(__file__).parent / "programs"

comp = parse((HERE / "composition.prpc").read_text().replace("/\\l1, l2", "/\\l1 : static, l2 : dynamic"))
out = selective_mono(comp)
print("client copy:", print_term(out.fst))
print("server copy:", print_term(out.snd))

sliced = slice_program(out)
print("gen sites in the sliced program:", count_gen_sites(sliced.client_top, sliced))

# the fully applied version: static l1 = c, dynamic l2 = s
applied = parse((HERE / "composition_kinded.prpc").read_text())
result = run_cs(slice_program(selective_mono(applied)))
print("value:", print_term(result.value), " trace:", [e.direction for e in result.trace])

# compared with full monomorphization, the selective output is smaller
print("sizes:", len(print_term(mono_term(comp))), "vs", len(print_term(out)))
