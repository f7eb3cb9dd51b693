# One location-polymorphic identity, its type, and what monomorphization does to it.
from pathlib import Path

from polyrpc import mono_report, mono_term, parse, print_term, print_type, type_of

HERE = Path(__file__).parent / "programs"

ident = parse((HERE / "identity.prpc").read_text())
print("identity  :", print_term(ident))
print("its type  :", print_type(type_of(ident)))

# every location abstraction turns into a (client, server) pair
print("mono      :", print_term(mono_term(ident)))

# each nested binder doubles the copies
for n in range(1, 7):
    binders = ", ".join(f"l{i}" for i in range(n))
    m = parse(rf"/\{binders} . \(x : base) @ l0 . x")
    report = mono_report(m)
    print(f"{n} binder(s): {report.leaf_count:3d} leaves, depth {report.duplication_depth}")
