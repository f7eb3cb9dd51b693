# Slice a program into client and server halves and watch the messages go by.
from pathlib import Path

from polyrpc import mono_term, parse, print_definitions, print_term, run_cs, slice_program

HERE = Path(__file__).parent / "programs"

for name in ("remote_identity", "authenticate"):
    m = parse((HERE / f"{name}.prpc").read_text())
    program = slice_program(mono_term(m))
    print(f"---- {name}")
    print("client entry:", print_term(program.client_top))
    print("server side:")
    print(print_definitions(list(program.server_defs.values())))
    result = run_cs(program)
    print("value:", print_term(result.value))
    for event in result.trace:
        print("  ", event.direction, event.payload[:70])

# the authenticate trace is req, call, reply, reply:
# the server's nested call to getCredentials is answered before the server answers the client
