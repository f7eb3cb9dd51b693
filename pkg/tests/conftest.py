import pytest
from hypothesis import HealthCheck, settings

from polyrpc.propgen import GenConfig, TermGenerator
from polyrpc.surface import parse

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# results reported by the acceptance module, printed after the run
ACCEPTANCE_LINES: list[str] = []

IDENTITY = r"/\l . \(x : base) @ l . x"
COMPOSE = (
    r"/\l1, l2 . /!\a, b, g . "
    r"\(f : b -l2-> g) @ l2 . \(gg : a -l1-> b) @ l2 . \(x : a) @ l2 . f (gg x)"
)
COMPOSE_KINDED = (
    r"/\l1 : static, l2 : dynamic . /!\a, b, g . "
    r"\(f : b -l2-> g) @ l2 . \(gg : a -l1-> b) @ l2 . \(x : a) @ l2 . f (gg x)"
)
# the client asks the server to authenticate; the server calls back into the
# client for credentials before answering
AUTHENTICATE = r"""
(\(authenticate : int -s-> string) @ c . authenticate 7)
  (\(user : int) @ s .
     (\(pw : string) @ s . pw ++ "-ok")
       ((\(getCredentials : int -c-> string) @ s . getCredentials user)
          (\(u : int) @ c . "secret")))
"""


def compose_at(l1: str, l2: str) -> str:
    """The composition function instantiated at two sites and fully applied."""
    return (
        f"({COMPOSE}) [@{l1}] [@{l2}] [int] [int] [int] "
        f"(\\(y : int) @ {l2} . y * 2) (\\(y : int) @ {l1} . y + 1) 20"
    )


def hand_corpus() -> dict[str, str]:
    corpus = {
        "identity-c": r"(/\l . \(x : int) @ l . x) [@c] 1",
        "identity-s": r"(/\l . \(x : int) @ l . x) [@s] 1",
        "identity": IDENTITY,
        "authenticate": AUTHENTICATE,
    }
    for l1 in "cs":
        for l2 in "cs":
            corpus[f"compose-{l1}{l2}"] = compose_at(l1, l2)
    return corpus


@pytest.fixture(scope="session")
def corpus():
    """1000 closed well-typed terms, depth at most 8."""
    gen = TermGenerator(GenConfig(max_depth=8, max_loclam_nesting=3, seed=20260101))
    return gen.corpus(1000)


@pytest.fixture(scope="session")
def hand_programs():
    return {name: parse(src) for name, src in hand_corpus().items()}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
