import hypothesis.strategies as st
import pytest
from hypothesis import settings

from branchdual import InteractionParams

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

rates = st.floats(0.0, 5.0, allow_nan=False, allow_subnormal=False)
litters = st.dictionaries(st.integers(1, 4), st.floats(0.01, 5.0), max_size=3)
atoms = st.dictionaries(st.floats(0.05, 1.0), st.floats(0.01, 3.0), max_size=3).map(lambda d: sorted(d.items()))


@st.composite
def params(draw, lam=True):
    return InteractionParams(
        d=draw(rates),
        c=draw(rates),
        a=draw(rates),
        pi=draw(litters),
        b=draw(litters),
        lam=draw(atoms) if lam else [],
    )


@st.composite
def subcritical_dual_params(draw):
    """a = 0 and sigma_coop < 0."""
    b = draw(st.dictionaries(st.integers(1, 3), st.floats(0.0, 1.0), max_size=2))
    c = sum(i * r for i, r in b.items()) + draw(st.floats(0.1, 3.0))
    return InteractionParams(
        d=draw(st.floats(0.0, 2.0)),
        c=c,
        pi=draw(st.dictionaries(st.integers(1, 3), st.floats(0.0, 2.0), max_size=2)),
        b=b,
        lam=draw(atoms),
    )


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Collect one pass/fail line per acceptance criterion."""

    def _record(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
