import os

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from p2pswarm.core import SwarmState

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@st.composite
def swarm_states(draw, K=None, max_types=6, max_count=6):
    K = draw(st.integers(1, 4)) if K is None else K
    full = (1 << K) - 1
    types = draw(st.lists(st.integers(0, full - 1), max_size=max_types, unique=True))
    counts = {c: draw(st.integers(1, max_count)) for c in types}
    return SwarmState(K, counts)


ACCEPTANCE: list[str] = []


def record(number: int, ok: bool, detail: str) -> bool:
    """Remember one acceptance line; printed again in the terminal summary."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
