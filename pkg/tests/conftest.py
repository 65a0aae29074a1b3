import pytest

from wnocmac import SimConfig
from wnocmac.engine import BACKENDS


def small(**kw) -> SimConfig:
    """Short run for unit tests: 1k warmup, 10k measured cycles."""
    kw.setdefault("warmup_cycles", 1_000)
    kw.setdefault("measure_cycles", 10_000)
    return SimConfig(**kw).replace()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


# criterion number -> list of (ok, detail), filled by test_acceptance
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
