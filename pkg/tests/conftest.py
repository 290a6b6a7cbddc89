import pytest

# criterion number -> (passed, detail), filled in by test_acceptance.py
GATE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def gate():
    def record(number: int, ok: bool, detail: str = "") -> bool:
        GATE[number] = (ok, detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not GATE:
        return
    terminalreporter.section("acceptance gate")
    for number in sorted(GATE):
        ok, detail = GATE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    passed = sum(ok for ok, _ in GATE.values())
    terminalreporter.write_line(f"{passed}/{len(GATE)} criteria passed")
