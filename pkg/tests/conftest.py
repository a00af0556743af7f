import pytest

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    """Record a criterion line; the assertion itself stays in the test."""

    def record(criterion: str, ok: bool, detail: str = "") -> bool:
        prev = _ACCEPTANCE.get(criterion)
        if prev is not None:
            ok = ok and prev[0]
            detail = f"{prev[1]}; {detail}" if detail else prev[1]
        _ACCEPTANCE[criterion] = (bool(ok), detail)
        print(f"{criterion}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: int(k.split()[-1])):
        ok, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {'PASS' if ok else 'FAIL'}  {detail}")
