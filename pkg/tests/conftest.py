import pytest

_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """Records (number, part, passed, detail) for the end-of-run acceptance summary."""

    def record(number: int, passed: bool, detail: str, part: str = "") -> bool:
        _CRITERIA.setdefault(number, []).append((part, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        parts = _CRITERIA[number]
        ok = all(p for _, p, _ in parts)
        if len(parts) == 1:
            detail = parts[0][2]
        else:
            detail = "; ".join(f"{part}: {'pass' if p else 'FAIL'} {d}" for part, p, d in parts)
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}")
