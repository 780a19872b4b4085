import pytest

# number -> [title, status, details]; status is None until the first check
_CRITERIA: dict[int, list] = {}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion: ``criterion(k, title)``
    returns a callable ``check(ok, detail)`` that records and asserts.

    A criterion split over several checks passes only if every check does.
    """

    def start(number: int, title: str):
        entry = _CRITERIA.setdefault(number, [title, None, []])

        def check(ok: bool, detail: str = ""):
            ok = bool(ok)
            entry[1] = ok if entry[1] is None else (entry[1] and ok)
            if detail:
                entry[2].append(detail if ok else f"FAILED {detail}")
            assert ok, f"criterion {number} ({title}) failed: {detail}"

        return check

    return start


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, details = _CRITERIA[number]
        status = "PASS" if ok else ("FAIL" if ok is False else "NOT RUN")
        line = f"criterion {number:2d}: {status}  {title}"
        if details:
            line += "  [" + "; ".join(details) + "]"
        terminalreporter.write_line(line)
