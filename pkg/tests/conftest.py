import pytest

# (criterion, verdict, detail) rows filled in by the acceptance tests
ACCEPTANCE: list[tuple[str, str, str]] = []


def record(criterion: str, ok: bool | None, detail: str) -> None:
    verdict = "REPORT" if ok is None else ("PASS" if ok else "FAIL")
    ACCEPTANCE.append((criterion, verdict, detail))
    print(f"criterion {criterion}: {verdict}: {detail}", flush=True)


@pytest.fixture
def criterion():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict, detail in ACCEPTANCE:
        terminalreporter.write_line(f"criterion {name}: {verdict}: {detail}")
