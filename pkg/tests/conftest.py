import pytest

_ACCEPTANCE: list[tuple[str, bool, str]] = []


class AcceptanceLog:
    def record(self, criterion: str, passed: bool, detail: str = "") -> None:
        _ACCEPTANCE.append((criterion, passed, detail))
        print(f"{'PASS' if passed else 'FAIL'} {criterion}: {detail}")
        assert passed, f"{criterion}: {detail}"


@pytest.fixture
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}  {detail}")
