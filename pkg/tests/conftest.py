import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_LINES: list[str] = []


class AcceptanceRecorder:
    """Collects one PASS/FAIL line per acceptance criterion plus optional INFO lines."""

    def record(self, number: int, title: str, checks: dict[str, bool], detail: str = "") -> bool:
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        if failed:
            line += f"  failing: {', '.join(failed)}"
        _LINES.append(line)
        print(line)
        return ok

    def info(self, number: int, text: str) -> None:
        line = f"ACCEPTANCE {number:>2} INFO  {text}"
        _LINES.append(line)
        print(line)


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
