"""Shared pytest wiring.

The acceptance tests append one PASS/FAIL line per criterion to
ACCEPTANCE_LINES; the terminal-summary hook prints them at the end of
the run so the verdicts are visible regardless of capture settings.
"""

from __future__ import annotations

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
