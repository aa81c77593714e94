"""Shared pytest hooks: surface the acceptance verdicts in the terminal summary."""

ACCEPTANCE_LINES: list[str] = []
SIGMA_TABLE_REPORT: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if SIGMA_TABLE_REPORT:
        terminalreporter.section("sigma table, per entry (planned vs published)")
        for line in SIGMA_TABLE_REPORT:
            terminalreporter.write_line(line)
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
