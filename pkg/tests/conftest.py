"""Shared pytest wiring.

The acceptance tests append one verdict line per gate to ACCEPTANCE_LINES;
this hook echoes the collected lines after the run summary so a full-suite
pass still shows every verdict explicitly.
"""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
