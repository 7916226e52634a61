"""Shared pytest wiring.

The acceptance module registers one PASS/FAIL line per guarantee it checks;
printing them from a terminal-summary hook keeps the checklist visible under
default output capture.
"""

acceptance_lines = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance checklist")
        for line in acceptance_lines:
            terminalreporter.write_line(line)
