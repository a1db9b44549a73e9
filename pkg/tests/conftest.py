"""Shared pytest plumbing: the acceptance checklist printed at session end."""

_acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.section("acceptance checks")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
