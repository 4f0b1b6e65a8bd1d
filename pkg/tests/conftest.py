import pytest

from seqtrial import hypothetical_config


@pytest.fixture(scope="session")
def config():
    return hypothetical_config()


@pytest.fixture(scope="session")
def design(config):
    return config.design()


@pytest.fixture(scope="session")
def table(design):
    return design.table


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" and outcome != "error":
                continue
            if "test_acceptance.py::test_criterion_" in rep.nodeid:
                name = rep.nodeid.split("::test_criterion_")[1]
                number, _, title = name.partition("_")
                lines.append((int(number), f"criterion {number} {'PASS' if outcome == 'passed' else 'FAIL'}: "
                                           f"{title.replace('_', ' ')}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
