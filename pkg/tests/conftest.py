from __future__ import annotations


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])
