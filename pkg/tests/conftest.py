import sys


def pytest_terminal_summary(terminalreporter):
    # surface the acceptance pass/fail lines in the terminal summary, where
    # they stay visible without -s
    for mod in list(sys.modules.values()):
        lines = getattr(mod, "CRITERION_LINES", None)
        if lines:
            terminalreporter.section("acceptance criteria")
            for line in lines:
                terminalreporter.write_line(line)
