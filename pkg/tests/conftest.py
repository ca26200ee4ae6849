import re

ACCEPTANCE = []


def report(criterion, passed, detail):
    """Record and print one acceptance line; ``passed=None`` marks a skip."""
    status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    line = "[%s] criterion %s: %s" % (status, criterion, detail)
    ACCEPTANCE.append(line)
    print(line)
    return passed


def _order(line):
    return int(re.search(r"criterion (\d+)", line).group(1))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=_order):
            terminalreporter.write_line(line)
