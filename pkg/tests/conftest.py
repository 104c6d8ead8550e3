"""Shared pytest plumbing: collect acceptance-criterion verdicts and print
one pass/fail line per criterion at the end of the session."""

CRITERION_LINES = []


def record_criterion(name, passed, detail=""):
    flag = "PASS" if passed else "FAIL"
    CRITERION_LINES.append(f"[{flag}] {name}" + (f": {detail}" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if not CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in CRITERION_LINES:
        terminalreporter.write_line(line)
