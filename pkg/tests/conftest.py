# Acceptance tests record one verdict line per criterion here; the lines are
# printed at the end of the run so they show up in the plain pytest log.
VERDICTS = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in VERDICTS.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
