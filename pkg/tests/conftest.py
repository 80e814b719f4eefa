def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for res in sorted(RESULTS, key=lambda r: r.id):
        terminalreporter.write_line(res.line())
