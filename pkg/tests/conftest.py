def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: (isinstance(k, str), k if isinstance(k, int) else 0)):
        terminalreporter.write_line(RESULTS[key])
