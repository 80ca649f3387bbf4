def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One line per acceptance criterion at the end of the run."""
    try:
        import test_acceptance
    except ImportError:
        return
    results = getattr(test_acceptance, "CRITERIA_RESULTS", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        ok, summary = results[num]
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'} criterion {num}: {summary}")
