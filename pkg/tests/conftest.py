"""Terminal reporting hook: one pass/fail line per acceptance criterion,
emitted outside capture so it shows up in plain pytest output."""

import sys


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    outcome = "PASS" if report.passed else "FAIL"
    sys.stderr.write(f"\n[acceptance] {name}: {outcome}\n")
    sys.stderr.flush()
