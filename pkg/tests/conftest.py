import pytest

from rydswitch.config import load_preset


@pytest.fixture(scope="session")
def preset():
    return load_preset("paper-2014")


@pytest.fixture(scope="session")
def derived(preset):
    from rydswitch.params import derive

    return derive(preset.experiment)


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, whatever the capture mode."""
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(results.values(), key=lambda c: c.number):
        terminalreporter.write_line(f"criterion {crit.number} [{crit.status()}] {crit.title} ({crit.seconds:.1f} s)")
        for chk in crit.failures():
            terminalreporter.write_line(chk.line())
