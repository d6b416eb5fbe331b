import pytest

from nhred.cli import build_parser, resolve_settings

CRITERIA = {
    1: "Dirac pipeline on the nonholonomic particle",
    2: "generic bivectors match the closed forms",
    3: "momentum-map residuals of the gauged bivector",
    4: "RK4 conservation and order-4 signature",
    5: "reduced-form identities on momentum leaves",
    6: "identification with the canonical cotangent bundle",
    7: "Jacobi structure of the reduced and nonholonomic brackets",
    8: "D-momentum reduction of the ball in a spherical shell",
    9: "deterministic verification reports",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion exercised by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    n = getattr(report, "criterion", None)
    if n is None:
        return
    if hasattr(report, "wasxfail"):
        outcome = "xfail" if report.skipped else "xpass"
    else:
        outcome = report.outcome
    _outcomes.setdefault(n, []).append((report.nodeid, outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            tr.write_line(f"criterion {n}: NOT RUN  {title}")
            continue
        bad = [r for r in results if r[1] not in ("passed", "xfail")]
        xfails = sum(r[1] == "xfail" for r in results)
        status = "PASS" if not bad else "FAIL"
        note = f" ({xfails} literal form(s) xfail as expected)" if xfails else ""
        tr.write_line(f"criterion {n}: {status}  {title}: {len(results)} test(s){note}")
        for nodeid, outcome in bad:
            tr.write_line(f"    {outcome}: {nodeid}")


def settings_for(command, *argv):
    args = build_parser().parse_args([command, *argv])
    return resolve_settings(args)


@pytest.fixture
def make_settings():
    return settings_for
