import pytest


@pytest.fixture
def write_csv(tmp_path):
    """Write ``text`` to a CSV under the test's temp dir and return its path."""

    def _write(text, name="ranks.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


ACCEPTANCE_LINES = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    detail = getattr(report, "criterion_detail", "")
    ACCEPTANCE_LINES[name] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("_")[1])):
        status, detail = ACCEPTANCE_LINES[name]
        terminalreporter.write_line(f"{status}  {name}  {detail}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    detail = getattr(item, "criterion_detail", None)
    if detail is not None:
        rep.criterion_detail = detail


@pytest.fixture
def criterion(request):
    """Attach a one-line measurement to the acceptance summary."""

    def _note(text):
        request.node.criterion_detail = text

    return _note
