import pytest

from uwacap.fitting import fit_coefficient_model, fit_power_law
from uwacap.physics import EnvironmentParams
from uwacap.sweep import case_spec, run_sweep, table_from_result

# Outcome of each acceptance criterion, filled in by test_acceptance.py and
# printed once at the end of the run.
ACCEPTANCE = {}


class Case1Sweeps:
    """Lazily computed 40x40 case-1 sweeps keyed by (s, w), shared by the session."""

    def __init__(self):
        self._results = {}

    def result(self, s=0.5, w=0.0):
        key = (float(s), float(w))
        if key not in self._results:
            self._results[key] = run_sweep(case_spec("case1", EnvironmentParams(s=s, w=w)))
        return self._results[key]

    def table(self, s=0.5, w=0.0):
        return table_from_result(self.result(s, w))

    def model(self, quantity="power", s=0.5, w=0.0):
        return fit_coefficient_model(fit_power_law(self.table(s, w), quantity), quantity)


@pytest.fixture(scope="session")
def case1_sweeps():
    return Case1Sweeps()


def record(number, title, passed, detail=""):
    ACCEPTANCE[number] = (title, bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number}: {title}" + (f" ({detail})" if detail else ""))
