import pytest

from mpspectrum.measures import Measure
from mpspectrum.solver import MasterEquation
from mpspectrum.support import SupportAnalyzer

# Acceptance results collected by test_acceptance and printed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def discrete_measures():
    A = Measure.discrete([0.0, 1.0, 10.0], [0.2, 0.4, 0.4])
    B = Measure.discrete([-3.0, 3.0], [0.4, 0.6])
    return A, B, 0.5


def mixed_measures():
    A = Measure.semicircle(1.0)
    B = Measure([(0.4, Measure.atom(-3.0)), (0.6, Measure.semicircle(1.0))])
    return A, B, 0.5


def mp_measures(gamma):
    return Measure.atom(1.0), Measure.atom(0.0), gamma


SETTINGS = {
    "mp25": lambda: mp_measures(0.25),
    "mp50": lambda: mp_measures(0.5),
    "discrete": discrete_measures,
    "mixed": mixed_measures,
}


class Setting:
    def __init__(self, name):
        self.name = name
        self.A, self.B, self.gamma = SETTINGS[name]()
        self.eq = MasterEquation(self.A, self.B, self.gamma)
        self.analyzer = SupportAnalyzer(self.A, self.B, self.gamma)
        self._report = None
        self._cdf = None

    @property
    def report(self):
        if self._report is None:
            self._report = self.analyzer.determine_support()
        return self._report

    @property
    def cdf(self):
        if self._cdf is None:
            from mpspectrum.solver import ModelCDF
            self._cdf = ModelCDF(self.eq, self.report)
        return self._cdf


_CACHE: dict[str, Setting] = {}


def get_setting(name) -> Setting:
    if name not in _CACHE:
        _CACHE[name] = Setting(name)
    return _CACHE[name]


@pytest.fixture(scope="session")
def discrete():
    return get_setting("discrete")


@pytest.fixture(scope="session")
def mixed():
    return get_setting("mixed")


@pytest.fixture(scope="session")
def mp25():
    return get_setting("mp25")


@pytest.fixture(scope="session")
def mp50():
    return get_setting("mp50")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
