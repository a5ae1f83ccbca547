import numpy as np
import pytest

from mallowslab import parse_model

BATTERY = ["uniform(a=0,b=1)", "normal(mu=0,sigma=1)", "exponential(rate=1)", "lognormal(mu=0,sigma=1)"]

ALL_FAMILIES = BATTERY + [
    "uniform(a=-2,b=5)",
    "normal(mu=3,sigma=0.5)",
    "exponential(rate=2.5)",
    "lognormal(mu=0.3,sigma=0.4)",
    "weibull(k=1.7,scale=2)",
    "weibull(k=0.8,scale=1)",
    "pareto(alpha=5,xm=1)",
]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=BATTERY)
def battery_model(request):
    return parse_model(request.param)


@pytest.fixture(params=ALL_FAMILIES)
def any_model(request):
    return parse_model(request.param)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
