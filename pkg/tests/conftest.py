import pytest
from hypothesis import HealthCheck, settings

from twistlab import CompletedLFunction, TwistDescriptor, fixture_curve

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def e11():
    return fixture_curve("11a")


@pytest.fixture(scope="session")
def e37():
    return fixture_curve("37a")


@pytest.fixture(scope="session")
def l11(e11):
    """The untwisted L-function of 11a."""
    return CompletedLFunction(TwistDescriptor(e11, 1))


@pytest.fixture(scope="session")
def l37(e37):
    return CompletedLFunction(TwistDescriptor(e37, 1))


@pytest.fixture(scope="session")
def l11_m19(e11):
    return CompletedLFunction(TwistDescriptor(e11, -19))


@pytest.fixture(scope="session")
def l11_m115(e11):
    return CompletedLFunction(TwistDescriptor(e11, -115))


def pytest_terminal_summary(terminalreporter):
    from tests.acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
