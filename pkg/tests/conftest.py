import pytest

from cascadepairs.experiment import default_config


@pytest.fixture(scope="session")
def config():
    return default_config()


@pytest.fixture(scope="session")
def model(config):
    return config.dispersion


@pytest.fixture(scope="session")
def device(config):
    return config.device


@pytest.fixture(scope="session")
def grating(config):
    return config.device.grating


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance
    if test_acceptance.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.REPORT:
            terminalreporter.write_line(line)
