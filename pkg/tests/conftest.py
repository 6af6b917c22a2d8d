import numpy as np
import pytest

import adqed as aq


@pytest.fixture(scope="session")
def fig3_waveguide():
    return aq.build_cavity_array(1.0, 0.1, 19)


@pytest.fixture(scope="session")
def fig3_emitter():
    return aq.double_well_emitter(0.5, 0.87)


@pytest.fixture(scope="session")
def small_waveguide():
    return aq.build_cavity_array(1.0, 0.2, 9)


@pytest.fixture(scope="session")
def two_mode_waveguide():
    # two-mode analogue of a J = 0.2 band about omega_c = 1
    return aq.build_tabulated(np.array([0.0, 0.5]), np.array([0.8, 1.2]))


def pytest_addoption(parser):
    parser.addoption("--skip-slow", action="store_true", default=False,
                     help="skip the long-running acceptance and oracle tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--skip-slow"):
        marker = pytest.mark.skip(reason="--skip-slow")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(marker)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running end-to-end checks")
