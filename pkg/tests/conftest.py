import pytest

from replab import (
    GameParams,
    MonitoringStructure,
    construct_full_effort,
    construct_non_efe,
)


@pytest.fixture(scope="session")
def binary75():
    return MonitoringStructure.binary(0.75)


@pytest.fixture(scope="session")
def ref_params():
    """The workhorse instance: binary precision 0.75 with
    (kappa, delta, pi0, c) = (0.2, 0.5, 0.3, 0.05)."""
    return GameParams(kappa=0.2, delta=0.5, pi0=0.3, c=0.05)


@pytest.fixture(scope="session")
def fail_params():
    """Same monitoring/kappa but delta = 0.3, below the 4/11 frontier."""
    return GameParams(kappa=0.2, delta=0.3, pi0=0.3, c=0.05)


@pytest.fixture(scope="session")
def fe_automaton(ref_params, binary75):
    return construct_full_effort(ref_params, binary75)


@pytest.fixture(scope="session")
def non_efe(ref_params, binary75):
    return construct_non_efe(ref_params, binary75)


@pytest.fixture(scope="session")
def non_efe_automaton(non_efe):
    return non_efe[0]


@pytest.fixture(scope="session")
def non_efe_params_out(non_efe):
    return non_efe[1]
