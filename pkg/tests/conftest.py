import pytest

from wbsn_aka.primitives import BitString
from wbsn_aka.registry import Deployment, init_hub, register_intermediate, register_sensor
from wbsn_aka.simnet import World

# Hand-picked credentials behind the golden trace in test_nodes.py.
GOLDEN_ID = BitString(160, 0x1818E811892F902BD23F0824128B2F330C5C7FD0)
GOLDEN_KN = BitString(160, 0x0123456789ABCDEF0123456789ABCDEF01234567)
GOLDEN_KHN = BitString(160, 0xFEDCBA9876543210FEDCBA9876543210FEDCBA98)
GOLDEN_IN = BitString(16, 0xBEEF)


@pytest.fixture
def golden_world():
    hub = init_hub(GOLDEN_KHN)
    creds = register_sensor(hub, GOLDEN_ID, GOLDEN_KN)
    relay = register_intermediate(hub, GOLDEN_IN)
    return World(hub, [creds], [relay])


@pytest.fixture
def deployment3():
    return Deployment.generate(3, 1, seed=7)


@pytest.fixture
def make_world():
    def make(n=3, m=1, seed=7, policy=None):
        return World.from_deployment(Deployment.generate(n, m, seed), policy)

    return make


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
