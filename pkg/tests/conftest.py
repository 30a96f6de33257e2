import pytest

from rydsat.atoms.embedding import load_fixture
from rydsat.config import load_config
from rydsat.sat.formula import Formula
from rydsat.sat.reduction import reduce

PSI1 = [[1, 2, 3], [-1, 4], [1, 5, 6]]
PSI2 = [[1, 2, 3], [-1, -2], [1, 5, 6]]
PSI3 = [[1, 2, 3], [-1, -2], [1, -3, 6]]


def pytest_collection_modifyitems(config, items):
    if config.getoption("markexpr"):
        return
    skip_slow = pytest.mark.skip(reason="slow; select with -m slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def psi1():
    return Formula.from_lists(6, PSI1)


@pytest.fixture
def psi2():
    return Formula.from_lists(6, PSI2)


@pytest.fixture
def psi3():
    return Formula.from_lists(6, PSI3)


@pytest.fixture
def contradiction():
    return Formula.from_lists(1, [[1], [-1]])


@pytest.fixture
def g1(psi1):
    return reduce(psi1)


@pytest.fixture
def g2(psi2):
    return reduce(psi2)


@pytest.fixture
def g3(psi3):
    return reduce(psi3)


@pytest.fixture(scope="session")
def g1_embedding():
    return load_fixture("g1")


@pytest.fixture(scope="session")
def g2_embedding():
    return load_fixture("g2")


@pytest.fixture(scope="session")
def g3_embedding():
    return load_fixture("g3")


@pytest.fixture
def run_config(tmp_path):
    return load_config(None, output_dir=str(tmp_path / "runs"), db_path=str(tmp_path / "runs.db"))
