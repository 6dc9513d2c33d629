import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cptmdp.model import parse_model
from cptmdp.prospects import CptParams, LossRanking

MODELS = Path(__file__).parent.parent / "models"


def load_fixture(name: str):
    return parse_model((MODELS / name).read_text())


@pytest.fixture(scope="session")
def standard_params():
    return CptParams.standard()


@pytest.fixture(scope="session")
def tail_params():
    return CptParams.standard(loss_ranking=LossRanking.TAIL)


@pytest.fixture(scope="session")
def identity_params():
    return CptParams.risk_neutral()


@pytest.fixture(scope="session")
def running_example():
    return load_fixture("running.json")


@pytest.fixture(scope="session")
def two_coupon():
    return load_fixture("two_coupon.json")


@pytest.fixture(scope="session")
def fig3():
    return load_fixture("fig3.json")


@pytest.fixture(scope="session")
def fig4():
    return load_fixture("fig4.json")


@pytest.fixture(scope="session")
def randomization_example():
    return load_fixture("randomization.json")
