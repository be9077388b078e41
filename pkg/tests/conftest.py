import pytest

from binpick.robot import load_robot_model
from binpick.scene import load_catalog, load_templates


@pytest.fixture(scope="session")
def model():
    return load_robot_model()


@pytest.fixture(scope="session")
def library():
    return load_templates()


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()
