import pytest

from rtverify.config import default_weights_path, load_config
from rtverify.network import NetworkSpec


@pytest.fixture(scope="session")
def trained_net() -> NetworkSpec:
    return NetworkSpec.load(default_weights_path())


@pytest.fixture(scope="session")
def default_cfg() -> dict:
    return load_config()
