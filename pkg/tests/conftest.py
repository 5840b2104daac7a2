import numpy as np
import pytest

from src.cochlea.filterbank import FilterbankSpec, design_filterbank, filterbank_apply
from src.sonar.broadcast import make_broadcast
from src.sonar.echo_model import AbsorptionModel, EchoModelConstants
from src.sonar.geometry import SonarGeometry
from src.sonar.scene import Target, simulate_scene
from src.utils.config import Settings


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def geom():
    return SonarGeometry()


@pytest.fixture(scope="session")
def consts():
    return EchoModelConstants()


@pytest.fixture(scope="session")
def consts_no_absorption():
    return EchoModelConstants(absorption_model=AbsorptionModel.NONE)


@pytest.fixture(scope="session")
def broadcast_3ms():
    return make_broadcast(3e-3)


@pytest.fixture(scope="session")
def filters():
    return design_filterbank(FilterbankSpec())


@pytest.fixture(scope="session")
def noiseless_echo(broadcast_3ms, geom, consts):
    return simulate_scene(broadcast_3ms, Target((0.0,)), geom, consts, snr_db=None)


@pytest.fixture(scope="session")
def noiseless_bank(noiseless_echo, filters):
    return filterbank_apply(noiseless_echo, FilterbankSpec(), filters)


@pytest.fixture
def serial_settings(tmp_path):
    return Settings(threads=1, log_level="INFO", data_dir=tmp_path)
