import numpy as np
import pytest

from fdsic.budget import SystemParameters
from fdsic.signals import ComplexBasebandSignal, OfdmConfig


@pytest.fixture
def ofdm_cfg():
    return OfdmConfig()


@pytest.fixture
def table1():
    return SystemParameters()


def make_signal(samples, rate=64e6):
    return ComplexBasebandSignal(np.asarray(samples, dtype=complex), rate)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
