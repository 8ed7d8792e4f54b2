"""Shared fixtures: small configurations and an in-memory run store."""

import numpy as np
import pytest

from kinetic_fluid.database import make_session
from kinetic_fluid.schemas.config import SimConfig

BASE_VALUES = {
    "dim": 1,
    "x_cells": 16,
    "v_max": 4.0,
    "v_cells": 16,
    "mu": 0.1,
    "gamma": 1.4,
    "r0": 1.0,
    "t_end": 0.02,
    "max_dt": 0.005,
}

CONFIG_TEXT = """\
# small 1D periodic scenario
dim = 1
x_cells = 16
v_max = 4
v_cells = 16
mu = 0.1
gamma = 1.4
r0 = 1.0
t_end = 0.02
max_dt = 0.005
"""


def make_config(**overrides) -> SimConfig:
    values = dict(BASE_VALUES)
    values.update(overrides)
    return SimConfig.build(values)


@pytest.fixture
def config() -> SimConfig:
    return make_config()


@pytest.fixture
def config_factory():
    return make_config


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(CONFIG_TEXT, encoding="utf-8")
    return path


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def session():
    db = make_session("sqlite://")
    yield db
    db.close()
