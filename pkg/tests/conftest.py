import contextlib
import os
import sys

import numpy as np
import pytest
import yaml

PYTEST_DIR = os.path.dirname(__file__)
ROOT_DIR = os.path.dirname(PYTEST_DIR)

sys.path.insert(0, ROOT_DIR)

from mbdno.dataset.generate import generate_dataset  # noqa
from mbdno.dataset.norm import compute_norm_stats  # noqa
from mbdno.dataset.sampler import ParamSampler  # noqa
from mbdno.excitation.psd import load_psd  # noqa
from mbdno.integrate.config import IntegratorConfig  # noqa
from mbdno.mbd.params import (  # noqa
    VehicleTrackParams,
    load_parameters,
    uniform_fasteners,
)

# Short rail: the wheels start at 4 m and the front wheelset at 24 m, so every
# window below keeps them inside [4, 36] m.
SMALL_LENGTH = 40.0
SMALL_MODES = 8
SMALL_SPEED = 20.0


@contextlib.contextmanager
def change_workdir(workdir):
    cwd = os.getcwd()
    try:
        os.chdir(workdir)
        yield
    finally:
        os.chdir(cwd)


def small_parameters(length=SMALL_LENGTH, modes=SMALL_MODES, speed=SMALL_SPEED):
    data = load_parameters().to_dict()
    data["rail"].update(
        length=length,
        modes=modes,
        speed=speed,
        fastener_positions=list(uniform_fasteners(length, 0.625)),
    )
    return VehicleTrackParams.from_dict(data)


def small_integrator(**kwargs):
    values = dict(dt=1e-4, duration=0.04, stride=2)
    values.update(kwargs)
    return IntegratorConfig(**values)


def write_small_parameters(path):
    with open(path, "w") as f:
        yaml.safe_dump(small_parameters().to_dict(), f)
    return path


def small_config(path, **sections):
    """Pipeline configuration for a tiny end-to-end run."""
    config = {
        "parameters": {"file": write_small_parameters("small_params.yaml")},
        "integrator": {"duration": 0.02, "stride": 2},
        "dataset": {"n_train": 3, "n_val": 1},
        "model": {"width": 4, "depth": 2, "modes": 4, "projection_width": 8},
        "train": {"epochs": 1, "batch_size": 2},
        "bench": {"batch_sizes": [1, 2], "repeats": 1},
    }
    for name, values in sections.items():
        config.setdefault(name, {}).update(values)
    with open(path, "w") as f:
        yaml.safe_dump(config, f)
    return path


@pytest.fixture(autouse=True, scope="function")
def test_env(tmp_path):
    with change_workdir(tmp_path):
        yield tmp_path


@pytest.fixture(scope="session")
def params():
    return small_parameters()


@pytest.fixture(scope="session")
def psd():
    return load_psd()


@pytest.fixture(scope="session")
def dataset(psd):
    base = small_parameters()
    sampler = ParamSampler(base.varied_vector(), 0.8, 1.2)
    return generate_dataset(
        sampler, psd, small_integrator(), 6, seed=7, base_params=base, n_train=4
    )


@pytest.fixture(scope="session")
def stats(dataset):
    return compute_norm_stats(dataset)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
