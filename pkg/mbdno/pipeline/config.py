"""
Declarative pipeline configuration.

A configuration is a nested dict with the sections of `default_config.yaml`.
User files only need to contain the keys they change; `--set section.key=value`
overrides are applied last.
"""

import copy
import logging
import os

from ..dataset.sampler import ParamSampler
from ..errors import ValidationError
from ..excitation.psd import load_psd
from ..fno.model import FnoConfig
from ..integrate.config import IntegratorConfig
from ..losses.objectives import LossConfig
from ..mbd.params import DATA_DIR, load_parameters
from ..utils.yamlio import load_yaml
from .train import TrainConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = os.path.join(DATA_DIR, "default_config.yaml")


def _read_yaml(path):
    with open(path) as f:
        data = load_yaml(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValidationError("Configuration '{}' has to be a mapping".format(path))
    return data


def merge_config(base: dict, update: dict, path="") -> dict:
    """Recursively merges `update` into a copy of `base`; unknown keys are rejected."""
    result = copy.deepcopy(base)
    for key, value in update.items():
        name = path + key
        if key not in result:
            raise ValidationError("Unknown configuration key '{}'".format(name))
        if isinstance(result[key], dict):
            if not isinstance(value, dict):
                raise ValidationError(
                    "Configuration key '{}' has to be a section".format(name)
                )
            result[key] = merge_config(result[key], value, name + ".")
        else:
            result[key] = value
    return result


def parse_scalar(text):
    """YAML scalar rules, plus exponent floats without a dot (1e-3)."""
    return load_yaml(text)


def parse_override(text):
    """'section.key=value' -> ({section: {key: value}})"""
    if "=" not in text:
        raise ValidationError(
            "Override '{}' has to have the form section.key=value".format(text)
        )
    name, value = text.split("=", 1)
    parts = name.strip().split(".")
    if len(parts) < 2 or not all(parts):
        raise ValidationError(
            "Override '{}' has to have the form section.key=value".format(text)
        )
    update = parse_scalar(value)
    for part in reversed(parts):
        update = {part: update}
    return update


def load_config(path=None, overrides=()) -> dict:
    config = _read_yaml(DEFAULT_CONFIG_FILE)
    if path is not None:
        logger.debug("Reading configuration %s", path)
        config = merge_config(config, _read_yaml(path))
    for text in overrides:
        config = merge_config(config, parse_override(text))
    return config


def _build(cls, section, values):
    try:
        return cls(**values)
    except TypeError as e:
        raise ValidationError("Invalid section '{}': {}".format(section, e))


def base_parameters(config):
    params = load_parameters(config["parameters"]["file"])
    if config["parameters"]["modes"] is not None:
        params = params.with_modes(config["parameters"]["modes"])
    return params


def psd_model(config):
    excitation = config["excitation"]
    band = excitation["band"]
    return load_psd(excitation["psd_file"], band=None if band is None else tuple(band))


def param_sampler(config, params) -> ParamSampler:
    dataset = config["dataset"]
    return ParamSampler(params.varied_vector(), dataset["low"], dataset["high"])


def integrator_config(config) -> IntegratorConfig:
    return _build(IntegratorConfig, "integrator", config["integrator"])


def fno_config(config) -> FnoConfig:
    """Model settings, checked against the samples of the generated records."""
    model = _build(FnoConfig, "model", config["model"])
    model.check_samples(integrator_config(config).samples)
    return model


def loss_config(config) -> LossConfig:
    return _build(
        LossConfig,
        "loss",
        dict(config["loss"], r=config["weights"]["r"]),
    )


def train_config(config) -> TrainConfig:
    return _build(TrainConfig, "train", config["train"])
