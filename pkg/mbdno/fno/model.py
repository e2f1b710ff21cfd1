import logging
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..autodiff.archive import load_archive, save_archive
from ..autodiff.fft import irfft, rfft
from ..autodiff.ops import (
    ACTIVATIONS,
    activation,
    complex_mode_mul,
    pointwise_linear,
)
from ..autodiff.tensor import Tensor, as_tensor, parameter
from ..dataset.norm import NormStats
from ..errors import NumericalAbort, ValidationError
from ..integrate.trajectory import OUTPUT_CHANNELS
from ..utils.checks import check_choice, check_int
from .encoding import INPUT_LAYOUT

logger = logging.getLogger(__name__)

CHECKPOINT_KIND = "fno-checkpoint"


@dataclass(frozen=True)
class FnoConfig:
    width: int = 72
    depth: int = 3
    modes: int = 16
    in_channels: int = len(INPUT_LAYOUT)
    out_channels: int = len(OUTPUT_CHANNELS)
    projection_width: int = 128
    activation: str = "gelu"

    def __post_init__(self):
        check_int("width", self.width, 1)
        check_int("depth", self.depth, 1)
        check_int("modes", self.modes, 1)
        check_int("in_channels", self.in_channels, 1)
        check_int("out_channels", self.out_channels, 1)
        check_int("projection_width", self.projection_width, 1)
        check_choice("activation", self.activation, ACTIVATIONS)

    def check_samples(self, samples):
        """Raises unless `samples` time points carry `modes` Fourier modes."""
        if self.modes > samples // 2 + 1:
            raise ValidationError(
                "{} modes need at least {} samples, not {}".format(
                    self.modes, 2 * (self.modes - 1), samples
                )
            )


def parameter_count(config: FnoConfig) -> int:
    """Number of real parameters; a complex spectral weight counts twice."""
    w, p = config.width, config.projection_width
    lift = config.in_channels * w + w
    block = 2 * w * w * config.modes + w * w + w
    projection = w * p + p + p * config.out_channels + config.out_channels
    return lift + config.depth * block + projection


def parameter_shapes(config: FnoConfig):
    """(name, shape, dtype) of every parameter in initialization order."""
    w = config.width
    shapes = [
        ("lift.weight", (w, config.in_channels), np.float64),
        ("lift.bias", (w,), np.float64),
    ]
    for i in range(config.depth):
        shapes += [
            ("blocks.{}.spectral".format(i), (w, w, config.modes), np.complex128),
            ("blocks.{}.weight".format(i), (w, w), np.float64),
            ("blocks.{}.bias".format(i), (w,), np.float64),
        ]
    shapes += [
        ("proj1.weight", (config.projection_width, w), np.float64),
        ("proj1.bias", (config.projection_width,), np.float64),
        ("proj2.weight", (config.out_channels, config.projection_width), np.float64),
        ("proj2.bias", (config.out_channels,), np.float64),
    ]
    return shapes


def _check_finite(tensor: Tensor, where):
    bad = ~np.isfinite(tensor.data)
    if np.any(bad):
        raise NumericalAbort(
            "{} non-finite activations after {} (max finite |value| {:.3e})".format(
                int(bad.sum()),
                where,
                np.abs(tensor.data[~bad]).max() if np.any(~bad) else float("nan"),
            )
        )


class FnoModel:
    """
    Fourier neural operator for signals of shape (batch, channels, time).

    A pointwise lift to `width` channels is followed by `depth` Fourier blocks
    act(W v + b + irfft(R rfft(v))) and a two-layer pointwise projection. The
    last Fourier block is not activated.
    """

    def __init__(self, config: FnoConfig, parameters: dict):
        expected = parameter_shapes(config)
        missing = [name for name, _, _ in expected if name not in parameters]
        if missing:
            raise ValidationError("Missing model parameters: {}".format(missing))
        for name, shape, dtype in expected:
            data = parameters[name].data
            if data.shape != shape or data.dtype != dtype:
                raise ValidationError(
                    "Parameter '{}' has to be {} {}, not {} {}".format(
                        name, np.dtype(dtype), shape, data.dtype, data.shape
                    )
                )
        self.config = config
        self.params = {name: parameters[name] for name, _, _ in expected}

    def parameters(self):
        return list(self.params.values())

    def named_parameters(self):
        return list(self.params.items())

    def parameter_count(self) -> int:
        return sum(p.data.view(np.float64).size for p in self.parameters())

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def state_arrays(self) -> dict:
        return {name: p.data.copy() for name, p in self.params.items()}

    def load_arrays(self, arrays: dict):
        for name, p in self.params.items():
            if name not in arrays:
                raise ValidationError("Missing model parameter '{}'".format(name))
            p.data[...] = arrays[name]

    def _linear(self, x, name):
        return pointwise_linear(
            x, self.params[name + ".weight"], self.params[name + ".bias"]
        )

    def forward(self, inputs) -> Tensor:
        """(batch, in_channels, time) -> (batch, out_channels, time)"""
        config = self.config
        x = as_tensor(inputs)
        if x.ndim != 3 or x.shape[1] != config.in_channels:
            raise ValidationError(
                "Input has to have shape (batch, {}, time), not {}".format(
                    config.in_channels, x.shape
                )
            )
        samples = x.shape[2]
        config.check_samples(samples)
        h = self._linear(x, "lift")
        for i in range(config.depth):
            spectral = complex_mode_mul(
                rfft(h), self.params["blocks.{}.spectral".format(i)]
            )
            h = self._linear(h, "blocks.{}".format(i)) + irfft(spectral, samples)
            if i < config.depth - 1:
                h = activation(h, config.activation)
            _check_finite(h, "Fourier block {}".format(i))
        h = activation(self._linear(h, "proj1"), config.activation)
        out = self._linear(h, "proj2")
        _check_finite(out, "projection")
        return out

    __call__ = forward


def init_parameters(config: FnoConfig, seed=0) -> FnoModel:
    """
    Deterministic initialization.

    Pointwise weights are uniform with variance 2 / fan_in, biases uniform in
    +-1/sqrt(fan_in) and spectral weights (U + iU) / width^2 with U uniform on
    [0, 1).
    """
    rng = np.random.default_rng(seed)
    parameters = {}
    for name, shape, dtype in parameter_shapes(config):
        if name.endswith(".spectral"):
            scale = 1.0 / config.width**2
            data = scale * (rng.uniform(size=shape) + 1j * rng.uniform(size=shape))
        elif name.endswith(".weight"):
            bound = np.sqrt(6.0 / shape[1])
            data = rng.uniform(-bound, bound, size=shape)
        else:
            fan_in = _fan_in(config, name)
            bound = 1.0 / np.sqrt(fan_in)
            data = rng.uniform(-bound, bound, size=shape)
        parameters[name] = parameter(data.astype(dtype), name=name)
    return FnoModel(config, parameters)


def _fan_in(config, bias_name):
    if bias_name.startswith("lift."):
        return config.in_channels
    if bias_name.startswith("proj2."):
        return config.projection_width
    return config.width


@dataclass
class Checkpoint:
    model: FnoModel
    stats: Optional[NormStats]
    optimizer: dict
    metadata: dict


def save_checkpoint(
    path, model: FnoModel, stats: NormStats = None, optimizer=None, metadata=None
):
    """
    Writes parameters, normalization statistics, optimizer state arrays and
    metadata (config, channel layouts, anything in `metadata`) to an archive.
    """
    tensors = {"param." + name: p.data for name, p in model.named_parameters()}
    if stats is not None:
        tensors.update(stats.to_arrays())
    for name, array in (optimizer or {}).items():
        tensors["optim." + name] = array
    meta = dict(metadata or {})
    meta.update(
        {
            "kind": CHECKPOINT_KIND,
            "config": asdict(model.config),
            "input_layout": list(INPUT_LAYOUT),
            "output_layout": list(OUTPUT_CHANNELS),
        }
    )
    save_archive(path, tensors, meta)
    logger.debug("Checkpoint written to %s", path)


def load_checkpoint(path) -> Checkpoint:
    tensors, metadata = load_archive(path)
    if metadata.get("kind") != CHECKPOINT_KIND:
        raise ValidationError("'{}' is not a model checkpoint".format(path))
    if tuple(metadata["input_layout"]) != INPUT_LAYOUT:
        raise ValidationError(
            "Checkpoint '{}' uses an unknown input layout {}".format(
                path, metadata["input_layout"]
            )
        )
    config = FnoConfig(**metadata["config"])
    parameters = {
        name[len("param.") :]: parameter(array, name=name[len("param.") :])
        for name, array in tensors.items()
        if name.startswith("param.")
    }
    model = FnoModel(config, parameters)
    stats = None
    if any(name.startswith("stats.") for name in tensors):
        stats = NormStats.from_arrays(tensors)
    optimizer = {
        name[len("optim.") :]: array
        for name, array in tensors.items()
        if name.startswith("optim.")
    }
    return Checkpoint(model, stats, optimizer, metadata)
