import logging
from dataclasses import dataclass, fields, replace

import numpy as np

from ..errors import ValidationError

logger = logging.getLogger(__name__)

GROUPS = ("param", "irre", "x", "v", "a")


def constant_channels(mean, std) -> np.ndarray:
    """Channels whose spread vanishes relative to their level."""
    mean, std = np.asarray(mean), np.asarray(std)
    return (std == 0) | (std <= 1e-10 * np.abs(mean))


@dataclass
class NormStats:
    """Per-channel mean and standard deviation of the training split."""

    param_mean: np.ndarray
    param_std: np.ndarray
    irre_mean: np.ndarray
    irre_std: np.ndarray
    x_mean: np.ndarray
    x_std: np.ndarray
    v_mean: np.ndarray
    v_std: np.ndarray
    a_mean: np.ndarray
    a_std: np.ndarray

    def group(self, name):
        if name not in GROUPS:
            raise ValidationError("Unknown statistics group '{}'".format(name))
        return getattr(self, name + "_mean"), getattr(self, name + "_std")

    def constant(self, name) -> np.ndarray:
        return constant_channels(*self.group(name))

    def to_arrays(self) -> dict:
        return {"stats." + f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_arrays(cls, arrays) -> "NormStats":
        try:
            return cls(
                **{f.name: np.asarray(arrays["stats." + f.name]) for f in fields(cls)}
            )
        except KeyError as e:
            raise ValidationError("Missing normalization statistics {}".format(e))


def _stats(values, axes):
    return values.mean(axis=axes), values.std(axis=axes)


def compute_norm_stats(container) -> NormStats:
    """Statistics of the training split only."""
    train = container.train()
    if train.count == 0:
        raise ValidationError("Training split is empty")
    param_mean, param_std = _stats(train.params, 0)
    irre_mean, irre_std = _stats(train.irregularity, (0, 1))
    x_mean, x_std = _stats(train.x, (0, 1))
    v_mean, v_std = _stats(train.v, (0, 1))
    a_mean, a_std = _stats(train.a, (0, 1))
    return NormStats(
        param_mean,
        param_std,
        irre_mean,
        irre_std,
        x_mean,
        x_std,
        v_mean,
        v_std,
        a_mean,
        a_std,
    )


def _shaped(values, array, axis):
    shape = [1] * np.ndim(array)
    shape[axis] = -1
    return np.reshape(values, shape)


def _safe(mean, std):
    flagged = constant_channels(mean, std)
    if np.any(flagged):
        logger.warning(
            "Constant channels %s are passed through without normalization",
            np.flatnonzero(flagged).tolist(),
        )
    return np.where(flagged, 0.0, mean), np.where(flagged, 1.0, std)


def normalize(values, mean, std, axis=-1):
    """z-score along the channel `axis`; constant channels pass through."""
    mean, std = _safe(np.asarray(mean), np.asarray(std))
    return (values - _shaped(mean, values, axis)) / _shaped(std, values, axis)


def denormalize(values, mean, std, axis=-1):
    mean, std = _safe(np.asarray(mean), np.asarray(std))
    return values * _shaped(std, values, axis) + _shaped(mean, values, axis)


def normalize_record(record, stats: NormStats):
    """Returns a copy of a TrajectoryRecord with every group z-scored."""
    return replace(
        record,
        x=normalize(record.x, stats.x_mean, stats.x_std),
        v=normalize(record.v, stats.v_mean, stats.v_std),
        a=normalize(record.a, stats.a_mean, stats.a_std),
        irregularity=normalize(record.irregularity, stats.irre_mean, stats.irre_std),
        params=None
        if record.params is None
        else normalize(record.params, stats.param_mean, stats.param_std),
    )


def denormalize_record(record, stats: NormStats):
    return replace(
        record,
        x=denormalize(record.x, stats.x_mean, stats.x_std),
        v=denormalize(record.v, stats.v_mean, stats.v_std),
        a=denormalize(record.a, stats.a_mean, stats.a_std),
        irregularity=denormalize(
            record.irregularity, stats.irre_mean, stats.irre_std
        ),
        params=None
        if record.params is None
        else denormalize(record.params, stats.param_mean, stats.param_std),
    )
