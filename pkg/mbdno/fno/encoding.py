"""
Channel layout of the operator input.

Four irregularity series, the 13 varied parameters broadcast along time and
a linear time coordinate in [0, 1].
"""

import numpy as np

from ..autodiff.tensor import Tensor
from ..dataset.norm import NormStats, denormalize, normalize
from ..errors import ValidationError
from ..mbd.params import VARIED_PARAMETERS

IRREGULARITY_CHANNELS = ("irre_1", "irre_2", "irre_3", "irre_4")
INPUT_LAYOUT = IRREGULARITY_CHANNELS + VARIED_PARAMETERS + ("time",)

_IRRE = slice(0, 4)
_PARAMS = slice(4, 4 + len(VARIED_PARAMETERS))


def time_channel(samples) -> np.ndarray:
    return np.linspace(0.0, 1.0, samples)


def encode_input(irregularity, params, stats: NormStats = None) -> np.ndarray:
    """
    Operator input of a batch of pairs.

    Parameters
    ----------
    irregularity: np.ndarray
        (batch, time, 4) or (time, 4) in meters.
    params: np.ndarray
        (batch, 13) or (13,) physical parameter vectors.
    stats: NormStats
        When given, both groups are z-scored; otherwise they are used as they are.

    Returns
    -------
    np.ndarray of shape (batch, 18, time)
    """
    irregularity = np.asarray(irregularity, dtype=float)
    params = np.asarray(params, dtype=float)
    if irregularity.ndim == 2:
        irregularity = irregularity[None]
    if params.ndim == 1:
        params = params[None]
    if irregularity.shape[2] != 4 or params.shape[1] != len(VARIED_PARAMETERS):
        raise ValidationError(
            "Cannot encode irregularity {} with parameters {}".format(
                irregularity.shape, params.shape
            )
        )
    if irregularity.shape[0] != params.shape[0]:
        raise ValidationError(
            "Batch sizes differ: {} irregularity series, {} parameter vectors".format(
                irregularity.shape[0], params.shape[0]
            )
        )
    if stats is not None:
        irregularity = normalize(irregularity, stats.irre_mean, stats.irre_std)
        params = normalize(params, stats.param_mean, stats.param_std)
    batch, samples, _ = irregularity.shape
    out = np.empty((batch, len(INPUT_LAYOUT), samples))
    out[:, _IRRE] = irregularity.transpose(0, 2, 1)
    out[:, _PARAMS] = params[:, :, None]
    out[:, -1] = time_channel(samples)
    return out


def decode_input(inputs, stats: NormStats = None):
    """
    Inverse of `encode_input`.

    Returns (params (batch, 13), irregularity (batch, time, 4)).
    """
    inputs = np.asarray(inputs.data if isinstance(inputs, Tensor) else inputs)
    if inputs.ndim != 3 or inputs.shape[1] != len(INPUT_LAYOUT):
        raise ValidationError(
            "Input has to have shape (batch, {}, time), not {}".format(
                len(INPUT_LAYOUT), inputs.shape
            )
        )
    params = inputs[:, _PARAMS, 0]
    irregularity = inputs[:, _IRRE].transpose(0, 2, 1)
    if stats is not None:
        params = denormalize(params, stats.param_mean, stats.param_std)
        irregularity = denormalize(irregularity, stats.irre_mean, stats.irre_std)
    return params, irregularity
