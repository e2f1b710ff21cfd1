import logging
from dataclasses import dataclass

import numpy as np

from ..errors import NumericalAbort, ValidationError
from ..losses.objectives import ResidualBlocks, vehicle_residual
from ..utils.progress import ProgressLine

logger = logging.getLogger(__name__)


@dataclass
class WeightFactors:
    """Magnitude weight factor of every (pair, equation) and the sensitivity used."""

    values: np.ndarray
    r: float

    def take(self, index) -> np.ndarray:
        return self.values[index]


def _noise(rng, series, r):
    scale = np.sqrt(r * series.var(axis=0))
    return rng.normal(size=series.shape) * scale


def weight_factors_for_pair(x, v, a, residual_fn, r, rng, bypass=False):
    """
    Residual scale of one pair under perturbed solutions.

    x, v, a (time, channels) are perturbed independently with zero-mean
    Gaussian noise of variance r * Var(channel) (drawn in the order x, v, a);
    the factor of an equation is the largest absolute residual over time.

    Parameters
    ----------
    residual_fn: callable
        (x, v, a) -> residual array (time, equations).
    r: float
        Sensitivity, > 0.
    rng: numpy.random.Generator
    bypass: bool
        Skip the perturbation (the residual of the exact solution).
    """
    if not r > 0:
        raise ValidationError("Attribute 'r' has to be positive, not {}".format(r))
    if not bypass:
        x = x + _noise(rng, x, r)
        v = v + _noise(rng, v, r)
        a = a + _noise(rng, a, r)
    residual = np.asarray(residual_fn(x, v, a))
    if not np.all(np.isfinite(residual)):
        raise NumericalAbort("Non-finite residual while computing weight factors")
    return np.abs(residual).max(axis=0)


def vehicle_residual_fn(blocks: ResidualBlocks, irregularity):
    """Residual of the ten vehicle equations for time-major arrays of one pair."""
    irre = irregularity.T[None]

    def residual(x, v, a):
        value = vehicle_residual(x.T[None], v.T[None], a.T[None], irre, blocks)
        return value.data[0].T

    return residual


def compute_weight_factors(container, r=0.02, seed=0, bypass=False) -> WeightFactors:
    """
    Weight factors of the ten vehicle equations for every pair of a dataset.

    Pairs are processed in order with one generator seeded by `seed`, so the
    result is reproducible.
    """
    if not r > 0:
        raise ValidationError("Attribute 'r' has to be positive, not {}".format(r))
    rng = np.random.default_rng(seed)
    base = container.base_parameters()
    values = []
    progress = ProgressLine("Weight factors", container.count)
    for k in range(container.count):
        blocks = ResidualBlocks.from_params(base, container.params[k])
        residual_fn = vehicle_residual_fn(blocks, container.irregularity[k])
        values.append(
            weight_factors_for_pair(
                container.x[k],
                container.v[k],
                container.a[k],
                residual_fn,
                r,
                rng,
                bypass,
            )
        )
        progress.update(k + 1)
    progress.finish()
    values = np.array(values)
    if not bypass and np.any(values <= 0):
        raise NumericalAbort("Weight factors have to be positive")
    logger.info(
        "Weight factors for %d pairs, range %.3e .. %.3e",
        len(values),
        values.min(),
        values.max(),
    )
    return WeightFactors(values=values, r=float(r))
