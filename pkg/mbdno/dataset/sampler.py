from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..mbd.params import VARIED_PARAMETERS


@dataclass(frozen=True)
class ParamSampler:
    """
    Draws parameter vectors i.i.d. uniform in [low * nominal, high * nominal].

    `low` and `high` are scalars or one multiplier per varied parameter.
    """

    nominal: np.ndarray
    low: object = 0.8
    high: object = 1.2

    def __post_init__(self):
        nominal = np.asarray(self.nominal, dtype=float)
        if nominal.shape != (len(VARIED_PARAMETERS),):
            raise ValidationError(
                "Nominal vector has to have {} entries, not {}".format(
                    len(VARIED_PARAMETERS), nominal.shape
                )
            )
        low = np.broadcast_to(np.asarray(self.low, dtype=float), nominal.shape)
        high = np.broadcast_to(np.asarray(self.high, dtype=float), nominal.shape)
        if np.any(low <= 0) or np.any(high < low):
            raise ValidationError(
                "Range multipliers need 0 < low <= high, got {} .. {}".format(
                    self.low, self.high
                )
            )
        object.__setattr__(self, "nominal", nominal)
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @property
    def lower(self) -> np.ndarray:
        return self.nominal * self.low

    @property
    def upper(self) -> np.ndarray:
        return self.nominal * self.high

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.nominal * rng.uniform(self.low, self.high)
