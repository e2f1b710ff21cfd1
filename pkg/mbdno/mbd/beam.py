import numpy as np

from ..errors import ValidationError
from .params import BeamParams


class BeamModal:
    """
    Closed-form modes of a simply supported Euler beam.

    Mode shapes are mass normalised,
    Z_k(x) = sqrt(2 / (m_r l)) sin(k pi x / l), so that the modal mass of every
    mode is one and the rail-mode equations read
    q_k'' + omega_k^2 q_k = (generalised forces).
    """

    def __init__(self, params: BeamParams):
        self.params = params
        self.length = params.length
        self.count = params.modes
        self.wavenumbers = np.arange(1, self.count + 1) * np.pi / self.length
        self.amplitude = np.sqrt(2.0 / (params.mass_per_length * self.length))
        self.frequencies = self.wavenumbers**2 * np.sqrt(
            params.bending_stiffness / params.mass_per_length
        )
        # Integral of Z_k^2 over the span
        self.b = 1.0 / params.mass_per_length

    @property
    def stiffnesses(self) -> np.ndarray:
        """Modal stiffnesses omega_k^2 = (E I_y / m_r) (k pi / l)^4."""
        return self.frequencies**2

    def shapes(self, x) -> np.ndarray:
        """Z_k(x); returns an array of shape x.shape + (NM,)."""
        x = np.asarray(x, dtype=float)[..., None]
        return self.amplitude * np.sin(self.wavenumbers * x)

    def slopes(self, x) -> np.ndarray:
        """dZ_k/dx at x."""
        x = np.asarray(x, dtype=float)[..., None]
        return self.amplitude * self.wavenumbers * np.cos(self.wavenumbers * x)

    def curvatures(self, x) -> np.ndarray:
        """d^2 Z_k/dx^2 at x."""
        x = np.asarray(x, dtype=float)[..., None]
        return -self.amplitude * self.wavenumbers**2 * np.sin(self.wavenumbers * x)

    def displacement(self, x, q) -> np.ndarray:
        """Rail deflection sum_k Z_k(x) q_k."""
        return self.shapes(x) @ np.asarray(q)


def beam_modal(params: BeamParams) -> BeamModal:
    if not isinstance(params, BeamParams):
        raise ValidationError("beam_modal expects BeamParams, not {}".format(params))
    return BeamModal(params)
