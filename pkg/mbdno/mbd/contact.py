from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .beam import BeamModal

WHEELSETS = 4


@dataclass(frozen=True)
class ContactState:
    """Wheel-rail compression (m) and Hertz force (N) of the four wheelsets."""

    compression: np.ndarray
    force: np.ndarray


def hertz_force(compression, contact_constant, exponent=1.5):
    """p = (delta / G)^exponent for delta > 0, zero when wheel and rail separate."""
    delta = np.maximum(np.asarray(compression, dtype=float), 0.0)
    return (delta / contact_constant) ** exponent


def hertz_stiffness(compression, contact_constant, exponent=1.5):
    """dp/d(delta); zero on the separated branch."""
    delta = np.asarray(compression, dtype=float)
    engaged = delta > 0
    safe = np.where(engaged, delta, contact_constant)
    return np.where(
        engaged,
        exponent / contact_constant * (safe / contact_constant) ** (exponent - 1),
        0.0,
    )


def contact_force(
    x, irre, modal: BeamModal, wheel_positions, exponent=1.5
) -> ContactState:
    """
    Evaluates the wheel-rail contact of a system state.

    Parameters
    ----------
    x: np.ndarray
        Displacements in DOF order (..., 10 + NM).
    irre: np.ndarray
        Rail irregularity under each wheelset (..., 4).
    modal: BeamModal
        Rail modes; the contact constant G is taken from their beam parameters.
    wheel_positions: np.ndarray
        Wheel positions along the rail (..., 4).
    exponent: float
        Exponent of the Hertz law.
    """
    x = np.asarray(x, dtype=float)
    shapes = modal.shapes(wheel_positions)
    rail = np.einsum("...jk,...k->...j", shapes, x[..., 10:])
    compression = x[..., 6:10] - rail - np.asarray(irre, dtype=float)
    force = hertz_force(compression, modal.params.contact_constant, exponent)
    return ContactState(compression=compression, force=force)


def _check_on_rail(modal: BeamModal, wheel_positions):
    wheel_positions = np.asarray(wheel_positions, dtype=float)
    if wheel_positions.shape[-1] != WHEELSETS:
        raise ValidationError(
            "Wheel positions have to have {} columns, not {}".format(
                WHEELSETS, wheel_positions.shape[-1]
            )
        )
    if wheel_positions.min() < 0 or wheel_positions.max() > modal.length:
        raise ValidationError(
            "Wheel positions leave the rail span [0, {}] (range {} .. {})".format(
                modal.length, wheel_positions.min(), wheel_positions.max()
            )
        )
    return wheel_positions


def reduce_rail_output(q_series, modal: BeamModal, wheel_positions) -> np.ndarray:
    """
    Rail displacement under each wheelset, Z_r(x_wj(t), t) = sum_k Z_k(x_wj) q_k(t).

    `q_series` has shape (steps, NM) and `wheel_positions` (steps, 4); the result
    has shape (steps, 4).
    """
    q_series = np.asarray(q_series, dtype=float)
    if q_series.ndim != 2 or q_series.shape[1] != modal.count:
        raise ValidationError(
            "Modal series has to have shape (steps, {}), not {}".format(
                modal.count, q_series.shape
            )
        )
    wheel_positions = _check_on_rail(modal, wheel_positions)
    return np.einsum("sjk,sk->sj", modal.shapes(wheel_positions), q_series)


def reduce_rail_rates(q, q_dot, q_ddot, modal: BeamModal, wheel_positions, speed):
    """
    Total time derivatives of the rail displacement seen by the moving wheels.

    Returns (velocity, acceleration), each of shape (steps, 4).
    """
    wheel_positions = _check_on_rail(modal, wheel_positions)
    z = modal.shapes(wheel_positions)
    dz = modal.slopes(wheel_positions)
    ddz = modal.curvatures(wheel_positions)
    velocity = np.einsum("sjk,sk->sj", z, q_dot) + speed * np.einsum(
        "sjk,sk->sj", dz, q
    )
    acceleration = (
        np.einsum("sjk,sk->sj", z, q_ddot)
        + 2 * speed * np.einsum("sjk,sk->sj", dz, q_dot)
        + speed**2 * np.einsum("sjk,sk->sj", ddz, q)
    )
    return velocity, acceleration
