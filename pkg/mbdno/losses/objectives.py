import logging
from dataclasses import dataclass

import numpy as np

from ..autodiff.ops import channel_mix, relu, trapezoid
from ..autodiff.tensor import Tensor, as_tensor
from ..errors import ValidationError
from ..mbd.codes import VEHICLE_DOFS, vehicle_block
from ..utils.checks import check_choice, check_nonnegative, check_positive
from .derivative import TRIM, numerical_derivative, trim_series

logger = logging.getLogger(__name__)

LOSS_MODES = ("data_only", "plain_ode", "weighted_ode", "direct_deriv")


@dataclass(frozen=True)
class LossConfig:
    mode: str = "data_only"
    eta: float = 1.0
    r: float = 0.02
    stencil: str = "central2"
    boundary: str = "trim"

    def __post_init__(self):
        check_choice("mode", self.mode, LOSS_MODES)
        check_nonnegative("eta", self.eta)
        check_positive("r", self.r)
        check_choice("stencil", self.stencil, ("central2",))
        check_choice("boundary", self.boundary, ("trim",))


def _check_same_shape(pred, truth):
    if tuple(pred.shape) != tuple(truth.shape):
        raise ValidationError(
            "Prediction shape {} differs from truth {}".format(pred.shape, truth.shape)
        )


def data_loss(pred, truth, dt=1.0) -> Tensor:
    """
    Time integral (trapezoidal) of the squared error, averaged over batch and
    channels. pred and truth have shape (batch, channels, time).
    """
    pred, truth = as_tensor(pred), as_tensor(truth)
    _check_same_shape(pred, truth)
    diff = pred - truth
    return trapezoid(diff * diff, dt).mean()


@dataclass
class ResidualBlocks:
    """
    Vehicle equations of a batch of pairs: M, C, K (batch, 10, 10), gravity
    force (batch, 10), contact constants G (batch,) and the Hertz exponent.
    """

    mass: np.ndarray
    damping: np.ndarray
    stiffness: np.ndarray
    gravity: np.ndarray
    contact_constant: np.ndarray
    exponent: float = 1.5

    @classmethod
    def from_params(cls, base, param_vectors) -> "ResidualBlocks":
        blocks = []
        for vector in np.atleast_2d(param_vectors):
            params = base.with_varied(vector)
            blocks.append((vehicle_block(params), params.beam.contact_constant))
        return cls(
            mass=np.stack([b[0][0] for b in blocks]),
            damping=np.stack([b[0][1] for b in blocks]),
            stiffness=np.stack([b[0][2] for b in blocks]),
            gravity=np.stack([b[0][3] for b in blocks]),
            contact_constant=np.array([b[1] for b in blocks]),
            exponent=base.contact_exponent,
        )

    def take(self, index) -> "ResidualBlocks":
        return ResidualBlocks(
            self.mass[index],
            self.damping[index],
            self.stiffness[index],
            self.gravity[index],
            self.contact_constant[index],
            self.exponent,
        )


# Wheel rows receive -2 p_j
_CONTACT_MAP = np.zeros((VEHICLE_DOFS, 4))
_CONTACT_MAP[6:10, :] = -2.0 * np.eye(4)


def vehicle_residual(x, v, a, irre, blocks: ResidualBlocks) -> Tensor:
    """
    Residual M a + C v + K x - F of the ten vehicle equations in the learned
    output space.

    x, v, a: (batch, 14, time) in physical units; irre: (batch, 4, time).
    The wheel-rail forces are recomputed from the wheel and rail channels.
    """
    x, v, a = as_tensor(x), as_tensor(v), as_tensor(a)
    irre = np.asarray(irre.data if isinstance(irre, Tensor) else irre, dtype=float)
    compression = x[:, 6:10] - x[:, 10:14] - irre
    scaled = relu(compression) / blocks.contact_constant[:, None, None]
    force = scaled**blocks.exponent
    return (
        channel_mix(a[:, :VEHICLE_DOFS], blocks.mass)
        + channel_mix(v[:, :VEHICLE_DOFS], blocks.damping)
        + channel_mix(x[:, :VEHICLE_DOFS], blocks.stiffness)
        - blocks.gravity[:, :, None]
        - channel_mix(force, _CONTACT_MAP)
    )


def ode_residual_loss(pred, dt, residual_fn, weights=None, eta=1.0) -> Tensor:
    """
    Mean squared ODE residual of predicted solutions.

    Parameters
    ----------
    pred: Tensor
        Predicted solutions (batch, channels, time) in physical units.
    dt: float
        Sample spacing.
    residual_fn: callable
        (x, v, a) -> residual tensor (batch, equations, time'); x, v, a are the
        trimmed prediction and its numerical derivatives.
    weights: np.ndarray
        Magnitude weight factors (batch, equations). When given, every
        equation's squared residual is divided by its factor squared and the
        result is scaled by eta.
    eta: float
        Weight of the weighted loss.
    """
    pred = as_tensor(pred)
    v = numerical_derivative(pred, dt, 1)
    a = numerical_derivative(pred, dt, 2)
    residual = residual_fn(trim_series(pred, TRIM), v, a)
    squared = residual * residual
    if weights is None:
        return squared.mean()
    weights = np.asarray(weights, dtype=float)
    if weights.shape != residual.shape[:2]:
        raise ValidationError(
            "Weight factors {} do not match residual {}".format(
                weights.shape, residual.shape[:2]
            )
        )
    if np.any(weights <= 0):
        raise ValidationError("Weight factors have to be positive")
    return (squared / (weights**2)[:, :, None]).mean() * eta


def direct_derivative_loss(
    pred, v_true, a_true, dt, v_scale=None, a_scale=None
) -> Tensor:
    """
    Data loss of the numerical first and second derivatives of `pred`
    against stored derivatives; `v_scale`/`a_scale` are per-channel divisors.
    """
    pred = as_tensor(pred)
    v_true = np.asarray(v_true.data if isinstance(v_true, Tensor) else v_true)
    a_true = np.asarray(a_true.data if isinstance(a_true, Tensor) else a_true)
    _check_same_shape(pred, v_true)
    _check_same_shape(pred, a_true)
    v_pred = numerical_derivative(pred, dt, 1)
    a_pred = numerical_derivative(pred, dt, 2)
    v_ref = trim_series(v_true, TRIM)
    a_ref = trim_series(a_true, TRIM)
    if v_scale is not None:
        v_scale = np.asarray(v_scale, dtype=float)[None, :, None]
        v_pred, v_ref = v_pred / v_scale, v_ref / v_scale
    if a_scale is not None:
        a_scale = np.asarray(a_scale, dtype=float)[None, :, None]
        a_pred, a_ref = a_pred / a_scale, a_ref / a_scale
    return data_loss(v_pred, v_ref, dt) + data_loss(a_pred, a_ref, dt)


_REQUIRED = {
    "data_only": ("data",),
    "plain_ode": ("data", "ode"),
    "weighted_ode": ("data", "ode"),
    "direct_deriv": ("data", "deriv"),
}


def total_loss(config: LossConfig, components: dict) -> Tensor:
    """
    Combines loss components by mode: data only; data + eta * plain ODE loss;
    data + weighted ODE loss (eta already applied); data + derivative loss.
    """
    missing = [c for c in _REQUIRED[config.mode] if components.get(c) is None]
    if missing:
        raise ValidationError(
            "Loss mode '{}' needs components {}".format(config.mode, missing)
        )
    data = as_tensor(components["data"])
    if config.mode == "data_only":
        return data
    if config.mode == "plain_ode":
        return data + as_tensor(components["ode"]) * config.eta
    if config.mode == "weighted_ode":
        return data + as_tensor(components["ode"])
    return data + as_tensor(components["deriv"])
