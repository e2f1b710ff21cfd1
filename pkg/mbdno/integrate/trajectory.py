import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import NumericalAbort, ValidationError
from ..excitation.profile import ZeroExcitation
from ..mbd.codes import VEHICLE_DOFS, VEHICLE_LABELS, CodesSystem, static_equilibrium
from ..mbd.contact import reduce_rail_output, reduce_rail_rates
from .config import IntegratorConfig
from .schemes import get_scheme_by_name

logger = logging.getLogger(__name__)

OUTPUT_CHANNELS = VEHICLE_LABELS + ("Z_r1", "Z_r2", "Z_r3", "Z_r4")
WINDOW = (0.1, 0.9)


@dataclass
class Solution:
    """Full-state solution decimated to the output grid."""

    times: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    irregularity: np.ndarray
    residual_ratio: float


@dataclass
class TrajectoryRecord:
    """
    One data pair: the 14 learned channels, their derivatives, the parameter
    vector and the irregularity under the wheelsets, on the output grid.
    """

    times: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    irregularity: np.ndarray
    params: Optional[np.ndarray] = None
    residual_ratio: float = 0.0
    modal: Optional[Solution] = None

    @property
    def dt_out(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def duration(self) -> float:
        return float(self.times[-1])


def resolve_initial_state(system, excitation, mode):
    if mode == "given":
        return system.initial_displacement.copy(), system.initial_velocity.copy()
    zeros = np.zeros(system.n_dofs)
    if mode == "rest":
        return zeros, zeros.copy()
    if isinstance(system, CodesSystem):
        return static_equilibrium(system, excitation(0.0)), zeros
    return np.linalg.solve(system.stiffness, system.forcing(0.0, zeros)), zeros


def check_window(system: CodesSystem, duration):
    """Wheels have to stay within [0.1 l, 0.9 l] for the whole window."""
    length = system.modal.length
    first = system.wheel_positions(0.0).min()
    last = system.wheel_positions(duration).max()
    if first < WINDOW[0] * length - 1e-9 or last > WINDOW[1] * length + 1e-9:
        raise ValidationError(
            "Wheels travel over [{:.3f}, {:.3f}] m, outside [{:.3f}, {:.3f}] m of "
            "the rail".format(first, last, WINDOW[0] * length, WINDOW[1] * length)
        )


def solve(system, excitation=None, config: IntegratorConfig = None) -> Solution:
    """
    Integrates any system with the `CodesSystem` interface.

    Parameters
    ----------
    system: CodesSystem or LinearSystem
    excitation: callable
        t -> irregularity under the four wheelsets; smooth rail when None.
    config: IntegratorConfig
    """
    if config is None:
        config = IntegratorConfig()
    if excitation is None:
        excitation = ZeroExcitation()
    excitation.check_window(config.duration)

    x0, v0 = resolve_initial_state(system, excitation, config.initial_state)
    scheme = get_scheme_by_name(config.scheme, config)
    state = scheme.start(system, excitation, x0, v0)
    limit = config.divergence_factor * max(np.abs(x0).max(), config.divergence_floor)

    samples = config.samples
    n = system.n_dofs
    xs = np.empty((samples, n))
    vs = np.empty((samples, n))
    accs = np.empty((samples, n))
    irres = np.empty((samples, 4))
    times = np.arange(samples) * config.dt_out

    def record(index, state):
        xs[index] = state.x
        vs[index] = state.v
        accs[index] = state.a
        irres[index] = state.irre

    record(0, state)
    max_residual = 0.0
    max_scale = 0.0
    for i in range(1, config.steps + 1):
        state = scheme.step(state)
        norm = np.abs(state.x).max()
        if not np.isfinite(norm) or norm > limit:
            raise NumericalAbort(
                "Integration diverged at t = {:g} (|x| = {:.3e}, {} scheme)".format(
                    state.t, norm, config.scheme
                )
            )
        inertia = system.mass @ state.a
        elastic = system.stiffness @ state.x
        force = system.forcing(state.t, state.x, state.irre)
        residual = inertia + system.damping @ state.v + elastic - force
        max_residual = max(max_residual, np.abs(residual).max())
        max_scale = max(
            max_scale,
            np.abs(inertia).max(),
            np.abs(elastic).max(),
            np.abs(force).max(),
        )
        if i % config.stride == 0:
            record(i // config.stride, state)

    # An all-zero run has a zero residual
    ratio = max_residual / max_scale if max_scale > 0 else 0.0
    logger.debug(
        "Integrated %d steps with %s, residual ratio %.3e",
        config.steps,
        config.scheme,
        ratio,
    )
    return Solution(times, xs, vs, accs, irres, ratio)


def integrate(
    system: CodesSystem, excitation=None, config: IntegratorConfig = None, params=None
) -> TrajectoryRecord:
    """
    Integrates the vehicle-track system and reduces the rail to the four
    wheel-rail contact points.
    """
    if config is None:
        config = IntegratorConfig()
    check_window(system, config.duration)
    solution = solve(system, excitation, config)

    positions = system.wheel_positions(solution.times)
    q = solution.x[:, VEHICLE_DOFS:]
    q_dot = solution.v[:, VEHICLE_DOFS:]
    q_ddot = solution.a[:, VEHICLE_DOFS:]
    rail_x = reduce_rail_output(q, system.modal, positions)
    rail_v, rail_a = reduce_rail_rates(
        q, q_dot, q_ddot, system.modal, positions, system.speed
    )
    return TrajectoryRecord(
        times=solution.times,
        x=np.hstack([solution.x[:, :VEHICLE_DOFS], rail_x]),
        v=np.hstack([solution.v[:, :VEHICLE_DOFS], rail_v]),
        a=np.hstack([solution.a[:, :VEHICLE_DOFS], rail_a]),
        irregularity=solution.irregularity,
        params=None if params is None else np.asarray(params, dtype=float),
        residual_ratio=solution.residual_ratio,
        modal=solution if config.keep_modal else None,
    )
