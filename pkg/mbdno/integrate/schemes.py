import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ..errors import NumericalAbort, ValidationError
from .config import IntegratorConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class State:
    """Displacement, velocity and acceleration at time t."""

    t: float
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    a_prev: Optional[np.ndarray] = None
    irre: Optional[np.ndarray] = None


def initial_state(system, excitation, x0, v0) -> State:
    irre = excitation(0.0)
    a0 = system.acceleration(0.0, x0, v0, irre)
    return State(0.0, x0, v0, a0, None, irre)


def step_zhai(system, excitation, state: State, dt, psi=0.5, phi=0.5) -> State:
    """
    One step of the explicit two-step Zhai scheme.

    Needs the acceleration of the previous step in `state.a_prev`.
    """
    if state.a_prev is None:
        raise NumericalAbort("Zhai step needs the previous acceleration")
    x, v, a, a_prev = state.x, state.v, state.a, state.a_prev
    x1 = x + v * dt + (0.5 + psi) * a * dt**2 - psi * a_prev * dt**2
    v1 = v + (1 + phi) * a * dt - phi * a_prev * dt
    t1 = state.t + dt
    irre = excitation(t1)
    a1 = system.acceleration(t1, x1, v1, irre)
    return State(t1, x1, v1, a1, a, irre)


class NewmarkSolver:
    """
    Average-acceleration Newmark steps with fixed-point iteration on the
    displacement-dependent force.

    The effective stiffness K + a0 M + a1 C is LU-factorised once per step size.
    """

    def __init__(
        self, system, beta=0.25, gamma=0.5, tolerance=1e-10, max_iterations=20
    ):
        self.system = system
        self.beta = beta
        self.gamma = gamma
        self.tolerance = tolerance
        self.max_iterations = max_iterations
        self.factors = {}

    def _factor(self, dt):
        factor = self.factors.get(dt)
        if factor is None:
            s = self.system
            a0 = 1.0 / (self.beta * dt**2)
            a1 = self.gamma / (self.beta * dt)
            factor = lu_factor(s.stiffness + a0 * s.mass + a1 * s.damping)
            self.factors[dt] = factor
        return factor

    def try_step(self, excitation, state: State, dt) -> Optional[State]:
        """Returns None when the fixed point does not converge."""
        s = self.system
        beta, gamma = self.beta, self.gamma
        a0 = 1.0 / (beta * dt**2)
        a1 = gamma / (beta * dt)
        a2 = 1.0 / (beta * dt)
        a3 = 1.0 / (2 * beta) - 1
        a4 = gamma / beta - 1
        a5 = dt / 2 * (gamma / beta - 2)
        x, v, a = state.x, state.v, state.a
        base = s.mass @ (a0 * x + a2 * v + a3 * a) + s.damping @ (
            a1 * x + a4 * v + a5 * a
        )
        factor = self._factor(dt)
        t1 = state.t + dt
        irre = excitation(t1)

        x1 = x + v * dt + 0.5 * a * dt**2
        for _ in range(self.max_iterations):
            x_next = lu_solve(factor, s.forcing(t1, x1, irre) + base)
            change = np.abs(x_next - x1).max()
            x1 = x_next
            if change <= self.tolerance * max(np.abs(x1).max(), 1e-30):
                break
        else:
            return None
        acc = a0 * (x1 - x) - a2 * v - a3 * a
        vel = v + dt * ((1 - gamma) * a + gamma * acc)
        return State(t1, x1, vel, acc, a, irre)

    def step(self, excitation, state: State, dt) -> State:
        result = self.try_step(excitation, state, dt)
        if result is not None:
            return result
        logger.debug("Newmark fixed point failed at t = %g, halving the step", state.t)
        half = self.try_step(excitation, state, dt / 2)
        if half is not None:
            result = self.try_step(excitation, half, dt / 2)
        if result is None:
            raise NumericalAbort(
                "Contact fixed point did not converge at t = {:g} "
                "(also with halved step)".format(state.t)
            )
        return State(result.t, result.x, result.v, result.a, state.a, result.irre)


def step_newmark(
    system, excitation, state: State, dt, beta=0.25, gamma=0.5, solver=None
) -> State:
    """One Newmark step; pass a `NewmarkSolver` to reuse its factorisation."""
    if solver is None:
        solver = NewmarkSolver(system, beta, gamma)
    return solver.step(excitation, state, dt)


def step_rk4(system, excitation, state: State, dt) -> State:
    """Classical Runge-Kutta step on the first-order form (x, v)."""
    t, x, v = state.t, state.x, state.v

    def rate(ti, xi, vi):
        return vi, system.acceleration(ti, xi, vi, excitation(ti))

    k1x, k1v = v, state.a
    k2x, k2v = rate(t + dt / 2, x + dt / 2 * k1x, v + dt / 2 * k1v)
    k3x, k3v = rate(t + dt / 2, x + dt / 2 * k2x, v + dt / 2 * k2v)
    k4x, k4v = rate(t + dt, x + dt * k3x, v + dt * k3v)
    x1 = x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
    v1 = v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    t1 = t + dt
    irre = excitation(t1)
    return State(t1, x1, v1, system.acceleration(t1, x1, v1, irre), state.a, irre)


class Scheme:
    """Base class of the time integration schemes."""

    name = None

    def __init__(self, config: IntegratorConfig):
        self.config = config
        self.system = None
        self.excitation = None

    def start(self, system, excitation, x0, v0) -> State:
        self.system = system
        self.excitation = excitation
        return initial_state(system, excitation, x0, v0)

    def step(self, state: State) -> State:
        raise NotImplementedError


class ZhaiScheme(Scheme):
    name = "zhai"

    def start(self, system, excitation, x0, v0) -> State:
        state = super().start(system, excitation, x0, v0)
        self.bootstrap = NewmarkSolver(
            system,
            self.config.beta,
            self.config.gamma,
            self.config.tolerance,
            self.config.max_iterations,
        )
        return state

    def step(self, state: State) -> State:
        if state.a_prev is None:
            logger.debug("Bootstrapping the Zhai scheme with a Newmark step")
            return self.bootstrap.step(self.excitation, state, self.config.dt)
        return step_zhai(
            self.system,
            self.excitation,
            state,
            self.config.dt,
            self.config.psi,
            self.config.phi,
        )


class NewmarkScheme(Scheme):
    name = "newmark"

    def start(self, system, excitation, x0, v0) -> State:
        state = super().start(system, excitation, x0, v0)
        self.solver = NewmarkSolver(
            system,
            self.config.beta,
            self.config.gamma,
            self.config.tolerance,
            self.config.max_iterations,
        )
        return state

    def step(self, state: State) -> State:
        return self.solver.step(self.excitation, state, self.config.dt)


class Rk4Scheme(Scheme):
    name = "rk4"

    def step(self, state: State) -> State:
        return step_rk4(self.system, self.excitation, state, self.config.dt)


def get_scheme_by_name(name, config: IntegratorConfig = None) -> Scheme:
    if config is None:
        config = IntegratorConfig(scheme=name)
    if name == "zhai":
        return ZhaiScheme(config)
    if name == "newmark":
        return NewmarkScheme(config)
    if name == "rk4":
        return Rk4Scheme(config)
    raise ValidationError("Unknown integration scheme: {}".format(name))
