import logging

import numpy as np
from scipy.optimize import root

from ..errors import NumericalAbort, ValidationError
from .beam import BeamModal, beam_modal
from .contact import ContactState, contact_force, hertz_stiffness
from .params import (
    GRAVITY,
    BeamParams,
    RigidBodyParams,
    SuspensionParams,
    VehicleTrackParams,
)

logger = logging.getLogger(__name__)

VEHICLE_LABELS = (
    "Z_c",
    "beta_c",
    "Z_t1",
    "beta_t1",
    "Z_t2",
    "beta_t2",
    "Z_w1",
    "Z_w2",
    "Z_w3",
    "Z_w4",
)
VEHICLE_DOFS = len(VEHICLE_LABELS)
WHEEL_SLICE = slice(6, 10)

# Wheel j belongs to bogie j // 2 and sits at +l_t (front) or -l_t (rear) of it
_BOGIE_SIGNS = (1.0, -1.0)
_WHEEL_SIGNS = (1.0, -1.0, 1.0, -1.0)


def _add_element(matrix, b, value):
    matrix += value * np.outer(b, b)


def _vehicle_matrices(rigid: RigidBodyParams, susp: SuspensionParams, gravity):
    mass = np.diag(
        [
            rigid.car_mass,
            rigid.car_inertia,
            rigid.bogie_mass,
            rigid.bogie_inertia,
            rigid.bogie_mass,
            rigid.bogie_inertia,
        ]
        + [rigid.wheelset_mass] * 4
    )
    damping = np.zeros((VEHICLE_DOFS, VEHICLE_DOFS))
    stiffness = np.zeros((VEHICLE_DOFS, VEHICLE_DOFS))

    # Secondary suspension: car body point above bogie i against bogie centre
    for i, sign in enumerate(_BOGIE_SIGNS):
        b = np.zeros(VEHICLE_DOFS)
        b[0] = 1.0
        b[1] = sign * susp.semi_bogie_spacing
        b[2 + 2 * i] = -1.0
        _add_element(stiffness, b, susp.secondary_stiffness)
        _add_element(damping, b, susp.secondary_damping)

    # Primary suspension: bogie point above wheelset j against the wheelset
    for j, sign in enumerate(_WHEEL_SIGNS):
        bogie = j // 2
        b = np.zeros(VEHICLE_DOFS)
        b[2 + 2 * bogie] = 1.0
        b[3 + 2 * bogie] = sign * susp.semi_wheelbase
        b[6 + j] = -1.0
        _add_element(stiffness, b, susp.primary_stiffness)
        _add_element(damping, b, susp.primary_damping)

    gravity_force = gravity * np.array(
        [rigid.car_mass, 0.0, rigid.bogie_mass, 0.0, rigid.bogie_mass, 0.0]
        + [rigid.wheelset_mass] * 4
    )
    return mass, damping, stiffness, gravity_force


def vehicle_block(params: VehicleTrackParams):
    """
    Mass, damping, stiffness and gravity force of the ten vehicle equations.

    These rows are the part of the system that is fully observable from the
    learned outputs (vehicle DOFs plus rail displacement under the wheels).
    """
    return _vehicle_matrices(params.rigid, params.suspension, params.gravity)


def wheel_offsets(susp: SuspensionParams):
    """Positions of wheelsets 1..4 relative to the car body centre (front first)."""
    lc, lt = susp.semi_bogie_spacing, susp.semi_wheelbase
    return np.array([lc + lt, lc - lt, -lc + lt, -lc - lt])


def _contact_directions(n, shapes):
    """
    Per wheelset, the generalised force direction c (F += c p) and the
    compression gradient d (delta = d . x - irre).
    """
    for j in range(4):
        c = np.zeros(n)
        c[6 + j] = -2.0
        c[VEHICLE_DOFS:] = shapes[j]
        d = np.zeros(n)
        d[6 + j] = 1.0
        d[VEHICLE_DOFS:] = -shapes[j]
        yield c, d


def default_vehicle_center(susp: SuspensionParams, beam: BeamParams) -> float:
    """Car centre at t = 0 with the rear wheelset at 10 % of the rail span."""
    return 0.1 * beam.length + susp.semi_bogie_spacing + susp.semi_wheelbase


class CodesSystem:
    """
    Coupled ODE system M x'' + C x' + K x = F(t, x) of the vehicle-track model.

    The wheel-rail forces are nonlinear and are not part of K or C; they enter
    through `forcing`, which needs the rail irregularity under the four
    wheelsets at the evaluated instant.
    """

    def __init__(
        self,
        modal: BeamModal,
        mass,
        damping,
        stiffness,
        gravity_force,
        wheel_start,
        speed,
        exponent=1.5,
        initial_displacement=None,
        initial_velocity=None,
    ):
        self.modal = modal
        self.mass = mass
        self.damping = damping
        self.stiffness = stiffness
        self.gravity_force = gravity_force
        self.wheel_start = np.asarray(wheel_start, dtype=float)
        self.speed = float(speed)
        self.exponent = exponent
        self.contact_constant = modal.params.contact_constant
        self.mass_diagonal = np.diag(mass).copy()
        n = self.n_dofs
        self.initial_displacement = (
            np.zeros(n) if initial_displacement is None else initial_displacement
        )
        self.initial_velocity = (
            np.zeros(n) if initial_velocity is None else initial_velocity
        )

    @property
    def n_dofs(self) -> int:
        return self.mass.shape[0]

    @property
    def labels(self):
        return VEHICLE_LABELS + tuple(
            "q_{}".format(k) for k in range(1, self.modal.count + 1)
        )

    def wheel_positions(self, t):
        """x_wj(t) = x_wj(0) + v t; scalar t gives (4,), an array gives (..., 4)."""
        t = np.asarray(t, dtype=float)
        return self.wheel_start + self.speed * t[..., None]

    def contact(self, t, x, irre) -> ContactState:
        return contact_force(
            x, irre, self.modal, self.wheel_positions(t), self.exponent
        )

    def _generalized(self, shapes, p):
        out = np.zeros(p.shape[:-1] + (self.n_dofs,))
        out[..., WHEEL_SLICE] = -2.0 * p
        out[..., VEHICLE_DOFS:] = np.einsum("...jk,...j->...k", shapes, p)
        return out

    def forcing(self, t, x, irre) -> np.ndarray:
        """Gravity plus generalised wheel-rail forces, for a state or a series."""
        shapes = self.modal.shapes(self.wheel_positions(t))
        p = self.contact(t, x, irre).force
        return self.gravity_force + self._generalized(shapes, p)

    def forcing_jacobian(self, t, x, irre) -> np.ndarray:
        """dF/dx of a single state."""
        shapes = self.modal.shapes(self.wheel_positions(t))
        state = self.contact(t, x, irre)
        slope = hertz_stiffness(
            state.compression, self.contact_constant, self.exponent
        )
        jac = np.zeros((self.n_dofs, self.n_dofs))
        for j, (c, d) in enumerate(_contact_directions(self.n_dofs, shapes)):
            jac += slope[j] * np.outer(c, d)
        return jac

    def acceleration(self, t, x, v, irre) -> np.ndarray:
        force = self.forcing(t, x, irre)
        return (force - v @ self.damping.T - x @ self.stiffness.T) / self.mass_diagonal

    def residual(self, t, x, v, a, irre) -> np.ndarray:
        """M a + C v + K x - F(t, x); accepts single states or (steps, n) series."""
        return (
            a @ self.mass.T
            + v @ self.damping.T
            + x @ self.stiffness.T
            - self.forcing(t, x, irre)
        )


def assemble_codes(
    rigid: RigidBodyParams,
    susp: SuspensionParams,
    beam: BeamParams,
    modal: BeamModal,
    exponent=1.5,
    gravity=GRAVITY,
    vehicle_center=None,
) -> CodesSystem:
    """
    Assembles the vehicle-track system by force-element summation.

    Parameters
    ----------
    rigid, susp, beam: parameter sets
    modal: BeamModal
        Rail modes, has to match `beam.modes`.
    exponent: float
        Exponent of the Hertz contact law.
    gravity: float
        Gravitational acceleration; 0 switches gravity off.
    vehicle_center: float
        Position of the car body centre along the rail at t = 0. By default the
        rear wheelset starts at 10 % of the rail span.
    """
    if modal.count != beam.modes:
        raise ValidationError(
            "Modal data has {} modes but the beam asks for {}".format(
                modal.count, beam.modes
            )
        )
    if vehicle_center is None:
        vehicle_center = default_vehicle_center(susp, beam)
    n = VEHICLE_DOFS + modal.count

    mass = np.zeros((n, n))
    damping = np.zeros((n, n))
    stiffness = np.zeros((n, n))
    vm, vc, vk, vg = _vehicle_matrices(rigid, susp, gravity)
    mass[:VEHICLE_DOFS, :VEHICLE_DOFS] = vm
    damping[:VEHICLE_DOFS, :VEHICLE_DOFS] = vc
    stiffness[:VEHICLE_DOFS, :VEHICLE_DOFS] = vk

    rail = slice(VEHICLE_DOFS, n)
    mass[rail, rail] = np.eye(modal.count)
    fastener_shapes = modal.shapes(beam.fasteners)
    coupling = fastener_shapes.T @ fastener_shapes
    stiffness[rail, rail] = (
        np.diag(modal.stiffnesses) + susp.fastener_stiffness * coupling
    )
    damping[rail, rail] = susp.fastener_damping * coupling

    gravity_force = np.zeros(n)
    gravity_force[:VEHICLE_DOFS] = vg
    return CodesSystem(
        modal,
        mass,
        damping,
        stiffness,
        gravity_force,
        vehicle_center + wheel_offsets(susp),
        beam.speed,
        exponent,
    )


def build_system(params: VehicleTrackParams, vehicle_center=None) -> CodesSystem:
    return assemble_codes(
        params.rigid,
        params.suspension,
        params.beam,
        beam_modal(params.beam),
        exponent=params.contact_exponent,
        gravity=params.gravity,
        vehicle_center=vehicle_center,
    )


def static_wheel_load(system) -> float:
    """Per-wheel static load (N) of one rail: a quarter of the vehicle weight."""
    g = system.gravity_force
    return (g[0] / 4 + g[2] / 2 + g[6]) / 2


def static_equilibrium(system: CodesSystem, irre, t=0.0) -> np.ndarray:
    """
    Solves K x = F(t, x) including the nonlinear contact.

    Newton iterations start from the solution with the contact linearised
    about the static wheel load.
    """
    irre = np.asarray(irre, dtype=float)
    n = system.n_dofs
    shapes = system.modal.shapes(system.wheel_positions(t))
    p0 = static_wheel_load(system)

    if p0 > 0:
        G, e = system.contact_constant, system.exponent
        delta0 = G * p0 ** (1.0 / e)
        k_lin = e * p0 / delta0
        matrix = system.stiffness.copy()
        rhs = system.gravity_force.copy()
        for j, (c, d) in enumerate(_contact_directions(n, shapes)):
            matrix -= k_lin * np.outer(c, d)
            rhs += c * (p0 - k_lin * (irre[j] + delta0))
        guess = np.linalg.solve(matrix, rhs)
    else:
        guess = np.zeros(n)

    def equations(x):
        value = system.stiffness @ x - system.forcing(t, x, irre)
        jac = system.stiffness - system.forcing_jacobian(t, x, irre)
        return value, jac

    solution = root(equations, guess, jac=True, method="hybr")
    scale = max(np.abs(system.gravity_force).max(), 1.0)
    error = np.abs(equations(solution.x)[0]).max()
    logger.debug(
        "Static equilibrium: %d evaluations, residual %.3e",
        solution.nfev,
        error,
    )
    if not np.all(np.isfinite(solution.x)) or error > 1e-6 * scale:
        raise NumericalAbort(
            "Static equilibrium did not converge (residual {:.3e}): {}".format(
                error, solution.message
            )
        )
    return solution.x
