import dataclasses

import numpy as np
import pytest
from conftest import small_parameters
from scipy.integrate import trapezoid

from mbdno.errors import ValidationError
from mbdno.mbd.beam import beam_modal
from mbdno.mbd.codes import (
    VEHICLE_DOFS,
    assemble_codes,
    build_system,
    static_equilibrium,
    vehicle_block,
)
from mbdno.mbd.contact import (
    contact_force,
    hertz_force,
    hertz_stiffness,
    reduce_rail_output,
    reduce_rail_rates,
)
from mbdno.mbd.params import (
    DEFAULT_PARAMETER_FILE,
    VARIED_PARAMETERS,
    BeamParams,
    VehicleTrackParams,
    load_parameters,
    uniform_fasteners,
)

TRANSLATION = np.array([1, 0, 1, 0, 1, 0, 1, 1, 1, 1], dtype=float)


def test_load_shipped_parameters():
    params = load_parameters()
    assert params.beam.modes == 40
    assert params.beam.length == 160.0
    assert len(params.beam.fasteners) == 256
    assert params.contact_exponent == 1.5
    assert len(params.varied_vector()) == len(VARIED_PARAMETERS)
    f = params.beam.fasteners
    assert np.allclose(f + f[::-1], params.beam.length)
    assert params.rigid.car_inertia == 1.7e6
    assert params.suspension.fastener_stiffness == 6.0e7
    assert params.beam.elastic_modulus == 2.059e11


def test_parameter_file_with_plain_exponents():
    with open(DEFAULT_PARAMETER_FILE) as f:
        text = f.read()
    text = text.replace("fastener_stiffness: 6.0e7", "fastener_stiffness: 6e7")
    text = text.replace("car_mass: 40000.0", "car_mass: 4E4")
    with open("edited.yaml", "w") as f:
        f.write(text)
    params = load_parameters("edited.yaml")
    assert params.suspension.fastener_stiffness == 6e7
    assert params.rigid.car_mass == 4e4

    with open("broken.yaml", "w") as f:
        f.write(text.replace("car_mass: 4E4", "car_mass: 4E4kg"))
    with pytest.raises(ValidationError, match="car_mass"):
        load_parameters("broken.yaml")


def test_uniform_fasteners():
    positions = uniform_fasteners(10.0, 2.5)
    assert positions == (1.25, 3.75, 6.25, 8.75)
    with pytest.raises(ValidationError):
        uniform_fasteners(10.0, 0)


def test_parameter_validation():
    data = load_parameters().to_dict()
    data["vehicle"]["car_mass"] = -1.0
    with pytest.raises(ValidationError, match="car_mass"):
        VehicleTrackParams.from_dict(data)

    data = load_parameters().to_dict()
    data["vehicle"]["colour"] = "red"
    with pytest.raises(ValidationError):
        VehicleTrackParams.from_dict(data)

    data = load_parameters().to_dict()
    data["wind"] = 1.0
    with pytest.raises(ValidationError):
        VehicleTrackParams.from_dict(data)

    data = load_parameters().to_dict()
    data["rail"]["fastener_positions"] = [5.0, 3.0]
    with pytest.raises(ValidationError, match="increasing"):
        VehicleTrackParams.from_dict(data)


def test_parameter_dict_round_trip():
    params = small_parameters()
    assert VehicleTrackParams.from_dict(params.to_dict()) == params


def test_with_varied():
    params = load_parameters()
    vector = params.varied_vector() * 1.1
    varied = params.with_varied(vector)
    assert np.allclose(varied.varied_vector(), vector)
    assert varied.beam.length == params.beam.length
    assert varied.suspension.semi_wheelbase == params.suspension.semi_wheelbase
    with pytest.raises(ValidationError, match="13 entries"):
        params.with_varied(vector[:5])


def test_beam_modes_are_mass_orthonormal():
    beam = small_parameters().beam
    modal = beam_modal(beam)
    x = np.linspace(0, beam.length, 20001)
    shapes = modal.shapes(x)
    product = trapezoid(
        beam.mass_per_length * shapes[:, :, None] * shapes[:, None, :], x, axis=0
    )
    assert np.allclose(product, np.eye(beam.modes), atol=1e-6)


def test_beam_frequencies_and_derivatives():
    beam = small_parameters().beam
    modal = beam_modal(beam)
    k = np.arange(1, beam.modes + 1)
    ratio = beam.bending_stiffness / beam.mass_per_length
    expected = ratio * (k * np.pi / beam.length) ** 4
    assert np.allclose(modal.stiffnesses, expected)

    x, h = 13.7, 1e-5
    slope = (modal.shapes(x + h) - modal.shapes(x - h)) / (2 * h)
    assert np.allclose(modal.slopes(x), slope, rtol=1e-6)
    curvature = (modal.slopes(x + h) - modal.slopes(x - h)) / (2 * h)
    assert np.allclose(modal.curvatures(x), curvature, rtol=1e-5)


def test_unit_beam():
    beam = BeamParams(1.0, 1.0, 1.0, np.pi, 3, (), 0.0, 1.0)
    modal = beam_modal(beam)
    assert modal.frequencies[0] == pytest.approx(1.0)
    assert np.allclose(modal.frequencies, [1.0, 4.0, 9.0])
    positions = np.full((1, 4), np.pi / 2)
    rail = reduce_rail_output([[1.0, 0.0, 0.0]], modal, positions)
    assert np.allclose(rail, np.sqrt(2 / np.pi))


def test_assembled_matrices():
    params = small_parameters()
    system = build_system(params)
    n = VEHICLE_DOFS + params.beam.modes
    assert system.n_dofs == n
    assert system.labels[0] == "Z_c"
    assert system.labels[-1] == "q_{}".format(params.beam.modes)
    for matrix in (system.mass, system.damping, system.stiffness):
        assert matrix.shape == (n, n)
        assert np.allclose(matrix, matrix.T)
    assert np.allclose(system.mass[VEHICLE_DOFS:, VEHICLE_DOFS:], np.eye(8))
    assert system.mass[0, 0] == params.rigid.car_mass
    assert system.mass[1, 1] == params.rigid.car_inertia
    assert system.mass[9, 9] == params.rigid.wheelset_mass


def test_vehicle_translation_is_free():
    mass, damping, stiffness, gravity = vehicle_block(small_parameters())
    assert np.allclose(stiffness @ TRANSLATION, 0, atol=1e-6)
    assert np.allclose(damping @ TRANSLATION, 0, atol=1e-9)
    assert gravity[1] == 0 and gravity[3] == 0 and gravity[5] == 0


def test_vehicle_without_suspension_is_decoupled():
    params = small_parameters()
    free = dataclasses.replace(
        params.suspension,
        primary_stiffness=0.0,
        primary_damping=0.0,
        secondary_stiffness=0.0,
        secondary_damping=0.0,
    )
    system = build_system(dataclasses.replace(params, suspension=free))
    for matrix in (system.damping, system.stiffness):
        assert np.all(matrix[:VEHICLE_DOFS] == 0)
        assert np.all(matrix[:, :VEHICLE_DOFS] == 0)
    rng = np.random.default_rng(4)
    irre = np.zeros(4)
    accelerations = [
        system.acceleration(0.0, 1e-4 * x, v, irre)
        for x, v in rng.normal(size=(2, 2, system.n_dofs))
    ]
    # only gravity acts on the car body and the bogies
    assert np.array_equal(accelerations[0][:6], accelerations[1][:6])
    gravity = system.gravity_force / system.mass_diagonal
    assert np.allclose(accelerations[0][:6], gravity[:6])


def test_vehicle_starts_inside_the_window():
    params = small_parameters()
    system = build_system(params)
    assert system.wheel_start.min() == pytest.approx(0.1 * params.beam.length)
    assert system.wheel_start[0] > system.wheel_start[3]
    assert system.wheel_start[0] - system.wheel_start[3] == pytest.approx(20.0)
    assert np.allclose(
        system.wheel_positions(0.5), system.wheel_start + 0.5 * params.beam.speed
    )


def test_modes_mismatch():
    params = small_parameters()
    with pytest.raises(ValidationError, match="modes"):
        assemble_codes(
            params.rigid,
            params.suspension,
            params.beam,
            beam_modal(params.with_modes(4).beam),
        )


def test_hertz_contact():
    G = 5.12e-8
    assert hertz_force(-1e-5, G) == 0.0
    assert hertz_force(0.0, G) == 0.0
    assert hertz_force(1e-4, G) == pytest.approx((1e-4 / G) ** 1.5)
    assert hertz_force(1e-4, G, exponent=1.0) == pytest.approx(1e-4 / G)

    delta, h = 8e-5, 1e-10
    numeric = (hertz_force(delta + h, G) - hertz_force(delta - h, G)) / (2 * h)
    assert hertz_stiffness(delta, G) == pytest.approx(numeric, rel=1e-6)
    assert hertz_stiffness(-1e-6, G) == 0.0


def test_contact_force_of_states():
    system = build_system(small_parameters())
    positions = system.wheel_positions(0.0)
    x = np.zeros((2, system.n_dofs))
    x[1, 6:10] = 2e-4
    irre = np.array([-1e-4, 1e-4, 0.0, -3e-4])
    state = contact_force(x, irre, system.modal, positions)
    assert state.compression.shape == (2, 4)
    assert np.allclose(state.compression[0], -irre)
    assert np.allclose(state.compression[1], 2e-4 - irre)
    G = system.contact_constant
    assert state.force[0, 1] == 0.0
    assert state.force[0, 2] == 0.0
    assert state.force[0, 3] == pytest.approx((3e-4 / G) ** 1.5)
    assert np.all(state.force[1] > 0)


def test_static_equilibrium_carries_the_weight():
    params = small_parameters()
    system = build_system(params)
    irre = np.array([1e-4, -2e-4, 0.5e-4, 0.0])
    x = static_equilibrium(system, irre)
    residual = system.stiffness @ x - system.forcing(0.0, x, irre)
    assert np.abs(residual).max() < 1e-6 * np.abs(system.gravity_force).max()

    contact = system.contact(0.0, x, irre)
    assert np.all(contact.compression > 0)
    r = params.rigid
    weight = params.gravity * (r.car_mass + 2 * r.bogie_mass + 4 * r.wheelset_mass)
    assert 2 * contact.force.sum() == pytest.approx(weight, rel=1e-5)


def test_static_equilibrium_without_gravity():
    params = small_parameters()
    params = VehicleTrackParams(
        params.rigid, params.suspension, params.beam, gravity=0.0
    )
    system = build_system(params)
    x = static_equilibrium(system, np.zeros(4))
    assert np.allclose(x, 0.0, atol=1e-12)


def test_forcing_jacobian():
    system = build_system(small_parameters())
    irre = np.zeros(4)
    x = static_equilibrium(system, irre)
    jac = system.forcing_jacobian(0.0, x, irre)
    h = 1e-9
    for i in (6, 9, VEHICLE_DOFS, VEHICLE_DOFS + 3):
        dx = np.zeros(system.n_dofs)
        dx[i] = h
        plus = system.forcing(0.0, x + dx, irre)
        minus = system.forcing(0.0, x - dx, irre)
        column = (plus - minus) / (2 * h)
        assert np.allclose(jac[:, i], column, rtol=1e-5, atol=1.0)


def test_residual_of_acceleration():
    system = build_system(small_parameters())
    rng = np.random.default_rng(3)
    x = static_equilibrium(system, np.zeros(4)) + 1e-6 * rng.normal(
        size=system.n_dofs
    )
    v = 1e-3 * rng.normal(size=system.n_dofs)
    irre = 1e-5 * rng.normal(size=4)
    a = system.acceleration(0.01, x, v, irre)
    residual = system.residual(0.01, x, v, a, irre)
    assert np.abs(residual).max() < 1e-9 * np.abs(system.forcing(0.01, x, irre)).max()


def test_rail_reduction_rates():
    params = small_parameters()
    modal = beam_modal(params.beam)
    speed = params.beam.speed
    start = build_system(params).wheel_start
    k = np.arange(1, modal.count + 1)

    def q(t):
        return 1e-4 * np.sin(3 * k * t + k)[None] / k

    def q_dot(t):
        return 3e-4 * np.cos(3 * k * t + k)[None]

    def q_ddot(t):
        return -9e-4 * k * np.sin(3 * k * t + k)[None]

    def output(t):
        return reduce_rail_output(q(t), modal, (start + speed * t)[None])

    t, h = 0.013, 1e-6
    velocity, acceleration = reduce_rail_rates(
        q(t), q_dot(t), q_ddot(t), modal, (start + speed * t)[None], speed
    )
    first = (output(t + h) - output(t - h)) / (2 * h)
    assert np.allclose(velocity, first, rtol=1e-6, atol=1e-6 * np.abs(first).max())
    second = (output(t + h) - 2 * output(t) + output(t - h)) / h**2
    assert np.allclose(
        acceleration, second, rtol=1e-3, atol=1e-4 * np.abs(second).max()
    )


def test_rail_reduction_off_rail():
    modal = beam_modal(small_parameters().beam)
    positions = np.array([[10.0, 20.0, 30.0, 41.0]])
    with pytest.raises(ValidationError, match="leave the rail"):
        reduce_rail_output(np.zeros((1, modal.count)), modal, positions)
    with pytest.raises(ValidationError, match="shape"):
        reduce_rail_output(np.zeros((1, 3)), modal, positions)
