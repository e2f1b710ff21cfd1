import numpy as np
import pytest

from mbdno.errors import ValidationError
from mbdno.excitation.profile import (
    IrregularityProfile,
    WheelExcitation,
    ZeroExcitation,
    catmull_rom,
    sample_under_wheels,
    spectrum_lines,
    synthesize,
)
from mbdno.excitation.psd import PowerLawPsd, TabulatedPsd, estimate_psd, load_psd


def test_placeholder_psd(psd):
    assert psd.band == (1.0, 120.0)
    omega = np.array([0.01, 2 * np.pi / 100, 1.0, 2 * np.pi / 1.5, 10.0])
    density = psd.density(omega)
    assert density[0] == 0.0
    assert density[-1] == 0.0
    assert np.all(density[1:4] > 0)
    assert psd.variance() > 0


def test_psd_band_override():
    psd = load_psd(band=(2.0, 50.0))
    assert psd.band == (2.0, 50.0)
    assert psd.density(2 * np.pi / 60) == 0.0
    with pytest.raises(ValidationError, match="lambda_min"):
        load_psd(band=(50.0, 2.0))


def test_psd_file_units():
    with open("cycles.txt", "w") as f:
        f.write("# units: cycle/m\n# band: 1 100\n0.01 1e-4\n1.0 1e-8\n")
    psd = load_psd("cycles.txt")
    assert psd.band == (1.0, 100.0)
    assert np.allclose(psd.omega, 2 * np.pi * np.array([0.01, 1.0]))
    assert np.allclose(psd.values, np.array([1e-4, 1e-8]) / (2 * np.pi))

    with open("nounits.txt", "w") as f:
        f.write("0.01 1e-4\n1.0 1e-8\n")
    with pytest.raises(ValidationError, match="units"):
        load_psd("nounits.txt")

    with open("badunits.txt", "w") as f:
        f.write("# units: Hz\n0.01 1e-4\n1.0 1e-8\n")
    with pytest.raises(ValidationError, match="units"):
        load_psd("badunits.txt")


def test_tabulated_psd_validation():
    with pytest.raises(ValidationError, match="increasing"):
        TabulatedPsd([1.0, 0.5], [1.0, 1.0])
    with pytest.raises(ValidationError, match="nonnegative"):
        TabulatedPsd([0.5, 1.0], [1.0, -1.0])
    psd = TabulatedPsd([0.1, 10.0], [0.0, 1.0], loglog=False)
    assert psd.density(5.05) == pytest.approx(0.5)


def test_power_law_psd():
    psd = PowerLawPsd([(0.0, 2e-7, 2.0), (0.5, 5e-8, 4.0)])
    f = 0.2
    assert psd.density(2 * np.pi * f) == pytest.approx(2e-7 * f**-2 / (2 * np.pi))
    f = 0.8
    assert psd.density(2 * np.pi * f) == pytest.approx(5e-8 * f**-4 / (2 * np.pi))
    with pytest.raises(ValidationError):
        PowerLawPsd([(0.5, 1.0, 2.0), (0.1, 1.0, 2.0)])


def test_synthesize_is_deterministic(psd):
    a = synthesize(psd, 200.0, 0.05, seed=11)
    b = synthesize(psd, 200.0, 0.05, seed=11)
    c = synthesize(psd, 200.0, 0.05, seed=12)
    assert np.array_equal(a.values, b.values)
    assert not np.allclose(a.values, c.values)
    assert a.extent == pytest.approx(200.0)
    assert a.positions[1] == pytest.approx(0.05)


def test_synthesize_variance(psd):
    profile = synthesize(psd, 2000.0, 0.05, seed=5)
    n = len(profile.values)
    m, omega, d_omega = spectrum_lines(psd, n, 0.05)
    assert omega.min() >= psd.omega_min
    assert omega.max() <= psd.omega_max
    expected = np.sum(psd.density(omega) * d_omega)
    assert abs(profile.values.mean()) < 1e-12
    assert profile.values.var() == pytest.approx(expected, rel=1e-9)
    assert profile.values.var() == pytest.approx(psd.variance(), rel=0.05)


def test_synthesize_validation(psd):
    with pytest.raises(ValidationError, match="too coarse"):
        synthesize(psd, 100.0, 0.3, seed=0)
    with pytest.raises(ValidationError, match="length"):
        synthesize(psd, -1.0, 0.05, seed=0)


def test_estimated_psd_matches_target(psd):
    profile = synthesize(psd, 8000.0, 0.05, seed=3)
    estimate = estimate_psd(profile, segment_length=100.0)
    for center in 2.0 ** (np.arange(4) / 3.0):
        lo, hi = center * 2 ** (-1 / 6), center * 2 ** (1 / 6)
        mask = (estimate.omega >= lo) & (estimate.omega < hi)
        assert mask.sum() >= 3
        ratio = (
            estimate.values[mask].mean() / psd.density(estimate.omega[mask]).mean()
        )
        assert 0.8 <= ratio <= 1.25, center


def test_white_noise_has_flat_estimate():
    sigma, dx = 2e-3, 0.05
    estimates = []
    for seed in range(32):
        values = np.random.default_rng(seed).normal(scale=sigma, size=4096)
        profile = IrregularityProfile(values, dx, seed, "white")
        estimates.append(estimate_psd(profile, segment_length=12.8).values)
    mean = np.mean(estimates, axis=0)[1:-1]
    # one-sided, over 0 .. pi / dx rad/m
    level = sigma**2 / (np.pi / dx)
    assert np.all(np.abs(mean / level - 1) < 0.2)
    assert mean.mean() == pytest.approx(level, rel=0.05)


def test_estimate_psd_validation(psd):
    profile = synthesize(psd, 500.0, 0.05, seed=3)
    with pytest.raises(ValidationError, match="too short"):
        estimate_psd(profile, segment_length=100.0)
    with pytest.raises(ValidationError, match="overlap"):
        estimate_psd(profile, segment_length=10.0, overlap=1.0)


def test_catmull_rom():
    dx = 0.5
    nodes = np.arange(11) * dx
    values = np.sin(nodes)
    assert np.allclose(catmull_rom(values, dx, nodes), values)

    linear = 3.0 * nodes - 1.0
    x = np.linspace(0, 5.0, 37)
    assert np.allclose(catmull_rom(linear, dx, x), 3.0 * x - 1.0)

    x = np.linspace(0.5, 4.5, 50)
    assert np.allclose(catmull_rom(values, dx, x), np.sin(x), atol=1e-2)


def test_wheel_excitation(psd):
    profile = synthesize(psd, 50.0, 0.05, seed=2)
    start = np.array([24.0, 21.5, 6.5, 4.0])
    excitation = WheelExcitation(profile, start, 20.0)
    assert excitation(0.0).shape == (4,)
    times = np.linspace(0, 0.5, 6)
    values = excitation(times)
    assert values.shape == (6, 4)
    assert values[0, 0] == pytest.approx(profile.values[480])
    expected = catmull_rom(profile.values, 0.05, 4.0 + 20 * times)
    assert np.allclose(values[:, 3], expected)

    excitation.check_window(1.0)
    with pytest.raises(ValidationError, match="profile extent"):
        excitation.check_window(2.0)

    series = sample_under_wheels(profile, 20.0, start, times)
    assert np.array_equal(series, values)

    assert np.array_equal(ZeroExcitation()(times), np.zeros((6, 4)))


def test_standing_wheels(psd):
    profile = synthesize(psd, 50.0, 0.05, seed=2)
    excitation = WheelExcitation(profile, [30.0, 20.0, 10.0, 5.0], 0.0)
    values = excitation(np.linspace(0, 1, 5))
    assert np.allclose(values, values[0])
    with pytest.raises(ValidationError, match="speed"):
        WheelExcitation(profile, [30.0, 20.0, 10.0, 5.0], -1.0)
