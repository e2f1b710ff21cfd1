import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..utils.checks import check_nonnegative, check_positive
from .psd import PsdModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IrregularityProfile:
    """Vertical rail irregularity r(x) sampled at x = i * dx, i = 0 .. n - 1."""

    values: np.ndarray
    dx: float
    seed: int
    source: str

    @property
    def extent(self) -> float:
        return (len(self.values) - 1) * self.dx

    @property
    def positions(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.dx


def spectrum_lines(psd: PsdModel, n: int, dx: float):
    """
    Harmonics m of the fundamental 2 pi / (n dx) whose angular frequencies lie
    inside the PSD band; returns (m, omega_m, d_omega).
    """
    d_omega = 2 * np.pi / (n * dx)
    first = max(1, math.ceil(psd.omega_min / d_omega - 1e-9))
    last = min(n // 2, math.floor(psd.omega_max / d_omega + 1e-9))
    m = np.arange(first, last + 1)
    return m, m * d_omega, d_omega


def synthesize(psd: PsdModel, length, dx, seed) -> IrregularityProfile:
    """
    Random irregularity with the given PSD by the spectrum method.

    r(x) = sum_m sqrt(2 S(Omega_m) dOmega) cos(Omega_m x + phi_m) with phases
    uniform on [0, 2 pi) drawn from `numpy.random.default_rng(seed)`. The
    frequencies are harmonics of the profile period, so the sum is evaluated
    with one inverse real FFT.

    Parameters
    ----------
    psd: PsdModel
        Target spectrum.
    length: float
        Profile extent in meters; the profile covers [0, length] or slightly more.
    dx: float
        Sample spacing, at most a quarter of the shortest wavelength.
    seed: int
        Generator seed.
    """
    check_positive("length", length)
    check_positive("dx", dx)
    if dx > psd.band[0] / 4:
        raise ValidationError(
            "dx = {} is too coarse for the shortest wavelength {} (dx <= {})".format(
                dx, psd.band[0], psd.band[0] / 4
            )
        )
    n = int(math.ceil(length / dx)) + 1
    m, omega, d_omega = spectrum_lines(psd, n, dx)
    if len(m) == 0:
        raise ValidationError(
            "PSD band {} is empty after discretization with period {} m".format(
                psd.band, n * dx
            )
        )
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2 * np.pi, size=len(m))
    amplitudes = np.sqrt(2.0 * psd.density(omega) * d_omega)

    coefficients = np.zeros(n // 2 + 1, dtype=complex)
    coefficients[m] = 0.5 * n * amplitudes * np.exp(1j * phases)
    values = np.fft.irfft(coefficients, n=n)
    logger.debug(
        "Synthesized %d samples from %d spectral lines (%s, seed %s)",
        n,
        len(m),
        psd.name,
        seed,
    )
    return IrregularityProfile(values=values, dx=float(dx), seed=seed, source=psd.name)


def catmull_rom(values, dx, x) -> np.ndarray:
    """
    Catmull-Rom interpolation of uniformly sampled `values` at positions `x`.

    The samples are extended linearly by one point at both ends.
    """
    values = np.asarray(values, dtype=float)
    padded = np.concatenate(
        ([2 * values[0] - values[1]], values, [2 * values[-1] - values[-2]])
    )
    s = np.asarray(x, dtype=float) / dx
    i = np.clip(np.floor(s).astype(int), 0, len(values) - 2)
    u = s - i
    p0, p1, p2, p3 = padded[i], padded[i + 1], padded[i + 2], padded[i + 3]
    return 0.5 * (
        2 * p1
        + (p2 - p0) * u
        + (2 * p0 - 5 * p1 + 4 * p2 - p3) * u**2
        + (3 * p1 - p0 - 3 * p2 + p3) * u**3
    )


class WheelExcitation:
    """
    Irregularity under the four wheelsets as a function of time.

    Wheelset j reads the profile at x_wj(0) + v t.
    """

    def __init__(self, profile: IrregularityProfile, wheel_start, speed):
        check_nonnegative("speed", speed)
        self.profile = profile
        self.wheel_start = np.asarray(wheel_start, dtype=float)
        self.speed = float(speed)

    def positions(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.wheel_start + self.speed * t[..., None]

    def check_window(self, duration):
        """Raises ValidationError when a wheel leaves the profile within the window."""
        first = self.positions(0.0).min()
        last = self.positions(duration).max()
        if first < 0 or last > self.profile.extent:
            raise ValidationError(
                "Excitation window [{:.3f}, {:.3f}] m exceeds the profile extent "
                "[0, {:.3f}] m".format(first, last, self.profile.extent)
            )

    def __call__(self, t) -> np.ndarray:
        return catmull_rom(self.profile.values, self.profile.dx, self.positions(t))


class ZeroExcitation:
    """Perfectly smooth rail."""

    def check_window(self, duration):
        pass

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.zeros(t.shape + (4,))


def sample_under_wheels(profile: IrregularityProfile, speed, wheel_start, times):
    """
    Irregularity time series Irre_j(t) = r(x_wj(0) + v t) of the four wheelsets.

    Returns an array of shape (len(times), 4).
    """
    times = np.asarray(times, dtype=float)
    excitation = WheelExcitation(profile, wheel_start, speed)
    excitation.check_window(times.max() if len(times) else 0.0)
    return excitation(times)
