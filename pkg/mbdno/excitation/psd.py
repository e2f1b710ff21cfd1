import logging
import os
import re

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import welch

from ..errors import ValidationError
from ..utils.checks import check_choice, check_positive

logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "data")
PLACEHOLDER_PSD_FILE = os.path.join(DATA_DIR, "placeholder_psd.txt")
DEFAULT_BAND = (1.0, 120.0)

UNITS = ("rad/m", "cycle/m")


class PsdModel:
    """
    One-sided spatial power spectral density S(Omega) in m^2 / (rad/m).

    The density is zero outside the wavelength band [lambda_min, lambda_max].
    Subclasses implement `_density`.
    """

    def __init__(self, band=DEFAULT_BAND, name=None):
        lambda_min, lambda_max = band
        check_positive("lambda_min", lambda_min)
        check_positive("lambda_max", lambda_max)
        if lambda_min >= lambda_max:
            raise ValidationError(
                "Wavelength band has to satisfy lambda_min < lambda_max, got {}".format(
                    band
                )
            )
        self.band = (float(lambda_min), float(lambda_max))
        self.name = name or type(self).__name__

    @property
    def omega_min(self) -> float:
        return 2 * np.pi / self.band[1]

    @property
    def omega_max(self) -> float:
        return 2 * np.pi / self.band[0]

    def _density(self, omega):
        raise NotImplementedError

    def density(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        inside = (omega >= self.omega_min) & (omega <= self.omega_max)
        clipped = np.clip(omega, self.omega_min, self.omega_max)
        return np.where(inside, self._density(clipped), 0.0)

    def variance(self, points=4096) -> float:
        """Integral of S over the band (the variance of a matching profile)."""
        omega = np.geomspace(self.omega_min, self.omega_max, points)
        return float(trapezoid(self.density(omega), omega))


class TabulatedPsd(PsdModel):
    """
    PSD given by a table of (Omega [rad/m], S [m^2/(rad/m)]).

    Values are interpolated log-log between table points, or linearly when
    `loglog=False` (which also admits zero densities).
    """

    def __init__(self, omega, values, band=DEFAULT_BAND, name=None, loglog=True):
        super().__init__(band, name)
        omega = np.asarray(omega, dtype=float)
        values = np.asarray(values, dtype=float)
        if omega.ndim != 1 or omega.shape != values.shape or len(omega) < 2:
            raise ValidationError("PSD table needs two equally long columns")
        if np.any(np.diff(omega) <= 0):
            raise ValidationError("PSD frequencies have to be strictly increasing")
        if np.any(values < 0):
            raise ValidationError("PSD values have to be nonnegative")
        if loglog and (omega[0] <= 0 or np.any(values <= 0)):
            raise ValidationError("Log-log interpolation needs positive table entries")
        self.omega = omega
        self.values = values
        self.loglog = loglog

    def _density(self, omega):
        if self.loglog:
            return np.exp(
                np.interp(np.log(omega), np.log(self.omega), np.log(self.values))
            )
        return np.interp(omega, self.omega, self.values)


class PowerLawPsd(PsdModel):
    """
    Piecewise power law S(f) = A f^(-n) in m^2 / (cycle/m).

    `segments` is a list of (f_start, A, n) sorted by f_start; a segment holds
    from its f_start up to the next one.
    """

    def __init__(self, segments, band=DEFAULT_BAND, name=None):
        super().__init__(band, name)
        if not segments:
            raise ValidationError("PowerLawPsd needs at least one segment")
        starts = [s[0] for s in segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValidationError("Power law segments have to be sorted by start")
        for _, amplitude, _ in segments:
            check_positive("amplitude", amplitude)
        self.segments = [tuple(float(v) for v in s) for s in segments]

    def _density(self, omega):
        f = omega / (2 * np.pi)
        starts = np.array([s[0] for s in self.segments])
        index = np.clip(np.searchsorted(starts, f, side="right") - 1, 0, None)
        amplitude = np.array([s[1] for s in self.segments])[index]
        exponent = np.array([s[2] for s in self.segments])[index]
        return amplitude * f ** (-exponent) / (2 * np.pi)


_HEADER = re.compile(r"#\s*(\w+)\s*:\s*(.*)")


def load_psd(path=None, band=None) -> TabulatedPsd:
    """
    Loads a two-column PSD table.

    The file has a `# units: rad/m` or `# units: cycle/m` header line declaring
    the spatial-frequency unit of the first column; densities are per the same
    unit. An optional `# band: <lambda_min> <lambda_max>` line sets the
    wavelength band, `band` overrides it.

    Parameters
    ----------
    path: str
        Path of the table, `None` loads the shipped placeholder spectrum.
    band: (float, float)
        Wavelength band in meters.
    """
    if path is None:
        path = PLACEHOLDER_PSD_FILE
    headers = {}
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                match = _HEADER.match(line)
                if match:
                    headers[match.group(1).lower()] = match.group(2).strip()
                continue
            rows.append([float(v) for v in line.split()])
    if "units" not in headers:
        raise ValidationError("PSD file '{}' has no '# units:' header".format(path))
    units = check_choice("units", headers["units"], UNITS)
    table = np.array(rows, dtype=float)
    if table.ndim != 2 or table.shape[1] != 2:
        raise ValidationError("PSD file '{}' has to have two columns".format(path))
    frequency, density = table[:, 0], table[:, 1]
    if units == "cycle/m":
        omega = 2 * np.pi * frequency
        density = density / (2 * np.pi)
    else:
        omega = frequency
    if band is None:
        if "band" in headers:
            band = tuple(float(v) for v in headers["band"].split())
        else:
            band = DEFAULT_BAND
    logger.debug("Loaded PSD table %s (%d rows, %s)", path, len(table), units)
    return TabulatedPsd(omega, density, band=band, name=os.path.basename(path))


def estimate_psd(profile, segment_length, overlap=0.5, band=None) -> TabulatedPsd:
    """
    Averaged-periodogram (Welch, Hann window) estimate of a profile's PSD.

    The estimate is returned in m^2 / (rad/m) on the Welch frequency grid and is
    interpolated linearly. The band defaults to wavelengths between two samples
    and one segment.
    """
    check_positive("segment_length", segment_length)
    if not 0 <= overlap < 1:
        raise ValidationError(
            "Attribute 'overlap' has to be in [0, 1), not {}".format(overlap)
        )
    nperseg = int(round(segment_length / profile.dx))
    if nperseg < 4:
        raise ValidationError("Segment has to span at least 4 samples")
    if len(profile.values) < 8 * nperseg:
        raise ValidationError(
            "Profile too short: {} samples, at least 8 segments of {} needed".format(
                len(profile.values), nperseg
            )
        )
    frequency, power = welch(
        profile.values,
        fs=1.0 / profile.dx,
        window="hann",
        nperseg=nperseg,
        noverlap=int(overlap * nperseg),
        scaling="density",
    )
    if band is None:
        band = (2 * profile.dx, nperseg * profile.dx)
    return TabulatedPsd(
        2 * np.pi * frequency,
        power / (2 * np.pi),
        band=band,
        name="estimate({})".format(profile.source),
        loglog=False,
    )
