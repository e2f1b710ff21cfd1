import dataclasses
import os
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.constants import g as GRAVITY

from ..errors import ValidationError
from ..utils.checks import check_int, check_nonnegative, check_positive
from ..utils.yamlio import load_yaml

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "data")
DEFAULT_PARAMETER_FILE = os.path.join(DATA_DIR, "crh380.yaml")

# Parameters drawn by the dataset sampler, in container order
VARIED_PARAMETERS = (
    "M_c",
    "J_c",
    "M_t",
    "J_t",
    "M_w",
    "K_p",
    "C_p",
    "K_s",
    "C_s",
    "K_beta",
    "C_beta",
    "v",
    "G",
)


@dataclass(frozen=True)
class RigidBodyParams:
    """Masses and pitch inertias of the car body, the bogies and the wheelsets."""

    car_mass: float
    car_inertia: float
    bogie_mass: float
    bogie_inertia: float
    wheelset_mass: float

    def __post_init__(self):
        for field in dataclasses.fields(self):
            check_positive(field.name, getattr(self, field.name))

    def bodies(self):
        """Returns (identifier, mass, pitch inertia) of all seven bodies."""
        result = [("c", self.car_mass, self.car_inertia)]
        result += [(f"t{i}", self.bogie_mass, self.bogie_inertia) for i in (1, 2)]
        result += [(f"w{i}", self.wheelset_mass, None) for i in (1, 2, 3, 4)]
        return result


@dataclass(frozen=True)
class SuspensionParams:
    """
    Force elements of the vehicle and the track.

    K_p/C_p act between a bogie and one wheelset, K_s/C_s between the car body
    and one bogie, K_beta/C_beta between the rail and the ground at one fastener.
    """

    primary_stiffness: float
    primary_damping: float
    secondary_stiffness: float
    secondary_damping: float
    fastener_stiffness: float
    fastener_damping: float
    semi_wheelbase: float
    semi_bogie_spacing: float

    def __post_init__(self):
        for name in (
            "primary_stiffness",
            "primary_damping",
            "secondary_stiffness",
            "secondary_damping",
            "fastener_stiffness",
            "fastener_damping",
        ):
            check_nonnegative(name, getattr(self, name))
        check_positive("semi_wheelbase", self.semi_wheelbase)
        check_positive("semi_bogie_spacing", self.semi_bogie_spacing)


@dataclass(frozen=True)
class BeamParams:
    """
    Simply supported Euler beam (the rail) with discrete fasteners.

    `speed` may be zero, which models loads standing at their initial positions.
    """

    elastic_modulus: float
    second_moment: float
    mass_per_length: float
    length: float
    modes: int
    fastener_positions: Tuple[float, ...]
    speed: float
    contact_constant: float

    def __post_init__(self):
        check_positive("elastic_modulus", self.elastic_modulus)
        check_positive("second_moment", self.second_moment)
        check_positive("mass_per_length", self.mass_per_length)
        check_positive("length", self.length)
        check_int("modes", self.modes, minimum=1)
        check_nonnegative("speed", self.speed)
        check_positive("contact_constant", self.contact_constant)
        positions = np.asarray(self.fastener_positions, dtype=float)
        if positions.ndim != 1:
            raise ValidationError("Attribute 'fastener_positions' has to be 1D")
        if len(positions) and (positions[0] < 0 or positions[-1] > self.length):
            raise ValidationError(
                "Attribute 'fastener_positions' has to lie inside [0, {}]".format(
                    self.length
                )
            )
        if np.any(np.diff(positions) <= 0):
            raise ValidationError(
                "Attribute 'fastener_positions' has to be strictly increasing"
            )
        object.__setattr__(self, "fastener_positions", tuple(positions.tolist()))

    @property
    def fasteners(self) -> np.ndarray:
        return np.array(self.fastener_positions)

    @property
    def bending_stiffness(self) -> float:
        return self.elastic_modulus * self.second_moment


def uniform_fasteners(length: float, spacing: float) -> Tuple[float, ...]:
    """Fasteners at (i - 1/2) * spacing; symmetric about the rail midpoint."""
    check_positive("fastener_spacing", spacing)
    count = int(round(length / spacing))
    return tuple(((np.arange(count) + 0.5) * (length / count)).tolist())


@dataclass(frozen=True)
class VehicleTrackParams:
    rigid: RigidBodyParams
    suspension: SuspensionParams
    beam: BeamParams
    contact_exponent: float = 1.5
    gravity: float = GRAVITY

    def __post_init__(self):
        check_positive("contact_exponent", self.contact_exponent)
        check_nonnegative("gravity", self.gravity)

    def varied_vector(self) -> np.ndarray:
        """The 13 sampled parameters in the order of `VARIED_PARAMETERS`."""
        r, s, b = self.rigid, self.suspension, self.beam
        return np.array(
            [
                r.car_mass,
                r.car_inertia,
                r.bogie_mass,
                r.bogie_inertia,
                r.wheelset_mass,
                s.primary_stiffness,
                s.primary_damping,
                s.secondary_stiffness,
                s.secondary_damping,
                s.fastener_stiffness,
                s.fastener_damping,
                b.speed,
                b.contact_constant,
            ]
        )

    def with_varied(self, vector) -> "VehicleTrackParams":
        """Returns a copy where the 13 sampled parameters are taken from `vector`."""
        v = [float(x) for x in vector]
        if len(v) != len(VARIED_PARAMETERS):
            raise ValidationError(
                "Parameter vector has to have {} entries, not {}".format(
                    len(VARIED_PARAMETERS), len(v)
                )
            )
        rigid = RigidBodyParams(*v[0:5])
        suspension = dataclasses.replace(
            self.suspension,
            primary_stiffness=v[5],
            primary_damping=v[6],
            secondary_stiffness=v[7],
            secondary_damping=v[8],
            fastener_stiffness=v[9],
            fastener_damping=v[10],
        )
        beam = dataclasses.replace(self.beam, speed=v[11], contact_constant=v[12])
        return dataclasses.replace(
            self, rigid=rigid, suspension=suspension, beam=beam
        )

    def with_modes(self, modes: int) -> "VehicleTrackParams":
        return dataclasses.replace(
            self, beam=dataclasses.replace(self.beam, modes=modes)
        )

    def to_dict(self) -> dict:
        return {
            "vehicle": dataclasses.asdict(self.rigid),
            "suspension": dataclasses.asdict(self.suspension),
            "rail": {
                **{
                    k: v
                    for k, v in dataclasses.asdict(self.beam).items()
                    if k != "fastener_positions"
                },
                "fastener_positions": list(self.beam.fastener_positions),
            },
            "contact": {"exponent": self.contact_exponent},
            "gravity": self.gravity,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VehicleTrackParams":
        data = dict(data)
        _check_keys("", data, ("vehicle", "suspension", "rail", "contact", "gravity"))
        try:
            rigid = RigidBodyParams(**data["vehicle"])
            suspension = SuspensionParams(**data["suspension"])
            rail = dict(data["rail"])
            spacing = rail.pop("fastener_spacing", None)
            if spacing is not None:
                if "fastener_positions" in rail:
                    raise ValidationError(
                        "Use either 'fastener_spacing' or 'fastener_positions'"
                    )
                rail["fastener_positions"] = uniform_fasteners(
                    rail["length"], spacing
                )
            beam = BeamParams(**rail)
        except (KeyError, TypeError) as e:
            raise ValidationError("Invalid parameter file: {}".format(e))
        contact = data.get("contact") or {}
        _check_keys("contact", contact, ("exponent",))
        return cls(
            rigid=rigid,
            suspension=suspension,
            beam=beam,
            contact_exponent=float(contact.get("exponent", 1.5)),
            gravity=float(data.get("gravity", GRAVITY)),
        )


def _check_keys(section, data, allowed):
    unknown = set(data) - set(allowed)
    if unknown:
        raise ValidationError(
            "Unknown keys in parameter section '{}': {}".format(
                section, ", ".join(sorted(unknown))
            )
        )


def load_parameters(path: str = None) -> VehicleTrackParams:
    """
    Loads a vehicle-track parameter file.

    Parameters
    ----------
    path: str
        Path to a YAML parameter file. If `None`, the shipped CRH380-like
        parameter set is loaded.
    """
    if path is None:
        path = DEFAULT_PARAMETER_FILE
    with open(path) as f:
        data = load_yaml(f)
    if not isinstance(data, dict):
        raise ValidationError("Parameter file '{}' is not a mapping".format(path))
    return VehicleTrackParams.from_dict(data)
