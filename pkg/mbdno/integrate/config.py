from dataclasses import dataclass

from ..errors import ValidationError
from ..utils.checks import check_choice, check_int, check_nonnegative, check_positive

SCHEMES = ("zhai", "newmark", "rk4")
INITIAL_STATES = ("static", "rest", "given")


@dataclass(frozen=True)
class IntegratorConfig:
    """
    Time integration settings.

    `initial_state` selects the start of every trajectory: "static" solves the
    static equilibrium under gravity and the irregularity at t = 0, "rest"
    starts from zero displacement and velocity, "given" uses the initial state
    stored in the system.
    """

    scheme: str = "zhai"
    dt: float = 1e-4
    duration: float = 1.0
    stride: int = 10
    psi: float = 0.5
    phi: float = 0.5
    beta: float = 0.25
    gamma: float = 0.5
    tolerance: float = 1e-10
    max_iterations: int = 20
    initial_state: str = "static"
    divergence_factor: float = 1e6
    divergence_floor: float = 1.0
    keep_modal: bool = False

    def __post_init__(self):
        check_choice("scheme", self.scheme, SCHEMES)
        check_positive("dt", self.dt)
        check_positive("duration", self.duration)
        check_int("stride", self.stride, minimum=1)
        check_nonnegative("psi", self.psi)
        check_nonnegative("phi", self.phi)
        check_positive("beta", self.beta)
        check_positive("gamma", self.gamma)
        check_positive("tolerance", self.tolerance)
        check_int("max_iterations", self.max_iterations, minimum=1)
        check_choice("initial_state", self.initial_state, INITIAL_STATES)
        check_positive("divergence_factor", self.divergence_factor)
        check_positive("divergence_floor", self.divergence_floor)
        steps = self.steps
        if abs(steps * self.dt - self.duration) > 1e-9 * self.duration:
            raise ValidationError(
                "Duration {} is not a whole number of steps dt = {}".format(
                    self.duration, self.dt
                )
            )
        if steps % self.stride != 0:
            raise ValidationError(
                "Step count {} is not divisible by the output stride {}".format(
                    steps, self.stride
                )
            )

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def dt_out(self) -> float:
        return self.dt * self.stride

    @property
    def samples(self) -> int:
        return self.steps // self.stride + 1
