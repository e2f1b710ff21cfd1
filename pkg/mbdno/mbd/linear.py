import numpy as np

from ..errors import ValidationError


class LinearSystem:
    """
    Constant-coefficient system M x'' + C x' + K x = f(t).

    It shares the interface of `CodesSystem` (the irregularity argument is
    ignored), so integrators and residual checks run on small analytic
    problems as well.
    """

    def __init__(
        self,
        mass,
        damping=None,
        stiffness=None,
        force=None,
        initial_displacement=None,
        initial_velocity=None,
    ):
        self.mass = np.atleast_2d(np.asarray(mass, dtype=float))
        n = self.mass.shape[0]
        if self.mass.shape != (n, n):
            raise ValidationError("Mass matrix has to be square")
        self.damping = (
            np.zeros((n, n))
            if damping is None
            else np.atleast_2d(np.asarray(damping, dtype=float))
        )
        self.stiffness = (
            np.zeros((n, n))
            if stiffness is None
            else np.atleast_2d(np.asarray(stiffness, dtype=float))
        )
        for name, matrix in (("damping", self.damping), ("stiffness", self.stiffness)):
            if matrix.shape != (n, n):
                raise ValidationError(
                    "Attribute '{}' has to have shape {}".format(name, (n, n))
                )
        self.force = force
        self.initial_displacement = (
            np.zeros(n)
            if initial_displacement is None
            else np.atleast_1d(np.asarray(initial_displacement, dtype=float))
        )
        self.initial_velocity = (
            np.zeros(n)
            if initial_velocity is None
            else np.atleast_1d(np.asarray(initial_velocity, dtype=float))
        )

    @property
    def n_dofs(self) -> int:
        return self.mass.shape[0]

    def forcing(self, t, x, irre=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.force is None:
            return np.zeros(x.shape)
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return np.asarray(self.force(float(t)), dtype=float)
        return np.array([self.force(float(ti)) for ti in t])

    def forcing_jacobian(self, t, x, irre=None) -> np.ndarray:
        return np.zeros((self.n_dofs, self.n_dofs))

    def acceleration(self, t, x, v, irre=None) -> np.ndarray:
        rhs = self.forcing(t, x, irre) - v @ self.damping.T - x @ self.stiffness.T
        return np.linalg.solve(self.mass, rhs.T).T

    def residual(self, t, x, v, a, irre=None) -> np.ndarray:
        return (
            a @ self.mass.T
            + v @ self.damping.T
            + x @ self.stiffness.T
            - self.forcing(t, x, irre)
        )
