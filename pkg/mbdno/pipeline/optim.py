import numpy as np

from ..autodiff.gradcheck import real_view
from ..errors import ValidationError
from ..utils.checks import check_int, check_nonnegative, check_positive


def lr_schedule(epoch, lr=5e-4, decay=0.75, every=30) -> float:
    """Step decay: lr * decay ** floor(epoch / every)."""
    check_int("epoch", epoch, 0)
    check_int("every", every, 1)
    return lr * decay ** (epoch // every)


class Adam:
    """
    Adam on the float64 views of the parameters.

    Complex parameters are updated as independent real and imaginary parts.
    """

    def __init__(self, named_parameters, beta1=0.9, beta2=0.999, eps=1e-8):
        check_nonnegative("beta1", beta1)
        check_nonnegative("beta2", beta2)
        check_positive("eps", eps)
        if beta1 >= 1 or beta2 >= 1:
            raise ValidationError(
                "Adam betas have to be below 1, not {} and {}".format(beta1, beta2)
            )
        self.params = list(named_parameters)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.steps = 0
        self.m = {name: np.zeros(real_view(p.data).size) for name, p in self.params}
        self.v = {name: np.zeros(real_view(p.data).size) for name, p in self.params}

    def step(self, lr):
        self.steps += 1
        t = self.steps
        bias1 = 1.0 - self.beta1**t
        bias2 = 1.0 - self.beta2**t
        for name, p in self.params:
            if p.grad is None:
                continue
            grad = real_view(np.ascontiguousarray(p.grad, dtype=p.data.dtype))
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad**2
            values = real_view(p.data)
            values -= lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)

    def state_arrays(self) -> dict:
        arrays = {"steps": np.array([float(self.steps)])}
        for name, _ in self.params:
            arrays["m." + name] = self.m[name].copy()
            arrays["v." + name] = self.v[name].copy()
        return arrays

    def load_arrays(self, arrays: dict):
        try:
            self.steps = int(arrays["steps"][0])
            for name, _ in self.params:
                self.m[name][...] = arrays["m." + name]
                self.v[name][...] = arrays["v." + name]
        except KeyError as e:
            raise ValidationError("Missing optimizer state {}".format(e))
