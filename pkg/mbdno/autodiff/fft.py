"""
Real FFT along the last (time) axis.

The forward transform is unnormalised and the inverse carries 1/n, as in
`numpy.fft`: a constant signal c of length n has c * n at mode 0.
"""

import numpy as np

from ..errors import ValidationError
from .tensor import Tensor, as_tensor


def rfft(x: Tensor) -> Tensor:
    """(..., n) real -> (..., n // 2 + 1) complex."""
    x = as_tensor(x)
    if x.is_complex:
        raise ValidationError("rfft needs a real tensor")
    n = x.shape[-1]
    if n < 2:
        raise ValidationError("rfft needs at least 2 samples, not {}".format(n))

    def backward(g):
        return (n * np.fft.ifft(g, n=n, axis=-1).real,)

    return Tensor(np.fft.rfft(x.data, axis=-1), (x,), backward)


def irfft(s: Tensor, n: int) -> Tensor:
    """(..., n // 2 + 1) complex -> (..., n) real."""
    s = as_tensor(s)
    if s.shape[-1] != n // 2 + 1:
        raise ValidationError(
            "irfft of length {} needs {} modes, not {}".format(
                n, n // 2 + 1, s.shape[-1]
            )
        )
    weights = np.full(s.shape[-1], 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0

    def backward(g):
        return (np.fft.rfft(g, axis=-1) * weights / n,)

    return Tensor(np.fft.irfft(s.data, n=n, axis=-1), (s,), backward)
