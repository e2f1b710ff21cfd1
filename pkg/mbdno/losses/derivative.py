from ..errors import ValidationError
from ..utils.checks import check_positive

# Samples dropped at each end of the time axis by losses that use derivatives
TRIM = 2


def numerical_derivative(series, dt, order=1, trim=TRIM):
    """
    Second-order central difference along the last axis.

    Works on numpy arrays and on autodiff tensors. The result is aligned with
    `series[..., trim:-trim]`.

    Parameters
    ----------
    series: np.ndarray or Tensor
        Shape (..., time), time >= 2 * trim + 1.
    dt: float
        Sample spacing.
    order: int
        1 or 2.
    trim: int
        Samples dropped at each end, at least 1.
    """
    check_positive("dt", dt)
    if order not in (1, 2):
        raise ValidationError(
            "Attribute 'order' has to be 1 or 2, not {}".format(order)
        )
    if trim < 1:
        raise ValidationError("Attribute 'trim' has to be at least 1")
    n = series.shape[-1]
    if n < max(5, 2 * trim + 1):
        raise ValidationError(
            "Series too short for differentiation: {} samples".format(n)
        )
    lo, hi = trim, n - trim
    left = series[..., lo - 1 : hi - 1]
    right = series[..., lo + 1 : hi + 1]
    if order == 1:
        return (right - left) * (1.0 / (2.0 * dt))
    center = series[..., lo:hi]
    return (right - center * 2.0 + left) * (1.0 / dt**2)


def trim_series(series, trim=TRIM):
    """Drops `trim` samples at both ends of the last axis."""
    return series[..., trim : series.shape[-1] - trim]
