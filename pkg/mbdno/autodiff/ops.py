import numpy as np
from scipy.special import erf

from ..errors import ValidationError
from ..utils.checks import check_choice
from .tensor import Tensor, as_tensor

ACTIVATIONS = ("gelu", "relu", "tanh")


def pointwise_linear(x: Tensor, weight: Tensor, bias: Tensor = None) -> Tensor:
    """
    Affine map of the channel axis applied at every time point.

    x: (batch, in, time), weight: (out, in), bias: (out,) -> (batch, out, time)
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 3 or weight.ndim != 2 or weight.shape[1] != x.shape[1]:
        raise ValidationError(
            "pointwise_linear: weight {} does not match input {}".format(
                weight.shape, x.shape
            )
        )
    out = np.einsum("oi,bit->bot", weight.data, x.data)
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (weight.shape[0],):
            raise ValidationError(
                "pointwise_linear: bias {} does not match weight {}".format(
                    bias.shape, weight.shape
                )
            )
        out = out + bias.data[None, :, None]
        parents.append(bias)

    def backward(g):
        grads = [
            np.einsum("oi,bot->bit", weight.data, g),
            np.einsum("bot,bit->oi", g, x.data),
        ]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2)))
        return grads

    return Tensor(out, parents, backward)


def channel_mix(x: Tensor, matrices) -> Tensor:
    """
    Per-batch constant matrices applied to the channel axis.

    x: (batch, n, time), matrices: (batch, m, n) or (m, n) -> (batch, m, time)
    """
    x = as_tensor(x)
    matrices = np.asarray(matrices, dtype=float)
    if matrices.ndim == 2:
        matrices = np.broadcast_to(matrices, (x.shape[0],) + matrices.shape)
    if matrices.shape[0] != x.shape[0] or matrices.shape[2] != x.shape[1]:
        raise ValidationError(
            "channel_mix: matrices {} do not match input {}".format(
                matrices.shape, x.shape
            )
        )
    return Tensor(
        np.einsum("bmn,bnt->bmt", matrices, x.data),
        (x,),
        lambda g: (np.einsum("bmn,bmt->bnt", matrices, g),),
    )


def relu(x: Tensor) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return Tensor(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def gelu(x: Tensor) -> Tensor:
    """Exact GELU, x * Phi(x)."""
    x = as_tensor(x)
    cdf = 0.5 * (1.0 + erf(x.data / np.sqrt(2.0)))
    pdf = np.exp(-0.5 * x.data**2) / np.sqrt(2 * np.pi)
    return Tensor(x.data * cdf, (x,), lambda g: (g * (cdf + x.data * pdf),))


def tanh(x: Tensor) -> Tensor:
    x = as_tensor(x)
    value = np.tanh(x.data)
    return Tensor(value, (x,), lambda g: (g * (1.0 - value**2),))


def activation(x: Tensor, name="gelu") -> Tensor:
    check_choice("activation", name, ACTIVATIONS)
    if name == "gelu":
        return gelu(x)
    if name == "relu":
        return relu(x)
    return tanh(x)


def concat(tensors, axis=0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        return [
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis)
            for i in range(len(tensors))
        ]

    return Tensor(
        np.concatenate([t.data for t in tensors], axis=axis), tensors, backward
    )


def abs2(s: Tensor) -> Tensor:
    """|s|^2 of a complex tensor, as a real tensor."""
    s = as_tensor(s)
    return Tensor(np.abs(s.data) ** 2, (s,), lambda g: (2.0 * s.data * g,))


def complex_mode_mul(s: Tensor, weights: Tensor, modes: int = None) -> Tensor:
    """
    Per-mode complex channel mixing of a spectrum.

    s: (batch, in, n_freq) complex, weights: (in, out, k_max) complex. The
    lowest k_max modes are mixed, the remaining ones are set to zero.
    """
    s, weights = as_tensor(s), as_tensor(weights)
    k_max = weights.shape[2] if modes is None else modes
    n_freq = s.shape[2]
    if weights.shape[0] != s.shape[1] or k_max > weights.shape[2]:
        raise ValidationError(
            "complex_mode_mul: weights {} do not match spectrum {}".format(
                weights.shape, s.shape
            )
        )
    if k_max > n_freq:
        raise ValidationError(
            "complex_mode_mul: {} modes requested but the spectrum has {}".format(
                k_max, n_freq
            )
        )
    out = np.zeros((s.shape[0], weights.shape[1], n_freq), dtype=np.complex128)
    out[:, :, :k_max] = np.einsum(
        "bik,iok->bok", s.data[:, :, :k_max], weights.data[:, :, :k_max]
    )

    def backward(g):
        gk = g[:, :, :k_max]
        grad_s = np.zeros_like(s.data)
        grad_s[:, :, :k_max] = np.einsum(
            "bok,iok->bik", gk, np.conj(weights.data[:, :, :k_max])
        )
        grad_w = np.zeros_like(weights.data)
        grad_w[:, :, :k_max] = np.einsum(
            "bik,bok->iok", np.conj(s.data[:, :, :k_max]), gk
        )
        return grad_s, grad_w

    return Tensor(out, (s, weights), backward)


def trapezoid(x: Tensor, dt, axis=-1) -> Tensor:
    """Trapezoidal integral along `axis` with uniform spacing dt."""
    x = as_tensor(x)
    first = [slice(None)] * x.ndim
    last = [slice(None)] * x.ndim
    first[axis] = 0
    last[axis] = -1
    return (x.sum(axis=axis) - 0.5 * (x[tuple(first)] + x[tuple(last)])) * dt
