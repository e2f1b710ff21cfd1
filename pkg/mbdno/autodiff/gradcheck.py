import numpy as np

from .tensor import backward


def real_view(array: np.ndarray) -> np.ndarray:
    """Flat float64 view; complex entries appear as interleaved (real, imag)."""
    return array.view(np.float64).reshape(-1)


def gradcheck(fn, params, eps=1e-5, samples=None, seed=0):
    """
    Compares analytic gradients with central differences.

    Parameters
    ----------
    fn: callable
        Builds the scalar loss from the current parameter values.
    params: list of Tensor
        Leaf tensors to check; complex parameters are checked per real and
        imaginary part.
    eps: float
        Finite-difference step.
    samples: int
        Number of randomly chosen entries checked per parameter, all when None.
    seed: int
        Seed of the entry selection.

    Returns
    -------
    dict mapping parameter names (or indices) to the maximal error divided by
    the largest gradient magnitude of that parameter.
    """
    for p in params:
        p.zero_grad()
    backward(fn())
    rng = np.random.default_rng(seed)
    errors = {}
    for index, p in enumerate(params):
        values = real_view(p.data)
        grad = p.grad if p.grad is not None else np.zeros_like(p.data)
        analytic = real_view(np.ascontiguousarray(grad, dtype=p.data.dtype))
        if samples is None or samples >= values.size:
            entries = np.arange(values.size)
        else:
            entries = np.sort(rng.choice(values.size, size=samples, replace=False))
        numeric = np.empty(len(entries))
        for k, i in enumerate(entries):
            original = values[i]
            values[i] = original + eps
            plus = fn().item()
            values[i] = original - eps
            minus = fn().item()
            values[i] = original
            numeric[k] = (plus - minus) / (2 * eps)
        selected = analytic[entries]
        scale = max(np.abs(numeric).max(), np.abs(selected).max(), 1e-300)
        errors[p.name or index] = float(np.abs(selected - numeric).max() / scale)
    return errors
