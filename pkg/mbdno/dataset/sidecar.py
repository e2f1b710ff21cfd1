import os

from ..autodiff.archive import load_archive, save_archive
from ..errors import ValidationError
from .container import sidecar_path  # noqa
from .norm import NormStats
from .weights import WeightFactors


def save_sidecar(path, stats: NormStats, weights: WeightFactors = None):
    """Writes normalization statistics and optional weight factors as an archive."""
    tensors = stats.to_arrays()
    metadata = {"kind": "dataset-stats"}
    if weights is not None:
        tensors["weights"] = weights.values
        metadata["r"] = weights.r
    save_archive(path, tensors, metadata)


def load_sidecar(path):
    """Returns (NormStats, WeightFactors or None)."""
    if not os.path.isfile(path):
        raise ValidationError("Sidecar '{}' does not exist".format(path))
    tensors, metadata = load_archive(path)
    if metadata.get("kind") != "dataset-stats":
        raise ValidationError("'{}' is not a dataset sidecar".format(path))
    weights = None
    if "weights" in tensors:
        weights = WeightFactors(values=tensors["weights"], r=metadata["r"])
    return NormStats.from_arrays(tensors), weights
