import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from ..dataset.norm import denormalize
from ..errors import ValidationError
from ..fno.encoding import encode_input
from ..integrate.trajectory import OUTPUT_CHANNELS
from ..losses.derivative import TRIM, numerical_derivative, trim_series

logger = logging.getLogger(__name__)

ROWS = ("x", "v", "a")


def relative_l2(pred, truth, axes) -> np.ndarray:
    """100 * ||pred - truth|| / ||truth|| over `axes`; 0 where both vanish."""
    error = np.sqrt(((pred - truth) ** 2).sum(axis=axes))
    norm = np.sqrt((truth**2).sum(axis=axes))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(norm > 0, error / norm, np.where(error > 0, np.inf, 0.0))
    return 100.0 * ratio


@dataclass
class EvalReport:
    """Relative L2 errors (%) per channel of solutions and their derivatives."""

    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    channels: tuple = OUTPUT_CHANNELS
    timings: dict = field(default_factory=dict)

    def aggregate(self, row) -> float:
        return float(np.mean(getattr(self, row)))

    @property
    def summary(self):
        return tuple(self.aggregate(row) for row in ROWS)

    def to_dict(self) -> dict:
        return {
            "channels": list(self.channels),
            **{row: getattr(self, row).tolist() for row in ROWS},
            "mean": dict(zip(ROWS, self.summary)),
            "timings": dict(self.timings),
        }

    def write(self, path):
        """Column file: channel, X, V and A errors; the mean in the last row."""
        with open(path, "w") as f:
            f.write("# channel x_rel_l2_pct v_rel_l2_pct a_rel_l2_pct\n")
            for i, name in enumerate(self.channels):
                f.write(
                    "{} {:.6e} {:.6e} {:.6e}\n".format(
                        name, self.x[i], self.v[i], self.a[i]
                    )
                )
            f.write("mean {:.6e} {:.6e} {:.6e}\n".format(*self.summary))


def evaluate_predictions(pred_x, x, v, a, dt) -> EvalReport:
    """
    Errors of predicted solutions against stored ground truth.

    All arrays are (batch, 14, time) in physical units. Derivative errors
    compare numerical derivatives of `pred_x` with the stored V and A on the
    trimmed window.
    """
    pred_x = np.asarray(pred_x, dtype=float)
    if pred_x.shape[0] == 0:
        raise ValidationError("Cannot evaluate an empty split")
    for name, truth in (("x", x), ("v", v), ("a", a)):
        if np.shape(truth) != pred_x.shape:
            raise ValidationError(
                "Truth '{}' {} does not match prediction {}".format(
                    name, np.shape(truth), pred_x.shape
                )
            )
    pred_v = numerical_derivative(pred_x, dt, 1)
    pred_a = numerical_derivative(pred_x, dt, 2)
    return EvalReport(
        x=relative_l2(pred_x, x, (0, 2)),
        v=relative_l2(pred_v, trim_series(np.asarray(v), TRIM), (0, 2)),
        a=relative_l2(pred_a, trim_series(np.asarray(a), TRIM), (0, 2)),
    )


def predict(model, inputs, stats, batch_size=64) -> np.ndarray:
    """Physical solutions (batch, 14, time) for encoded inputs (batch, 18, time)."""
    outputs = []
    for start in range(0, len(inputs), batch_size):
        outputs.append(model(inputs[start : start + batch_size]).data)
    pred = np.concatenate(outputs, axis=0)
    return denormalize(pred, stats.x_mean, stats.x_std, axis=1)


def channels_first(container):
    """x, v, a of a container as (batch, 14, time) arrays."""
    return tuple(
        np.ascontiguousarray(values.transpose(0, 2, 1))
        for values in (container.x, container.v, container.a)
    )


def evaluate(model, stats, container, batch_size=64) -> EvalReport:
    """Evaluates a model on every record of `container`."""
    if container.count == 0:
        raise ValidationError("Cannot evaluate an empty split")
    inputs = encode_input(container.irregularity, container.params, stats)
    start = time.perf_counter()
    pred = predict(model, inputs, stats, batch_size)
    elapsed = time.perf_counter() - start
    x, v, a = channels_first(container)
    report = evaluate_predictions(pred, x, v, a, container.dt_out)
    report.timings["inference_s"] = elapsed
    report.timings["inference_per_pair_s"] = elapsed / container.count
    logger.info(
        "Relative L2 errors: X %.3f%%, V %.3f%%, A %.3f%%", *report.summary
    )
    return report


def write_overlay(path, times, truth, pred, channels=OUTPUT_CHANNELS):
    """
    Column file of one pair: time, then truth and prediction of every channel.

    truth and pred are (14, time).
    """
    columns = [np.asarray(times)]
    header = ["time"]
    for i, name in enumerate(channels):
        columns += [truth[i], pred[i]]
        header += [name + "_true", name + "_pred"]
    np.savetxt(path, np.column_stack(columns), header=" ".join(header))


def write_overlays(directory, model, stats, container, indices=(0,)):
    inputs = encode_input(container.irregularity, container.params, stats)
    x, _, _ = channels_first(container)
    paths = []
    for k in indices:
        if not 0 <= k < container.count:
            raise ValidationError(
                "Overlay index {} outside the split of {} pairs".format(
                    k, container.count
                )
            )
        pred = predict(model, inputs[k : k + 1], stats)[0]
        path = os.path.join(directory, "overlay_{}.txt".format(k))
        write_overlay(path, container.times, x[k], pred)
        paths.append(path)
    return paths
