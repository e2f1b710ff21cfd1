import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..autodiff.tensor import backward
from ..dataset.norm import NormStats, constant_channels, normalize
from ..errors import NumericalAbort, ValidationError
from ..fno.encoding import encode_input
from ..fno.model import FnoModel, load_checkpoint, save_checkpoint
from ..losses.derivative import TRIM, trim_series
from ..losses.objectives import (
    LossConfig,
    ResidualBlocks,
    data_loss,
    direct_derivative_loss,
    ode_residual_loss,
    total_loss,
    vehicle_residual,
)
from ..utils.checks import check_int, check_positive
from ..utils.progress import ProgressLine
from .evaluate import channels_first, evaluate_predictions, predict
from .optim import Adam, lr_schedule

logger = logging.getLogger(__name__)

LAST_CHECKPOINT = "last.ckpt"
BEST_CHECKPOINT = "best.ckpt"
LOSS_CURVE = "loss_curve.txt"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 16
    lr: float = 5e-4
    decay: float = 0.75
    decay_every: int = 30
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    output: str = "run"
    resume: bool = False

    def __post_init__(self):
        check_int("epochs", self.epochs, 0)
        check_int("batch_size", self.batch_size, 1)
        check_positive("lr", self.lr)
        check_positive("decay", self.decay)
        if self.decay > 1:
            raise ValidationError(
                "Attribute 'decay' has to be within (0, 1], not {}".format(self.decay)
            )
        check_int("decay_every", self.decay_every, 1)
        check_int("seed", self.seed, 0)

    def learning_rate(self, epoch) -> float:
        return lr_schedule(epoch, self.lr, self.decay, self.decay_every)


@dataclass
class TrainingData:
    """
    Encoded split: inputs (batch, 18, time), normalized targets (batch, 14,
    time), physical x, v, a (batch, 14, time), irregularity (batch, 4, time),
    residual blocks and optional weight factors (batch, 10).
    """

    inputs: np.ndarray
    targets: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    irregularity: np.ndarray
    blocks: ResidualBlocks
    weights: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.inputs)

    def take(self, index) -> "TrainingData":
        return TrainingData(
            self.inputs[index],
            self.targets[index],
            self.x[index],
            self.v[index],
            self.a[index],
            self.irregularity[index],
            self.blocks.take(index),
            None if self.weights is None else self.weights[index],
        )


def prepare_data(container, stats: NormStats, weights=None) -> TrainingData:
    x, v, a = channels_first(container)
    if weights is not None and len(weights) != container.count:
        raise ValidationError(
            "{} weight factor rows for {} pairs".format(len(weights), container.count)
        )
    base = container.base_parameters()
    return TrainingData(
        inputs=encode_input(container.irregularity, container.params, stats),
        targets=normalize(x, stats.x_mean, stats.x_std, axis=1),
        x=x,
        v=v,
        a=a,
        irregularity=np.ascontiguousarray(container.irregularity.transpose(0, 2, 1)),
        blocks=ResidualBlocks.from_params(base, container.params),
        weights=None if weights is None else np.asarray(weights, dtype=float),
    )


def _scale(mean, std):
    return np.where(constant_channels(mean, std), 1.0, std)


class Objective:
    """Training loss of one mode on a batch of `TrainingData`."""

    def __init__(self, config: LossConfig, stats: NormStats, dt):
        self.config = config
        self.dt = dt
        self.x_scale = _scale(stats.x_mean, stats.x_std)
        constant = constant_channels(stats.x_mean, stats.x_std)
        self.x_shift = np.where(constant, 0.0, stats.x_mean)
        self.v_scale = _scale(stats.v_mean, stats.v_std)
        self.a_scale = _scale(stats.a_mean, stats.a_std)

    def physical(self, pred):
        return pred * self.x_scale[None, :, None] + self.x_shift[None, :, None]

    def components(self, pred, batch: TrainingData) -> dict:
        mode = self.config.mode
        components = {"data": data_loss(pred, batch.targets, self.dt)}
        if mode in ("plain_ode", "weighted_ode"):
            if mode == "weighted_ode" and batch.weights is None:
                raise ValidationError("Weighted ODE loss needs weight factors")

            def residual_fn(x, v, a):
                irre = trim_series(batch.irregularity, TRIM)
                return vehicle_residual(x, v, a, irre, batch.blocks)

            components["ode"] = ode_residual_loss(
                self.physical(pred),
                self.dt,
                residual_fn,
                weights=batch.weights if mode == "weighted_ode" else None,
                eta=self.config.eta,
            )
        elif mode == "direct_deriv":
            components["deriv"] = direct_derivative_loss(
                self.physical(pred),
                batch.v,
                batch.a,
                self.dt,
                self.v_scale,
                self.a_scale,
            )
        return components

    def __call__(self, model: FnoModel, batch: TrainingData):
        pred = model(batch.inputs)
        components = self.components(pred, batch)
        loss = total_loss(self.config, components)
        return loss, {name: float(value.item()) for name, value in components.items()}


def dataset_loss(model, objective, data: TrainingData, batch_size=64) -> float:
    """Mean loss over a whole split (weighted by batch size)."""
    total = 0.0
    for start in range(0, len(data), batch_size):
        batch = data.take(slice(start, start + batch_size))
        loss, _ = objective(model, batch)
        total += loss.item() * len(batch)
    return total / len(data)


@dataclass
class TrainResult:
    model: FnoModel
    history: list = field(default_factory=list)
    initial_loss: float = float("nan")
    last_checkpoint: Optional[str] = None
    best_checkpoint: Optional[str] = None


def write_loss_curve(path, history):
    with open(path, "w") as f:
        f.write("# epoch lr train_loss val_x_pct val_v_pct val_a_pct\n")
        for row in history:
            f.write(
                "{} {:.6e} {:.10e} {:.6e} {:.6e} {:.6e}\n".format(
                    row["epoch"],
                    row["lr"],
                    row["train_loss"],
                    row["val_x"],
                    row["val_v"],
                    row["val_a"],
                )
            )


def train(
    model: FnoModel,
    container,
    stats: NormStats,
    loss_config: LossConfig,
    config: TrainConfig,
    weights=None,
) -> TrainResult:
    """
    Trains `model` on the training split of `container`.

    Every epoch the training pairs are shuffled with a generator seeded by
    (seed, epoch), the learning rate follows the step decay schedule and the
    relative L2 errors of the validation split are recorded. The last and the
    best (lowest mean validation error) checkpoints hold the optimizer state,
    so a run started with `resume` continues bit-exactly.

    Parameters
    ----------
    model: FnoModel
        Initialized model; replaced by the stored state when resuming.
    container: DatasetContainer
    stats: NormStats
        Statistics of the training split.
    loss_config: LossConfig
    config: TrainConfig
    weights: WeightFactors
        Needed by the weighted ODE loss; rows follow the records of `container`.
    """
    train_split, val_split = container.train(), container.val()
    if train_split.count == 0:
        raise ValidationError("Training split is empty")
    factors = None if weights is None else np.asarray(weights.values)
    train_data = prepare_data(
        train_split, stats, None if factors is None else factors[: container.n_train]
    )
    val_data = prepare_data(val_split, stats) if val_split.count else None
    objective = Objective(loss_config, stats, container.dt_out)
    optimizer = Adam(model.named_parameters(), config.beta1, config.beta2, config.eps)

    os.makedirs(config.output, exist_ok=True)
    last_path = os.path.join(config.output, LAST_CHECKPOINT)
    best_path = os.path.join(config.output, BEST_CHECKPOINT)
    history = []
    start_epoch = 0
    best = float("inf")
    if config.resume and os.path.isfile(last_path):
        checkpoint = load_checkpoint(last_path)
        model.load_arrays(checkpoint.model.state_arrays())
        optimizer.load_arrays(checkpoint.optimizer)
        history = checkpoint.metadata["history"]
        start_epoch = checkpoint.metadata["epoch"]
        best = checkpoint.metadata["best"]
        logger.info("Resuming from %s at epoch %d", last_path, start_epoch)

    result = TrainResult(model, history, last_checkpoint=last_path)
    result.initial_loss = dataset_loss(model, objective, train_data)
    logger.info(
        "Training %s for %d epochs on %d pairs, initial loss %.6e",
        loss_config.mode,
        config.epochs,
        len(train_data),
        result.initial_loss,
    )

    def checkpoint_metadata(epoch):
        return {
            "epoch": epoch,
            "history": history,
            "best": best,
            "loss": asdict(loss_config),
            "train": asdict(config),
        }

    progress = ProgressLine("Training", config.epochs - start_epoch)
    for epoch in range(start_epoch, config.epochs):
        rng = np.random.default_rng([config.seed, epoch])
        order = rng.permutation(len(train_data))
        lr = config.learning_rate(epoch)
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = train_data.take(order[start : start + config.batch_size])
            model.zero_grad()
            loss, parts = objective(model, batch)
            value = loss.item()
            if not np.isfinite(value):
                raise NumericalAbort(
                    "Non-finite loss {} ({}) at epoch {}; "
                    "last good checkpoint: {}".format(
                        value, parts, epoch, last_path if epoch else "none"
                    )
                )
            backward(loss)
            optimizer.step(lr)
            total += value * len(batch)
        row = {"epoch": epoch, "lr": lr, "train_loss": total / len(train_data)}
        if val_data is not None:
            pred = predict(model, val_data.inputs, stats)
            report = evaluate_predictions(
                pred, val_data.x, val_data.v, val_data.a, container.dt_out
            )
            row.update(zip(("val_x", "val_v", "val_a"), report.summary))
            score = float(np.mean(report.summary))
        else:
            row.update(val_x=float("nan"), val_v=float("nan"), val_a=float("nan"))
            score = row["train_loss"]
        history.append(row)
        if score < best:
            best = score
            save_checkpoint(
                best_path,
                model,
                stats,
                optimizer.state_arrays(),
                checkpoint_metadata(epoch + 1),
            )
            result.best_checkpoint = best_path
        save_checkpoint(
            last_path,
            model,
            stats,
            optimizer.state_arrays(),
            checkpoint_metadata(epoch + 1),
        )
        write_loss_curve(os.path.join(config.output, LOSS_CURVE), history)
        logger.info(
            "Epoch %d: lr %.3e, loss %.6e, val X/V/A %.3f/%.3f/%.3f %%",
            epoch,
            lr,
            row["train_loss"],
            row["val_x"],
            row["val_v"],
            row["val_a"],
        )
        progress.update(epoch + 1 - start_epoch)
    progress.finish()
    if result.best_checkpoint is None and os.path.isfile(best_path):
        result.best_checkpoint = best_path
    return result

