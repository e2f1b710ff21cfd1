import logging
import os
import shutil
import sys

import click
import numpy as np

from ..autodiff.gradcheck import gradcheck
from ..autodiff.tensor import Tensor
from ..dataset.container import DatasetContainer, sidecar_path
from ..dataset.generate import cached_dataset, generate_dataset
from ..dataset.norm import compute_norm_stats
from ..dataset.sidecar import load_sidecar, save_sidecar
from ..dataset.weights import compute_weight_factors
from ..errors import NumericalAbort, ValidationError
from ..excitation.profile import WheelExcitation, synthesize
from ..fno.model import FnoConfig, init_parameters, load_checkpoint
from ..integrate.trajectory import OUTPUT_CHANNELS, integrate
from ..mbd.codes import build_system
from . import config as cfg
from .ablation import ALGORITHMS, run_ablation
from .bench import benchmark, write_timings
from .evaluate import evaluate, write_overlays
from .train import train

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _load_dataset(config, path=None):
    path = path or config["dataset"]["path"]
    if not os.path.isfile(path):
        raise ValidationError("Dataset '{}' does not exist".format(path))
    container = DatasetContainer.read(path)
    stats, weights = load_sidecar(sidecar_path(path))
    return container, stats, weights


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="Pipeline configuration file (YAML).",
)
@click.option(
    "--set",
    "overrides",
    multiple=True,
    metavar="SECTION.KEY=VALUE",
    help="Override one configuration value.",
)
@click.option("--verbose", is_flag=True, help="Log debug messages.")
@click.pass_context
def cli(ctx, config_path, overrides, verbose):
    """Dataset generation, training and evaluation of the vehicle-track operator."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = cfg.load_config(config_path, overrides)


@cli.command()
@click.pass_obj
def generate(config):
    """Generate the dataset and its normalization statistics."""
    dataset = config["dataset"]
    params = cfg.base_parameters(config)
    arguments = (
        cfg.param_sampler(config, params),
        cfg.psd_model(config),
        cfg.integrator_config(config),
        dataset["n_train"] + dataset["n_val"],
        dataset["seed"],
        params,
    )
    options = dict(
        n_train=dataset["n_train"],
        dx=config["excitation"]["dx"],
        workers=dataset["workers"],
    )
    if dataset["cache_dir"]:
        cached = cached_dataset(dataset["cache_dir"], *arguments, **options)
        shutil.copyfile(cached, dataset["path"])
        container = DatasetContainer.read(dataset["path"])
    else:
        container = generate_dataset(
            *arguments, max_retries=dataset["max_retries"], **options
        )
        container.write(dataset["path"])
    save_sidecar(sidecar_path(dataset["path"]), compute_norm_stats(container))
    click.echo("Dataset written to {}".format(dataset["path"]))


@cli.command()
@click.pass_obj
def weights(config):
    """Compute the ODE magnitude weight factors of the dataset."""
    container, stats, _ = _load_dataset(config)
    factors = compute_weight_factors(
        container, config["weights"]["r"], config["weights"]["seed"]
    )
    path = sidecar_path(config["dataset"]["path"])
    save_sidecar(path, stats, factors)
    click.echo("Weight factors written to {}".format(path))


@cli.command("train")
@click.pass_obj
def train_command(config):
    """Train the operator."""
    train_config = cfg.train_config(config)
    model_config = cfg.fno_config(config)
    container, stats, factors = _load_dataset(config)
    model = init_parameters(model_config, train_config.seed)
    result = train(
        model, container, stats, cfg.loss_config(config), train_config, factors
    )
    click.echo(
        "Checkpoints written to {} (best: {})".format(
            result.last_checkpoint, result.best_checkpoint
        )
    )


@cli.command("eval")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.option("--split", type=click.Choice(["train", "val", "all"]), default="val")
@click.option("--overlay", multiple=True, type=int, default=(0,))
@click.option("--output", type=click.Path(file_okay=False))
@click.pass_obj
def eval_command(config, checkpoint, split, overlay, output):
    """Relative L2 errors of a trained checkpoint."""
    output = output or config["train"]["output"]
    checkpoint = checkpoint or os.path.join(config["train"]["output"], "best.ckpt")
    container, _, _ = _load_dataset(config)
    state = load_checkpoint(checkpoint)
    if state.stats is None:
        raise ValidationError("Checkpoint '{}' has no statistics".format(checkpoint))
    subset = container.split(split)
    report = evaluate(state.model, state.stats, subset)
    os.makedirs(output, exist_ok=True)
    report.write(os.path.join(output, "channel_errors.txt"))
    write_overlays(output, state.model, state.stats, subset, overlay)
    click.echo(
        "Relative L2 (%): X {:.3f}, V {:.3f}, A {:.3f}".format(*report.summary)
    )


@cli.command()
@click.option("--algorithms", default="1,2,3,4,5", help="Comma-separated list.")
@click.option("--output", type=click.Path(file_okay=False), default="ablation")
@click.pass_obj
def ablate(config, algorithms, output):
    """Train and compare the loss variants."""
    try:
        numbers = tuple(int(k) for k in algorithms.split(","))
    except ValueError:
        raise ValidationError("Invalid algorithm list '{}'".format(algorithms))
    for number in numbers:
        if number not in ALGORITHMS:
            raise ValidationError("Unknown algorithm {}".format(number))
    container, stats, factors = _load_dataset(config)
    reports, checks = run_ablation(
        container,
        stats,
        cfg.fno_config(config),
        cfg.loss_config(config),
        cfg.train_config(config),
        numbers,
        factors,
        output,
    )
    for number, report in sorted(reports.items()):
        click.echo(
            "Algorithm {}: X {:.3f} %, V {:.3f} %, A {:.3f} %".format(
                number, *report.summary
            )
        )
    for name, passed in checks.items():
        click.echo("{}: {}".format(name, "pass" if passed else "FAIL"))


@cli.command()
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", type=click.Path(dir_okay=False), default="bench.txt")
@click.pass_obj
def bench(config, checkpoint, output):
    """Time inference against integration of the same window."""
    checkpoint = checkpoint or os.path.join(config["train"]["output"], "best.ckpt")
    state = load_checkpoint(checkpoint)
    if state.stats is None:
        raise ValidationError("Checkpoint '{}' has no statistics".format(checkpoint))
    timings = benchmark(
        state.model,
        state.stats,
        cfg.base_parameters(config),
        cfg.psd_model(config),
        cfg.integrator_config(config),
        tuple(config["bench"]["batch_sizes"]),
        config["bench"]["repeats"],
        dx=config["excitation"]["dx"],
    )
    write_timings(output, timings)
    for key, value in timings.items():
        click.echo("{:28} {:.6e}".format(key, value))


@cli.command("gradcheck")
@click.option("--width", default=4)
@click.option("--modes", default=3)
@click.option("--samples", default=16, help="Time samples of the random input.")
@click.option("--entries", default=8, help="Checked entries per parameter.")
@click.option("--tolerance", default=1e-5)
@click.pass_obj
def gradcheck_command(config, width, modes, samples, entries, tolerance):
    """Compare model gradients with central differences."""
    model_config = FnoConfig(
        width=width,
        depth=config["model"]["depth"],
        modes=modes,
        projection_width=width,
        activation=config["model"]["activation"],
    )
    model_config.check_samples(samples)
    model = init_parameters(model_config, 0)
    rng = np.random.default_rng(0)
    inputs = Tensor(rng.normal(size=(2, model_config.in_channels, samples)))
    target = rng.normal(size=(2, model_config.out_channels, samples))

    def loss():
        diff = model(inputs) - target
        return (diff * diff).mean()

    errors = gradcheck(loss, model.parameters(), samples=entries)
    worst = max(errors.values())
    for name, error in errors.items():
        click.echo("{:24} {:.3e}".format(name, error))
    if worst > tolerance:
        raise NumericalAbort(
            "Gradient check failed: error {:.3e} > {:.0e}".format(worst, tolerance)
        )


@cli.command()
@click.option("--seed", default=0, help="Irregularity seed.")
@click.option("--output", type=click.Path(dir_okay=False), default="trajectory.txt")
@click.pass_obj
def simulate(config, seed, output):
    """Integrate one nominal trajectory and write it as a column file."""
    params = cfg.base_parameters(config)
    system = build_system(params)
    profile = synthesize(
        cfg.psd_model(config), params.beam.length, config["excitation"]["dx"], seed
    )
    excitation = WheelExcitation(profile, system.wheel_start, system.speed)
    record = integrate(system, excitation, cfg.integrator_config(config))
    header = ["time"]
    for prefix in ("x", "v", "a"):
        header += ["{}.{}".format(prefix, name) for name in OUTPUT_CHANNELS]
    header += ["irre_{}".format(j + 1) for j in range(4)]
    np.savetxt(
        output,
        np.column_stack(
            [record.times, record.x, record.v, record.a, record.irregularity]
        ),
        header=" ".join(header),
    )
    click.echo(
        "Trajectory written to {} (residual ratio {:.3e})".format(
            output, record.residual_ratio
        )
    )


def main(args=None) -> int:
    """Runs the command line; returns the exit code."""
    try:
        cli.main(args=args, prog_name="mbdno", standalone_mode=False)
    except ValidationError as e:
        logger.error("%s", e)
        return EXIT_VALIDATION
    except NumericalAbort as e:
        logger.error("%s", e)
        return EXIT_NUMERICAL
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
