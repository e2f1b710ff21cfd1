import logging
import os
import time
from dataclasses import replace

from ..errors import ValidationError
from ..fno.model import FnoConfig, init_parameters, load_checkpoint
from ..losses.objectives import LossConfig
from .evaluate import evaluate
from .train import TrainConfig, train

logger = logging.getLogger(__name__)

# Algorithm number -> (loss mode, model depth)
ALGORITHMS = {
    1: ("data_only", 3),
    2: ("plain_ode", 3),
    3: ("weighted_ode", 3),
    4: ("direct_deriv", 3),
    5: ("direct_deriv", 5),
}

ALGORITHM_NAMES = {
    1: "FNO",
    2: "FNO + ODE loss",
    3: "FNO + weighted ODE loss",
    4: "FNO + derivative loss",
    5: "FNO + derivative loss, deep",
}


def algorithm_config(number, model: FnoConfig, loss: LossConfig):
    """(FnoConfig, LossConfig) of one algorithm derived from base settings."""
    if number not in ALGORITHMS:
        raise ValidationError(
            "Unknown algorithm {}, expected one of {}".format(
                number, sorted(ALGORITHMS)
            )
        )
    mode, depth = ALGORITHMS[number]
    return replace(model, depth=depth), replace(loss, mode=mode)


def ordering_checks(reports: dict) -> dict:
    """
    Expected ordering of the second-derivative errors, for the algorithms
    present in `reports` (number -> EvalReport).
    """
    a = {k: r.aggregate("a") for k, r in reports.items()}
    checks = {}
    if 1 in a and 2 in a:
        checks["a_err(1) > a_err(2)"] = a[1] > a[2]
    if 2 in a and 4 in a:
        checks["a_err(2) > a_err(4)"] = a[2] > a[4]
    if 1 in a and 4 in a:
        checks["a_err(4) < 0.2 a_err(1)"] = a[4] < 0.2 * a[1]
    return checks


def write_ablation(path, reports: dict, checks: dict):
    with open(path, "w") as f:
        f.write("# algorithm x_rel_l2_pct v_rel_l2_pct a_rel_l2_pct train_s\n")
        for number in sorted(reports):
            report = reports[number]
            f.write(
                "{} {:.6e} {:.6e} {:.6e} {:.3f}\n".format(
                    number, *report.summary, report.timings.get("train_s", 0.0)
                )
            )
        for name, passed in checks.items():
            f.write("# {}: {}\n".format(name, "pass" if passed else "FAIL"))


def run_ablation(
    container,
    stats,
    model_config: FnoConfig,
    loss_config: LossConfig,
    train_config: TrainConfig,
    algorithms=(1, 2, 3, 4, 5),
    weights=None,
    output="ablation",
):
    """
    Trains and evaluates every algorithm with the same dataset, seed and
    schedule. Each run writes to `<output>/alg<k>/`; the comparison is
    written to `<output>/ablation.txt`.

    Returns (reports by algorithm number, ordering checks).
    """
    configs = {k: algorithm_config(k, model_config, loss_config) for k in algorithms}
    needs_weights = any(loss.mode == "weighted_ode" for _, loss in configs.values())
    if needs_weights and weights is None:
        raise ValidationError("Algorithm 3 needs weight factors")
    os.makedirs(output, exist_ok=True)
    val = container.val() if container.val().count else container.train()
    reports = {}
    for number, (model_cfg, loss_cfg) in configs.items():
        logger.info("Algorithm %d: %s", number, ALGORITHM_NAMES[number])
        model = init_parameters(model_cfg, train_config.seed)
        run_config = replace(
            train_config,
            output=os.path.join(output, "alg{}".format(number)),
            resume=False,
        )
        start = time.perf_counter()
        result = train(model, container, stats, loss_cfg, run_config, weights)
        elapsed = time.perf_counter() - start
        if result.best_checkpoint is not None:
            model = load_checkpoint(result.best_checkpoint).model
        report = evaluate(model, stats, val)
        report.timings["train_s"] = elapsed
        report.write(os.path.join(run_config.output, "channel_errors.txt"))
        reports[number] = report
    checks = ordering_checks(reports)
    for name, passed in checks.items():
        logger.info("Ordering %s: %s", name, "pass" if passed else "FAIL")
    write_ablation(os.path.join(output, "ablation.txt"), reports, checks)
    return reports, checks
