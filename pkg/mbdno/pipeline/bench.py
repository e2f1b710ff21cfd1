import logging
import time

import numpy as np

from ..excitation.profile import WheelExcitation, synthesize
from ..fno.encoding import encode_input
from ..integrate.config import IntegratorConfig
from ..integrate.trajectory import integrate
from ..mbd.codes import build_system
from ..utils.checks import check_int

logger = logging.getLogger(__name__)


def timing_keys(batch_sizes):
    """Keys of a timing table, in output order."""
    keys = ["integration_s", "inference_s", "speedup"]
    keys += ["per_sample_s.batch_{}".format(n) for n in batch_sizes]
    return keys


def _best_of(repeats, fn):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def benchmark(
    model,
    stats,
    params,
    psd,
    integrator_config: IntegratorConfig = None,
    batch_sizes=(1, 64),
    repeats=3,
    seed=0,
    dx=0.05,
) -> dict:
    """
    Wall-clock of one forward pass over a window against the integration of
    the same window.

    The integration is timed once, inference takes the best of `repeats`
    runs per batch size. Returns a dict with the keys of `timing_keys`.
    """
    check_int("repeats", repeats, 1)
    if integrator_config is None:
        integrator_config = IntegratorConfig()
    system = build_system(params)
    profile = synthesize(psd, params.beam.length, dx, seed)
    excitation = WheelExcitation(profile, system.wheel_start, system.speed)

    start = time.perf_counter()
    record = integrate(system, excitation, integrator_config)
    integration = time.perf_counter() - start

    single = encode_input(record.irregularity, params.varied_vector(), stats)
    timings = {"integration_s": integration}
    for n in batch_sizes:
        check_int("batch size", n, 1)
        inputs = np.repeat(single, n, axis=0)
        elapsed = _best_of(repeats, lambda: model(inputs))
        timings["per_sample_s.batch_{}".format(n)] = elapsed / n
        if n == 1:
            timings["inference_s"] = elapsed
    if "inference_s" not in timings:
        timings["inference_s"] = _best_of(repeats, lambda: model(single))
    timings["speedup"] = integration / timings["inference_s"]
    logger.info(
        "Integration %.3f s, inference %.4f s, speedup %.1f",
        timings["integration_s"],
        timings["inference_s"],
        timings["speedup"],
    )
    return {key: timings[key] for key in timing_keys(batch_sizes)}


def write_timings(path, timings: dict):
    with open(path, "w") as f:
        f.write("# key seconds_or_ratio\n")
        for key, value in timings.items():
            f.write("{} {:.6e}\n".format(key, value))
