import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from ..errors import NumericalAbort, ValidationError
from ..excitation.profile import WheelExcitation, synthesize
from ..integrate.config import IntegratorConfig
from ..integrate.trajectory import integrate
from ..mbd.codes import build_system
from ..mbd.params import VehicleTrackParams
from ..utils.cache import FsCache
from ..utils.checks import check_int, check_positive
from ..utils.progress import ProgressLine
from ..version import VERSION
from .container import DatasetContainer
from .sampler import ParamSampler

logger = logging.getLogger(__name__)

# Largest fine-grid residual ratio accepted for a stored pair
RESIDUAL_LIMIT = 1e-4


def pair_rng(seed, index, attempt) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index, attempt]))


def generate_pair(
    index,
    sampler: ParamSampler,
    psd,
    config: IntegratorConfig,
    seed,
    base_params: VehicleTrackParams,
    dx=0.05,
    max_retries=3,
):
    """
    Generates data pair `index`.

    Every attempt draws a fresh parameter vector and irregularity seed from
    a generator seeded by (seed, index, attempt). Attempts aborted by the
    integrator, or whose residual ratio exceeds RESIDUAL_LIMIT, are retried
    up to `max_retries` times.
    """
    for attempt in range(max_retries + 1):
        rng = pair_rng(seed, index, attempt)
        vector = sampler.sample(rng)
        profile_seed = int(rng.integers(2**32))
        params = base_params.with_varied(vector)
        try:
            system = build_system(params)
            profile = synthesize(psd, params.beam.length, dx, profile_seed)
            excitation = WheelExcitation(profile, system.wheel_start, system.speed)
            record = integrate(system, excitation, config, params=vector)
            if not record.residual_ratio <= RESIDUAL_LIMIT:
                raise NumericalAbort(
                    "Residual ratio {:.3e} exceeds {:.0e}".format(
                        record.residual_ratio, RESIDUAL_LIMIT
                    )
                )
            return record
        except NumericalAbort as e:
            logger.warning(
                "Pair %d aborted on attempt %d/%d: %s",
                index,
                attempt + 1,
                max_retries + 1,
                e,
            )
    raise NumericalAbort("Pair {} failed after {} retries".format(index, max_retries))


def _generate_task(task):
    return generate_pair(*task)


def generate_dataset(
    sampler: ParamSampler,
    psd,
    integrator_config: IntegratorConfig,
    count,
    seed,
    base_params: VehicleTrackParams,
    n_train=None,
    dx=0.05,
    workers=1,
    max_retries=3,
) -> DatasetContainer:
    """
    Generates `count` data pairs and collects them in a container.

    Parameters
    ----------
    sampler: ParamSampler
        Distribution of the 13 varied parameters.
    psd: PsdModel
        Target irregularity spectrum.
    integrator_config: IntegratorConfig
    count: int
        Number of pairs, >= 1.
    seed: int
        Master seed; the output is identical for any number of workers.
    base_params: VehicleTrackParams
        Parameters that are not varied (rail, fasteners, geometry).
    n_train: int
        Size of the training split (the first records); all records when None.
    dx: float
        Irregularity sample spacing (m).
    workers: int
        Size of the process pool; 1 generates in the calling process.
    max_retries: int
        Regeneration attempts of an aborted pair.
    """
    check_int("count", count, 1)
    check_int("workers", workers, 1)
    check_int("max_retries", max_retries, 0)
    check_positive("dx", dx)
    if n_train is None:
        n_train = count
    if not 0 <= n_train <= count:
        raise ValidationError(
            "Attribute 'n_train' has to be within [0, {}], not {}".format(
                count, n_train
            )
        )
    logger.info(
        "Generating %d pairs (%d train) with %s, seed %d",
        count,
        n_train,
        integrator_config.scheme,
        seed,
    )
    tasks = [
        (i, sampler, psd, integrator_config, seed, base_params, dx, max_retries)
        for i in range(count)
    ]
    records = []
    progress = ProgressLine("Generating", count)
    if workers == 1:
        for task in tasks:
            records.append(_generate_task(task))
            progress.update(len(records))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for record in pool.map(_generate_task, tasks):
                records.append(record)
                progress.update(len(records))
    progress.finish()
    logger.info(
        "Generated %d pairs, largest residual ratio %.3e",
        count,
        max(r.residual_ratio for r in records),
    )
    return DatasetContainer.from_trajectories(records, n_train, seed, base_params)


def generation_key(
    sampler: ParamSampler, psd, integrator_config, count, seed, base_params, n_train, dx
) -> str:
    """Serialized description of a generation run, used as the cache key."""
    return json.dumps(
        {
            "nominal": sampler.nominal.tolist(),
            "low": sampler.low.tolist(),
            "high": sampler.high.tolist(),
            "psd": [psd.name, list(psd.band), psd.variance()],
            "integrator": asdict(integrator_config),
            "count": count,
            "seed": seed,
            "params": base_params.to_dict(),
            "n_train": n_train,
            "dx": dx,
        },
        sort_keys=True,
    )


def cached_dataset(
    cache_dir,
    sampler,
    psd,
    integrator_config,
    count,
    seed,
    base_params,
    n_train=None,
    dx=0.05,
    workers=1,
) -> str:
    """Path of a dataset in the file cache, generating it on a miss."""
    cache = FsCache(cache_dir, VERSION)
    key = generation_key(
        sampler, psd, integrator_config, count, seed, base_params, n_train, dx
    )

    def build(path):
        container = generate_dataset(
            sampler,
            psd,
            integrator_config,
            count,
            seed,
            base_params,
            n_train=n_train,
            dx=dx,
            workers=workers,
        )
        container.write(path)

    return cache.ensure(key, "mbdds", build)
