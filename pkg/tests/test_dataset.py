import logging
import os

import numpy as np
import pytest
from conftest import small_integrator, small_parameters

from mbdno.autodiff.archive import save_archive
from mbdno.dataset.container import DatasetContainer, sidecar_path
from mbdno.dataset.generate import (
    RESIDUAL_LIMIT,
    cached_dataset,
    generate_dataset,
    pair_rng,
)
from mbdno.dataset.norm import (
    NormStats,
    denormalize,
    denormalize_record,
    normalize,
    normalize_record,
)
from mbdno.dataset.sampler import ParamSampler
from mbdno.dataset.sidecar import load_sidecar, save_sidecar
from mbdno.dataset.weights import (
    WeightFactors,
    compute_weight_factors,
    weight_factors_for_pair,
)
from mbdno.errors import ValidationError
from mbdno.mbd.params import load_parameters
from mbdno.utils.cache import FsCache


def tiny_dataset(psd, count=1, seed=3, workers=1, low=0.8, high=1.2):
    base = small_parameters()
    sampler = ParamSampler(base.varied_vector(), low, high)
    config = small_integrator(duration=0.01)
    return generate_dataset(
        sampler, psd, config, count, seed, base, n_train=count, workers=workers
    )


def test_sampler(rng):
    nominal = small_parameters().varied_vector()
    sampler = ParamSampler(nominal, 0.8, 1.2)
    draws = np.array([sampler.sample(rng) for _ in range(200)])
    assert np.all(draws >= 0.8 * nominal)
    assert np.all(draws <= 1.2 * nominal)
    assert np.allclose(sampler.lower, 0.8 * nominal)

    collapsed = ParamSampler(nominal, 1.0, 1.0)
    assert np.array_equal(collapsed.sample(rng), nominal)

    with pytest.raises(ValidationError, match="low <= high"):
        ParamSampler(nominal, 1.2, 0.8)
    with pytest.raises(ValidationError, match="13 entries"):
        ParamSampler(nominal[:3])


def test_pair_rng():
    a = pair_rng(0, 1, 0).uniform(size=3)
    assert np.array_equal(a, pair_rng(0, 1, 0).uniform(size=3))
    assert not np.array_equal(a, pair_rng(0, 2, 0).uniform(size=3))
    assert not np.array_equal(a, pair_rng(0, 1, 1).uniform(size=3))


def test_generated_dataset(dataset):
    assert dataset.count == 6
    assert dataset.n_train == 4
    assert dataset.samples == 201
    assert dataset.dt_out == pytest.approx(2e-4)
    assert dataset.duration == pytest.approx(0.04)
    assert dataset.seed == 7
    assert dataset.x.shape == (6, 201, 14)
    assert dataset.irregularity.shape == (6, 201, 4)
    assert np.all(dataset.residual <= RESIDUAL_LIMIT)

    nominal = small_parameters().varied_vector()
    assert np.all(dataset.params >= 0.8 * nominal * (1 - 1e-12))
    assert np.all(dataset.params <= 1.2 * nominal * (1 + 1e-12))
    assert len(np.unique(dataset.params[:, 0])) == 6

    assert dataset.train().count == 4
    assert dataset.val().count == 2
    assert dataset.split("all").count == 6
    assert np.array_equal(dataset.val().x, dataset.x[4:])
    with pytest.raises(ValidationError, match="split"):
        dataset.split("test")

    assert dataset.base_parameters() == small_parameters()
    pair = dataset.pair_parameters(2)
    assert np.array_equal(pair.varied_vector(), dataset.params[2])
    record = dataset.record(2)
    assert np.array_equal(record.x, dataset.x[2])
    assert record.times[-1] == pytest.approx(0.04)


def test_container_round_trip(dataset):
    dataset.write("data.mbdds")
    loaded = DatasetContainer.read("data.mbdds")
    assert loaded.count == dataset.count
    assert loaded.n_train == dataset.n_train
    assert loaded.dt_out == dataset.dt_out
    assert loaded.channels == dataset.channels
    assert loaded.param_names == dataset.param_names
    assert loaded.base_params == dataset.base_params
    assert loaded.records.tobytes() == dataset.records.tobytes()

    loaded.write("copy.mbdds")
    with open("data.mbdds", "rb") as f1, open("copy.mbdds", "rb") as f2:
        assert f1.read() == f2.read()


def test_container_rejects_damaged_files(dataset):
    dataset.write("data.mbdds")
    with open("data.mbdds", "rb") as f:
        data = f.read()

    with open("short.mbdds", "wb") as f:
        f.write(data[:-8])
    with pytest.raises(ValidationError, match="truncated"):
        DatasetContainer.read("short.mbdds")

    with open("other.mbdds", "wb") as f:
        f.write(b"NOTADATA" + data[8:])
    with pytest.raises(ValidationError, match="not a dataset container"):
        DatasetContainer.read("other.mbdds")


def test_generation_is_deterministic(psd):
    first = tiny_dataset(psd, count=2)
    second = tiny_dataset(psd, count=2)
    assert first.header_bytes() == second.header_bytes()
    assert first.records.tobytes() == second.records.tobytes()

    other = tiny_dataset(psd, count=2, seed=4)
    assert not np.array_equal(first.params, other.params)


def test_generation_with_workers(psd):
    serial = tiny_dataset(psd, count=2)
    parallel = tiny_dataset(psd, count=2, workers=2)
    assert serial.records.tobytes() == parallel.records.tobytes()


def test_collapsed_ranges(psd):
    data = tiny_dataset(psd, count=2, low=1.0, high=1.0)
    nominal = small_parameters().varied_vector()
    assert np.array_equal(data.params, np.stack([nominal, nominal]))
    # Same parameters, different irregularity
    assert not np.array_equal(data.irregularity[0], data.irregularity[1])


def test_generation_validation(psd):
    base = small_parameters()
    sampler = ParamSampler(base.varied_vector())
    config = small_integrator(duration=0.01)
    with pytest.raises(ValidationError, match="count"):
        generate_dataset(sampler, psd, config, 0, 0, base)
    with pytest.raises(ValidationError, match="n_train"):
        generate_dataset(sampler, psd, config, 2, 0, base, n_train=3)


def test_cached_dataset(psd):
    base = small_parameters()
    sampler = ParamSampler(base.varied_vector())
    config = small_integrator(duration=0.01)
    path = cached_dataset("cache", sampler, psd, config, 1, 0, base)
    assert os.path.isfile(path)
    mtime = os.path.getmtime(path)
    assert cached_dataset("cache", sampler, psd, config, 1, 0, base) == path
    assert os.path.getmtime(path) == mtime
    assert cached_dataset("cache", sampler, psd, config, 1, 1, base) != path
    assert DatasetContainer.read(path).count == 1


def test_fs_cache():
    calls = []

    def build(path):
        calls.append(path)
        with open(path, "w") as f:
            f.write("x")

    cache = FsCache("cache", "1.0")
    a = cache.ensure("a", "txt", build)
    assert cache.ensure("a", "txt", build) == a
    b = cache.ensure("b", "txt", build)
    assert len(calls) == 2
    assert calls[0] == a + ".partial"

    cache = FsCache("cache", "1.0")
    assert cache.ensure("a", "txt", cache_must_hit) == a
    assert os.path.isfile(a)
    assert os.path.isfile(b)
    assert FsCache("cache", "1.1").path_for("a", "txt") != a


def cache_must_hit(path):
    raise AssertionError("unexpected build of {}".format(path))


def test_fs_cache_failed_build_leaves_no_entry():
    def build(path):
        with open(path, "w") as f:
            f.write("half")
        raise ValueError("interrupted")

    cache = FsCache("cache", "1.0")
    with pytest.raises(ValueError, match="interrupted"):
        cache.ensure("a", "txt", build)
    assert os.listdir("cache") == []


def test_norm_stats(dataset, stats):
    train = dataset.train()
    x = normalize(train.x, stats.x_mean, stats.x_std)
    assert np.abs(x.mean(axis=(0, 1))).max() < 1e-10
    assert np.allclose(x.std(axis=(0, 1)), 1.0)
    p = normalize(train.params, stats.param_mean, stats.param_std)
    assert np.abs(p.mean(axis=0)).max() < 1e-10

    assert np.allclose(denormalize(x, stats.x_mean, stats.x_std), train.x)
    record = dataset.record(5)
    restored = denormalize_record(normalize_record(record, stats), stats)
    assert np.allclose(restored.a, record.a)
    assert np.allclose(restored.params, record.params)


def test_norm_stats_use_train_split_only(dataset, stats):
    assert np.allclose(stats.x_mean, dataset.x[:4].mean(axis=(0, 1)))
    assert np.allclose(stats.param_std, dataset.params[:4].std(axis=0))
    assert not np.allclose(stats.x_mean, dataset.x.mean(axis=(0, 1)))


def test_constant_channels_pass_through(caplog):
    values = np.array([[1.0, 5.0], [3.0, 5.0]])
    mean, std = values.mean(axis=0), values.std(axis=0)
    with caplog.at_level(logging.WARNING):
        normalized = normalize(values, mean, std)
    assert "Constant channels [1]" in caplog.text
    assert np.allclose(normalized[:, 0], [-1.0, 1.0])
    assert np.array_equal(normalized[:, 1], values[:, 1])
    assert np.allclose(denormalize(normalized, mean, std), values)


def test_norm_stats_arrays(stats):
    arrays = stats.to_arrays()
    assert "stats.x_mean" in arrays
    restored = NormStats.from_arrays(arrays)
    assert np.array_equal(restored.a_std, stats.a_std)
    del arrays["stats.a_std"]
    with pytest.raises(ValidationError, match="a_std"):
        NormStats.from_arrays(arrays)


def oscillator_pair():
    t = np.linspace(0, 2 * np.pi, 400)[:, None]
    return np.cos(t), -np.sin(t), -np.cos(t)


def test_weight_factor_oracle():
    m, c, k, r = 2.0, 0.5, 8.0, 0.02
    x, v, a = oscillator_pair()

    def residual_fn(x, v, a):
        return m * a + c * v + k * x

    phi = weight_factors_for_pair(x, v, a, residual_fn, r, np.random.default_rng(5))
    rng = np.random.default_rng(5)
    noise_x = rng.normal(size=x.shape) * np.sqrt(r * x.var(axis=0))
    noise_v = rng.normal(size=v.shape) * np.sqrt(r * v.var(axis=0))
    noise_a = rng.normal(size=a.shape) * np.sqrt(r * a.var(axis=0))
    exact = residual_fn(x, v, a)
    expected = np.abs(exact + m * noise_a + c * noise_v + k * noise_x).max(axis=0)
    assert phi.shape == (1,)
    assert phi == pytest.approx(expected)


def test_weight_factor_validation():
    x, v, a = oscillator_pair()

    def residual_fn(x, v, a):
        return a + x

    rng = np.random.default_rng(0)
    with pytest.raises(ValidationError, match="positive"):
        weight_factors_for_pair(x, v, a, residual_fn, 0.0, rng)
    with pytest.raises(ValidationError, match="positive"):
        weight_factors_for_pair(x, v, a, residual_fn, -0.1, rng)
    exact = weight_factors_for_pair(x, v, a, residual_fn, 0.02, rng, bypass=True)
    assert exact[0] < 1e-12


def test_dataset_weight_factors(dataset):
    factors = compute_weight_factors(dataset, r=0.02, seed=1)
    assert factors.values.shape == (6, 10)
    assert np.all(factors.values > 0)
    assert factors.r == 0.02
    again = compute_weight_factors(dataset, r=0.02, seed=1)
    assert np.array_equal(factors.values, again.values)
    # Wheelset equations carry the stiff contact forces
    assert np.all(factors.values[:, 6:10].min(axis=1) >= 10 * factors.values[:, 1])

    exact = compute_weight_factors(dataset, r=0.02, seed=1, bypass=True)
    assert np.all(exact.values < 1e-3 * factors.values)


def test_weight_factor_ordering_on_shipped_vehicle(psd):
    base = load_parameters()
    sampler = ParamSampler(base.varied_vector(), 1.0, 1.0)
    config = small_integrator(duration=0.1, stride=10)
    data = generate_dataset(sampler, psd, config, 2, 11, base, n_train=2)
    values = compute_weight_factors(data, r=0.02, seed=2).values
    assert values.shape == (2, 10)
    wheelsets = values[:, 6:10]
    assert np.all(wheelsets.min(axis=1) >= 10 * values[:, 1])


def test_sidecar(stats):
    path = sidecar_path("data.mbdds")
    assert path == "data.mbdds.stats"
    save_sidecar(path, stats)
    loaded, weights = load_sidecar(path)
    assert weights is None
    assert np.array_equal(loaded.x_std, stats.x_std)

    factors = WeightFactors(values=np.arange(1.0, 21.0).reshape(2, 10), r=0.05)
    save_sidecar(path, stats, factors)
    loaded, weights = load_sidecar(path)
    assert np.array_equal(weights.values, factors.values)
    assert weights.r == 0.05
    assert np.array_equal(weights.take(1), factors.values[1])

    with pytest.raises(ValidationError, match="does not exist"):
        load_sidecar("missing.stats")
    save_archive("other.stats", {"a": np.zeros(2)}, {"kind": "something"})
    with pytest.raises(ValidationError, match="not a dataset sidecar"):
        load_sidecar("other.stats")
