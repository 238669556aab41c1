import numpy as np
import pytest

from ecdtransfer import synth, tmae
from ecdtransfer.data import Dataset, FEATURES


def make_dataset(X, y, country=None, region=None, quintile=None, names=None, row_id=None):
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    names = names or (FEATURES if X.shape[1] == len(FEATURES) else tuple(f"x{j}" for j in range(X.shape[1])))
    return Dataset(
        X,
        np.asarray(y, dtype=int),
        np.full(n, "A", dtype=object) if country is None else np.asarray(country, dtype=object),
        np.full(n, "R", dtype=object) if region is None else np.asarray(region, dtype=object),
        np.ones(n, dtype=int) if quintile is None else quintile,
        np.arange(n) if row_id is None else np.asarray(row_id),
        tuple(names),
    )


@pytest.fixture(scope="session")
def small_cfg():
    return synth.SynthConfig(n_countries=4, rows_per_country=300, seed=7)


@pytest.fixture(scope="session")
def small_data(small_cfg):
    return synth.synth_generate(small_cfg)


@pytest.fixture(scope="session")
def small_ckpt(small_data):
    pool = small_data.where_country(["C00", "C01"])
    return tmae.pretrain(pool.X, tmae.PretrainConfig(epochs=5, hidden_dims=(32, 8), seed=3))


@pytest.fixture(scope="session")
def benchmark_cfg():
    return synth.default_benchmark(seed=42, shift=0.5)


@pytest.fixture(scope="session")
def benchmark(benchmark_cfg):
    return synth.synth_generate(benchmark_cfg)


@pytest.fixture(scope="session")
def benchmark_ckpt(benchmark_cfg, benchmark):
    source, _ = synth.regional_partition(benchmark_cfg)
    return tmae.pretrain(benchmark.where_country(source).X, tmae.PretrainConfig())
