"""Acceptance criteria 1-14; each test prints one PASS/FAIL line."""

import time
from pathlib import Path

import numpy as np
import pytest

from ecdtransfer import cli, nn, synth, tmae
from ecdtransfer.baselines import train_logreg
from ecdtransfer.classifier import ClassifierModel, Ensemble
from ecdtransfer.data import Dataset, Standardizer, stratified_holdout
from ecdtransfer.hpo import fairness_objective
from ecdtransfer.metrics import auc, brier, ece
from ecdtransfer.protocols import (
    bootstrap_ci,
    equity_audit,
    fewshot_curve,
    loco_run,
    permutation_importance,
    proxy_divergence,
    sample_complexity_curve,
)

from conftest import make_dataset
from test_metrics import pair_count_auc
from test_nn import mse_closure


@pytest.fixture
def verdict(capsys):
    def report(k, title, ok, detail, started):
        secs = time.perf_counter() - started
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {k:2d}: {title} | {detail} | {secs:.1f}s")
        assert ok, detail

    return report


@pytest.fixture(scope="module")
def benchmark_curve(benchmark_cfg, benchmark, benchmark_ckpt):
    source, target = synth.regional_partition(benchmark_cfg)
    return fewshot_curve(
        benchmark_ckpt,
        benchmark.where_country(target),
        target[0],
        sizes=(50, 100, 200, 2000),
        n_seeds=10,
        source=benchmark.where_country(source),
    )


def test_c01_gradient_correctness(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(20):
        dims = [int(rng.integers(1, 65)) for _ in range(int(rng.integers(2, 6)))]
        p = nn.init_mlp(dims, seed=k)
        x, y = rng.standard_normal((6, dims[0])), rng.standard_normal((6, dims[-1]))
        worst = max(worst, nn.grad_check(p, mse_closure(x, y), n_coords=10**6))
    verdict(1, "gradient check, 20 random nets", worst < 1e-4, f"max rel err {worst:.2e}", t0)


def test_c02_auc_oracle(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 300))
        s = rng.integers(0, int(rng.integers(2, 20)), size=n).astype(float)  # heavy ties
        y = rng.integers(0, 2, size=n)
        y[:2] = [0, 1]
        worst = max(worst, abs(auc(s, y) - pair_count_auc(s, y)))
    verdict(2, "AUC equals pair-count oracle on 1000 tied instances", worst <= 1e-12, f"max diff {worst:.1e}", t0)


def test_c03_tmae_learns_structure(verdict):
    t0 = time.perf_counter()
    X = synth.correlated_features(3000, 11, 0.8, seed=5)
    names = tuple(f"x{j}" for j in range(11))
    ckpt = tmae.pretrain(X[:2000], tmae.PretrainConfig(), names)
    held = X[2000:]
    mask = tmae.sample_mask_matrix(held.shape[0], 11, 0.7, np.random.default_rng(6))
    _, mse = tmae.reconstruct(ckpt, held, mask)
    # column-mean predictor: training means are 0 in standardized units
    Z = ckpt.standardizer.transform(held)
    baseline = float(np.mean(Z[mask] ** 2))
    ratio = mse / baseline
    verdict(3, "masked MSE vs column-mean predictor", ratio <= 0.8, f"mse {mse:.3f} / {baseline:.3f} = {ratio:.3f}", t0)


def test_c04_transfer_gain(verdict, benchmark_curve):
    t0 = time.perf_counter()
    row = benchmark_curve.row(50)
    wins = row["wins_vs_cold_mlp"]
    gap = row["gain_abs_vs_gbdt"]
    ok = wins >= 8 and gap >= 0.02
    detail = (
        f"N=50: wins vs cold MLP {wins:g}/10, pre-trained {row['pretrained_mean']:.3f} "
        f"vs GBDT {row['gbdt_mean']:.3f} (gap {gap:.3f})"
    )
    verdict(4, "transfer gain at N=50", ok, detail, t0)


def test_c05_fewshot_shape(verdict, benchmark_curve):
    t0 = time.perf_counter()
    gaps = {n: benchmark_curve.row(n)["gain_abs_vs_gbdt"] for n in benchmark_curve.sizes}
    ok = all(gaps[n] >= 0 for n in (50, 100, 200)) and gaps[50] > gaps[2000]
    detail = ", ".join(f"gap@{n}={g:.3f}" for n, g in gaps.items())
    verdict(5, "few-shot curves converge", ok, detail, t0)


def test_c06_sample_complexity(verdict, benchmark_cfg, benchmark, benchmark_ckpt):
    t0 = time.perf_counter()
    _, target = synth.regional_partition(benchmark_cfg)
    curve = sample_complexity_curve(benchmark_ckpt, benchmark.where_country([target[0]]), n_seeds=10)
    deficits = ", ".join(f"{r['n']}:{r['deficit']:.3f}" for r in curve.rows)
    verdict(6, "deficit ~ c/sqrt(n)", curve.correlation > 0.9, f"r={curve.correlation:.3f}, c={curve.c:.3f}; {deficits}", t0)


def test_c07_divergence_monotone(verdict):
    t0 = time.perf_counter()
    shifts = (0.0, 0.25, 0.5, 1.0)
    chains = []
    for delta in shifts:
        cfg = synth.default_benchmark(shift=delta)
        data = synth.synth_generate(cfg)
        source, target = synth.regional_partition(cfg)
        src = data.where_country(source).X
        chains.append([proxy_divergence(src, data.where_country([c]).X, seed=42) for c in target])
    d = np.array(chains)  # rows: shift, columns: target country
    ok = bool(np.all(np.diff(d, axis=0) > 0) and np.all(d[0] < 0.1))
    detail = "; ".join(f"delta={s}: " + "/".join(f"{v:.3f}" for v in row) for s, row in zip(shifts, d))
    verdict(7, "proxy divergence increases with shift", ok, detail, t0)


def test_c08_bootstrap_coverage(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    covered = 0
    for i in range(500):
        y = (rng.random(200) < 0.3).astype(int)
        d = make_dataset(np.zeros((200, 1)), y)
        r = bootstrap_ci(lambda s, _: float(s.y.mean()), d, n_resamples=1000, seed=i)
        covered += r.ci_low <= 0.3 <= r.ci_high
    rate = covered / 500
    verdict(8, "95% percentile CI coverage", 0.93 <= rate <= 0.97, f"covered {covered}/500 = {rate:.3f}", t0)


def test_c09_calibration(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    p = rng.random(100_000)
    y = (rng.random(100_000) < p).astype(int)
    e, b = ece(p, y), brier(p, y)
    # calibrated: E[(p - y)^2] = E[p(1 - p)] = 1/6 for p ~ U[0, 1]; the calibration term is 0
    ok = e < 0.01 and abs(b - 1 / 6) < 0.005
    verdict(9, "ECE and Brier of a calibrated predictor", ok, f"ece {e:.4f}, brier {b:.4f} vs {1/6:.4f}", t0)


def test_c10_loco_integrity(verdict, benchmark):
    t0 = time.perf_counter()
    checked = []

    def trainer(train: Dataset, seed: int):
        held = set(benchmark.country.tolist()) - set(train.country.tolist())
        test_ids = benchmark.row_id[np.isin(benchmark.country, list(held))]
        checked.append(int(np.intersect1d(train.row_id, test_ids).size))
        return train_logreg(train)

    rep = loco_run(trainer, benchmark)
    violations = rep.extra["row_id_violations"] + sum(checked)
    ok = rep.extra["folds"] == 12 and len(checked) == 12 and violations == 0
    verdict(10, "LOCO folds never share rows", ok, f"{rep.extra['folds']} folds, {violations} shared row_ids", t0)


def test_c11_importance_null(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    n = 4000
    X = rng.standard_normal((n, 4))
    y = (rng.random(n) < 1 / (1 + np.exp(-3 * X[:, 0]))).astype(int)
    train, test = stratified_holdout(make_dataset(X, y), 0.5, 1, by="outcome")
    rows = {r["feature"]: r for r in permutation_importance(train_logreg(train, l2=1e-3), test, n_repeats=100, seed=3)}
    sole = rows["x0"]["importance"]
    nulls = [rows[f"x{j}"] for j in (1, 2, 3)]
    ok = sole > 0.2 and all(r["ci_low"] <= 0 <= r["ci_high"] for r in nulls)
    detail = f"x0 {sole:.3f}; nulls " + ", ".join(f"[{r['ci_low']:.4f}, {r['ci_high']:.4f}]" for r in nulls)
    verdict(11, "permutation importance null and signal", ok, detail, t0)


def test_c12_equity_direction(verdict):
    t0 = time.perf_counter()
    cfg = synth.SynthConfig(quintile_label_noise=[0.3, 0.22, 0.14, 0.07, 0.0])
    train, test = stratified_holdout(synth.synth_generate(cfg), 0.5, 1)
    rep = equity_audit(train_logreg(train, l2=1e-3), test)
    aucs = [r["auc"] for r in rep.per_group]
    ok = all(b >= a for a, b in zip(aucs, aucs[1:])) and rep.point > 1.05
    verdict(12, "AUC rises Q1 to Q5", ok, "Q1..Q5 " + " ".join(f"{a:.3f}" for a in aucs) + f", ratio {rep.point:.3f}", t0)


def test_c13_objective_and_ensemble(verdict):
    t0 = time.perf_counter()
    obj = fairness_objective({"A": 0.8, "B": 0.6})
    rng = np.random.default_rng(13)
    members = []
    for k in range(5):
        net = nn.init_mlp([3, 4, 1], seed=k)
        members.append(ClassifierModel(net, Standardizer(np.zeros(3), np.ones(3), ("a", "b", "c")), ("a", "b", "c")))
    rows = rng.standard_normal((50, 3))
    ens = Ensemble(members, list(range(5))).predict_proba(rows)
    member_mean = np.mean([m.predict_proba(rows) for m in members], axis=0)
    err = float(np.abs(ens - member_mean).max())
    ok = obj == 1.9 and err <= 1e-15
    verdict(13, "objective and ensemble arithmetic", ok, f"objective {obj!r}, ensemble err {err:.1e}", t0)


def _cli_outputs(root: Path, jobs: int) -> dict[str, bytes]:
    root.mkdir()
    data, ck, model = root / "data.csv", root / "ck.json", root / "m.json"
    common = ["--jobs", str(jobs)]
    commands = [
        ["synth", "--out", data, "--countries", 4, "--rows", 150, "--seed", 5],
        ["pretrain", "--data", data, "--out", ck, "--use-countries", "C00,C01", "--epochs", 3, "--hidden", 16, 8],
        ["finetune", "--data", data, "--checkpoint", ck, "--out", model, "--use-countries", "C00,C01", "--max-epochs", 3],
        ["finetune", "--data", data, "--checkpoint", ck, "--out", root / "ens.json", "--ensemble", 3, "--max-epochs", 2],
        ["eval", "--protocol", "holdout", "--data", data, "--model", model, "--out", root / "h.json"],
        ["eval", "--protocol", "bootstrap", "--learner", "gbdt", "--gbdt-trees", 5, "--data", data,
         "--test-countries", "C03", "--n-resamples", 8, "--out", root / "b.json"],
        ["eval", "--protocol", "loco", "--learner", "cold-mlp", "--max-epochs", 2, "--data", data, "--out", root / "l.json"],
        ["eval", "--protocol", "fewshot", "--data", data, "--checkpoint", ck, "--fewshot-country", "C02",
         "--sizes", 50, 100, "--n-seeds", 3, "--max-epochs", 2, "--gbdt-trees", 5, "--out", root / "f.json"],
        ["eval", "--protocol", "zeroshot", "--data", data, "--model", model, "--test-countries", "C02,C03",
         "--out", root / "z.json"],
        ["importance", "--model", model, "--data", data, "--n-repeats", 5, "--out", root / "i.json"],
        ["calibration", "--model", model, "--data", data, "--out", root / "c.json"],
        ["equity", "--model", model, "--data", data, "--out", root / "q.json"],
        ["divergence", "--data", data, "--source", "C00,C01", "--target", "C02", "--out", root / "d.json"],
        ["hpo", "--data", data, "--trials", 2, "--train-countries", "C00", "--val-countries", "C01,C02",
         "--pretrain-epochs", 1, "--max-epochs", 2, "--out", root / "hpo.json"],
        ["theory-curve", "--checkpoint", ck, "--data", data, "--use-countries", "C02,C03", "--sizes", 50, 100,
         "--n-seeds", 3, "--out", root / "t.json"],
    ]
    for argv in commands:
        code = cli.main([str(a) for a in argv] + common)
        assert code == 0, f"{argv[0]} exited with {code}"
    return {p.name: p.read_bytes() for p in sorted(root.iterdir()) if not p.name.endswith(".manifest.json")}


def test_c14_cli_determinism(verdict, tmp_path):
    t0 = time.perf_counter()
    a = _cli_outputs(tmp_path / "run1", jobs=1)
    b = _cli_outputs(tmp_path / "run2", jobs=1)
    c = _cli_outputs(tmp_path / "run3", jobs=4)
    differ = sorted(k for k in a if not (a[k] == b.get(k) == c.get(k)))
    ok = not differ and set(a) == set(b) == set(c)
    detail = f"{len(a)} output files identical across 2 runs and --jobs 1/4" if ok else f"differ: {differ}"
    verdict(14, "CLI byte-identical outputs", ok, detail, t0)
