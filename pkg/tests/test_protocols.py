import csv
import io
import json

import numpy as np
import pytest

from ecdtransfer import protocols as P
from ecdtransfer.baselines import train_logreg
from ecdtransfer.classifier import FinetuneConfig
from ecdtransfer.data import DataError
from ecdtransfer.gbdt import GbdtConfig
from ecdtransfer.metrics import auc
from ecdtransfer.nn import sigmoid
from ecdtransfer.protocols import (
    EvalReport,
    bootstrap_ci,
    calibration_report,
    equity_audit,
    fewshot_curve,
    fit_inverse_sqrt,
    format_table,
    loco_run,
    percentile_ci,
    permutation_importance,
    proxy_divergence,
    sample_complexity_curve,
    summarize_curve,
    win_count,
    zeroshot_report,
)

from conftest import make_dataset


class ColumnModel:
    """Scores rows by one column (a fixed predictor for protocol checks)."""

    def __init__(self, j=0, scale=1.0):
        self.j, self.scale = j, scale

    def predict_proba(self, rows):
        return sigmoid(self.scale * np.asarray(rows)[:, self.j])


def two_country(n=200, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((2 * n, 3))
    y = (rng.random(2 * n) < sigmoid(2 * X[:, 0])).astype(int)
    country = np.array(["A"] * n + ["B"] * n, dtype=object)
    return make_dataset(X, y, country=country, region=country)


class TestReports:
    def test_ci_order_enforced(self):
        with pytest.raises(ValueError):
            EvalReport("auc", 0.5, 0.6, 0.4)

    def test_point_may_sit_outside_ci(self):
        r = EvalReport("auc", 0.9, 0.6, 0.7)
        assert json.loads(r.to_json())["point"] == 0.9

    def test_text_and_table(self):
        r = EvalReport("auc", 0.75, 0.7, 0.8, 10, per_group=[{"country_code": "A", "auc": 0.123456, "note": None}])
        text = r.to_text()
        assert "auc: 0.7500" in text and "95% CI [0.7000, 0.8000]" in text
        assert "0.1235" in text and "-" in text

    def test_format_table_alignment(self):
        out = format_table([{"a": 1, "bb": 0.5}, {"a": 100, "bb": None}])
        lines = out.splitlines()
        assert lines[0].split() == ["a", "bb"]
        assert len({line.index(line.split()[1]) for line in (lines[0], lines[2], lines[3])}) == 1

    def test_percentile_ci(self):
        np.testing.assert_allclose(percentile_ci(np.arange(101.0)), (2.5, 97.5), rtol=1e-12)


class TestBootstrap:
    def test_constant_closure_degenerate(self):
        d = two_country(60)
        r = bootstrap_ci(lambda sample, s: 0.7, d, n_resamples=50, seed=1)
        assert (r.point, r.ci_low, r.ci_high) == (0.7, 0.7, 0.7)
        assert r.n_resamples == 50

    def test_default_resamples(self):
        assert P.DEFAULT_RESAMPLES == 1000
        assert bootstrap_ci.__defaults__[0] == 1000

    def test_stratified_by_country(self):
        d = two_country(80)
        seen = []
        bootstrap_ci(lambda s, _: seen.append(np.sum(s.country == "A")) or 0.0, d, n_resamples=20, seed=2)
        assert set(seen) == {80}

    def test_resample_seed_and_jobs(self):
        d = two_country(80)
        f = lambda s, seed: float(s.X[:, 0].mean())
        a = bootstrap_ci(f, d, n_resamples=40, seed=3, jobs=1)
        b = bootstrap_ci(f, d, n_resamples=40, seed=3, jobs=4)
        assert a.to_json() == b.to_json()

    def test_redraws_when_class_lost(self):
        rng = np.random.default_rng(0)
        y = np.zeros(300, int)
        y[0] = 1
        d = make_dataset(rng.standard_normal((300, 2)), y)
        classes = []
        bootstrap_ci(lambda s, _: classes.append(np.unique(s.y).size) or 0.0, d, n_resamples=30, seed=4)
        assert set(classes) == {2}

    def test_gives_up_after_redraws(self, monkeypatch):
        d = two_country(50)
        negatives = np.flatnonzero(d.y == 0)
        monkeypatch.setattr(P, "bootstrap_indices", lambda country, rng: negatives)
        with pytest.raises(DataError):
            bootstrap_ci(lambda s, _: 0.0, d, n_resamples=2)

    def test_resamples_stay_fixed_with_test_set(self):
        train, test = two_country(150, 1), two_country(150, 2)
        r = bootstrap_ci(lambda s, _: auc(train_logreg(s).predict_proba(test.X), test.y), train, n_resamples=30, seed=5)
        assert r.ci_low <= r.ci_high and 0.5 < r.point < 1.0


class TestLoco:
    def test_two_countries(self):
        d = two_country()
        seen = {}

        def trainer(train, seed):
            seen[tuple(train.countries())] = train.n
            return ColumnModel()

        r = loco_run(trainer, d)
        assert seen == {("A",): 200, ("B",): 200}
        assert r.extra["folds"] == 2 and r.extra["row_id_violations"] == 0
        assert [row["row_id_overlap"] for row in r.per_group] == [0, 0]
        aucs = [row["auc"] for row in r.per_group]
        assert aucs == sorted(aucs, reverse=True)

    def test_leak_detected(self):
        d = two_country(50)
        leaky = make_dataset(d.X, d.y, country=d.country, row_id=np.r_[np.arange(50), np.arange(50)])
        with pytest.raises(DataError, match="row_ids"):
            loco_run(lambda t, s: ColumnModel(), leaky)

    def test_single_class_country_flagged(self):
        d = two_country(50)
        y = d.y.copy()
        y[d.country == "B"] = 1
        r = loco_run(lambda t, s: ColumnModel(), make_dataset(d.X, y, country=d.country))
        flagged = [row for row in r.per_group if row["auc"] is None]
        assert [row["country_code"] for row in flagged] == ["B"] and flagged[0]["note"] == "AUC undefined"
        assert r.per_group[-1]["country_code"] == "B"

    def test_needs_two_countries(self):
        with pytest.raises(DataError):
            loco_run(lambda t, s: ColumnModel(), make_dataset(np.zeros((10, 2)), [0, 1] * 5))


class TestCurveSummary:
    def test_ties_count_half(self):
        assert win_count([0.6, 0.7, 0.5], [0.5, 0.7, 0.6]) == 1.5

    def test_identical_models_null(self):
        rng = np.random.default_rng(0)
        records = []
        for s in range(10):
            v = float(rng.uniform(0.6, 0.8))
            records += [{"model": "pretrained", "n": 50, "seed": s, "auc": v}, {"model": "gbdt", "n": 50, "seed": s, "auc": v}]
        row = summarize_curve(records, [50], ["pretrained", "gbdt"], "pretrained")[0]
        assert row["wins_vs_gbdt"] == 5.0
        assert row["p_vs_gbdt"] == 1.0
        assert row["gain_abs_vs_gbdt"] == 0.0

    def test_relative_and_absolute_gain(self):
        records = [
            {"model": "pretrained", "n": 50, "seed": 0, "auc": 0.66},
            {"model": "gbdt", "n": 50, "seed": 0, "auc": 0.61},
        ]
        row = summarize_curve(records, [50], ["pretrained", "gbdt"], "pretrained")[0]
        assert row["gain_abs_vs_gbdt"] == pytest.approx(0.05)
        assert row["gain_rel_vs_gbdt"] == pytest.approx(0.66 / 0.61 - 1)


@pytest.fixture(scope="module")
def curve_inputs(small_ckpt, small_data):
    target = small_data.where_country(["C02", "C03"])
    kw = dict(
        sizes=(50, 100, 400),
        n_seeds=2,
        cfg=FinetuneConfig(max_epochs=4, batch_size=64),
        gbdt_cfg=GbdtConfig(n_estimators=5),
        seed=11,
    )
    return small_ckpt, target, kw


class TestFewShot:
    def test_default_sizes(self):
        assert P.DEFAULT_FEWSHOT_SIZES == (50, 100, 200, 500, 1000, 2000, 5000)

    def test_curve_shape_and_csv(self, curve_inputs, caplog):
        ckpt, target, kw = curve_inputs
        c = fewshot_curve(ckpt, target, "C02", **kw)
        assert c.sizes == [50, 100] and c.skipped == [400]
        assert len(c.records) == 2 * 2 * 3
        assert c.config["test_countries"] == ["C03"]
        rows = list(csv.reader(io.StringIO(c.to_csv())))
        assert rows[0] == ["model", "n", "seed", "auc"] and len(rows) == 13
        assert set(c.row(50)) >= {"pretrained_mean", "wins_vs_gbdt", "p_vs_cold_mlp", "gain_rel_vs_gbdt"}
        assert "pretrained_mean" in c.to_text()

    def test_jobs_invariant(self, curve_inputs):
        ckpt, target, kw = curve_inputs
        kw = {**kw, "sizes": (50,)}
        a = fewshot_curve(ckpt, target, "C02", jobs=1, **kw)
        b = fewshot_curve(ckpt, target, "C02", jobs=3, **kw)
        assert a.to_csv() == b.to_csv()

    def test_validation(self, curve_inputs, small_data):
        ckpt, target, kw = curve_inputs
        with pytest.raises(DataError):
            fewshot_curve(ckpt, target, "C00", **kw)
        with pytest.raises(DataError):
            fewshot_curve(ckpt, target.where_country(["C02"]), "C02", **kw)
        with pytest.raises(DataError):
            fewshot_curve(ckpt, target, "C02", source=small_data, **kw)
        with pytest.raises(ValueError):
            fewshot_curve(ckpt, target, "C02", models=("gbdt",), **kw)


class TestImportance:
    def test_single_feature_model(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((2000, 3))
        y = (rng.random(2000) < sigmoid(3 * X[:, 1])).astype(int)
        d = make_dataset(X, y)
        rows = permutation_importance(ColumnModel(1), d, n_repeats=30, seed=1)
        assert rows[0]["feature"] == "x1"
        base = rows[0]["baseline_auc"]
        assert rows[0]["importance"] == pytest.approx(base - 0.5, abs=0.03)
        for r in rows[1:]:
            assert r["importance"] == 0.0 and r["ci_low"] == r["ci_high"] == 0.0

    def test_null_feature_near_zero(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((10_000, 3))
        y = (rng.random(10_000) < sigmoid(X[:, 0] + X[:, 1])).astype(int)
        d = make_dataset(X, y)
        model = train_logreg(d, l2=1e-3)
        rows = {r["feature"]: r for r in permutation_importance(model, d, n_repeats=20, seed=2)}
        assert abs(rows["x2"]["importance"]) < 0.01
        assert rows["x2"]["ci_low"] <= 0 <= rows["x2"]["ci_high"]

    def test_ranked_and_deterministic(self):
        d = two_country(200)
        a = permutation_importance(ColumnModel(0), d, n_repeats=5, seed=3, jobs=1)
        b = permutation_importance(ColumnModel(0), d, n_repeats=5, seed=3, jobs=3)
        assert a == b
        imps = [r["importance"] for r in a]
        assert imps == sorted(imps, reverse=True)


class TestCalibrationEquity:
    def test_perfect_predictions(self):
        class Oracle:
            def predict_proba(self, rows):
                return np.asarray(rows)[:, 0]

        y = np.array([0, 1, 1, 0, 1])
        d = make_dataset(np.c_[y.astype(float), np.zeros(5)], y)
        r = calibration_report(Oracle(), d)
        assert r.point == 0.0 and r.extra["brier"] == 0.0

    def test_quintile_partition_and_null_ratio(self):
        rng = np.random.default_rng(0)
        n = 20_000
        X = rng.standard_normal((n, 2))
        y = (rng.random(n) < sigmoid(2 * X[:, 0])).astype(int)
        q = rng.integers(1, 6, size=n)
        r = equity_audit(ColumnModel(0), make_dataset(X, y, quintile=q))
        assert sum(row["n"] for row in r.per_group) == n
        assert r.point == pytest.approx(1.0, abs=0.05)

    def test_single_class_quintile_flagged(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((500, 2))
        q = np.repeat(np.arange(1, 6), 100)
        y = rng.integers(0, 2, 500)
        y[q == 3] = 0
        r = equity_audit(ColumnModel(0), make_dataset(X, y, quintile=q))
        assert r.per_group[2]["auc"] is None and r.per_group[2]["note"] == "AUC undefined"

    def test_unpopulated_quintiles(self):
        with pytest.raises(DataError):
            equity_audit(ColumnModel(0), make_dataset(np.zeros((4, 2)), [0, 1, 0, 1], quintile=np.zeros(4, int)))


class TestDivergence:
    def test_same_data_resampled(self):
        X = np.random.default_rng(0).standard_normal((1000, 4))
        Xr = X[np.random.default_rng(1).integers(0, 1000, 1000)]
        assert proxy_divergence(X, Xr, seed=0) < 0.1

    def test_disjoint_supports(self):
        rng = np.random.default_rng(2)
        assert proxy_divergence(rng.standard_normal((500, 2)), rng.standard_normal((500, 2)) + 20, seed=0) > 1.8

    def test_unit_gaussians(self):
        # Bayes accuracy Phi(0.5) = 0.6915 -> 2 * (2 * 0.6915 - 1) = 0.766
        rng = np.random.default_rng(3)
        d = proxy_divergence(rng.standard_normal(5000), rng.standard_normal(5000) + 1.0, seed=1)
        assert abs(d - 0.766) < 0.05

    def test_range_and_minimum(self):
        rng = np.random.default_rng(4)
        with pytest.raises(DataError):
            proxy_divergence(rng.standard_normal((49, 2)), rng.standard_normal((100, 2)))
        assert 0.0 <= proxy_divergence(rng.standard_normal((60, 2)), rng.standard_normal((300, 2))) <= 2.0


class TestSampleComplexity:
    def test_inverse_sqrt_fit(self):
        n = np.array([50, 100, 200, 400, 800])
        c, r = fit_inverse_sqrt(n, 0.7 / np.sqrt(n))
        assert c == pytest.approx(0.7, rel=1e-12) and r == pytest.approx(1.0, abs=1e-12)

    def test_curve_on_small_data(self, small_ckpt, small_data):
        target = small_data.where_country(["C02", "C03"])
        pool_n = target.n - int(round(0.3 * target.n))
        curve = sample_complexity_curve(small_ckpt, target, sizes=(50, 100, pool_n), n_seeds=3, seed=1)
        assert curve.reference_n == pool_n
        assert [r["n"] for r in curve.rows] == [50, 100, pool_n]
        assert abs(curve.rows[-1]["deficit"]) < 1e-6
        assert "sqrt(n)" in curve.to_text()

    def test_size_above_pool(self, small_ckpt, small_data):
        with pytest.raises(DataError):
            sample_complexity_curve(small_ckpt, small_data.where_country(["C02"]), sizes=(1000,), n_seeds=1)


class TestZeroShot:
    def test_report(self):
        d = two_country()
        r = zeroshot_report(ColumnModel(), d, ["B"])
        assert [row["country_code"] for row in r.per_group] == ["B"]
        assert r.metric == "zeroshot_auc"

    def test_unknown_country(self):
        with pytest.raises(DataError):
            zeroshot_report(ColumnModel(), two_country(), ["Z"])
