"""Validation protocols built on the metrics module.

Every protocol derives per-job seeds from one master seed and reduces results
in job-index order, so reports do not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import baselines, gbdt
from .classifier import FinetuneConfig, finetune, init_from_encoder, split_validation
from .data import DataError, Dataset, fewshot_sample, fit_standardizer
from .metrics import UndefinedMetricError, auc, paired_ttest
from .runtime import DEFAULT_SEED, derive_seed, dumps, parallel_map
from .tmae import EncoderCheckpoint, embed

log = logging.getLogger(__name__)

DEFAULT_RESAMPLES = 1000
DEFAULT_FEWSHOT_SIZES = (50, 100, 200, 500, 1000, 2000, 5000)
DEFAULT_THEORY_SIZES = (50, 100, 200, 400, 800)
MAX_REDRAWS = 10


# ---------------------------------------------------------------------------
# Reports


def format_table(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    """Aligned plain-text table; floats printed with 4 decimals, None as '-'."""
    if not rows:
        return "(empty)\n"
    columns = list(columns or rows[0].keys())

    def cell(v) -> str:
        if v is None:
            return "-"
        if isinstance(v, (float, np.floating)):
            return f"{float(v):.4f}"
        if isinstance(v, (list, tuple)):
            return ";".join(cell(x) for x in v)
        return str(v)

    body = [[cell(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for b in body:
        lines.append("  ".join(v.ljust(w) for v, w in zip(b, widths)).rstrip())
    return "\n".join(lines) + "\n"


@dataclass
class EvalReport:
    """One metric with an optional percentile CI and a per-group breakdown.

    ``ci_low <= ci_high`` always holds when both are set; the point estimate
    need not lie inside a percentile interval.
    """

    metric: str
    point: float | None
    ci_low: float | None = None
    ci_high: float | None = None
    n_resamples: int = 0
    per_group: list[dict] = field(default_factory=list)
    seed: int = DEFAULT_SEED
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.ci_low is not None and self.ci_high is not None and self.ci_low > self.ci_high:
            raise ValueError(f"ci_low {self.ci_low} > ci_high {self.ci_high}")

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "point": self.point,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_resamples": self.n_resamples,
            "per_group": self.per_group,
            "seed": self.seed,
            "config": self.config,
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def to_text(self) -> str:
        head = f"{self.metric}: {_fmt(self.point)}"
        if self.ci_low is not None:
            head += f"  95% CI [{_fmt(self.ci_low)}, {_fmt(self.ci_high)}]  ({self.n_resamples} resamples)"
        out = head + "\n"
        if self.per_group:
            out += "\n" + format_table(self.per_group)
        return out


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.4f}"


def percentile_ci(values: Sequence[float], level: float = 0.95) -> tuple[float, float]:
    """Equal-tailed percentile interval (linear interpolation between order statistics)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no values")
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(v, [tail, 100.0 - tail])
    return float(lo), float(hi)


def auc_or_none(scores, labels) -> float | None:
    try:
        return auc(scores, labels)
    except UndefinedMetricError:
        return None


# ---------------------------------------------------------------------------
# Bootstrap


def bootstrap_indices(country: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Resample with replacement inside each country, keeping each country's size."""
    parts = []
    for c in sorted(set(country.tolist())):
        idx = np.flatnonzero(country == c)
        parts.append(idx[rng.integers(0, idx.size, size=idx.size)])
    return np.concatenate(parts)


def bootstrap_ci(
    closure: Callable[[Dataset, int], float],
    data: Dataset,
    n_resamples: int = DEFAULT_RESAMPLES,
    seed: int = DEFAULT_SEED,
    jobs: int = 1,
    level: float = 0.95,
    metric: str = "auc",
) -> EvalReport:
    """Percentile bootstrap of ``closure(train_resample, resample_seed)``.

    ``data`` is the training set; the closure evaluates on whatever fixed test
    set it holds. Resamples are stratified by country. A resample that loses
    an outcome class is redrawn, up to ``MAX_REDRAWS`` times.
    """
    if n_resamples < 1:
        raise ValueError("n_resamples must be >= 1")
    two_class = np.unique(data.y).size == 2

    def one(i: int) -> float:
        for attempt in range(MAX_REDRAWS + 1):
            s = derive_seed(seed, i, attempt)
            idx = bootstrap_indices(data.country, np.random.default_rng(s))
            sample = data.subset(idx)
            if not two_class or np.unique(sample.y).size == 2:
                return float(closure(sample, s))
        raise DataError(f"resample {i} lost an outcome class {MAX_REDRAWS + 1} times")

    values = parallel_map(one, range(n_resamples), jobs)
    point = float(closure(data, seed))
    lo, hi = percentile_ci(values, level)
    return EvalReport(
        metric,
        point,
        lo,
        hi,
        n_resamples,
        seed=seed,
        config={"n_resamples": n_resamples, "level": level},
        extra={"resample_mean": float(np.mean(values)), "resample_sd": float(np.std(values, ddof=1)) if n_resamples > 1 else 0.0},
    )


# ---------------------------------------------------------------------------
# Group-wise evaluation


def per_country_auc(model, data: Dataset) -> list[dict]:
    """AUC of one fitted model in every country of ``data``."""
    probs = model.predict_proba(data.X)
    rows = []
    for c in data.countries():
        m = data.country == c
        a = auc_or_none(probs[m], data.y[m])
        rows.append(
            {
                "country_code": c,
                "n": int(m.sum()),
                "prevalence": float(data.y[m].mean()),
                "auc": a,
                "note": "" if a is not None else "AUC undefined",
            }
        )
    return rows


def holdout_report(model, data: Dataset, seed: int = DEFAULT_SEED, metric: str = "auc") -> EvalReport:
    """Pooled AUC on ``data`` with a per-country table."""
    probs = model.predict_proba(data.X)
    return EvalReport(metric, auc_or_none(probs, data.y), per_group=per_country_auc(model, data), seed=seed)


def _sort_by_auc(rows: list[dict]) -> list[dict]:
    return sorted(rows, key=lambda r: (r["auc"] is None, -(r["auc"] or 0.0), r["country_code"]))


def loco_run(
    trainer: Callable[[Dataset, int], object],
    data: Dataset,
    seed: int = DEFAULT_SEED,
    jobs: int = 1,
) -> EvalReport:
    """Leave-one-country-out: train on all other countries, test on the held-out one.

    ``trainer(train, fold_seed)`` returns anything with ``predict_proba``. Every
    fold checks that no ``row_id`` is shared between train and test; a shared
    row aborts the run. Rows come back sorted by AUC, highest first.
    """
    countries = data.countries()
    if len(countries) < 2:
        raise DataError("LOCO needs at least two countries")

    def fold(k: int) -> dict:
        c = countries[k]
        test_mask = data.country == c
        train, test = data.subset(np.flatnonzero(~test_mask)), data.subset(np.flatnonzero(test_mask))
        overlap = int(np.intersect1d(train.row_id, test.row_id).size)
        if overlap:
            raise DataError(f"fold {c}: {overlap} row_ids in both train and test")
        model = trainer(train, derive_seed(seed, k))
        a = auc_or_none(model.predict_proba(test.X), test.y)
        return {
            "country_code": c,
            "region": str(test.region[0]),
            "n_train": int(train.n),
            "n_test": int(test.n),
            "train_countries": len(train.countries()),
            "row_id_overlap": overlap,
            "auc": a,
            "note": "" if a is not None else "AUC undefined",
        }

    rows = parallel_map(fold, range(len(countries)), jobs)
    defined = [r["auc"] for r in rows if r["auc"] is not None]
    return EvalReport(
        "loco_auc",
        float(np.mean(defined)) if defined else None,
        per_group=_sort_by_auc(rows),
        seed=seed,
        extra={
            "folds": len(rows),
            "row_id_violations": sum(r["row_id_overlap"] for r in rows),
            "auc_min": min(defined) if defined else None,
            "auc_max": max(defined) if defined else None,
        },
    )


# ---------------------------------------------------------------------------
# Few-shot curves


@dataclass
class FewShotCurve:
    """Per-size, per-seed AUCs of each model plus summary statistics.

    ``wins`` counts seeds where the pre-trained model beats a baseline, with
    exact ties counted as half a win.
    """

    sizes: list[int]
    models: list[str]
    n_seeds: int
    records: list[dict]
    summary: list[dict]
    skipped: list[int] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def aucs(self, model: str, n: int) -> np.ndarray:
        return np.array([r["auc"] for r in self.records if r["model"] == model and r["n"] == n])

    def mean(self, model: str, n: int) -> float:
        return float(self.aucs(model, n).mean())

    def row(self, n: int) -> dict:
        for r in self.summary:
            if r["n"] == n:
                return r
        raise KeyError(n)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "n", "seed", "auc"])
        for r in self.records:
            w.writerow([r["model"], r["n"], r["seed"], repr(float(r["auc"]))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "sizes": self.sizes,
            "models": self.models,
            "n_seeds": self.n_seeds,
            "skipped": self.skipped,
            "summary": self.summary,
            "records": self.records,
            "config": self.config,
        }

    def to_text(self) -> str:
        cols = ["n"] + [f"{m}_mean" for m in self.models] + [f"{m}_sd" for m in self.models]
        cols += [k for k in self.summary[0] if k.startswith(("wins_", "p_", "gain_"))] if self.summary else []
        return format_table(self.summary, cols)


def win_count(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.sum(a > b) + 0.5 * np.sum(a == b))


def summarize_curve(records: list[dict], sizes: Sequence[int], models: Sequence[str], reference: str) -> list[dict]:
    """Mean, SD, wins, paired t-test p and absolute/relative gain of ``reference`` over each other model."""
    summary = []
    for n in sizes:
        row: dict = {"n": int(n)}
        by_model = {}
        for m in models:
            recs = sorted((r for r in records if r["model"] == m and r["n"] == n), key=lambda r: r["seed"])
            v = np.array([r["auc"] for r in recs])
            by_model[m] = v
            row[f"{m}_mean"] = float(v.mean())
            row[f"{m}_sd"] = float(v.std(ddof=1)) if v.size > 1 else 0.0
        ref = by_model[reference]
        for m in models:
            if m == reference:
                continue
            other = by_model[m]
            row[f"wins_vs_{m}"] = win_count(ref, other)
            row[f"p_vs_{m}"] = paired_ttest(ref, other).p if ref.size >= 2 else None
            row[f"gain_abs_vs_{m}"] = float(ref.mean() - other.mean())
            row[f"gain_rel_vs_{m}"] = float(ref.mean() / other.mean() - 1.0)
        summary.append(row)
    return summary


def fewshot_curve(
    ckpt: EncoderCheckpoint,
    target: Dataset,
    fewshot_country: str,
    sizes: Sequence[int] = DEFAULT_FEWSHOT_SIZES,
    n_seeds: int = 10,
    cfg: FinetuneConfig | None = None,
    gbdt_cfg: gbdt.GbdtConfig | None = None,
    source: Dataset | None = None,
    seed: int = DEFAULT_SEED,
    jobs: int = 1,
    models: Sequence[str] = ("pretrained", "gbdt", "cold_mlp"),
) -> FewShotCurve:
    """Fine-tune on N rows of one target-region country, test on the rest of the region.

    For each size and seed the same sample (and the same outcome-stratified
    validation split) feeds every model. Sizes larger than the country are
    skipped with a warning. When ``source`` is given, the target rows are
    checked to be disjoint from it.
    """
    cfg = cfg or FinetuneConfig()
    gbdt_cfg = gbdt_cfg or gbdt.GbdtConfig()
    if "pretrained" not in models:
        raise ValueError("models must include 'pretrained'")
    unknown = set(models) - {"pretrained", "gbdt", "cold_mlp", "logreg"}
    if unknown:
        raise ValueError(f"unknown models: {sorted(unknown)}")
    if fewshot_country not in target.countries():
        raise DataError(f"{fewshot_country} is not in the target data")
    if len(target.countries()) < 2:
        raise DataError("target region needs at least two countries")
    if source is not None and np.intersect1d(source.row_id, target.row_id).size:
        raise DataError("source and target share row_ids")
    test = target.where_country([c for c in target.countries() if c != fewshot_country])
    available = int(np.sum(target.country == fewshot_country))
    kept, skipped = [], []
    for n in sizes:
        if n > available:
            log.warning("skipping N=%d: %s has only %d rows", n, fewshot_country, available)
            skipped.append(int(n))
        else:
            kept.append(int(n))
    jobs_list = [(n, s) for n in kept for s in range(n_seeds)]

    def run(job: tuple[int, int]) -> list[dict]:
        n, s = job
        sample = fewshot_sample(target, fewshot_country, n, derive_seed(seed, n, s))
        job_cfg = FinetuneConfig(**{**cfg.to_dict(), "seed": derive_seed(seed, n, s, 1)})
        tr, va = split_validation(sample, job_cfg)
        out = []
        for m in models:
            if m == "pretrained":
                model = finetune(init_from_encoder(ckpt, job_cfg), tr, va, job_cfg)
            elif m == "cold_mlp":
                model = finetune(baselines.init_cold_mlp(tr, job_cfg), tr, va, job_cfg)
            elif m == "gbdt":
                model = gbdt.train_gbdt(tr, va, gbdt.GbdtConfig(**{**gbdt_cfg.to_dict(), "seed": job_cfg.seed}))
            else:
                model = baselines.train_logreg(tr, l2=1.0)
            out.append({"model": m, "n": n, "seed": s, "auc": auc(model.predict_proba(test.X), test.y)})
        return out

    records = [r for rs in parallel_map(run, jobs_list, jobs) for r in rs]
    return FewShotCurve(
        kept,
        list(models),
        n_seeds,
        records,
        summarize_curve(records, kept, models, "pretrained"),
        skipped,
        {"fewshot_country": fewshot_country, "test_countries": test.countries(), "seed": seed, "finetune": cfg.to_dict()},
    )


# ---------------------------------------------------------------------------
# Permutation importance


def permutation_importance(
    model,
    data: Dataset,
    n_repeats: int = 100,
    seed: int = DEFAULT_SEED,
    jobs: int = 1,
    level: float = 0.95,
) -> list[dict]:
    """Drop in AUC when one column is shuffled, averaged over ``n_repeats`` shuffles.

    Returns rows ``{feature, importance, ci_low, ci_high, baseline_auc}``
    ranked by importance (largest first). The CI is the percentile interval
    of the per-shuffle drops.
    """
    X = data.X
    base = auc(model.predict_proba(X), data.y)

    def one(j: int) -> dict:
        rng = np.random.default_rng(derive_seed(seed, j))
        drops = np.empty(n_repeats)
        Xp = X.copy()
        for r in range(n_repeats):
            Xp[:, j] = X[rng.permutation(X.shape[0]), j]
            drops[r] = base - auc(model.predict_proba(Xp), data.y)
        lo, hi = percentile_ci(drops, level)
        return {
            "feature": data.feature_names[j],
            "importance": float(drops.mean()),
            "ci_low": lo,
            "ci_high": hi,
            "baseline_auc": base,
        }

    rows = parallel_map(one, range(X.shape[1]), jobs)
    return sorted(rows, key=lambda r: (-r["importance"], r["feature"]))


# ---------------------------------------------------------------------------
# Calibration and equity


def calibration_report(model, data: Dataset, n_bins: int = 10, seed: int = DEFAULT_SEED) -> EvalReport:
    from .metrics import brier, ece, reliability_table

    p = model.predict_proba(data.X)
    return EvalReport(
        "ece",
        ece(p, data.y, n_bins),
        per_group=reliability_table(p, data.y, n_bins),
        seed=seed,
        config={"n_bins": n_bins},
        extra={"brier": brier(p, data.y), "auc": auc_or_none(p, data.y)},
    )


def equity_audit(model, data: Dataset, seed: int = DEFAULT_SEED) -> EvalReport:
    """AUC within each wealth quintile and the Q5/Q1 ratio."""
    q = data.wealth_quintile
    if not np.all(np.isin(q, [1, 2, 3, 4, 5])):
        raise DataError("wealth quintiles must be populated with values 1..5")
    p = model.predict_proba(data.X)
    rows = []
    for k in range(1, 6):
        m = q == k
        a = auc_or_none(p[m], data.y[m]) if m.any() else None
        rows.append(
            {
                "quintile": k,
                "n": int(m.sum()),
                "prevalence": float(data.y[m].mean()) if m.any() else None,
                "auc": a,
                "note": "" if a is not None else "AUC undefined",
            }
        )
    q1, q5 = rows[0]["auc"], rows[4]["auc"]
    ratio = q5 / q1 if q1 and q5 is not None else None
    return EvalReport(
        "auc_ratio_q5_q1",
        ratio,
        per_group=rows,
        seed=seed,
        extra={"overall_auc": auc_or_none(p, data.y)},
    )


# ---------------------------------------------------------------------------
# Domain divergence


def proxy_divergence(
    source_rows: np.ndarray,
    target_rows: np.ndarray,
    seed: int = DEFAULT_SEED,
    folds: int = 5,
    l2: float = 1e-4,
) -> float:
    """Proxy A-distance ``2 * (2 * acc - 1)`` clipped to [0, 2].

    The larger side is subsampled to the size of the smaller one, and ``acc``
    is the k-fold held-out accuracy of an L2 logistic domain classifier on
    standardized features (standardizer fitted per training fold).
    """
    S = np.asarray(source_rows, dtype=np.float64)
    T = np.asarray(target_rows, dtype=np.float64)
    if S.ndim == 1:
        S, T = S[:, None], T[:, None]
    if min(S.shape[0], T.shape[0]) < 50:
        raise DataError("proxy divergence needs at least 50 rows on each side")
    rng = np.random.default_rng(seed)
    m = min(S.shape[0], T.shape[0])
    S = S[np.sort(rng.choice(S.shape[0], size=m, replace=False))]
    T = T[np.sort(rng.choice(T.shape[0], size=m, replace=False))]
    X = np.vstack([S, T])
    y = np.r_[np.zeros(m), np.ones(m)]
    # folds stratified by domain: each fold gets the same share of both sides
    fold_of = np.r_[rng.permutation(m) % folds, rng.permutation(m) % folds]
    names = tuple(f"x{j}" for j in range(X.shape[1]))
    correct = 0
    for k in range(folds):
        te = fold_of == k
        std = fit_standardizer(X[~te], names, allow_constant=True)
        w, b, _, _ = baselines.fit_logistic(std.transform(X[~te]), y[~te], l2)
        pred = (std.transform(X[te]) @ w + b) > 0
        correct += int(np.sum(pred == (y[te] == 1)))
    acc = correct / y.size
    return float(np.clip(2.0 * (2.0 * acc - 1.0), 0.0, 2.0))


# ---------------------------------------------------------------------------
# Sample complexity of a head on frozen features


@dataclass
class ComplexityCurve:
    sizes: list[int]
    rows: list[dict]
    reference_auc: float
    reference_n: int
    c: float
    correlation: float
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "sizes": self.sizes,
            "rows": self.rows,
            "reference_auc": self.reference_auc,
            "reference_n": self.reference_n,
            "c": self.c,
            "correlation": self.correlation,
            "config": self.config,
        }

    def to_text(self) -> str:
        head = (
            f"reference AUC {self.reference_auc:.4f} (n={self.reference_n}); "
            f"fit deficit = {self.c:.4f}/sqrt(n), correlation {self.correlation:.4f}\n\n"
        )
        return head + format_table(self.rows)


def fit_inverse_sqrt(sizes: Sequence[float], deficits: Sequence[float]) -> tuple[float, float]:
    """Least-squares ``c`` in ``deficit = c / sqrt(n)`` and Pearson correlation of deficit with 1/sqrt(n)."""
    x = 1.0 / np.sqrt(np.asarray(sizes, dtype=np.float64))
    d = np.asarray(deficits, dtype=np.float64)
    c = float(x @ d / (x @ x))
    if x.size < 2 or np.std(d) == 0:
        return c, float("nan")
    return c, float(np.corrcoef(x, d)[0, 1])


def _draw_two_class(pool_y: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    for _ in range(MAX_REDRAWS + 1):
        idx = rng.choice(pool_y.size, size=n, replace=False)
        if np.unique(pool_y[idx]).size == 2:
            return idx
    raise DataError(f"could not draw {n} rows with both outcome classes")


def sample_complexity_curve(
    ckpt: EncoderCheckpoint,
    target: Dataset,
    sizes: Sequence[int] = DEFAULT_THEORY_SIZES,
    n_seeds: int = 10,
    seed: int = DEFAULT_SEED,
    test_fraction: float = 0.3,
    l2: float = 1e-3,
    jobs: int = 1,
) -> ComplexityCurve:
    """AUC deficit of a linear head on frozen encoder features versus training size.

    ``target`` is split once into a fixed test set and a training pool. The
    reference head is fitted on the whole pool; each size and seed fits a
    head on a random subset. The head is the exact L2 logistic-regression
    minimiser on the latent features, so only the sample size varies.
    """
    from .data import stratified_holdout

    pool, test = stratified_holdout(target, test_fraction, derive_seed(seed, 0), by="outcome")
    if max(sizes) > pool.n:
        raise DataError(f"largest size {max(sizes)} exceeds the {pool.n}-row training pool")
    Zp = embed(ckpt, pool.X)
    Zt = embed(ckpt, test.X)

    def head_auc(idx: np.ndarray) -> float:
        model = baselines.train_logreg((Zp[idx], pool.y[idx]), l2=l2)
        return auc(model.predict_proba(Zt), test.y)

    ref = head_auc(np.arange(pool.n))
    jobs_list = [(n, s) for n in sizes for s in range(n_seeds)]

    def run(job: tuple[int, int]) -> float:
        n, s = job
        rng = np.random.default_rng(derive_seed(seed, n, s))
        return head_auc(_draw_two_class(pool.y, n, rng))

    aucs = np.array(parallel_map(run, jobs_list, jobs)).reshape(len(sizes), n_seeds)
    deficits = ref - aucs.mean(axis=1)
    c, r = fit_inverse_sqrt(sizes, deficits)
    rows = []
    for i, n in enumerate(sizes):
        sd = float(aucs[i].std(ddof=1)) if n_seeds > 1 else 0.0
        rows.append(
            {
                "n": int(n),
                "mean_auc": float(aucs[i].mean()),
                "sd_auc": sd,
                "deficit": float(deficits[i]),
                "deficit_se": sd / math.sqrt(n_seeds),
                "fitted": c / math.sqrt(n),
            }
        )
    return ComplexityCurve(
        [int(n) for n in sizes],
        rows,
        ref,
        int(pool.n),
        c,
        r,
        {"n_seeds": n_seeds, "seed": seed, "test_fraction": test_fraction, "l2": l2, "n_test": int(test.n)},
    )


def zeroshot_report(model, data: Dataset, countries: Iterable[str], seed: int = DEFAULT_SEED) -> EvalReport:
    """Apply a trained model to countries it never saw; pooled AUC and per-country table."""
    held = data.where_country(list(countries))
    if held.n == 0:
        raise DataError("no rows for the requested countries")
    rep = holdout_report(model, held, seed, metric="zeroshot_auc")
    rep.per_group = _sort_by_auc(rep.per_group)
    return rep
