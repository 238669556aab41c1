"""Seeded random search with the fairness-weighted objective ``mean + 2 * min``."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import nn
from .classifier import FinetuneConfig, finetune, init_from_encoder
from .data import DataError, Dataset
from .metrics import UndefinedMetricError
from .protocols import per_country_auc
from .runtime import DEFAULT_SEED, derive_seed, parallel_map
from .tmae import PretrainConfig, pretrain

log = logging.getLogger(__name__)

CONFIG_FIELDS = ("learning_rate", "l2", "hidden1", "hidden2", "dropout", "batch_size", "mask_ratio")


def fairness_objective(per_country_auc: Mapping[str, float]) -> float:
    """``mean(values) + 2 * min(values)``."""
    if not per_country_auc:
        raise ValueError("objective needs at least one country AUC")
    v = [float(x) for x in per_country_auc.values()]
    return math.fsum(v) / len(v) + 2.0 * min(v)


@dataclass(frozen=True)
class SearchSpace:
    learning_rate: tuple[float, float] = (1e-4, 1e-2)
    l2: tuple[float, float] = (1e-5, 1e-2)
    hidden1: tuple[int, int] = (64, 512)
    hidden2: tuple[int, int] = (16, 128)
    dropout: tuple[float, float] = (0.0, 0.5)
    batch_size: tuple[int, int] = (64, 512)
    mask_ratio: tuple[float, float] = (0.3, 0.8)

    def __post_init__(self) -> None:
        for name in CONFIG_FIELDS:
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: lower bound {lo} above upper bound {hi}")
        if self.hidden2[0] >= self.hidden1[1]:
            raise ValueError("no hidden2 value can be smaller than hidden1")

    def sample(self, rng: np.random.Generator) -> dict:
        """One configuration; rates are log-uniform, widths and batch uniform integers, hidden2 < hidden1."""

        def log_uniform(b):
            return float(math.exp(rng.uniform(math.log(b[0]), math.log(b[1]))))

        h1 = int(rng.integers(self.hidden1[0], self.hidden1[1] + 1))
        # widths funnel: draw hidden2 below hidden1, redrawing hidden1 if it leaves no room
        while h1 <= self.hidden2[0]:
            h1 = int(rng.integers(self.hidden1[0], self.hidden1[1] + 1))
        h2 = int(rng.integers(self.hidden2[0], min(self.hidden2[1], h1 - 1) + 1))
        return {
            "learning_rate": log_uniform(self.learning_rate),
            "l2": log_uniform(self.l2),
            "hidden1": h1,
            "hidden2": h2,
            "dropout": float(rng.uniform(*self.dropout)),
            "batch_size": int(rng.integers(self.batch_size[0], self.batch_size[1] + 1)),
            "mask_ratio": float(rng.uniform(*self.mask_ratio)),
        }

    def contains(self, config: Mapping) -> bool:
        for name in CONFIG_FIELDS:
            lo, hi = getattr(self, name)
            if not lo <= config[name] <= hi:
                return False
        return config["hidden2"] < config["hidden1"]

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SearchSpace":
        unknown = set(d) - set(CONFIG_FIELDS)
        if unknown:
            raise ValueError(f"unknown search-space fields: {sorted(unknown)}")
        return cls(**{k: tuple(v) for k, v in d.items()})


@dataclass
class TrialRecord:
    trial_index: int
    config: dict
    per_country_auc: dict
    mean_auc: float | None
    min_auc: float | None
    objective: float | None
    seed: int
    wall_time: float
    status: str = "ok"
    error: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SearchSplit:
    """Countries used to train each trial and countries that score it."""

    train_countries: list[str]
    val_countries: list[str]

    def __post_init__(self) -> None:
        if not self.train_countries or not self.val_countries:
            raise ValueError("search split needs train and validation countries")
        if set(self.train_countries) & set(self.val_countries):
            raise ValueError("train and validation countries overlap")


@dataclass
class SearchResult:
    best: TrialRecord
    trials: list[TrialRecord] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial_index", *CONFIG_FIELDS, "mean_auc", "min_auc", "objective", "status"])
        for t in self.trials:
            w.writerow(
                [t.trial_index]
                + [repr(t.config[k]) if isinstance(t.config[k], float) else t.config[k] for k in CONFIG_FIELDS]
                + ["" if v is None else repr(v) for v in (t.mean_auc, t.min_auc, t.objective)]
                + [t.status]
            )
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"best": self.best.to_dict(), "trials": [t.to_dict() for t in self.trials]}


def evaluate_config(
    config: Mapping,
    data: Dataset,
    split: SearchSplit,
    seed: int,
    pretrain_epochs: int = 100,
    max_epochs: int = 200,
) -> dict[str, float]:
    """Pre-train on the training countries' features, fine-tune on their labels, score each validation country."""
    train = data.where_country(split.train_countries)
    val = data.where_country(split.val_countries)
    if train.n == 0 or val.n == 0:
        raise DataError("search split selects no rows")
    pcfg = PretrainConfig(
        epochs=pretrain_epochs,
        mask_ratio=config["mask_ratio"],
        hidden_dims=(config["hidden1"], config["hidden2"]),
        seed=derive_seed(seed, 0),
    )
    ckpt = pretrain(train.X, pcfg, train.feature_names)
    fcfg = FinetuneConfig(
        learning_rate=config["learning_rate"],
        l2=config["l2"],
        dropout=config["dropout"],
        batch_size=config["batch_size"],
        max_epochs=max_epochs,
        seed=derive_seed(seed, 1),
    )
    model = finetune(init_from_encoder(ckpt, fcfg), train, None, fcfg)
    rows = per_country_auc(model, val)
    undefined = [r["country_code"] for r in rows if r["auc"] is None]
    if undefined:
        raise UndefinedMetricError(f"AUC undefined for {', '.join(undefined)}")
    return {r["country_code"]: r["auc"] for r in rows}


def run_search(
    space: SearchSpace,
    data: Dataset,
    split: SearchSplit,
    trials: int,
    seed: int = DEFAULT_SEED,
    jobs: int = 1,
    pretrain_epochs: int = 100,
    max_epochs: int = 200,
    evaluator=None,
) -> SearchResult:
    """Random search; returns the best trial and the full log in trial order.

    A trial whose training diverges or whose score is undefined is logged with
    status ``failed`` and the search goes on. ``evaluator(config, seed)`` can
    replace the default pre-train/fine-tune scoring.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    configs = [space.sample(rng) for _ in range(trials)]

    def score(config: dict, trial_seed: int) -> dict[str, float]:
        if evaluator is not None:
            return evaluator(config, trial_seed)
        return evaluate_config(config, data, split, trial_seed, pretrain_epochs, max_epochs)

    def run(i: int) -> TrialRecord:
        trial_seed = derive_seed(seed, i)
        start = time.perf_counter()
        try:
            aucs = score(configs[i], trial_seed)
        except (nn.NumericalError, UndefinedMetricError, FloatingPointError) as exc:
            log.warning("trial %d failed: %s", i, exc)
            return TrialRecord(i, configs[i], {}, None, None, None, trial_seed, time.perf_counter() - start, "failed", str(exc))
        v = list(aucs.values())
        return TrialRecord(
            i,
            configs[i],
            dict(sorted(aucs.items())),
            sum(v) / len(v),
            min(v),
            fairness_objective(aucs),
            trial_seed,
            time.perf_counter() - start,
        )

    records = parallel_map(run, range(trials), jobs)
    ok = [r for r in records if r.status == "ok"]
    if not ok:
        raise nn.NumericalError(f"all {trials} trials failed")
    best = max(ok, key=lambda r: (r.objective, -r.trial_index))
    return SearchResult(best, records)


def default_config() -> dict:
    """The tuned values shipped as defaults, in search-space form."""
    f, p = FinetuneConfig(), PretrainConfig()
    return {
        "learning_rate": f.learning_rate,
        "l2": f.l2,
        "hidden1": p.hidden_dims[0],
        "hidden2": p.hidden_dims[1],
        "dropout": f.dropout,
        "batch_size": f.batch_size,
        "mask_ratio": p.mask_ratio,
    }


__all__: Sequence[str] = [
    "SearchSpace",
    "SearchSplit",
    "SearchResult",
    "TrialRecord",
    "fairness_objective",
    "run_search",
    "evaluate_config",
    "default_config",
]
