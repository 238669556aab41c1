"""Supervised fine-tuning of a pre-trained encoder and seed ensembles."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import nn
from .data import Dataset, SchemaError, Standardizer, stratified_holdout
from .metrics import UndefinedMetricError, auc
from .runtime import atomic_write_json, derive_seed, parallel_map, read_json
from .tmae import EncoderCheckpoint

log = logging.getLogger(__name__)

MODEL_FORMAT = "ecdtransfer.classifier/1"
ENSEMBLE_FORMAT = "ecdtransfer.ensemble/1"
DEFAULT_ENSEMBLE_SIZE = 5


@dataclass
class FinetuneConfig:
    learning_rate: float = 0.00115
    l2: float = 0.00143
    dropout: float = 0.15
    patience: int = 10
    max_epochs: int = 200
    batch_size: int = 512
    seed: int = 42
    freeze_encoder: bool = False
    val_fraction: float = 0.2
    # "zeros" or "glorot" for the 1-unit output layer
    head_init: str = "zeros"

    def __post_init__(self) -> None:
        if self.head_init not in ("zeros", "glorot"):
            raise ValueError(f"head_init must be 'zeros' or 'glorot', got {self.head_init!r}")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ClassifierModel:
    """ReLU feature extractor plus one sigmoid output unit.

    ``net`` holds every layer; the last one is the 1-unit head.
    """

    net: nn.MlpParams
    standardizer: Standardizer
    feature_names: tuple[str, ...]
    history: list[dict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def head(self) -> nn.MlpParams:
        return nn.MlpParams(self.net.weights[-1:], self.net.biases[-1:])

    @property
    def encoder(self) -> nn.MlpParams:
        return nn.MlpParams(self.net.weights[:-1], self.net.biases[:-1])

    def trainable_parameter_count(self, freeze_encoder: bool) -> int:
        return self.head.n_params() if freeze_encoder else self.net.n_params()

    def _inputs(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows[None, :]
        if rows.shape[1] != len(self.feature_names):
            raise SchemaError(f"rows have {rows.shape[1]} features, model expects {len(self.feature_names)}")
        return self.standardizer.transform(rows)

    def logits(self, rows: np.ndarray) -> np.ndarray:
        return nn.forward(self.net, self._inputs(rows)).output[:, 0]

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        return nn.sigmoid(self.logits(rows))

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT,
            "feature_names": list(self.feature_names),
            "net": self.net.to_dict(),
            "standardizer": self.standardizer.to_dict(),
            "history": self.history,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierModel":
        if d.get("format_version") != MODEL_FORMAT:
            raise SchemaError(f"unsupported model format {d.get('format_version')!r}")
        return cls(
            nn.MlpParams.from_dict(d["net"]),
            Standardizer.from_dict(d["standardizer"]),
            tuple(d["feature_names"]),
            d.get("history", []),
            d.get("provenance", {}),
        )

    def save(self, path: str | Path) -> Path:
        return atomic_write_json(path, self.to_dict())


def init_head(width: int, cfg: FinetuneConfig) -> nn.MlpParams:
    """Output unit: all-zero (the first step then follows each input's label correlation) or Glorot."""
    head = nn.init_mlp([width, 1], seed=cfg.seed)
    if cfg.head_init == "zeros":
        head.weights[0][:] = 0.0
    return head


def init_from_encoder(ckpt: EncoderCheckpoint, cfg: FinetuneConfig) -> ClassifierModel:
    """Copy the checkpoint's encoder layers and put a fresh head on top."""
    ckpt.validate()
    latent = ckpt.encoder.layer_dims[-1]
    head = init_head(latent, cfg)
    enc = ckpt.encoder.copy()
    net = nn.MlpParams(enc.weights + head.weights, enc.biases + head.biases)
    return ClassifierModel(
        net,
        ckpt.standardizer,
        tuple(ckpt.feature_names),
        provenance={"init": "encoder", "checkpoint": ckpt.digest(), "seed": cfg.seed},
    )


def _check_split(train: Dataset, val: Dataset) -> None:
    if np.intersect1d(train.row_id, val.row_id).size:
        raise ValueError("train and validation sets share rows")
    if np.unique(val.y).size < 2:
        raise UndefinedMetricError("validation set has a single class; AUC is undefined")
    if np.unique(train.y).size < 2:
        raise UndefinedMetricError("training set has a single class")


def split_validation(data: Dataset, cfg: FinetuneConfig) -> tuple[Dataset, Dataset]:
    """Outcome-stratified validation split, seeded from ``cfg.seed``."""
    return stratified_holdout(data, cfg.val_fraction, derive_seed(cfg.seed, 7), by="outcome")


def finetune(
    model: ClassifierModel,
    train: Dataset,
    val: Dataset | None,
    cfg: FinetuneConfig,
) -> ClassifierModel:
    """Train with Adam + decoupled decay; keep the weights of the best validation-AUC epoch.

    Training stops after ``cfg.patience`` epochs without a strict AUC
    improvement or at ``cfg.max_epochs``. With ``freeze_encoder`` only the head
    moves. When ``val`` is None an outcome-stratified ``val_fraction`` of
    ``train`` is held out.
    """
    if val is None:
        train, val = split_validation(train, cfg)
    _check_split(train, val)
    Xt = model.standardizer.transform(train.X)
    yt = train.y.astype(np.float64)
    Xv = val.X

    rng = np.random.default_rng(derive_seed(cfg.seed, 1))
    net = model.net.copy()
    frozen = cfg.freeze_encoder
    if frozen:
        # encoder output is fixed, so train the head on cached latents
        feats = nn.forward(model.encoder, Xt, relu_last=True).output
        trainable = nn.MlpParams(net.weights[-1:], net.biases[-1:])
    else:
        feats = Xt
        trainable = net
    state = nn.adam_init(trainable, cfg.learning_rate, cfg.l2)

    def current_model(params: nn.MlpParams) -> ClassifierModel:
        full = nn.MlpParams(net.weights[:-1] + params.weights, net.biases[:-1] + params.biases) if frozen else params
        return ClassifierModel(full, model.standardizer, model.feature_names)

    best_auc = -np.inf
    best_params = trainable.copy()
    best_epoch = 0
    history: list[dict] = []
    since_best = 0
    n = feats.shape[0]
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            if frozen:
                trace = nn.forward(trainable, feats[idx])
            else:
                trace = nn.forward(trainable, feats[idx], cfg.dropout, train=True, rng=rng)
            p = nn.sigmoid(trace.output[:, 0])
            loss, g = nn.bce_loss(p, yt[idx])
            if not np.isfinite(loss):
                raise nn.NumericalError(f"non-finite training loss at epoch {epoch}")
            grads = nn.backward(trainable, trace, g[:, None])
            state, trainable = nn.adam_step(state, trainable, grads)
            total += loss * idx.size
        val_auc = auc(current_model(trainable).predict_proba(Xv), val.y)
        history.append({"epoch": epoch, "train_loss": total / n, "val_auc": val_auc})
        if val_auc > best_auc:
            best_auc, best_params, best_epoch, since_best = val_auc, trainable.copy(), epoch, 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break

    out = current_model(best_params)
    out.history = history
    out.provenance = dict(model.provenance)
    out.provenance.update(
        {
            "config": cfg.to_dict(),
            "best_epoch": best_epoch,
            "best_val_auc": best_auc,
            "stopped_epoch": history[-1]["epoch"],
            "n_train": int(train.n),
            "countries": sorted(set(train.countries()) | set(val.countries())),
            "n_val": int(val.n),
        }
    )
    return out


@dataclass
class Ensemble:
    """Equal-weight average of member probabilities."""

    members: list[ClassifierModel]
    seeds: list[int]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        names = {m.feature_names for m in self.members}
        if len(names) != 1:
            raise SchemaError("ensemble members disagree on feature schema")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.members[0].feature_names

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        probs = np.stack([m.predict_proba(rows) for m in self.members])
        return probs.mean(axis=0)

    def to_dict(self) -> dict:
        return {"format_version": ENSEMBLE_FORMAT, "seeds": list(self.seeds), "members": [m.to_dict() for m in self.members]}

    @classmethod
    def from_dict(cls, d: dict) -> "Ensemble":
        if d.get("format_version") != ENSEMBLE_FORMAT:
            raise SchemaError(f"unsupported ensemble format {d.get('format_version')!r}")
        return cls([ClassifierModel.from_dict(m) for m in d["members"]], list(d["seeds"]))

    def save(self, path: str | Path) -> Path:
        return atomic_write_json(path, self.to_dict())


def train_ensemble(
    ckpt: EncoderCheckpoint,
    train: Dataset,
    val: Dataset | None,
    cfg: FinetuneConfig,
    seeds: Sequence[int] | None = None,
    jobs: int = 1,
    allow_duplicate_seeds: bool = False,
) -> Ensemble:
    """Fine-tune one member per seed (default: five seeds derived from ``cfg.seed``)."""
    if seeds is None:
        seeds = [derive_seed(cfg.seed, 100 + i) for i in range(DEFAULT_ENSEMBLE_SIZE)]
    seeds = [int(s) for s in seeds]
    if not allow_duplicate_seeds and len(set(seeds)) != len(seeds):
        raise ValueError(f"ensemble seeds must be distinct, got {seeds}")

    def fit(seed: int) -> ClassifierModel:
        member_cfg = FinetuneConfig(**{**cfg.to_dict(), "seed": seed})
        return finetune(init_from_encoder(ckpt, member_cfg), train, val, member_cfg)

    return Ensemble(parallel_map(fit, seeds, jobs), seeds)


def load_model(path: str | Path):
    """Load any saved predictor (classifier, ensemble, GBDT, logistic regression)."""
    d = read_json(path)
    fmt = d.get("format_version", "")
    if fmt == MODEL_FORMAT:
        return ClassifierModel.from_dict(d)
    if fmt == ENSEMBLE_FORMAT:
        return Ensemble.from_dict(d)
    from . import baselines, gbdt

    if fmt == gbdt.GBDT_FORMAT:
        return gbdt.GbdtModel.from_dict(d)
    if fmt == baselines.LOGREG_FORMAT:
        return baselines.LogRegModel.from_dict(d)
    raise SchemaError(f"{path}: unknown model format {fmt!r}")
