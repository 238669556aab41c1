"""Cold-start comparators: L2 logistic regression and a randomly initialised MLP.

The gradient-boosting baseline lives in :mod:`ecdtransfer.gbdt`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .classifier import ClassifierModel, FinetuneConfig, finetune, init_head, split_validation
from .data import Dataset, SchemaError, Standardizer, fit_standardizer
from .runtime import atomic_write_json

LOGREG_FORMAT = "ecdtransfer.logreg/1"
COLD_MLP_HIDDEN = (512, 32)


@dataclass
class LogRegModel:
    """``p = sigmoid(w . z + b)`` on standardized features ``z``."""

    weights: np.ndarray
    bias: float
    standardizer: Standardizer | None
    feature_names: tuple[str, ...]
    l2: float
    iterations: int = 0
    grad_norm: float = 0.0
    converged: bool = True
    info: dict = field(default_factory=dict)

    def _inputs(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows[None, :]
        if rows.shape[1] != self.weights.size:
            raise SchemaError(f"rows have {rows.shape[1]} features, model expects {self.weights.size}")
        return self.standardizer.transform(rows) if self.standardizer is not None else rows

    def decision_function(self, rows: np.ndarray) -> np.ndarray:
        Z = self._inputs(rows)
        return Z @ self.weights + self.bias

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        return nn.sigmoid(self.decision_function(rows))

    def to_dict(self) -> dict:
        return {
            "format_version": LOGREG_FORMAT,
            "feature_names": list(self.feature_names),
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "standardizer": self.standardizer.to_dict() if self.standardizer else None,
            "l2": self.l2,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogRegModel":
        if d.get("format_version") != LOGREG_FORMAT:
            raise SchemaError(f"unsupported logistic model format {d.get('format_version')!r}")
        std = Standardizer.from_dict(d["standardizer"]) if d.get("standardizer") else None
        return cls(
            np.asarray(d["weights"], dtype=np.float64),
            float(d["bias"]),
            std,
            tuple(d["feature_names"]),
            float(d["l2"]),
            int(d.get("iterations", 0)),
            float(d.get("grad_norm", 0.0)),
            bool(d.get("converged", True)),
        )

    def save(self, path: str | Path) -> Path:
        return atomic_write_json(path, self.to_dict())


def _objective(Z, y, w, b, l2):
    z = Z @ w + b
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w)
    p = nn.sigmoid(z)
    r = p - y
    gw = Z.T @ r / y.size + l2 * w
    gb = r.mean()
    return loss, gw, gb, p


def fit_logistic(
    Z: np.ndarray,
    y: np.ndarray,
    l2: float,
    tol: float = 1e-6,
    max_iter: int = 10_000,
) -> tuple[np.ndarray, float, int, float]:
    """Minimise mean log-loss + ``l2/2 * |w|^2`` (bias unpenalised) by damped Newton.

    Returns ``(w, b, iterations, final_grad_norm)``; stops when the full
    gradient norm drops below ``tol`` or after ``max_iter`` iterations.
    """
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = Z.shape
    w = np.zeros(d)
    rate = min(max(y.mean(), 1e-12), 1 - 1e-12)
    b = float(np.log(rate / (1 - rate)))
    A = np.hstack([Z, np.ones((n, 1))])
    reg = np.full(d + 1, l2)
    reg[-1] = 0.0
    loss, gw, gb, p = _objective(Z, y, w, b, l2)
    it = 0
    gnorm = float(np.sqrt(gw @ gw + gb * gb))
    while gnorm >= tol and it < max_iter:
        it += 1
        s = p * (1 - p)
        Hm = (A * s[:, None]).T @ A / n + np.diag(reg) + 1e-12 * np.eye(d + 1)
        step = np.linalg.solve(Hm, np.r_[gw, gb])
        t = 1.0
        while True:
            w_new, b_new = w - t * step[:-1], b - t * step[-1]
            new = _objective(Z, y, w_new, b_new, l2)
            if new[0] <= loss - 1e-4 * t * (np.r_[gw, gb] @ step) or t < 1e-10:
                break
            t *= 0.5
        w, b = w_new, float(b_new)
        loss, gw, gb, p = new
        gnorm = float(np.sqrt(gw @ gw + gb * gb))
    return w, b, it, gnorm


def train_logreg(
    train: Dataset | tuple[np.ndarray, np.ndarray],
    l2: float = 1.0,
    standardize: bool = True,
    tol: float = 1e-6,
    max_iter: int = 10_000,
) -> LogRegModel:
    """L2 logistic regression; features are standardized on ``train`` unless told otherwise."""
    if isinstance(train, Dataset):
        X, y, names = train.X, train.y, tuple(train.feature_names)
    else:
        X, y = train
        X = np.asarray(X, dtype=np.float64)
        names = tuple(f"x{j}" for j in range(X.shape[1]))
    std = fit_standardizer(X, names, allow_constant=True) if standardize else None
    Z = std.transform(X) if std else np.asarray(X, dtype=np.float64)
    w, b, it, gnorm = fit_logistic(Z, y, l2, tol, max_iter)
    return LogRegModel(w, b, std, names, l2, it, gnorm, gnorm < tol)


def init_cold_mlp(train: Dataset, cfg: FinetuneConfig, hidden=COLD_MLP_HIDDEN) -> ClassifierModel:
    """Random ``[d, 512, 32, 1]`` net with a standardizer fitted on the local sample only.

    The output layer is initialised exactly like a fine-tuned encoder's head.
    """
    d = train.X.shape[1]
    body = nn.init_mlp([d, *hidden], seed=cfg.seed)
    head = init_head(hidden[-1], cfg)
    net = nn.MlpParams(body.weights + head.weights, body.biases + head.biases)
    std = fit_standardizer(train.X, train.feature_names, allow_constant=True)
    return ClassifierModel(net, std, tuple(train.feature_names), provenance={"init": "random", "seed": cfg.seed})


def train_cold_mlp(
    train: Dataset, val: Dataset | None, cfg: FinetuneConfig, hidden=COLD_MLP_HIDDEN
) -> ClassifierModel:
    """Same training protocol as fine-tuning, from random initialisation."""
    if cfg.freeze_encoder:
        raise ValueError("a cold-start MLP has no pre-trained encoder to freeze")
    if val is None:
        train, val = split_validation(train, cfg)
    return finetune(init_cold_mlp(train, cfg, hidden), train, val, cfg)
