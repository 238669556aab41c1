"""Histogram gradient-boosted trees for binary logistic loss.

Features are bucketed once into at most ``n_bins`` bins. Each tree is grown
depth-first; a node is split on the (feature, bin) boundary with the largest
second-order gain ``G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - G^2/(H+lam)``, subject to
``min_samples_leaf`` rows per child. Leaves hold Newton steps ``-G/(H+lam)``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, SchemaError
from .metrics import auc
from .nn import sigmoid
from .runtime import atomic_write_json

log = logging.getLogger(__name__)

GBDT_FORMAT = "ecdtransfer.gbdt/1"
PROB_CLAMP = 1e-6


@dataclass
class GbdtConfig:
    n_estimators: int = 100
    max_depth: int = 6
    learning_rate: float = 0.1
    min_samples_leaf: int = 20
    n_bins: int = 64
    early_stopping_rounds: int = 10
    reg_lambda: float = 0.0
    min_child_hessian: float = 1e-3
    seed: int = 42

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")
        if self.n_estimators < 0:
            raise ValueError("n_estimators must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def bin_edges(x: np.ndarray, n_bins: int) -> np.ndarray:
    """Split thresholds for one column: midpoints between distinct values, or quantiles."""
    values = np.unique(x)
    if values.size <= 1:
        return np.array([], dtype=np.float64)
    if values.size <= n_bins:
        return (values[:-1] + values[1:]) / 2.0
    qs = np.quantile(x, np.linspace(0, 1, n_bins + 1)[1:-1])
    edges = np.unique(qs)
    # a threshold equal to the max value would leave the right side empty
    return edges[edges < values[-1]]


def apply_bins(X: np.ndarray, edges: list[np.ndarray]) -> np.ndarray:
    """Bin index per cell: ``x <= edges[k]`` iff ``bin <= k``."""
    out = np.empty(X.shape, dtype=np.int32)
    for j, e in enumerate(edges):
        out[:, j] = np.searchsorted(e, X[:, j], side="left")
    return out


@dataclass
class Tree:
    """Flat node arrays; ``feature == -1`` marks a leaf."""

    feature: list[int] = field(default_factory=list)
    bin: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)
    n_samples: list[int] = field(default_factory=list)
    depth: list[int] = field(default_factory=list)

    def add(self, depth: int, n: int, value: float) -> int:
        self.feature.append(-1)
        self.bin.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        self.n_samples.append(int(n))
        self.depth.append(depth)
        return len(self.feature) - 1

    def max_depth(self) -> int:
        return max(self.depth) if self.depth else 0

    def leaf_sizes(self) -> list[int]:
        return [n for f, n in zip(self.feature, self.n_samples) if f == -1]

    def predict_binned(self, B: np.ndarray) -> np.ndarray:
        node = np.zeros(B.shape[0], dtype=np.int64)
        feat = np.asarray(self.feature)
        bins = np.asarray(self.bin)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        active = feat[node] >= 0
        while active.any():
            i = np.flatnonzero(active)
            nd = node[i]
            go_left = B[i, feat[nd]] <= bins[nd]
            node[i] = np.where(go_left, left[nd], right[nd])
            active = feat[node] >= 0
        return np.asarray(self.value)[node]

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        feat = np.asarray(self.feature)
        thr = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        active = feat[node] >= 0
        while active.any():
            i = np.flatnonzero(active)
            nd = node[i]
            go_left = X[i, feat[nd]] <= thr[nd]
            node[i] = np.where(go_left, left[nd], right[nd])
            active = feat[node] >= 0
        return np.asarray(self.value)[node]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(**{k: list(v) for k, v in d.items()})


@dataclass
class SplitCandidate:
    gain: float
    feature: int
    bin: int


def leaf_objective(G: float, H: float, lam: float) -> float:
    return G * G / (H + lam) if H + lam > 0 else 0.0


def best_split_histogram(
    B: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    n_bins_per_feature: list[int],
    min_samples_leaf: int,
    lam: float,
    min_child_hessian: float,
) -> SplitCandidate | None:
    """Best (feature, bin) boundary over the rows given; None when nothing is admissible."""
    G, H, n = g.sum(), h.sum(), g.size
    parent = leaf_objective(G, H, lam)
    best: SplitCandidate | None = None
    for j, nb in enumerate(n_bins_per_feature):
        if nb < 2:
            continue
        col = B[:, j]
        cg = np.cumsum(np.bincount(col, weights=g, minlength=nb))[:-1]
        ch = np.cumsum(np.bincount(col, weights=h, minlength=nb))[:-1]
        cn = np.cumsum(np.bincount(col, minlength=nb))[:-1]
        ok = (cn >= min_samples_leaf) & (n - cn >= min_samples_leaf)
        ok &= (ch >= min_child_hessian) & (H - ch >= min_child_hessian)
        if not ok.any():
            continue
        gl, hl = cg[ok], ch[ok]
        gain = gl * gl / (hl + lam) + (G - gl) ** 2 / (H - hl + lam) - parent
        k = int(np.argmax(gain))
        if best is None or gain[k] > best.gain:
            best = SplitCandidate(float(gain[k]), j, int(np.flatnonzero(ok)[k]))
    return best


def _grow(
    tree: Tree,
    rows: np.ndarray,
    B: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    depth: int,
    cfg: GbdtConfig,
    nbins: list[int],
    edges: list[np.ndarray],
) -> int:
    G, H = g[rows].sum(), h[rows].sum()
    node = tree.add(depth, rows.size, -G / (H + cfg.reg_lambda) if H + cfg.reg_lambda > 0 else 0.0)
    if depth >= cfg.max_depth or rows.size < 2 * cfg.min_samples_leaf:
        return node
    split = best_split_histogram(B[rows], g[rows], h[rows], nbins, cfg.min_samples_leaf, cfg.reg_lambda, cfg.min_child_hessian)
    if split is None or split.gain <= 1e-12:
        return node
    goes_left = B[rows, split.feature] <= split.bin
    tree.feature[node] = split.feature
    tree.bin[node] = split.bin
    tree.threshold[node] = float(edges[split.feature][split.bin])
    tree.left[node] = _grow(tree, rows[goes_left], B, g, h, depth + 1, cfg, nbins, edges)
    tree.right[node] = _grow(tree, rows[~goes_left], B, g, h, depth + 1, cfg, nbins, edges)
    return node


@dataclass
class GbdtModel:
    trees: list[Tree]
    base_score: float
    learning_rate: float
    edges: list[np.ndarray]
    feature_names: tuple[str, ...]
    config: dict = field(default_factory=dict)
    constant: bool = False
    warnings: list[str] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    val_auc: list[float] = field(default_factory=list)

    def raw_score(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows[None, :]
        if rows.shape[1] != len(self.feature_names):
            raise SchemaError(f"rows have {rows.shape[1]} features, model expects {len(self.feature_names)}")
        out = np.full(rows.shape[0], self.base_score)
        for t in self.trees:
            out += self.learning_rate * t.predict(rows)
        return out

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        return sigmoid(self.raw_score(rows))

    def to_dict(self) -> dict:
        return {
            "format_version": GBDT_FORMAT,
            "feature_names": list(self.feature_names),
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "bin_edges": [e.tolist() for e in self.edges],
            "trees": [t.to_dict() for t in self.trees],
            "config": self.config,
            "constant": self.constant,
            "warnings": self.warnings,
            "train_loss": self.train_loss,
            "val_auc": self.val_auc,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbdtModel":
        if d.get("format_version") != GBDT_FORMAT:
            raise SchemaError(f"unsupported GBDT format {d.get('format_version')!r}")
        return cls(
            [Tree.from_dict(t) for t in d["trees"]],
            float(d["base_score"]),
            float(d["learning_rate"]),
            [np.asarray(e, dtype=np.float64) for e in d["bin_edges"]],
            tuple(d["feature_names"]),
            d.get("config", {}),
            bool(d.get("constant", False)),
            list(d.get("warnings", [])),
            list(d.get("train_loss", [])),
            list(d.get("val_auc", [])),
        )

    def save(self, path: str | Path) -> Path:
        return atomic_write_json(path, self.to_dict())


def _logloss(y: np.ndarray, raw: np.ndarray) -> float:
    # log(1 + e^z) - y z, stable
    return float(np.mean(np.logaddexp(0.0, raw) - y * raw))


def train_gbdt(train: Dataset, val: Dataset | None, cfg: GbdtConfig) -> GbdtModel:
    """Boost logistic-loss trees; with ``val`` stop after ``early_stopping_rounds``
    rounds without a validation-AUC gain and keep the best prefix of trees."""
    y = train.y.astype(np.float64)
    names = tuple(train.feature_names)
    rate = float(y.mean())
    p0 = min(max(rate, PROB_CLAMP), 1 - PROB_CLAMP)
    base = float(np.log(p0 / (1 - p0)))
    edges = [bin_edges(train.X[:, j], cfg.n_bins) for j in range(train.X.shape[1])]
    if np.unique(train.y).size < 2:
        msg = f"single-class training labels (rate {rate}); returning a constant model"
        log.warning(msg)
        return GbdtModel([], base, cfg.learning_rate, edges, names, cfg.to_dict(), True, [msg])
    if train.n < 2 * cfg.min_samples_leaf:
        raise ValueError(f"need at least {2 * cfg.min_samples_leaf} training rows, got {train.n}")

    B = apply_bins(train.X, edges)
    nbins = [e.size + 1 for e in edges]
    raw = np.full(train.n, base)
    use_val = val is not None and np.unique(val.y).size == 2
    if val is not None and not use_val:
        log.warning("validation set has a single class; early stopping disabled")
    raw_val = np.full(val.n, base) if use_val else None

    trees: list[Tree] = []
    losses = [_logloss(y, raw)]
    val_aucs: list[float] = []
    best_auc, best_n, since = -np.inf, 0, 0
    all_rows = np.arange(train.n)
    for _ in range(cfg.n_estimators):
        p = sigmoid(raw)
        g = p - y
        h = p * (1 - p)
        tree = Tree()
        _grow(tree, all_rows, B, g, h, 0, cfg, nbins, edges)
        trees.append(tree)
        raw = raw + cfg.learning_rate * tree.predict_binned(B)
        losses.append(_logloss(y, raw))
        if use_val:
            raw_val = raw_val + cfg.learning_rate * tree.predict(val.X)
            a = auc(raw_val, val.y)
            val_aucs.append(a)
            if a > best_auc:
                best_auc, best_n, since = a, len(trees), 0
            else:
                since += 1
                if since >= cfg.early_stopping_rounds:
                    break
    if use_val:
        trees = trees[:best_n]
        losses = losses[: best_n + 1]
    return GbdtModel(trees, base, cfg.learning_rate, edges, names, cfg.to_dict(), False, [], losses, val_aucs)
