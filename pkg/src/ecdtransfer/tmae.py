"""Masked-autoencoder pre-training for tabular rows.

Rows are standardized, a fixed number of cells per row are swapped for a
learned per-feature mask token, and an encoder/decoder MLP pair is trained to
reconstruct the hidden cells. Only masked cells enter the loss.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import nn
from .data import FEATURES, SchemaError, Standardizer, fit_standardizer
from .runtime import atomic_write_json, read_json, text_digest, dumps

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "ecdtransfer.encoder/1"


@dataclass
class PretrainConfig:
    epochs: int = 100
    batch_size: int = 512
    learning_rate: float = 0.001
    mask_ratio: float = 0.70
    seed: int = 42
    hidden_dims: tuple[int, int] = (256, 64)

    def __post_init__(self) -> None:
        if not 0.0 < self.mask_ratio < 1.0:
            raise ValueError("mask_ratio must be in (0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.hidden_dims = tuple(int(h) for h in self.hidden_dims)  # type: ignore[assignment]


def n_masked(d: int, ratio: float) -> int:
    """Cells hidden per row: ``round(ratio * d)``, which must land in [1, d-1]."""
    k = int(round(ratio * d))
    if k < 1 or k >= d:
        raise ValueError(f"mask ratio {ratio} on {d} features hides {k} cells; need 1..{d - 1}")
    return k


def sample_mask(d: int, ratio: float, rng: np.random.Generator) -> np.ndarray:
    """Sorted indices of the cells to hide in one row."""
    k = n_masked(d, ratio)
    return np.sort(rng.choice(d, size=k, replace=False))


def sample_mask_matrix(n: int, d: int, ratio: float, rng: np.random.Generator) -> np.ndarray:
    """Boolean (n, d) mask with exactly ``round(ratio*d)`` True cells per row, uniform per row."""
    k = n_masked(d, ratio)
    ranks = np.argsort(rng.random((n, d)), axis=1)
    mask = np.zeros((n, d), dtype=bool)
    np.put_along_axis(mask, ranks[:, :k], True, axis=1)
    return mask


def apply_mask(rows: np.ndarray, mask, mask_token: np.ndarray) -> np.ndarray:
    """Replace masked cells with the token's value for that feature.

    ``mask`` is a boolean array shaped like ``rows`` or, for a single row, a
    sequence of indices.
    """
    rows = np.asarray(rows, dtype=np.float64)
    token = np.asarray(mask_token, dtype=np.float64)
    m = np.asarray(mask)
    if m.dtype != bool:
        idx = m.astype(np.int64)
        m = np.zeros(rows.shape, dtype=bool)
        m[..., idx] = True
    return np.where(m, np.broadcast_to(token, rows.shape), rows)


@dataclass
class EncoderCheckpoint:
    encoder: nn.MlpParams
    decoder: nn.MlpParams
    mask_token: np.ndarray
    standardizer: Standardizer
    feature_names: tuple[str, ...] = FEATURES
    pretrain_meta: dict = field(default_factory=dict)
    format_version: str = CHECKPOINT_FORMAT

    def __post_init__(self) -> None:
        self.validate()

    @property
    def latent_dim(self) -> int:
        return self.encoder.layer_dims[-1]

    def validate(self) -> None:
        self.encoder.validate()
        self.decoder.validate()
        d = len(self.feature_names)
        if self.encoder.layer_dims[0] != d or self.decoder.layer_dims[-1] != d:
            raise SchemaError("encoder input / decoder output widths must equal the feature count")
        if self.encoder.layer_dims[-1] != self.decoder.layer_dims[0]:
            raise SchemaError("encoder output width must equal decoder input width")
        if np.asarray(self.mask_token).shape != (d,):
            raise SchemaError("mask token must have one entry per feature")
        if tuple(self.standardizer.feature_names) != tuple(self.feature_names):
            raise SchemaError("standardizer feature names differ from checkpoint feature names")
        if not np.all(self.standardizer.std > 0):
            raise SchemaError("zero-variance feature in standardizer")

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "feature_names": list(self.feature_names),
            "encoder": self.encoder.to_dict(),
            "decoder": self.decoder.to_dict(),
            "mask_token": np.asarray(self.mask_token).tolist(),
            "standardizer": self.standardizer.to_dict(),
            "pretrain_meta": self.pretrain_meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderCheckpoint":
        if d.get("format_version") != CHECKPOINT_FORMAT:
            raise SchemaError(f"unsupported checkpoint format {d.get('format_version')!r}")
        return cls(
            encoder=nn.MlpParams.from_dict(d["encoder"]),
            decoder=nn.MlpParams.from_dict(d["decoder"]),
            mask_token=np.asarray(d["mask_token"], dtype=np.float64),
            standardizer=Standardizer.from_dict(d["standardizer"]),
            feature_names=tuple(d["feature_names"]),
            pretrain_meta=d.get("pretrain_meta", {}),
        )

    def digest(self) -> str:
        return text_digest(dumps(self.to_dict()))

    def save(self, path: str | Path) -> Path:
        return atomic_write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str | Path) -> "EncoderCheckpoint":
        return cls.from_dict(read_json(path))


def _split_net(net: nn.MlpParams, n_enc: int) -> tuple[nn.MlpParams, nn.MlpParams]:
    return (
        nn.MlpParams(net.weights[:n_enc], net.biases[:n_enc]),
        nn.MlpParams(net.weights[n_enc:], net.biases[n_enc:]),
    )


def pretrain(
    features: np.ndarray,
    cfg: PretrainConfig,
    feature_names: Sequence[str] = FEATURES,
    standardizer: Standardizer | None = None,
) -> EncoderCheckpoint:
    """Train the masked autoencoder on an unlabeled feature matrix.

    The standardizer is fitted on ``features`` unless one is given. A fresh
    mask is drawn for every row in every epoch. The latent (encoder output)
    is ReLU-rectified, matching how the classifier reads it.
    """
    X = np.asarray(features, dtype=np.float64)
    d = X.shape[1]
    if d != len(feature_names):
        raise SchemaError(f"{d} columns but {len(feature_names)} feature names")
    std = standardizer or fit_standardizer(X, feature_names)
    Z = std.transform(X)
    n = Z.shape[0]
    h1, h2 = cfg.hidden_dims
    rng = np.random.default_rng(cfg.seed)
    net = nn.init_mlp([d, h1, h2, h1, d], seed=int(rng.integers(2**63)))
    token = np.zeros(d)
    arrays = net.arrays() + [token]
    state = nn.adam_init(arrays, cfg.learning_rate)
    history: list[float] = []
    unmasked_history: list[float] = []

    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total, count, un_total, un_count = 0.0, 0, 0.0, 0
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            target = Z[idx]
            mask = sample_mask_matrix(idx.size, d, cfg.mask_ratio, rng)
            inp = np.where(mask, token, target)
            trace = nn.forward(net, inp)
            loss, g_out = nn.mse_masked_loss(trace.output, target, mask)
            if not np.isfinite(loss):
                raise nn.NumericalError(f"non-finite reconstruction loss at epoch {epoch}, batch {bi}")
            grads, g_in = nn.backward(net, trace, g_out, need_input_grad=True)
            g_token = np.where(mask, g_in, 0.0).sum(axis=0)
            try:
                state, arrays = nn.adam_update(state, net.arrays() + [token], grads.arrays() + [g_token])
            except nn.NumericalError as exc:
                raise nn.NumericalError(f"epoch {epoch}, batch {bi}: {exc}") from exc
            net = nn.MlpParams.from_arrays(arrays[:-1])
            token = arrays[-1]
            m = int(mask.sum())
            total += loss * m
            count += m
            # reported only; the loss never sees visible cells
            un_total += float(np.sum(((trace.output - target) ** 2)[~mask]))
            un_count += mask.size - m
        history.append(total / count)
        unmasked_history.append(un_total / un_count)
        log.debug("pretrain epoch %d loss %.5f", epoch, history[-1])

    enc, dec = _split_net(net, 2)
    meta = {
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "learning_rate": cfg.learning_rate,
        "mask_ratio": cfg.mask_ratio,
        "seed": cfg.seed,
        "hidden_dims": list(cfg.hidden_dims),
        "n_rows": n,
        "final_loss": history[-1],
        "loss_history": history,
        "final_unmasked_loss": unmasked_history[-1],
    }
    return EncoderCheckpoint(enc, dec, token, std, tuple(feature_names), meta)


def loss_trend_decreasing(history: Sequence[float], window: int = 5) -> bool:
    """True when the mean of the last ``window`` epochs is below the first ``window``."""
    h = np.asarray(history, dtype=np.float64)
    w = max(1, min(window, h.size // 2))
    return bool(h[-w:].mean() < h[:w].mean())


def _check_width(ckpt: EncoderCheckpoint, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.shape[1] != len(ckpt.feature_names):
        raise SchemaError(f"rows have {rows.shape[1]} features, checkpoint expects {len(ckpt.feature_names)}")
    return rows


def embed(ckpt: EncoderCheckpoint, rows: np.ndarray) -> np.ndarray:
    """Latent representation of raw-unit rows (standardized inside, nothing masked)."""
    rows = _check_width(ckpt, rows)
    return nn.forward(ckpt.encoder, ckpt.standardizer.transform(rows), relu_last=True).output


def reconstruct(ckpt: EncoderCheckpoint, rows: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, float]:
    """Decoder output (standardized units) and masked MSE for the given boolean mask."""
    rows = _check_width(ckpt, rows)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != rows.shape:
        raise SchemaError(f"mask shape {mask.shape} != rows {rows.shape}")
    Z = ckpt.standardizer.transform(rows)
    inp = np.where(mask, ckpt.mask_token, Z)
    latent = nn.forward(ckpt.encoder, inp, relu_last=True).output
    recon = nn.forward(ckpt.decoder, latent).output
    loss, _ = nn.mse_masked_loss(recon, Z, mask)
    return recon, loss


def random_checkpoint(
    feature_names: Sequence[str], standardizer: Standardizer, seed: int, hidden_dims=(256, 64)
) -> EncoderCheckpoint:
    """Untrained checkpoint (same layout as :func:`pretrain` output)."""
    d = len(feature_names)
    h1, h2 = hidden_dims
    net = nn.init_mlp([d, h1, h2, h1, d], seed)
    enc, dec = _split_net(net, 2)
    return EncoderCheckpoint(enc, dec, np.zeros(d), standardizer, tuple(feature_names), {"epochs": 0, "seed": seed})


def config_dict(cfg: PretrainConfig) -> dict:
    d = asdict(cfg)
    d["hidden_dims"] = list(cfg.hidden_dims)
    return d
