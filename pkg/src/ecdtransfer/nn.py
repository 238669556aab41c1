"""Minimal dense-network engine: ReLU MLPs, inverted dropout, Adam, and losses.

Everything is float64 and numpy-only. Weight matrices are stored ``(out, in)``
so a layer computes ``x @ W.T + b`` on row-major batches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ArchitectureError",
    "ShapeError",
    "NumericalError",
    "MlpParams",
    "Trace",
    "Gradients",
    "AdamState",
    "init_mlp",
    "forward",
    "backward",
    "adam_init",
    "adam_step",
    "adam_update",
    "mse_masked_loss",
    "bce_loss",
    "sigmoid",
    "grad_check",
    "PROB_CLAMP",
]

PROB_CLAMP = 1e-7


class ArchitectureError(ValueError):
    pass


class ShapeError(ValueError):
    pass


class NumericalError(FloatingPointError):
    """Raised when a loss or gradient stops being finite."""


@dataclass
class MlpParams:
    """Weights and biases of a fully connected net.

    Hidden layers use ReLU, the output layer is linear.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray]) -> "MlpParams":
        return cls(weights=list(arrays[0::2]), biases=list(arrays[1::2]))

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def n_params(self) -> int:
        return sum(a.size for a in self.arrays())

    def validate(self) -> None:
        if not self.weights or len(self.weights) != len(self.biases):
            raise ArchitectureError("weights and biases must be non-empty and paired")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ShapeError(f"layer {i}: input width {w.shape[1]} != {self.weights[i - 1].shape[0]}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NumericalError(f"layer {i} holds non-finite values")

    def to_dict(self) -> dict:
        return {
            "layer_dims": self.layer_dims,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpParams":
        p = cls(
            [np.asarray(w, dtype=np.float64).reshape(len(w), -1) for w in d["weights"]],
            [np.asarray(b, dtype=np.float64) for b in d["biases"]],
        )
        p.validate()
        if "layer_dims" in d and list(d["layer_dims"]) != p.layer_dims:
            raise ShapeError(f"layer_dims {d['layer_dims']} disagree with weights {p.layer_dims}")
        return p


Gradients = MlpParams


def init_mlp(layer_dims: Sequence[int], seed: int) -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2:
        raise ArchitectureError(f"need at least input and output widths, got {dims}")
    if any(d < 1 for d in dims):
        raise ArchitectureError(f"layer widths must be >= 1, got {dims}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


@dataclass
class Trace:
    """Activations recorded by :func:`forward` for the backward pass."""

    inputs: np.ndarray
    pre: list[np.ndarray] = field(default_factory=list)
    post: list[np.ndarray] = field(default_factory=list)
    # per hidden layer; None where dropout was not applied
    dropout_masks: list[np.ndarray | None] = field(default_factory=list)
    relu_last: bool = False

    @property
    def output(self) -> np.ndarray:
        return self.post[-1]


def forward(
    params: MlpParams,
    inputs: np.ndarray,
    dropout_rate: float = 0.0,
    train: bool = False,
    rng: np.random.Generator | None = None,
    relu_last: bool = False,
) -> Trace:
    """Run the net on a batch and keep what backward needs.

    In train mode hidden activations get inverted dropout (kept units scaled
    by ``1/(1-p)``); in eval mode dropout is the identity. ``relu_last`` also
    rectifies the final layer, which is how the encoder's latent is read out.
    """
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != params.weights[0].shape[1]:
        raise ShapeError(f"input width {x.shape[1]} != layer_dims[0] {params.weights[0].shape[1]}")
    if not 0.0 <= dropout_rate < 1.0:
        raise ValueError(f"dropout_rate must be in [0, 1), got {dropout_rate}")
    use_dropout = train and dropout_rate > 0.0
    if use_dropout and rng is None:
        raise ValueError("train-mode dropout needs an rng")

    trace = Trace(inputs=x, relu_last=relu_last)
    h = x
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w.T + b
        trace.pre.append(z)
        if i < last or relu_last:
            h = np.maximum(z, 0.0)
            if use_dropout and i < last:
                keep = rng.random(h.shape) >= dropout_rate
                mask = keep / (1.0 - dropout_rate)
                h = h * mask
                trace.dropout_masks.append(mask)
            else:
                trace.dropout_masks.append(None)
        else:
            h = z
            trace.dropout_masks.append(None)
        trace.post.append(h)
    return trace


def backward(
    params: MlpParams, trace: Trace, output_grad: np.ndarray, need_input_grad: bool = False
) -> Gradients | tuple[Gradients, np.ndarray]:
    """Backpropagate ``dL/d output`` through the recorded trace.

    Returns gradients shaped like ``params``; with ``need_input_grad`` also the
    gradient with respect to the batch inputs.
    """
    if len(trace.pre) != params.n_layers:
        raise ShapeError("trace was recorded on a different architecture")
    for i, (w, z) in enumerate(zip(params.weights, trace.pre)):
        if z.shape[1] != w.shape[0]:
            raise ShapeError(f"stale trace at layer {i}: {z.shape[1]} units vs weight rows {w.shape[0]}")
    g = np.asarray(output_grad, dtype=np.float64)
    if g.ndim == 1:
        g = g.reshape(trace.output.shape)
    if g.shape != trace.output.shape:
        raise ShapeError(f"output_grad {g.shape} != output {trace.output.shape}")

    n = params.n_layers
    gw: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    for i in range(n - 1, -1, -1):
        if i < n - 1 or trace.relu_last:
            mask = trace.dropout_masks[i]
            if mask is not None:
                g = g * mask
            g = g * (trace.pre[i] > 0.0)
        h_in = trace.inputs if i == 0 else trace.post[i - 1]
        gw[i] = g.T @ h_in
        gb[i] = g.sum(axis=0)
        if i > 0 or need_input_grad:
            g = g @ params.weights[i]
    grads = MlpParams(gw, gb)
    if need_input_grad:
        return grads, g
    return grads


@dataclass
class AdamState:
    """Moment estimates for a flat list of parameter arrays."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    learning_rate: float = 1e-3
    l2: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(params: MlpParams | Sequence[np.ndarray], learning_rate: float, l2: float = 0.0) -> AdamState:
    arrays = params.arrays() if isinstance(params, MlpParams) else list(params)
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    if l2 < 0:
        raise ValueError("l2 must be non-negative")
    return AdamState(
        m=[np.zeros_like(a) for a in arrays],
        v=[np.zeros_like(a) for a in arrays],
        learning_rate=float(learning_rate),
        l2=float(l2),
    )


def adam_update(
    state: AdamState, arrays: Sequence[np.ndarray], grads: Sequence[np.ndarray]
) -> tuple[AdamState, list[np.ndarray]]:
    """One bias-corrected Adam step with decoupled weight decay.

    Decay is applied first, ``p <- p - lr*l2*p``, then the Adam move.
    Inputs are not modified.
    """
    if len(arrays) != len(grads) or len(arrays) != len(state.m):
        raise ShapeError("parameter, gradient and moment lists differ in length")
    for i, (a, g) in enumerate(zip(arrays, grads)):
        if a.shape != g.shape:
            raise ShapeError(f"array {i}: param {a.shape} vs grad {g.shape}")
        if not np.all(np.isfinite(g)):
            bad = np.abs(g[np.isfinite(g)])
            mx = float(bad.max()) if bad.size else float("nan")
            raise NumericalError(
                f"non-finite gradient in layer {i // 2} ({'weight' if i % 2 == 0 else 'bias'}); "
                f"max finite magnitude {mx:.3g}"
            )
    t = state.step + 1
    b1, b2, lr = state.beta1, state.beta2, state.learning_rate
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_m, new_v, new_p = [], [], []
    for a, g, m, v in zip(arrays, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        p = a - lr * state.l2 * a if state.l2 else a
        p = p - lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        new_m.append(m)
        new_v.append(v)
        new_p.append(p)
    new_state = AdamState(new_m, new_v, t, state.learning_rate, state.l2, b1, b2, state.eps)
    return new_state, new_p


def adam_step(state: AdamState, params: MlpParams, grads: Gradients) -> tuple[AdamState, MlpParams]:
    state, arrays = adam_update(state, params.arrays(), grads.arrays())
    return state, MlpParams.from_arrays(arrays)


def mse_masked_loss(pred: np.ndarray, target: np.ndarray, mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared reconstruction error over the masked cells only."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if not (pred.shape == target.shape == mask.shape):
        raise ShapeError(f"pred {pred.shape}, target {target.shape}, mask {mask.shape} differ")
    count = int(mask.sum())
    if count == 0:
        raise ValueError("mask selects no cells; masked loss is undefined")
    diff = np.where(mask, pred - target, 0.0)
    loss = float(np.sum(diff * diff) / count)
    return loss, 2.0 * diff / count


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_loss(probabilities: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient w.r.t. the pre-sigmoid logits.

    Probabilities are clamped to ``[PROB_CLAMP, 1 - PROB_CLAMP]`` inside the log
    only; the gradient ``(p - y)/n`` uses the unclamped values.
    """
    p = np.asarray(probabilities, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if p.shape != y.shape:
        raise ShapeError(f"{p.shape[0]} probabilities vs {y.shape[0]} labels")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss = float(-np.mean(y * np.log(pc) + (1.0 - y) * np.log1p(-pc)))
    return loss, (p - y) / p.size


def grad_check(
    params: MlpParams,
    loss_closure: Callable[[MlpParams], tuple[float, Gradients]],
    eps: float = 1e-5,
    n_coords: int = 200,
    seed: int = 0,
    floor: float = 1e-6,
) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    ``loss_closure(params) -> (loss, grads)`` must be deterministic. Up to
    ``n_coords`` coordinates are sampled (all of them when the net is smaller).
    Relative error is ``|a - n| / max(|a|, |n|, floor)``.
    """
    _, analytic = loss_closure(params)
    arrays = [a.copy() for a in params.arrays()]
    grads = analytic.arrays()
    sizes = np.array([a.size for a in arrays])
    total = int(sizes.sum())
    rng = np.random.default_rng(seed)
    flat = np.arange(total) if total <= n_coords else rng.choice(total, size=n_coords, replace=False)
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    worst = 0.0
    for k in np.sort(flat):
        ai = int(np.searchsorted(offsets, k, side="right") - 1)
        idx = np.unravel_index(int(k - offsets[ai]), arrays[ai].shape)
        orig = arrays[ai][idx]
        arrays[ai][idx] = orig + eps
        lp, _ = loss_closure(MlpParams.from_arrays(arrays))
        arrays[ai][idx] = orig - eps
        lm, _ = loss_closure(MlpParams.from_arrays(arrays))
        arrays[ai][idx] = orig
        num = (lp - lm) / (2.0 * eps)
        ana = float(grads[ai][idx])
        rel = abs(ana - num) / max(abs(ana), abs(num), floor)
        worst = max(worst, rel)
    return worst
