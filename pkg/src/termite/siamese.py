"""Four-layer siamese network trained with a contrastive loss.

Both sides of the pair run through the same weights (single storage, so
weight sharing is structural).  Hidden layers are rectified, the output
layer is linear.  Training is plain minibatch SGD with hand-written
backpropagation; gradients from both twins are summed into the shared
weights.  Everything is seeded and single-threaded, so a fixed seed gives a
bit-identical model.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .encode import EncodedVector, Encoder
from .pairs import TrainingPair

logger = logging.getLogger(__name__)

DEFAULT_HIDDEN_DIMS = (300, 200, 150)
DEFAULT_EMBEDDING_DIM = 100

MODEL_MAGIC = b"TMT1"


class TrainingDiverged(RuntimeError):
    """Raised when the loss stops being finite."""


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 32
    epochs: int = 50
    negative_ratio: float = 1.0
    margin: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.epochs <= 0:
            raise ValueError("learning_rate, batch_size and epochs must be positive")
        if self.negative_ratio <= 0 or self.margin <= 0:
            raise ValueError("negative_ratio and margin must be positive")


@dataclass
class SiameseModel:
    """Stacked affine layers; weights[i] has shape (in_dim, out_dim)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    margin: float = 1.0

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def embedding_dim(self) -> int:
        return self.weights[-1].shape[1]

    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]


def init_model(
    input_dim: int,
    hidden_dims: Sequence[int] = DEFAULT_HIDDEN_DIMS,
    embedding_dim: int = DEFAULT_EMBEDDING_DIM,
    margin: float = 1.0,
    seed: int = 0,
) -> SiameseModel:
    """Symmetric uniform fan-scaled init: W ~ U(+-sqrt(6/(fan_in+fan_out)))."""
    dims = [input_dim, *hidden_dims, embedding_dim]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return SiameseModel(weights=weights, biases=biases, margin=margin)


def _as_input(x: EncodedVector | np.ndarray) -> np.ndarray:
    if isinstance(x, EncodedVector):
        return x.dense()
    return np.asarray(x, dtype=np.float64)


def forward(model: SiameseModel, x: EncodedVector | np.ndarray) -> np.ndarray:
    """Embedding of a single input vector."""
    a = _as_input(x)
    if a.shape != (model.input_dim,):
        raise ValueError(f"input has shape {a.shape}, model expects ({model.input_dim},)")
    return forward_batch(model, a[None, :])[0]


def forward_batch(model: SiameseModel, x: np.ndarray) -> np.ndarray:
    """Embeddings for a (n, input_dim) batch."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValueError(f"batch has shape {x.shape}, model expects (n, {model.input_dim})")
    a = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        a = a @ w + b
        if i < last:
            np.maximum(a, 0.0, out=a)
    return a


def contrastive_loss(label: int, distance: float, margin: float) -> float:
    """(1-Y) D^2 + Y max(0, m-D)^2 for a single pair."""
    if distance < 0:
        raise ValueError(f"distance must be non-negative, got {distance}")
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label}")
    if label == 0:
        return distance * distance
    gap = max(0.0, margin - distance)
    return gap * gap


def _forward_trace(model: SiameseModel, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Activations of every layer, for backprop."""
    acts = [x]
    last = len(model.weights) - 1
    a = x
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        a = a @ w + b
        if i < last:
            np.maximum(a, 0.0, out=a)
        acts.append(a)
    return acts, a


def pair_loss_and_gradients(
    model: SiameseModel,
    xa: np.ndarray,
    xb: np.ndarray,
    labels: np.ndarray,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean contrastive loss over a batch and its gradients w.r.t. weights.

    xa, xb: (n, input_dim); labels: (n,) of {0, 1}.  Gradients from the two
    twins are summed, matching the shared-weight architecture.  The repulsive
    term has no defined direction at distance exactly 0; its gradient
    contribution is 0 there.
    """
    xa = np.asarray(xa, dtype=np.float64)
    xb = np.asarray(xb, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    n = xa.shape[0]
    m = model.margin

    acts_a, ea = _forward_trace(model, xa)
    acts_b, eb = _forward_trace(model, xb)

    diff = ea - eb
    dist = np.sqrt(np.sum(diff * diff, axis=1))
    gap = np.maximum(0.0, m - dist)
    losses = (1.0 - labels) * dist * dist + labels * gap * gap
    loss = float(np.mean(losses))

    # d(loss)/d(ea) per row: related pairs pull (2 diff), unrelated pairs
    # inside the margin push (-2 (m-D)/D diff).
    coef = 2.0 * (1.0 - labels)
    active = (labels > 0) & (dist > 0.0) & (dist < m)
    safe = np.where(dist > 0.0, dist, 1.0)
    coef = coef + np.where(active, -2.0 * gap / safe, 0.0)
    g_out = (coef / n)[:, None] * diff

    grads_w = [np.zeros_like(w) for w in model.weights]
    grads_b = [np.zeros_like(b) for b in model.biases]
    for acts, g in ((acts_a, g_out), (acts_b, -g_out)):
        for layer in range(len(model.weights) - 1, -1, -1):
            grads_w[layer] += acts[layer].T @ g
            grads_b[layer] += g.sum(axis=0)
            if layer > 0:
                g = (g @ model.weights[layer].T) * (acts[layer] > 0.0)
    return loss, grads_w, grads_b


def train(
    pairs: Sequence[TrainingPair],
    encoder: Encoder,
    config: TrainConfig,
    hidden_dims: Sequence[int] = DEFAULT_HIDDEN_DIMS,
    embedding_dim: int = DEFAULT_EMBEDDING_DIM,
) -> tuple[SiameseModel, list[float]]:
    """Minibatch SGD over the pairs; returns the model and per-epoch mean loss."""
    if not pairs:
        raise ValueError("no training pairs")
    if len({p.label for p in pairs}) < 2:
        logger.warning("training pairs carry a single label; embedding may collapse")

    entities = list(dict.fromkeys(e for p in pairs for e in (p.a, p.b)))
    index = {e: i for i, e in enumerate(entities)}
    inputs = encoder.encode_matrix(entities)
    ia = np.array([index[p.a] for p in pairs], dtype=np.intp)
    ib = np.array([index[p.b] for p in pairs], dtype=np.intp)
    labels = np.array([p.label for p in pairs], dtype=np.float64)

    model = init_model(
        input_dim=encoder.vector_size,
        hidden_dims=hidden_dims,
        embedding_dim=embedding_dim,
        margin=config.margin,
        seed=config.seed,
    )
    rng = np.random.default_rng(config.seed)
    lr = config.learning_rate
    trace: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(pairs))
        total = 0.0
        for start in range(0, len(pairs), config.batch_size):
            sel = order[start : start + config.batch_size]
            loss, gw, gb = pair_loss_and_gradients(
                model, inputs[ia[sel]], inputs[ib[sel]], labels[sel]
            )
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, learning rate {lr}"
                )
            total += loss * len(sel)
            for layer in range(len(model.weights)):
                model.weights[layer] -= lr * gw[layer]
                model.biases[layer] -= lr * gb[layer]
        trace.append(total / len(pairs))
    return model, trace


def save_model(model: SiameseModel, path: str | Path) -> None:
    """Binary little-endian model file.

    Layout: magic "TMT1", u32 layer count, then per layer u32 rows, u32
    cols, rows*cols f64 weights row-major, cols f64 biases; trailing f64
    margin.
    """
    with Path(path).open("wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(model.weights)))
        for w, b in zip(model.weights, model.biases):
            rows, cols = w.shape
            fh.write(struct.pack("<II", rows, cols))
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
        fh.write(struct.pack("<d", model.margin))


def load_model(path: str | Path) -> SiameseModel:
    with Path(path).open("rb") as fh:
        magic = fh.read(4)
        if magic != MODEL_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        (layer_count,) = struct.unpack("<I", fh.read(4))
        weights, biases = [], []
        for _ in range(layer_count):
            rows, cols = struct.unpack("<II", fh.read(8))
            w = np.frombuffer(fh.read(8 * rows * cols), dtype="<f8").reshape(rows, cols)
            b = np.frombuffer(fh.read(8 * cols), dtype="<f8")
            weights.append(w.astype(np.float64))
            biases.append(b.astype(np.float64))
        (margin,) = struct.unpack("<d", fh.read(8))
    return SiameseModel(weights=weights, biases=biases, margin=margin)


def read_model_input_dim(path: str | Path) -> int:
    """Input width recorded in a model file, without loading the weights."""
    with Path(path).open("rb") as fh:
        if fh.read(4) != MODEL_MAGIC:
            raise ValueError(f"{path}: not a model file")
        fh.read(4)
        (rows, _) = struct.unpack("<II", fh.read(8))
    return rows
