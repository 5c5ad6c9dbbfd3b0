"""Self-contained trainable classifiers and synthetic tasks.

Small multilayer perceptrons with hand-rolled gradients, trained by
plain SGD with deterministic, seed-keyed shuffling, plus three families
of synthetic classification tasks (blobs, moons, rings).  Everything is
bit-reproducible from its seeds; there is no adaptive-optimizer state.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import Access, Classifier, LabeledDataset
from .errors import (
    IncompatibleTask,
    InfeasibleTask,
    TrainingDiverged,
)

ACTIVATIONS = ("relu", "tanh")
LOSSES = ("cross-entropy", "distillation-kl")

_BLOB_RADIUS = 3.0
_RING_GAP = 1.2
_MOON_NOISE = 0.2
_RING_NOISE = 0.15


@dataclass(frozen=True)
class MLPSpec:
    """Architecture of a small MLP: input dim, hidden widths, output classes."""

    layer_widths: tuple[int, ...]
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        if len(self.layer_widths) < 3:
            raise ValueError("need at least one hidden layer: (d, hidden..., C)")
        if any(w < 1 for w in self.layer_widths):
            raise ValueError("layer widths must be positive")
        if self.layer_widths[-1] < 2:
            raise ValueError("output width (number of classes) must be >= 2")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    learning_rate: float = 0.05
    batch_size: int = 64
    weight_decay: float = 0.0
    loss: str = "cross-entropy"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")


@dataclass(frozen=True)
class SyntheticTaskSpec:
    """A synthetic classification task.

    ``seed`` controls the data draw (points, label noise).  ``concept_seed``
    controls the task geometry (blob directions, moon rotation, ring
    permutation), so two specs sharing a concept_seed describe the same
    underlying concept sampled independently.  ``noise_scale`` scales the
    within-class spread; 1.0 gives moderately overlapping classes so that
    trained models keep a nonzero error rate.
    """

    family: str
    num_classes: int
    dim: int
    n_train: int
    n_test: int
    label_noise: float = 0.1
    noise_scale: float = 1.0
    seed: int = 0
    concept_seed: int = 0

    def __post_init__(self):
        if self.family not in ("blobs", "moons", "rings"):
            raise ValueError(f"unknown task family {self.family!r}")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("n_train and n_test must be >= 1")
        if not 0.0 <= self.label_noise < 0.5:
            raise ValueError("label_noise must lie in [0, 0.5)")
        if self.noise_scale <= 0:
            raise ValueError("noise_scale must be positive")


def _blob_centers(spec: SyntheticTaskSpec) -> np.ndarray:
    # orthonormal class directions scaled to a fixed radius; at most
    # `dim` mutually orthogonal directions exist
    if spec.num_classes > spec.dim:
        raise InfeasibleTask(
            f"blobs supports at most dim={spec.dim} classes, got {spec.num_classes}"
        )
    rng = np.random.default_rng(spec.concept_seed)
    G = rng.standard_normal((spec.dim, spec.num_classes))
    Q, _ = np.linalg.qr(G)
    return _BLOB_RADIUS * Q.T  # (C, d)


def _sample_family(spec: SyntheticTaskSpec, rng: np.random.Generator, n: int):
    C, d = spec.num_classes, spec.dim
    if spec.family == "blobs":
        centers = _blob_centers(spec)
        k = rng.integers(0, C, n)
        X = centers[k] + spec.noise_scale * rng.standard_normal((n, d))
        return X, k + 1

    if d < 2:
        raise InfeasibleTask(f"{spec.family} needs dim >= 2, got {d}")
    concept_rng = np.random.default_rng(spec.concept_seed)

    if spec.family == "moons":
        if C != 2:
            raise InfeasibleTask(f"moons represents exactly 2 classes, got {C}")
        phi = concept_rng.uniform(0.0, 2.0 * np.pi)
        k = rng.integers(0, 2, n)
        t = rng.uniform(0.0, np.pi, n)
        sx = np.where(k == 0, np.cos(t), 1.0 - np.cos(t))
        sy = np.where(k == 0, np.sin(t), 0.5 - np.sin(t))
        rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
        signal = np.stack([sx, sy], axis=1) @ rot.T
        X = _MOON_NOISE * spec.noise_scale * rng.standard_normal((n, d))
        X[:, :2] += signal
        return X, k + 1

    # rings: concentric circles; the class -> radius assignment is the concept
    perm = concept_rng.permutation(C)
    radii = 1.0 + _RING_GAP * perm
    k = rng.integers(0, C, n)
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    X = _RING_NOISE * spec.noise_scale * rng.standard_normal((n, d))
    X[:, 0] += radii[k] * np.cos(theta)
    X[:, 1] += radii[k] * np.sin(theta)
    return X, k + 1


def generate_task(spec: SyntheticTaskSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Draw the (train, test) datasets for a synthetic task.

    Deterministic given the spec.  Exactly ``floor(label_noise * n_train)``
    training labels are flipped, each to a uniformly chosen other class;
    test labels stay clean.
    """
    rng = np.random.default_rng(spec.seed)
    X_train, y_train = _sample_family(spec, rng, spec.n_train)
    X_test, y_test = _sample_family(spec, rng, spec.n_test)

    n_flip = int(spec.label_noise * spec.n_train)
    if n_flip:
        idx = rng.choice(spec.n_train, n_flip, replace=False)
        offsets = rng.integers(1, spec.num_classes, n_flip)
        y_train[idx] = (y_train[idx] - 1 + offsets) % spec.num_classes + 1

    train = LabeledDataset(
        X_train, y_train, spec.num_classes, np.full(spec.n_train, "train")
    )
    test = LabeledDataset(X_test, y_test, spec.num_classes, np.full(spec.n_test, "test"))
    return train, test


# ---------------------------------------------------------------------------
# MLP forward/backward
# ---------------------------------------------------------------------------


def _act(name: str, Z: np.ndarray) -> np.ndarray:
    return np.maximum(Z, 0.0) if name == "relu" else np.tanh(Z)


def _act_grad_from_output(name: str, A: np.ndarray) -> np.ndarray:
    return (A > 0.0).astype(np.float64) if name == "relu" else 1.0 - A * A


def softmax(logits: np.ndarray) -> np.ndarray:
    Z = logits - logits.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def _forward(weights, activation: str, X: np.ndarray):
    """Activations per layer plus final logits."""
    A = [X]
    for W, b in weights[:-1]:
        A.append(_act(activation, A[-1] @ W + b))
    W, b = weights[-1]
    return A, A[-1] @ W + b


def init_weights(spec: MLPSpec, rng: np.random.Generator):
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases."""
    weights = []
    for fan_in, fan_out in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        W = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        weights.append((W, np.zeros(fan_out)))
    return weights


def _sgd_epochs(
    weights,
    activation: str,
    X: np.ndarray,
    T: np.ndarray,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> list[float]:
    """Run ``cfg.epochs`` of SGD in place on ``weights``; return epoch losses.

    ``T`` holds per-point target distributions (one-hot for hard labels).
    The recorded loss is mean cross-entropy of the targets, which for
    distillation differs from the KL objective only by the constant
    target entropy; the gradients coincide.
    """
    n = X.shape[0]
    lr, wd = cfg.learning_rate, cfg.weight_decay
    history = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            Xb, Tb = X[idx], T[idx]
            A, logits = _forward(weights, activation, Xb)
            P = softmax(logits)
            loss_sum += -np.sum(Tb * np.log(np.maximum(P, 1e-300)))
            g = (P - Tb) / len(idx)
            for layer in reversed(range(len(weights))):
                W, b = weights[layer]
                dW = A[layer].T @ g + wd * W
                db = g.sum(axis=0)
                if layer > 0:
                    g = (g @ W.T) * _act_grad_from_output(activation, A[layer])
                W -= lr * dW
                b -= lr * db
        epoch_loss = loss_sum / n
        if not np.isfinite(epoch_loss):
            raise TrainingDiverged(f"non-finite loss {epoch_loss} during SGD")
        history.append(float(epoch_loss))
    return history


class MLPClassifier(Classifier):
    """A trained MLP handle with full (gradient-level) access.

    Weights are stored read-only; derived models are built from copies so
    the source handle is never mutated.
    """

    def __init__(self, spec: MLPSpec, weights, identity=None, tag=None, train_loss=None):
        super().__init__(
            identity or f"mlp-{'x'.join(map(str, spec.layer_widths))}-s{spec.seed}",
            spec.layer_widths[-1],
            spec.layer_widths[0],
            Access.GRADIENTS,
            tag=tag,
        )
        self.spec = spec
        frozen = []
        for W, b in weights:
            W = np.array(W, dtype=np.float64)
            b = np.array(b, dtype=np.float64)
            W.setflags(write=False)
            b.setflags(write=False)
            frozen.append((W, b))
        self.weights = tuple(frozen)
        self.train_loss = tuple(train_loss) if train_loss is not None else ()

    @property
    def n_params(self) -> int:
        return sum(W.size + b.size for W, b in self.weights)

    def clone(self, identity: str, weights=None, tag=None) -> "MLPClassifier":
        """New handle sharing this architecture, with fresh weight copies."""
        src = weights if weights is not None else self.weights
        return MLPClassifier(
            self.spec,
            [(W.copy(), b.copy()) for W, b in src],
            identity=identity,
            tag=tag,
            train_loss=self.train_loss,
        )

    def _logits(self, X: np.ndarray) -> np.ndarray:
        _, logits = _forward(self.weights, self.spec.activation, X)
        return logits

    def logits(self, X) -> np.ndarray:
        """Raw logits, shape (n, C); same access level as probits."""
        self._require(Access.PROBITS, "logit queries")
        return self._logits(self._as_batch(X))

    def _probits(self, X: np.ndarray) -> np.ndarray:
        return softmax(self._logits(X))

    def _backprop_to_input(self, X: np.ndarray, dlogits: np.ndarray) -> np.ndarray:
        A, _ = _forward(self.weights, self.spec.activation, X)
        g = dlogits
        for layer in reversed(range(len(self.weights))):
            W, _ = self.weights[layer]
            g = g @ W.T
            if layer > 0:
                g = g * _act_grad_from_output(self.spec.activation, A[layer])
        return g

    def _input_gradient(self, x: np.ndarray, label: int) -> np.ndarray:
        sel = np.zeros((1, self.num_classes))
        sel[0, label - 1] = 1.0
        return self._backprop_to_input(x.reshape(1, -1), sel)[0]

    def xent_input_gradient(self, X, labels) -> np.ndarray:
        X = self._as_batch(X)
        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        P = self._probits(X)
        D = P.copy()
        D[np.arange(X.shape[0]), labels - 1] -= 1.0
        return self._backprop_to_input(X, D)


class LinearClassifier(Classifier):
    """Softmax-linear model: logits = x @ W.T + b.

    Handy for closed-form oracle checks; the input gradient of logit ``c``
    is exactly the weight row ``W[c-1]``.
    """

    def __init__(self, W, b=None, identity: str = "linear", tag=None):
        W = np.asarray(W, dtype=np.float64)
        b = np.zeros(W.shape[0]) if b is None else np.asarray(b, dtype=np.float64)
        super().__init__(identity, W.shape[0], W.shape[1], Access.GRADIENTS, tag=tag)
        self.W = W
        self.b = b

    def _probits(self, X: np.ndarray) -> np.ndarray:
        return softmax(X @ self.W.T + self.b)

    def logits(self, X) -> np.ndarray:
        self._require(Access.PROBITS, "logit queries")
        return self._as_batch(X) @ self.W.T + self.b

    def _input_gradient(self, x: np.ndarray, label: int) -> np.ndarray:
        return self.W[label - 1].copy()

    def xent_input_gradient(self, X, labels) -> np.ndarray:
        X = self._as_batch(X)
        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        D = self._probits(X)
        D[np.arange(X.shape[0]), labels - 1] -= 1.0
        return D @ self.W


def train(
    dataset: LabeledDataset,
    arch: MLPSpec,
    cfg: TrainConfig = TrainConfig(),
    soft_targets=None,
    identity: str | None = None,
    tag=None,
) -> MLPClassifier:
    """Train an MLP; deterministic given (dataset, arch, cfg).

    ``arch.seed`` drives both initialization and epoch shuffling.  With
    ``loss="distillation-kl"`` the per-point target distributions must be
    supplied via ``soft_targets`` (shape ``(n, C)``); otherwise targets
    are one-hot on the dataset labels.
    """
    if dataset.dim != arch.layer_widths[0]:
        raise IncompatibleTask(
            f"dataset dimension {dataset.dim} != input width {arch.layer_widths[0]}"
        )
    if dataset.num_classes != arch.layer_widths[-1]:
        raise IncompatibleTask(
            f"dataset has {dataset.num_classes} classes, output width is "
            f"{arch.layer_widths[-1]}"
        )
    n, C = len(dataset), dataset.num_classes
    if cfg.loss == "distillation-kl":
        if soft_targets is None:
            raise ValueError("distillation-kl loss needs soft_targets")
        T = np.asarray(soft_targets, dtype=np.float64)
        if T.shape != (n, C):
            raise ValueError(f"soft_targets must have shape ({n}, {C}), got {T.shape}")
    else:
        T = np.zeros((n, C))
        T[np.arange(n), dataset.labels - 1] = 1.0

    rng = np.random.default_rng(arch.seed)
    weights = init_weights(arch, rng)
    history = _sgd_epochs(weights, arch.activation, dataset.points, T, cfg, rng)
    return MLPClassifier(arch, weights, identity=identity, tag=tag, train_loss=history)


def continue_training(
    model: MLPClassifier,
    dataset: LabeledDataset,
    cfg: TrainConfig,
    seed: int,
    identity: str,
    tag=None,
) -> MLPClassifier:
    """More SGD epochs from an existing model's weights; the source is untouched."""
    if dataset.dim != model.input_dim:
        raise IncompatibleTask(
            f"dataset dimension {dataset.dim} != model input {model.input_dim}"
        )
    if dataset.num_classes != model.num_classes:
        raise IncompatibleTask(
            f"dataset has {dataset.num_classes} classes, model has {model.num_classes}"
        )
    weights = [(W.copy(), b.copy()) for W, b in model.weights]
    n = len(dataset)
    T = np.zeros((n, model.num_classes))
    T[np.arange(n), dataset.labels - 1] = 1.0
    rng = np.random.default_rng(seed)
    history = _sgd_epochs(weights, model.spec.activation, dataset.points, T, cfg, rng)
    return MLPClassifier(model.spec, weights, identity=identity, tag=tag, train_loss=history)


def input_gradient(h: Classifier, x, class_index: int) -> np.ndarray:
    """Gradient of the chosen logit with respect to the input point."""
    return h.input_gradient(x, class_index)


# ---------------------------------------------------------------------------
# Weight file format: magic, version, activation, seed, widths, then
# little-endian float64 W and b arrays in layer order.
# ---------------------------------------------------------------------------

_MAGIC = b"MPW1"
_VERSION = 1
_ACT_CODES = {"relu": 0, "tanh": 1}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}


def save_weights(model: MLPClassifier, path) -> None:
    path = Path(path)
    widths = model.spec.layer_widths
    with path.open("wb") as fh:
        fh.write(_MAGIC)
        fh.write(
            struct.pack(
                "<HHQI", _VERSION, _ACT_CODES[model.spec.activation],
                model.spec.seed % 2**64, len(widths),
            )
        )
        fh.write(struct.pack(f"<{len(widths)}I", *widths))
        for W, b in model.weights:
            fh.write(W.astype("<f8").tobytes())
            fh.write(b.astype("<f8").tobytes())


def load_weights(path, identity: str | None = None, tag=None) -> MLPClassifier:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a model weight file")
    version, act_code, seed, n_widths = struct.unpack_from("<HHQI", raw, 4)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported weight file version {version}")
    offset = 4 + struct.calcsize("<HHQI")
    widths = struct.unpack_from(f"<{n_widths}I", raw, offset)
    offset += 4 * n_widths
    spec = MLPSpec(widths, _ACT_NAMES[act_code], seed=seed)
    weights = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        W = np.frombuffer(raw, "<f8", fan_in * fan_out, offset).reshape(fan_in, fan_out)
        offset += 8 * fan_in * fan_out
        b = np.frombuffer(raw, "<f8", fan_out, offset)
        offset += 8 * fan_out
        weights.append((W.copy(), b.copy()))
    return MLPClassifier(spec, weights, identity=identity, tag=tag)


def reseed(arch: MLPSpec, seed: int) -> MLPSpec:
    """The same architecture with a different training seed."""
    return replace(arch, seed=int(seed))
