"""Factory of stolen and unrelated models.

Implements the stealing routes (direct leak, label/probit/adversarial
extraction) and the weight-space obfuscations (pruning, quantization,
finetuning, transfer) plus output-noise wrappers.  Every operation
returns a fresh handle carrying a provenance tag; source models are
never mutated.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Access, Classifier, LabeledDataset
from .errors import (
    DegeneratePrune,
    DegenerateQuantization,
    EmptyQueryPool,
    IncompatibleTask,
)
from .samplers import projected_gradient_ascent
from .tinylearn import (
    MLPClassifier,
    MLPSpec,
    TrainConfig,
    continue_training,
    train,
    _sgd_epochs,
)

STEALING_METHODS = (
    "same",
    "prune",
    "quantize",
    "finetune",
    "transfer",
    "probit_extraction",
    "label_extraction",
    "adversarial_label_extraction",
    "unrelated",
)

EXTRACTION_MODES = {
    "labels": "label_extraction",
    "probits": "probit_extraction",
    "adversarial_labels": "adversarial_label_extraction",
}


@dataclass(frozen=True)
class TaskTag:
    """Provenance of a benchmark model: how it was produced, with parameters."""

    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in STEALING_METHODS:
            raise ValueError(f"unknown stealing method {self.method!r}")
        object.__setattr__(self, "params", dict(self.params))

    @property
    def is_positive(self) -> bool:
        return self.method != "unrelated"

    def to_record(self) -> dict:
        return {"method": self.method, "params": dict(self.params)}

    @staticmethod
    def from_record(rec: dict) -> "TaskTag":
        return TaskTag(rec["method"], rec.get("params", {}))


def _require_mlp(h: Classifier) -> MLPClassifier:
    if not isinstance(h, MLPClassifier):
        raise IncompatibleTask(
            f"{h.identity}: weight-space variants need an in-process MLP handle"
        )
    return h


def same_copy(h: MLPClassifier, identity: str | None = None) -> MLPClassifier:
    """A verbatim copy of the victim (direct model leak)."""
    h = _require_mlp(h)
    return h.clone(identity or f"{h.identity}#same", tag=TaskTag("same"))


def prune(h: Classifier, fraction: float, seed: int = 0) -> MLPClassifier:
    """Zero out the globally smallest-magnitude weights.

    Global magnitude ranking across all weight matrices (biases are kept),
    ties broken by flat index.  ``seed`` only enters the provenance tag;
    the operation itself is deterministic.
    """
    h = _require_mlp(h)
    if not 0.0 <= fraction < 1.0:
        raise DegeneratePrune(f"prune fraction must lie in [0, 1), got {fraction}")
    mats = [W.copy() for W, _ in h.weights]
    flat = np.concatenate([np.abs(W).ravel() for W in mats])
    n_zero = int(fraction * flat.size)
    if n_zero:
        order = np.argsort(flat, kind="stable")
        kill = np.zeros(flat.size, dtype=bool)
        kill[order[:n_zero]] = True
        offset = 0
        for W in mats:
            W.ravel()[kill[offset : offset + W.size]] = 0.0
            offset += W.size
    tag = TaskTag("prune", {"fraction": float(fraction), "seed": int(seed)})
    weights = [(W, b.copy()) for W, (_, b) in zip(mats, h.weights)]
    return h.clone(f"{h.identity}#prune{fraction:g}", weights=weights, tag=tag)


def quantize(h: Classifier, bits: int) -> MLPClassifier:
    """Round each weight to one of 2^bits uniform levels per layer.

    The grid spans [-w_max, +w_max] of the layer, so the level set is
    symmetric about zero.  Biases are kept at full precision.
    """
    h = _require_mlp(h)
    if bits < 2:
        raise DegenerateQuantization(f"need at least 2 bits, got {bits}")
    levels = 2 ** int(bits)
    weights = []
    for W, b in h.weights:
        wmax = np.abs(W).max()
        if wmax == 0.0:
            weights.append((W.copy(), b.copy()))
            continue
        delta = 2.0 * wmax / (levels - 1)
        q = np.clip(np.round((W + wmax) / delta), 0, levels - 1) * delta - wmax
        weights.append((q, b.copy()))
    tag = TaskTag("quantize", {"bits": int(bits)})
    return h.clone(f"{h.identity}#q{bits}", weights=weights, tag=tag)


def finetune(
    h: Classifier,
    data: LabeledDataset,
    cfg: TrainConfig | None = None,
    seed: int = 0,
) -> MLPClassifier:
    """A few more SGD epochs from the victim's weights."""
    h = _require_mlp(h)
    cfg = cfg or TrainConfig(epochs=5, learning_rate=0.01)
    tag = TaskTag("finetune", {"epochs": cfg.epochs, "seed": int(seed)})
    return continue_training(
        h, data, cfg, seed, identity=f"{h.identity}#ft{seed}", tag=tag
    )


def transfer(
    h: Classifier,
    new_task_data: LabeledDataset,
    cfg: TrainConfig | None = None,
    seed: int = 0,
) -> MLPClassifier:
    """Reinitialize the output layer, then train on a different task."""
    h = _require_mlp(h)
    cfg = cfg or TrainConfig(epochs=20, learning_rate=0.02)
    if new_task_data.dim != h.input_dim:
        raise IncompatibleTask(
            f"new task dimension {new_task_data.dim} != model input {h.input_dim}"
        )
    new_c = new_task_data.num_classes
    widths = h.spec.layer_widths[:-1] + (new_c,)
    spec = MLPSpec(widths, h.spec.activation, seed=int(seed))
    rng = np.random.default_rng(seed)
    fan_in = widths[-2]
    bound = 1.0 / np.sqrt(fan_in)
    head = (rng.uniform(-bound, bound, size=(fan_in, new_c)), np.zeros(new_c))
    weights = [(W.copy(), b.copy()) for W, b in h.weights[:-1]] + [head]
    n = len(new_task_data)
    T = np.zeros((n, new_c))
    T[np.arange(n), new_task_data.labels - 1] = 1.0
    history = _sgd_epochs(
        weights, spec.activation, new_task_data.points, T, cfg, rng
    )
    tag = TaskTag("transfer", {"epochs": cfg.epochs, "seed": int(seed)})
    return MLPClassifier(
        spec, weights, identity=f"{h.identity}#tr{seed}", tag=tag, train_loss=history
    )


def extract(
    h_victim: Classifier,
    query_pool: LabeledDataset,
    arch: MLPSpec,
    cfg: TrainConfig,
    mode: str = "labels",
    seed: int = 0,
    n_adversarial: int | None = None,
    adv_steps: int = 20,
) -> MLPClassifier:
    """Train a substitute model from the victim's answers on a query pool.

    ``labels`` fits a fresh model to the victim's labels with
    cross-entropy; ``probits`` distills the victim's probit vectors with
    a KL objective; ``adversarial_labels`` first trains an interim model
    on the victim's labels, generates gradient-ascent queries against
    that interim model, labels them with the victim, and finishes
    training on the augmented pool.
    """
    if mode not in EXTRACTION_MODES:
        raise ValueError(f"mode must be one of {sorted(EXTRACTION_MODES)}")
    if len(query_pool) == 0:
        raise EmptyQueryPool("extraction needs a nonempty query pool")
    method = EXTRACTION_MODES[mode]
    arch = replace(arch, seed=int(seed))
    identity = f"{h_victim.identity}#{mode}-x{seed}"
    X = query_pool.points
    victim_labels = h_victim.predict(X)
    tag = TaskTag(method, {"pool_size": len(query_pool), "seed": int(seed)})

    if mode == "probits":
        targets = h_victim.probits(X)
        ds = LabeledDataset(
            X, victim_labels, h_victim.num_classes, np.full(len(X), "train")
        )
        kl_cfg = replace(cfg, loss="distillation-kl")
        return train(ds, arch, kl_cfg, soft_targets=targets, identity=identity, tag=tag)

    ds = LabeledDataset(X, victim_labels, h_victim.num_classes, np.full(len(X), "train"))
    if mode == "labels":
        return train(ds, arch, cfg, identity=identity, tag=tag)

    # adversarial label extraction: warmup, attack own interim model,
    # ask the victim for labels on the attack points, finish training
    warmup = max(1, cfg.epochs // 2)
    s_warm, s_rest = (
        int(v) for v in np.random.SeedSequence(int(seed)).generate_state(2, np.uint64)
    )
    interim = train(
        ds, replace(arch, seed=s_warm), replace(cfg, epochs=warmup), identity=identity
    )
    n_adv = n_adversarial if n_adversarial is not None else len(query_pool) // 2
    n_adv = max(1, min(n_adv, len(query_pool)))
    rng = np.random.default_rng(s_rest)
    idx = rng.choice(len(query_pool), n_adv, replace=False)
    span = X.max(axis=0) - X.min(axis=0)
    eps = 0.1 * span
    U = projected_gradient_ascent(
        interim, X[idx], interim.predict(X[idx]), eps, adv_steps, eps / 8.0
    )
    aug_X = np.concatenate([X, U], axis=0)
    aug_y = np.concatenate([victim_labels, h_victim.predict(U)])
    aug = LabeledDataset(
        aug_X, aug_y, h_victim.num_classes, np.full(len(aug_X), "train")
    )
    rest_cfg = replace(cfg, epochs=max(1, cfg.epochs - warmup))
    tag = TaskTag(
        method,
        {"pool_size": len(query_pool), "n_adversarial": int(n_adv), "seed": int(seed)},
    )
    return continue_training(interim, aug, rest_cfg, s_rest, identity, tag=tag)


def unrelated(
    task_data: LabeledDataset,
    arch: MLPSpec,
    cfg: TrainConfig,
    seed: int = 0,
    identity: str | None = None,
) -> MLPClassifier:
    """An independently initialized and trained model (negative-pair source)."""
    arch = replace(arch, seed=int(seed))
    tag = TaskTag("unrelated", {"seed": int(seed)})
    return train(
        task_data, arch, cfg, identity=identity or f"unrelated-{seed}", tag=tag
    )


# ---------------------------------------------------------------------------
# Output-noise obfuscation wrappers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TopKOnly:
    """Expose only the top-k labels; never changes the argmax."""

    k: int


@dataclass(frozen=True)
class ProbitPerturbation:
    """Multiplicative per-query probit noise, deterministic per input point."""

    scale: float
    seed: int = 0


class OutputNoiseWrapper(Classifier):
    """Restrict or perturb a model's outputs without touching its weights.

    Wrapped handles stay deterministic: the perturbation noise is keyed
    by a hash of the query point, so repeated queries agree.
    """

    def __init__(self, inner: Classifier, mode):
        if isinstance(mode, TopKOnly):
            if not 1 <= mode.k <= inner.num_classes:
                raise ValueError(f"k must lie in 1..{inner.num_classes}")
            access, limit = Access.TOP_K, mode.k
        elif isinstance(mode, ProbitPerturbation):
            access, limit = Access.PROBITS, None
        else:
            raise ValueError(f"unknown output-noise mode {mode!r}")
        super().__init__(
            f"{inner.identity}#noise",
            inner.num_classes,
            inner.input_dim,
            access,
            top_k_limit=limit,
            tag=inner.tag,
        )
        self.inner = inner
        self.mode = mode

    def _predict(self, X: np.ndarray) -> np.ndarray:
        if isinstance(self.mode, TopKOnly):
            return self.inner.predict(X)
        return np.argmax(self._probits(X), axis=1).astype(np.int64) + 1

    def _top_k(self, X: np.ndarray, k: int) -> np.ndarray:
        if isinstance(self.mode, TopKOnly):
            return self.inner.top_k(X, k)
        return super()._top_k(X, k)

    def _probits(self, X: np.ndarray) -> np.ndarray:
        P = self.inner.probits(X)
        out = np.empty_like(P)
        key = int(self.mode.seed).to_bytes(8, "little", signed=True)
        for i, (x, p) in enumerate(zip(X, P)):
            digest = hashlib.blake2b(x.tobytes(), digest_size=8, key=key).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            noisy = p * np.exp(self.mode.scale * rng.standard_normal(p.size))
            out[i] = noisy / noisy.sum()
        return out
