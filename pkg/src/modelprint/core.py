"""Classifier handles, labeled datasets, and disagreement statistics.

A classifier handle is a deterministic function from input vectors to
labels in ``{1..C}``, with a declared access level that gates richer
query types (top-k labels, probit vectors, input gradients).  All
probability-like quantities in this module are empirical frequencies
over an explicitly supplied finite evaluation set.
"""

from __future__ import annotations

import abc
import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AccessInsufficient,
    BadClass,
    EmptyEvaluationSet,
)


class Access(enum.IntEnum):
    """Query access levels, ordered from weakest to strongest.

    Each level includes everything the weaker levels offer:
    ``GRADIENTS > PROBITS > TOP_K > LABELS``.
    """

    LABELS = 1
    TOP_K = 2
    PROBITS = 3
    GRADIENTS = 4


class Classifier(abc.ABC):
    """A queryable, deterministic classifier.

    Subclasses implement ``_probits`` (preferred) or ``_predict``.  The
    public query methods enforce the handle's declared access level and
    the label conventions: labels are integers in ``{1..C}``, top-k ties
    are broken by ascending label index, and repeated queries on the same
    input return identical answers.
    """

    def __init__(
        self,
        identity: str,
        num_classes: int,
        input_dim: int,
        access: Access,
        top_k_limit: int | None = None,
        tag=None,
    ):
        if num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {num_classes}")
        if input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {input_dim}")
        self.identity = str(identity)
        self.num_classes = int(num_classes)
        self.input_dim = int(input_dim)
        self.access = Access(access)
        self.top_k_limit = top_k_limit
        self.tag = tag

    # -- access plumbing ---------------------------------------------------

    def _require(self, level: Access, what: str) -> None:
        if self.access < level:
            raise AccessInsufficient(
                f"{self.identity}: {what} needs {level.name} access, handle "
                f"grants {self.access.name}"
            )

    def _as_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.input_dim:
            raise ValueError(
                f"{self.identity}: expected points of dimension "
                f"{self.input_dim}, got {X.shape[1]}"
            )
        return X

    # -- queries -----------------------------------------------------------

    def predict(self, X) -> np.ndarray:
        """Labels in ``{1..C}`` for a batch of points, shape ``(n,)``."""
        return self._predict(self._as_batch(X))

    def label(self, x) -> int:
        """Label of a single point."""
        return int(self.predict(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])

    def top_k(self, X, k: int) -> np.ndarray:
        """The ``k`` largest-probit labels per point, shape ``(n, k)``.

        Ties are broken by ascending label index.
        """
        self._require(Access.TOP_K, "top-k queries")
        if not 1 <= k <= self.num_classes:
            raise BadClass(f"k must be in 1..{self.num_classes}, got {k}")
        if (
            self.access == Access.TOP_K
            and self.top_k_limit is not None
            and k > self.top_k_limit
        ):
            raise AccessInsufficient(
                f"{self.identity}: handle only exposes top-{self.top_k_limit}"
            )
        return self._top_k(self._as_batch(X), k)

    def probits(self, X) -> np.ndarray:
        """Probability vectors, shape ``(n, C)``; rows are >= 0 and sum to 1."""
        self._require(Access.PROBITS, "probit queries")
        return self._probits(self._as_batch(X))

    def input_gradient(self, x, label: int) -> np.ndarray:
        """Gradient of the logit for ``label`` with respect to the input."""
        self._require(Access.GRADIENTS, "gradient queries")
        self._check_label(label)
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.input_dim:
            raise ValueError(f"expected dimension {self.input_dim}, got {x.shape[0]}")
        return self._input_gradient(x, int(label))

    def xent_input_gradient(self, X, labels) -> np.ndarray:
        """Per-point input gradient of cross-entropy against ``labels``.

        Batch helper used by gradient-based query samplers.  The generic
        implementation composes per-logit gradients; parametric models
        override it with a single vectorized backward pass.
        """
        self._require(Access.GRADIENTS, "gradient queries")
        X = self._as_batch(X)
        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        P = self.probits(X)
        grads = np.zeros_like(X)
        for i, (x, y) in enumerate(zip(X, labels)):
            # d(-log p_y)/dx = sum_c (p_c - 1[c=y]) * d z_c / dx
            coeff = P[i].copy()
            coeff[y - 1] -= 1.0
            for c in range(1, self.num_classes + 1):
                grads[i] += coeff[c - 1] * self._input_gradient(x, c)
        return grads

    # -- subclass hooks ----------------------------------------------------

    def _check_label(self, label: int) -> None:
        if not 1 <= int(label) <= self.num_classes:
            raise BadClass(
                f"class index {label} out of range 1..{self.num_classes}"
            )

    def _predict(self, X: np.ndarray) -> np.ndarray:
        # argmax picks the lowest index on ties, matching the top-k rule
        return np.argmax(self._probits(X), axis=1).astype(np.int64) + 1

    def _top_k(self, X: np.ndarray, k: int) -> np.ndarray:
        P = self._probits(X)
        order = np.argsort(-P, axis=1, kind="stable")
        return order[:, :k].astype(np.int64) + 1

    def _probits(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _input_gradient(self, x: np.ndarray, label: int) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self) -> str:  # noqa: D105
        return (
            f"{type(self).__name__}({self.identity!r}, C={self.num_classes}, "
            f"d={self.input_dim}, access={self.access.name})"
        )


class FunctionClassifier(Classifier):
    """Label-only handle wrapping a vectorized labeling function.

    ``fn`` maps an ``(n, d)`` array to ``(n,)`` labels in ``{1..C}``.
    Useful for constructed pairs in tests and demos.
    """

    def __init__(self, fn, num_classes: int, input_dim: int, identity: str = "fn"):
        super().__init__(identity, num_classes, input_dim, Access.LABELS)
        self._fn = fn

    def _predict(self, X: np.ndarray) -> np.ndarray:
        out = np.asarray(self._fn(X), dtype=np.int64).reshape(-1)
        if out.shape[0] != X.shape[0]:
            raise ValueError("labeling function returned wrong batch size")
        return out


class LookupClassifier(Classifier):
    """Exact-point lookup table, e.g. a dataset's ground truth viewed as a model.

    Probits are one-hot on the stored label.  Unknown points raise
    ``KeyError``; this handle only makes sense on a fixed finite space.
    """

    def __init__(self, points, labels, num_classes: int, identity: str = "lookup"):
        points = np.asarray(points, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        super().__init__(identity, num_classes, points.shape[1], Access.PROBITS)
        self._table = {
            p.tobytes(): int(l) for p, l in zip(points, labels)
        }

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([self._table[row.tobytes()] for row in X], dtype=np.int64)

    def _probits(self, X: np.ndarray) -> np.ndarray:
        labels = self._predict(X)
        P = np.zeros((X.shape[0], self.num_classes))
        P[np.arange(X.shape[0]), labels - 1] = 1.0
        return P


SPLITS = ("train", "test")


@dataclass(frozen=True)
class LabeledDataset:
    """Points with ground-truth concept labels and per-row split tags.

    ``points`` is ``(n, d)`` float64, ``labels`` is ``(n,)`` int64 with
    every value in ``{1..num_classes}``, and ``split`` holds "train" or
    "test" per row.  Row order is meaningful and preserved by I/O.
    """

    points: np.ndarray
    labels: np.ndarray
    num_classes: int
    split: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        split = np.asarray(self.split).astype("<U5").reshape(-1)
        if points.shape[0] != labels.shape[0] or points.shape[0] != split.shape[0]:
            raise ValueError("points, labels, and split must have equal length")
        if labels.size and (labels.min() < 1 or labels.max() > self.num_classes):
            raise ValueError(
                f"labels must lie in 1..{self.num_classes}; "
                f"saw range {labels.min()}..{labels.max()}"
            )
        if split.size and not np.isin(split, SPLITS).all():
            raise ValueError("split tags must be 'train' or 'test'")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "split", split)

    def __len__(self) -> int:  # noqa: D105
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def subset(self, split: str) -> "LabeledDataset":
        """Rows carrying the given split tag, order preserved."""
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        mask = self.split == split
        return LabeledDataset(
            self.points[mask], self.labels[mask], self.num_classes, self.split[mask]
        )

    def take(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            self.points[idx], self.labels[idx], self.num_classes, self.split[idx]
        )

    def as_lookup_classifier(self, identity: str = "concept") -> LookupClassifier:
        """The ground-truth concept on this point set, viewed as a model."""
        return LookupClassifier(self.points, self.labels, self.num_classes, identity)

    # -- CSV interface: columns x_1..x_d, label, split ----------------------

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x_{i + 1}" for i in range(self.dim)] + ["label", "split"])
            for x, y, s in zip(self.points, self.labels, self.split):
                writer.writerow([f"{v:.17g}" for v in x] + [int(y), s])

    @staticmethod
    def from_csv(path, num_classes: int | None = None) -> "LabeledDataset":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[-2:] != ["label", "split"]:
                raise ValueError(f"{path}: expected trailing 'label,split' columns")
            dim = len(header) - 2
            pts, labels, split = [], [], []
            for row in reader:
                pts.append([float(v) for v in row[:dim]])
                labels.append(int(row[dim]))
                split.append(row[dim + 1])
        labels = np.asarray(labels, dtype=np.int64)
        if num_classes is None:
            num_classes = int(labels.max()) if labels.size else 2
        return LabeledDataset(np.asarray(pts), labels, num_classes, np.asarray(split))


@dataclass(frozen=True)
class PairStats:
    """Accuracy and disagreement statistics for a model pair on one set.

    ``delta_c`` is the disagreement rate restricted to points the first
    model misclassifies; it is ``None`` (undefined) when that model is
    perfect on the evaluation set, since the conditioning event is empty.
    """

    alpha: float
    alpha_prime: float
    delta: float
    delta_c: float | None
    n_eval: int

    @property
    def delta_c_defined(self) -> bool:
        return self.delta_c is not None

    def delta_c_lower_bound(self) -> float | None:
        """Lower bound (delta - (1 - alpha')) / (1 - alpha) on ``delta_c``.

        ``None`` when the first model is perfect (bound denominator is 0).
        """
        if self.alpha >= 1.0:
            return None
        return (self.delta - (1.0 - self.alpha_prime)) / (1.0 - self.alpha)


def _check_nonempty(data: LabeledDataset) -> None:
    if len(data) == 0:
        raise EmptyEvaluationSet("evaluation dataset has no points")


def accuracy(h: Classifier, data: LabeledDataset) -> float:
    """Fraction of points where the model's label equals the concept label."""
    _check_nonempty(data)
    return float(np.mean(h.predict(data.points) == data.labels))


def hamming_distance(h: Classifier, g: Classifier, data: LabeledDataset) -> float:
    """Relative Hamming distance: fraction of points where the models differ."""
    _check_nonempty(data)
    return float(np.mean(h.predict(data.points) != g.predict(data.points)))


def conditioned_hamming(
    h: Classifier, g: Classifier, data: LabeledDataset
) -> float | None:
    """Disagreement rate restricted to points where ``h`` errs.

    Returns ``None`` when ``h`` classifies the whole set correctly, since
    the conditioning event is empty.  Note this quantity is not symmetric
    in its model arguments.
    """
    _check_nonempty(data)
    yh = h.predict(data.points)
    wrong = yh != data.labels
    if not wrong.any():
        return None
    return float(np.mean(yh[wrong] != g.predict(data.points[wrong])))


def pair_stats(h: Classifier, g: Classifier, data: LabeledDataset) -> PairStats:
    """Bundle accuracy of both models, Hamming, and conditioned Hamming."""
    _check_nonempty(data)
    yh = h.predict(data.points)
    yg = g.predict(data.points)
    wrong = yh != data.labels
    delta_c = float(np.mean(yh[wrong] != yg[wrong])) if wrong.any() else None
    return PairStats(
        alpha=float(np.mean(yh == data.labels)),
        alpha_prime=float(np.mean(yg == data.labels)),
        delta=float(np.mean(yh != yg)),
        delta_c=delta_c,
        n_eval=len(data),
    )
