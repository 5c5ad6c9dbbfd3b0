"""Query-set samplers: uniform, negative, adversarial, subsampling, chains.

A sampler turns a labeled seed pool (and, for model-aware samplers, the
victim handle) into an ordered query set of a requested budget.  All
samplers are pure functions of their inputs and an integer seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Access, Classifier, LabeledDataset
from .errors import (
    BudgetExceedsPool,
    BudgetShapeMismatch,
    GradientRequired,
    IncompatibleScheme,
    InsufficientNegatives,
)


@dataclass(frozen=True)
class QuerySet:
    """An ordered set of query points with optional (seed, derived) pairing.

    ``pairing`` lists index couples (i, j) meaning point j was derived
    from point i.  ``source_indices`` maps each point back to its row in
    the seed pool, with -1 for synthesized points; chained samplers use
    it to re-seed their second stage.
    """

    points: np.ndarray
    provenance: dict
    pairing: Optional[tuple[tuple[int, int], ...]] = None
    source_indices: Optional[np.ndarray] = None

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        object.__setattr__(self, "points", points)
        if self.pairing is not None:
            pairing = tuple((int(i), int(j)) for i, j in self.pairing)
            s = points.shape[0]
            for i, j in pairing:
                if not (0 <= i < j < s):
                    raise ValueError(f"pairing entry ({i}, {j}) out of range for s={s}")
            object.__setattr__(self, "pairing", pairing)
        if self.source_indices is not None:
            idx = np.asarray(self.source_indices, dtype=np.int64)
            if idx.shape[0] != points.shape[0]:
                raise ValueError("source_indices length must match points")
            object.__setattr__(self, "source_indices", idx)

    @property
    def size(self) -> int:
        return self.points.shape[0]


class Sampler:
    """Base interface; subclasses are small frozen parameter records."""

    name = "base"

    def sample(
        self, seed_set: LabeledDataset, model: Classifier | None, budget: int, seed: int
    ) -> QuerySet:
        raise NotImplementedError

    def seed_budget(self, budget: int) -> int:
        """How many seed-pool points a run at ``budget`` consumes."""
        return budget

    def produces_pairing(self, budget: int) -> bool:
        return False

    def pairing_length(self, budget: int) -> int:
        return 0

    def to_record(self) -> dict:
        raise NotImplementedError


def _check_budget(budget: int) -> int:
    budget = int(budget)
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    return budget


@dataclass(frozen=True)
class UniformSampler(Sampler):
    """Draw ``budget`` points uniformly without replacement from the pool."""

    name = "uniform"

    def sample(self, seed_set, model, budget, seed):
        budget = _check_budget(budget)
        n = len(seed_set)
        if budget > n:
            raise BudgetExceedsPool(f"budget {budget} > pool size {n}")
        rng = np.random.default_rng(seed)
        idx = rng.choice(n, budget, replace=False)
        return QuerySet(
            seed_set.points[idx],
            provenance={"sampler": self.name, "budget": budget, "seed": int(seed)},
            source_indices=idx,
        )

    def to_record(self):
        return {"kind": self.name}


@dataclass(frozen=True)
class NegativeSampler(Sampler):
    """Draw from the points the victim misclassifies (h(x) != c(x))."""

    name = "negative"

    def sample(self, seed_set, model, budget, seed):
        budget = _check_budget(budget)
        if model is None:
            raise ValueError("negative sampling needs the victim model")
        wrong = np.flatnonzero(model.predict(seed_set.points) != seed_set.labels)
        if wrong.size < budget:
            raise InsufficientNegatives(
                f"victim misclassifies {wrong.size} of {len(seed_set)} pool "
                f"points, budget is {budget}",
                available=int(wrong.size),
            )
        rng = np.random.default_rng(seed)
        idx = wrong[rng.choice(wrong.size, budget, replace=False)]
        return QuerySet(
            seed_set.points[idx],
            provenance={"sampler": self.name, "budget": budget, "seed": int(seed)},
            source_indices=idx,
        )

    def to_record(self):
        return {"kind": self.name}


def projected_gradient_ascent(
    model: Classifier,
    X: np.ndarray,
    labels: np.ndarray,
    eps,
    steps: int,
    step_size,
) -> np.ndarray:
    """Maximize cross-entropy against ``labels`` inside a per-dimension box.

    Sign-gradient ascent with projection onto ``|u - x| <= eps`` (eps may
    be a scalar or a per-dimension vector).  Starts from the clean points.
    """
    X = np.asarray(X, dtype=np.float64)
    eps = np.broadcast_to(np.asarray(eps, dtype=np.float64), (X.shape[1],))
    step = np.broadcast_to(np.asarray(step_size, dtype=np.float64), (X.shape[1],))
    U = X.copy()
    lo, hi = X - eps, X + eps
    for _ in range(int(steps)):
        g = model.xent_input_gradient(U, labels)
        U = np.clip(U + step * np.sign(g), lo, hi)
    return U


@dataclass(frozen=True)
class AdversarialSampler(Sampler):
    """Half seed points, half gradient-ascent perturbations of them.

    Each seed x is pushed to increase the victim's cross-entropy against
    its own original label h(x), inside a box of per-dimension radius
    ``eps``.  With ``eps=None`` the radius defaults to 0.1 times the
    per-dimension range of the seed pool, and the step size to eps / 8.
    """

    eps: float | None = None
    steps: int = 20
    step_size: float | None = None
    name = "adversarial"

    def seed_budget(self, budget):
        return budget // 2

    def produces_pairing(self, budget):
        return True

    def pairing_length(self, budget):
        return budget // 2

    def _resolve_eps(self, seed_set: LabeledDataset) -> np.ndarray:
        if self.eps is not None:
            return np.broadcast_to(
                np.asarray(self.eps, dtype=np.float64), (seed_set.dim,)
            ).copy()
        span = seed_set.points.max(axis=0) - seed_set.points.min(axis=0)
        return 0.1 * span

    def sample(self, seed_set, model, budget, seed):
        budget = _check_budget(budget)
        if budget % 2:
            raise BudgetShapeMismatch(
                f"adversarial sampling needs an even budget, got {budget}"
            )
        if model is None or model.access < Access.GRADIENTS:
            raise GradientRequired("adversarial sampling needs gradient access")
        half = budget // 2
        n = len(seed_set)
        if half > n:
            raise BudgetExceedsPool(f"needs {half} seed points, pool has {n}")
        rng = np.random.default_rng(seed)
        idx = rng.choice(n, half, replace=False)
        X = seed_set.points[idx]
        eps = self._resolve_eps(seed_set)
        step = eps / 8.0 if self.step_size is None else self.step_size
        U = projected_gradient_ascent(model, X, model.predict(X), eps, self.steps, step)
        return QuerySet(
            np.concatenate([X, U], axis=0),
            provenance={
                "sampler": self.name,
                "budget": budget,
                "seed": int(seed),
                "eps": None if self.eps is None else float(self.eps),
                "steps": int(self.steps),
                "step_size": None if self.step_size is None else float(self.step_size),
            },
            pairing=tuple((i, i + half) for i in range(half)),
            source_indices=np.concatenate([idx, np.full(half, -1, dtype=np.int64)]),
        )

    def to_record(self):
        return {
            "kind": self.name,
            "eps": self.eps,
            "steps": self.steps,
            "step_size": self.step_size,
        }


@dataclass(frozen=True)
class Subsampler(Sampler):
    """Seeds plus masked copies in their vicinity.

    Every seed point gets ``k_variants`` derived points where each
    coordinate survives with probability ``vicinity_scale`` and is zeroed
    otherwise -- a feature-masking analogue of super-pixel perturbation
    for generic vectors.  Budget must equal n_seeds * (1 + k_variants).
    """

    k_variants: int = 3
    vicinity_scale: float = 0.8
    name = "subsample"

    def __post_init__(self):
        if self.k_variants < 0:
            raise ValueError("k_variants must be >= 0")
        if not 0.0 <= self.vicinity_scale <= 1.0:
            raise ValueError("vicinity_scale must lie in [0, 1]")

    def seed_budget(self, budget):
        return budget // (1 + self.k_variants)

    def produces_pairing(self, budget):
        return self.k_variants > 0

    def pairing_length(self, budget):
        n_seeds = budget // (1 + self.k_variants)
        return n_seeds * self.k_variants

    def sample(self, seed_set, model, budget, seed):
        budget = _check_budget(budget)
        block = 1 + self.k_variants
        if budget % block:
            raise BudgetShapeMismatch(
                f"budget {budget} is not a multiple of 1 + k_variants = {block}"
            )
        n_seeds = budget // block
        n = len(seed_set)
        if n_seeds > n:
            raise BudgetExceedsPool(f"needs {n_seeds} seed points, pool has {n}")
        rng = np.random.default_rng(seed)
        idx = rng.choice(n, n_seeds, replace=False)
        X = seed_set.points[idx]
        k, d = self.k_variants, seed_set.dim
        if k:
            keep = rng.random((n_seeds, k, d)) < self.vicinity_scale
            variants = (X[:, None, :] * keep).reshape(n_seeds * k, d)
            points = np.concatenate([X, variants], axis=0)
            pairing = tuple(
                (i, n_seeds + i * k + j) for i in range(n_seeds) for j in range(k)
            )
            src = np.concatenate([idx, np.full(n_seeds * k, -1, dtype=np.int64)])
        else:
            points, pairing, src = X, None, idx
        return QuerySet(
            points,
            provenance={
                "sampler": self.name,
                "budget": budget,
                "seed": int(seed),
                "k_variants": int(self.k_variants),
                "vicinity_scale": float(self.vicinity_scale),
            },
            pairing=pairing,
            source_indices=src,
        )

    def to_record(self):
        return {
            "kind": self.name,
            "k_variants": self.k_variants,
            "vicinity_scale": self.vicinity_scale,
        }


@dataclass(frozen=True)
class ChainSampler(Sampler):
    """Feed one sampler's output into another as its seed pool.

    The first stage must be index-preserving (its points must come from
    the pool) so labels can follow the selected points into the second
    stage.  The classic instance chains negative selection into
    adversarial generation.
    """

    first: Sampler
    second: Sampler
    name = "chain"

    def seed_budget(self, budget):
        return self.first.seed_budget(self.second.seed_budget(budget))

    def produces_pairing(self, budget):
        return self.second.produces_pairing(budget)

    def pairing_length(self, budget):
        return self.second.pairing_length(budget)

    def sample(self, seed_set, model, budget, seed):
        budget = _check_budget(budget)
        s1, s2 = np.random.SeedSequence(int(seed)).generate_state(2, np.uint64)
        first_budget = self.second.seed_budget(budget)
        q1 = self.first.sample(seed_set, model, first_budget, int(s1))
        if q1.source_indices is None or (q1.source_indices < 0).any():
            raise IncompatibleScheme(
                f"{self.first.name} synthesizes points and cannot seed a chain stage"
            )
        intermediate = seed_set.take(q1.source_indices)
        q2 = self.second.sample(intermediate, model, budget, int(s2))
        src = None
        if q2.source_indices is not None:
            src = np.where(
                q2.source_indices >= 0,
                q1.source_indices[np.maximum(q2.source_indices, 0)],
                -1,
            )
        return QuerySet(
            q2.points,
            provenance={
                "sampler": self.name,
                "budget": budget,
                "seed": int(seed),
                "stages": [q1.provenance, q2.provenance],
            },
            pairing=q2.pairing,
            source_indices=src,
        )

    def to_record(self):
        return {
            "kind": self.name,
            "first": self.first.to_record(),
            "second": self.second.to_record(),
        }


SAMPLER_KINDS = {
    "uniform": UniformSampler,
    "negative": NegativeSampler,
    "adversarial": AdversarialSampler,
    "subsample": Subsampler,
    "chain": ChainSampler,
}


def sampler_from_record(rec: dict) -> Sampler:
    """Inverse of ``Sampler.to_record``."""
    rec = dict(rec)
    kind = rec.pop("kind", None)
    if kind not in SAMPLER_KINDS:
        raise ValueError(f"unknown sampler kind {kind!r}")
    if kind == "chain":
        return ChainSampler(
            first=sampler_from_record(rec["first"]),
            second=sampler_from_record(rec["second"]),
        )
    return SAMPLER_KINDS[kind](**rec)


# Functional forms of the samplers, for direct use.


def uniform_sampler(seed_set: LabeledDataset, s: int, seed: int) -> QuerySet:
    return UniformSampler().sample(seed_set, None, s, seed)


def negative_sampler(
    seed_set: LabeledDataset, h: Classifier, s: int, seed: int
) -> QuerySet:
    return NegativeSampler().sample(seed_set, h, s, seed)


def adversarial_sampler(
    seed_set: LabeledDataset,
    h: Classifier,
    eps,
    steps: int,
    step_size,
    s: int,
    seed: int,
) -> QuerySet:
    return AdversarialSampler(eps=eps, steps=steps, step_size=step_size).sample(
        seed_set, h, s, seed
    )


def subsampler(
    seed_set: LabeledDataset, k_variants: int, vicinity_scale: float, s: int, seed: int
) -> QuerySet:
    return Subsampler(k_variants=k_variants, vicinity_scale=vicinity_scale).sample(
        seed_set, None, s, seed
    )


def chain_sampler(first: Sampler, second: Sampler) -> ChainSampler:
    return ChainSampler(first=first, second=second)
