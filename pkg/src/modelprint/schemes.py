"""Assembling samplers, representations, and detectors into schemes.

A fingerprinting scheme is a (sampler, representation, detector) triple
with a query budget.  Its score for a model pair is the fingerprint
distance (lower = more suspicious); its flag decision applies either a
fixed majority threshold or a pool-calibrated quantile threshold.

The module also houses the mistake-matching baseline: query the suspect
on points the victim misclassifies and flag when a majority of the
answers agree.  Independently trained models rarely reproduce a victim's
idiosyncratic errors, so agreement on those points is strong evidence of
copying.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import Classifier, LabeledDataset
from .errors import IncompatibleScheme, InsufficientNegatives
from .fingerprints import (
    INNER_DISTANCES,
    KINDS,
    CalibrationPool,
    Fingerprint,
    calibrate_threshold,
    fingerprint_distance,
    represent,
)
from .samplers import (
    NegativeSampler,
    QuerySet,
    Sampler,
    UniformSampler,
    sampler_from_record,
    uniform_sampler,
)

log = logging.getLogger(__name__)

DETECTOR_KINDS = ("quantile", "majority")


@dataclass(frozen=True)
class DetectorSpec:
    """How to turn a fingerprint distance into a flag.

    ``majority`` flags below the fixed threshold 1/2 (for label-Hamming
    scores this is exactly a majority vote on per-query agreement);
    ``quantile`` calibrates the threshold on a pool of unrelated-model
    fingerprints at ``target_fpr``.
    """

    kind: str = "quantile"
    target_fpr: float = 0.05

    def __post_init__(self):
        if self.kind not in DETECTOR_KINDS:
            raise ValueError(f"detector kind must be one of {DETECTOR_KINDS}")
        if not 0.0 <= self.target_fpr <= 1.0:
            raise ValueError("target_fpr must lie in [0, 1]")

    def to_record(self) -> dict:
        return {"kind": self.kind, "target_fpr": self.target_fpr}


@dataclass(frozen=True)
class SchemeSpec:
    """Full description of a fingerprinting scheme.

    ``seed_split`` names the dataset split used as the sampler's seed
    pool when evaluating on a benchmark.
    """

    sampler: Sampler
    representation: str
    inner_distance: str = "cosine"
    detector: DetectorSpec = field(default_factory=DetectorSpec)
    budget: int = 100
    seed_split: str = "test"

    def __post_init__(self):
        if self.representation not in KINDS:
            raise ValueError(f"representation must be one of {KINDS}")
        if self.inner_distance not in INNER_DISTANCES:
            raise ValueError(f"inner_distance must be one of {INNER_DISTANCES}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.seed_split not in ("train", "test"):
            raise ValueError("seed_split must be 'train' or 'test'")
        if self.representation == "pairwise":
            if not self.sampler.produces_pairing(self.budget):
                raise IncompatibleScheme(
                    "pairwise representation needs a pairing-producing sampler"
                )
            if 2 * self.sampler.pairing_length(self.budget) != self.budget:
                raise IncompatibleScheme(
                    "pairwise representation needs the pairing to cover s/2 "
                    "couples; adjust k_variants or the sampler"
                )

    @property
    def needs_probits(self) -> bool:
        if self.representation == "raw_probits":
            return True
        if self.representation in ("pairwise", "listwise"):
            return self.inner_distance == "cosine"
        return False

    def label(self) -> str:
        """Short human-readable identifier, used in reports."""
        samp = self.sampler.to_record()
        name = samp["kind"]
        if name == "chain":
            name = f"{samp['first']['kind']}>{samp['second']['kind']}"
        return f"{name}/{self.representation}/{self.detector.kind}@{self.budget}"

    def to_record(self) -> dict:
        return {
            "sampler": self.sampler.to_record(),
            "representation": self.representation,
            "inner_distance": self.inner_distance,
            "detector": self.detector.to_record(),
            "budget": self.budget,
            "seed_split": self.seed_split,
        }

    @staticmethod
    def from_record(rec: dict) -> "SchemeSpec":
        return SchemeSpec(
            sampler=sampler_from_record(rec["sampler"]),
            representation=rec["representation"],
            inner_distance=rec.get("inner_distance", "cosine"),
            detector=DetectorSpec(**rec.get("detector", {})),
            budget=int(rec.get("budget", 100)),
            seed_split=rec.get("seed_split", "test"),
        )


class FingerprintScheme:
    """A runnable scheme: query, represent, compare, decide."""

    def __init__(self, spec: SchemeSpec):
        self.spec = spec

    def query_set(
        self, victim: Classifier, seed_set: LabeledDataset, seed: int
    ) -> QuerySet:
        return self.spec.sampler.sample(seed_set, victim, self.spec.budget, seed)

    def _answers(self, model: Classifier, qs: QuerySet) -> np.ndarray:
        if self.spec.needs_probits:
            return model.probits(qs.points)
        return model.predict(qs.points)

    def fingerprint(self, model: Classifier, qs: QuerySet) -> Fingerprint:
        return represent(
            qs,
            self._answers(model, qs),
            self.spec.representation,
            self.spec.inner_distance,
        )

    def score(
        self,
        victim: Classifier,
        suspect: Classifier,
        seed_set: LabeledDataset,
        seed: int,
    ) -> float:
        """Fingerprint distance between victim and suspect; lower = more suspicious."""
        qs = self.query_set(victim, seed_set, seed)
        return fingerprint_distance(
            self.fingerprint(victim, qs), self.fingerprint(suspect, qs)
        )

    def flag(
        self,
        victim: Classifier,
        suspect: Classifier,
        seed_set: LabeledDataset,
        seed: int,
        calibration_models=(),
    ) -> tuple[int, float, float]:
        """Flag decision for one pair: (flag, distance, threshold).

        The quantile detector calibrates its threshold on fingerprints of
        ``calibration_models`` (unrelated models) over the same query set.
        """
        qs = self.query_set(victim, seed_set, seed)
        fp_v = self.fingerprint(victim, qs)
        dist = fingerprint_distance(fp_v, self.fingerprint(suspect, qs))
        if self.spec.detector.kind == "majority":
            threshold = 0.5
        else:
            pool = CalibrationPool(
                tuple(self.fingerprint(m, qs) for m in calibration_models)
            )
            threshold = calibrate_threshold(fp_v, pool, self.spec.detector.target_fpr)
        return int(dist < threshold), dist, threshold


def assemble_scheme(spec: SchemeSpec) -> FingerprintScheme:
    """Instantiate the pipeline described by a scheme spec."""
    return FingerprintScheme(spec)


def mistake_match_scheme(budget: int = 100, seed_split: str = "test") -> SchemeSpec:
    """The baseline as a scheme: negative sampling, raw labels, majority vote."""
    return SchemeSpec(
        sampler=NegativeSampler(),
        representation="raw_labels",
        inner_distance="labels",
        detector=DetectorSpec(kind="majority"),
        budget=budget,
        seed_split=seed_split,
    )


def mistake_match_test(
    h: Classifier,
    h_sus: Classifier,
    data: LabeledDataset,
    k_queries: int,
    seed: int,
) -> tuple[int, float]:
    """Mistake-matching majority vote: (flag, match_score).

    Draws ``k_queries`` points the victim misclassifies, scores the
    fraction on which the suspect returns the victim's (wrong) answer,
    and flags when that fraction exceeds 1/2.  The match score doubles as
    a ROC statistic.  When the victim is perfect on ``data`` the test
    falls back to uniform sampling; when fewer negatives than requested
    exist, the budget is lowered to what is available.
    """
    if len(data) == 0:
        raise InsufficientNegatives("no negative points: dataset is empty", available=0)
    if k_queries < 1:
        raise ValueError("k_queries must be >= 1")
    try:
        qs = NegativeSampler().sample(data, h, k_queries, seed)
    except InsufficientNegatives as err:
        if err.available == 0:
            log.warning(
                "%s classifies the whole pool correctly; falling back to "
                "uniform sampling",
                h.identity,
            )
            qs = uniform_sampler(data, min(k_queries, len(data)), seed)
        else:
            log.warning(
                "only %d negatives available for %s; lowering budget from %d",
                err.available,
                h.identity,
                k_queries,
            )
            qs = NegativeSampler().sample(data, h, err.available, seed)
    match = float(np.mean(h.predict(qs.points) == h_sus.predict(qs.points)))
    return int(match > 0.5), match


def standard_scheme_grid(
    budget: int = 100,
    include_pairwise: bool = True,
    adversarial_kwargs: dict | None = None,
) -> list[SchemeSpec]:
    """Cartesian sweep over samplers x representations x detectors.

    Enumerates every compatible combination of the four base samplers
    plus the negative-into-adversarial chain with the label/probit
    representations and both detector kinds.
    """
    from .samplers import AdversarialSampler, ChainSampler, Subsampler

    adv = AdversarialSampler(**(adversarial_kwargs or {}))
    samplers: list[Sampler] = [
        UniformSampler(),
        NegativeSampler(),
        adv,
        Subsampler(k_variants=1, vicinity_scale=0.8),
        ChainSampler(first=NegativeSampler(), second=adv),
    ]
    detectors = [DetectorSpec(kind="quantile", target_fpr=0.05), DetectorSpec(kind="majority")]
    specs = []
    for sampler in samplers:
        for representation in KINDS:
            if representation == "pairwise" and not include_pairwise:
                continue
            inner = "cosine" if representation != "raw_labels" else "labels"
            for detector in detectors:
                try:
                    specs.append(
                        SchemeSpec(
                            sampler=sampler,
                            representation=representation,
                            inner_distance=inner,
                            detector=detector,
                            budget=budget,
                        )
                    )
                except IncompatibleScheme:
                    continue
    return specs
