"""Fingerprint representations, distances, and threshold calibration.

A fingerprint is a compact representation of a model's answers on a
query set: the raw labels, the raw probit vectors, per-pair answer
distances for paired query sets, or the full answer-similarity matrix.
Fingerprints built from the same query set can be compared with a
distance, and a pool of unrelated-model fingerprints calibrates the
detection threshold at a target false-positive rate.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AccessInsufficient,
    EmptyCalibrationPool,
    IncomparableFingerprints,
    PairingRequired,
)
from .samplers import QuerySet

KINDS = ("raw_labels", "raw_probits", "pairwise", "listwise")
INNER_DISTANCES = ("cosine", "labels")


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), with zero vectors treated as identical to each other.

    Two zero-norm vectors are at distance 0; a zero vector against a
    nonzero one is at the maximal nonnegative-cone distance 1.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if np.array_equal(u, v):
        return 0.0
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 1.0
    return max(0.0, float(1.0 - np.dot(u, v) / (nu * nv)))


@dataclass(frozen=True)
class Fingerprint:
    """Representation of one model's answers on one query set.

    Payload shape is tied to the kind: ``(s,)`` labels, ``(s, C)``
    probits, ``(s/2,)`` pair distances, or a symmetric ``(s, s)`` matrix.
    ``query_provenance`` records which sampler produced the queries;
    only fingerprints sharing it are comparable.
    """

    kind: str
    payload: np.ndarray
    query_provenance: dict
    n_queries: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown fingerprint kind {self.kind!r}")
        payload = np.asarray(self.payload)
        s = self.n_queries
        if self.kind == "raw_labels":
            ok = payload.shape == (s,)
        elif self.kind == "raw_probits":
            ok = payload.ndim == 2 and payload.shape[0] == s
        elif self.kind == "pairwise":
            ok = s % 2 == 0 and payload.shape == (s // 2,)
        else:
            ok = payload.shape == (s, s)
        if not ok:
            raise ValueError(
                f"{self.kind} payload shape {payload.shape} inconsistent with s={s}"
            )
        payload = payload.copy()
        payload.setflags(write=False)
        object.__setattr__(self, "payload", payload)


def _pair_distance_fn(inner: str, probit_based: bool):
    if inner == "cosine":
        return cosine_distance
    return lambda a, b: float(a != b)


def represent(
    query_set: QuerySet,
    answers: np.ndarray,
    kind: str,
    inner_distance: str = "cosine",
) -> Fingerprint:
    """Build a fingerprint from a model's answers on a query set.

    ``answers`` is a ``(s,)`` label vector or an ``(s, C)`` probit matrix,
    matching what the representation consumes: probit payloads and the
    cosine inner distance need probit answers, the label inner distance
    needs label answers.  Pairwise representations additionally need the
    query set to carry a pairing covering half the budget.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown fingerprint kind {kind!r}")
    if inner_distance not in INNER_DISTANCES:
        raise ValueError(f"unknown inner distance {inner_distance!r}")
    answers = np.asarray(answers)
    s = query_set.size
    if answers.shape[0] != s:
        raise ValueError(f"got {answers.shape[0]} answers for {s} queries")
    prov = dict(query_set.provenance)

    if kind == "raw_labels":
        if answers.ndim != 1:
            raise ValueError("raw label fingerprints need a 1-d label vector")
        return Fingerprint("raw_labels", answers.astype(np.int64), prov, s)

    if kind == "raw_probits":
        if answers.ndim != 2:
            raise AccessInsufficient(
                "raw probit fingerprints need probit answers, got labels"
            )
        return Fingerprint("raw_probits", answers.astype(np.float64), prov, s)

    probit_based = inner_distance == "cosine"
    if probit_based and answers.ndim != 2:
        raise AccessInsufficient(
            "cosine inner distance needs probit answers, got labels"
        )
    if not probit_based and answers.ndim != 1:
        raise ValueError("label inner distance needs a 1-d label vector")

    if kind == "pairwise":
        if query_set.pairing is None:
            raise PairingRequired(
                "pairwise representation needs a pairing-producing sampler"
            )
        if 2 * len(query_set.pairing) != s:
            raise PairingRequired(
                f"pairwise representation needs s/2 pairs, query set has "
                f"{len(query_set.pairing)} for s={s}"
            )
        d = _pair_distance_fn(inner_distance, probit_based)
        payload = np.array([d(answers[i], answers[j]) for i, j in query_set.pairing])
        return Fingerprint("pairwise", payload, prov, s)

    # listwise: full answer-similarity matrix, zero diagonal by definition
    if probit_based:
        norms = np.linalg.norm(answers, axis=1, keepdims=True)
        safe = np.where(norms == 0.0, 1.0, norms)
        N = answers / safe
        M = 1.0 - N @ N.T
        zero = (norms == 0.0).ravel()
        if zero.any():
            M[zero, :] = 1.0
            M[:, zero] = 1.0
            M[np.ix_(zero, zero)] = 0.0
    else:
        M = (answers[:, None] != answers[None, :]).astype(np.float64)
    M = 0.5 * (M + M.T)
    np.fill_diagonal(M, 0.0)
    return Fingerprint("listwise", M, prov, s)


def fingerprint_distance(a: Fingerprint, b: Fingerprint) -> float:
    """Distance between two fingerprints of the same kind and query set.

    Raw labels compare by normalized Hamming distance, raw probits by the
    mean per-query cosine distance, and pairwise/listwise payloads by the
    cosine distance between their flattened payloads.
    """
    if a.kind != b.kind or a.query_provenance != b.query_provenance:
        raise IncomparableFingerprints(
            f"kinds ({a.kind}, {b.kind}) or query provenances differ"
        )
    if a.kind == "raw_labels":
        return float(np.mean(a.payload != b.payload))
    if a.kind == "raw_probits":
        rows = [cosine_distance(u, v) for u, v in zip(a.payload, b.payload)]
        return float(np.mean(rows))
    return cosine_distance(a.payload, b.payload)


@dataclass(frozen=True)
class CalibrationPool:
    """Fingerprints of unrelated models, all built from one query set."""

    fingerprints: tuple[Fingerprint, ...]

    def __post_init__(self):
        fps = tuple(self.fingerprints)
        for fp in fps[1:]:
            if fp.kind != fps[0].kind or fp.query_provenance != fps[0].query_provenance:
                raise IncomparableFingerprints(
                    "calibration pool must be homogeneous in kind and query set"
                )
        object.__setattr__(self, "fingerprints", fps)

    def __len__(self) -> int:  # noqa: D105
        return len(self.fingerprints)


def calibrate_threshold(
    victim_fp: Fingerprint, pool, target_fpr: float
) -> float:
    """Largest threshold flagging at most ``target_fpr`` of the pool.

    The flag rule is ``distance < threshold  =>  stolen``; the returned
    threshold therefore guarantees that the fraction of pool members
    whose distance to the victim falls strictly below it is at most
    ``target_fpr``.
    """
    if not 0.0 <= target_fpr <= 1.0:
        raise ValueError("target_fpr must lie in [0, 1]")
    members = pool.fingerprints if isinstance(pool, CalibrationPool) else tuple(pool)
    if len(members) == 0:
        raise EmptyCalibrationPool("cannot calibrate against an empty pool")
    dists = np.sort([fingerprint_distance(victim_fp, fp) for fp in members])
    m = dists.size
    allowed = int(target_fpr * m + 1e-9)
    if allowed >= m:
        return float(dists[-1]) + 1.0
    return float(dists[allowed])


# ---------------------------------------------------------------------------
# Serialization: JSON header followed by the raw little-endian payload.
# ---------------------------------------------------------------------------

_FP_MAGIC = b"FPR1"


def save_fingerprint(fp: Fingerprint, path) -> None:
    header = json.dumps(
        {
            "kind": fp.kind,
            "n_queries": fp.n_queries,
            "shape": list(fp.payload.shape),
            "dtype": fp.payload.dtype.str,
            "query_provenance": fp.query_provenance,
        },
        sort_keys=True,
    ).encode()
    with Path(path).open("wb") as fh:
        fh.write(_FP_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(fp.payload).tobytes())


def load_fingerprint(path) -> Fingerprint:
    raw = Path(path).read_bytes()
    if raw[:4] != _FP_MAGIC:
        raise ValueError(f"{path}: not a fingerprint file")
    (hlen,) = struct.unpack_from("<I", raw, 4)
    header = json.loads(raw[8 : 8 + hlen].decode())
    payload = np.frombuffer(raw, header["dtype"], offset=8 + hlen).reshape(
        header["shape"]
    )
    return Fingerprint(
        header["kind"], payload.copy(), header["query_provenance"], header["n_queries"]
    )
