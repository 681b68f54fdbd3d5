"""Projection into the shared subspace and Euclidean cross-modal ranking."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, List, Optional, TextIO

import numpy as np

from .data import check_features
from .objective import ProjectionPair, Task


@dataclass(frozen=True)
class EmbeddedSet:
    points: np.ndarray
    modality: str
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.modality not in ("image", "text"):
            raise ValueError(f"modality must be 'image' or 'text', got {self.modality!r}")
        if self.labels is not None and len(self.labels) != len(self.points):
            raise ValueError("labels length does not match number of points")

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass
class RankedResult:
    query_index: int
    ordering: np.ndarray
    distances: np.ndarray
    relevance: np.ndarray
    query_label: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "queryIndex": int(self.query_index),
            "ordering": self.ordering.tolist(),
            "distances": self.distances.tolist(),
            "relevance": self.relevance.tolist(),
        }


def project(features, M, modality: str = "image", labels=None) -> EmbeddedSet:
    """Map each feature row ``x`` to ``M @ x``; returns the m x c matrix ``features @ M.T``."""
    F = check_features(features)
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[1] != F.shape[1]:
        raise ValueError(f"projection has shape {M.shape}, features have {F.shape[1]} columns")
    return EmbeddedSet(F @ M.T, modality, None if labels is None else np.asarray(labels))


def rank(query, gallery: EmbeddedSet, query_label=None, query_index: int = 0) -> RankedResult:
    """Order the whole gallery by ascending Euclidean distance to ``query``.

    Ties go to the lower gallery index. Relevance is label equality with
    ``query_label`` (all zeros if either side is unlabeled).
    """
    G = gallery.points
    if len(G) == 0:
        raise ValueError("empty gallery")
    q = np.asarray(query, dtype=np.float64).ravel()
    if q.shape[0] != G.shape[1]:
        raise ValueError(f"query has dimension {q.shape[0]}, gallery points have {G.shape[1]}")
    diff = G - q
    sq = np.einsum("ij,ij->i", diff, diff)
    order = np.argsort(sq, kind="stable")
    if query_label is not None and gallery.labels is not None:
        rel = (gallery.labels[order] == query_label).astype(np.int8)
    else:
        rel = np.zeros(order.shape[0], dtype=np.int8)
    return RankedResult(query_index, order, np.sqrt(sq[order]), rel,
                        None if query_label is None else int(query_label))


def _direction_projections(pair: ProjectionPair, direction: Task):
    if direction is Task.I2T:
        return pair.V, pair.W, "image", "text"
    if direction is Task.T2I:
        return pair.W, pair.V, "text", "image"
    raise ValueError("direction must be i2t or t2i")


def cross_retrieve(pair: ProjectionPair, queries, query_labels, gallery, gallery_labels, direction) -> List[RankedResult]:
    """Rank the gallery for every query.

    ``i2t``: image queries through ``V`` against text gallery through ``W``;
    ``t2i`` the reverse.
    """
    direction = Task.parse(direction)
    Mq, Mg, mq, mg = _direction_projections(pair, direction)
    Q = project(queries, Mq, mq, query_labels)
    G = project(gallery, Mg, mg, gallery_labels)
    if Q.labels is not None and len(Q.labels) != len(Q):
        raise ValueError("query labels do not match query count")
    return [rank(Q.points[i], G, None if Q.labels is None else Q.labels[i], i) for i in range(len(Q))]


def write_jsonl(results: Iterable[RankedResult], fh: TextIO) -> None:
    for r in results:
        fh.write(json.dumps(r.to_dict()))
        fh.write("\n")
