"""Average precision, mAP and interpolated precision-recall over full rankings."""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .retrieval import RankedResult


def average_precision(relevance, k: Optional[int] = None) -> float:
    """Mean of precision@i over the ranks ``i`` holding relevant items.

    ``relevance`` is a 0/1 sequence over the ranked gallery. A ranking with no
    relevant item scores 0. ``k`` truncates the ranking first (AP@k).
    """
    rel = np.asarray(relevance, dtype=np.float64).ravel()
    if rel.size == 0:
        raise ValueError("relevance sequence is empty")
    if k is not None:
        rel = rel[:k]
    hit = rel != 0
    n_rel = int(hit.sum())
    if n_rel == 0:
        return 0.0
    precision = np.cumsum(hit) / np.arange(1, rel.size + 1)
    # correctly rounded sum, independent of summation order
    return math.fsum(precision[hit].tolist()) / n_rel


def interpolated_pr(relevance, points: int = 11) -> Tuple[np.ndarray, np.ndarray]:
    """Max-interpolated precision at ``points`` evenly spaced recall levels.

    Precision at recall ``r`` is the best precision reached at any rank whose
    recall is at least ``r``. Without relevant items precision is 0 throughout.
    """
    if points < 2:
        raise ValueError("points must be >= 2")
    levels = np.round(np.linspace(0.0, 1.0, points), 12)
    rel = np.asarray(relevance, dtype=np.float64).ravel()
    total = rel.sum()
    if total == 0:
        return levels, np.zeros(points)
    hits = np.cumsum(rel)
    precision = hits / np.arange(1, rel.size + 1)
    recall = hits / total
    # running max from the tail
    best = np.maximum.accumulate(precision[::-1])[::-1]
    pos = np.searchsorted(recall, levels - 1e-12, side="left")
    out = np.where(pos < rel.size, best[np.minimum(pos, rel.size - 1)], 0.0)
    return levels, out


@dataclass
class EvalReport:
    mAP: float
    per_query_ap: List[float]
    per_class_map: Dict[int, float]
    pr_curve: List[Tuple[float, float]]
    top_k: Optional[int] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mAP": self.mAP,
            "perQueryAP": self.per_query_ap,
            "perClassMAP": {str(k): v for k, v in sorted(self.per_class_map.items())},
            "prCurve": [{"recall": r, "precision": p} for r, p in self.pr_curve],
            "topK": self.top_k,
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def pr_csv(self) -> str:
        return "recall,precision\n" + "".join(f"{r!r},{p!r}\n" for r, p in self.pr_curve)


def pr_curve(results: Sequence[RankedResult], points: int = 11) -> List[Tuple[float, float]]:
    """Interpolated precision-recall averaged over queries."""
    if not results:
        raise ValueError("no ranked results")
    acc = np.zeros(points)
    levels = None
    for r in results:
        levels, prec = interpolated_pr(r.relevance, points)
        acc += prec
    acc /= len(results)
    return [(float(a), float(b)) for a, b in zip(levels, acc)]


def mean_ap(results: Sequence[RankedResult], points: int = 11, k: Optional[int] = None) -> EvalReport:
    """mAP over all queries, per-class mAP keyed by query label, and the PR curve."""
    if not results:
        raise ValueError("no ranked results to evaluate")
    aps = [average_precision(r.relevance, k) for r in results]
    by_class: Dict[int, List[float]] = defaultdict(list)
    for r, ap in zip(results, aps):
        if r.query_label is not None:
            by_class[int(r.query_label)].append(ap)
    return EvalReport(
        mAP=float(np.mean(aps)),
        per_query_ap=aps,
        per_class_map={c: float(np.mean(v)) for c, v in by_class.items()},
        pr_curve=pr_curve(results, points),
        top_k=k,
    )
