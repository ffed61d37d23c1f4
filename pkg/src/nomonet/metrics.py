"""Pair-classification metrics: rank AUC, confusion-matrix report, threshold scan.

The task is binary: given a similarity score for a pair of indicators,
predict whether they measure the same construct. ``same`` is the positive
class; prediction is ``same`` iff score >= threshold.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import NomonetError, UndefinedMetric

SAME = "same"
DIFFERENT = "different"


@dataclass(frozen=True)
class ScoredPair:
    score: float
    label: str

    def __post_init__(self):
        if self.label not in (SAME, DIFFERENT):
            raise ValueError(f"label must be {SAME!r} or {DIFFERENT!r}")


def _split(pairs: list[ScoredPair]) -> tuple[np.ndarray, np.ndarray]:
    scores = np.array([p.score for p in pairs], dtype=np.float64)
    is_same = np.array([p.label == SAME for p in pairs], dtype=bool)
    if not is_same.any() or is_same.all():
        raise UndefinedMetric("need at least one pair of each label")
    return scores, is_same


def auc(pairs: list[ScoredPair]) -> float:
    """Rank-based (Mann-Whitney) AUC; tied scores count one half."""
    scores, is_same = _split(pairs)
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # average rank, 1-based
        i = j + 1
    n_same = int(is_same.sum())
    n_diff = len(scores) - n_same
    rank_sum = float(ranks[is_same].sum())
    return (rank_sum - n_same * (n_same + 1) / 2.0) / (n_same * n_diff)


def classification_report(pairs: list[ScoredPair], threshold: float) -> dict:
    """Per-class precision/recall/F1 with macro and support-weighted averages."""
    scores, is_same = _split(pairs)
    predicted_same = scores >= threshold

    tp = int(np.sum(predicted_same & is_same))
    fp = int(np.sum(predicted_same & ~is_same))
    fn = int(np.sum(~predicted_same & is_same))
    tn = int(np.sum(~predicted_same & ~is_same))

    def prf(tp_, fp_, fn_):
        precision = tp_ / (tp_ + fp_) if tp_ + fp_ else 0.0
        recall = tp_ / (tp_ + fn_) if tp_ + fn_ else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return precision, recall, f1

    p_same, r_same, f_same = prf(tp, fp, fn)
    # For the "different" class the confusion entries swap roles.
    p_diff, r_diff, f_diff = prf(tn, fn, fp)

    support_same = tp + fn
    support_diff = tn + fp
    total = support_same + support_diff
    return {
        "threshold": float(threshold),
        "macro_f1": (f_same + f_diff) / 2.0,
        "macro_precision": (p_same + p_diff) / 2.0,
        "macro_recall": (r_same + r_diff) / 2.0,
        "weighted_f1": (f_same * support_same + f_diff * support_diff) / total,
        "per_class": {
            SAME: {"precision": p_same, "recall": r_same, "f1": f_same, "support": support_same},
            DIFFERENT: {"precision": p_diff, "recall": r_diff, "f1": f_diff, "support": support_diff},
        },
        "confusion": {"tp": tp, "fp": fp, "fn": fn, "tn": tn},
    }


def best_threshold(pairs: list[ScoredPair], objective: str = "macro_f1") -> tuple[float, dict]:
    """Scan candidate thresholds, return the lowest one maximizing ``objective``.

    Candidates are midpoints between adjacent distinct scores plus -inf and
    +inf sentinels (predict everything same / everything different).
    """
    scores, _ = _split(pairs)
    distinct = np.unique(scores)
    candidates = [-np.inf]
    candidates.extend((distinct[:-1] + distinct[1:]) / 2.0)
    candidates.append(np.inf)

    best: tuple[float, dict] | None = None
    for threshold in candidates:
        report = classification_report(pairs, threshold)
        value = report[objective]
        if best is None or value > best[1][objective]:
            best = (float(threshold), report)
    assert best is not None
    return best


def metric_summary(pairs: list[ScoredPair], threshold: float | None = None) -> dict:
    """AUC plus the threshold-based metrics, at a given or scanned threshold."""
    if threshold is None:
        threshold, report = best_threshold(pairs)
    else:
        report = classification_report(pairs, threshold)
    return {"auc": auc(pairs), **report}


def load_pairs_csv(content: str) -> list[tuple[str, str, str]]:
    """Rows of (id1, id2, label) from an ``id1,id2,label`` CSV."""
    reader = csv.DictReader(io.StringIO(content))
    required = {"id1", "id2", "label"}
    if not required.issubset(reader.fieldnames or []):
        raise NomonetError("pairs CSV must have columns id1,id2,label")
    rows = []
    for row in reader:
        if row["label"] not in (SAME, DIFFERENT):
            raise NomonetError(f"bad label {row['label']!r}; use same/different")
        rows.append((row["id1"], row["id2"], row["label"]))
    return rows


def score_pairs(
    rows: list[tuple[str, str, str]], vectors_by_id: dict[str, np.ndarray]
) -> list[ScoredPair]:
    """Score each pair by cosine of its two embedding vectors."""
    pairs = []
    for id1, id2, label in rows:
        try:
            u, v = vectors_by_id[id1], vectors_by_id[id2]
        except KeyError as exc:
            raise NomonetError(f"no embedding for id {exc.args[0]!r}") from exc
        denom = float(np.linalg.norm(u) * np.linalg.norm(v))
        pairs.append(ScoredPair(score=float(np.dot(u, v)) / denom, label=label))
    return pairs
