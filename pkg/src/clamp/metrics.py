"""Retrieval and classification metrics."""

from __future__ import annotations

from typing import Sequence

from .errors import EmptyInputError, ShapeMismatchError


def mrr(ranks: Sequence[int]) -> float:
    """Mean of reciprocal ranks; ranks are 1-based positive integers."""
    if not ranks:
        raise EmptyInputError("mrr of an empty rank list")
    if any(r < 1 for r in ranks):
        raise ValueError("ranks must be >= 1")
    return sum(1.0 / r for r in ranks) / len(ranks)


def hr_at_k(ranks: Sequence[int], k: int) -> float:
    """Fraction of queries whose target landed in the top k."""
    if not ranks:
        raise EmptyInputError("hr_at_k of an empty rank list")
    if k < 1:
        raise ValueError("k must be >= 1")
    return sum(1 for r in ranks if r <= k) / len(ranks)


def f1_macro(predictions: Sequence, labels: Sequence) -> tuple[float, float]:
    """(macro F1, accuracy). Per-class F1 uses the 0/0 := 0 convention and
    the macro mean runs over the classes present in the true labels."""
    if len(predictions) != len(labels):
        raise ShapeMismatchError(f"{len(predictions)} predictions vs {len(labels)} labels")
    if not labels:
        raise EmptyInputError("no labels given")
    classes = sorted(set(labels))
    scores = []
    for cls in classes:
        tp = sum(1 for p, t in zip(predictions, labels) if p == cls and t == cls)
        fp = sum(1 for p, t in zip(predictions, labels) if p == cls and t != cls)
        fn = sum(1 for p, t in zip(predictions, labels) if p != cls and t == cls)
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    accuracy = sum(1 for p, t in zip(predictions, labels) if p == t) / len(labels)
    return sum(scores) / len(classes), accuracy
