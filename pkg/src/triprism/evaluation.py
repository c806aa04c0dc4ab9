"""Retrieval and classification evaluation.

Retrieval follows the one-vs-rest protocol: each sample queries the rest
of the database, items of the query's class are the relevant set, and a
precision/recall curve is accumulated per class, averaged on a common
recall grid.  Classification quality is summarized by confusion matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_feature_matrix


@dataclass(frozen=True)
class PRCurve:
    """Precision/recall pairs sorted by non-decreasing recall."""

    recalls: np.ndarray
    precisions: np.ndarray
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "recalls", np.asarray(self.recalls, dtype=np.float64))
        object.__setattr__(self, "precisions", np.asarray(self.precisions, dtype=np.float64))
        if self.recalls.shape != self.precisions.shape or self.recalls.ndim != 1:
            raise ValueError("recalls and precisions must be 1-D arrays of equal length")
        if self.recalls.size == 0:
            raise ValueError("a PR curve needs at least one point")
        if np.any(np.diff(self.recalls) < 0):
            raise ValueError("recalls must be non-decreasing")
        for name, vals in (("recalls", self.recalls), ("precisions", self.precisions)):
            if vals.min() < 0.0 or vals.max() > 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


def retrieval_ranking(query_index: int, X) -> np.ndarray:
    """Indices of all other samples, closest first.

    Distances are Euclidean in descriptor space; exact ties are broken
    toward the lower sample index.
    """
    X = check_feature_matrix(X, min_rows=2)
    if not 0 <= query_index < X.shape[0]:
        raise IndexError(f"query index {query_index} out of range for {X.shape[0]} samples")
    dist = np.sqrt(np.sum((X - X[query_index]) ** 2, axis=1))
    order = np.argsort(dist, kind="stable")
    return order[order != query_index]


def pr_curve(query_index: int, ranking, relevant) -> PRCurve:
    """Precision/recall curve of one query over a given ranking.

    One point is recorded per relevant item: after retrieving the k-th
    relevant item at (1-based) rank r, recall is ``k / n_relevant`` and
    precision is ``k / r``.
    """
    ranking = np.asarray(ranking)
    relevant = set(int(i) for i in relevant)
    if not relevant:
        raise ValueError("relevant set must not be empty")
    if query_index in relevant:
        raise ValueError("relevant set must exclude the query itself")
    if query_index in ranking:
        raise ValueError("ranking must exclude the query itself")
    hits = np.flatnonzero(np.isin(ranking, list(relevant))) + 1  # 1-based ranks
    if hits.size != len(relevant):
        raise ValueError("ranking does not contain every relevant item")
    found = np.arange(1, hits.size + 1, dtype=np.float64)
    return PRCurve(recalls=found / len(relevant), precisions=found / hits)


def interpolate_precision(curve: PRCurve, grid) -> np.ndarray:
    """Step-interpolate a curve's precision onto a recall grid.

    The precision at recall ``r`` is the precision of the first curve
    point whose recall is >= ``r``; past the last point the last
    precision is held.
    """
    grid = np.asarray(grid, dtype=np.float64)
    idx = np.searchsorted(curve.recalls, grid, side="left")
    idx = np.minimum(idx, curve.recalls.size - 1)
    return curve.precisions[idx]


def default_recall_grid(n_points: int = 100) -> np.ndarray:
    return np.linspace(0.0, 1.0, n_points)


def average_pr(curves, grid=None, label: str | None = None) -> PRCurve:
    """Pointwise mean of several curves on a shared recall grid."""
    curves = list(curves)
    if not curves:
        raise ValueError("need at least one curve to average")
    if grid is None:
        grid = default_recall_grid()
    grid = np.asarray(grid, dtype=np.float64)
    stacked = np.vstack([interpolate_precision(c, grid) for c in curves])
    return PRCurve(recalls=grid, precisions=stacked.mean(axis=0), label=label)


def auc(curve: PRCurve) -> float:
    """Trapezoidal area under a PR curve over recall in [0, 1].

    The curve is extended flat from recall 0 to its first point and from
    its last point to recall 1, so a constant-precision curve integrates
    to exactly that precision.
    """
    r = curve.recalls
    p = curve.precisions
    if r[0] > 0.0:
        r = np.concatenate(([0.0], r))
        p = np.concatenate(([p[0]], p))
    if r[-1] < 1.0:
        r = np.concatenate((r, [1.0]))
        p = np.concatenate((p, [p[-1]]))
    return float(np.sum(np.diff(r) * (p[1:] + p[:-1]) / 2.0))


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed by (true class, predicted class) in a fixed order."""

    counts: np.ndarray
    classes: tuple

    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.counts.sum())

    def to_dict(self) -> dict:
        return {"classes": list(self.classes), "counts": self.counts.tolist()}


def confusion_matrix(y_true, y_pred, classes=None) -> ConfusionMatrix:
    """Tally predictions against ground truth.

    ``classes`` fixes the row/column order; it defaults to the sorted
    unique true labels.  A label outside that set raises.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must have equal length")
    if classes is None:
        classes = np.unique(y_true)
    classes = list(classes)
    index = {label: i for i, label in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        try:
            counts[index[t], index[p]] += 1
        except KeyError as unknown:
            raise ValueError(f"label {unknown} not in the class list") from None
    return ConfusionMatrix(counts=counts, classes=tuple(classes))


def confusion_to_image(cm: ConfusionMatrix) -> np.ndarray:
    """Render counts as a grayscale heatmap; darker means more samples."""
    counts = cm.counts.astype(np.float64)
    peak = counts.max()
    if peak == 0:
        return np.full_like(counts, 255.0)
    return 255.0 * (1.0 - counts / peak)
