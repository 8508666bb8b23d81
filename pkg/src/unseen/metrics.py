"""Supervised clustering scores: ACC by optimal matching, NMI, ARI.

Everything is computed from one contingency table, so all three scores
are invariant to relabeling of either side.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray          # (k_true, k_pred) nonneg ints
    row_values: np.ndarray      # original true label per row
    col_values: np.ndarray      # original predicted label per column

    @property
    def n(self):
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricsReport:
    acc: float
    ari: float
    nmi: float
    k_pred: int


def contingency(true_labels, pred_labels):
    true_labels = np.asarray(true_labels)
    pred_labels = np.asarray(pred_labels)
    if true_labels.shape != pred_labels.shape or true_labels.ndim != 1:
        raise ValueError(f"label shapes differ: {true_labels.shape} vs {pred_labels.shape}")
    if true_labels.size == 0:
        raise ValueError("empty labelings")
    rows, ri = np.unique(true_labels, return_inverse=True)
    cols, ci = np.unique(pred_labels, return_inverse=True)
    counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
    np.add.at(counts, (ri, ci), 1)
    return ContingencyTable(counts=counts, row_values=rows, col_values=cols)


def accuracy(table):
    """Best one-to-one matching of clusters onto classes, matched mass / N.

    The rectangular table is zero-padded to square and solved with the
    Hungarian algorithm on negated counts.
    """
    c = table.counts
    side = max(c.shape)
    padded = np.zeros((side, side), dtype=np.int64)
    padded[: c.shape[0], : c.shape[1]] = c
    rows, cols = linear_sum_assignment(-padded)
    return float(padded[rows, cols].sum()) / table.n


def _entropy(p):
    p = p[p > 0.0]
    return float(-(p * np.log(p)).sum())


def nmi(table):
    """Mutual information over the geometric mean of the two entropies.

    Both sides constant -> 1.0 (identical trivial partitions); exactly
    one side constant -> 0.0.
    """
    c = table.counts
    n = float(table.n)
    # marginals from the integer sums so trivial partitions give an exact 0
    pi = c.sum(axis=1) / n
    pj = c.sum(axis=0) / n
    pij = c / n
    h_true, h_pred = _entropy(pi), _entropy(pj)
    if h_true == 0.0 and h_pred == 0.0:
        return 1.0
    if h_true == 0.0 or h_pred == 0.0:
        return 0.0
    mask = pij > 0.0
    outer = np.outer(pi, pj)
    mi = float((pij[mask] * np.log(pij[mask] / outer[mask])).sum())
    return float(min(max(mi / np.sqrt(h_true * h_pred), 0.0), 1.0))


def _pairs(x):
    x = x.astype(np.float64)
    return float((x * (x - 1.0)).sum() / 2.0)


def ari(table):
    """Adjusted Rand index by the sum-of-binomials formula."""
    c = table.counts
    n = table.n
    index = _pairs(c)
    a = _pairs(c.sum(axis=1))
    b = _pairs(c.sum(axis=0))
    total = n * (n - 1.0) / 2.0
    expected = a * b / total if total > 0 else 0.0
    maximum = (a + b) / 2.0
    if maximum == expected:
        return 1.0
    return (index - expected) / (maximum - expected)


def evaluate(true_labels, pred_labels):
    """All three scores plus the number of distinct predicted clusters."""
    table = contingency(true_labels, pred_labels)
    return MetricsReport(
        acc=accuracy(table),
        ari=ari(table),
        nmi=nmi(table),
        k_pred=len(np.unique(np.asarray(pred_labels))),
    )
