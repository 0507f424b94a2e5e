import logging
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt
from scipy.stats import rankdata

from multiclass_auc.data.data_models import ClassIndex, PairAucMatrix, PairReportRow, ScoreMatrix
from multiclass_auc.errors import InvalidArgumentError, ShapeMismatchError

logger = logging.getLogger(__name__)


def pair_auc(col: npt.ArrayLike, pos: npt.ArrayLike, neg: npt.ArrayLike) -> float:
    """AUC of one score column for positives `pos` against negatives `neg`, ties counting 1/2.

    Computed from midranks of the merged scores in O((n_pos + n_neg) log(n_pos + n_neg)). Midranks of a
    tie block are exact half-integers, so the result is bit-identical to the quadratic-time count.

    Args:
        col (npt.ArrayLike): Length-N scores.
        pos (npt.ArrayLike): Indices of the positive samples.
        neg (npt.ArrayLike): Indices of the negative samples, disjoint from `pos`.

    Returns:
        float: The pairwise AUC in [0, 1].
    """
    col = np.asarray(col, dtype=np.float64)
    pos = np.asarray(pos, dtype=np.int64)
    neg = np.asarray(neg, dtype=np.int64)
    if pos.size == 0 or neg.size == 0:
        raise InvalidArgumentError("A pairwise AUC needs at least one positive and one negative.")
    ranks = rankdata(np.concatenate([col[pos], col[neg]]), method="average")
    n_pos, n_neg = pos.size, neg.size
    wins = float(ranks[:n_pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return wins / (n_pos * n_neg)


def pair_auc_quadratic(col: npt.ArrayLike, pos: npt.ArrayLike, neg: npt.ArrayLike) -> float:
    """The quadratic-time definition of `pair_auc`; a reference for tests."""
    col = np.asarray(col, dtype=np.float64)
    a = col[np.asarray(pos, dtype=np.int64)][:, None]
    b = col[np.asarray(neg, dtype=np.int64)][None, :]
    wins = np.count_nonzero(a > b) + 0.5 * np.count_nonzero(a == b)
    return wins / (a.size * b.size)


def check_scores(F: ScoreMatrix, idx: ClassIndex) -> np.ndarray:
    """Validate a score matrix against a class index and return it as a float array."""
    F = np.asarray(F, dtype=np.float64)
    if F.shape != (idx.n_samples, idx.n_classes):
        raise ShapeMismatchError(f"Score matrix shape {F.shape} does not match ({idx.n_samples}, {idx.n_classes}).")
    if not np.all(np.isfinite(F)):
        raise InvalidArgumentError("Score matrix contains non-finite values.")
    return F


def pair_auc_all(F: ScoreMatrix, idx: ClassIndex) -> PairAucMatrix:
    """All pairwise AUCs; entry (i, j) ranks class i against class j by column i.

    The diagonal, and rows or columns of empty classes, are NaN.
    """
    F = check_scores(F, idx)
    result = np.full((idx.n_classes, idx.n_classes), np.nan)
    active = idx.active_classes()
    for i in active:
        for j in active:
            if i != j:
                result[i, j] = pair_auc(F[:, i], idx.members[i], idx.members[j])
    return result


def _off_diagonal(P: PairAucMatrix) -> tuple[np.ndarray, int]:
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
        raise ShapeMismatchError(f"Pairwise AUCs must form a square matrix of at least 2 classes, got {P.shape}.")
    return P, P.shape[0]


def mauc_ovo(P: PairAucMatrix) -> float:
    """One-vs-one multiclass AUC: the unweighted mean of the N_C(N_C - 1) pairwise AUCs."""
    P, n_classes = _off_diagonal(P)
    mask = ~np.eye(n_classes, dtype=bool)
    return float(P[mask].sum() / (n_classes * (n_classes - 1)))


def mauc_ova(P: PairAucMatrix, p: Sequence[float]) -> float:
    """One-vs-all multiclass AUC written in pairwise form: weights p_j / (1 - p_i) on AUC_{i|j}.

    Args:
        P (PairAucMatrix): The pairwise AUCs.
        p (Sequence[float]): Class priors, positive and summing to 1; empirical proportions are the usual choice.

    Returns:
        float: (1/N_C) sum_i sum_{j != i} p_j / (1 - p_i) AUC_{i|j}.
    """
    P, n_classes = _off_diagonal(P)
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (n_classes,):
        raise ShapeMismatchError(f"Expected {n_classes} priors, got {p.shape}.")
    if np.any(p <= 0) or abs(float(p.sum()) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"Priors must be positive and sum to 1, got {p.tolist()}.")
    if np.any(p >= 1):
        raise InvalidArgumentError("A prior of 1 leaves the one-vs-all weights undefined.")
    weights = p[None, :] / (1.0 - p[:, None])
    mask = ~np.eye(n_classes, dtype=bool)
    return float((weights[mask] * P[mask]).sum() / n_classes)


def pair_report(F: ScoreMatrix, idx: ClassIndex, k: int) -> list[PairReportRow]:
    """The k least frequent ordered class pairs with their AUCs.

    Pairs are sorted ascending by rho_i * rho_j, ties broken by (i, j).
    """
    if k < 1:
        raise InvalidArgumentError(f"The pair count must be at least 1, got {k}.")
    P = pair_auc_all(F, idx)
    active = idx.active_classes()
    pairs = sorted(
        ((float(idx.proportions[i] * idx.proportions[j]), i, j) for i in active for j in active if i != j),
    )
    return [PairReportRow(i=i, j=j, freq=freq, auc=float(P[i, j])) for freq, i, j in pairs[:k]]


def mauc(F: ScoreMatrix, idx: ClassIndex) -> float:
    """Shorthand for `mauc_ovo(pair_auc_all(F, idx))`, restricted to the nonempty classes."""
    active = idx.active_classes()
    return mauc_ovo(pair_auc_all(F, idx)[np.ix_(active, active)])
