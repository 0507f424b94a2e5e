import logging

import numpy as np

from multiclass_auc.data.data_models import (
    ClassIndex,
    FastRiskOutput,
    HingeIndex,
    KernelCounters,
    ScoreMatrix,
    SurrogateKind,
    SurrogateSpec,
)
from multiclass_auc.kernels.risk_kernel import KernelRoute, RiskKernel

logger = logging.getLogger(__name__)


def _descending(samples: np.ndarray, column: np.ndarray) -> np.ndarray:
    # Keys: score descending, then sample index ascending.
    return samples[np.lexsort((samples, -column[samples]))]


def hinge_index(
    column: np.ndarray,
    idx: ClassIndex,
    i: int,
    alpha: float,
    counters: KernelCounters | None = None,
) -> HingeIndex:
    """Activation prefixes of the hinge loss for class i, by a two-pointer sweep.

    A negative n is active for a positive m when F[m] - F[n] < alpha; a pair exactly at the margin is
    inactive, as its loss is 0 there.

    Args:
        column (np.ndarray): Length-N scores of column i.
        idx (ClassIndex): The class bookkeeping.
        i (int): The positive class.
        alpha (float): The margin.
        counters (KernelCounters | None): Receives the sweep iteration count of this class.

    Returns:
        HingeIndex: Sorted positives, sorted negatives and the nested prefix lengths.
    """
    column = np.asarray(column, dtype=np.float64)
    pos_order = _descending(idx.members[i], column)
    neg_order = _descending(np.flatnonzero(idx.labels != i), column)
    negatives = column[neg_order].tolist()
    cut: list[int] = []
    r = 0
    steps = 0
    for score in column[pos_order].tolist():
        while r < len(negatives) and score - negatives[r] < alpha:
            r += 1
            steps += 1
        steps += 1
        cut.append(r)
    if counters is not None:
        counters.sweep_steps.append(steps)
    return HingeIndex(class_id=i, pos_order=pos_order, neg_order=neg_order, cut=cut)


class HingeKernel(RiskKernel):
    """Hinge loss by sorting and prefix sums over nested activation sets."""

    route = KernelRoute.HINGE
    accepts = frozenset({SurrogateKind.HINGE})

    def _class_risk(
        self,
        F: np.ndarray,
        idx: ClassIndex,
        i: int,
        spec: SurrogateSpec,
        grad: np.ndarray | None,
        counters: KernelCounters | None,
    ) -> float:
        alpha = spec.alpha
        column = F[:, i]
        index = hinge_index(column, idx, i, alpha, counters=counters)
        weights = idx.pair_weights[i, index.neg_order]
        scores = column[index.neg_order]
        # delta_k: weight of the active prefix; big_delta_k: its weighted score sum.
        delta = np.concatenate([[0.0], np.cumsum(weights)])[index.cut]
        big_delta = np.concatenate([[0.0], np.cumsum(weights * scores)])[index.cut]
        risk = float(np.sum(delta * (alpha - column[index.pos_order]) + big_delta))
        if grad is not None:
            grad[index.pos_order, i] = -delta
            ranks = np.arange(index.neg_order.size)
            covering = index.pos_order.size - np.searchsorted(index.cut, ranks, side="right")
            grad[index.neg_order, i] = weights * covering
        return risk


def hinge_fast(
    F: ScoreMatrix,
    idx: ClassIndex,
    spec: SurrogateSpec,
    want_grad: bool = False,
    counters: KernelCounters | None = None,
) -> FastRiskOutput:
    """Hinge-loss risk and gradient in O(N_C N log N)."""
    return HingeKernel().evaluate(F, idx, spec, want_grad=want_grad, counters=counters)
