import logging

import numpy as np

from multiclass_auc.data.data_models import (
    ClassIndex,
    FastRiskOutput,
    KernelCounters,
    ScoreMatrix,
    SurrogateKind,
    SurrogateSpec,
)
from multiclass_auc.kernels.risk_kernel import KernelRoute, RiskKernel

logger = logging.getLogger(__name__)


class SquareKernel(RiskKernel):
    """Squared loss as a quadratic form in the residual alpha * Y - F.

    With the residual r, positives weighted (C - 1)/n_i and negatives n_i D, the class contribution is
    r' (kappa * r) - 2 r1 r2, where r1 is the D-weighted negative residual sum and r2 the positive one.
    The expansion of the pairwise sum gives this with factor 1 exactly.
    """

    route = KernelRoute.SQUARED
    accepts = frozenset({SurrogateKind.SQUARED})

    def _class_risk(
        self,
        F: np.ndarray,
        idx: ClassIndex,
        i: int,
        spec: SurrogateSpec,
        grad: np.ndarray | None,
        counters: KernelCounters | None,
    ) -> float:
        positive = idx.labels == i
        n_i = int(idx.counts[i])
        negative_weights = np.where(positive, 0.0, idx.pair_weights[i])
        residual = spec.alpha * positive - F[:, i]
        kappa = n_i * negative_weights + ((idx.n_active - 1) / n_i) * positive
        r1 = float(negative_weights @ residual)
        r2 = float(residual[positive].sum())
        if counters is not None:
            counters.loss_evals += residual.size
        if grad is not None:
            grad[:, i] = -2.0 * (kappa * residual - r2 * negative_weights - r1 * positive)
        return float(residual @ (kappa * residual)) - 2.0 * r1 * r2


def square_fast(
    F: ScoreMatrix,
    idx: ClassIndex,
    spec: SurrogateSpec,
    want_grad: bool = False,
    counters: KernelCounters | None = None,
) -> FastRiskOutput:
    """Squared-loss risk and gradient in O(N N_C)."""
    return SquareKernel().evaluate(F, idx, spec, want_grad=want_grad, counters=counters)
