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
from multiclass_auc.errors import InvalidArgumentError
from multiclass_auc.kernels.risk_kernel import KernelRoute, RiskKernel

logger = logging.getLogger(__name__)

# Largest exponent magnitude after centring; keeps each factor and their product finite.
EXPONENT_LIMIT = 300.0


class ExpKernel(RiskKernel):
    """Exponential loss through the factorization exp(-a(s - t)) = exp(-a s) exp(a t).

    Per class, a_i = sum over positives of exp(-alpha F) and b_i = sum over the rest of D exp(alpha F);
    the contribution is a_i * b_i. Both sides are centred on the column's mid-range, which cancels.
    """

    route = KernelRoute.EXP
    accepts = frozenset({SurrogateKind.EXP})

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
        pos, neg, weights = self._split(idx, i)
        column = F[:, i]
        low, high = float(column.min()), float(column.max())
        if alpha * (high - low) / 2.0 > EXPONENT_LIMIT:
            raise InvalidArgumentError(
                f"Scores of class {i} span {high - low:g}, too wide for the exponential loss with alpha={alpha:g}."
            )
        shift = alpha * (high + low) / 2.0
        up = np.exp(shift - alpha * column[pos])
        down = weights * np.exp(alpha * column[neg] - shift)
        a, b = float(up.sum()), float(down.sum())
        if counters is not None:
            counters.loss_evals += pos.size + neg.size
        if grad is not None:
            grad[pos, i] = -alpha * up * b
            grad[neg, i] = alpha * down * a
        return a * b


def exp_fast(
    F: ScoreMatrix,
    idx: ClassIndex,
    spec: SurrogateSpec,
    want_grad: bool = False,
    counters: KernelCounters | None = None,
) -> FastRiskOutput:
    """Exponential-loss risk and gradient in O(N N_C)."""
    return ExpKernel().evaluate(F, idx, spec, want_grad=want_grad, counters=counters)
