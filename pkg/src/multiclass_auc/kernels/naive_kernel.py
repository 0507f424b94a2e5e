import logging

import numpy as np

from multiclass_auc.data.data_models import (
    ClassIndex,
    FastRiskOutput,
    KernelCounters,
    RiskValue,
    ScoreMatrix,
    SurrogateKind,
    SurrogateSpec,
)
from multiclass_auc.kernels.risk_kernel import KernelRoute, RiskKernel
from multiclass_auc.metrics import check_scores, mauc
from multiclass_auc.reference import grad_naive, risk_naive

logger = logging.getLogger(__name__)


class NaiveKernel(RiskKernel):
    """Quadratic-time evaluation through the reference sums; accepts every loss."""

    route = KernelRoute.NAIVE
    accepts = frozenset(SurrogateKind)

    def evaluate(
        self,
        F: ScoreMatrix,
        idx: ClassIndex,
        spec: SurrogateSpec,
        want_grad: bool = False,
        counters: KernelCounters | None = None,
    ) -> FastRiskOutput:
        loss = risk_naive(F, idx, spec, counters=counters)
        grad = grad_naive(F, idx, spec) if want_grad else None
        return FastRiskOutput(loss=loss, grad=grad)

    def _class_risk(self, F, idx, i, spec, grad, counters) -> float:  # pragma: no cover
        raise NotImplementedError


class ZeroOneKernel(RiskKernel):
    """The 0-1 risk 1 - MAUC from midrank AUCs in O(N_C N log N); its gradient is zero almost everywhere."""

    route = KernelRoute.ZEROONE
    accepts = frozenset({SurrogateKind.ZEROONE})

    def evaluate(
        self,
        F: ScoreMatrix,
        idx: ClassIndex,
        spec: SurrogateSpec,
        want_grad: bool = False,
        counters: KernelCounters | None = None,
    ) -> FastRiskOutput:
        F = check_scores(F, idx)
        grad = np.zeros_like(F) if want_grad else None
        return FastRiskOutput(loss=RiskValue(value=max(1.0 - mauc(F, idx), 0.0)), grad=grad)

    def _class_risk(self, F, idx, i, spec, grad, counters) -> float:  # pragma: no cover
        raise NotImplementedError
