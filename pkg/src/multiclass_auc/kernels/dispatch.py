import logging

from multiclass_auc.data.data_models import (
    ClassIndex,
    FastRiskOutput,
    KernelCounters,
    ScoreMatrix,
    SurrogateKind,
    SurrogateSpec,
)
from multiclass_auc.kernels.bernstein_kernel import BernsteinKernel
from multiclass_auc.kernels.exp_kernel import ExpKernel
from multiclass_auc.kernels.hinge_kernel import HingeKernel
from multiclass_auc.kernels.naive_kernel import NaiveKernel, ZeroOneKernel
from multiclass_auc.kernels.risk_kernel import KernelRoute, RiskKernel
from multiclass_auc.kernels.square_kernel import SquareKernel

logger = logging.getLogger(__name__)

KERNELS: dict[KernelRoute, RiskKernel] = {
    kernel.route: kernel
    for kernel in (ExpKernel(), HingeKernel(), SquareKernel(), BernsteinKernel(), ZeroOneKernel(), NaiveKernel())
}


def route_for(spec: SurrogateSpec, force_naive: bool = False) -> tuple[KernelRoute, SurrogateSpec]:
    """Choose the evaluation path of a loss and the loss that path actually evaluates.

    Losses without an exact accelerated kernel are replaced by their Bernstein approximation of the
    specification's degree, unless the quadratic-time path is forced, which evaluates the loss as given.
    """
    if force_naive:
        return KernelRoute.NAIVE, spec
    match spec.kind:
        case SurrogateKind.EXP:
            return KernelRoute.EXP, spec
        case SurrogateKind.HINGE:
            return KernelRoute.HINGE, spec
        case SurrogateKind.SQUARED:
            return KernelRoute.SQUARED, spec
        case SurrogateKind.BERNSTEIN:
            return KernelRoute.BERNSTEIN, spec
        case SurrogateKind.ZEROONE:
            return KernelRoute.ZEROONE, spec
        case SurrogateKind.LOGIT | SurrogateKind.QHINGE | SurrogateKind.GENHINGE | SurrogateKind.DISTWEIGHT:
            return KernelRoute.BERNSTEIN, spec.bernstein_of()
        case _:  # pragma: no cover
            raise ValueError(f"Unsupported surrogate loss: {spec.kind}")


def dispatch_fast(
    F: ScoreMatrix,
    idx: ClassIndex,
    spec: SurrogateSpec,
    want_grad: bool = False,
    counters: KernelCounters | None = None,
    force_naive: bool = False,
) -> FastRiskOutput:
    """Evaluate the risk, and optionally its gradient, on the fastest path available for the loss.

    Args:
        F (ScoreMatrix): N×N_C scores.
        idx (ClassIndex): The class bookkeeping.
        spec (SurrogateSpec): The loss.
        want_grad (bool): Also compute the gradient with respect to the scores.
        counters (KernelCounters | None): Work instrumentation, updated in place.
        force_naive (bool): Use the quadratic-time reference sums.

    Returns:
        FastRiskOutput: The evaluation result.
    """
    route, effective = route_for(spec, force_naive=force_naive)
    logger.debug(f"Evaluating {spec} on the {route} path as {effective}")
    return KERNELS[route].evaluate(F, idx, effective, want_grad=want_grad, counters=counters)
