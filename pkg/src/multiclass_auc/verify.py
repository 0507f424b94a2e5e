import logging

import numpy as np
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn
from scipy.special import softmax

from multiclass_auc import EnvVar
from multiclass_auc.data.data_models import ClassIndex, ScoreMatrix, SurrogateSpec, VerifyReport
from multiclass_auc.data.datasets import index_from_labels
from multiclass_auc.errors import InvalidArgumentError
from multiclass_auc.kernels.dispatch import dispatch_fast, route_for
from multiclass_auc.reference import grad_naive, risk_naive

logger = logging.getLogger(__name__)

LOSS_TOLERANCE = 1e-9
ZERO_LOSS_TOLERANCE = 1e-12
GRAD_TOLERANCE = 1e-8
MIN_SAMPLES = 8
MIN_PROPORTION = 0.02
DUPLICATE_PROBABILITY = 0.2


def random_instance(rng: np.random.Generator, max_n: int) -> tuple[ScoreMatrix, ClassIndex]:
    """A random scoring problem: 2 to 7 skewed classes, softmax scores, sometimes with duplicated rows.

    Class proportions are at least 0.02 and every class has a member. With probability 0.2 a fifth of the
    rows are overwritten by copies of other rows so that exact score ties occur.
    """
    n_classes = int(rng.integers(2, 8))
    n = int(rng.integers(max(MIN_SAMPLES, n_classes), max_n + 1))
    rho = MIN_PROPORTION + (1.0 - MIN_PROPORTION * n_classes) * rng.dirichlet(np.full(n_classes, 0.5))
    labels = np.concatenate([np.arange(n_classes), rng.choice(n_classes, size=n - n_classes, p=rho)])
    labels = rng.permutation(labels)
    F = softmax(2.0 * rng.standard_normal((n, n_classes)), axis=1)
    if rng.random() < DUPLICATE_PROBABILITY:
        targets = rng.choice(n, size=max(1, n // 5), replace=False)
        F[targets] = F[rng.choice(n, size=targets.size)]
    return F, index_from_labels(labels, n_classes)


def deviations(F: ScoreMatrix, idx: ClassIndex, spec: SurrogateSpec) -> tuple[float, float, bool]:
    """Compare the dispatched kernel with the brute-force sums of the loss it actually evaluates.

    Returns:
        tuple[float, float, bool]: The loss deviation relative to max(1, |oracle|), the largest gradient
        entry deviation, and whether both are within tolerance.
    """
    _, effective = route_for(spec)
    fast = dispatch_fast(F, idx, spec, want_grad=True)
    oracle = risk_naive(F, idx, effective).value
    loss_dev = abs(fast.loss.value - oracle) / max(1.0, abs(oracle))
    grad_dev = float(np.max(np.abs(fast.grad - grad_naive(F, idx, effective))))
    loss_ok = abs(fast.loss.value) <= ZERO_LOSS_TOLERANCE if oracle == 0.0 else loss_dev <= LOSS_TOLERANCE
    return loss_dev, grad_dev, loss_ok and grad_dev <= GRAD_TOLERANCE


def run_verify(
    spec: SurrogateSpec,
    trials: int = 50,
    max_n: int = 512,
    seed: int = 0,
    show_progress: bool = False,
) -> VerifyReport:
    """Check the accelerated kernel for a loss against the brute-force reference on random instances.

    Trial t uses seed `seed + t`; the first failing trial stops the run and its seed is reported for replay.

    Args:
        spec (SurrogateSpec): The loss.
        trials (int): Number of random instances.
        max_n (int): Largest sample count drawn.
        seed (int): Seed of the first instance.
        show_progress (bool): Display a progress bar over the trials.

    Returns:
        VerifyReport: Worst deviations and, on failure, the seed of the failing instance.
    """
    if trials < 1:
        raise InvalidArgumentError(f"At least one trial is needed, got {trials}.")
    if not MIN_SAMPLES <= max_n <= EnvVar.MAUC_NAIVE_MAX_N:
        raise InvalidArgumentError(f"The largest sample count must be in [{MIN_SAMPLES}, {EnvVar.MAUC_NAIVE_MAX_N}].")
    worst_loss, worst_grad = 0.0, 0.0
    failing_seed = None
    with Progress(
        TextColumn(text_format="{task.description}"),
        BarColumn(bar_width=None),
        MofNCompleteColumn(),
        transient=True,
        disable=not show_progress,
    ) as progress:
        task = progress.add_task(f"Verifying {spec}", total=trials)
        for trial in range(trials):
            instance_seed = seed + trial
            F, idx = random_instance(np.random.default_rng(instance_seed), max_n)
            loss_dev, grad_dev, ok = deviations(F, idx, spec)
            worst_loss, worst_grad = max(worst_loss, loss_dev), max(worst_grad, grad_dev)
            progress.update(task, advance=1)
            if not ok:
                failing_seed = instance_seed
                logger.error(
                    f"Seed {instance_seed}: loss deviation {loss_dev:.3e}, gradient deviation {grad_dev:.3e} "
                    f"(N={idx.n_samples}, N_C={idx.n_classes})."
                )
                break
    return VerifyReport(
        loss=str(spec),
        trials=trials,
        passed=failing_seed is None,
        worst_loss_dev=worst_loss,
        worst_grad_dev=worst_grad,
        failing_seed=failing_seed,
    )
