import logging
import os
import time
from collections.abc import Callable, Sequence

import numpy as np
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn

from multiclass_auc import EnvVar
from multiclass_auc.data.data_models import BenchMetadata, BenchReport, BenchRow, SurrogateSpec
from multiclass_auc.data.datasets import build_index, synth_uniform
from multiclass_auc.errors import InvalidArgumentError
from multiclass_auc.kernels.dispatch import dispatch_fast
from multiclass_auc.model import LinearSoftmaxModel, score
from multiclass_auc.sysinfo import MachineProfile

logger = logging.getLogger(__name__)

DEFAULT_SIZES = (32, 64, 128, 256, 512, 1024)
DEFAULT_RHO = (0.2, 0.1, 0.2, 0.4, 0.1)
DEFAULT_N_FEATURES = 100
WARMUP_RUNS = 1


def median_time_ms(fn: Callable[[], object], trials: int, warmup: int = WARMUP_RUNS) -> float:
    """Median wall-clock time of `fn` in milliseconds over `trials` runs, after discarded warm-up runs."""
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(trials):
        start = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - start) * 1e3)
    return float(np.median(samples))


def bench_size(
    spec: SurrogateSpec,
    n: int,
    rho: Sequence[float],
    n_features: int = DEFAULT_N_FEATURES,
    trials: int = 5,
    seed: int = 0,
    grad: bool = False,
    naive_max_n: int | None = None,
) -> BenchRow:
    """Time the brute-force and the accelerated risk evaluation on one uniform synthetic dataset.

    The scores come from a linear-softmax model with weights drawn uniformly on [0, 1].
    """
    naive_max_n = EnvVar.MAUC_NAIVE_MAX_N if naive_max_n is None else naive_max_n
    if n > naive_max_n:
        raise InvalidArgumentError(f"Refusing to time the brute-force risk at N={n}; the cap is {naive_max_n}.")
    ds = synth_uniform(n, n_features, rho, seed)
    rng = np.random.default_rng(seed)
    model = LinearSoftmaxModel(W=rng.random((ds.n_classes, n_features)), bias=np.zeros(ds.n_classes))
    F = score(model, ds.features)
    idx = build_index(ds)
    naive_ms = median_time_ms(lambda: dispatch_fast(F, idx, spec, want_grad=grad, force_naive=True), trials)
    fast_ms = median_time_ms(lambda: dispatch_fast(F, idx, spec, want_grad=grad), trials)
    if naive_ms < fast_ms:
        logger.warning(f"The brute-force path was faster than the accelerated one for {spec} at N={n}.")
    counts = idx.counts.astype(np.float64)
    pairs = float(n**2 - np.sum(counts**2))
    return BenchRow(
        loss=str(spec),
        N=n,
        nc=ds.n_classes,
        d=n_features,
        trials=trials,
        naive_ms=naive_ms,
        fast_ms=fast_ms,
        ratio=naive_ms / max(fast_ms, 1e-9),
        pair_work_ratio=pairs / (n * ds.n_classes),
    )


def run_bench(
    spec: SurrogateSpec,
    sizes: Sequence[int] = DEFAULT_SIZES,
    rho: Sequence[float] = DEFAULT_RHO,
    n_features: int = DEFAULT_N_FEATURES,
    trials: int = 5,
    seed: int = 0,
    grad: bool = False,
    show_progress: bool = False,
) -> BenchReport:
    """Acceleration ratios over ascending sample sizes, trials run strictly sequentially.

    Args:
        spec (SurrogateSpec): The loss.
        sizes (Sequence[int]): Strictly ascending sample sizes.
        rho (Sequence[float]): Class proportions; their count is N_C.
        n_features (int): The feature dimension d.
        trials (int): Timed runs per path and size; the median is reported.
        seed (int): Seed of the synthetic data and model.
        grad (bool): Time loss and gradient together.
        show_progress (bool): Display a progress bar over the sizes.

    Returns:
        BenchReport: One row per size, with the measurement metadata.
    """
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:], strict=False)):
        raise InvalidArgumentError(f"Sizes must be non-empty and strictly ascending, got {list(sizes)}.")
    if trials < 1:
        raise InvalidArgumentError(f"At least one trial is needed, got {trials}.")
    if max(sizes) > EnvVar.MAUC_NAIVE_MAX_N:
        raise InvalidArgumentError(
            f"Size {max(sizes)} exceeds the brute-force cap of {EnvVar.MAUC_NAIVE_MAX_N} (MAUC_NAIVE_MAX_N)."
        )
    report = BenchReport(
        metadata=BenchMetadata(
            warmup_runs=WARMUP_RUNS,
            gradient=grad,
            seed=seed,
            machine=MachineProfile().describe(),
        )
    )
    with Progress(
        TextColumn(text_format="{task.description}"),
        BarColumn(bar_width=None),
        MofNCompleteColumn(),
        transient=True,
        disable=not show_progress,
    ) as progress:
        task = progress.add_task(f"Benchmarking {spec}", total=len(sizes))
        for n in sizes:
            row = bench_size(spec, n, rho, n_features=n_features, trials=trials, seed=seed, grad=grad)
            logger.debug(f"N={n}: naive {row.naive_ms:.3f} ms, fast {row.fast_ms:.3f} ms, ratio {row.ratio:.1f}")
            report.rows.append(row)
            progress.update(task, advance=1)
    return report


def write_report(report: BenchReport, path: str | os.PathLike) -> None:
    """Write JSON when the path ends in .json, CSV otherwise."""
    text = report.model_dump_json(indent=2) if str(path).lower().endswith(".json") else report.to_csv()
    with open(path, "w") as f:
        f.write(text)
    logger.info(f"Wrote {len(report.rows)} benchmark rows to {path}")
