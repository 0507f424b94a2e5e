import json
import logging
import signal
import sys
from enum import StrEnum
from importlib.metadata import version as metadata_version
from types import FrameType
from typing import Annotated

import typer
from pydantic import BaseModel
from rich import print as print, print_json
from rich.table import Table

from multiclass_auc import bench
from multiclass_auc.data.data_models import (
    AppSettings,
    BenchReport,
    EvalReport,
    SurrogateSpec,
    TrainConfig,
    TrainTrace,
    VerifyReport,
)
from multiclass_auc.data.datasets import (
    build_index,
    imbalance_factors,
    load_csv,
    load_libsvm,
    split_stratified,
    synth_blobs,
    synth_uniform,
    write_csv,
)
from multiclass_auc.errors import InvalidArgumentError, MultiClassAucError, ShapeMismatchError, VerificationError
from multiclass_auc.metrics import mauc_ova, mauc_ovo, pair_auc_all, pair_report
from multiclass_auc.model import LinearSoftmaxModel, score
from multiclass_auc.trainer import train, train_ce_baseline
from multiclass_auc.verify import run_verify

# Initialize the logger
logger = logging.getLogger(__name__)

# Initialize the Typer application
app = typer.Typer(
    no_args_is_help=True,
    add_completion=False,
    help="A command-line interface for multiclass AUC evaluation and pairwise surrogate risk minimization.",
)


class DataFormat(StrEnum):
    """Supported dataset file formats."""

    CSV = "csv"
    LIBSVM = "libsvm"


class SynthKind(StrEnum):
    """Synthetic dataset generators."""

    UNIFORM = "uniform"
    BLOBS = "blobs"


class Baseline(StrEnum):
    """Baselines trained in place of the pairwise risk."""

    CE = "ce"


class ReportKind(StrEnum):
    """Machine-readable reports with a published JSON schema."""

    EVAL = "eval"
    BENCH = "bench"
    VERIFY = "verify"
    TRACE = "trace"


REPORT_MODELS: dict[ReportKind, type[BaseModel]] = {
    ReportKind.EVAL: EvalReport,
    ReportKind.BENCH: BenchReport,
    ReportKind.VERIFY: VerifyReport,
    ReportKind.TRACE: TrainTrace,
}


def _parse_list(text: str, cast: type, name: str) -> list:
    try:
        return [cast(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise InvalidArgumentError(f"--{name} must be a comma-separated list, got '{text}'.") from None


class MultiClassAucCLIApp:
    """Class to handle the CLI application logic for the multiclass AUC toolkit."""

    def __init__(self):
        # Set up signal handlers for graceful shutdown
        for sig in [signal.SIGINT, signal.SIGTERM]:
            signal.signal(sig, self._interrupt_handler)

    def _interrupt_handler(self, signum: int, frame: FrameType | None):  # pragma: no cover
        logger.warning("Interrupt signal received, stopping")
        logger.debug(f"Interrupt signal number: {signum}. Frame: {frame}")
        sys.exit(130)

    def _fail(self, action: str, e: Exception):
        """Log a failed command and exit with the code of its error."""
        match e:
            case MultiClassAucError():
                exit_code = e.exit_code
            case ValueError() | OSError():
                exit_code = 2
            case _:
                exit_code = 1
        logger.error(f"Error in {action}. {e}")
        raise typer.Exit(code=exit_code)

    def _version(self):
        package_name = "multiclass-auc"
        name_splits = package_name.split("-")
        abbreviation = f"{name_splits[0][0]}{name_splits[1][0]}"
        return f"{package_name} ({abbreviation}) version {metadata_version(package_name)}"

    def run_version(self):
        """Run the version command and print the version information."""
        try:
            print(self._version())
        except Exception as e:  # pragma: no cover
            self._fail("getting version", e)

    def run_show_config(self):
        """Run the show_config command and print the configuration as JSON."""
        try:
            print_json(json=AppSettings().model_dump_json())
        except Exception as e:  # pragma: no cover
            self._fail("showing config", e)

    def run_show_schema(self, report: ReportKind):
        """Print the JSON schema of a machine-readable report."""
        try:
            print_json(json=json.dumps(REPORT_MODELS[report].model_json_schema()))
        except Exception as e:  # pragma: no cover
            self._fail("showing schema", e)

    def _load(self, path: str, data_format: DataFormat):
        match data_format:
            case DataFormat.CSV:
                return load_csv(path)
            case DataFormat.LIBSVM:
                return load_libsvm(path)
            case _:  # pragma: no cover
                raise ValueError(f"Unsupported data format: {data_format}")

    def _evaluate(self, data: str, data_format: DataFormat, model_path: str, pairs: int) -> EvalReport:
        ds = self._load(data, data_format)
        model = LinearSoftmaxModel.load(model_path)
        if model.n_classes != ds.n_classes:
            raise ShapeMismatchError(f"The model scores {model.n_classes} classes, the data has {ds.n_classes}.")
        idx = build_index(ds)
        F = score(model, ds.features)
        P = pair_auc_all(F, idx)
        xi, chi = imbalance_factors(idx)
        return EvalReport(
            n_samples=ds.n_samples,
            n_classes=ds.n_classes,
            mauc=mauc_ovo(P),
            mauc_ova=mauc_ova(P, idx.proportions),
            xi=xi,
            chi=chi,
            pairs=pair_report(F, idx, pairs),
        )

    def run_eval(self, data: str, data_format: DataFormat, model_path: str, pairs: int, as_json: bool):
        """Evaluate a saved model on a dataset."""
        try:
            report = self._evaluate(data, data_format, model_path, pairs)
            if as_json:
                print_json(json=report.model_dump_json())
            else:
                print(
                    f"N={report.n_samples} N_C={report.n_classes} MAUC={report.mauc:.6f} "
                    f"MAUC-ova={report.mauc_ova:.6f} xi={report.xi:.4f} chi={report.chi:.4f}"
                )
                table = Table(title=f"{len(report.pairs)} least frequent class pairs")
                for column in ("i", "j", "rho_i rho_j", "AUC_i|j"):
                    table.add_column(column, justify="right")
                for row in report.pairs:
                    table.add_row(str(row.i), str(row.j), f"{row.freq:.6f}", f"{row.auc:.6f}")
                print(table)
        except Exception as e:
            self._fail("evaluating model", e)

    def run_verify(self, loss: str, trials: int, max_n: int, seed: int, as_json: bool):
        """Check an accelerated kernel against the brute-force reference."""
        try:
            report = run_verify(SurrogateSpec.parse(loss), trials=trials, max_n=max_n, seed=seed, show_progress=True)
            if as_json:
                print_json(json=report.model_dump_json())
            else:
                print(
                    f"{report.loss}: {'PASS' if report.passed else 'FAIL'} over {report.trials} trials, "
                    f"worst loss deviation {report.worst_loss_dev:.3e}, "
                    f"worst gradient deviation {report.worst_grad_dev:.3e}"
                )
            if not report.passed:
                raise VerificationError(
                    f"Kernel mismatch; replay with --seed {report.failing_seed} --trials 1.", seed=report.failing_seed
                )
        except Exception as e:
            self._fail("verifying kernel", e)

    def run_bench(
        self,
        loss: str,
        sizes: str,
        nc: int,
        d: int,
        rho: str | None,
        trials: int,
        seed: int,
        out: str | None,
        grad: bool,
    ):
        """Time the brute-force and accelerated risk evaluations."""
        try:
            proportions = _parse_list(rho, float, "rho") if rho else list(bench.DEFAULT_RHO)
            if rho is None and nc != len(proportions):
                proportions = [1.0 / nc] * nc
            if len(proportions) != nc:
                raise InvalidArgumentError(f"--rho lists {len(proportions)} proportions for --nc {nc} classes.")
            report = bench.run_bench(
                SurrogateSpec.parse(loss),
                sizes=_parse_list(sizes, int, "sizes"),
                rho=proportions,
                n_features=d,
                trials=trials,
                seed=seed,
                grad=grad,
                show_progress=True,
            )
            table = Table(title=f"Acceleration of {loss}{' with gradient' if grad else ''}")
            for column in ("N", "naive ms", "fast ms", "ratio", "pair work ratio"):
                table.add_column(column, justify="right")
            for row in report.rows:
                table.add_row(
                    str(row.N),
                    f"{row.naive_ms:.3f}",
                    f"{row.fast_ms:.3f}",
                    f"{row.ratio:.1f}",
                    f"{row.pair_work_ratio:.1f}",
                )
            print(table)
            if out:
                bench.write_report(report, out)
        except Exception as e:
            self._fail("benchmarking", e)

    def run_train(
        self,
        data: str,
        data_format: DataFormat,
        loss: str,
        cfg: dict,
        out: str | None,
        trace_path: str | None,
        baseline: Baseline | None,
    ):
        """Train a linear-softmax model and report its test MAUC."""
        try:
            ds = self._load(data, data_format)
            config = TrainConfig.model_validate(cfg)
            ds_train, ds_valid, ds_test = split_stratified(ds, (0.8, 0.1, 0.1), seed=config.seed)
            if baseline == Baseline.CE:
                model, trace = train_ce_baseline(ds_train, ds_valid, config, show_progress=True)
            else:
                model, trace = train(ds_train, ds_valid, SurrogateSpec.parse(loss), config, show_progress=True)
            test_mauc = mauc_ovo(pair_auc_all(score(model, ds_test.features), build_index(ds_test)))
            best = trace.best_epoch()
            if best is not None:
                print(f"Best validation MAUC {best.val_mauc:.6f} at epoch {best.epoch}")
            print(f"Test MAUC: {test_mauc:.6f}")
            if out:
                model.save(out)
            if trace_path:
                with open(trace_path, "w") as f:
                    f.write(trace.to_csv())
                logger.info(f"Wrote training trace to {trace_path}")
        except Exception as e:
            self._fail("training", e)

    def run_synth(
        self,
        kind: SynthKind,
        n: int,
        d: int,
        rho: str,
        sep: float,
        seed: int,
        out: str,
    ):
        """Generate a synthetic dataset CSV."""
        try:
            proportions = _parse_list(rho, float, "rho")
            match kind:
                case SynthKind.UNIFORM:
                    ds = synth_uniform(n, d, proportions, seed)
                case SynthKind.BLOBS:
                    ds = synth_blobs(n, d, proportions, sep, seed)
                case _:  # pragma: no cover
                    raise ValueError(f"Unsupported synthetic dataset kind: {kind}")
            write_csv(ds, out)
        except Exception as e:
            self._fail("synthesizing data", e)


@app.command()
def version():
    """Shows the app version of the multiclass AUC toolkit."""
    app_handler = MultiClassAucCLIApp()
    app_handler.run_version()


@app.command()
def show_config():
    """Shows the effective configuration as JSON."""
    app_handler = MultiClassAucCLIApp()
    app_handler.run_show_config()


@app.command()
def show_schema(
    report: Annotated[ReportKind, typer.Argument(help="The report whose JSON schema to print.")],
):
    """Shows the JSON schema that a machine-readable report validates against."""
    app_handler = MultiClassAucCLIApp()
    app_handler.run_show_schema(report)


@app.command("eval")
def evaluate(
    data: Annotated[str, typer.Option("--data", help="Path of the dataset file.")],
    model: Annotated[str, typer.Option("--model", help="Path of a model file written by the train command.")],
    data_format: Annotated[DataFormat, typer.Option("--format", help="Format of the dataset file.")] = DataFormat.CSV,
    pairs: Annotated[int, typer.Option("--pairs", min=1, help="Number of least frequent class pairs to list.")] = 3,
    as_json: Annotated[bool, typer.Option("--json", help="Print the report as JSON.")] = False,
):
    """Evaluates MAUC, its prior-weighted variant and the imbalance factors of a model on a dataset."""
    app_handler = MultiClassAucCLIApp()
    app_handler.run_eval(data, data_format, model, pairs, as_json)


@app.command()
def verify(
    loss: Annotated[str, typer.Option("--loss", help="The loss, e.g. exp:alpha=1 or bernstein:base=logit,K=12.")],
    trials: Annotated[int, typer.Option("--trials", min=1, help="Number of random instances.")] = 50,
    max_n: Annotated[int, typer.Option("--max-n", min=8, help="Largest sample count of an instance.")] = 512,
    seed: Annotated[int, typer.Option("--seed", help="Seed of the first instance.")] = 0,
    as_json: Annotated[bool, typer.Option("--json", help="Print the report as JSON.")] = False,
):
    """Checks an accelerated kernel against the brute-force risk and gradient."""
    app_handler = MultiClassAucCLIApp()
    app_handler.run_verify(loss, trials, max_n, seed, as_json)


@app.command("bench")
def benchmark(
    loss: Annotated[str, typer.Option("--loss", help="The loss, e.g. exp or hinge:alpha=0.5.")] = "exp",
    sizes: Annotated[
        str, typer.Option("--sizes", help="Comma-separated, strictly ascending sample sizes.")
    ] = ",".join(str(n) for n in bench.DEFAULT_SIZES),
    nc: Annotated[int, typer.Option("--nc", min=2, help="Number of classes.")] = len(bench.DEFAULT_RHO),
    d: Annotated[int, typer.Option("--d", min=1, help="Feature dimension.")] = bench.DEFAULT_N_FEATURES,
    rho: Annotated[
        str | None,
        typer.Option("--rho", help="Comma-separated class proportions; defaults to 0.2,0.1,0.2,0.4,0.1 for 5 classes."),
    ] = None,
    trials: Annotated[int, typer.Option("--trials", min=1, help="Timed runs per path; the median is reported.")] = 5,
    seed: Annotated[int, typer.Option("--seed", help="Seed of the synthetic data and model.")] = 0,
    out: Annotated[str | None, typer.Option("--out", help="Write the report here, JSON for .json, else CSV.")] = None,
    grad: Annotated[bool, typer.Option("--grad", help="Time the gradient together with the loss.")] = False,
):
    """Measures the acceleration ratio of the fast kernels over the brute-force evaluation."""
    app_handler = MultiClassAucCLIApp()
    app_handler.run_bench(loss, sizes, nc, d, rho, trials, seed, out, grad)


@app.command("train")
def train_model(
    data: Annotated[str, typer.Option("--data", help="Path of the dataset file.")],
    data_format: Annotated[DataFormat, typer.Option("--format", help="Format of the dataset file.")] = DataFormat.CSV,
    loss: Annotated[str, typer.Option("--loss", help="The surrogate loss to minimize.")] = "exp",
    lr: Annotated[float, typer.Option("--lr", help="Initial learning rate.")] = 0.5,
    momentum: Annotated[float, typer.Option("--momentum", help="Nesterov momentum in [0, 1).")] = 0.9,
    wd: Annotated[float, typer.Option("--wd", help="Weight decay on ||W||_F^2.")] = 0.0,
    epochs: Annotated[int, typer.Option("--epochs", min=1, help="Number of epochs.")] = 200,
    batch: Annotated[str, typer.Option("--batch", help="'full' or a mini-batch size.")] = "full",
    lr_decay: Annotated[float, typer.Option("--lr-decay", help="Learning-rate factor per epoch, in (0, 1].")] = 1.0,
    eval_every: Annotated[int, typer.Option("--eval-every", min=1, help="Epochs between validation MAUCs.")] = 1,
    seed: Annotated[int, typer.Option("--seed", help="Seed of the split, the initialization and the batches.")] = 0,
    out: Annotated[str | None, typer.Option("--out", help="Path of the model file to write.")] = None,
    trace: Annotated[str | None, typer.Option("--trace", help="Path of the CSV training trace to write.")] = None,
    baseline: Annotated[
        Baseline | None, typer.Option("--baseline", help="Train a baseline instead of the pairwise risk.")
    ] = None,
):
    """Trains a linear-softmax model on a stratified 80/10/10 split and prints its test MAUC."""
    app_handler = MultiClassAucCLIApp()
    cfg = {
        "lr": lr,
        "momentum": momentum,
        "weight_decay": wd,
        "epochs": epochs,
        "batch": batch.strip(),
        "lr_decay": lr_decay,
        "seed": seed,
        "eval_every": eval_every,
    }
    app_handler.run_train(data, data_format, loss, cfg, out, trace, baseline)


@app.command()
def synth(
    out: Annotated[str, typer.Option("--out", help="Path of the CSV file to write.")],
    kind: Annotated[SynthKind, typer.Option("--kind", help="The generator.")] = SynthKind.UNIFORM,
    n: Annotated[int, typer.Option("--n", min=2, help="Number of samples.")] = 1000,
    d: Annotated[int, typer.Option("--d", min=1, help="Feature dimension.")] = 10,
    rho: Annotated[str, typer.Option("--rho", help="Comma-separated class proportions.")] = "0.5,0.3,0.2",
    sep: Annotated[float, typer.Option("--sep", help="Distance between blob means.")] = 4.0,
    seed: Annotated[int, typer.Option("--seed", help="Seed of the generator.")] = 0,
):
    """Generates a synthetic dataset as CSV, label first."""
    app_handler = MultiClassAucCLIApp()
    app_handler.run_synth(kind, n, d, rho, sep, seed, out)


def main():
    """Main entry point for the CLI application."""
    # Run the Typer app
    app()  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    main()
