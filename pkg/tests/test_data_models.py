import numpy as np
import pytest
from pydantic import ValidationError

from multiclass_auc import EnvVar
from multiclass_auc.data.data_models import (
    AppSettings,
    BenchReport,
    BenchRow,
    CustomValidators,
    Dataset,
    EpochRecord,
    HingeIndex,
    OneHot,
    SurrogateKind,
    SurrogateSpec,
    TrainConfig,
    TrainTrace,
)


class TestDataModels:
    """Class to group tests related to data models."""

    def test_app_settings(self):
        """Test that the settings model reflects the environment configuration."""
        settings = AppSettings()
        assert settings.log_level == EnvVar.MAUC_LOG_LEVEL
        assert settings.naive_max_n == EnvVar.MAUC_NAIVE_MAX_N
        assert settings.bernstein_max_degree == EnvVar.MAUC_BERNSTEIN_MAX_DEGREE
        assert AppSettings.model_validate_json(settings.model_dump_json()) == settings

    def test_readonly_arrays(self):
        """Test that validated arrays are converted and frozen."""
        array = CustomValidators.as_readonly_float_array([[1, 2], [3, 4]])
        assert array.dtype == np.float64
        assert not array.flags.writeable
        with pytest.raises(ValueError):
            CustomValidators.as_readonly_float_array([1.0, np.nan])
        assert CustomValidators.as_readonly_int_array([1.0, 2.0]).dtype == np.int64
        with pytest.raises(ValueError):
            CustomValidators.as_readonly_int_array([1.5])

    def test_dataset(self):
        """Test the invariants of the Dataset model."""
        ds = Dataset(features=[[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]], labels=[0, 1, 1], n_classes=2)
        assert (ds.n_samples, ds.n_features) == (3, 2)
        assert ds.class_counts().tolist() == [1, 2]
        subset = ds.subset([2, 0])
        assert subset.labels.tolist() == [1, 0]
        assert subset.features[0].tolist() == [0.5, 0.5]

        invalid = [
            {"features": [[0.0], [1.0]], "labels": [0, 2], "n_classes": 2},  # Label out of range
            {"features": [[0.0], [1.0]], "labels": [1, 1], "n_classes": 2},  # Single class
            {"features": [[0.0]], "labels": [0], "n_classes": 2},  # Single sample
            {"features": [0.0, 1.0], "labels": [0, 1], "n_classes": 2},  # Not a matrix
            {"features": [[0.0], [1.0]], "labels": [0, 1, 1], "n_classes": 2},  # Label count
        ]
        for values in invalid:
            with pytest.raises(ValidationError):
                Dataset(**values)

    def test_one_hot_rows(self):
        """Test that one-hot rows must sum to exactly 1."""
        assert OneHot(columns=[[1.0, 0.0], [0.0, 1.0]]).column(1).tolist() == [0.0, 1.0]
        with pytest.raises(ValidationError):
            OneHot(columns=[[1.0, 1.0], [0.0, 1.0]])

    def test_surrogate_spec_parse(self):
        """Test parsing of the kind:param=value string form."""
        spec = SurrogateSpec.parse("exp:alpha=2")
        assert spec.kind == SurrogateKind.EXP
        assert spec.alpha == 2.0

        spec = SurrogateSpec.parse("bernstein:base=squared,alpha=1,K=10")
        assert spec.kind == SurrogateKind.BERNSTEIN
        assert spec.base == SurrogateKind.SQUARED
        assert spec.bernstein_degree == 10

        spec = SurrogateSpec.parse(" GenHinge:eps=0.1 ")
        assert spec.kind == SurrogateKind.GENHINGE
        assert spec.epsilon == 0.1

        assert SurrogateSpec.parse("qhinge:q=3").q == 3.0
        assert SurrogateSpec.parse("logit").bernstein_degree == EnvVar.MAUC_DEFAULT_BERNSTEIN_DEGREE

    def test_surrogate_spec_str(self):
        """Test that the string form parses back to the same specification."""
        for text in [
            "exp:alpha=2",
            "hinge:alpha=0.5",
            "qhinge:alpha=1,q=3",
            "genhinge:eps=0.2",
            "distweight:eps=0.5",
            "bernstein:base=logit,alpha=1,K=12",
            "zeroone",
        ]:
            spec = SurrogateSpec.parse(text)
            assert str(spec) == text
            assert SurrogateSpec.parse(str(spec)) == spec

    def test_surrogate_spec_invalid(self):
        """Test that out-of-range parameters and malformed strings are rejected."""
        invalid = [
            "nope",
            "exp:alpha=0",
            "exp:alpha",
            "exp:beta=1",
            "qhinge:q=1",
            "genhinge:eps=0.6",
            "distweight:eps=1",
            "bernstein",
            "bernstein:base=zeroone",
            "bernstein:base=bernstein",
            "bernstein:base=genhinge,eps=0.7",
            "exp:base=logit",
            f"bernstein:base=logit,K={EnvVar.MAUC_BERNSTEIN_MAX_DEGREE + 1}",
        ]
        for text in invalid:
            with pytest.raises(ValueError):
                SurrogateSpec.parse(text)

    def test_surrogate_spec_derived(self):
        """Test the base, Bernstein and breakpoint helpers of a specification."""
        logit = SurrogateSpec(kind=SurrogateKind.LOGIT, alpha=2.0)
        approximation = logit.bernstein_of(12)
        assert approximation.kind == SurrogateKind.BERNSTEIN
        assert approximation.base == SurrogateKind.LOGIT
        assert approximation.bernstein_degree == 12
        assert approximation.base_spec() == logit
        assert approximation.bernstein_of() is approximation
        assert approximation.bernstein_of(5).bernstein_degree == 5
        assert logit.base_spec() is logit

        assert SurrogateSpec(kind=SurrogateKind.HINGE, alpha=0.5).breakpoints == (0.5,)
        assert SurrogateSpec(kind=SurrogateKind.GENHINGE, epsilon=0.25).breakpoints == (0.75, 1.25)
        assert SurrogateSpec(kind=SurrogateKind.EXP).breakpoints == ()

    def test_train_config(self):
        """Test the hyper-parameter ranges of TrainConfig."""
        cfg = TrainConfig()
        assert cfg.batch == "full"
        assert TrainConfig(batch="8").batch == 8
        assert TrainConfig(lr=0.0).lr == 0.0
        invalid = [
            {"batch": 0},
            {"batch": "half"},
            {"momentum": 1.0},
            {"lr": -0.1},
            {"lr_decay": 0.0},
            {"lr_decay": 1.5},
            {"epochs": 0},
            {"eval_every": 0},
        ]
        for values in invalid:
            with pytest.raises(ValidationError):
                TrainConfig(**values)

    def test_train_trace(self):
        """Test the trace CSV form, the best epoch and the ordering invariant."""
        trace = TrainTrace(
            records=[
                EpochRecord(epoch=1, risk=0.5, val_mauc=0.8, lr=0.1),
                EpochRecord(epoch=2, risk=0.4, val_mauc=None, lr=0.1),
                EpochRecord(epoch=3, risk=0.3, val_mauc=0.8, lr=0.1),
            ]
        )
        lines = trace.to_csv().splitlines()
        assert lines[0] == "epoch,risk,val_mauc,lr"
        assert lines[2] == "2,0.40000000000000002,,0.10000000000000001"
        # Ties go to the earliest epoch
        assert trace.best_epoch().epoch == 1
        assert TrainTrace().best_epoch() is None

        with pytest.raises(ValidationError):
            TrainTrace(records=[EpochRecord(epoch=2, risk=0.0, lr=0.1), EpochRecord(epoch=2, risk=0.0, lr=0.1)])

    def test_bench_report_csv(self):
        """Test the benchmark CSV header and the quoting of loss strings with commas."""
        row = BenchRow(
            loss="bernstein:base=logit,alpha=1,K=12",
            N=32,
            nc=5,
            d=100,
            trials=5,
            naive_ms=2.0,
            fast_ms=0.5,
            ratio=4.0,
            pair_work_ratio=4.7,
        )
        csv = BenchReport(rows=[row]).to_csv().splitlines()
        assert csv[0] == "loss,N,nc,d,trials,naive_ms,fast_ms,ratio"
        assert csv[1] == '"bernstein:base=logit,alpha=1,K=12",32,5,100,5,2.000000,0.500000,4.000000'
        with pytest.raises(ValidationError):
            BenchRow.model_validate(row.model_dump() | {"ratio": 0.0})

    def test_hinge_index_nesting(self):
        """Test that activation prefixes must be nondecreasing and bounded."""
        HingeIndex(class_id=0, pos_order=[0, 2], neg_order=[1, 3], cut=[1, 2])
        with pytest.raises(ValidationError):
            HingeIndex(class_id=0, pos_order=[0, 2], neg_order=[1, 3], cut=[2, 1])
        with pytest.raises(ValidationError):
            HingeIndex(class_id=0, pos_order=[0, 2], neg_order=[1, 3], cut=[1, 3])
        with pytest.raises(ValidationError):
            HingeIndex(class_id=0, pos_order=[0, 2], neg_order=[1, 3], cut=[1])
