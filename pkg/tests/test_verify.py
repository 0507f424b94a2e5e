import logging

import numpy as np
import pytest

from multiclass_auc import EnvVar, verify
from multiclass_auc.data.data_models import FastRiskOutput, RiskValue, SurrogateKind, SurrogateSpec
from multiclass_auc.errors import InvalidArgumentError
from multiclass_auc.verify import MIN_SAMPLES, deviations, random_instance, run_verify


class TestVerify:
    """Class to group tests related to the kernel equivalence suite."""

    @pytest.mark.parametrize(
        "text",
        ["exp:alpha=1", "hinge:alpha=1", "squared:alpha=1", "logit:alpha=1", "bernstein:base=qhinge,alpha=1,q=3,K=10"],
    )
    def test_kernels_pass(self, text):
        """Test that every kernel passes against the brute-force sums."""
        report = run_verify(SurrogateSpec.parse(text), trials=8, max_n=128, seed=5)
        assert report.passed
        assert report.failing_seed is None
        assert report.trials == 8
        assert report.loss == text
        assert report.worst_loss_dev <= verify.LOSS_TOLERANCE
        assert report.worst_grad_dev <= verify.GRAD_TOLERANCE

    def test_corrupted_kernel(self, monkeypatch, caplog):
        """Test that a disagreeing kernel fails on the first trial and reports its seed."""

        def corrupted(F, idx, spec, want_grad=False, counters=None, force_naive=False):
            return FastRiskOutput(loss=RiskValue(value=1e3), grad=np.zeros_like(F))

        monkeypatch.setattr(verify, "dispatch_fast", corrupted)
        with caplog.at_level(logging.ERROR):
            report = run_verify(SurrogateSpec(kind=SurrogateKind.EXP), trials=5, max_n=32, seed=42)
        assert not report.passed
        assert report.failing_seed == 42
        assert "Seed 42" in caplog.text

    def test_deviations(self):
        """Test that deviations of a correct kernel are within tolerance."""
        F, idx = random_instance(np.random.default_rng(3), 64)
        loss_dev, grad_dev, ok = deviations(F, idx, SurrogateSpec(kind=SurrogateKind.SQUARED))
        assert ok
        assert 0.0 <= loss_dev <= verify.LOSS_TOLERANCE
        assert 0.0 <= grad_dev <= verify.GRAD_TOLERANCE

    def test_random_instance(self):
        """Test sizes, class coverage and score rows of random instances."""
        for seed in range(30):
            F, idx = random_instance(np.random.default_rng(seed), 40)
            assert max(MIN_SAMPLES, idx.n_classes) <= idx.n_samples <= 40
            assert 2 <= idx.n_classes <= 7
            assert np.all(idx.counts > 0)
            assert F.shape == (idx.n_samples, idx.n_classes)
            np.testing.assert_allclose(F.sum(axis=1), 1.0)
        first = random_instance(np.random.default_rng(9), 40)
        second = random_instance(np.random.default_rng(9), 40)
        assert np.array_equal(first[0], second[0])

    @pytest.mark.parametrize(
        "kwargs",
        [{"trials": 0}, {"max_n": MIN_SAMPLES - 1}, {"max_n": EnvVar.MAUC_NAIVE_MAX_N + 1}],
    )
    def test_argument_errors(self, kwargs):
        """Test that trial counts and sizes are checked."""
        with pytest.raises(InvalidArgumentError):
            run_verify(SurrogateSpec(kind=SurrogateKind.EXP), **kwargs)
