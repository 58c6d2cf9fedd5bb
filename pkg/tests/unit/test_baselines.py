"""Unit tests for the baseline observation models and their particle filter."""

import numpy as np
import pytest

from src.engines.harness.baselines import (
    BaselineLocalizer,
    FullGPModel,
    OfflinePITCModel,
    SoDEvenModel,
    SoDTruncateModel,
    sod_even_indices,
)
from src.engines.localization.belief import Belief
from src.engines.localization.gp_localize import FilterConfig
from src.engines.localization.motion import MotionNoise, OdometryAction, Pose
from src.kernel.gp_core import gp_posterior_batch
from src.kernel.sparse_gp import BlockedDataset, pitc_posterior_batch, sod_posterior


def _fill(model, data):
    for loc, z in zip(data.locations, data.values):
        model.add(loc, z)
    return model


class TestSoDEvenIndices:
    def test_short_history_keeps_everything(self):
        np.testing.assert_array_equal(sod_even_indices(7, 40), np.arange(7))

    def test_even_thinning(self):
        idx = sod_even_indices(100, 40)
        assert idx.size == 40
        assert idx[0] == 0
        assert idx[-1] == (39 * 100) // 40
        assert np.all(np.diff(idx) > 0)


class TestModels:
    """Predictions equal the named estimator on the chosen training data."""

    def test_empty_history_is_prior(self, hyperparams):
        means, variances = SoDTruncateModel(hyperparams).predict_batch([[1.0, 1.0]])
        assert means[0] == pytest.approx(hyperparams.prior_mean)
        assert variances[0] == pytest.approx(hyperparams.prior_variance)

    def test_truncate_uses_most_recent(self, hyperparams, scattered):
        model = _fill(SoDTruncateModel(hyperparams, size=10), scattered)
        training = model.training_set()
        np.testing.assert_array_equal(training.values, scattered.values[-10:])
        g = sod_posterior([4.0, 4.0], scattered.subset(range(15, 25)), hyperparams)
        means, variances = model.predict_batch([[4.0, 4.0]])
        assert means[0] == pytest.approx(g.mean, abs=1e-12)
        assert variances[0] == pytest.approx(g.variance, abs=1e-12)

    def test_even_uses_thinned_history(self, hyperparams, scattered):
        model = _fill(SoDEvenModel(hyperparams, size=8), scattered)
        expected = scattered.subset(sod_even_indices(25, 8))
        np.testing.assert_array_equal(model.training_set().values, expected.values)

    def test_full_gp_matches_batch_posterior(self, hyperparams, scattered, rng):
        model = _fill(FullGPModel(hyperparams), scattered)
        xq = rng.uniform(0.0, 8.0, size=(8, 2))
        means, variances = model.predict_batch(xq)
        ref_means, ref_vars = gp_posterior_batch(xq, scattered, hyperparams)
        np.testing.assert_allclose(means, ref_means, atol=1e-9)
        np.testing.assert_allclose(variances, ref_vars, atol=1e-9)

    def test_offline_pitc_blocks_of_tau(self, hyperparams, support, scattered, rng):
        model = _fill(OfflinePITCModel(hyperparams, support, tau=4), scattered)
        xq = rng.uniform(0.0, 8.0, size=(5, 2))
        ref = pitc_posterior_batch(xq, BlockedDataset.chunked(scattered, 4), support, hyperparams)
        np.testing.assert_allclose(model.predict_batch(xq)[0], ref[0], atol=1e-12)

    def test_full_gp_accepts_noisy_repeated_location(self, hyperparams, scattered, rng):
        model = _fill(FullGPModel(hyperparams), scattered.subset(range(6)))
        model.add(scattered.locations[2], scattered.values[2] + 0.05)
        assert len(model) == 7
        xq = rng.uniform(0.0, 8.0, size=(6, 2))
        means, variances = model.predict_batch(np.vstack([xq, scattered.locations[[2]]]))
        assert np.all(np.isfinite(means))
        assert np.all((variances >= 0.0) & (variances <= hyperparams.prior_variance + 1e-9))

    def test_offline_pitc_accepts_noisy_repeated_location(self, hyperparams, support, scattered, rng):
        model = _fill(OfflinePITCModel(hyperparams, support, tau=3), scattered.subset(range(5)))
        model.add(scattered.locations[0], scattered.values[0])
        means, variances = model.predict_batch(rng.uniform(0.0, 8.0, size=(4, 2)))
        assert np.all(np.isfinite(means))
        assert np.all(variances >= 0.0)

    def test_memory_grows_with_history(self, hyperparams, scattered):
        model = FullGPModel(hyperparams)
        sizes = [_fill(model, scattered.subset([i])).nbytes for i in range(5)]
        assert sizes == sorted(sizes)
        assert sizes[-1] > sizes[0]


class TestBaselineLocalizer:
    def test_history_is_attached_to_estimates(self, hyperparams, rng):
        config = FilterConfig(tau=3, particle_count=20, sample_path_count=1, noise=MotionNoise())
        initial = Belief.gaussian(Pose(x=2.0, y=2.0), sd=0.0, count=20, rng=rng)
        model = SoDTruncateModel(hyperparams)
        localizer = BaselineLocalizer(config, [model], initial, rng)
        u = OdometryAction(rot1=0.0, trans=1.0, rot2=0.0)
        for k in range(3):
            localizer.step(u, [0.1 * k])
        history = model.history
        np.testing.assert_allclose(history.locations, [[3.0, 2.0], [4.0, 2.0], [5.0, 2.0]], atol=1e-12)
        np.testing.assert_allclose(history.values, [0.0, 0.1, 0.2])
        assert localizer.t == 3

    def test_log_likelihood_sums_over_fields(self, hyperparams, rng):
        config = FilterConfig(tau=3, particle_count=5, sample_path_count=1)
        initial = Belief.uniform(np.zeros((5, 3)))
        one = BaselineLocalizer(config, [FullGPModel(hyperparams)], initial, rng)
        two = BaselineLocalizer(config, [FullGPModel(hyperparams), FullGPModel(hyperparams)], initial, rng)
        locations = np.array([[1.0, 1.0], [2.0, 3.0]])
        np.testing.assert_allclose(
            two.log_likelihoods([0.4, 0.4], locations), 2.0 * one.log_likelihoods([0.4], locations)
        )
