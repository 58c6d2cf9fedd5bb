"""Unit tests for the online sparse GP: slices, assimilation, recent buffer, snapshots."""

import logging

import numpy as np
import pytest

from src.kernel import online_sparse_gp as ogp
from src.kernel.errors import BufferProtocolError, InvalidArgumentError
from src.kernel.gp_core import Dataset, cov_matrix, gp_posterior_batch
from src.kernel.linalg import identity_residual
from src.kernel.online_sparse_gp import OnlineGPState, SliceSummary
from src.kernel.sparse_gp import BlockedDataset, SupportSet, fitc_posterior_batch, pitc_posterior_batch


@pytest.fixture
def queries(rng):
    return rng.uniform(0.0, 8.0, size=(15, 2))


class TestInit:
    def test_empty_state_predicts_prior(self, support, hyperparams, queries):
        state = ogp.init(support, hyperparams, tau=5)
        means, variances = state.predict_batch(queries)
        np.testing.assert_allclose(means, hyperparams.prior_mean, atol=1e-12)
        np.testing.assert_allclose(variances, hyperparams.prior_variance, atol=1e-9)
        assert state.buffer_length == 0
        assert state.slices_assimilated == 0

    def test_tau_must_be_positive(self, support, hyperparams):
        with pytest.raises(InvalidArgumentError):
            ogp.init(support, hyperparams, tau=0)


class TestAssimilation:
    """Streaming slices reproduces PITC over the same blocks."""

    def test_streamed_slices_equal_pitc(self, support, hyperparams, scattered, queries):
        data = scattered.subset(range(20))
        state = ogp.stream_observations(ogp.init(support, hyperparams, tau=5), data)
        assert state.slices_assimilated == 4
        assert state.buffer_length == 0
        means, variances = state.predict_batch(queries)
        ref_means, ref_vars = pitc_posterior_batch(
            queries, BlockedDataset.chunked(data, 5), support, hyperparams
        )
        np.testing.assert_allclose(means, ref_means, atol=1e-7)
        np.testing.assert_allclose(variances, ref_vars, atol=1e-7)

    def test_tau_one_equals_fitc(self, support, hyperparams, scattered, queries):
        data = scattered.subset(range(12))
        state = ogp.stream_observations(ogp.init(support, hyperparams, tau=1), data)
        means, variances = state.predict_batch(queries)
        ref_means, ref_vars = fitc_posterior_batch(queries, data, support, hyperparams)
        np.testing.assert_allclose(means, ref_means, atol=1e-7)
        np.testing.assert_allclose(variances, ref_vars, atol=1e-7)

    def test_woodbury_inverse_tracks_direct_inverse(self, support, hyperparams, scattered):
        state = ogp.stream_observations(ogp.init(support, hyperparams, tau=5), scattered.subset(range(25)))
        np.testing.assert_allclose(
            state.sigma_a @ state.sigma_a_inv, np.eye(len(support)), atol=1e-6
        )

    def test_manual_summarize_then_assimilate(self, support, hyperparams, scattered, queries):
        slice_data = scattered.subset(range(5))
        state = ogp.init(support, hyperparams, tau=5)
        summary = ogp.summarize_slice(slice_data, state)
        ogp.assimilate(state, summary)
        ref_means, _ = pitc_posterior_batch(queries, BlockedDataset((slice_data,)), support, hyperparams)
        np.testing.assert_allclose(state.predict_batch(queries)[0], ref_means, atol=1e-8)

    def test_slice_length_must_equal_tau(self, support, hyperparams, scattered):
        state = ogp.init(support, hyperparams, tau=5)
        with pytest.raises(InvalidArgumentError):
            state.summarize_slice(scattered.subset(range(4)))

    def test_summary_size_must_match_support(self, support, hyperparams):
        state = ogp.init(support, hyperparams, tau=2)
        with pytest.raises(InvalidArgumentError):
            state.assimilate(SliceSummary(mu_s=np.zeros(3), sigma_s=np.eye(3)))

    def test_asymmetric_summary_rejected(self):
        with pytest.raises(InvalidArgumentError):
            SliceSummary(mu_s=np.zeros(2), sigma_s=np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_indefinite_summary_rejected(self):
        with pytest.raises(InvalidArgumentError):
            SliceSummary(mu_s=np.zeros(2), sigma_s=np.diag([1.0, -1.0]))

    def test_eigen_root_reproduces_covariance(self, rng):
        w = rng.standard_normal((2, 4))
        summary = SliceSummary(mu_s=np.zeros(4), sigma_s=w.T @ w)
        root = summary.factor_root()
        assert root.shape[0] == 2
        np.testing.assert_allclose(root.T @ root, w.T @ w, atol=1e-10)

    def test_drift_fallback_logs_warning(self, monkeypatch, caplog, support, hyperparams, scattered):
        monkeypatch.setenv("INVERSE_DRIFT_TOL", "-1")
        state = ogp.init(support, hyperparams, tau=5)
        with caplog.at_level(logging.WARNING, logger="src.kernel.online_sparse_gp"):
            ogp.stream_observations(state, scattered.subset(range(5)))
        assert any("refactoring" in r.getMessage() for r in caplog.records)
        np.testing.assert_allclose(
            state.sigma_a @ state.sigma_a_inv, np.eye(len(support)), atol=1e-8
        )

    def test_variance_never_grows_as_slices_arrive(self, support, hyperparams, scattered, queries):
        state = ogp.init(support, hyperparams, tau=5)
        previous = state.predict_batch(queries)[1]
        for start in range(0, 25, 5):
            ogp.stream_observations(state, scattered.subset(range(start, start + 5)))
            variances = state.predict_batch(queries)[1]
            assert np.all(variances <= previous + 1e-10)
            assert np.all(variances >= 0.0)
            assert np.all(variances <= hyperparams.prior_variance + 1e-10)
            previous = variances

    def test_streaming_equals_offline_pitc_on_random_instances(self, hyperparams):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            support = SupportSet(rng.uniform(0.0, 8.0, size=(4, 2)))
            data = Dataset(rng.uniform(0.0, 8.0, size=(15, 2)), rng.standard_normal(15))
            xq = rng.uniform(0.0, 8.0, size=(20, 2))
            state = ogp.stream_observations(ogp.init(support, hyperparams, tau=5), data)
            means, variances = state.predict_batch(xq)
            ref_means, ref_vars = pitc_posterior_batch(xq, BlockedDataset.chunked(data, 5), support, hyperparams)
            np.testing.assert_allclose(means, ref_means, rtol=1e-7, atol=1e-10)
            np.testing.assert_allclose(variances, ref_vars, rtol=1e-7, atol=1e-10)

    @pytest.mark.slow
    def test_inverse_stays_accurate_over_long_stream(self, monkeypatch, support, hyperparams, rng):
        monkeypatch.setenv("INVERSE_DRIFT_TOL", "1e-7")
        state = ogp.init(support, hyperparams, tau=1)
        locations = rng.uniform(0.0, 8.0, size=(500, 2))
        for loc in locations:
            state.push_recent(loc, float(np.sin(loc[0]) + 0.5 * np.cos(loc[1])))
            state.flush_recent()
            assert identity_residual(state.sigma_a, state.sigma_a_inv) <= 1e-7
        assert state.slices_assimilated == 500


class TestRecentBuffer:
    """Exact conditioning on buffered observations."""

    def test_without_slices_buffer_is_exact_gp(self, support, hyperparams, scattered, queries):
        state = ogp.init(support, hyperparams, tau=6)
        recent = scattered.subset(range(4))
        for loc, z in zip(recent.locations, recent.values):
            ogp.push_recent(state, loc, z)
        means, variances = state.predict_with_recent_batch(queries)
        ref_means, ref_vars = gp_posterior_batch(queries, recent, hyperparams)
        np.testing.assert_allclose(means, ref_means, atol=1e-9)
        np.testing.assert_allclose(variances, ref_vars, atol=1e-9)

    def test_buffer_conditions_on_assimilated_summary(self, support, hyperparams, scattered, queries):
        """Gaussian conditioning of the summary's joint predictive on the buffer."""
        state = ogp.stream_observations(ogp.init(support, hyperparams, tau=5), scattered.subset(range(13)))
        assert state.buffer_length == 3
        recent = state.recent

        joint = np.vstack([queries, recent.locations])
        k_js = cov_matrix(joint, support.locations, hyperparams)
        gap = state.sigma_ss_inv - state.sigma_a_inv
        cov = cov_matrix(joint, joint, hyperparams) - k_js @ gap @ k_js.T
        mean = hyperparams.prior_mean + k_js @ state.sigma_a_inv @ state.mu_a
        q = queries.shape[0]
        gain = np.linalg.solve(cov[q:, q:], cov[q:, :q]).T
        ref_means = mean[:q] + gain @ (recent.values - mean[q:])
        ref_vars = np.diag(cov[:q, :q] - gain @ cov[q:, :q])

        means, variances = state.predict_with_recent_batch(queries)
        np.testing.assert_allclose(means, ref_means, atol=1e-8)
        np.testing.assert_allclose(variances, ref_vars, atol=1e-8)

    def test_cached_inverse_matches_direct(self, support, hyperparams, scattered):
        state = ogp.stream_observations(ogp.init(support, hyperparams, tau=6), scattered.subset(range(10)))
        x = state.recent.locations
        k_xs = cov_matrix(x, support.locations, hyperparams)
        gap = state.sigma_ss_inv - state.sigma_a_inv
        cov = cov_matrix(x, x, hyperparams) - k_xs @ gap @ k_xs.T
        np.testing.assert_allclose(state.recent_inverse @ cov, np.eye(4), atol=1e-8)

    def test_empty_buffer_prediction_is_summary_prediction(self, support, hyperparams, queries):
        state = ogp.init(support, hyperparams, tau=3)
        assert state.predict_with_recent(queries[0]) == state.predict(queries[0])

    def test_push_beyond_capacity(self, support, hyperparams, scattered):
        state = ogp.init(support, hyperparams, tau=2)
        state.push_recent(scattered.locations[0], 0.0)
        state.push_recent(scattered.locations[1], 0.0)
        with pytest.raises(BufferProtocolError):
            state.push_recent(scattered.locations[2], 0.0)

    def test_flush_needs_full_buffer(self, support, hyperparams, scattered):
        state = ogp.init(support, hyperparams, tau=3)
        state.push_recent(scattered.locations[0], 0.0)
        with pytest.raises(BufferProtocolError):
            ogp.flush_recent(state)

    def test_flush_assimilates_buffer(self, support, hyperparams, scattered, queries):
        data = scattered.subset(range(3))
        state = ogp.init(support, hyperparams, tau=3)
        for loc, z in zip(data.locations, data.values):
            state.push_recent(loc, z)
        state.flush_recent()
        assert state.buffer_length == 0
        assert state.slices_assimilated == 1
        ref_means, _ = pitc_posterior_batch(queries, BlockedDataset((data,)), support, hyperparams)
        np.testing.assert_allclose(state.predict_batch(queries)[0], ref_means, atol=1e-8)

    def test_noise_free_duplicate_rejected(self, support, noiseless_hyperparams):
        state = ogp.init(support, noiseless_hyperparams, tau=3)
        state.push_recent([0.5, 0.5], 1.0)
        with pytest.raises(InvalidArgumentError):
            state.push_recent([0.5, 0.5], 1.0)

    def test_noisy_duplicate_accepted(self, support, hyperparams):
        state = ogp.init(support, hyperparams, tau=3)
        state.push_recent([0.5, 0.5], 1.0)
        state.push_recent([0.5, 0.5], 1.2)
        assert state.buffer_length == 2

    def test_noisy_duplicate_keeps_predictions_bounded(self, support, hyperparams, queries):
        state = ogp.init(support, hyperparams, tau=3)
        state.push_recent([0.5, 0.5], 1.0)
        state.push_recent([0.5, 0.5], 1.2)
        means, variances = state.predict_with_recent_batch(np.vstack([queries, [[0.5, 0.5]]]))
        assert np.all(np.isfinite(means))
        assert np.all(variances >= 0.0)
        assert np.all(variances <= hyperparams.prior_variance + 1e-9)

    def test_flush_with_noisy_duplicate_equals_pitc(self, support, hyperparams, queries):
        block = Dataset([[0.5, 0.5], [3.0, 3.0], [0.5, 0.5]], [1.0, 0.1, 1.2])
        state = ogp.init(support, hyperparams, tau=3)
        for loc, z in zip(block.locations, block.values):
            state.push_recent(loc, z)
        state.flush_recent()
        means, variances = state.predict_batch(queries)
        ref_means, ref_vars = pitc_posterior_batch(queries, BlockedDataset((block,)), support, hyperparams)
        np.testing.assert_allclose(means, ref_means, atol=1e-6)
        np.testing.assert_allclose(variances, ref_vars, atol=1e-6)

    def test_interleaved_assimilation_matches_assimilate_first(self, support, hyperparams, scattered, queries):
        recent = scattered.subset(range(5))
        summary = ogp.init(support, hyperparams, tau=5).summarize_slice(scattered.subset(range(5, 10)))

        interleaved = ogp.init(support, hyperparams, tau=5)
        for loc, z in zip(recent.locations[:3], recent.values[:3]):
            interleaved.push_recent(loc, z)
        interleaved.assimilate(summary)
        for loc, z in zip(recent.locations[3:], recent.values[3:]):
            interleaved.push_recent(loc, z)

        ordered = ogp.init(support, hyperparams, tau=5).assimilate(summary)
        for loc, z in zip(recent.locations, recent.values):
            ordered.push_recent(loc, z)

        for got, want in zip(interleaved.predict_with_recent_batch(queries), ordered.predict_with_recent_batch(queries)):
            np.testing.assert_allclose(got, want, atol=1e-9)
        np.testing.assert_allclose(interleaved.recent_inverse, ordered.recent_inverse, rtol=1e-8, atol=1e-9)
        interleaved.flush_recent()
        ordered.flush_recent()
        for got, want in zip(interleaved.predict_batch(queries), ordered.predict_batch(queries)):
            np.testing.assert_allclose(got, want, atol=1e-9)

    def test_copy_is_independent(self, support, hyperparams, scattered):
        state = ogp.init(support, hyperparams, tau=3)
        twin = state.copy()
        twin.push_recent(scattered.locations[0], 1.0)
        assert state.buffer_length == 0
        assert twin.buffer_length == 1


class TestSnapshot:
    """Constant-size binary state."""

    def test_size_is_constant(self, support, hyperparams, scattered):
        state = ogp.init(support, hyperparams, tau=4)
        sizes = set()
        for loc, z in zip(scattered.locations[:11], scattered.values[:11]):
            state.push_recent(loc, z)
            if state.buffer_length == state.tau:
                state.flush_recent()
            sizes.add(len(state.to_bytes()))
        assert sizes == {state.serialized_size()}

    def test_resume_is_bit_exact(self, support, hyperparams, scattered, queries):
        state = ogp.stream_observations(ogp.init(support, hyperparams, tau=4), scattered.subset(range(10)))
        resumed = OnlineGPState.from_bytes(state.to_bytes())
        np.testing.assert_array_equal(
            resumed.predict_with_recent_batch(queries)[0], state.predict_with_recent_batch(queries)[0]
        )
        tail = scattered.subset(range(10, 17))
        ogp.stream_observations(state, tail)
        ogp.stream_observations(resumed, tail)
        assert resumed.to_bytes() == state.to_bytes()

    def test_bad_magic(self, support, hyperparams):
        data = bytearray(ogp.init(support, hyperparams, tau=2).to_bytes())
        data[:4] = b"XXXX"
        with pytest.raises(InvalidArgumentError):
            OnlineGPState.from_bytes(bytes(data))

    def test_truncated(self, support, hyperparams):
        data = ogp.init(support, hyperparams, tau=2).to_bytes()
        with pytest.raises(InvalidArgumentError):
            OnlineGPState.from_bytes(data[:-8])
