"""Replay generators: fitting, sampling, signatures, persistence."""

import numpy as np
import pytest

from genreplay.numerics import Rng
from genreplay.replay import (
    GeneratorPair,
    Signature,
    fit_generator,
    load_pair,
    sample_replay,
    save_pair,
    signature_similarity,
)

DIM = 5


def zero_sig(dim=DIM):
    return Signature(np.zeros(dim), 0.0)


class TestSignature:
    def test_negative_strength_raises(self):
        with pytest.raises(ValueError, match="strength"):
            Signature(np.ones(2), -1.0)

    def test_non_finite_vector_raises(self):
        with pytest.raises(ValueError, match="finite"):
            Signature(np.array([np.inf, 0.0]), 1.0)

    def test_similarity_values(self):
        e0 = Signature(np.array([1.0, 0.0]), 1.0)
        e1 = Signature(np.array([0.0, 1.0]), 1.0)
        diag = Signature(np.array([1.0, 1.0]), 2.0)
        assert signature_similarity(e0, e1) == pytest.approx(0.0)
        assert signature_similarity(e0, e0) == pytest.approx(1.0)
        assert signature_similarity(e0, diag) == pytest.approx(1.0 / np.sqrt(2.0))

    def test_zero_strength_similarity_is_zero(self):
        e0 = Signature(np.array([1.0, 0.0]), 1.0)
        assert signature_similarity(e0, Signature(np.array([1.0, 0.0]), 0.0)) == 0.0

    def test_dim_mismatch_raises(self):
        with pytest.raises(ValueError, match="dimensions"):
            signature_similarity(Signature(np.ones(2), 1.0), Signature(np.ones(3), 1.0))


class TestGaussianFit:
    def test_mean_and_variance_recovered(self):
        rng = Rng(11)
        true_mean = np.array([1.0, -2.0, 0.5, 3.0, 0.0])
        x = true_mean + 0.7 * rng.fork("x").normal(size=(10000, DIM))
        g = fit_generator(x, "gaussian", 1, zero_sig(), rng.fork("fit"))
        assert np.all(np.abs(g.means[0] - true_mean) < 0.05)
        assert np.all(np.abs(g.variances[0] - 0.49) < 0.05)

    def test_variance_floor(self):
        x = np.tile([1.0, 2.0, 3.0, 4.0, 5.0], (10, 1))
        g = fit_generator(x, "gaussian", 1, zero_sig(), Rng(0))
        assert np.all(g.variances >= 1e-6)

    def test_too_few_samples_raise(self):
        with pytest.raises(ValueError, match="n_components"):
            fit_generator(np.empty((0, DIM)), "gaussian", 1, zero_sig(), Rng(0))

    def test_unknown_kind_raises(self):
        with pytest.raises(ValueError, match="kind"):
            fit_generator(np.zeros((4, DIM)), "vae", 1, zero_sig(), Rng(0))


class TestGmmFit:
    def _two_cluster_data(self, rng, n=2000):
        a = np.array([3.0, 0.0, 0.0, 0.0, 0.0]) + 0.3 * rng.fork("a").normal(size=(n, DIM))
        b = np.array([-3.0, 0.0, 0.0, 0.0, 0.0]) + 0.3 * rng.fork("b").normal(size=(n, DIM))
        return np.vstack([a, b])

    def test_recovers_clusters(self):
        rng = Rng(23)
        x = self._two_cluster_data(rng)
        g = fit_generator(x, "gmm", 2, zero_sig(), rng.fork("fit"))
        firsts = sorted(g.means[:, 0])
        assert firsts[0] == pytest.approx(-3.0, abs=0.1)
        assert firsts[1] == pytest.approx(3.0, abs=0.1)
        assert np.all(np.abs(g.weights - 0.5) < 0.05)

    def test_loglik_monotone_nondecreasing(self):
        rng = Rng(29)
        x = self._two_cluster_data(rng, n=500)
        g = fit_generator(x, "gmm", 2, zero_sig(), rng.fork("fit"))
        trace = np.array(g.loglik_trace)
        assert trace.size >= 2
        assert np.all(np.diff(trace) >= -1e-7 * (np.abs(trace[:-1]) + 1.0))


class TestSampling:
    def _fit(self, seed=31):
        rng = Rng(seed)
        x = rng.fork("x").normal(size=(500, DIM))
        return x, rng

    def test_signature_shift_moves_mean(self):
        x, rng = self._fit()
        direction = np.zeros(DIM)
        direction[2] = 1.0
        g = fit_generator(x, "gaussian", 1, Signature(direction, 1.0), rng.fork("fit"))
        draws = g.sample(20000, rng.fork("draw"))
        shift = draws.mean(axis=0)[2] - g.means[0][2]
        assert shift == pytest.approx(1.0, abs=0.05)

    def test_zero_strength_no_shift(self):
        x, rng = self._fit(37)
        g = fit_generator(x, "gaussian", 1, zero_sig(), rng.fork("fit"))
        draws = g.sample(20000, rng.fork("draw"))
        assert np.all(np.abs(draws.mean(axis=0) - g.means[0]) < 0.05)

    def test_sample_zero_returns_empty(self):
        x, rng = self._fit(41)
        g = fit_generator(x, "gaussian", 1, zero_sig(), rng.fork("fit"))
        assert g.sample(0, rng.fork("draw")).shape == (0, DIM)

    def test_sampling_deterministic(self):
        x, rng = self._fit(43)
        g = fit_generator(x, "gaussian", 1, zero_sig(), rng.fork("fit"))
        a = g.sample(10, Rng(1).fork("d"))
        b = g.sample(10, Rng(1).fork("d"))
        assert np.array_equal(a, b)


class TestPair:
    def _pair(self, seed=47, strength=1.0):
        rng = Rng(seed)
        sig = Signature(np.eye(DIM)[0], strength)
        reals = rng.fork("r").normal(size=(100, DIM))
        fakes = 2.0 + rng.fork("f").normal(size=(100, DIM))
        g_real = fit_generator(reals, "gaussian", 1, sig, rng.fork("gr"))
        g_fake = fit_generator(fakes, "gaussian", 1, sig, rng.fork("gf"))
        return GeneratorPair(0, g_real, g_fake)

    def test_mismatched_signatures_raise(self):
        rng = Rng(53)
        x = rng.fork("x").normal(size=(50, DIM))
        a = fit_generator(x, "gaussian", 1, Signature(np.eye(DIM)[0], 1.0), rng.fork("a"))
        b = fit_generator(x, "gaussian", 1, Signature(np.eye(DIM)[1], 1.0), rng.fork("b"))
        with pytest.raises(ValueError, match="signature"):
            GeneratorPair(0, a, b)

    def test_sample_replay_labels_and_origins(self):
        out = sample_replay(self._pair(), 3, 4, Rng(2))
        assert len(out) == 7
        assert [s.origin for s in out] == ["gen_real"] * 3 + ["gen_fake"] * 4
        assert [s.label for s in out] == [0] * 3 + [1] * 4
        assert all(s.task_index == 0 for s in out)

    def test_negative_counts_raise(self):
        with pytest.raises(ValueError, match="counts"):
            sample_replay(self._pair(), -1, 0, Rng(0))

    def test_save_load_roundtrip(self, tmp_path):
        pair = self._pair(59)
        path = str(tmp_path / "pair.txt")
        save_pair(pair, path)
        loaded = load_pair(path)
        assert loaded.task_index == 0
        for orig, back in ((pair.g_real, loaded.g_real), (pair.g_fake, loaded.g_fake)):
            assert np.array_equal(orig.means, back.means)
            assert np.array_equal(orig.variances, back.variances)
            assert np.array_equal(orig.weights, back.weights)
            assert np.array_equal(orig.signature.vector, back.signature.vector)
            assert orig.signature.strength == back.signature.strength
        a = sample_replay(pair, 5, 5, Rng(3))
        b = sample_replay(loaded, 5, 5, Rng(3))
        assert all(np.array_equal(x.features, y.features) for x, y in zip(a, b))

    def test_load_bad_header_raises(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("junk\n")
        with pytest.raises(ValueError, match="header"):
            load_pair(str(path))
