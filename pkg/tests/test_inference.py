import numpy as np
import pytest

from facsparse.errors import DimensionMismatch, NonFiniteObjective
from facsparse.inference import InferenceConfig, SparseCode, infer, objective, top_k
from oracles import brute_force_top_k, central_difference_gradient, scalar_cauchy_minimizer


def orthonormal_rows(rng, m, k):
    mat = rng.standard_normal((k, m))
    q, _ = np.linalg.qr(mat)
    return q[:, :m].T


class TestConfig:
    def test_defaults(self):
        cfg = InferenceConfig()
        assert cfg.max_evals == 200 and cfg.noise_scale == 1.0

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            InferenceConfig(noise_scale=0.0)
        with pytest.raises(ValueError):
            InferenceConfig(max_evals=0)


class TestObjective:
    def test_zero_coefficients(self):
        rng = np.random.default_rng(0)
        W = orthonormal_rows(rng, 3, 16)
        z = rng.standard_normal(16)
        cfg = InferenceConfig()
        value, grad = objective(z, W, np.zeros(3), cfg)
        assert value == pytest.approx(float(z @ z) / cfg.noise_scale ** 2)
        np.testing.assert_allclose(grad, -2.0 * (W @ z) / cfg.noise_scale ** 2)

    def test_zero_everything(self):
        W = np.eye(4)
        value, grad = objective(np.zeros(4), W, np.zeros(4), InferenceConfig())
        assert value == 0.0
        np.testing.assert_array_equal(grad, np.zeros(4))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            objective(np.zeros(5), np.eye(4), np.zeros(4), InferenceConfig())

    @pytest.mark.parametrize("seed", range(20))
    def test_gradient_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 17))
        k = int(rng.integers(m, 65))
        W = rng.standard_normal((m, k))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        z = rng.standard_normal(k)
        x = rng.standard_normal(m)
        cfg = InferenceConfig(noise_scale=0.7, sparsity_weight=0.3, cauchy_scale=0.2)
        _, grad = objective(z, W, x, cfg)
        fd = central_difference_gradient(lambda v: objective(z, W, v, cfg)[0], x, h=1e-6)
        rel = np.linalg.norm(fd - grad) / np.linalg.norm(fd)
        assert rel < 1e-6


class TestInfer:
    def test_zero_patch_stays_at_zero(self):
        rng = np.random.default_rng(1)
        W = orthonormal_rows(rng, 4, 25)
        code = infer(np.zeros(25), W)
        np.testing.assert_array_equal(code.coeffs, np.zeros(4))
        assert code.objective == 0.0

    def test_single_atom_matches_scalar_oracle(self):
        # m=1: optimum solves 2(x-a)/eps^2 + lam*2x/(r^2+x^2) = 0
        w = np.zeros(16)
        w[3] = 1.0
        a, cfg = 2.0, InferenceConfig(noise_scale=1.0, sparsity_weight=0.1, cauchy_scale=0.1)
        code = infer(a * w, w[None, :], cfg)
        expected, _ = scalar_cauchy_minimizer(a, cfg.noise_scale, cfg.sparsity_weight,
                                              cfg.cauchy_scale)
        assert code.coeffs[0] == pytest.approx(expected, abs=1e-6)

    def test_orthonormal_decoupling(self):
        # orthonormal rows decouple the problem into independent scalars
        rng = np.random.default_rng(2)
        W = orthonormal_rows(rng, 2, 36)
        cfg = InferenceConfig()
        z = 2.0 * W[0] + 0.5 * W[1]
        code = infer(z, W, cfg)
        for i, a in enumerate((2.0, 0.5)):
            expected, _ = scalar_cauchy_minimizer(a, cfg.noise_scale,
                                                  cfg.sparsity_weight, cfg.cauchy_scale)
            assert code.coeffs[i] == pytest.approx(expected, abs=1e-6)

    @pytest.mark.parametrize("seed", range(8))
    def test_orthonormal_decoupling_random(self, seed):
        rng = np.random.default_rng(100 + seed)
        m = int(rng.integers(2, 5))
        W = orthonormal_rows(rng, m, 49)
        amps = rng.uniform(-3.0, 3.0, size=m)
        cfg = InferenceConfig(noise_scale=0.8, sparsity_weight=0.2, cauchy_scale=0.15)
        code = infer(W.T @ amps, W, cfg)
        for i in range(m):
            expected, _ = scalar_cauchy_minimizer(amps[i], cfg.noise_scale,
                                                  cfg.sparsity_weight, cfg.cauchy_scale)
            assert code.coeffs[i] == pytest.approx(expected, abs=1e-6)

    def test_monotone_descent_and_eval_cap(self):
        rng = np.random.default_rng(3)
        for trial in range(20):
            m, k = 24, 64
            W = rng.standard_normal((m, k))
            W /= np.linalg.norm(W, axis=1, keepdims=True)
            z = rng.standard_normal(k)
            x0 = rng.standard_normal(m)
            cfg = InferenceConfig(max_evals=int(rng.integers(1, 60)))
            f0, _ = objective(z, W, x0, cfg)
            code = infer(z, W, cfg, x0=x0)
            assert code.objective <= f0 + 1e-12
            assert code.n_evals <= cfg.max_evals

    def test_tight_eval_budget_returns_start(self):
        rng = np.random.default_rng(4)
        W = orthonormal_rows(rng, 4, 16)
        z = rng.standard_normal(16)
        code = infer(z, W, InferenceConfig(max_evals=1))
        assert code.n_evals == 1
        np.testing.assert_array_equal(code.coeffs, np.zeros(4))

    def test_non_finite_input_raises(self):
        W = np.eye(4)
        z = np.full(4, np.nan)
        with pytest.raises(NonFiniteObjective):
            infer(z, W)

    def test_warns_on_non_unit_rows(self):
        rng = np.random.default_rng(5)
        W = 2.0 * orthonormal_rows(rng, 2, 9)
        with pytest.warns(RuntimeWarning):
            infer(rng.standard_normal(9), W)


class TestTopK:
    def test_k_equals_m_unchanged(self):
        code = SparseCode(np.array([1.0, -2.0, 0.5]), 0.0, 1)
        np.testing.assert_array_equal(top_k(code, 3).coeffs, code.coeffs)

    def test_magnitude_order(self):
        code = SparseCode(np.array([3.0, -5.0, 1.0]), 0.0, 1)
        np.testing.assert_array_equal(top_k(code, 2).coeffs, [3.0, -5.0, 0.0])

    def test_ties_break_to_lower_index(self):
        code = SparseCode(np.array([1.0, -1.0, 1.0]), 0.0, 1)
        np.testing.assert_array_equal(top_k(code, 2).coeffs, [1.0, -1.0, 0.0])

    def test_rejects_out_of_range_k(self):
        code = SparseCode(np.array([1.0, 2.0]), 0.0, 1)
        with pytest.raises(ValueError):
            top_k(code, 0)
        with pytest.raises(ValueError):
            top_k(code, 3)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_brute_force_oracle(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(32)
        code = SparseCode(x, 0.0, 1)
        for K in (1, 3, 7, 32):
            np.testing.assert_array_equal(top_k(code, K).coeffs,
                                          brute_force_top_k(x, K))
