import numpy as np
import pytest

from facsparse.transforms import TransformParams, compose_matrix, warp, warp_adjoint
from oracles import dense_warp_matrix


def random_params(rng, translation=4.0):
    return TransformParams(
        alpha=rng.uniform(-0.4, 0.5),
        beta=rng.uniform(-0.4, 0.5),
        theta=rng.uniform(0.0, 2.0 * np.pi),
        delta=rng.uniform(-translation, translation),
        eta=rng.uniform(-translation, translation),
    )


class TestComposeMatrix:
    def test_identity(self):
        np.testing.assert_array_equal(compose_matrix(TransformParams()), np.eye(3))

    def test_pure_translation(self):
        mat = compose_matrix(TransformParams(delta=2.0, eta=-3.0))
        np.testing.assert_array_equal(mat[:2, :2], np.eye(2))
        np.testing.assert_array_equal(mat[:, 2], [2.0, -3.0, 1.0])

    def test_scale_and_quarter_turn(self):
        # hand product: R(pi/2) @ diag(2, 1) = ((0, -1), (2, 0))
        mat = compose_matrix(TransformParams(alpha=np.log(2.0), theta=np.pi / 2))
        np.testing.assert_allclose(mat[:2, :2], [[0.0, -1.0], [2.0, 0.0]], atol=1e-15)

    def test_matches_three_factor_product(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            p = random_params(rng)
            t = np.array([[1, 0, p.delta], [0, 1, p.eta], [0, 0, 1]], dtype=float)
            r = np.array([
                [np.cos(p.theta), -np.sin(p.theta), 0],
                [np.sin(p.theta), np.cos(p.theta), 0],
                [0, 0, 1],
            ])
            s = np.diag([np.exp(p.alpha), np.exp(p.beta), 1.0])
            np.testing.assert_array_equal(compose_matrix(p), t @ r @ s)

    def test_determinant_is_exp_alpha_plus_beta(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            p = random_params(rng)
            det = np.linalg.det(compose_matrix(p)[:2, :2])
            expected = np.exp(p.alpha + p.beta)
            assert abs(det - expected) <= 1e-12 * expected


class TestWarp:
    def test_identity_is_bit_exact(self):
        rng = np.random.default_rng(2)
        for side in (5, 8, 16, 32):
            patch = rng.standard_normal((side, side))
            np.testing.assert_array_equal(warp(patch, TransformParams()), patch)

    def test_integer_translation_is_bit_exact(self):
        rng = np.random.default_rng(3)
        patch = rng.standard_normal((8, 8))
        shifted = warp(patch, TransformParams(delta=1.0))
        expected = np.zeros_like(patch)
        expected[1:, :] = patch[:-1, :]
        np.testing.assert_array_equal(shifted, expected)

        shifted = warp(patch, TransformParams(eta=-3.0))
        expected = np.zeros_like(patch)
        expected[:, :-3] = patch[:, 3:]
        np.testing.assert_array_equal(shifted, expected)

    def test_quarter_turn_is_exact_array_rotation(self):
        rng = np.random.default_rng(4)
        for side in (5, 7, 9):
            patch = rng.standard_normal((side, side))
            turned = warp(patch, TransformParams(theta=np.pi / 2))
            np.testing.assert_array_equal(turned, np.rot90(patch))
            turned = warp(patch, TransformParams(theta=-np.pi / 2))
            np.testing.assert_array_equal(turned, np.rot90(patch, k=-1))

    def test_matches_dense_impulse_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            p = random_params(rng)
            dense = dense_warp_matrix(p, 8, 8)
            patch = rng.standard_normal((8, 8))
            np.testing.assert_allclose(
                warp(patch, p).ravel(), dense @ patch.ravel(), atol=1e-12
            )

    def test_resampling_to_other_side(self):
        rng = np.random.default_rng(6)
        p = random_params(rng)
        patch = rng.standard_normal((6, 6))
        dense = dense_warp_matrix(p, 6, 10)
        np.testing.assert_allclose(
            warp(patch, p, out_side=10).ravel(), dense @ patch.ravel(), atol=1e-12
        )

    def test_linearity(self):
        rng = np.random.default_rng(7)
        p = random_params(rng)
        a = rng.standard_normal((8, 8))
        b = rng.standard_normal((8, 8))
        lhs = warp(2.5 * a - 1.25 * b, p)
        rhs = 2.5 * warp(a, p) - 1.25 * warp(b, p)
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)

    def test_off_patch_translation_is_zero(self):
        patch = np.ones((8, 8))
        out = warp(patch, TransformParams(delta=16.0, eta=16.0))
        np.testing.assert_array_equal(out, np.zeros((8, 8)))

    def test_rejects_non_square(self):
        from facsparse.errors import DimensionMismatch

        with pytest.raises(DimensionMismatch):
            warp(np.zeros((3, 4)), TransformParams())


class TestWarpAdjoint:
    def test_identity_returns_cotangent(self):
        rng = np.random.default_rng(8)
        cot = rng.standard_normal((8, 8))
        np.testing.assert_array_equal(warp_adjoint(cot, TransformParams()), cot)

    def test_integer_translation_adjoint_is_opposite_shift(self):
        rng = np.random.default_rng(9)
        cot = rng.standard_normal((8, 8))
        adj = warp_adjoint(cot, TransformParams(delta=1.0))
        expected = np.zeros_like(cot)
        expected[:-1, :] = cot[1:, :]
        np.testing.assert_array_equal(adj, expected)

    def test_dot_product_identity(self):
        rng = np.random.default_rng(10)
        for side in (8, 16, 32):
            for _ in range(50):
                p = random_params(rng, translation=side / 2)
                a = rng.standard_normal((side, side))
                b = rng.standard_normal((side, side))
                lhs = float(np.sum(warp(a, p) * b))
                rhs = float(np.sum(a * warp_adjoint(b, p)))
                bound = 1e-10 * np.linalg.norm(a) * np.linalg.norm(b)
                assert abs(lhs - rhs) <= bound

    def test_dot_product_identity_across_sides(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            p = random_params(rng)
            a = rng.standard_normal((6, 6))
            b = rng.standard_normal((11, 11))
            lhs = float(np.sum(warp(a, p, out_side=11) * b))
            rhs = float(np.sum(a * warp_adjoint(b, p, in_side=6)))
            assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(a) * np.linalg.norm(b)

    def test_matches_dense_transpose(self):
        rng = np.random.default_rng(12)
        p = random_params(rng)
        dense = dense_warp_matrix(p, 8, 8)
        cot = rng.standard_normal((8, 8))
        np.testing.assert_allclose(
            warp_adjoint(cot, p).ravel(), dense.T @ cot.ravel(), atol=1e-12
        )
