"""Tests for top-K RMSE curves, reconstruction, and the CSV format."""

import numpy as np
import pytest

from facsparse._rng import substream
from facsparse.data import GaborSpec, SynthSceneConfig, generate_scenes
from facsparse.dictionary import (
    GenericFilter,
    TransformPrior,
    build_factored_dictionary,
)
from facsparse.errors import DimensionMismatch
from facsparse.evaluation import (
    CSV_COLUMNS,
    RmseCurve,
    data_efficiency_sweep,
    per_patch_rmse_sequence,
    read_rmse_csv,
    reconstruct,
    rmse_curve,
    write_rmse_csv,
)
from facsparse.inference import InferenceConfig, SparseCode, infer
from facsparse.learning import TrainConfig
from oracles import naive_reconstruct


def unit_rows(rng, m, k):
    w = rng.standard_normal((m, k))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def code_of(x):
    return SparseCode(coeffs=np.asarray(x, dtype=float), objective=0.0, n_evals=0)


class TestReconstruct:
    def test_zero_code_gives_zero_patch(self):
        w = unit_rows(substream(1, "recon"), 5, 16)
        np.testing.assert_array_equal(reconstruct(w, code_of(np.zeros(5))),
                                      np.zeros((4, 4)))

    def test_unit_code_gives_basis_row(self):
        w = unit_rows(substream(2, "recon"), 5, 16)
        for i in range(5):
            e = np.zeros(5)
            e[i] = 1.0
            np.testing.assert_array_equal(reconstruct(w, code_of(e)),
                                          w[i].reshape(4, 4))

    def test_matches_naive_oracle(self):
        for trial in range(10):
            rng = substream(300 + trial, "recon")
            m, side = int(rng.integers(1, 9)), int(rng.integers(2, 9))
            w = unit_rows(rng, m, side * side)
            x = rng.standard_normal(m)
            got = reconstruct(w, code_of(x))
            want = naive_reconstruct(w, x).reshape(side, side)
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_wrong_code_length(self):
        w = unit_rows(substream(3, "recon"), 5, 16)
        with pytest.raises(DimensionMismatch):
            reconstruct(w, code_of(np.zeros(4)))

    def test_nonsquare_patch_length(self):
        w = unit_rows(substream(4, "recon"), 3, 12)
        with pytest.raises(DimensionMismatch):
            reconstruct(w, code_of(np.zeros(3)))


class TestRmseCurve:
    def test_full_k_reproduces_full_code_rmse(self):
        rng = substream(10, "curve")
        w = unit_rows(rng, 6, 25)
        patches = [rng.standard_normal((5, 5)) for _ in range(4)]
        icfg = InferenceConfig()
        curve = rmse_curve(w, patches, [2, 6], icfg)
        expected = []
        for p in patches:
            z = p.ravel()
            resid = z - w.T @ infer(z, w, icfg).coeffs
            expected.append(np.sqrt(float(resid @ resid) / z.size))
        assert curve.rmse_at(6) == pytest.approx(np.mean(expected), abs=1e-12)

    def test_planted_atom_recovered_at_k1(self):
        """A test patch equal to one basis row reconstructs at K=1.

        The remaining rows are orthogonalized against the planted one so the
        solver has no incentive to spread the code, and the sparsity weight
        is taken small so shrinkage of the surviving coefficient is below
        the tolerance.
        """
        rng = substream(11, "curve")
        atom = rng.standard_normal(16)
        atom /= np.linalg.norm(atom)
        rest = rng.standard_normal((3, 16))
        rest -= np.outer(rest @ atom, atom)
        rest /= np.linalg.norm(rest, axis=1, keepdims=True)
        w = np.vstack([atom, rest])
        icfg = InferenceConfig(sparsity_weight=1e-6)
        curve = rmse_curve(w, [atom.reshape(4, 4)], [1], icfg)
        assert curve.rmse_at(1) <= 1e-3

    def test_threaded_matches_serial(self):
        rng = substream(12, "curve")
        w = unit_rows(rng, 8, 16)
        patches = [rng.standard_normal((4, 4)) for _ in range(6)]
        icfg = InferenceConfig()
        serial = rmse_curve(w, patches, [1, 4, 8], icfg, threads=1)
        threaded = rmse_curve(w, patches, [1, 4, 8], icfg, threads=3)
        assert serial.points == threaded.points

    def test_model_label_inferred(self):
        rng = substream(13, "curve")
        w = unit_rows(rng, 4, 16)
        patch = [rng.standard_normal((4, 4))]
        assert rmse_curve(w, patch, [4]).model == "baseline"
        f = GenericFilter.from_array(rng.standard_normal((4, 4)))
        prior = TransformPrior(alpha_range=(-0.1, 0.1), beta_range=(-0.1, 0.1),
                               theta_range=(0.0, 6.28), delta_range=(-1.0, 1.0),
                               eta_range=(-1.0, 1.0), seed=5)
        d = build_factored_dictionary(f, prior, 4, 4)
        assert rmse_curve(d, patch, [4]).model == "factored"
        assert rmse_curve(w, patch, [4], model="other").model == "other"

    @pytest.mark.parametrize("Ks", [[0, 2], [2, 9], [4, 2], [2, 2, 4]])
    def test_rejects_bad_ks(self, Ks):
        rng = substream(14, "curve")
        w = unit_rows(rng, 8, 16)
        with pytest.raises(ValueError):
            rmse_curve(w, [rng.standard_normal((4, 4))], Ks)

    def test_rmse_at_missing_k(self):
        curve = RmseCurve(model="baseline", m=4, training_size=-1,
                          points=[(1, 0.5)])
        with pytest.raises(KeyError):
            curve.rmse_at(2)


class TestPerPatchMonotonicity:
    """Codes inferred for the patch being reconstructed truncate cleanly.

    The property is about evaluation codes: data that is sparse in the
    dictionary yields codes whose nested truncations only ever improve.  An
    arbitrary coefficient vector paired with an unrelated patch can violate
    it, so the test draws patches from a scene family and infers their codes.
    """

    def test_nonincreasing_over_nested_truncations(self):
        placement = TransformPrior(alpha_range=(-0.3, 0.3),
                                   beta_range=(-0.3, 0.3),
                                   theta_range=(0.0, 2 * np.pi),
                                   delta_range=(-5.0, 5.0),
                                   eta_range=(-5.0, 5.0))
        template = GaborSpec(wavelength=4.0, envelope_sigma=1.5, aspect=0.8)
        scene_cfg = SynthSceneConfig(side=16, count=20, seed=17,
                                     template=template, placement=placement,
                                     noise_sigma=0.04)
        patches, _ = generate_scenes(scene_cfg)
        rng = substream(20, "monotone")
        f = GenericFilter.from_array(rng.standard_normal((16, 16)))
        prior = TransformPrior(alpha_range=(-0.35, 0.35),
                               beta_range=(-0.35, 0.35),
                               theta_range=(0.0, 2 * np.pi),
                               delta_range=(-5.5, 5.5),
                               eta_range=(-5.5, 5.5), seed=21)
        d = build_factored_dictionary(f, prior, 64, 16)
        icfg = InferenceConfig()
        for p in patches:
            z = p.patch.ravel()
            code = infer(z, d.basis, icfg)
            seq = per_patch_rmse_sequence(d.basis, code, z, range(1, 65))
            assert np.all(np.diff(seq) <= 1e-12), seq


class TestDataEfficiencySweep:
    def setup_method(self):
        rng = substream(30, "sweep")
        self.train = [rng.standard_normal((8, 8)) for _ in range(12)]
        self.test = [rng.standard_normal((8, 8)) for _ in range(3)]
        self.prior = TransformPrior(alpha_range=(-0.2, 0.2),
                                    beta_range=(-0.2, 0.2),
                                    theta_range=(0.0, 6.28),
                                    delta_range=(-1.0, 1.0),
                                    eta_range=(-1.0, 1.0), seed=7)
        self.cfg = TrainConfig(minibatch_size=4, learning_rate=1e-3,
                               baseline_learning_rate=1e-2, epochs=1, seed=2)

    def test_shape_and_labels(self):
        curves = data_efficiency_sweep(self.train, self.test, [4, 12], 4,
                                       self.prior, self.cfg)
        assert [c.model for c in curves] == ["factored", "factored",
                                             "baseline", "baseline"]
        assert [c.training_size for c in curves] == [4, 12, 4, 12]
        assert all(c.points[0][0] == 4 for c in curves)

    def test_duplicate_sizes_identical(self):
        curves = data_efficiency_sweep(self.train, self.test, [8, 8], 4,
                                       self.prior, self.cfg)
        assert curves[0].points == curves[1].points
        assert curves[2].points == curves[3].points

    def test_size_beyond_dataset(self):
        with pytest.raises(ValueError):
            data_efficiency_sweep(self.train, self.test, [13], 4,
                                  self.prior, self.cfg)

    def test_filter_side_passthrough(self):
        curves = data_efficiency_sweep(self.train, self.test, [8], 4,
                                       self.prior, self.cfg, filter_side=6)
        assert len(curves) == 2


class TestCsvRoundTrip:
    def test_write_read_recovers_curves(self, tmp_path):
        curves = [
            RmseCurve(model="factored", m=8, training_size=100,
                      points=[(1, 0.123456789012345678), (8, 0.05)]),
            RmseCurve(model="baseline", m=8, training_size=100,
                      points=[(1, 0.2), (8, 0.1)]),
        ]
        path = tmp_path / "curves.csv"
        write_rmse_csv(path, curves, n_patches=50, seed=3)
        back = read_rmse_csv(path)
        assert len(back) == 2
        for orig, got in zip(curves, back):
            assert got.model == orig.model
            assert got.m == orig.m
            assert got.training_size == orig.training_size
            assert got.points == orig.points

    def test_header_and_determinism(self, tmp_path):
        curve = RmseCurve(model="factored", m=2, training_size=10,
                          points=[(1, 1 / 3)])
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_rmse_csv(a, [curve], n_patches=5, seed=1)
        write_rmse_csv(b, [curve], n_patches=5, seed=1)
        assert a.read_bytes() == b.read_bytes()
        header = a.read_text().splitlines()[0]
        assert header == ",".join(CSV_COLUMNS)
