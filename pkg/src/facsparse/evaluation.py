"""Compression-efficiency evaluation: top-K reconstruction RMSE curves.

Each test patch is inferred once with the full dictionary; the code is then
truncated to its K largest-magnitude coefficients for every requested K and
the reconstruction RMSE is averaged over patches.  Because the truncation
sets are nested within one fixed code, per-patch RMSE is non-increasing in K.
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dictionary import FactoredDictionary
from .errors import DimensionMismatch
from .inference import InferenceConfig, SparseCode, infer, top_k
from .learning import TrainConfig, train_baseline, train_factored


@dataclass
class RmseCurve:
    """Mean top-K reconstruction error for one model at one training size."""

    model: str
    m: int
    training_size: int
    points: List[Tuple[int, float]]

    def rmse_at(self, K: int) -> float:
        for k, v in self.points:
            if k == K:
                return v
        raise KeyError(f"no point at K={K}")


def _basis_of(d) -> np.ndarray:
    return d.basis if hasattr(d, "basis") else np.asarray(d)


def reconstruct(W, code) -> np.ndarray:
    """Return W^T x as a square patch."""
    W = _basis_of(W)
    x = np.asarray(getattr(code, "coeffs", code), dtype=float)
    if x.shape != (W.shape[0],):
        raise DimensionMismatch(f"code length {x.shape} != m={W.shape[0]}")
    flat = W.T @ x
    side = int(round(np.sqrt(flat.size)))
    if side * side != flat.size:
        raise DimensionMismatch(f"basis row length {flat.size} is not a square")
    return flat.reshape(side, side)


def _patch_rows(patches) -> np.ndarray:
    return np.stack([np.asarray(getattr(p, "patch", p), dtype=float).ravel()
                     for p in patches])


def rmse_curve(dictionary, test_patches, Ks: Sequence[int],
               inference_cfg: InferenceConfig = InferenceConfig(),
               model: Optional[str] = None, training_size: int = -1,
               threads: int = 1) -> RmseCurve:
    """Mean reconstruction RMSE over test patches at each truncation level K.

    One inference per patch with the full dictionary; each K then truncates
    that same code.  Patch-level work is independent, so it may be threaded;
    aggregation stays in patch order either way.
    """
    basis = _basis_of(dictionary)
    m = basis.shape[0]
    Ks = list(Ks)
    if any(k < 1 or k > m for k in Ks):
        raise ValueError(f"every K must be in [1, {m}], got {Ks}")
    if sorted(set(Ks)) != Ks:
        raise ValueError(f"Ks must be strictly increasing, got {Ks}")
    if model is None:
        model = "factored" if isinstance(dictionary, FactoredDictionary) else "baseline"

    z_rows = _patch_rows(test_patches)

    def per_patch(z):
        code = infer(z, basis, inference_cfg)
        errors = []
        for K in Ks:
            recon = basis.T @ top_k(code, K).coeffs
            diff = z - recon
            errors.append(np.sqrt(float(diff @ diff) / z.size))
        return errors

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            all_errors = list(pool.map(per_patch, z_rows))
    else:
        all_errors = [per_patch(z) for z in z_rows]
    means = np.mean(np.asarray(all_errors), axis=0)
    return RmseCurve(model=model, m=m, training_size=training_size,
                     points=[(K, float(v)) for K, v in zip(Ks, means)])


def per_patch_rmse_sequence(basis, code: SparseCode, z, Ks: Sequence[int]):
    """Truncation RMSE for one fixed code at each K (for monotonicity checks)."""
    basis = _basis_of(basis)
    z = np.asarray(getattr(z, "patch", z), dtype=float).ravel()
    out = []
    for K in Ks:
        diff = z - basis.T @ top_k(code, K).coeffs
        out.append(np.sqrt(float(diff @ diff) / z.size))
    return out


def data_efficiency_sweep(train_patches, test_patches, train_sizes: Sequence[int],
                          m: int, prior, cfg: TrainConfig,
                          inference_cfg: Optional[InferenceConfig] = None,
                          Ks: Optional[Sequence[int]] = None,
                          filter_side: Optional[int] = None,
                          threads: int = 1) -> List[RmseCurve]:
    """Train both families at each training-set size and evaluate out of sample.

    Uses the first ``size`` patches of ``train_patches`` at each size, the
    same seeds and configs throughout, and returns one curve per (family,
    size), factored first.
    """
    train_patches = list(train_patches)
    if max(train_sizes) > len(train_patches):
        raise ValueError(f"train size {max(train_sizes)} exceeds dataset "
                         f"({len(train_patches)} patches)")
    if inference_cfg is None:
        inference_cfg = cfg.inference
    if Ks is None:
        Ks = [m]
    curves = []
    for model in ("factored", "baseline"):
        for size in train_sizes:
            subset = train_patches[:size]
            if model == "factored":
                d = train_factored(subset, prior, m, cfg,
                                   filter_side=filter_side, threads=threads)
            else:
                d = train_baseline(subset, m, cfg, threads=threads)
            curves.append(rmse_curve(d, test_patches, Ks, inference_cfg,
                                     model=model, training_size=size,
                                     threads=threads))
    return curves


CSV_COLUMNS = ("model", "m", "train_size", "K", "mean_rmse", "n_patches", "seed")


def write_rmse_csv(path, curves: Sequence[RmseCurve], n_patches: int, seed: int):
    """One row per (curve, K); floats at 17 significant digits so equal runs
    produce byte-identical files."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for curve in curves:
            for K, value in curve.points:
                writer.writerow([curve.model, curve.m, curve.training_size,
                                 K, f"{value:.17g}", n_patches, seed])


def read_rmse_csv(path) -> List[RmseCurve]:
    """Inverse of write_rmse_csv (used by tests and downstream scripts)."""
    groups = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (row["model"], int(row["m"]), int(row["train_size"]))
            groups.setdefault(key, []).append((int(row["K"]), float(row["mean_rmse"])))
    return [RmseCurve(model=mod, m=m, training_size=ts, points=pts)
            for (mod, m, ts), pts in groups.items()]
