"""Minibatch gradient training for the factored filter and the baseline.

Both trainers alternate: infer codes for each patch in the minibatch with the
current dictionary, then take one gradient step on the dictionary parameters
with the codes held fixed.  For the factored model the parameter is the
single generic filter, reached through the warp adjoints; for the baseline it
is the full basis matrix.  Unit norms (filter and every basis row) are
restored after every step.
"""

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ._rng import substream
from .dictionary import (
    BaselineDictionary,
    FactoredDictionary,
    GenericFilter,
    TransformPrior,
    build_factored_dictionary,
    filter_gradient,
    refresh,
)
from .errors import MissingData
from .inference import InferenceConfig, infer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Settings shared by both trainers.

    ``learning_rate`` drives the generic filter; the baseline's free rows
    live on a different scale and get their own ``baseline_learning_rate``.
    """

    minibatch_size: int = 100
    learning_rate: float = 2e-5
    baseline_learning_rate: float = 1e-2
    epochs: int = 2
    seed: int = 0
    inference: InferenceConfig = field(default_factory=InferenceConfig)

    def __post_init__(self):
        if self.minibatch_size < 1 or self.epochs < 1:
            raise ValueError("minibatch_size and epochs must be >= 1")
        if not (self.learning_rate > 0 and self.baseline_learning_rate > 0):
            raise ValueError("learning rates must be positive")


def _patch_vectors(patches) -> np.ndarray:
    """Stack a dataset of patches into (n, k) rows of flattened pixels."""
    rows = [np.asarray(getattr(p, "patch", p), dtype=float).ravel() for p in patches]
    if not rows:
        raise MissingData("empty training dataset")
    mat = np.stack(rows)
    return mat


def _epoch_order(n: int, rng, minibatch_size: int):
    """Yield per-batch index arrays for one pass, in a seeded random order."""
    order = rng.permutation(n)
    for start in range(0, n, minibatch_size):
        yield order[start:start + minibatch_size]


def _batch_codes_and_cotangents(z_rows, basis, inference_cfg, threads: int = 1):
    """Infer each patch and accumulate the per-row basis cotangents.

    The loss is the summed inference objective over the batch with codes
    frozen; its gradient with respect to basis row i is
    sum_batch x_i * (-2/eps^2) * (z - W^T x).  Inference may run threaded;
    the accumulation below keeps batch order, so results are identical.
    """
    eps2 = inference_cfg.noise_scale ** 2
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            codes = list(pool.map(lambda z: infer(z, basis, inference_cfg), z_rows))
    else:
        codes = [infer(z, basis, inference_cfg) for z in z_rows]
    cotangents = np.zeros_like(basis)
    objectives = np.empty(len(z_rows))
    sq_errors = np.empty(len(z_rows))
    for j, (z, code) in enumerate(zip(z_rows, codes)):
        resid = z - basis.T @ code.coeffs
        cotangents += np.outer(code.coeffs, (-2.0 / eps2) * resid)
        objectives[j] = code.objective
        sq_errors[j] = float(resid @ resid) / z.size
    return cotangents, objectives, sq_errors


class _TrainLog:
    """Collects per-step rows and optionally writes them as CSV."""

    columns = ("step", "mean_objective", "mean_rmse", "update_norm")

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self.rows: List[tuple] = []

    def append(self, step, mean_objective, mean_rmse, update_norm):
        self.rows.append((step, mean_objective, mean_rmse, update_norm))

    def write(self):
        if self.path is None:
            return
        with open(self.path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for step, obj, rmse, upd in self.rows:
                writer.writerow([step, f"{obj:.17g}", f"{rmse:.17g}", f"{upd:.17g}"])


def train_factored(patches, prior: TransformPrior, m: int, cfg: TrainConfig,
                   out_side: Optional[int] = None, filter_side: Optional[int] = None,
                   log_path: Optional[str] = None,
                   initial_filter: Optional[GenericFilter] = None,
                   threads: int = 1) -> FactoredDictionary:
    """Learn the generic filter from data; returns the final dictionary.

    The m supports are sampled once from ``prior`` and kept for the whole
    run (re-drawn only if an update makes one degenerate).  Each step infers
    codes for the minibatch, backs the summed reconstruction gradient through
    the warps onto the filter, takes a gradient step, renormalizes, and
    re-materializes the basis.  Fully determined by ``cfg.seed`` and
    ``prior.seed``.
    """
    z_rows = _patch_vectors(patches)
    n, k = z_rows.shape
    side = int(round(np.sqrt(k)))
    if out_side is None:
        out_side = side
    if filter_side is None:
        filter_side = out_side

    if initial_filter is None:
        init_rng = substream(cfg.seed, "filter-init")
        initial_filter = GenericFilter.from_array(
            init_rng.standard_normal((filter_side, filter_side)))
    resample_rng = substream(cfg.seed, "support-resample")
    order_rng = substream(cfg.seed, "data-order")

    d = build_factored_dictionary(initial_filter, prior, m, out_side)
    log = _TrainLog(log_path)
    step = 0
    for _ in range(cfg.epochs):
        for batch_idx in _epoch_order(n, order_rng, cfg.minibatch_size):
            cot, objectives, sq_errors = _batch_codes_and_cotangents(
                z_rows[batch_idx], d.basis, cfg.inference, threads=threads)
            grad = filter_gradient(d, cot)
            old_patch = d.filter.patch
            new_filter = GenericFilter.from_array(
                old_patch - cfg.learning_rate * grad)
            d = refresh(d, new_filter, prior=prior, rng=resample_rng)
            step += 1
            log.append(step, float(objectives.mean()),
                       float(np.sqrt(sq_errors.mean())),
                       float(np.linalg.norm(new_filter.patch - old_patch)))
    log.write()
    return d


def train_baseline(patches, m: int, cfg: TrainConfig,
                   log_path: Optional[str] = None,
                   initial_basis: Optional[np.ndarray] = None,
                   threads: int = 1) -> BaselineDictionary:
    """Learn a conventional dictionary of m free unit-norm rows.

    Same alternating scheme as the factored trainer, but the gradient step
    applies directly to the basis rows:
    W += lr * (2/eps^2) * sum_batch outer(x, z - W^T x), rows renormalized.
    """
    z_rows = _patch_vectors(patches)
    n, k = z_rows.shape

    if initial_basis is None:
        init_rng = substream(cfg.seed, "baseline-init")
        basis = init_rng.standard_normal((m, k))
    else:
        basis = np.array(initial_basis, dtype=float, copy=True)
        if basis.shape != (m, k):
            raise ValueError(f"initial basis shape {basis.shape} != ({m}, {k})")
    basis /= np.linalg.norm(basis, axis=1, keepdims=True)
    reinit_rng = substream(cfg.seed, "baseline-reinit")
    order_rng = substream(cfg.seed, "data-order")

    log = _TrainLog(log_path)
    step = 0
    for _ in range(cfg.epochs):
        for batch_idx in _epoch_order(n, order_rng, cfg.minibatch_size):
            cot, objectives, sq_errors = _batch_codes_and_cotangents(
                z_rows[batch_idx], basis, cfg.inference, threads=threads)
            # descent on the summed objective: W -= lr * dL/dW = -lr * cot
            update = -cfg.baseline_learning_rate * cot
            basis = basis + update
            norms = np.linalg.norm(basis, axis=1)
            dead = norms < 1e-12
            if np.any(dead):
                # a row collapsed to zero; give it a fresh random direction
                logger.warning("reinitializing %d collapsed basis rows",
                               int(dead.sum()))
                basis[dead] = reinit_rng.standard_normal((int(dead.sum()), k))
                norms = np.linalg.norm(basis, axis=1)
            basis /= norms[:, None]
            step += 1
            log.append(step, float(objectives.mean()),
                       float(np.sqrt(sq_errors.mean())),
                       float(np.linalg.norm(update)))
    log.write()
    return BaselineDictionary(basis)
