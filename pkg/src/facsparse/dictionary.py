"""Factored dictionary: one generic filter expanded through sampled warps.

A ``FactoredDictionary`` owns a single small template (the generic filter),
a list of m transformation tuples sampled from a ``TransformPrior``, and the
materialized basis matrix W whose row i is the unit-normalized warp of the
filter under tuple i.  ``filter_gradient`` pulls cotangents on the basis rows
back onto the filter through the warp adjoints, including the Jacobian of the
per-row normalization.

A ``BaselineDictionary`` is the conventional alternative: m free unit-norm
rows with no shared structure.
"""

from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from ._rng import substream
from .errors import DimensionMismatch, ZeroBasisVector
from .transforms import TransformParams, warp, warp_adjoint

# Warps with L2 norm below this are treated as degenerate (filter mapped
# entirely off-patch) and rejected for resampling.
ZERO_NORM_EPS = 1e-12

UNIT_NORM_TOL = 1e-9


@dataclass(frozen=True)
class GenericFilter:
    """The single learnable template, unit L2 norm enforced."""

    patch: np.ndarray

    def __post_init__(self):
        patch = np.asarray(self.patch, dtype=float)
        if patch.ndim != 2 or patch.shape[0] != patch.shape[1]:
            raise DimensionMismatch(f"filter must be a square patch, got {patch.shape}")
        norm = float(np.linalg.norm(patch))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"filter norm {norm!r} is not 1 within {UNIT_NORM_TOL}")
        object.__setattr__(self, "patch", patch)

    @classmethod
    def from_array(cls, arr) -> "GenericFilter":
        """Normalize an arbitrary square array into a valid filter."""
        arr = np.asarray(arr, dtype=float)
        norm = float(np.linalg.norm(arr))
        if norm < ZERO_NORM_EPS:
            raise ValueError("cannot normalize an all-zero filter")
        return cls(arr / norm)

    @property
    def side(self) -> int:
        return self.patch.shape[0]


@dataclass(frozen=True)
class TransformPrior:
    """Independent uniform ranges for each transformation coordinate.

    Scale exponents are in log units, the angle in radians, translations in
    pixels.  ``seed`` fixes the support draw; the draw itself happens in
    :func:`sample_supports`.
    """

    alpha_range: Tuple[float, float] = (-0.4, 0.5)
    beta_range: Tuple[float, float] = (-0.4, 0.5)
    theta_range: Tuple[float, float] = (0.0, 2.0 * np.pi)
    delta_range: Tuple[float, float] = (-15.0, 15.0)
    eta_range: Tuple[float, float] = (-15.0, 15.0)
    seed: int = 0

    def __post_init__(self):
        for name in ("alpha_range", "beta_range", "theta_range", "delta_range", "eta_range"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise ValueError(f"{name} must be a finite interval, got ({lo}, {hi})")

    def ranges(self) -> np.ndarray:
        """(5, 2) array of (low, high) rows in tuple-field order."""
        return np.array([
            self.alpha_range,
            self.beta_range,
            self.theta_range,
            self.delta_range,
            self.eta_range,
        ], dtype=float)


def sample_supports(prior: TransformPrior, m: int, rng=None) -> List[TransformParams]:
    """Draw m transformation tuples i.i.d. uniform from the prior's ranges.

    Deterministic given ``prior.seed``; pass an explicit ``rng`` to continue
    an existing stream (used when resampling degenerate draws).
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if rng is None:
        rng = substream(prior.seed, "supports")
    bounds = prior.ranges()
    draws = rng.uniform(bounds[:, 0], bounds[:, 1], size=(m, 5))
    return [TransformParams.from_array(row) for row in draws]


def materialize(filter_patch, supports: List[TransformParams], out_side: int,
                return_norms: bool = False):
    """Expand the filter through every support tuple into basis rows.

    Row i is ``warp(filter, supports[i], out_side)`` flattened and divided by
    its L2 norm.  Raises :class:`ZeroBasisVector` for the first support whose
    warp lands entirely off-patch; the caller resamples that tuple.
    With ``return_norms`` the pre-normalization norms are returned as well
    (the gradient needs them).
    """
    patch = getattr(filter_patch, "patch", filter_patch)
    patch = np.asarray(patch, dtype=float)
    m = len(supports)
    k = out_side * out_side
    basis = np.empty((m, k))
    norms = np.empty(m)
    for i, params in enumerate(supports):
        warped = warp(patch, params, out_side=out_side).ravel()
        norm = float(np.linalg.norm(warped))
        if norm < ZERO_NORM_EPS:
            raise ZeroBasisVector(i, norm)
        basis[i] = warped / norm
        norms[i] = norm
    if return_norms:
        return basis, norms
    return basis


@dataclass
class FactoredDictionary:
    """Generic filter plus m sampled supports and the materialized basis.

    ``norms`` caches the pre-normalization warp norms so the gradient does
    not have to redo the forward warps.  Treated as immutable between
    learning steps; updates go through :func:`refresh`.
    """

    filter: GenericFilter
    supports: List[TransformParams]
    basis: np.ndarray
    norms: np.ndarray
    out_side: int

    @property
    def m(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]


def build_factored_dictionary(filter: GenericFilter, prior: TransformPrior, m: int,
                              out_side: int, max_resample: int = 1000) -> FactoredDictionary:
    """Sample m supports from the prior and materialize the dictionary.

    Degenerate supports (all-zero warp) are redrawn from the same stream, so
    the result is still fully determined by ``prior.seed``.
    """
    rng = substream(prior.seed, "supports")
    supports = sample_supports(prior, m, rng=rng)
    supports = _materialize_with_resampling(filter, supports, out_side, prior, rng,
                                            max_resample)
    basis, norms = materialize(filter, supports, out_side, return_norms=True)
    return FactoredDictionary(filter=filter, supports=supports, basis=basis,
                              norms=norms, out_side=out_side)


def refresh(d: FactoredDictionary, new_filter: GenericFilter,
            prior: Optional[TransformPrior] = None, rng=None,
            max_resample: int = 1000) -> FactoredDictionary:
    """Re-materialize the basis for an updated filter, keeping the supports.

    If a support has become degenerate for the new filter it is resampled,
    which requires ``prior`` and ``rng``; without them the error propagates.
    """
    supports = list(d.supports)
    if prior is not None and rng is not None:
        supports = _materialize_with_resampling(new_filter, supports, d.out_side,
                                                prior, rng, max_resample)
    basis, norms = materialize(new_filter, supports, d.out_side, return_norms=True)
    return replace(d, filter=new_filter, supports=supports, basis=basis, norms=norms)


def _materialize_with_resampling(filter, supports, out_side, prior, rng, max_resample):
    patch = np.asarray(getattr(filter, "patch", filter), dtype=float)
    supports = list(supports)
    for i in range(len(supports)):
        for attempt in range(max_resample + 1):
            warped = warp(patch, supports[i], out_side=out_side)
            if float(np.linalg.norm(warped)) >= ZERO_NORM_EPS:
                break
            if attempt == max_resample:
                raise ZeroBasisVector(i, 0.0)
            supports[i] = sample_supports(prior, 1, rng=rng)[0]
    return supports


def filter_gradient(d: FactoredDictionary, basis_cotangents) -> np.ndarray:
    """Pull basis-row cotangents back onto the generic filter.

    For cotangent row g_i on unit row w_i = warp_i(u)/norm_i the chain is
    the normalization Jacobian (I - w_i w_i^T)/norm_i followed by the warp
    adjoint; contributions sum over rows.  Returns the gradient with respect
    to the raw (pre unit-norm-projection) filter pixels, shaped like the
    filter patch.
    """
    cot = np.asarray(basis_cotangents, dtype=float)
    if cot.shape != d.basis.shape:
        raise DimensionMismatch(
            f"cotangent shape {cot.shape} != basis shape {d.basis.shape}")
    side_u = d.filter.side
    total = np.zeros((side_u, side_u))
    for i in range(d.m):
        g = cot[i]
        w = d.basis[i]
        projected = (g - w * float(w @ g)) / d.norms[i]
        total += warp_adjoint(projected.reshape(d.out_side, d.out_side),
                              d.supports[i], in_side=side_u)
    return total


@dataclass
class BaselineDictionary:
    """Conventional sparse-coding dictionary: m free unit-norm rows."""

    basis: np.ndarray

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=float)
        if self.basis.ndim != 2:
            raise DimensionMismatch(f"basis must be 2-D, got {self.basis.shape}")
        norms = np.linalg.norm(self.basis, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            worst = int(np.argmax(np.abs(norms - 1.0)))
            raise ValueError(f"row {worst} norm {norms[worst]!r} is not 1")

    @property
    def m(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]
