"""Sparse code inference under a Cauchy prior.

Minimizes ``|z - W^T x|^2 / eps^2 + lam * sum(log(1 + (x_i/r)^2))`` over the
coefficients x with a bounded-memory quasi-Newton method, under a hard cap on
objective evaluations.  The penalty is smooth and heavy-tailed, so solutions
have many near-zero (not exactly zero) coefficients; compression views are
obtained afterwards with :func:`top_k`.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .errors import DimensionMismatch, NonFiniteObjective

# L-BFGS memory depth (correction pairs); standard default, results are not
# sensitive to it.
_MEMORY_DEPTH = 10


@dataclass(frozen=True)
class InferenceConfig:
    """Objective and solver settings.

    noise_scale is the assumed pixel noise level (the eps in the residual
    term), sparsity_weight the positive penalty weight, cauchy_scale the
    coefficient scale r of the prior.  max_evals caps objective evaluations;
    grad_tol is the infinity-norm gradient threshold for convergence.
    """

    noise_scale: float = 1.0
    sparsity_weight: float = 0.1
    cauchy_scale: float = 0.1
    max_evals: int = 200
    grad_tol: float = 1e-6

    def __post_init__(self):
        if not (self.noise_scale > 0 and self.sparsity_weight > 0
                and self.cauchy_scale > 0 and self.grad_tol > 0):
            raise ValueError("noise_scale, sparsity_weight, cauchy_scale and "
                             "grad_tol must all be positive")
        if self.max_evals < 1:
            raise ValueError(f"max_evals must be >= 1, got {self.max_evals}")


@dataclass
class SparseCode:
    """Inferred coefficients plus the solver's bookkeeping."""

    coeffs: np.ndarray
    objective: float
    n_evals: int


def _as_patch_vector(z) -> np.ndarray:
    """Accept a patch object, a 2-D patch, or an already-flat vector."""
    arr = np.asarray(getattr(z, "patch", z), dtype=float)
    return arr.ravel()


def objective(z, W, x, cfg: InferenceConfig):
    """Return (value, gradient) of the penalized reconstruction objective.

    value = |z - W^T x|^2 / eps^2 + lam * sum(log(1 + (x_i/r)^2))
    gradient = -2 W (z - W^T x) / eps^2 + lam * 2 x / (r^2 + x^2)
    """
    z = _as_patch_vector(z)
    W = np.asarray(W, dtype=float)
    x = np.asarray(x, dtype=float)
    if W.ndim != 2 or x.shape != (W.shape[0],) or z.shape != (W.shape[1],):
        raise DimensionMismatch(
            f"incompatible shapes: z {z.shape}, W {W.shape}, x {x.shape}")
    eps2 = cfg.noise_scale ** 2
    r2 = cfg.cauchy_scale ** 2
    resid = z - W.T @ x
    value = float(resid @ resid) / eps2 \
        + cfg.sparsity_weight * float(np.sum(np.log1p((x * x) / r2)))
    grad = (-2.0 / eps2) * (W @ resid) \
        + cfg.sparsity_weight * (2.0 * x) / (r2 + x * x)
    return value, grad


class _EvalBudgetReached(Exception):
    """Internal: the closure refused an evaluation past the hard cap."""


def infer(z, W, cfg: InferenceConfig = InferenceConfig(), x0=None) -> SparseCode:
    """Minimize the objective over coefficients, from x0 (default all-zero).

    The returned iterate is the best one seen, so its objective never exceeds
    the objective at x0, and at most ``cfg.max_evals`` evaluations are spent.
    Raises :class:`NonFiniteObjective` if the objective or gradient leaves
    the finite range (a sign of bad scaling in the config).
    """
    z = _as_patch_vector(z)
    W = np.asarray(W, dtype=float)
    m = W.shape[0]
    if x0 is None:
        x0 = np.zeros(m)
    else:
        x0 = np.asarray(x0, dtype=float).copy()
        if x0.shape != (m,):
            raise DimensionMismatch(f"x0 shape {x0.shape} != ({m},)")

    row_norms = np.linalg.norm(W, axis=1)
    if np.any(np.abs(row_norms - 1.0) > 1e-6):
        warnings.warn("basis rows are not unit-norm; proceeding anyway",
                      RuntimeWarning, stacklevel=2)

    state = {"n": 0, "best_f": np.inf, "best_x": x0}

    def fun(x):
        if state["n"] >= cfg.max_evals:
            raise _EvalBudgetReached
        state["n"] += 1
        f, g = objective(z, W, x, cfg)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            raise NonFiniteObjective(
                f"objective became non-finite after {state['n']} evaluations")
        if f < state["best_f"]:
            state["best_f"] = f
            state["best_x"] = np.array(x, dtype=float, copy=True)
        return f, g

    try:
        minimize(fun, x0, jac=True, method="L-BFGS-B",
                 options={"maxcor": _MEMORY_DEPTH,
                          "maxfun": cfg.max_evals,
                          "maxiter": 10 * cfg.max_evals,
                          "ftol": 0.0,
                          "gtol": cfg.grad_tol})
    except _EvalBudgetReached:
        pass
    return SparseCode(coeffs=state["best_x"], objective=state["best_f"],
                      n_evals=state["n"])


def top_k(code: SparseCode, K: int) -> SparseCode:
    """Keep the K largest-magnitude coefficients, zero the rest.

    Ties break toward the lower index.  The objective and evaluation count
    carried over describe the inference that produced the full code; the
    truncation itself is a post-processing view of it.
    """
    x = np.asarray(code.coeffs, dtype=float)
    m = x.shape[0]
    if not 1 <= K <= m:
        raise ValueError(f"K must be in [1, {m}], got {K}")
    order = np.argsort(-np.abs(x), kind="stable")
    kept = np.zeros_like(x)
    kept[order[:K]] = x[order[:K]]
    return replace(code, coeffs=kept)
