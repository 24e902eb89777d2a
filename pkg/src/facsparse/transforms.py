"""Parametric affine warps of square patches and their exact adjoints.

A transformation is the five-tuple (alpha, beta, theta, delta, eta): scale
vertically by e^alpha, scale horizontally by e^beta, rotate by theta,
translate vertically by delta pixels and horizontally by eta pixels.  The
forward map sends a centered input coordinate (u, v) = (row, col) to the
centered output coordinate (r, c) through the 3x3 product

    translate(delta, eta) @ rotate(theta) @ scale(e^alpha, e^beta).

Patches are generated by inverse mapping: iterate output pixels, pull each
one back through the inverse matrix and bilinearly interpolate the input.
Sample coordinates falling off the input contribute zero, corner by corner.

Conventions: pixel (0, 0) is the top-left entry of the array, the geometric
origin sits at ((S-1)/2, (S-1)/2) for side S (odd or even), and all math is
double precision.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

# Sample coordinates within this distance of an integer are snapped onto it,
# so that transforms which map the pixel grid onto itself (identity, integer
# translations, quarter-turn rotations) reproduce array ops bit-for-bit
# despite cos(pi/2) != 0 in floating point.
GRID_SNAP_EPS = 1e-9


@dataclass(frozen=True)
class TransformParams:
    """One transformation tuple; all angles in radians, translations in pixels."""

    alpha: float = 0.0  # log vertical scale
    beta: float = 0.0   # log horizontal scale
    theta: float = 0.0  # rotation
    delta: float = 0.0  # vertical translation
    eta: float = 0.0    # horizontal translation

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.theta, self.delta, self.eta])

    @classmethod
    def from_array(cls, values) -> "TransformParams":
        a, b, t, d, e = (float(x) for x in values)
        return cls(a, b, t, d, e)


def compose_matrix(params: TransformParams) -> np.ndarray:
    """3x3 homogeneous matrix translate @ rotate @ scale for ``params``.

    Maps centered input (u, v, 1) to centered output (r, c, 1).  The upper
    2x2 block has determinant e^(alpha+beta) > 0, so the matrix is always
    invertible.
    """
    ca, sa = np.cos(params.theta), np.sin(params.theta)
    translate = np.array([[1.0, 0.0, params.delta],
                          [0.0, 1.0, params.eta],
                          [0.0, 0.0, 1.0]])
    rotate = np.array([[ca, -sa, 0.0],
                       [sa, ca, 0.0],
                       [0.0, 0.0, 1.0]])
    scale = np.diag([np.exp(params.alpha), np.exp(params.beta), 1.0])
    return translate @ rotate @ scale


def _inverse_matrix(params: TransformParams) -> np.ndarray:
    """Closed-form inverse scale^-1 @ rotate(-theta) @ translate(-delta,-eta)."""
    ca, sa = np.cos(params.theta), np.sin(params.theta)
    ea, eb = np.exp(-params.alpha), np.exp(-params.beta)
    d, e = params.delta, params.eta
    return np.array([
        [ea * ca, ea * sa, ea * (-ca * d - sa * e)],
        [-eb * sa, eb * ca, eb * (sa * d - ca * e)],
        [0.0, 0.0, 1.0],
    ])


def _corner_weights(params: TransformParams, in_side: int, out_side: int):
    """Bilinear corner indices and weights of the warp's linear map.

    Returns ``(idx, w)`` of shape (4, out_side, out_side): flat indices into
    the input array and the matching interpolation weights.  Corners outside
    the input get weight 0 (and a clamped dummy index), which realizes the
    undefined-pixels-are-zero boundary rule without renormalizing the
    remaining weights.
    """
    grid = np.arange(out_side, dtype=float) - (out_side - 1) / 2.0
    r = grid[:, None]
    c = grid[None, :]
    inv = _inverse_matrix(params)
    u = inv[0, 0] * r + inv[0, 1] * c + inv[0, 2] + (in_side - 1) / 2.0
    v = inv[1, 0] * r + inv[1, 1] * c + inv[1, 2] + (in_side - 1) / 2.0

    for a in (u, v):
        snapped = np.rint(a)
        near = np.abs(a - snapped) < GRID_SNAP_EPS
        a[near] = snapped[near]

    u0 = np.floor(u)
    v0 = np.floor(v)
    fu = u - u0
    fv = v - v0

    iu = np.stack([u0, u0, u0 + 1.0, u0 + 1.0]).astype(np.int64)
    iv = np.stack([v0, v0 + 1.0, v0, v0 + 1.0]).astype(np.int64)
    w = np.stack([(1.0 - fu) * (1.0 - fv),
                  (1.0 - fu) * fv,
                  fu * (1.0 - fv),
                  fu * fv])

    inside = (iu >= 0) & (iu < in_side) & (iv >= 0) & (iv < in_side)
    w[~inside] = 0.0
    idx = np.clip(iu, 0, in_side - 1) * in_side + np.clip(iv, 0, in_side - 1)
    return idx, w


def warp(patch: np.ndarray, params: TransformParams, out_side: int | None = None) -> np.ndarray:
    """Warp ``patch`` by ``params`` onto an ``out_side``-sided output grid.

    Pure, linear in ``patch``; ``out_side`` defaults to the input side.
    """
    patch = np.asarray(patch, dtype=float)
    if patch.ndim != 2 or patch.shape[0] != patch.shape[1]:
        raise DimensionMismatch(f"expected a square patch, got shape {patch.shape}")
    in_side = patch.shape[0]
    out_side = in_side if out_side is None else int(out_side)
    if out_side < 1:
        raise DimensionMismatch("out_side must be >= 1")

    idx, w = _corner_weights(params, in_side, out_side)
    flat = patch.reshape(-1)
    return (w * flat[idx]).sum(axis=0)


def warp_adjoint(cotangent: np.ndarray, params: TransformParams, in_side: int | None = None) -> np.ndarray:
    """Apply the transpose of the linear map ``warp(. , params)``.

    ``cotangent`` lives on the warp's output grid; the result lives on its
    input grid of side ``in_side`` (defaults to the cotangent's side).  Each
    output pixel's bilinear weights are scattered back onto its four input
    neighbors, so <warp(a), b> == <a, warp_adjoint(b)> up to rounding.
    """
    cot = np.asarray(cotangent, dtype=float)
    if cot.ndim != 2 or cot.shape[0] != cot.shape[1]:
        raise DimensionMismatch(f"expected a square cotangent, got shape {cot.shape}")
    out_side = cot.shape[0]
    in_side = out_side if in_side is None else int(in_side)

    idx, w = _corner_weights(params, in_side, out_side)
    acc = np.zeros(in_side * in_side)
    np.add.at(acc, idx.reshape(4, -1), (w * cot).reshape(4, -1))
    return acc.reshape(in_side, in_side)
