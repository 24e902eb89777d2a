"""Walk through the affine warp: compose the matrix, warp a patch, check the adjoint.

Run from the repository root:

    python3 demos/01_warps_and_adjoints.py

Writes a small PGM strip of warped patches to demos/out/.
"""

from pathlib import Path

import numpy as np

from facsparse import TransformParams, compose_matrix, warp, warp_adjoint
from facsparse.data import GaborSpec, render_gabor
from facsparse.storage import write_pgm_grid

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def main():
    # a smooth oriented template so the warps are easy to see
    patch = render_gabor(GaborSpec(wavelength=6.0, envelope_sigma=3.0), 24)

    print("transform matrix for a quarter turn plus vertical stretch:")
    params = TransformParams(alpha=np.log(1.5), theta=np.pi / 2)
    print(np.array_str(compose_matrix(params), precision=3, suppress_small=True))

    variants = [
        ("identity", TransformParams()),
        ("shift +4 rows", TransformParams(delta=4.0)),
        ("rotate 45 deg", TransformParams(theta=np.pi / 4)),
        ("shrink both axes", TransformParams(alpha=-0.35, beta=-0.35)),
        ("stretch + rotate + shift", TransformParams(alpha=0.3, beta=-0.2,
                                                     theta=1.1, delta=3.0,
                                                     eta=-2.0)),
    ]
    tiles = [warp(patch, p) for _, p in variants]
    write_pgm_grid(OUT / "warp_variants.pgm", [patch] + tiles, cols=3)
    print("\nwarped variants written to", OUT / "warp_variants.pgm")
    for name, p in variants:
        print(f"  {name:<26s} energy kept "
              f"{np.sum(warp(patch, p) ** 2) / np.sum(patch ** 2):5.2f}")

    # the adjoint is the exact transpose of the warp as a linear map,
    # which is all gradient learning needs from it
    rng = np.random.default_rng(0)
    a = rng.standard_normal((24, 24))
    b = rng.standard_normal((24, 24))
    p = TransformParams(alpha=0.2, beta=-0.1, theta=0.7, delta=2.5, eta=-1.5)
    lhs = float(np.sum(warp(a, p) * b))
    rhs = float(np.sum(a * warp_adjoint(b, p)))
    print(f"\nadjoint identity  <Wa, b> = {lhs:+.12f}")
    print(f"                  <a, W'b> = {rhs:+.12f}")
    print(f"difference {abs(lhs - rhs):.2e}")


if __name__ == "__main__":
    main()
