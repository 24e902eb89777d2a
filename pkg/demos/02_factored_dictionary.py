"""Expand one filter into an overcomplete dictionary by sampling transforms.

Run from the repository root:

    python3 demos/02_factored_dictionary.py

Shows how m unit-norm basis vectors are all warped copies of a single
template, then saves the materialized basis as a PGM mosaic.
"""

from pathlib import Path

import numpy as np

from facsparse import TransformPrior, build_factored_dictionary
from facsparse.data import GaborSpec, render_gabor
from facsparse.dictionary import GenericFilter
from facsparse.storage import write_pgm, write_pgm_grid

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def main():
    template = render_gabor(GaborSpec(wavelength=5.0, envelope_sigma=2.0,
                                      aspect=0.7), 12)
    filt = GenericFilter.from_array(template)

    prior = TransformPrior(alpha_range=(-0.3, 0.3), beta_range=(-0.3, 0.3),
                           theta_range=(0.0, 2.0 * np.pi),
                           delta_range=(-5.0, 5.0), eta_range=(-5.0, 5.0),
                           seed=4)
    d = build_factored_dictionary(filt, prior, m=64, out_side=16)

    print(f"one {filt.side}x{filt.side} filter -> {d.m} atoms of "
          f"{d.out_side}x{d.out_side} pixels")
    print(f"basis shape {d.basis.shape}, every row unit norm: "
          f"{np.allclose(np.linalg.norm(d.basis, axis=1), 1.0)}")

    print("\nfirst three sampled transforms:")
    for p in d.supports[:3]:
        print(f"  scale ({np.exp(p.alpha):4.2f}, {np.exp(p.beta):4.2f})  "
              f"rotation {np.degrees(p.theta):6.1f} deg  "
              f"shift ({p.delta:+5.2f}, {p.eta:+5.2f})")

    # storing the dictionary only needs the filter and the 5-number
    # transform tuples; the basis re-materializes bit for bit
    floats_factored = filt.side ** 2 + 5 * d.m
    floats_dense = d.m * d.out_side ** 2
    print(f"\nparameters to store: {floats_factored} floats factored vs "
          f"{floats_dense} dense ({floats_dense / floats_factored:.0f}x)")

    write_pgm(OUT / "generic_filter.pgm", filt.patch)
    write_pgm_grid(OUT / "factored_basis.pgm",
                   [row.reshape(16, 16) for row in d.basis], cols=8)
    print("filter and basis mosaics written to", OUT)


if __name__ == "__main__":
    main()
