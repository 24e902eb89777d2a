"""Compare compression efficiency: factored dictionary vs free-atom baseline.

Run from the repository root:

    python3 demos/05_compression_benchmark.py

A scaled-down version of the benchmark the acceptance suite runs (fewer
scenes, smaller m) so it finishes in about a minute.  Both models train on
the same scenes with the same inference settings; the table reports mean
out-of-sample RMSE when only the K largest coefficients are kept.
"""

import time
from pathlib import Path

import numpy as np

from facsparse import (
    GaborSpec,
    SynthSceneConfig,
    TrainConfig,
    TransformPrior,
    generate_scenes,
    rmse_curve,
    train_baseline,
    train_factored,
    write_rmse_csv,
)

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def main():
    template = GaborSpec(wavelength=4.0, envelope_sigma=1.5, aspect=0.8)
    placement = TransformPrior(alpha_range=(-0.3, 0.3), beta_range=(-0.3, 0.3),
                               theta_range=(0.0, 2.0 * np.pi),
                               delta_range=(-5.0, 5.0), eta_range=(-5.0, 5.0))

    def scenes(count, seed, source):
        cfg = SynthSceneConfig(side=16, count=count, seed=seed,
                               noise_sigma=0.04, amplitude_range=(0.5, 1.5),
                               template=template, placement=placement)
        return generate_scenes(cfg, source=source)[0]

    train = scenes(200, 11, "train")
    test = scenes(60, 12, "test")

    prior = TransformPrior(alpha_range=(-0.35, 0.35), beta_range=(-0.35, 0.35),
                           theta_range=(0.0, 2.0 * np.pi),
                           delta_range=(-5.5, 5.5), eta_range=(-5.5, 5.5),
                           seed=21)
    cfg = TrainConfig(minibatch_size=50, learning_rate=1e-3,
                      baseline_learning_rate=3e-2, epochs=8, seed=31)
    m = 64
    Ks = [1, 2, 4, 8, 16, 32, 64]

    t0 = time.time()
    fdict = train_factored(train, prior, m, cfg)
    bdict = train_baseline(train, m, cfg)
    fcurve = rmse_curve(fdict, test, Ks, cfg.inference, model="factored",
                        training_size=len(train))
    bcurve = rmse_curve(bdict, test, Ks, cfg.inference, model="baseline",
                        training_size=len(train))
    print(f"trained and evaluated both models in {time.time() - t0:.0f}s\n")

    f = dict(fcurve.points)
    b = dict(bcurve.points)
    print("K      factored   baseline")
    for K in Ks:
        marker = "  <- factored ahead" if f[K] <= b[K] else ""
        print(f"{K:<6d} {f[K]:.4f}     {b[K]:.4f}{marker}")

    halved = [K for K in (4, 8, 16) if f[K] <= b[2 * K]]
    print(f"\nfactored at K matches baseline at 2K for K in {halved}")
    write_rmse_csv(OUT / "benchmark_rmse.csv", [fcurve, bcurve],
                   n_patches=len(test), seed=cfg.seed)
    print("curves written to", OUT / "benchmark_rmse.csv")


if __name__ == "__main__":
    main()
