"""Whiten natural images and train a small factored dictionary on them.

Run from the repository root:

    python3 demos/06_cifar_pipeline.py [path-to-cifar-10-batches-bin]

Needs the binary CIFAR-10 archive (cifar-10-binary.tar.gz, extracted).
Defaults to data/cifar-10-batches-bin under the repository root, or set
the path as the first argument.  Uses a few hundred images and a small m
so it finishes in a couple of minutes; the full-scale protocol lives in
the acceptance suite.
"""

import sys
import time
from pathlib import Path

import numpy as np

from facsparse import (
    TrainConfig,
    TransformPrior,
    load_cifar10,
    rmse_curve,
    to_grayscale,
    train_factored,
    whiten_dataset,
)
from facsparse.storage import write_pgm_grid

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def main():
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else \
        Path(__file__).resolve().parents[1] / "data" / "cifar-10-batches-bin"
    if not root.is_dir():
        print(f"dataset not found at {root}")
        print("download cifar-10-binary.tar.gz, extract it there, or pass "
              "the directory as an argument")
        return 1

    train_rgb = load_cifar10(root, count=400, split="train")
    test_rgb = load_cifar10(root, count=100, split="test")
    print(f"loaded {len(train_rgb)} train / {len(test_rgb)} test images")

    train_gray = [to_grayscale(img) for img in train_rgb]
    test_gray = [to_grayscale(img) for img in test_rgb]
    train, whitener = whiten_dataset(train_gray, source="train")
    test, _ = whiten_dataset(test_gray, whitener=whitener, source="test")
    flat = np.concatenate([p.patch.ravel() for p in train])
    print(f"whitened: pixel mean {flat.mean():+.3f}, variance {flat.var():.3f}")

    prior = TransformPrior(alpha_range=(-0.4, 0.5), beta_range=(-0.4, 0.5),
                           theta_range=(0.0, 2.0 * np.pi),
                           delta_range=(-15.0, 15.0), eta_range=(-15.0, 15.0),
                           seed=1)
    cfg = TrainConfig(minibatch_size=100, learning_rate=2e-5, epochs=2, seed=2)

    t0 = time.time()
    d = train_factored(train, prior, m=64, cfg=cfg, filter_side=16)
    print(f"trained m={d.m} on whitened images in {time.time() - t0:.0f}s")

    curve = rmse_curve(d, test, [1, 4, 16, 64], cfg.inference,
                       model="factored", training_size=len(train))
    for K, rmse in curve.points:
        print(f"  K={K:<3d} out-of-sample rmse {rmse:.4f}")

    write_pgm_grid(OUT / "cifar_inputs.pgm",
                   [p.patch for p in test[:16]], cols=8)
    write_pgm_grid(OUT / "cifar_basis.pgm",
                   [row.reshape(32, 32) for row in d.basis[:16]], cols=8)
    print("whitened inputs and basis sample written to", OUT)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
