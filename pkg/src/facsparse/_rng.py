"""Seed handling: named, independent random substreams from one run seed."""

import zlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    """Return a generator for the named substream of ``seed``.

    Different names give statistically independent streams; the mapping is
    stable across processes and platforms (no salted hashing).
    """
    tag = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag]))
