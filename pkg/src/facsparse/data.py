"""Data ingestion and generation: CIFAR-10, whitening, synthetic Gabor scenes.

CIFAR-10 ships as binary batches of 3073-byte records (1 label byte followed
by 1024 R, 1024 G, 1024 B bytes, row-major).  Patches are converted to
grayscale luminance, then whitened with the radial frequency filter
``R(f) = f * exp(-(f/f0)^4)`` (f in cycles/image, f0 = 0.78 * Nyquist) and
rescaled to unit variance using training-set statistics only.

The synthetic generator builds scenes as sums of warped copies of a single
Gabor template, which gives desk-scale datasets whose ground truth is known
by construction.
"""

import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ._rng import substream
from .dictionary import TransformPrior
from .errors import DimensionMismatch, FormatError, MissingData
from .transforms import TransformParams, warp

CIFAR_SIDE = 32
_RECORD_BYTES = 3073
_TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
_TEST_FILES = ("test_batch.bin",)


@dataclass
class WhitenedPatch:
    """A whitened observation plus where it came from."""

    patch: np.ndarray
    provenance: Tuple[str, int] = ("unknown", -1)

    @property
    def side(self) -> int:
        return self.patch.shape[0]


def load_cifar10(path, count: Optional[int] = None, split: str = "train") -> List[np.ndarray]:
    """Read raw 32x32x3 uint8 images from CIFAR-10 binary batches.

    ``path`` may be the dataset directory (standard batch file names) or a
    single ``.bin`` file.  Images are returned in file order, so
    ``count=5000`` on the train split is the dataset's first 5000 images.
    Labels are parsed (the format requires it) but not returned.
    """
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    if os.path.isfile(path):
        files = [path]
    elif os.path.isdir(path):
        names = _TRAIN_FILES if split == "train" else _TEST_FILES
        files = [os.path.join(path, n) for n in names]
        files = [f for f in files if os.path.isfile(f)]
        if not files:
            raise MissingData(f"no CIFAR-10 batch files for split {split!r} in {path}")
    else:
        raise MissingData(f"no such file or directory: {path}")

    images = []
    for fname in files:
        raw = np.fromfile(fname, dtype=np.uint8)
        if raw.size == 0 or raw.size % _RECORD_BYTES != 0:
            raise FormatError(
                f"{fname}: size {raw.size} is not a multiple of {_RECORD_BYTES}")
        records = raw.reshape(-1, _RECORD_BYTES)
        planes = records[:, 1:].reshape(-1, 3, CIFAR_SIDE, CIFAR_SIDE)
        images.extend(np.transpose(img, (1, 2, 0)) for img in planes)
        if count is not None and len(images) >= count:
            break
    if count is not None:
        if count > len(images):
            raise MissingData(
                f"requested {count} images but only {len(images)} available")
        images = images[:count]
    return images


def to_grayscale(rgb) -> np.ndarray:
    """Rec. 601 luminance scaled to [0, 1].

    Accepts an (S, S, 3) image or the raw planar 3072-byte record body.
    """
    arr = np.asarray(rgb)
    if arr.ndim == 1:
        if arr.size % 3 != 0:
            raise DimensionMismatch(f"flat rgb length {arr.size} not divisible by 3")
        side = int(round(np.sqrt(arr.size // 3)))
        arr = arr.reshape(3, side, side).transpose(1, 2, 0)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DimensionMismatch(f"expected (S, S, 3) rgb, got {arr.shape}")
    arr = arr.astype(float)
    lum = 0.299 * arr[:, :, 0] + 0.587 * arr[:, :, 1] + 0.114 * arr[:, :, 2]
    return lum / 255.0


class Whitener:
    """Radial frequency-domain whitening filter with dataset-wide rescaling.

    The filter response is R(f) = f * exp(-(f/f0)^4) with f the radial
    frequency in cycles/image and f0 = 0.78 * Nyquist by default.  ``fit``
    freezes a global scale that makes the training pixels unit-variance;
    until then the scale is 1.
    """

    def __init__(self, side: int, cutoff: Optional[float] = None):
        self.side = side
        self.cutoff = float(cutoff) if cutoff is not None else 0.78 * (side / 2.0)
        freqs = np.fft.fftfreq(side) * side
        radial = np.hypot(freqs[:, None], freqs[None, :])
        with np.errstate(over="ignore"):
            self.response = radial * np.exp(-((radial / self.cutoff) ** 4))
        self.scale = 1.0

    def filter_patch(self, patch) -> np.ndarray:
        """Mean-subtract and apply the radial filter; no variance rescale."""
        patch = np.asarray(patch, dtype=float)
        if patch.shape != (self.side, self.side):
            raise DimensionMismatch(
                f"expected ({self.side}, {self.side}) patch, got {patch.shape}")
        centered = patch - patch.mean()
        spectrum = np.fft.fft2(centered) * self.response
        return np.real(np.fft.ifft2(spectrum))

    def fit(self, patches) -> "Whitener":
        """Freeze the unit-variance rescale from these (training) patches."""
        total = 0.0
        n = 0
        for p in patches:
            filtered = self.filter_patch(p)
            total += float(np.sum(filtered * filtered))
            n += filtered.size
        if n == 0 or total <= 0.0:
            raise MissingData("cannot fit whitener: no nonzero training pixels")
        self.scale = 1.0 / np.sqrt(total / n)
        return self

    def whiten(self, patch, provenance=("unknown", -1)) -> WhitenedPatch:
        return WhitenedPatch(self.filter_patch(patch) * self.scale,
                             provenance=tuple(provenance))


def whiten_dataset(patches, side: Optional[int] = None, source: str = "data",
                   whitener: Optional[Whitener] = None):
    """Whiten a list of patches; fit the rescale on them unless one is given.

    Returns (list of WhitenedPatch, fitted Whitener).  Pass a pre-fitted
    whitener for held-out data so test patches reuse training statistics.
    """
    patches = list(patches)
    if not patches:
        raise MissingData("empty dataset")
    if side is None:
        side = np.asarray(patches[0]).shape[0]
    if whitener is None:
        whitener = Whitener(side).fit(patches)
    out = [whitener.whiten(p, provenance=(source, i)) for i, p in enumerate(patches)]
    return out, whitener


@dataclass(frozen=True)
class GaborSpec:
    """Oriented sinusoid under a Gaussian envelope."""

    wavelength: float
    orientation: float = 0.0
    phase: float = 0.0
    envelope_sigma: float = 2.0
    aspect: float = 1.0

    def __post_init__(self):
        if not (self.wavelength > 0 and self.envelope_sigma > 0):
            raise ValueError("wavelength and envelope_sigma must be positive")


def render_gabor(spec: GaborSpec, side: int) -> np.ndarray:
    """Draw the Gabor on a side x side grid centered at the patch center.

    The carrier runs along the orientation axis; ``aspect`` squeezes the
    envelope perpendicular to it.
    """
    center = (side - 1) / 2.0
    rows = np.arange(side)[:, None] - center
    cols = np.arange(side)[None, :] - center
    cos_t, sin_t = np.cos(spec.orientation), np.sin(spec.orientation)
    along = rows * cos_t + cols * sin_t
    across = -rows * sin_t + cols * cos_t
    envelope = np.exp(-(along ** 2 + (spec.aspect * across) ** 2)
                      / (2.0 * spec.envelope_sigma ** 2))
    carrier = np.cos(2.0 * np.pi * along / spec.wavelength + spec.phase)
    return envelope * carrier


def synth_gabor_scene(specs, placements, side: int, noise_sigma: float = 0.0,
                      seed=None, amplitudes=None, rng=None) -> np.ndarray:
    """Sum of warped, amplitude-weighted Gabor renders plus Gaussian noise."""
    if side < 8:
        raise ValueError(f"side must be >= 8, got {side}")
    if len(specs) != len(placements):
        raise DimensionMismatch(
            f"{len(specs)} specs vs {len(placements)} placements")
    if amplitudes is None:
        amplitudes = np.ones(len(specs))
    scene = np.zeros((side, side))
    for spec, params, amp in zip(specs, placements, amplitudes):
        scene += amp * warp(render_gabor(spec, side), params, out_side=side)
    if noise_sigma > 0.0:
        if rng is None:
            rng = np.random.default_rng(seed)
        scene = scene + noise_sigma * rng.standard_normal((side, side))
    return scene


@dataclass(frozen=True)
class SynthSceneConfig:
    """Everything needed to generate a deterministic scene dataset.

    Scenes are sums of ``gabors_min..gabors_max`` warped copies of one
    template, amplitudes uniform in ``amplitude_range``, placements uniform
    from ``placement`` (whose own seed is unused here; scene randomness
    flows from ``seed``).
    """

    side: int = 16
    count: int = 500
    seed: int = 0
    noise_sigma: float = 0.02
    gabors_min: int = 2
    gabors_max: int = 4
    amplitude_range: Tuple[float, float] = (0.6, 1.4)
    template: GaborSpec = GaborSpec(wavelength=6.0, orientation=0.0, phase=0.0,
                                    envelope_sigma=2.0, aspect=1.0)
    placement: TransformPrior = field(default_factory=lambda: TransformPrior(
        alpha_range=(-0.25, 0.25), beta_range=(-0.25, 0.25),
        theta_range=(0.0, 2.0 * np.pi),
        delta_range=(-4.0, 4.0), eta_range=(-4.0, 4.0)))

    def __post_init__(self):
        if self.side < 8:
            raise ValueError(f"side must be >= 8, got {self.side}")
        if not 1 <= self.gabors_min <= self.gabors_max:
            raise ValueError("need 1 <= gabors_min <= gabors_max")


def generate_scenes(cfg: SynthSceneConfig, source: str = "synth"):
    """Materialize the dataset; returns (patches, ground_truth).

    ``patches`` is a list of WhitenedPatch-shaped observations (scenes are
    synthetic, already band-limited, and are not separately whitened).
    ``ground_truth[i]`` is the (placements, amplitudes) pair behind scene i.
    """
    rng = substream(cfg.seed, "scenes")
    bounds = cfg.placement.ranges()
    lo, hi = cfg.amplitude_range
    patches = []
    truth = []
    for i in range(cfg.count):
        n = int(rng.integers(cfg.gabors_min, cfg.gabors_max + 1))
        draws = rng.uniform(bounds[:, 0], bounds[:, 1], size=(n, 5))
        placements = [TransformParams.from_array(row) for row in draws]
        amplitudes = rng.uniform(lo, hi, size=n)
        scene = synth_gabor_scene([cfg.template] * n, placements, cfg.side,
                                  noise_sigma=cfg.noise_sigma, rng=rng,
                                  amplitudes=amplitudes)
        patches.append(WhitenedPatch(scene, provenance=(source, i)))
        truth.append((placements, amplitudes))
    return patches, truth


_SYNTH_INT_KEYS = {"side", "count", "seed", "gabors_min", "gabors_max"}
_SYNTH_FLOAT_KEYS = {
    "noise_sigma", "wavelength", "orientation", "phase", "envelope_sigma",
    "aspect", "amplitude_low", "amplitude_high",
    "alpha_low", "alpha_high", "beta_low", "beta_high",
    "theta_low", "theta_high", "delta_low", "delta_high", "eta_low", "eta_high",
}


def _parse_synth_entries(entries, where: str) -> SynthSceneConfig:
    values = {}
    for label, entry in entries:
        entry = entry.split("#", 1)[0].strip()
        if not entry:
            continue
        if "=" not in entry:
            raise FormatError(f"{where}:{label}: expected 'key = value'")
        key, _, raw = entry.partition("=")
        key, raw = key.strip(), raw.strip()
        try:
            if key in _SYNTH_INT_KEYS:
                values[key] = int(raw)
            elif key in _SYNTH_FLOAT_KEYS:
                values[key] = float(raw)
            else:
                raise FormatError(f"{where}:{label}: unknown key {key!r}")
        except ValueError as err:
            raise FormatError(f"{where}:{label}: bad value for {key}: {raw!r}") from err
    return _synth_config_from_values(values)


def parse_synth_spec(path) -> SynthSceneConfig:
    """Read the plain-text key=value scene description.

    Lines are ``key = value``; ``#`` starts a comment.  Unknown keys are an
    error so typos do not silently fall back to defaults.
    """
    with open(path, "r", encoding="utf-8") as fh:
        entries = [(lineno, line) for lineno, line in enumerate(fh, start=1)]
    return _parse_synth_entries(entries, str(path))


def synth_spec_from_string(text: str) -> SynthSceneConfig:
    """Parse an inline comma-separated scene description, e.g.
    ``"side=16,count=200,seed=3"``.  Same keys as parse_synth_spec."""
    entries = [(i + 1, part) for i, part in enumerate(text.split(","))]
    return _parse_synth_entries(entries, "synth spec")


def _synth_config_from_values(values: dict) -> SynthSceneConfig:
    base = SynthSceneConfig()
    template = GaborSpec(
        wavelength=values.pop("wavelength", base.template.wavelength),
        orientation=values.pop("orientation", base.template.orientation),
        phase=values.pop("phase", base.template.phase),
        envelope_sigma=values.pop("envelope_sigma", base.template.envelope_sigma),
        aspect=values.pop("aspect", base.template.aspect),
    )
    pl = base.placement

    def rng_pair(name, default):
        return (values.pop(f"{name}_low", default[0]),
                values.pop(f"{name}_high", default[1]))

    placement = TransformPrior(
        alpha_range=rng_pair("alpha", pl.alpha_range),
        beta_range=rng_pair("beta", pl.beta_range),
        theta_range=rng_pair("theta", pl.theta_range),
        delta_range=rng_pair("delta", pl.delta_range),
        eta_range=rng_pair("eta", pl.eta_range),
    )
    amplitude = (values.pop("amplitude_low", base.amplitude_range[0]),
                 values.pop("amplitude_high", base.amplitude_range[1]))
    return SynthSceneConfig(
        side=values.pop("side", base.side),
        count=values.pop("count", base.count),
        seed=values.pop("seed", base.seed),
        noise_sigma=values.pop("noise_sigma", base.noise_sigma),
        gabors_min=values.pop("gabors_min", base.gabors_min),
        gabors_max=values.pop("gabors_max", base.gabors_max),
        amplitude_range=amplitude,
        template=template,
        placement=placement,
    )
