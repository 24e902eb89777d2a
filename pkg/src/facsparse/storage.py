"""Dictionary persistence and PGM export.

Dictionaries are stored in a small self-describing binary container: a
16-byte header (magic, format version, dictionary kind, flags), three
little-endian uint32 counts (filter side, patch side, m), then little-endian
float64 payload sections.  A factored file always carries the filter and the
m support tuples; the materialized basis and its pre-normalization norms are
optional because they can be rebuilt exactly from the filter and supports.

PGM export writes plain-text (P2) images, min-max scaled per tile, so basis
vectors and filters can be inspected with any image viewer.
"""

import os
import struct
from typing import Optional, Sequence, Union

import numpy as np

from .dictionary import (
    BaselineDictionary,
    FactoredDictionary,
    GenericFilter,
    materialize,
)
from .errors import FormatError, MissingData
from .transforms import TransformParams

MAGIC = b"FSCDICT\x00"
FORMAT_VERSION = 1
_KIND_FACTORED = 1
_KIND_BASELINE = 2
_FLAG_BASIS = 1

_HEADER = struct.Struct("<8sHHHH")
_COUNTS = struct.Struct("<III")


def _float_bytes(arr) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def save_dictionary(path, dictionary: Union[FactoredDictionary, BaselineDictionary],
                    include_basis: bool = True) -> None:
    """Write the container file; ``include_basis`` only matters for the
    factored kind, whose basis is redundant given filter and supports."""
    chunks = []
    if isinstance(dictionary, FactoredDictionary):
        flags = _FLAG_BASIS if include_basis else 0
        chunks.append(_HEADER.pack(MAGIC, FORMAT_VERSION, _KIND_FACTORED, flags, 0))
        chunks.append(_COUNTS.pack(dictionary.filter.side, dictionary.out_side,
                                   dictionary.m))
        chunks.append(_float_bytes(dictionary.filter.patch))
        chunks.append(_float_bytes(np.stack([s.as_array()
                                             for s in dictionary.supports])))
        if include_basis:
            chunks.append(_float_bytes(dictionary.norms))
            chunks.append(_float_bytes(dictionary.basis))
    elif isinstance(dictionary, BaselineDictionary):
        side = int(round(np.sqrt(dictionary.k)))
        if side * side != dictionary.k:
            raise FormatError(f"basis row length {dictionary.k} is not a square")
        chunks.append(_HEADER.pack(MAGIC, FORMAT_VERSION, _KIND_BASELINE,
                                   _FLAG_BASIS, 0))
        chunks.append(_COUNTS.pack(0, side, dictionary.m))
        chunks.append(_float_bytes(dictionary.basis))
    else:
        raise TypeError(f"cannot save {type(dictionary).__name__}")
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def _take_floats(buf: bytes, offset: int, count: int, path, what: str):
    end = offset + 8 * count
    if end > len(buf):
        raise FormatError(f"{path}: truncated {what} section")
    arr = np.frombuffer(buf[offset:end], dtype="<f8").astype(float)
    return arr, end


def load_dictionary(path) -> Union[FactoredDictionary, BaselineDictionary]:
    """Read a container written by save_dictionary.

    A factored file without a stored basis is re-materialized on load, which
    reproduces the saved dictionary bit for bit (the expansion is pure
    arithmetic on the stored filter and supports).
    """
    if not os.path.exists(path):
        raise MissingData(f"no dictionary file at {path}")
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < _HEADER.size + _COUNTS.size:
        raise FormatError(f"{path}: too short for a dictionary container")
    magic, version, kind, flags, _ = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    side_u, side, m = _COUNTS.unpack_from(buf, _HEADER.size)
    offset = _HEADER.size + _COUNTS.size
    if m < 1 or side < 1:
        raise FormatError(f"{path}: bad counts side_u={side_u} side={side} m={m}")

    try:
        if kind == _KIND_FACTORED:
            if side_u < 1:
                raise FormatError(f"{path}: factored file with filter side 0")
            flat, offset = _take_floats(buf, offset, side_u * side_u, path, "filter")
            filt = GenericFilter(flat.reshape(side_u, side_u))
            rows, offset = _take_floats(buf, offset, m * 5, path, "supports")
            supports = [TransformParams.from_array(r) for r in rows.reshape(m, 5)]
            if flags & _FLAG_BASIS:
                norms, offset = _take_floats(buf, offset, m, path, "norms")
                flat, offset = _take_floats(buf, offset, m * side * side, path,
                                            "basis")
                basis = flat.reshape(m, side * side)
            else:
                basis, norms = materialize(filt, supports, side, return_norms=True)
            result = FactoredDictionary(filter=filt, supports=supports,
                                        basis=basis, norms=norms, out_side=side)
        elif kind == _KIND_BASELINE:
            flat, offset = _take_floats(buf, offset, m * side * side, path, "basis")
            result = BaselineDictionary(flat.reshape(m, side * side))
        else:
            raise FormatError(f"{path}: unknown dictionary kind {kind}")
    except ValueError as err:
        raise FormatError(f"{path}: invalid dictionary contents: {err}") from err
    if offset != len(buf):
        raise FormatError(f"{path}: {len(buf) - offset} trailing bytes")
    return result


def _gray_tile(patch) -> np.ndarray:
    """Min-max scale one tile to 0..255 ints; flat tiles become mid gray."""
    arr = np.asarray(patch, dtype=float)
    lo, hi = float(arr.min()), float(arr.max())
    if hi - lo < 1e-12:
        return np.full(arr.shape, 128, dtype=int)
    return np.rint((arr - lo) / (hi - lo) * 255).astype(int)


def write_pgm(path, patch) -> None:
    """Write one image as plain-text PGM (P2), min-max scaled."""
    _write_p2(path, _gray_tile(patch))


def tile_grid(patches: Sequence, cols: Optional[int] = None,
              border: int = 1) -> np.ndarray:
    """Arrange tiles into a grid image, each tile scaled independently."""
    tiles = [np.asarray(getattr(p, "patch", p), dtype=float) for p in patches]
    if not tiles:
        raise ValueError("no tiles to lay out")
    side = tiles[0].shape[0]
    if any(t.shape != (side, side) for t in tiles):
        raise ValueError("tiles must share one square shape")
    n = len(tiles)
    if cols is None:
        cols = int(np.ceil(np.sqrt(n)))
    rows = -(-n // cols)
    h = rows * side + (rows + 1) * border
    w = cols * side + (cols + 1) * border
    grid = np.zeros((h, w), dtype=int)
    for i, tile in enumerate(tiles):
        r, c = divmod(i, cols)
        top = border + r * (side + border)
        left = border + c * (side + border)
        grid[top:top + side, left:left + side] = _gray_tile(tile)
    return grid


def write_pgm_grid(path, patches: Sequence, cols: Optional[int] = None,
                   border: int = 1) -> None:
    """Write a gallery of equally sized tiles as one P2 image."""
    _write_p2(path, tile_grid(patches, cols=cols, border=border))


def _write_p2(path, image: np.ndarray) -> None:
    h, w = image.shape
    lines = ["P2", f"{w} {h}", "255"]
    values = image.ravel().tolist()
    # keep lines short; strict P2 readers cap them at 70 characters
    for start in range(0, len(values), 16):
        lines.append(" ".join(str(v) for v in values[start:start + 16]))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
