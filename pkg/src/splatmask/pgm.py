"""PGM (P2/P5) reading and writing for fields, masks, and level sets.

Fields are stored quantized: a value v in [0, 1] becomes round(v * maxval).
Reading scales back to [0, 1], so write-then-read agrees with the original
within 1/(2*maxval). Level-set grids are not confined to [0, 1]; they are
affinely mapped there before writing and the mapping is recorded in a JSON
sidecar next to the image.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import (
    PgmMalformedHeaderError,
    PgmTruncatedError,
    PgmUnsupportedMagicError,
)
from .grid import as_field, as_mask

MAX_MAXVAL = 65535


def _read_header_tokens(data: bytes):
    """Yield whitespace-separated header tokens, skipping # comments.

    Returns (tokens, offset) where offset points one byte past the
    whitespace character that terminated the last token consumed.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < 4:
        # skip whitespace and comments
        while pos < n:
            c = data[pos : pos + 1]
            if c in b" \t\r\n":
                pos += 1
            elif c == b"#":
                nl = data.find(b"\n", pos)
                pos = n if nl < 0 else nl + 1
            else:
                break
        start = pos
        while pos < n and data[pos : pos + 1] not in b" \t\r\n#":
            pos += 1
        if pos == start:
            raise PgmMalformedHeaderError("unexpected end of file inside PGM header")
        tokens.append(data[start:pos])
        if len(tokens) < 4:
            continue
        # exactly one whitespace byte separates maxval from the raster
        if pos < n and data[pos : pos + 1] in b" \t\r\n":
            pos += 1
    return tokens, pos


def read_pgm(path) -> np.ndarray:
    """Read a P2 or P5 PGM file into a float64 field scaled to [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 2:
        raise PgmMalformedHeaderError(f"{path}: file too short to hold a PGM header")
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PgmUnsupportedMagicError(
            f"{path}: unsupported magic number {magic!r} (want P2 or P5)"
        )
    tokens, offset = _read_header_tokens(data)
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise PgmMalformedHeaderError(f"{path}: non-numeric header field") from exc
    if width < 1 or height < 1:
        raise PgmMalformedHeaderError(f"{path}: bad dimensions {width}x{height}")
    if not 1 <= maxval <= MAX_MAXVAL:
        raise PgmMalformedHeaderError(f"{path}: maxval {maxval} outside [1, {MAX_MAXVAL}]")

    count = width * height
    if magic == b"P2":
        try:
            samples = np.array(data[offset:].split(), dtype=np.int64)
        except ValueError as exc:
            raise PgmTruncatedError(f"{path}: non-numeric P2 sample") from exc
        if samples.size < count:
            raise PgmTruncatedError(
                f"{path}: expected {count} samples, found {samples.size}"
            )
        samples = samples[:count]
    else:
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        payload = data[offset : offset + count * dtype.itemsize]
        if len(payload) < count * dtype.itemsize:
            raise PgmTruncatedError(
                f"{path}: raster holds {len(payload)} bytes, "
                f"need {count * dtype.itemsize}"
            )
        samples = np.frombuffer(payload, dtype=dtype).astype(np.int64)
    if samples.min() < 0 or samples.max() > maxval:
        raise PgmTruncatedError(f"{path}: sample outside [0, maxval]")
    return samples.reshape(height, width).astype(np.float64) / maxval


def write_pgm(field: np.ndarray, path, maxval: int = MAX_MAXVAL, binary: bool = True) -> None:
    """Write a [0, 1] field as PGM, quantized to round(v * maxval).

    binary=True writes P5 (16-bit big-endian when maxval > 255); otherwise P2.
    """
    field = as_field(field)
    if not 1 <= maxval <= MAX_MAXVAL:
        raise ValueError(f"maxval {maxval} outside [1, {MAX_MAXVAL}]")
    if field.min() < 0.0 or field.max() > 1.0:
        raise ValueError("field values must lie in [0, 1]; rescale before writing")
    q = np.rint(field * maxval).astype(np.int64)
    height, width = field.shape
    header = f"P5\n{width} {height}\n{maxval}\n" if binary else f"P2\n{width} {height}\n{maxval}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
            fh.write(q.astype(dtype).tobytes())
        else:
            lines = [" ".join(str(v) for v in row) for row in q]
            fh.write(("\n".join(lines) + "\n").encode("ascii"))


def read_mask(path) -> np.ndarray:
    """Read a PGM and binarize at 0.5 into a {0, 1} mask."""
    return (read_pgm(path) >= 0.5).astype(np.uint8)


def write_mask(mask: np.ndarray, path, binary: bool = True) -> None:
    """Write a binary mask as a maxval-1 PGM (exact round trip)."""
    mask = as_mask(mask)
    write_pgm(mask.astype(np.float64), path, maxval=1, binary=binary)


def write_lsf(lsf: np.ndarray, path) -> None:
    """Write a signed-distance grid as PGM plus a JSON mapping sidecar.

    The grid is mapped to [0, 1] via (v - lo) / (hi - lo); lo and hi are
    stored in <path>.json so read_lsf can invert the mapping.
    """
    lsf = np.asarray(lsf, dtype=np.float64)
    lo = float(lsf.min())
    hi = float(lsf.max())
    span = hi - lo
    scaled = np.zeros_like(lsf) if span == 0.0 else (lsf - lo) / span
    write_pgm(scaled, path)
    sidecar = {"lo": lo, "hi": hi, "width": lsf.shape[1], "height": lsf.shape[0]}
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, sort_keys=True)
        fh.write("\n")


def read_lsf(path) -> np.ndarray:
    """Read a level-set grid written by write_lsf."""
    sidecar_path = str(path) + ".json"
    if not os.path.exists(sidecar_path):
        raise PgmMalformedHeaderError(f"{path}: missing sidecar {sidecar_path}")
    with open(sidecar_path) as fh:
        sidecar = json.load(fh)
    scaled = read_pgm(path)
    lo, hi = float(sidecar["lo"]), float(sidecar["hi"])
    return scaled * (hi - lo) + lo
