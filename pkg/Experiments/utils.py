"""
File plumbing for experiment artifacts: 8-bit PGM images, CSV tables
and JSON metrics.

Images are written as binary PGM (P5, maxval 255). Gray levels are
rounded to the nearest integer and clipped to [0, 255]; ``scaling=
"stretch"`` first maps [min, max] affinely onto [0, 255]. Integer images
inside [0, 255] therefore survive a write/read round trip unchanged.
"""
import csv
import json
import logging
import math
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from Main.exceptions import ImageFormatError, ShapeError

logger = logging.getLogger(__name__)

PGM_MAGIC = b"P5"
PGM_MAXVAL = 255


# ============================================================
#   PGM IMAGES
# ============================================================

def to_8bit(image, scaling="clip"):
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ShapeError(f"PGM images are 2-D, got shape {image.shape}")
    if scaling == "stretch":
        lo, hi = float(image.min()), float(image.max())
        image = (image - lo) * (PGM_MAXVAL / (hi - lo)) if hi > lo else np.zeros_like(image)
    elif scaling != "clip":
        raise ValueError(f"unknown scaling {scaling!r}")
    return np.clip(np.rint(image), 0, PGM_MAXVAL).astype(np.uint8)


def write_pgm(path, image, scaling="clip"):
    path = Path(path)
    Image.fromarray(to_8bit(image, scaling)).save(path, format="PPM")
    logger.debug(f"wrote {path}")
    return path


def _skip_blanks(data, pos):
    while pos < len(data):
        if data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        elif data[pos:pos + 1].isspace():
            pos += 1
        else:
            break
    return pos


def parse_pgm_header(path, data):
    """Return (width, height, offset of the first pixel byte)."""
    if data[:2] != PGM_MAGIC:
        raise ImageFormatError(path, 0, f"expected magic {PGM_MAGIC!r}, got {data[:2]!r}")
    pos = 2
    values = []
    for field in ("width", "height", "maxval"):
        if pos >= len(data) or not (data[pos:pos + 1].isspace() or data[pos:pos + 1] == b"#"):
            raise ImageFormatError(path, pos, f"expected whitespace before {field}")
        pos = _skip_blanks(data, pos)
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise ImageFormatError(path, start, f"expected a decimal {field}")
        value = int(data[start:pos])
        if value <= 0:
            raise ImageFormatError(path, start, f"{field} must be positive, got {value}")
        values.append(value)

    width, height, maxval = values
    if maxval != PGM_MAXVAL:
        raise ImageFormatError(path, pos, f"only 8-bit images with maxval {PGM_MAXVAL} are supported, got {maxval}")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ImageFormatError(path, pos, "expected a single whitespace byte before the pixel data")
    return width, height, pos + 1


def read_pgm(path):
    """Read a P5 image as a float array of gray levels."""
    path = Path(path)
    data = path.read_bytes()
    width, height, offset = parse_pgm_header(path, data)
    expected = width * height
    available = len(data) - offset
    if available < expected:
        raise ImageFormatError(path, len(data), f"pixel data truncated: {available} of {expected} bytes")
    try:
        with Image.open(path) as image:
            pixels = np.asarray(image.convert("L"), dtype=float)
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageFormatError(path, offset, f"undecodable pixel data: {exc}") from exc
    if pixels.shape != (height, width):
        raise ImageFormatError(path, offset, f"decoded {pixels.shape}, header says {(height, width)}")
    return pixels


# ============================================================
#   TABLES & METRICS
# ============================================================

def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def jsonable(value):
    """Plain-JSON copy of metric values; non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    return value


def write_json(path, data):
    path = Path(path)
    path.write_text(json.dumps(jsonable(data), indent=2, sort_keys=True) + "\n")
    return path
