"""Grid field primitives: bilinear sampling, upsampling, label extraction.

Fields are plain numpy arrays: (H, W) scalars, (H, W, 2) 2-vector fields
with components (du, dv) in pixels, (H, W, C) channel stacks. Row-major,
origin top-left, u = column, v = row.
"""

import struct

import numpy as np

from . import kernels
from .errors import InvalidInputError

PGF_MAGIC = b"PGF1"


def _as_3d(field):
    field = np.asarray(field, dtype=np.float64)
    if field.ndim == 2:
        return field[..., None], True
    if field.ndim == 3:
        return field, False
    raise InvalidInputError(f"expected a 2-D or 3-D field, got shape {field.shape}")


def bilinear_sample(field, u, v):
    """Sample a field at a real coordinate with zero padding at borders.

    Weights are (1-|u-u'|)(1-|v-v'|) over the four integer neighbors;
    out-of-bounds neighbors contribute zero with their weight retained.
    Returns a scalar for (H, W) input, a vector of channels otherwise.
    """
    if not (np.isfinite(u) and np.isfinite(v)):
        raise InvalidInputError(f"non-finite sample coordinate ({u}, {v})")
    arr, squeeze = _as_3d(field)
    if arr.size == 0:
        raise InvalidInputError("cannot sample an empty field")
    out = kernels.sample_bilinear(arr, np.array([float(u)]), np.array([float(v)]))[0]
    return float(out[0]) if squeeze else out


def bilinear_sample_many(field, us, vs):
    """Vectorized :func:`bilinear_sample` over coordinate arrays."""
    us = np.ascontiguousarray(us, dtype=np.float64)
    vs = np.ascontiguousarray(vs, dtype=np.float64)
    if not (np.isfinite(us).all() and np.isfinite(vs).all()):
        raise InvalidInputError("non-finite sample coordinates")
    arr, squeeze = _as_3d(field)
    out = kernels.sample_bilinear(arr, us, vs)
    return out[:, 0] if squeeze else out


def upsample_bilinear(field, factor):
    """Upsample by an integer factor, half-pixel convention, edges replicated.

    Output position u reads the source at (u + 0.5) / factor - 0.5.
    """
    factor = int(factor)
    if factor < 1:
        raise InvalidInputError(f"upsampling factor must be >= 1, got {factor}")
    arr, squeeze = _as_3d(field)
    if factor == 1:
        out = arr.copy()
    else:
        out = kernels.upsample(arr, factor)
    return out[..., 0] if squeeze else out


def argmax_labels(probs):
    """Per-pixel argmax channel of an (H, W, C) stack; ties take the lowest index."""
    probs = np.asarray(probs)
    if probs.ndim != 3:
        raise InvalidInputError(f"expected (H, W, C) probabilities, got {probs.shape}")
    return np.argmax(probs, axis=2).astype(np.int64)


def one_hot(labels, n_channels):
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros(labels.shape + (n_channels,))
    v, u = np.mgrid[0 : labels.shape[0], 0 : labels.shape[1]]
    out[v, u, labels] = 1.0
    return out


def write_pgf(path, field):
    """Write a field dump: magic 'PGF1', u32 LE width/height/channels, f32 LE data."""
    arr, _ = _as_3d(field)
    h, w, c = arr.shape
    with open(path, "wb") as fh:
        fh.write(PGF_MAGIC)
        fh.write(struct.pack("<III", w, h, c))
        fh.write(arr.astype("<f4").tobytes())


def read_pgf(path):
    """Read a 'PGF1' dump; returns (H, W) for single-channel, else (H, W, C)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != PGF_MAGIC:
            raise InvalidInputError(f"{path}: bad magic {magic!r}, expected {PGF_MAGIC!r}")
        w, h, c = struct.unpack("<III", fh.read(12))
        data = np.frombuffer(fh.read(4 * w * h * c), dtype="<f4")
    if data.size != w * h * c:
        raise InvalidInputError(f"{path}: truncated payload")
    arr = data.reshape(h, w, c).astype(np.float64)
    return arr[..., 0] if c == 1 else arr
