"""Visualization: part-label / instance-id grids rendered to binary PPM (P6).

Colors combine a fixed hue per part class with a brightness ramp per
instance, so both the semantic parsing and the instance split are readable
in one image. Background stays black.
"""

import numpy as np

from .errors import InvalidInputError

# One RGB hue per part class (index = class id); class 0 is background.
PART_COLORS = np.array(
    [
        [0, 0, 0],  # background
        [230, 60, 60],  # head
        [60, 120, 230],  # torso
        [60, 200, 120],  # upper arm
        [230, 200, 60],  # lower arm
        [200, 90, 220],  # upper leg
        [80, 220, 220],  # lower leg
    ],
    dtype=np.float64,
)


def colorize(part_labels, instance_ids):
    """(H, W, 3) uint8 image: part hue scaled by per-instance brightness."""
    part_labels = np.asarray(part_labels)
    instance_ids = np.asarray(instance_ids)
    if part_labels.shape != instance_ids.shape or part_labels.ndim != 2:
        raise InvalidInputError("part and instance grids must share a 2-D shape")
    if part_labels.min() < 0 or part_labels.max() >= PART_COLORS.shape[0]:
        raise InvalidInputError("part label out of palette range")
    rgb = PART_COLORS[part_labels]
    n_inst = int(instance_ids.max())
    if n_inst > 0:
        # Brightness ramps from 45% (instance 1) to 100% (last instance).
        levels = np.linspace(0.45, 1.0, n_inst)
        scale = np.ones(part_labels.shape, dtype=np.float64)
        fg = instance_ids > 0
        scale[fg] = levels[instance_ids[fg] - 1]
        rgb = rgb * scale[..., None]
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def write_ppm(path, image):
    """Write an (H, W, 3) uint8 array as binary PPM (P6, maxval 255)."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise InvalidInputError("expected an (H, W, 3) uint8 image")
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def read_ppm(path):
    """Read a binary PPM (P6, maxval 255) into an (H, W, 3) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P6" or fields[3] != b"255":
        raise InvalidInputError("expected a P6 file with maxval 255")
    w, h = int(fields[1]), int(fields[2])
    pos += 1  # single whitespace byte after the header
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return pixels.reshape(h, w, 3).copy()


def render_parsing(path, part_labels, instance_ids):
    """Colorize a parsing result and write it to ``path`` as PPM."""
    write_ppm(path, colorize(part_labels, instance_ids))
