import numpy as np
import pytest

from partgraph.errors import InvalidInputError
from partgraph.render import PART_COLORS, colorize, read_ppm, render_parsing, write_ppm


def test_colorize_background_black_and_hues():
    parts = np.array([[0, 1], [2, 0]])
    ids = np.array([[0, 1], [1, 0]])
    img = colorize(parts, ids)
    assert img.dtype == np.uint8
    assert (img[0, 0] == 0).all() and (img[1, 1] == 0).all()
    # a lone instance sits at the ramp start (45% brightness)
    assert np.array_equal(img[0, 1], np.rint(PART_COLORS[1] * 0.45).astype(np.uint8))


def test_colorize_instance_brightness_ramp():
    parts = np.array([[1, 1, 1]])
    ids = np.array([[1, 2, 3]])
    img = colorize(parts, ids).astype(float)
    b = img.sum(axis=2)[0]
    assert b[0] < b[1] < b[2]
    assert np.allclose(img[0, 2], PART_COLORS[1], atol=0.5)


def test_colorize_validation():
    with pytest.raises(InvalidInputError):
        colorize(np.zeros((2, 2), int), np.zeros((3, 2), int))
    with pytest.raises(InvalidInputError):
        colorize(np.full((2, 2), 99), np.zeros((2, 2), int))


def test_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
    path = tmp_path / "img.ppm"
    write_ppm(path, img)
    raw = path.read_bytes()
    assert raw.startswith(b"P6\n7 5\n255\n")
    assert np.array_equal(read_ppm(path), img)


def test_read_ppm_tolerates_comments(tmp_path):
    path = tmp_path / "c.ppm"
    body = bytes(range(12))
    path.write_bytes(b"P6\n# a comment\n2 2\n255\n" + body)
    img = read_ppm(path)
    assert img.shape == (2, 2, 3)
    assert img.tobytes() == body


def test_read_ppm_rejects_other_formats(tmp_path):
    path = tmp_path / "p3.ppm"
    path.write_bytes(b"P3\n2 2\n255\n0 0 0")
    with pytest.raises(InvalidInputError):
        read_ppm(path)


def test_write_ppm_validation(tmp_path):
    with pytest.raises(InvalidInputError):
        write_ppm(tmp_path / "x.ppm", np.zeros((2, 2, 3), dtype=np.float64))


def test_render_parsing_writes_file(tmp_path, scene2):
    path = tmp_path / "scene.ppm"
    render_parsing(path, scene2.part_labels, scene2.instance_ids)
    img = read_ppm(path)
    assert img.shape == (256, 256, 3)
    fg = scene2.part_labels > 0
    assert (img[~fg] == 0).all()
    assert (img[fg].sum(axis=1) > 0).all()
