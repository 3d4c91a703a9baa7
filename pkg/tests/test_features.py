import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import textured_image

from monofollow.boxes import BBox
from monofollow.errors import ImageTooSmall, InvalidConfig, ShapeMismatch
from monofollow.features import (
    FlowMatch,
    GrayImage,
    build_pyramid,
    gradients,
    lk_track,
    load_pgm,
    save_pgm,
    shi_tomasi,
    split_foreground,
)
from monofollow.geometry import Pixel


def _near_all(corners, targets, tol=1.0):
    pos = np.array([c.position for c in corners])
    return all(np.min(np.max(np.abs(pos - t), axis=1)) <= tol for t in targets)


def test_constant_image_has_no_corners():
    assert shi_tomasi(GrayImage(np.full((40, 40), 0.3))) == []


def test_image_too_small():
    with pytest.raises(ImageTooSmall):
        shi_tomasi(GrayImage(np.zeros((5, 20))), window=5)


def test_bad_window_and_intensity():
    with pytest.raises(InvalidConfig):
        shi_tomasi(GrayImage(np.zeros((20, 20))), window=4)
    with pytest.raises(InvalidConfig):
        GrayImage(np.full((4, 4), 1.5))


def test_checkerboard_block_crossings():
    img = np.zeros((40, 40))
    img[:20, :20] = img[20:, 20:] = 1.0
    corners = shi_tomasi(GrayImage(img), min_distance=3)
    assert corners and _near_all(corners[:1], [(20.0, 20.0)])
    # larger board: every interior crossing is found
    board = np.kron((np.add.outer(np.arange(4), np.arange(4)) % 2).astype(float), np.ones((12, 12)))
    crossings = [(12.0 * i, 12.0 * j) for i in (1, 2, 3) for j in (1, 2, 3)]
    corners = shi_tomasi(GrayImage(board), min_distance=3, quality_level=0.1)
    assert _near_all(corners, crossings)


def test_white_square_vertices():
    img = np.zeros((50, 50))
    img[15:35, 10:30] = 1.0
    corners = shi_tomasi(GrayImage(img), max_corners=4, min_distance=5)
    assert len(corners) == 4
    assert _near_all(corners, [(10, 15), (30, 15), (10, 35), (30, 35)])


def test_corners_sorted_and_spaced():
    corners = shi_tomasi(GrayImage(textured_image()), max_corners=80, min_distance=7.0)
    q = [c.quality for c in corners]
    assert q == sorted(q, reverse=True) and len(corners) <= 80
    pos = np.array([c.position for c in corners])
    d = np.linalg.norm(pos[:, None] - pos[None], axis=-1) + np.eye(len(pos)) * 1e9
    assert d.min() >= 7.0


def test_gradients_central_difference():
    img = np.outer(np.arange(5.0), np.ones(6)) * 0.1  # intensity grows down the rows
    gx, gy = gradients(img)
    assert np.allclose(gx, 0) and np.allclose(gy[1:-1], 0.1)


def test_pyramid_box_average():
    img = np.arange(16.0).reshape(4, 4) / 16
    pyr = build_pyramid(img, 3)
    assert pyr[1].shape == (2, 2)
    assert pyr[1][0, 0] == pytest.approx((0 + 1 + 4 + 5) / 64)


def test_zero_motion():
    img = GrayImage(textured_image())
    corners = shi_tomasi(img, max_corners=40)
    for m in lk_track(img, img, corners):
        assert m.converged and max(map(abs, m.flow)) < 0.01


@pytest.mark.parametrize("shift", [(2.0, 3.0), (-1.5, 0.75), (4.0, -3.0)])
def test_translation_recovery(shift):
    prev = GrayImage(textured_image())
    nxt = GrayImage(textured_image(shift=shift))
    corners = [c for c in shi_tomasi(prev, max_corners=150) if 15 < c.position.u < 145 and 15 < c.position.v < 105]
    matches = lk_track(prev, nxt, corners)
    err = [np.hypot(m.flow[0] - shift[0], m.flow[1] - shift[1]) for m in matches if m.converged]
    assert len(err) >= 0.9 * len(corners)
    assert np.mean(err) < 0.2


def test_textureless_patch_does_not_converge():
    img = np.full((60, 60), 0.5)
    img[:, :8] = np.linspace(0, 1, 8)  # texture far from the probe point
    m = lk_track(GrayImage(img), GrayImage(img), [Pixel(40.0, 30.0)], window=7, levels=1)
    assert not m[0].converged


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        lk_track(GrayImage(np.zeros((10, 10))), GrayImage(np.zeros((10, 12))), [])


def test_split_examples():
    box = BBox(0, 0, 10, 10)
    inside = [FlowMatch(Pixel(1, 1), Pixel(2, 2), True), FlowMatch(Pixel(10, 5), Pixel(10, 5), True)]
    fg, bg = split_foreground(inside, box)
    assert fg == inside and bg == []


pix = st.builds(Pixel, st.floats(-20, 40, allow_nan=False), st.floats(-20, 40, allow_nan=False))


@settings(max_examples=200, deadline=None)
@given(st.lists(pix, max_size=30))
def test_split_partitions_against_brute_force(points):
    box = BBox(0, 5, 20, 25)
    matches = [FlowMatch(p, p, True) for p in points]
    fg, bg = split_foreground(matches, box)
    assert len(fg) + len(bg) == len(matches)
    assert fg == [m for m in matches if 0 <= m.prev.u <= 20 and 5 <= m.prev.v <= 25]
    assert bg == [m for m in matches if not (0 <= m.prev.u <= 20 and 5 <= m.prev.v <= 25)]


def test_pgm_round_trip(tmp_path):
    img = GrayImage(np.round(textured_image(20, 30) * 255) / 255)
    save_pgm(tmp_path / "a.pgm", img)
    back = load_pgm(tmp_path / "a.pgm")
    assert np.allclose(back.intensities, img.intensities, atol=1e-12)
