import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rgbd_facekit.imaging import (ImageFormatError, Rect, crop, load_color, load_depth,
                                  resize, save_color, save_depth, to_gray)


def test_load_color_two_pixels(tmp_path):
    p = tmp_path / "a.ppm"
    p.write_bytes(b"P6\n2 1\n255\n" + bytes([255, 0, 0, 0, 0, 255]))
    f = load_color(p)
    assert f.shape == (1, 2, 3)
    assert f.ravel().tolist() == [255, 0, 0, 0, 0, 255]


def test_header_comments_are_ignored(tmp_path):
    p = tmp_path / "c.ppm"
    p.write_bytes(b"P6 # made by hand\n1 # width\n1\n255\n" + bytes([1, 2, 3]))
    assert load_color(p).ravel().tolist() == [1, 2, 3]


@pytest.mark.parametrize("body, match", [
    (b"P6 0 0 255\n", "zero dimension"),
    (b"P6\n4 4\n255\n" + bytes(10), "truncated"),
    (b"P6\n1 1\n65535\n" + bytes(6), "maxval"),
    (b"P3\n1 1\n255\n0 0 0", "magic"),
    (b"P6\n1 x\n255\n", "malformed"),
])
def test_load_color_errors(tmp_path, body, match):
    p = tmp_path / "bad.ppm"
    p.write_bytes(body)
    with pytest.raises(ImageFormatError, match=match):
        load_color(p)


def test_load_color_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_color(tmp_path / "nope.ppm")


def test_load_depth_big_endian(tmp_path):
    p = tmp_path / "d.pgm"
    p.write_bytes(b"P5\n1 1\n65535\n\x04\x00")
    assert load_depth(p).tolist() == [[1024]]


def test_load_depth_rejects_8bit(tmp_path):
    p = tmp_path / "d.pgm"
    p.write_bytes(b"P5\n1 1\n255\n\x00")
    with pytest.raises(ImageFormatError, match="maxval"):
        load_depth(p)


def test_depth_roundtrip_3x2(tmp_path):
    d = np.array([[0, 1, 65535], [256, 1024, 7]], dtype=np.uint16)
    save_depth(d, tmp_path / "d.pgm")
    back = load_depth(tmp_path / "d.pgm")
    assert back.dtype == np.uint16
    np.testing.assert_array_equal(back, d)


def test_save_color_black_pixel_body(tmp_path):
    save_color(np.zeros((1, 1, 3), np.uint8), tmp_path / "k.ppm")
    raw = (tmp_path / "k.ppm").read_bytes()
    assert raw.endswith(b"\n\x00\x00\x00")
    assert raw == b"P6\n1 1\n255\n\x00\x00\x00"


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint16, st.tuples(st.integers(1, 9), st.integers(1, 9))))
def test_depth_roundtrip_property(tmp_path_factory, d):
    p = tmp_path_factory.mktemp("rt") / "d.pgm"
    save_depth(d, p)
    np.testing.assert_array_equal(load_depth(p), d)


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 9), st.integers(1, 9), st.just(3))))
def test_color_roundtrip_property(tmp_path_factory, f):
    p = tmp_path_factory.mktemp("rt") / "c.ppm"
    save_color(f, p)
    np.testing.assert_array_equal(load_color(p), f)


def test_to_gray_examples():
    px = np.array([[[255, 255, 255], [255, 0, 0], [0, 0, 0]]], dtype=np.uint8)
    assert to_gray(px).tolist() == [[255, 76, 0]]


def test_to_gray_exhaustive():
    # every 24-bit color, checked against divmod-based half-up rounding
    v = np.arange(1 << 24, dtype=np.uint32)
    rgb = np.stack([(v >> 16) & 255, (v >> 8) & 255, v & 255], axis=-1).astype(np.uint8)
    got = to_gray(rgb.reshape(4096, 4096, 3)).ravel().astype(np.int64)
    c = rgb.astype(np.int64)
    acc = 299 * c[:, 0] + 587 * c[:, 1] + 114 * c[:, 2]
    q, r = np.divmod(acc, 1000)
    np.testing.assert_array_equal(got, q + (r >= 500))


def test_crop_cases():
    f = np.arange(16, dtype=np.uint8).reshape(4, 4)
    np.testing.assert_array_equal(crop(f, Rect(0, 0, 4, 4)), f)
    assert crop(f, Rect(1, 1, 2, 2)).ravel().tolist() == [5, 6, 9, 10]
    assert crop(f, Rect(1, 0, 5, 2)).shape == (2, 3)  # 2 px past the right edge
    with pytest.raises(ValueError):
        crop(f, Rect(10, 10, 2, 2))


def test_resize_identity_and_constant():
    rng = np.random.default_rng(0)
    g = rng.integers(0, 256, (7, 5), dtype=np.uint8)
    np.testing.assert_array_equal(resize(g, 5, 7), g)
    d = rng.integers(0, 65536, (7, 5), dtype=np.uint16)
    np.testing.assert_array_equal(resize(d, 5, 7), d)
    assert resize(np.full((1, 1), 7, np.uint8), 3, 3).tolist() == [[7] * 3] * 3


def test_resize_bilinear_two_pixels():
    # half-pixel centres at -0.25, 0.25, 0.75, 1.25 (clamped) -> 0, 25, 75, 100
    out = resize(np.array([[0, 100]], np.uint8), 4, 1)
    assert out.tolist() == [[0, 25, 75, 100]]


def _bilinear_oracle(img, out_w, out_h):
    h, w = img.shape
    out = np.zeros((out_h, out_w), dtype=np.int64)
    for oy in range(out_h):
        sy = min(max((oy + 0.5) * h / out_h - 0.5, 0.0), h - 1)
        y0 = int(sy)
        y1 = min(y0 + 1, h - 1)
        wy = sy - y0
        for ox in range(out_w):
            sx = min(max((ox + 0.5) * w / out_w - 0.5, 0.0), w - 1)
            x0 = int(sx)
            x1 = min(x0 + 1, w - 1)
            wx = sx - x0
            top = img[y0, x0] * (1 - wx) + img[y0, x1] * wx
            bot = img[y1, x0] * (1 - wx) + img[y1, x1] * wx
            out[oy, ox] = int(np.floor(top * (1 - wy) + bot * wy + 0.5))
    return out


@pytest.mark.parametrize("shape, out", [((5, 4), (9, 3)), ((3, 3), (8, 8)), ((10, 12), (5, 4))])
def test_resize_gray_matches_scalar_oracle(shape, out):
    img = np.random.default_rng(3).integers(0, 256, shape, dtype=np.uint8)
    np.testing.assert_array_equal(resize(img, *out), _bilinear_oracle(img, *out))


def test_depth_nearest_ties_go_down():
    # 2 -> 4: centres at -0.25, 0.25, 0.75, 1.25 -> 0, 0, 1, 1
    d = np.array([[10, 20]], np.uint16)
    assert resize(d, 4, 1).tolist() == [[10, 10, 20, 20]]
    # 4 -> 2: centres at 0.5, 2.5 -> exact ties, pick 0 and 2
    d = np.array([[1, 2, 3, 4]], np.uint16)
    assert resize(d, 2, 1).tolist() == [[1, 3]]


@settings(max_examples=60, deadline=None)
@given(arrays(np.uint16, st.tuples(st.integers(1, 12), st.integers(1, 12))),
       st.integers(1, 20), st.integers(1, 20))
def test_depth_resize_never_invents_values(d, ow, oh):
    out = resize(d, ow, oh)
    assert out.shape == (oh, ow)
    assert set(np.unique(out)) <= set(np.unique(d))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 255), st.integers(1, 9), st.integers(1, 9), st.integers(1, 20), st.integers(1, 20))
def test_constant_gray_stays_constant(v, w, h, ow, oh):
    out = resize(np.full((h, w), v, np.uint8), ow, oh)
    assert (out == v).all()
