from importlib import resources

import numpy as np
import pytest

from rgbd_facekit import features
from rgbd_facekit.detection import load_annotations
from rgbd_facekit.imaging import crop, load_color, load_depth, to_gray
from rgbd_facekit.registration import CalibrationPair, Intrinsics, face_depth_roi, load_calibration
from rgbd_facekit.synthdata import (SceneError, SceneSpec, SubjectSpec, generate, parse_scene,
                                    render_frame, subject_relief, subject_texture,
                                    two_subject_scene, value_noise)


def test_counts(tmp_path):
    out = generate(two_subject_scene(30), tmp_path)
    assert len(list(out.glob("color_*.ppm"))) == 30
    assert len(list(out.glob("depth_*.pgm"))) == 30
    assert load_annotations(out / "annotations.csv").n_rows() == 60


def test_byte_identical_regeneration(tmp_path):
    a = generate(two_subject_scene(5, illumination=True, depth_jitter=3), tmp_path / "a")
    b = generate(two_subject_scene(5, illumination=True, depth_jitter=3), tmp_path / "b")
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()


def test_value_noise_range_and_seed():
    n = value_noise(40, 3)
    assert n.min() >= 0 and n.max() <= 255
    assert not np.array_equal(n, value_noise(40, 4))
    np.testing.assert_array_equal(n, value_noise(40, 3))


def test_static_subject_features_constant():
    s = SubjectSpec("a", 1, 2, size=32, start=(60.0, 60.0))
    scene = SceneSpec(frames=4, subjects=(s,))
    vecs = []
    for f in range(4):
        color, depth, anns = render_frame(scene, f)
        roi = crop(to_gray(color), anns[0].rect)
        vecs.append(features.extract(roi))
    assert all(np.array_equal(vecs[0], v) for v in vecs[1:])


def test_annotation_contains_patch_and_depth_is_rigid():
    scene = two_subject_scene(6)
    s = scene.subjects[0]
    ref = None
    for f in range(6):
        color, depth, anns = render_frame(scene, f)
        r = anns[0].rect
        np.testing.assert_array_equal(crop(color[..., 0], r), subject_texture(s))
        patch = crop(depth, r)
        np.testing.assert_array_equal(patch, s.depth + subject_relief(s))
        ref = patch if ref is None else ref
        np.testing.assert_array_equal(patch, ref)


def test_identity_calibration_closes_loop(tmp_path):
    out = generate(two_subject_scene(8), tmp_path)
    cal = load_calibration(out / "calib.txt")
    anns = load_annotations(out / "annotations.csv")
    for f in range(8):
        depth = load_depth(out / f"depth_{f:04d}.pgm")
        for a in anns[f]:
            assert face_depth_roi(a.rect, (320, 240), depth, cal) == a.rect


def test_translated_calibration_renders_shifted_depth(tmp_path):
    k = Intrinsics(500.0, 500.0, 160.0, 120.0)
    cal = CalibrationPair(k, k, (50.0, 0.0, 0.0))
    s = SubjectSpec("a", 1, 2, size=32, depth=1000, relief_amplitude=0, start=(100.0, 100.0))
    scene = SceneSpec(frames=1, calibration=cal, subjects=(s,))
    color, depth, anns = render_frame(scene, 0)
    r = anns[0].rect
    roi = face_depth_roi(r, (320, 240), depth, cal)
    # patch drawn 500 * 50 / 1000 = 25 px left; background that reprojects into the
    # rect touches its right edge, so only the leading edge and the rows are exact
    assert (roi.x, roi.y, roi.h) == (r.x - 25, r.y, r.h)
    assert (depth[r.y:r.y + r.h, r.x - 25:r.x + 7] == 1000).all()


def test_illumination_only_touches_color():
    on = two_subject_scene(1, illumination=True)
    off = two_subject_scene(1)
    c1, d1, _ = render_frame(on, 0)
    c0, d0, _ = render_frame(off, 0)
    np.testing.assert_array_equal(d0, d1)
    assert not np.array_equal(c0, c1)


def test_path_leaving_frame_rejected(tmp_path):
    s = SubjectSpec("a", 1, 2, size=32, start=(60.0, 60.0), velocity=(30.0, 0.0))
    with pytest.raises(SceneError, match="leaves"):
        generate(SceneSpec(frames=20, subjects=(s,)), tmp_path)


def test_scene_file_parse():
    text = resources.files("rgbd_facekit").joinpath("scenes/two_subjects.txt").read_text()
    scene = parse_scene(text)
    assert scene.frames == 60 and [s.label for s in scene.subjects] == ["alice", "bob"]
    assert scene.subjects[1].velocity == (-2.0, 0.0)


@pytest.mark.parametrize("text, match", [
    ("frames = 3\nbogus = 1\n", "unknown key"),
    ("frames = x\n", "line 1"),
    ("subject.0.size = 32\n", "label is required"),
    ("subject.0.label = a\nsubject.0.start = 5,5\nsubject.0.size=32\n", "leaves"),
    ("calib.depth.fx = 1\n", "missing"),
])
def test_scene_file_errors(text, match):
    with pytest.raises(SceneError, match=match):
        parse_scene(text)


def test_color_channels_are_gray(tmp_path):
    out = generate(two_subject_scene(1), tmp_path)
    c = load_color(out / "color_0000.ppm")
    np.testing.assert_array_equal(to_gray(c), c[..., 0])
