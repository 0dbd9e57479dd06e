import numpy as np
import pytest

from rgbd_facekit.detection import (Annotation, AnnotationDetector, AnnotationError, AnnotationSet,
                                    detect, load_annotations, parse_annotations, save_annotations)
from rgbd_facekit.imaging import Rect

FRAME = np.zeros((48, 64, 3), np.uint8)


def test_parse_row_with_label():
    a = parse_annotations(["0,10,10,50,50,alice"])
    assert a == {0: [Annotation(Rect(10, 10, 50, 50), "alice")]}


def test_header_skipped_and_label_optional():
    a = parse_annotations(["frame,x,y,w,h,label", "2,1,2,3,4", "2,5,6,7,8,bob"])
    assert a[2] == [Annotation(Rect(1, 2, 3, 4), None), Annotation(Rect(5, 6, 7, 8), "bob")]


@pytest.mark.parametrize("line", ["3,5,5,0,40", "3,5,5,10,-1", "1,2,3", "a,1,1,1,1", "-1,0,0,5,5"])
def test_bad_rows(line):
    with pytest.raises(AnnotationError):
        parse_annotations([line])


def test_frames_must_be_grouped():
    with pytest.raises(AnnotationError, match="contiguous"):
        parse_annotations(["0,1,1,5,5", "1,1,1,5,5", "0,2,2,5,5"])


def test_roundtrip(tmp_path):
    a = AnnotationSet({0: [Annotation(Rect(1, 2, 3, 4), "alice"), Annotation(Rect(9, 9, 9, 9), None)],
                       5: [Annotation(Rect(0, 0, 10, 10), "bob")]})
    save_annotations(a, tmp_path / "a.csv")
    assert load_annotations(tmp_path / "a.csv") == a


def test_detect_cases():
    src = AnnotationSet({0: [Annotation(Rect(10, 10, 20, 20), "a")],
                         1: [Annotation(Rect(50, 40, 30, 30))]})
    d = detect(0, FRAME, src)
    assert len(d) == 1 and d[0].score == 1.0 and d[0].rect == Rect(10, 10, 20, 20)
    assert detect(7, FRAME, src) == []
    clamped = detect(1, FRAME, src)[0].rect
    assert clamped == Rect(50, 40, 14, 8)


def test_detector_is_stateless():
    src = AnnotationSet({0: [Annotation(Rect(-5, -5, 20, 20))]})
    det = AnnotationDetector(src)
    first = det(0, FRAME)
    assert det(0, FRAME) == first
    r = first[0].rect
    assert r.x >= 0 and r.y >= 0 and r.x + r.w <= 64 and r.y + r.h <= 48
