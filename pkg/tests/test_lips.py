import numpy as np
import pytest

from vwords import lips, synth
from vwords.face import FaceBox


def solid_roi(colour, shape=(30, 60)):
    img = np.zeros(shape + (3,), dtype=np.uint8)
    img[:] = colour
    return lips.Roi(origin=(0, 0), image=img)


def two_tone_roi(lip_colour=(170, 60, 70), skin_colour=(220, 180, 160)):
    img = np.zeros((30, 60, 3), dtype=np.uint8)
    img[:] = skin_colour
    yy, xx = np.mgrid[0:30, 0:60] + 0.5
    truth = ((xx - 30) / 10.0) ** 2 + ((yy - 15) / 5.0) ** 2 <= 1.0
    img[truth] = lip_colour
    return lips.Roi((0, 0), img), truth.astype(np.uint8)


def iou(a, b):
    a, b = a.astype(bool), b.astype(bool)
    union = (a | b).sum()
    return (a & b).sum() / union if union else 1.0


# ---------------------------------------------------------------- roi


def test_roi_from_face_bottom_third():
    frame = np.zeros((120, 120, 3), dtype=np.uint8)
    roi = lips.roi_from_face(FaceBox(0, 0, 90, 90), frame)
    assert roi.origin == (0, 60)
    assert roi.image.shape == (30, 90, 3)


def test_roi_floor_division():
    frame = np.zeros((120, 120, 3), dtype=np.uint8)
    roi = lips.roi_from_face(FaceBox(0, 0, 90, 91), frame)
    assert roi.image.shape[0] == 30  # floor(91/3)


def test_roi_clipped_at_frame_bottom():
    frame = np.zeros((100, 120, 3), dtype=np.uint8)
    roi = lips.roi_from_face(FaceBox(10, 20, 90, 90), frame)
    assert roi.origin == (10, 80)
    assert roi.image.shape[0] == 20  # clipped below frame


def test_roi_degenerate_face_errors():
    frame = np.zeros((100, 100, 3), dtype=np.uint8)
    with pytest.raises(ValueError):
        lips.roi_from_face(FaceBox(0, 0, 0, 50), frame)


# ---------------------------------------------------------------- lip map


def test_lip_map_uniform_is_zero():
    roi = solid_roi((180, 120, 100))
    assert np.all(lips.lip_map(roi) == 0.0)


def test_lip_map_hand_case():
    # pixel X = (200,0,255): max Cr^2 and min Cr/Cb -> raw (1-0)^2 * 1 = 1
    # pixel Y = (255,255,0): Cb = 0.5 so Cr/Cb is huge -> normalized Cr^2 = 0
    img = np.array([[[200, 0, 255], [255, 255, 0]]], dtype=np.uint8)
    lm = lips.lip_map(lips.Roi((0, 0), img))
    assert lm[0, 0] == pytest.approx(1.0)
    assert lm[0, 1] == pytest.approx(0.0)


def test_lip_map_range_and_zero_pixel():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(20, 30, 3), dtype=np.uint8)
    lm = lips.lip_map(lips.Roi((0, 0), img))
    assert lm.min() >= 0.0 and lm.max() <= 1.0


# ---------------------------------------------------------------- kmeans


def test_kmeans2_one_dimensional_example():
    labels, centres = lips.kmeans2([0.0, 0.1, 0.2, 10.0, 10.1])
    vals = sorted(centres.ravel())
    assert vals[0] == pytest.approx(0.1)
    assert vals[1] == pytest.approx(10.05)
    assert list(labels) == [0, 0, 0, 1, 1]


def test_kmeans2_two_points():
    labels, centres = lips.kmeans2([[1.0, 0.0], [5.0, 2.0]])
    assert set(labels) == {0, 1}
    np.testing.assert_allclose(centres[labels[0]], [1.0, 0.0])


def test_kmeans2_identical_points():
    labels, centres = lips.kmeans2([2.0, 2.0, 2.0])
    np.testing.assert_allclose(centres[0], centres[1])
    assert (labels == 1).sum() == 0  # one empty cluster


def test_kmeans2_objective_non_increasing():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(60, 3))
    labels, centres = lips.kmeans2(pts)
    # converged: one more assignment step changes nothing
    d0 = ((pts - centres[0]) ** 2).sum(axis=1)
    d1 = ((pts - centres[1]) ** 2).sum(axis=1)
    np.testing.assert_array_equal((d1 < d0).astype(int), labels)


def test_kmeans2_needs_two_points():
    with pytest.raises(ValueError):
        lips.kmeans2([1.0])


# ---------------------------------------------------------------- nearest colour


def test_nearest_colour_spec_fixture():
    roi, truth = two_tone_roi()
    mask = lips.nearest_colour(roi)
    assert iou(mask, truth) >= 0.9


def test_nearest_colour_speck_removed():
    roi = solid_roi((220, 180, 160))
    roi.image[15, 30] = (170, 60, 70)
    mask = lips.nearest_colour(roi)
    assert mask.sum() == 0  # opening removes the speck; empty mask reported


def test_nearest_colour_joins_two_blobs():
    img = np.zeros((30, 60, 3), dtype=np.uint8)
    img[:] = (220, 180, 160)
    img[8:14, 20:40] = (170, 60, 70)   # upper lip
    img[15:21, 20:40] = (170, 60, 70)  # lower lip, 1 px gap
    mask = lips.nearest_colour(lips.Roi((0, 0), img))
    assert mask[10, 30] == 1 and mask[18, 30] == 1


def test_nearest_colour_idempotent_on_prototype_colours():
    # a Roi recoloured to the two prototype colours reproduces the mask exactly
    roi, truth = two_tone_roi()
    mask = lips.nearest_colour(roi)
    recoloured = np.where(mask[..., None].astype(bool), (170, 60, 70), (220, 180, 160))
    again = lips.nearest_colour(lips.Roi((0, 0), recoloured.astype(np.uint8)))
    np.testing.assert_array_equal(again, mask)


def test_nearest_colour_too_small():
    with pytest.raises(ValueError):
        lips.nearest_colour(solid_roi((10, 10, 10), shape=(2, 8)))


# ---------------------------------------------------------------- layer fusion


def test_layer_fusion_fixture_iou():
    roi, truth = two_tone_roi()
    assert iou(lips.layer_fusion(roi), truth) >= 0.8


def test_layer_fusion_vote_threshold_bound():
    roi, _ = two_tone_roi()
    assert lips.layer_fusion(roi, vote_threshold=6).sum() == 0


def test_layer_fusion_threshold_monotone_on_fixture():
    roi, _ = two_tone_roi()
    loose = lips.layer_fusion(roi, vote_threshold=2).astype(bool)
    tight = lips.layer_fusion(roi, vote_threshold=4).astype(bool)
    assert np.all(loose | ~tight)  # tight mask is a subset


def test_layer_fusion_motion_gate():
    roi, _ = two_tone_roi()
    prev_mask = np.zeros(roi.image.shape[:2], dtype=np.uint8)
    prev_mask[3, 3] = 1
    out = lips.layer_fusion(roi, prev_roi=roi, prev_mask=prev_mask)
    np.testing.assert_array_equal(out, prev_mask)
    # large change re-segments
    bright = lips.Roi((0, 0), np.clip(roi.image.astype(int) + 60, 0, 255).astype(np.uint8))
    out2 = lips.layer_fusion(bright, prev_roi=roi, prev_mask=prev_mask)
    assert out2.sum() != prev_mask.sum()


# ---------------------------------------------------------------- mouth box


def test_mouth_from_mask_rectangle():
    roi = solid_roi((100, 100, 100), shape=(40, 60))
    mask = np.zeros((40, 60), dtype=np.uint8)
    mask[6:18, 5:35] = 1
    mouth = lips.mouth_from_mask(mask, roi)
    assert mouth.box == (5, 6, 30, 12)
    assert mouth.semi_axes == (15.0, 6.0)
    assert mouth.pixels.shape == (12, 30, 3)


def test_mouth_from_mask_single_pixel():
    roi = solid_roi((1, 2, 3), shape=(10, 10))
    mask = np.zeros((10, 10), dtype=np.uint8)
    mask[4, 7] = 1
    mouth = lips.mouth_from_mask(mask, roi)
    assert mouth.box == (7, 4, 1, 1)
    assert mouth.ellipse_mask().all()


def test_mouth_from_mask_l_shape_bounding():
    roi = solid_roi((0, 0, 0), shape=(20, 20))
    mask = np.zeros((20, 20), dtype=np.uint8)
    mask[2:12, 2:5] = 1
    mask[9:12, 2:15] = 1
    mouth = lips.mouth_from_mask(mask, roi)
    assert mouth.box == (2, 2, 13, 10)


def test_mouth_box_touches_extents():
    rng = np.random.default_rng(2)
    roi = solid_roi((9, 9, 9), shape=(25, 25))
    mask = (rng.random((25, 25)) > 0.8).astype(np.uint8)
    mouth = lips.mouth_from_mask(mask, roi)
    x, y, w, h = mouth.box
    sub = mask[y : y + h, x : x + w]
    assert sub[0].any() and sub[-1].any() and sub[:, 0].any() and sub[:, -1].any()
    assert mask.sum() == sub.sum()  # box contains every 1-bit


def test_mouth_from_empty_mask_raises():
    roi = solid_roi((0, 0, 0), shape=(10, 10))
    with pytest.raises(lips.LipsNotFound):
        lips.mouth_from_mask(np.zeros((10, 10), dtype=np.uint8), roi)


# ---------------------------------------------------------------- corpus + debug io


def test_fixture_corpus_method_ordering():
    suite = synth.lip_fixture_suite(20, seed=9)
    nc = [iou(lips.nearest_colour(lips.Roi((0, 0), img)), t) for img, t in suite]
    lf = [iou(lips.layer_fusion(lips.Roi((0, 0), img)), t) for img, t in suite]
    assert np.mean(nc) > np.mean(lf)


def test_mask_pbm_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    mask = (rng.random((12, 17)) > 0.5).astype(np.uint8)
    path = tmp_path / "mask.pbm"
    lips.write_mask_pbm(mask, path)
    np.testing.assert_array_equal(lips.read_mask_pbm(path), mask)


def test_tint_overlay_touches_only_masked():
    img = np.full((5, 5, 3), 100, dtype=np.uint8)
    mask = np.zeros((5, 5), dtype=np.uint8)
    mask[2, 2] = 1
    out = lips.tint_overlay(img, mask)
    assert not np.array_equal(out[2, 2], img[2, 2])
    out[2, 2] = img[2, 2]
    np.testing.assert_array_equal(out, img)
