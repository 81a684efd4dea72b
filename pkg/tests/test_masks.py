import numpy as np
import pytest
from PIL import Image

from segstat import masks
from segstat.errors import InputError


def brute_confusion(gt, pred):
    tp = fp = tn = fn = 0
    for g, p in zip(gt.ravel().tolist(), pred.ravel().tolist()):
        if g and p:
            tp += 1
        elif p:
            fp += 1
        elif g:
            fn += 1
        else:
            tn += 1
    return tp, fp, tn, fn


def test_binarize_threshold_is_128(tmp_path):
    path = tmp_path / "gray.png"
    Image.fromarray(np.array([[0, 127, 128, 255]], dtype=np.uint8)).save(path)
    got = masks.load_mask(path)
    assert got.tolist() == [[False, False, True, True]]


def test_mask_roundtrip(tmp_path, rng):
    mask = rng.random((17, 23)) < 0.4
    path = tmp_path / "m.png"
    masks.save_mask(path, mask)
    assert (masks.load_mask(path) == mask).all()


def test_saved_mask_pixels_are_0_or_255(tmp_path):
    path = tmp_path / "m.png"
    masks.save_mask(path, np.array([[True, False]]))
    raw = np.asarray(Image.open(path))
    assert sorted(set(raw.ravel().tolist())) == [0, 255]


def test_color_ground_truth_reduces_by_any_nonblack(tmp_path):
    rgb = np.zeros((2, 3, 3), dtype=np.uint8)
    rgb[0, 0] = (255, 0, 0)
    rgb[0, 2] = (0, 0, 1)
    rgb[1, 1] = (0, 40, 0)
    path = tmp_path / "gt.png"
    Image.fromarray(rgb).save(path)
    got = masks.load_mask(path, kind="ground_truth")
    assert got.tolist() == [[True, False, True], [False, True, False]]


def test_color_prediction_is_rejected(tmp_path):
    path = tmp_path / "pred.png"
    Image.fromarray(np.zeros((2, 2, 3), dtype=np.uint8)).save(path)
    with pytest.raises(InputError, match="channel"):
        masks.load_mask(path, kind="prediction")


def test_load_mask_unknown_kind():
    with pytest.raises(InputError):
        masks.load_mask("whatever.png", kind="estimate")


def test_missing_file(tmp_path):
    with pytest.raises(InputError, match="not found"):
        masks.load_mask(tmp_path / "nope.png")


def test_unreadable_file(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"this is not a png")
    with pytest.raises(InputError, match="unreadable"):
        masks.load_mask(bad)


def test_16bit_file_is_not_a_mask(tmp_path):
    path = tmp_path / "deep.png"
    Image.fromarray(np.array([[1000, 2000]], dtype=np.uint16)).save(path)
    with pytest.raises(InputError, match="unsupported mode"):
        masks.load_mask(path)


def test_probability_roundtrip_is_exact_on_16bit_grid(tmp_path):
    # every representable 16-bit level must survive a write/read cycle
    levels = np.arange(65536, dtype=np.float64).reshape(256, 256) / 65535.0
    path = tmp_path / "p.png"
    masks.save_probability_map(path, levels)
    back = masks.load_probability_map(path)
    assert np.array_equal(back, levels)


def test_probability_8bit_fallback(tmp_path):
    path = tmp_path / "p8.png"
    Image.fromarray(np.array([[0, 51, 255]], dtype=np.uint8)).save(path)
    got = masks.load_probability_map(path)
    assert np.allclose(got, [[0.0, 0.2, 1.0]])


def test_probability_rejects_rgb(tmp_path):
    path = tmp_path / "rgb.png"
    Image.fromarray(np.zeros((2, 2, 3), dtype=np.uint8)).save(path)
    with pytest.raises(InputError, match="unsupported mode"):
        masks.load_probability_map(path)


def test_probability_save_rejects_out_of_range(tmp_path):
    with pytest.raises(InputError, match="lie in"):
        masks.save_probability_map(tmp_path / "x.png", np.array([[1.2]]))
    with pytest.raises(InputError, match="non-finite"):
        masks.save_probability_map(tmp_path / "x.png", np.array([[np.nan]]))


def test_heatmap_carries_target_class(tmp_path):
    path = tmp_path / "h.png"
    masks.save_heatmap(path, masks.Heatmap(np.array([[0.5]]), target_class=1))
    got = masks.load_heatmap(path, target_class=0)
    assert got.target_class == 0
    assert got.values.shape == (1, 1)
    with pytest.raises(InputError):
        masks.load_heatmap(path, target_class=3)


def test_confusion_identical_masks(rng):
    m = rng.random((9, 9)) < 0.5
    c = masks.confusion(m, m)
    assert c.fp == 0 and c.fn == 0
    assert c.tp == int(m.sum())
    assert c.total == m.size


def test_confusion_complement():
    gt = np.array([[True, False], [True, False]])
    c = masks.confusion(gt, ~gt)
    assert (c.tp, c.fp, c.tn, c.fn) == (0, 2, 0, 2)


def test_confusion_counts_match_pixel_walk(rng):
    for _ in range(200):
        h = int(rng.integers(1, 12))
        w = int(rng.integers(1, 12))
        gt = rng.random((h, w)) < rng.random()
        pred = rng.random((h, w)) < rng.random()
        c = masks.confusion(gt, pred)
        assert (c.tp, c.fp, c.tn, c.fn) == brute_confusion(gt, pred)


def test_confusion_swapping_masks_swaps_fp_fn(rng):
    gt = rng.random((8, 8)) < 0.5
    pred = rng.random((8, 8)) < 0.5
    a = masks.confusion(gt, pred)
    b = masks.confusion(pred, gt)
    assert (a.tp, a.tn) == (b.tp, b.tn)
    assert (a.fp, a.fn) == (b.fn, b.fp)


def test_confusion_shape_mismatch():
    with pytest.raises(InputError, match="mismatch"):
        masks.confusion(np.zeros((2, 2), bool), np.zeros((2, 3), bool))


def test_confusion_empty():
    with pytest.raises(InputError):
        masks.confusion(np.zeros((0, 2), bool), np.zeros((0, 2), bool))


def test_overlay_colors():
    gt = np.array([[True, True], [False, False]])
    pred = np.array([[True, False], [True, False]])
    img = masks.overlay(gt, pred)
    assert tuple(img[0, 0]) == (0, 255, 0)  # hit
    assert tuple(img[0, 1]) == (255, 255, 0)  # miss
    assert tuple(img[1, 0]) == (255, 0, 0)  # false alarm
    assert tuple(img[1, 1]) == (0, 0, 0)


def test_overlay_save_is_deterministic(tmp_path, rng):
    gt = rng.random((16, 16)) < 0.5
    pred = rng.random((16, 16)) < 0.5
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    masks.save_rgb(a, masks.overlay(gt, pred))
    masks.save_rgb(b, masks.overlay(gt, pred))
    assert a.read_bytes() == b.read_bytes()


def test_save_rgb_validates():
    with pytest.raises(InputError):
        masks.save_rgb("x.png", np.zeros((2, 2), dtype=np.uint8))


def test_colormap_table_shape_and_endpoints():
    table = masks.colormap_table()
    assert table.shape == (256, 3)
    assert table.dtype == np.uint8
    assert table[0].tolist() == [0, 0, 128]
    assert table[255].tolist() == [128, 0, 0]


def test_colormap_frozen_interior_rows():
    table = masks.colormap_table()
    assert table[64].tolist() == [0, 129, 255]
    assert table[191].tolist() == [255, 129, 0]


def test_render_heatmap_lookup_rule():
    img = masks.render_heatmap(np.array([[0.0, 0.25, 0.75, 1.0]]))
    table = masks.colormap_table()
    # floor(v * 255 + 0.5): 0.25 -> row 64, 0.75 -> row 191
    assert img[0, 0].tolist() == table[0].tolist()
    assert img[0, 1].tolist() == table[64].tolist()
    assert img[0, 2].tolist() == table[191].tolist()
    assert img[0, 3].tolist() == table[255].tolist()


def test_render_heatmap_rejects_bad_values():
    with pytest.raises(InputError):
        masks.render_heatmap(np.array([[-0.1]]))
    with pytest.raises(InputError):
        masks.render_heatmap(np.array([[float("inf")]]))
