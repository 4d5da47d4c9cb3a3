"""Class-conditioned feature-map reweighting, fusion, and guided search."""

import numpy as np
import pytest

import scenes
from gsal.config import RunConfig
from gsal.kernels import stack_from_params
from gsal.topdown import (
    FeatureMapStack,
    LabeledBox,
    TopDownModel,
    fuse,
    learn_weights,
    load_model,
    raw_map_saliency,
    save_model,
    search,
    topdown_map,
)

FEATURE_KERNEL = stack_from_params((1, 9), (0.5, 0.5))


def _training_set(rng, n_images=3):
    training = []
    for _ in range(n_images):
        maps, box_a, box_b = scenes.training_scene(rng)
        stack = FeatureMapStack(maps=maps, spatial_scale=1.0)
        training.append((stack, LabeledBox(image_id="train", class_id="a", box=box_a)))
        training.append((stack, LabeledBox(image_id="train", class_id="b", box=box_b)))
    return training


def test_feature_map_stack_validation():
    with pytest.raises(ValueError):
        FeatureMapStack(maps=np.ones((4, 4)))  # not 3D
    with pytest.raises(ValueError, match="finite"):
        FeatureMapStack(maps=np.full((1, 4, 4), np.inf))
    with pytest.raises(ValueError, match="spatial_scale"):
        FeatureMapStack(maps=np.ones((1, 4, 4)), spatial_scale=0.0)


def test_labeled_box_rejects_degenerate():
    with pytest.raises(ValueError, match="degenerate"):
        LabeledBox(image_id="x", class_id="a", box=(5, 5, 5, 9))


def test_raw_map_saliency_shapes_and_kernel_fit():
    rng = np.random.default_rng(81)
    stack = FeatureMapStack(maps=rng.random((3, 64, 64)))
    raws = raw_map_saliency(stack, FEATURE_KERNEL, alpha=2.0)
    assert raws.shape == (3, 64, 64)
    assert np.all(raws >= 0)
    small = FeatureMapStack(maps=rng.random((1, 10, 10)))
    with pytest.raises(ValueError, match="fit"):
        raw_map_saliency(small, FEATURE_KERNEL)


def test_learn_weights_favors_supporting_maps():
    rng = np.random.default_rng(82)
    model = learn_weights(_training_set(rng), FEATURE_KERNEL)
    assert model.classes == ("a", "b")
    wa = model.weights[model.class_index("a")]
    wb = model.weights[model.class_index("b")]
    # class-a weight mass concentrates on maps 0-1, class-b on maps 2-3
    assert wa[0] > 10 * max(wa[2], wa[3])
    assert wa[1] > 10 * max(wa[2], wa[3])
    assert wb[2] > 10 * max(wb[0], wb[1])
    assert wb[3] > 10 * max(wb[0], wb[1])


def test_learn_weights_empty_training_set():
    with pytest.raises(ValueError, match="empty"):
        learn_weights([], FEATURE_KERNEL)


def test_model_class_index_unknown():
    model = TopDownModel(
        classes=("a",), weights=np.ones((1, 3)), alpha=5.0, stack_spec=FEATURE_KERNEL
    )
    with pytest.raises(ValueError, match="unknown class"):
        model.class_index("zebra")


def test_topdown_map_highlights_class_support():
    rng = np.random.default_rng(83)
    model = learn_weights(_training_set(rng), FEATURE_KERNEL)
    maps, box_a, box_b = scenes.training_scene(rng)
    stack = FeatureMapStack(maps=maps)
    td = topdown_map(stack, model, "a")
    assert td.shape == stack.grid_shape
    assert td.post_processed
    ax = (box_a[0] + box_a[2]) // 2
    ay = (box_a[1] + box_a[3]) // 2
    bx = (box_b[0] + box_b[2]) // 2
    by = (box_b[1] + box_b[3]) // 2
    assert td.values[ay, ax] > 5 * td.values[by, bx]
    td_b = topdown_map(stack, model, "b")
    assert td_b.values[by, bx] > 5 * td_b.values[ay, ax]


def test_topdown_map_respects_spatial_scale():
    rng = np.random.default_rng(84)
    model = learn_weights(_training_set(rng), FEATURE_KERNEL)
    maps, _, _ = scenes.training_scene(rng)
    stack = FeatureMapStack(maps=maps, spatial_scale=2.0)
    td = topdown_map(stack, model, "a")
    assert td.shape == (scenes.SEARCH_SIZE * 2, scenes.SEARCH_SIZE * 2)
    assert td.values.max() == pytest.approx(1.0)


def test_topdown_map_rejects_map_count_mismatch():
    rng = np.random.default_rng(85)
    model = learn_weights(_training_set(rng), FEATURE_KERNEL)
    wrong = FeatureMapStack(maps=rng.random((2, 64, 64)))
    with pytest.raises(ValueError, match="map"):
        topdown_map(wrong, model, "a")


def test_fuse_is_multiplicative_and_normalized():
    from gsal.saliency import SaliencyMap

    rng = np.random.default_rng(86)
    a = SaliencyMap(values=rng.random((16, 16)), post_processed=True)
    b = SaliencyMap(values=rng.random((16, 16)), post_processed=True)
    fused = fuse(a, b)
    assert fused.values.max() == pytest.approx(1.0)
    raw = a.values * b.values
    np.testing.assert_allclose(fused.values, raw / raw.max())
    with pytest.raises(ValueError, match="shape"):
        fuse(a, SaliencyMap(values=rng.random((8, 8)), post_processed=True))


def test_model_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(87)
    model = learn_weights(_training_set(rng), FEATURE_KERNEL)
    path = tmp_path / "model.tsv"
    save_model(path, model)
    back = load_model(path)
    assert back.classes == model.classes
    assert back.alpha == model.alpha
    np.testing.assert_array_equal(back.weights, model.weights)
    specs = [(s.k, s.mu) for s in back.stack_spec.specs]
    assert specs == [(s.k, s.mu) for s in model.stack_spec.specs]
    assert back.stack_spec.support_radius == model.stack_spec.support_radius


def test_load_model_missing_header(tmp_path):
    path = tmp_path / "broken.tsv"
    path.write_text("class\tmap_index\tweight\na\t0\t1.0\n")
    with pytest.raises(ValueError, match="alpha"):
        load_model(path)


def test_search_finds_dim_target_quickly():
    rng = np.random.default_rng(88)
    model = learn_weights(_training_set(rng), FEATURE_KERNEL)
    image, maps, target_box = scenes.search_scene(rng)
    stack = FeatureMapStack(maps=maps)
    cfg = RunConfig(
        resize_h=None, resize_w=None, theta=0.02, max_fixations=12, frame_size=8
    )
    result = search(image, stack, model, "a", cfg, target_box=target_box)
    assert result.found
    assert result.saccades <= 4


def test_search_without_target_reports_trace_only():
    rng = np.random.default_rng(89)
    model = learn_weights(_training_set(rng), FEATURE_KERNEL)
    image, maps, _ = scenes.search_scene(rng)
    stack = FeatureMapStack(maps=maps)
    cfg = RunConfig(resize_h=None, resize_w=None, theta=0.02, max_fixations=3, frame_size=8)
    result = search(image, stack, model, "a", cfg)
    assert result.saccades is None
    assert not result.found
    assert len(result.trace.fixations) >= 1
