"""Backend selection and numba/numpy agreement on the hot kernels."""

import numpy as np
import pytest
from scipy import ndimage

from gsal import backend


def _both_backends():
    names = ["numpy"]
    if backend.HAS_NUMBA:
        names.append("numba")
    return names


@pytest.fixture
def restore_backend():
    previous = backend.active_backend()
    yield
    backend.set_backend(previous)


def test_set_backend_round_trip(restore_backend):
    previous = backend.set_backend("numpy")
    assert backend.active_backend() == "numpy"
    backend.set_backend(previous)
    assert backend.active_backend() == previous


def test_set_backend_rejects_unknown(restore_backend):
    with pytest.raises(ValueError, match="backend"):
        backend.set_backend("gpu")


def test_conv2d_matches_scipy(restore_backend):
    rng = np.random.default_rng(11)
    for name in _both_backends():
        backend.set_backend(name)
        for _ in range(5):
            h, w = rng.integers(12, 48, size=2)
            side = int(rng.choice([3, 5, 9]))
            image = rng.standard_normal((h, w))
            kernel = rng.standard_normal((side, side))
            ours = backend.conv2d(image, kernel)
            ref = ndimage.correlate(image, kernel, mode="nearest")
            np.testing.assert_allclose(ours, ref, atol=1e-10)


def test_conv2d_backends_agree_bitwise(restore_backend):
    if not backend.HAS_NUMBA:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(12)
    image = rng.standard_normal((37, 51))
    kernel = rng.standard_normal((11, 11))
    backend.set_backend("numpy")
    a = backend.conv2d(image, kernel)
    backend.set_backend("numba")
    b = backend.conv2d(image, kernel)
    np.testing.assert_array_equal(a, b)


def test_conv2d_stride_subsamples_dense_result(restore_backend):
    rng = np.random.default_rng(13)
    image = rng.standard_normal((33, 44))
    kernel = rng.standard_normal((7, 7))
    for name in _both_backends():
        backend.set_backend(name)
        dense = backend.conv2d(image, kernel, stride=1)
        strided = backend.conv2d(image, kernel, stride=3)
        np.testing.assert_array_equal(strided, dense[::3, ::3])


def test_conv2d_validates_inputs():
    image = np.ones((10, 10))
    with pytest.raises(ValueError, match="odd"):
        backend.conv2d(image, np.ones((4, 4)))
    with pytest.raises(ValueError, match="stride"):
        backend.conv2d(image, np.ones((3, 3)), stride=0)
    with pytest.raises(ValueError):
        backend.conv2d(np.ones((0, 5)), np.ones((3, 3)))


def test_conv2d_replicate_padding_constant_image(restore_backend):
    # replicate padding keeps a constant image constant under any kernel
    kernel = np.random.default_rng(14).standard_normal((9, 9))
    for name in _both_backends():
        backend.set_backend(name)
        out = backend.conv2d(np.full((20, 30), 2.5), kernel)
        np.testing.assert_allclose(out, 2.5 * kernel.sum(), atol=1e-12)


def test_bilinear_resize_identity_and_constant(restore_backend):
    rng = np.random.default_rng(15)
    image = rng.random((21, 34))
    for name in _both_backends():
        backend.set_backend(name)
        np.testing.assert_array_equal(backend.bilinear_resize(image, 21, 34), image)
        up = backend.bilinear_resize(np.full((8, 8), 3.0), 19, 25)
        np.testing.assert_allclose(up, 3.0, atol=1e-12)


def test_bilinear_resize_backends_agree(restore_backend):
    if not backend.HAS_NUMBA:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(16)
    image = rng.random((17, 23))
    backend.set_backend("numpy")
    a = backend.bilinear_resize(image, 64, 80)
    backend.set_backend("numba")
    b = backend.bilinear_resize(image, 64, 80)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_bilinear_resize_preserves_linear_ramps(restore_backend):
    # a linear ramp stays linear away from the clamped border columns
    ramp = np.tile(np.linspace(0, 1, 16), (16, 1))
    out = backend.bilinear_resize(ramp, 16, 31)
    interior = np.diff(out[:, 1:-1], axis=1)
    np.testing.assert_allclose(interior, interior[0, 0], atol=1e-9)


def test_foveal_blend_backends_agree(restore_backend):
    if not backend.HAS_NUMBA:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(17)
    levels = rng.random((4, 30, 40))
    backend.set_backend("numpy")
    a = backend.foveal_blend(levels, (20.0, 15.0), 10.0, 0.2)
    backend.set_backend("numba")
    b = backend.foveal_blend(levels, (20.0, 15.0), 10.0, 0.2)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_default_backend_env_override(monkeypatch):
    monkeypatch.setenv("GSAL_BACKEND", "numpy")
    assert backend._default_backend() == "numpy"
    monkeypatch.setenv("GSAL_BACKEND", "something-else")
    with pytest.raises(ValueError, match="GSAL_BACKEND"):
        backend._default_backend()
