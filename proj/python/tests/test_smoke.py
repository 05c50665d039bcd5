# Copyright (c) the medinet authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import numpy as np
import pytest

import medinet


def numpy_median3(x):
    """Replicate-padded 3x3 median per plane, straight numpy."""
    p = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)), mode="edge")
    h, w = x.shape[2:]
    stack = [p[:, :, dy:dy + h, dx:dx + w] for dy in range(3) for dx in range(3)]
    return np.sort(np.stack(stack), axis=0)[4]


def numpy_conv_same(x, w):
    n, c, h, wd = x.shape
    p = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    out = np.zeros((n, w.shape[0], h, wd))
    for dy in range(3):
        for dx in range(3):
            patch = p[:, :, dy:dy + h, dx:dx + wd]
            out += np.einsum("nchw,oc->nohw", patch, w[:, :, dy, dx])
    return out


def test_median_matches_numpy():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2, 3, 9, 11)).astype(np.float32)
    np.testing.assert_array_equal(medinet.median_filter(x, 3), numpy_median3(x))


def test_histogram_median_matches_float_path():
    rng = np.random.default_rng(1)
    plane = rng.integers(0, 256, size=(40, 33), dtype=np.uint8)
    fast = medinet.median_filter_u8(plane, 7)
    slow = medinet.median_filter(plane[None, None].astype(np.float32), 7)[0, 0]
    np.testing.assert_array_equal(fast, slow.astype(np.uint8))


def test_mediconv_forward_is_composition():
    rng = np.random.default_rng(2)
    x = rng.uniform(size=(2, 2, 8, 10)).astype(np.float32)
    w = rng.uniform(-1, 1, size=(4, 2, 3, 3)).astype(np.float32)
    layer = medinet.ConvLayer(w, kind="medi")
    m = numpy_median3(x.astype(np.float64))
    centered = m - m.mean(axis=(2, 3), keepdims=True)
    np.testing.assert_allclose(layer.forward(x), numpy_conv_same(centered, w), atol=1e-5)
    d_w, d_x = layer.backward(np.ones((2, 4, 8, 10), np.float32))
    assert d_w.shape == w.shape and d_x.shape == x.shape


def test_constant_input_gives_zero():
    w = np.ones((2, 1, 3, 3), np.float32)
    layer = medinet.ConvLayer(w, kind="medi")
    out = layer.forward(np.full((1, 1, 6, 6), 42.0, np.float32))
    assert not out.any()


def test_degrade_is_reproducible_and_configurable():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, size=(3, 32, 32)).astype(np.float32)
    spec = "gb:3,13+sp:0.05+s:2+c:40"
    a = medinet.degrade(img, spec, stream_id=4, seed=9)
    b = medinet.degrade(img, spec, stream_id=4, seed=9)
    c = medinet.degrade(img, spec, stream_id=5, seed=9)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    cfg = medinet.parse_degradation(spec, seed=9)
    assert cfg["blur"] == {"type": "gaussian", "sigma": 3.0, "ksize": 13}
    assert cfg["scale"] == 2 and cfg["jpeg"] == 40
    np.testing.assert_array_equal(medinet.degrade(img, cfg, stream_id=4), a)
    assert medinet.degradation_name(cfg) == "gb3+sp0.05+s2+c40"
    np.testing.assert_array_equal(medinet.degrade(img, "clean"), img)


def test_bad_config_raises():
    with pytest.raises(ValueError):
        medinet.degrade(np.zeros((8, 8), np.float32), "sp:2.0")


def test_jpeg_quality_fifty_table():
    t = medinet.jpeg_quant_table(50)
    assert t[:8] == [16, 11, 10, 16, 24, 40, 51, 61]


def test_image_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    img = rng.integers(0, 256, size=(3, 7, 5)).astype(np.float32)
    for name in ("a.png", "a.ppm"):
        medinet.write_image(str(tmp_path / name), img)
        np.testing.assert_array_equal(medinet.read_image(str(tmp_path / name)), img)
    with pytest.raises(OSError):
        medinet.read_image(str(tmp_path / "missing.png"))


def test_gradcheck_passes():
    for kind in ("std", "medi"):
        r = medinet.gradcheck(kind, trials=3, seed=1)
        assert r["trials"] == 3
        assert max(r["weights"], r["input"]) < 1e-3


def test_models_share_weights_and_predict():
    images, labels, names = medinet.make_shapes_dataset(4, seed=2)
    assert images.shape == (4, 1, 32, 32) and len(labels) == 4 and len(names) == 10
    base = medinet.Model(0, seed=5)
    medi = medinet.Model(1, seed=5)
    assert base.parameter_count == medi.parameter_count
    assert medi.spec["medi_layers"] == 1
    assert base.predict(images).shape == (4, 10)
    fm = medi.feature_maps(images, 0)
    assert fm.shape == (4, 16, 32, 32)
    assert medinet.mean_total_variation(fm) >= 0.0
