import gzip
import hashlib
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempered.data import (CIFAR10_ANIMALS_VEHICLES, EVEN_ODD, IMAGES_MAGIC, LABELS_MAGIC,
                           ClassificationDataset, GaussianAdditive, LabelFlip, binarize,
                           decode_predictions, encode_targets, inject_labels, inject_noise,
                           load_idx, read_idx, subsample, verify_md5, write_idx)
from tempered.errors import BadMagic, CountMismatch, EmptyResult, TruncatedFile


def _raw_idx(path, magic, dims, payload: bytes):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        fh.write(struct.pack(f">{len(dims)}I", *dims))
        fh.write(payload)


@pytest.fixture
def fixture4(tmp_path):
    """Four hand-written 28x28 images: image i has pixel value 50*i everywhere."""
    imgs = bytes(b for i in range(4) for b in [50 * i] * 784)
    _raw_idx(tmp_path / "img", IMAGES_MAGIC, (4, 28, 28), imgs)
    _raw_idx(tmp_path / "lab", LABELS_MAGIC, (4,), bytes([3, 1, 4, 1]))
    return tmp_path / "img", tmp_path / "lab"


@pytest.mark.property
def test_fixture_round_trip(fixture4):
    ds = load_idx(*fixture4)
    assert ds.inputs.shape == (4, 784)
    assert ds.labels.tolist() == [3, 1, 4, 1]
    np.testing.assert_allclose(ds.inputs[:, 0], [0, 50 / 255, 100 / 255, 150 / 255])
    assert ds.num_classes == 10


@pytest.mark.property
def test_write_then_read_gzip(tmp_path):
    a = np.random.default_rng(0).integers(0, 256, (5, 3, 2), dtype=np.uint8)
    write_idx(tmp_path / "x", a)
    with open(tmp_path / "x", "rb") as src, gzip.open(tmp_path / "x.gz", "wb") as dst:
        dst.write(src.read())
    np.testing.assert_array_equal(read_idx(tmp_path / "x.gz", 0x803), a)


def test_count_mismatch(tmp_path):
    _raw_idx(tmp_path / "img", IMAGES_MAGIC, (10, 2, 2), bytes(40))
    _raw_idx(tmp_path / "lab", LABELS_MAGIC, (9,), bytes(9))
    with pytest.raises(CountMismatch):
        load_idx(tmp_path / "img", tmp_path / "lab")


def test_bad_magic(fixture4):
    img, lab = fixture4
    with pytest.raises(BadMagic):
        load_idx(lab, img)


def test_truncated(tmp_path):
    _raw_idx(tmp_path / "img", IMAGES_MAGIC, (3, 2, 2), bytes(11))
    with pytest.raises(TruncatedFile):
        read_idx(tmp_path / "img", IMAGES_MAGIC)
    (tmp_path / "short").write_bytes(b"\x00\x00")
    with pytest.raises(TruncatedFile):
        read_idx(tmp_path / "short", IMAGES_MAGIC)


def test_md5(tmp_path):
    p = tmp_path / "f"
    p.write_bytes(b"abc")
    assert verify_md5(p, hashlib.md5(b"abc").hexdigest())
    assert not verify_md5(p, "0" * 32)


def balanced(n_per=10, k=10):
    labels = np.repeat(np.arange(k), n_per)
    return ClassificationDataset(np.arange(len(labels), dtype=float)[:, None], labels, k)


def test_even_odd():
    b = binarize(balanced(), EVEN_ODD)
    assert set(b.labels.tolist()) == {0, 1}
    assert b.n == 100
    assert b.labels[b.inputs[:, 0] == 13][0] == 1


def test_drop_two_classes():
    b = binarize(balanced(), CIFAR10_ANIMALS_VEHICLES)
    assert b.n == 80


def test_unmapped_label_errors():
    with pytest.raises(KeyError):
        binarize(balanced(), {0: 0, 1: 1})
    assert binarize(balanced(), {0: 0, 1: 1}, drop_unmapped=True).n == 20
    with pytest.raises(EmptyResult):
        binarize(balanced(), {c: None for c in range(10)})


@pytest.mark.property
def test_flip_zero_is_identity():
    labels = np.arange(50) % 3
    out, mask = inject_labels(labels, LabelFlip(0.0), 1, 3)
    np.testing.assert_array_equal(out, labels)
    assert not mask.any()


@pytest.mark.property
def test_flip_exact_fraction():
    out, mask = inject_labels(np.zeros(1000, dtype=int), LabelFlip(0.5), 2, 2)
    assert mask.sum() == 500
    assert np.all(out[mask] == 1)


@pytest.mark.property
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.99), st.integers(2, 12),
       st.integers(1, 300))
def test_flip_exclusion(seed, p, k, n):
    labels = np.random.default_rng(seed).integers(0, k, n)
    out, mask = inject_labels(labels, LabelFlip(p), seed, k)
    assert mask.sum() == round(p * n)
    assert np.all(out[mask] != labels[mask])
    assert np.all(out[~mask] == labels[~mask])
    assert out.min() >= 0 and out.max() < k


@pytest.mark.property
def test_flip_k10_p09_never_keeps_original():
    labels = np.random.default_rng(0).integers(0, 10, 2000)
    out, mask = inject_labels(labels, LabelFlip(0.9), 5, 10)
    assert np.all(out[mask] != labels[mask])


def test_inject_noise_leaves_source_untouched_and_is_deterministic():
    ds = balanced()
    before = ds.labels.copy()
    a, ma = inject_noise(ds, LabelFlip(0.3), 7)
    b, mb = inject_noise(ds, LabelFlip(0.3), 7)
    np.testing.assert_array_equal(ds.labels, before)
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_array_equal(ma, mb)
    y = np.zeros(10)
    noisy, _ = inject_noise(y, GaussianAdditive(1.0), 3)
    assert np.all(y == 0) and np.any(noisy != 0)
    with pytest.raises(TypeError):
        inject_noise(ds, GaussianAdditive(1.0), 0)
    with pytest.raises(ValueError):
        LabelFlip(1.0)


def test_subsample_without_replacement():
    ds = balanced()
    s1, s2 = subsample(ds, 30, 4), subsample(ds, 30, 4)
    np.testing.assert_array_equal(s1.inputs, s2.inputs)
    assert len(np.unique(s1.inputs[:, 0])) == 30
    with pytest.raises(ValueError):
        subsample(ds, 101, 0)


def test_subsample_is_uniform():
    ds = balanced()
    counts = np.zeros(100)
    for s in range(400):
        counts[subsample(ds, 10, s).inputs[:, 0].astype(int)] += 1
    # each index is drawn with probability 0.1, so about 40 times in 400 draws
    assert counts.min() > 15 and counts.max() < 70


def test_target_coding():
    np.testing.assert_array_equal(encode_targets([0, 1, 1], 2), [-1, 1, 1])
    np.testing.assert_array_equal(decode_predictions(np.array([-0.2, 0.3])), [0, 1])
    oh = encode_targets([2, 0], 3)
    np.testing.assert_array_equal(decode_predictions(oh), [2, 0])


def test_dataset_validation():
    with pytest.raises(ValueError):
        ClassificationDataset(np.zeros((2, 1)), np.array([0, 5]), 2)
    with pytest.raises(CountMismatch):
        ClassificationDataset(np.zeros((2, 1)), np.array([0]), 2)
