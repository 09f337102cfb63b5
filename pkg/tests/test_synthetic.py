import json

import numpy as np
import pytest

from makeupprior import load_layer, load_mask
from makeupprior.synthetic import SyntheticSpec, gen_synthetic, generate


def test_same_seed_byte_identical(tmp_path):
    spec = SyntheticSpec(seed=4, count=3, size=32)
    gen_synthetic(spec, tmp_path / "a")
    gen_synthetic(spec, tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_different_seeds_differ():
    a = generate(SyntheticSpec(seed=1, count=1, size=32))
    b = generate(SyntheticSpec(seed=2, count=1, size=32))
    assert a.layers[0] != b.layers[0]


def test_single_sample(tmp_path):
    entries = gen_synthetic(SyntheticSpec(count=1, size=32), tmp_path)
    assert len(entries) == 1
    files = {p.name for p in tmp_path.iterdir()}
    assert {"makeup_000_bases.png", "makeup_000_alpha.png", "bare_000.png", "face_mask.png"} <= files
    assert not any(name.startswith("makeup_001") for name in files)
    doc = json.loads((tmp_path / "corpus.json").read_text())
    assert doc["samples"] == entries


def test_alpha_contract(corpus):
    for layer in corpus.layers:
        alpha = layer.alpha.values[:, :, 0]
        assert alpha.min() >= 0.0 and alpha.max() <= 1.0
        assert alpha[corpus.face.bits].mean() <= 0.3
        assert not alpha[~corpus.face.bits].any()


def test_files_round_trip(tmp_path):
    spec = SyntheticSpec(seed=3, count=2, size=32)
    gen_synthetic(spec, tmp_path)
    corpus = generate(spec)
    layer = load_layer(tmp_path / "makeup_001_bases.png", tmp_path / "makeup_001_alpha.png")
    assert np.max(np.abs(layer.rgba() - corpus.layers[1].rgba())) <= 0.5 / 65535 + 1e-12
    assert load_mask(tmp_path / "face_mask.png") == corpus.face


def test_face_mask_is_mirror_symmetric(corpus):
    assert np.array_equal(corpus.face.bits, corpus.face.bits[:, ::-1])


@pytest.mark.parametrize("kwargs", [{"count": 0}, {"size": 16}])
def test_invalid_spec(kwargs):
    with pytest.raises(ValueError):
        SyntheticSpec(**kwargs)
