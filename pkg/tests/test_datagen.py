import numpy as np
import pytest

from proxlinf import prox_linf_sort
from proxlinf.datagen import (
    DatasetFormatError,
    DatasetSpec,
    Distribution,
    generate,
    load_features,
    load_raw,
    parse_mix,
    save_features,
    save_raw,
    split,
)
from proxlinf.features import FeatureTable, Filtered, make_features


def test_generate_deterministic():
    spec = DatasetSpec(count=3, mix=((Distribution("normal"), 1.0),), length_range=(5, 5), seed=7)
    a, b = generate(spec), generate(spec)
    assert a == b
    assert all(t.x.size == 5 for t in a)


def test_uniform_range_and_tau():
    spec = DatasetSpec(count=50, length_range=(1, 60), seed=1)
    for t in generate(spec):
        assert ((t.x >= 0) & (t.x < 1)).all()
        assert 1 <= t.alpha < 6
        assert prox_linf_sort(t.x, t.alpha).tau == t.tau


def test_mix_counts_exact():
    mix = parse_mix("normal=0.3,uniform=0.45,uniform:10=0.25")
    spec = DatasetSpec(count=21, mix=mix, length_range=(100, 120), seed=2)
    labels = [t.label for t in generate(spec)]
    # 6.3 / 9.45 / 5.25 -> largest remainder gives 6 / 10 / 5
    assert [labels.count(lab) for lab in ("normal", "uniform", "uniform:10")] == [6, 10, 5]


def test_records_independent_of_count():
    small = generate(DatasetSpec(count=3, length_range=(4, 9), seed=5))
    big = generate(DatasetSpec(count=8, length_range=(4, 9), seed=5))
    assert small == big[:3]


def test_no_filtered_at_desk_scale():
    spec = DatasetSpec(count=200, mix=parse_mix("normal=0.5,uniform=0.5"), length_range=(100, 300), seed=3)
    assert not any(isinstance(make_features(t.x, t.alpha, t.tau), Filtered) for t in generate(spec))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"count": 0},
        {"count": 2, "mix": ((Distribution("normal"), 0.5),)},
        {"count": 2, "length_range": (0, 3)},
        {"count": 2, "length_range": (5, 3)},
        {"count": 2, "alpha_range": (0.0, 1.0)},
    ],
)
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        DatasetSpec(**kwargs)


def test_distribution_parse():
    assert Distribution.parse("uniform:10") == Distribution("uniform", 10.0)
    assert Distribution.parse("uniform:10").label == "uniform:10"
    with pytest.raises(ValueError):
        Distribution.parse("cauchy")
    with pytest.raises(ValueError):
        Distribution("normal", 2.0)


def test_split_plain():
    tr, te = split(10, 0.2, seed=0)
    assert len(tr) == 8 and len(te) == 2
    assert sorted(np.r_[tr, te]) == list(range(10))
    tr2, te2 = split(10, 0.2, seed=0)
    assert np.array_equal(te, te2) and np.array_equal(tr, tr2)


def test_split_stratified():
    labels = ["A"] * 5 + ["B"] * 5
    _, te = split(10, 0.2, labels, seed=4)
    assert sorted(labels[i] for i in te) == ["A", "B"]


def test_split_stratified_shares():
    labels = ["a"] * 37 + ["b"] * 81 + ["c"] * 52
    _, te = split(len(labels), 0.2, labels, seed=1)
    for lab in "abc":
        n = labels.count(lab)
        got = sum(labels[i] == lab for i in te)
        assert abs(got - 0.2 * n) <= 1


@pytest.mark.parametrize("n,frac", [(1, 0.2), (10, 0.0), (10, 1.0)])
def test_split_errors(n, frac):
    with pytest.raises(ValueError):
        split(n, frac)


def test_raw_roundtrip(tmp_path):
    triples = generate(DatasetSpec(count=100, mix=parse_mix("normal=0.5,uniform=0.5"), length_range=(1, 30), seed=9))
    path = tmp_path / "raw.csv"
    save_raw(triples, path)
    assert load_raw(path) == triples


def test_raw_errors(tmp_path):
    path = tmp_path / "raw.csv"
    save_raw(generate(DatasetSpec(count=3, length_range=(2, 4), seed=0)), path)
    lines = path.read_text().splitlines()
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines[:2] + [lines[2] + ",1.0,2.0"] + lines[3:]) + "\n")
    with pytest.raises(DatasetFormatError, match="line 3"):
        load_raw(bad)
    bad.write_text("\n".join(["PROXDS,2,count=3"] + lines[1:]) + "\n")
    with pytest.raises(DatasetFormatError, match="line 1"):
        load_raw(bad)
    bad.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(DatasetFormatError, match="announces 3"):
        load_raw(bad)


def _table(labels=None):
    triples = generate(DatasetSpec(count=20, length_range=(40, 60), seed=3))
    return FeatureTable.from_records([make_features(t.x, t.alpha, t.tau, 4) for t in triples], labels)


@pytest.mark.parametrize("labels", [None, ["u"] * 20])
def test_features_roundtrip(tmp_path, labels):
    table = _table(labels)
    path = tmp_path / "f.csv"
    save_features(table, path)
    header = path.read_text().splitlines()[0].split(",")
    assert header[:2] == ["w1", "w2"] and header[7:11] == ["tau_hat", "mu", "alpha", "m"]
    back = load_features(path, k=4)
    for col in ("W", "tau_hat", "mu", "alpha", "m"):
        assert np.array_equal(getattr(back, col), getattr(table, col))
    assert back.labels == table.labels


def test_features_errors(tmp_path):
    path = tmp_path / "f.csv"
    save_features(_table(), path)
    with pytest.raises(DatasetFormatError, match="k=4"):
        load_features(path, k=10)
    lines = path.read_text().splitlines()
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines[:3] + [lines[3] + ",9"]) + "\n")
    with pytest.raises(DatasetFormatError, match="line 4"):
        load_features(bad)
