import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from svea.data import (DataError, Dataset, default_subset_size, disjoint_partition, load_csv,
                       train_test_split, write_csv, zscore)


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def make(m, n=2, seed=0, positives=None):
    rng = np.random.default_rng(seed)
    y = np.ones(m)
    y[: m - (positives if positives is not None else m // 2)] = -1
    return Dataset(rng.normal(size=(m, n)), y)


def test_label_mapping(tmp_path):
    path = write(tmp_path, "a,b,label\n1,2,yes\n3,4,no\n5,6,yes\n")
    d = load_csv(path, "label", "yes")
    assert d.labels.tolist() == [1, -1, 1]
    assert d.feature_names == ("a", "b")
    assert d.features.tolist() == [[1, 2], [3, 4], [5, 6]]


def test_label_column_by_index_keeps_feature_order(tmp_path):
    path = write(tmp_path, "y,a,b\n1,0.5,2\n-1,1.5,3\n")
    d = load_csv(path, 0, "1")
    assert d.feature_names == ("a", "b")
    assert d.labels.tolist() == [1, -1]


def test_label_only_file_rejected(tmp_path):
    path = write(tmp_path, "label\nyes\nno\n")
    with pytest.raises(DataError, match="n >= 1 required"):
        load_csv(path, "label", "yes")


def test_missing_cell_names_row_and_column(tmp_path):
    path = write(tmp_path, "a,b,label\n1,2,yes\n3,,no\n")
    with pytest.raises(DataError, match=r"row 3, column 'b': missing value"):
        load_csv(path, "label", "yes")


def test_non_numeric_cell(tmp_path):
    path = write(tmp_path, "a,b,label\n1,x,yes\n")
    with pytest.raises(DataError, match="non-numeric"):
        load_csv(path, "label", "yes")


def test_nan_cell(tmp_path):
    path = write(tmp_path, "a,label\nnan,yes\n")
    with pytest.raises(DataError, match="non-finite"):
        load_csv(path, "label", "yes")


def test_three_labels_rejected(tmp_path):
    path = write(tmp_path, "a,label\n1,x\n2,y\n3,z\n")
    with pytest.raises(DataError, match="more than two"):
        load_csv(path, "label", "x")


def test_unknown_label_column(tmp_path):
    path = write(tmp_path, "a,label\n1,x\n")
    with pytest.raises(DataError, match="not found"):
        load_csv(path, "target", "x")


def test_pima_shaped_file(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(768, 8))
    y = rng.integers(0, 2, size=768)
    lines = ["f1,f2,f3,f4,f5,f6,f7,f8,outcome"]
    lines += [",".join(map(repr, row)) + f",{lab}" for row, lab in zip(x.tolist(), y)]
    d = load_csv(write(tmp_path, "\n".join(lines) + "\n"), "outcome", "1")
    assert (d.m, d.n) == (768, 8)


@settings(max_examples=25, deadline=None)
@given(x=arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 5)),
                elements=st.floats(-1e6, 1e6, allow_nan=False)),
       seed=st.integers(0, 100))
def test_csv_round_trip(tmp_path_factory, x, seed):
    y = np.where(np.random.default_rng(seed).random(x.shape[0]) < 0.5, 1.0, -1.0)
    d = Dataset(x, y, [f"col{j}" for j in range(x.shape[1])])
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    write_csv(d, path)
    back = load_csv(path, "label", "1")
    assert np.array_equal(back.features, d.features)
    assert np.array_equal(back.labels, d.labels)
    assert back.feature_names == d.feature_names
    assert back.fingerprint == d.fingerprint


def test_dataset_invariants():
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 1)), [1, 0])
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 2)), [1, -1], ["a", "a"])
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 65)), [1, -1])
    with pytest.raises(DataError):
        Dataset(np.array([[np.inf]]), [1])


def test_dataset_is_read_only():
    d = make(4)
    with pytest.raises(ValueError):
        d.features[0, 0] = 1.0


def test_split_sizes_and_disjoint():
    d = make(10, seed=1)
    s = train_test_split(d, 0.3, 7)
    assert (s.train.m, s.test.m) == (7, 3)
    rows = {tuple(r) for r in s.train.features} | {tuple(r) for r in s.test.features}
    assert len(rows) == 10


def test_split_stratified():
    d = make(100, positives=50, seed=2)
    s = train_test_split(d, 0.2, 3)
    assert s.test.class_counts == (10, 10)


def test_split_stratification_within_one_per_class():
    for m, pos, frac in [(37, 11, 0.25), (101, 60, 0.33), (9, 2, 0.5)]:
        d = make(m, positives=pos, seed=m)
        s = train_test_split(d, frac, 0)
        tp, tn = s.train.class_counts
        assert abs(tp - pos * s.train.m / m) <= 1
        assert abs(tn - (m - pos) * s.train.m / m) <= 1


def test_split_deterministic():
    d = make(50, seed=4)
    a, b = train_test_split(d, 0.3, 11), train_test_split(d, 0.3, 11)
    assert a.train.fingerprint == b.train.fingerprint
    assert a.test.fingerprint == b.test.fingerprint


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
def test_split_fraction_out_of_range(fraction):
    with pytest.raises(DataError):
        train_test_split(make(10), fraction, 0)


def test_partition_counts():
    p = disjoint_partition(make(100), 30, 0)
    assert p.count == 3 and p.leftover_rows == 10
    assert all(s.m == 30 for s in p.subsets)


def test_partition_default_size():
    assert default_subset_size(6) == 36
    assert disjoint_partition(make(100, n=6), None, 0).m_s == 36


def test_partition_boundary_and_error():
    p = disjoint_partition(make(30), 30, 0)
    assert p.count == 1 and p.leftover_rows == 0
    with pytest.raises(DataError, match="at most 30"):
        disjoint_partition(make(30), 31, 0)


def test_partition_rows_used_once():
    d = Dataset(np.arange(200, dtype=float).reshape(100, 2), np.ones(100))
    p = disjoint_partition(d, 7, 5)
    pooled = np.concatenate([s.features[:, 0] for s in p.subsets])
    assert len(set(pooled.tolist())) == pooled.size == 7 * 14
    assert set(pooled.tolist()) <= set(d.features[:, 0].tolist())


def test_zscore():
    d = Dataset(np.array([[1.0, 5.0], [3.0, 5.0]]), [1, -1])
    z = zscore(d)
    assert z.features[:, 0].tolist() == [-1.0, 1.0]
    assert z.features[:, 1].tolist() == [0.0, 0.0]


def test_standardize_flag_off_by_default(tmp_path):
    path = write(tmp_path, "a,label\n10,1\n20,-1\n")
    assert load_csv(path, "label", "1").features[:, 0].tolist() == [10.0, 20.0]
    assert load_csv(path, "label", "1", standardize=True).features[:, 0].tolist() == [-1.0, 1.0]
