
import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from subspace_abstain.data import (LabeledDataset, ToyGeometry, dumps_dataset,
                                   gen_gaussian_clusters, gen_toy_segments, load_dataset,
                                   loads_dataset, min_interclass_distance, nearest_neighbor,
                                   nearest_neighbors, random_split, save_dataset)
from subspace_abstain.errors import ContractError, ParseError
from subspace_abstain.rng import make_rng

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_load_basic(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1,0.0,0.0\n0,1.0,2.0")
    ds = load_dataset(p)
    assert len(ds) == 2 and ds.dim == 2
    assert ds.labels.tolist() == [1, 0]


def test_ragged_row_reports_line():
    with pytest.raises(ParseError) as e:
        loads_dataset("1,0.0\n0,1.0,2.0")
    assert e.value.line == 2


def test_empty_file():
    with pytest.raises(ParseError):
        loads_dataset("")


def test_non_numeric_cell():
    with pytest.raises(ParseError) as e:
        loads_dataset("0,1.0\n1,abc\n")
    assert e.value.line == 2


def test_string_labels_mapped_sorted():
    ds = loads_dataset("cat,0.0\ndog,1.0\ncat,2.0\n")
    assert ds.label_names == ("cat", "dog")
    assert ds.labels.tolist() == [0, 1, 0]


@given(hnp.arrays(float, st.tuples(st.integers(1, 8), st.integers(1, 4)), elements=finite),
       st.data())
def test_round_trip_is_exact(x, data):
    labels = data.draw(hnp.arrays(np.int64, x.shape[0], elements=st.integers(0, 5)))
    ds = LabeledDataset(x, labels)
    back = loads_dataset(dumps_dataset(ds))
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)


def test_save_load_file(tmp_path):
    ds = gen_gaussian_clusters(3, 5, [[0, 0, 0], [1, 1, 1]], 0.3, seed=1)
    save_dataset(ds, tmp_path / "x.csv")
    back = load_dataset(tmp_path / "x.csv")
    assert np.array_equal(back.features, ds.features)


def test_stddev_zero_gives_centers():
    c = np.array([[0.0, 1.0], [5.0, -2.0]])
    ds = gen_gaussian_clusters(2, [3, 4], c, 0.0, seed=0)
    for k in range(2):
        assert np.all(ds.features[ds.labels == k] == c[k])


def test_gaussian_clusters_deterministic():
    a = gen_gaussian_clusters(4, 10, np.eye(4)[:2] * 3, 1.0, seed=9)
    b = gen_gaussian_clusters(4, 10, np.eye(4)[:2] * 3, 1.0, seed=9)
    assert a.features.tobytes() == b.features.tobytes()


def test_well_separated_clusters_mostly_far_apart():
    # 100 seeds of two clusters 10 apart with stddev 0.1: min interclass distance >= 8
    c = np.array([[0.0, 0.0], [10.0, 0.0]])
    ok = sum(min_interclass_distance(gen_gaussian_clusters(2, 100, c, 0.1, seed=s)) >= 8
             for s in range(100))
    assert ok == 100


def test_single_class_warns_and_coincident_centers_rejected():
    with pytest.warns(UserWarning):
        gen_gaussian_clusters(2, 3, [[0.0, 0.0]], 1.0, seed=0)
    with pytest.raises(ContractError):
        gen_gaussian_clusters(2, 3, [[0.0, 0.0], [0.0, 0.0]], 1.0, seed=0)


def test_toy_segments_layout():
    g = ToyGeometry(D=1.0, r=10.0, m=20)
    ds = gen_toy_segments(g, seed=3)
    a = ds.features[ds.labels == 0]
    b = ds.features[ds.labels == 1]
    assert np.all(a[:, 1] == 0) and np.all((0 <= a[:, 0]) & (a[:, 0] <= 1))
    assert np.all((11 <= b[:, 0]) & (b[:, 0] <= 12))
    assert min_interclass_distance(ds) >= 10
    assert len(gen_toy_segments(ToyGeometry(1.0, 1.0, 1), seed=0)) == 2


def test_toy_fixture_interclass_distance():
    ds = gen_toy_segments(ToyGeometry(D=1.0, r=10.0, m=2), seed=5)
    f = ds.features[:, 0]
    brute = min(abs(f[i] - f[j]) for i in range(4) for j in range(4) if ds.labels[i] != ds.labels[j])
    v = min_interclass_distance(ds)
    assert v == brute and 10 <= v <= 12


def test_duplicate_point_two_labels():
    ds = LabeledDataset([[1.0, 1.0], [1.0, 1.0]], [0, 1])
    assert min_interclass_distance(ds) == 0.0


def test_single_class_interclass_undefined():
    with pytest.raises(ContractError):
        min_interclass_distance(LabeledDataset([[0.0], [1.0]], [0, 0]))


def test_nn_exact_hit_and_ties():
    x = np.zeros((8, 2))
    x[:, 0] = np.arange(8) * 10.0
    x[3] = [1.0, 0.0]
    x[7] = [-1.0, 0.0]
    ds = LabeledDataset(x, np.zeros(8, dtype=int))
    assert nearest_neighbor(ds, x[5]) == (5, 0.0)
    x[0] = [50.0, 50.0]
    ds = LabeledDataset(x, np.zeros(8, dtype=int))
    assert nearest_neighbor(ds, [0.0, 0.0])[0] == 3


@given(st.integers(0, 2**32), st.integers(1, 40), st.integers(1, 5))
def test_nn_matches_scan_and_is_minimal(seed, m, n2):
    rng = make_rng(seed)
    ds = LabeledDataset(rng.integers(-3, 4, (m, n2)).astype(float), np.zeros(m, dtype=int))
    q = rng.integers(-3, 4, n2).astype(float)
    i, d = nearest_neighbor(ds, q)
    dist = [float(np.linalg.norm(q - p)) for p in ds.features]
    assert i == dist.index(min(dist)) and d == min(dist)
    assert all(d <= dj for dj in dist)
    idx, dd = nearest_neighbors(ds, q[None])
    assert idx[0] == i and dd[0] == d


@given(st.integers(0, 2**32))
def test_interclass_invariance(seed):
    rng = make_rng(seed)
    x = rng.standard_normal((12, 3))
    y = rng.integers(0, 3, 12)
    y[:2] = [0, 1]
    base = min_interclass_distance(LabeledDataset(x, y))
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    moved = x @ q.T + rng.standard_normal(3)
    assert abs(min_interclass_distance(LabeledDataset(moved, y)) - base) <= 1e-9
    perm = np.array([2, 0, 1])
    assert min_interclass_distance(LabeledDataset(x, perm[y])) == base


def test_random_split_partitions():
    ds = gen_gaussian_clusters(2, 10, [[0, 0], [3, 3]], 1.0, seed=2)
    a, b = random_split(ds, seed=4)
    assert len(a) + len(b) == len(ds)
    rows = {tuple(r) for r in a.features} | {tuple(r) for r in b.features}
    assert len(rows) == len(ds)


def test_dataset_contract():
    with pytest.raises(ContractError):
        LabeledDataset(np.zeros((0, 2)), np.zeros(0, dtype=int))
    with pytest.raises(ContractError):
        LabeledDataset([[np.inf]], [0])
    with pytest.raises(ContractError):
        LabeledDataset([[1.0]], [-1])
