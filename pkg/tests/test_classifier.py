import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subspace_abstain.classifier import (ABSTAIN, ClassifierConfig, PointSpecificModel,
                                         build_model, load_model, model_from_json,
                                         model_to_json, point_specific_thresholds, predict,
                                         predict_batch, predict_linear, predict_linear_batch,
                                         predict_point_specific, preprocess_separation,
                                         save_model, train_linear_baseline)
from subspace_abstain.data import LabeledDataset, gen_gaussian_clusters, random_split, save_dataset
from subspace_abstain.errors import ConfigError, ContractError, EmptyModelError
from subspace_abstain.rng import make_rng


def _random_ds(seed, m=15, n2=2, k=3):
    rng = make_rng(seed)
    return LabeledDataset(rng.standard_normal((m, n2)) * 2, rng.integers(0, k, m))


def _brute_predict(ds, x, tau):
    best, arg = math.inf, None
    for i, p in enumerate(ds.features):
        d = math.sqrt(sum((a - b) ** 2 for a, b in zip(p, x)))
        if d < best:
            best, arg = d, i
    return int(ds.labels[arg]) if best < tau else None


def test_config_validation():
    with pytest.raises(ConfigError):
        ClassifierConfig(-1.0)
    with pytest.raises(ConfigError):
        ClassifierConfig(1.0, float("nan"))


def test_sigma_zero_removes_nothing():
    ds = _random_ds(0)
    kept, removed = preprocess_separation(ds, 0.0)
    assert removed == () and len(kept) == len(ds)


def test_close_pair_both_removed():
    ds = LabeledDataset([[0.0], [1.0], [10.0]], [0, 1, 0])
    kept, removed = preprocess_separation(ds, 2.0)
    assert removed == (0, 1)


def test_simultaneous_pass():
    ds = LabeledDataset([[0.0], [0.5], [3.0]], [0, 1, 0])
    kept, removed = preprocess_separation(ds, 1.0)
    assert removed == (0, 1) and kept.features.tolist() == [[3.0]]


def test_everything_removed():
    with pytest.raises(EmptyModelError):
        preprocess_separation(LabeledDataset([[0.0], [0.1]], [0, 1]), 1.0)


@given(st.integers(0, 2**32), st.floats(0.0, 3.0))
def test_preprocess_separation_and_idempotence(seed, sigma):
    ds = _random_ds(seed)
    try:
        kept, removed = preprocess_separation(ds, sigma)
    except EmptyModelError:
        return
    if len(np.unique(kept.labels)) > 1:
        x, y = kept.features, kept.labels
        d = np.linalg.norm(x[:, None] - x[None], axis=2)
        assert np.all(d[y[:, None] != y[None, :]] >= sigma)
    assert preprocess_separation(kept, sigma)[1] == ()
    assert len(kept) + len(removed) == len(ds)


@given(st.integers(0, 2**32), st.floats(0.0, 3.0))
def test_preprocess_row_order_invariance(seed, sigma):
    ds = _random_ds(seed)
    perm = make_rng(seed, 1).permutation(len(ds))
    try:
        _, removed = preprocess_separation(ds, sigma)
        _, removed_p = preprocess_separation(ds.subset(perm), sigma)
    except EmptyModelError:
        return
    assert sorted(perm[list(removed_p)].tolist()) == list(removed)


def test_predict_basics():
    ds = LabeledDataset([[0.0, 0.0], [3.0, 0.0]], [4, 7])
    m = build_model(ds, 1.0)
    assert predict(m, [3.0, 0.0]) == 7
    assert predict(m, [1.0, 0.0]) is None  # exactly tau away
    assert predict(m, [0.999, 0.0]) == 4
    assert predict(build_model(ds, 0.0), [0.0, 0.0]) is None


@given(st.integers(0, 2**32))
def test_predict_matches_brute_force(seed):
    ds = _random_ds(seed)
    rng = make_rng(seed, 2)
    tau = float(rng.uniform(0, 3))
    m = build_model(ds, tau)
    xs = rng.standard_normal((10, 2)) * 2
    batch = predict_batch(m, xs)
    for x, b in zip(xs, batch):
        out = predict(m, x)
        assert out == _brute_predict(ds, x, tau)
        assert (b == ABSTAIN) == (out is None) and (out is None or b == out)
        if out is not None:
            d = np.linalg.norm(ds.features - x, axis=1)
            i = int(np.argmin(d))
            assert ds.labels[i] == out and d[i] < tau


@given(st.integers(0, 2**32), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_abstention_monotone_in_tau(seed, t1, dt):
    ds = _random_ds(seed)
    x = make_rng(seed, 3).standard_normal(2) * 2
    if predict(build_model(ds, t1), x) is not None:
        assert predict(build_model(ds, t1 + dt), x) is not None


def test_infinite_tau_is_one_nn():
    ds = _random_ds(4)
    m = build_model(ds, math.inf)
    for x in make_rng(5).standard_normal((20, 2)) * 5:
        assert predict(m, x) == int(ds.labels[np.argmin(np.linalg.norm(ds.features - x, axis=1))])


# ---- point-specific thresholds ----

def test_point_specific_examples():
    A = LabeledDataset([[0.0, 0.0]], [0])
    B = LabeledDataset([[2.0, 0.0]], [1])
    assert predict_point_specific(A, B, [0.0, 0.0]) == 0
    B0 = LabeledDataset([[0.0, 0.0]], [1])
    assert predict_point_specific(A, B0, [0.0, 0.0]) is None


def test_point_specific_unbounded_flagged():
    A = LabeledDataset([[0.0], [5.0]], [0, 1])
    B = LabeledDataset([[1.0]], [0])
    psm = PointSpecificModel.fit(A, B)
    assert psm.unbounded_indices == (0,)
    assert predict_point_specific(psm, [0.3]) == 0


def test_point_specific_against_bruteforce_table():
    ds = gen_gaussian_clusters(2, 30, [[0, 0], [4, 0]], 1.0, seed=6)
    A, B = random_split(ds, seed=1)
    table = np.array([min(np.linalg.norm(a - b) for b, yb in zip(B.features, B.labels) if yb != ya)
                      for a, ya in zip(A.features, A.labels)])
    assert np.allclose(point_specific_thresholds(A, B), table, rtol=1e-12, atol=0)
    psm = PointSpecificModel.fit(A, B)
    for x in make_rng(7).uniform(-3, 7, (200, 2)):
        d = np.linalg.norm(A.features - x, axis=1)
        i = int(np.argmin(d))
        expect = int(A.labels[i]) if d[i] < table[i] else None
        assert predict_point_specific(psm, x) == expect


# ---- linear baseline ----

def _separable():
    return gen_gaussian_clusters(2, 50, [[0.0, 0.0], [10.0, 0.0]], 0.1, seed=3)


def test_linear_separable_training_accuracy():
    ds = _separable()
    lm = train_linear_baseline(ds)
    assert np.all(predict_linear_batch(lm, ds.features) == ds.labels)
    assert predict_linear(lm, ds.features[0]) == ds.labels[0]


def test_linear_needs_two_classes():
    with pytest.raises(ContractError):
        train_linear_baseline(LabeledDataset([[0.0], [1.0]], [0, 0]))


def test_linear_ties_lowest_class():
    from subspace_abstain.classifier import LinearModel
    lm = LinearModel(np.zeros((3, 2)), np.zeros(3), np.array([2, 5, 9]))
    assert predict_linear(lm, [1.0, 1.0]) == 2


def test_linear_singular_gram_still_trains():
    ds = LabeledDataset([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]], [0, 0, 1])
    lm = train_linear_baseline(ds)
    assert predict_linear(lm, [2.0, 2.0]) == 1


# ---- persistence ----

def test_model_json_round_trip(tmp_path):
    ds = _random_ds(11)
    model = build_model(ds, 0.7, 0.3)
    save_dataset(ds, tmp_path / "train.csv")
    save_model(model, tmp_path / "m.json", dataset_path="train.csv")
    back = load_model(tmp_path / "m.json")
    assert back.removed_indices == model.removed_indices
    assert np.array_equal(back.train.features, model.train.features)
    inline = model_from_json(model_to_json(model, original=ds))
    assert np.array_equal(inline.train.features, model.train.features)
