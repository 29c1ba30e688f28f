import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_force_root_split, gini_brute
from thermoforge import splitting
from thermoforge.errors import EmptyInputError, InvalidParameterError, UnsupportedOperationError
from thermoforge.linear import fit_logistic
from thermoforge.tree import (export_tree_structure, feature_importance, fit_cart_classifier, fit_cart_regressor,
                              gini, parse_tree_structure)


def root(model):
    t = model.tree
    return int(t.feature[0]), float(t.threshold[0])


def test_constant_target_single_leaf():
    m = fit_cart_regressor(np.arange(5.0)[:, None], np.full(5, 7.0))
    assert m.tree.n_nodes == 1 and m.predict([[100.0]])[0] == 7.0


def test_step_split_at_midpoint():
    m = fit_cart_regressor(np.array([[1.0], [2.0], [9.0], [10.0]]), [0.0, 0.0, 10.0, 10.0], max_depth=1)
    assert root(m) == (0, 5.5)
    assert m.predict([[0.0], [20.0]]).tolist() == [0.0, 10.0]


def test_depth_zero_is_mean():
    m = fit_cart_regressor(np.arange(4.0)[:, None], [1.0, 2.0, 3.0, 6.0], max_depth=0)
    assert m.predict([[0.0]])[0] == 3.0


def test_empty_input_rejected():
    with pytest.raises(EmptyInputError):
        fit_cart_regressor(np.zeros((0, 2)), np.zeros(0))


def test_min_samples_leaf_respected(rng):
    X = rng.normal(size=(40, 2))
    m = fit_cart_regressor(X, rng.normal(size=40), min_samples_leaf=5)
    leaves = m.tree.feature < 0
    assert m.tree.n_samples[leaves].min() >= 5


def test_gini_values():
    assert gini([1, 1, 1]) == 0.0
    assert gini([0, 1]) == 0.5
    assert gini([0, 0, 1, 1, 1]) == pytest.approx(gini_brute([0, 0, 1, 1, 1]), abs=1e-15)


def test_classifier_separable_and_label_checks():
    m = fit_cart_classifier(np.array([[0.0], [1.0], [10.0], [11.0]]), [0, 0, 1, 1], max_depth=1)
    assert m.predict(np.array([[0.0], [1.0], [10.0], [11.0]])).tolist() == [0, 0, 1, 1]
    assert m.decision_score([[10.5]])[0] == 1.0
    with pytest.raises(Exception):
        fit_cart_classifier(np.zeros((2, 1)), [0, 2])


@given(st.integers(2, 12), st.integers(1, 3), st.integers(0, 10**6))
def test_root_split_matches_brute_force(n, p, seed):
    r = np.random.default_rng(seed)
    X = r.integers(0, 5, size=(n, p)).astype(float)
    y = r.normal(size=n)
    best, winners = brute_force_root_split(X, y)
    m = fit_cart_regressor(X, y, max_depth=1)
    if not winners:
        assert m.tree.n_nodes == 1
        return
    total = ((y - y.mean()) ** 2).sum()
    if total - best <= 1e-12:  # no strictly improving split
        assert m.tree.n_nodes == 1
        return
    assert root(m) == min(winners)


@given(st.integers(2, 30), st.integers(1, 4), st.integers(0, 10**6), st.integers(1, 3))
def test_compiled_and_python_scans_agree(n, p, seed, min_leaf):
    if "compiled" not in splitting.available_backends():
        pytest.skip("compiled backend not built")
    r = np.random.default_rng(seed)
    X = np.ascontiguousarray(r.integers(0, 4, size=(n, p)).astype(float))
    stats = r.normal(size=(n, 2))
    denom = r.uniform(0.5, 2.0, n)
    rows = np.arange(n)
    out = {}
    for name in ("compiled", "python"):
        with splitting.use_backend(name):
            out[name] = splitting.best_split(X, rows, stats, denom, range(p), lam=0.3, min_leaf=min_leaf)
    assert out["compiled"] == out["python"]


def test_ties_prefer_lower_feature():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
    m = fit_cart_regressor(X, [0.0, 0.0, 1.0, 1.0], max_depth=1)
    assert root(m) == (0, 0.5)


def test_export_round_trip(rng):
    X = rng.normal(size=(30, 3))
    y = X[:, 0] ** 2 + rng.normal(size=30) * 0.1
    m = fit_cart_regressor(X, y, max_depth=4, feature_names=["a", "b", "c"])
    text = export_tree_structure(m, "json")
    (tree,) = parse_tree_structure(text)
    np.testing.assert_array_equal(tree.predict_value(X)[:, 0], m.predict(X))
    root_node = json.loads(text)["trees"][0]
    assert {"samples", "value", "feature_name", "threshold", "left", "right"} <= set(root_node)


def test_text_export_shapes():
    leaf = fit_cart_regressor(np.zeros((3, 1)), [1.0, 1.0, 1.0])
    assert len(export_tree_structure(leaf, "text").splitlines()) == 1
    stump = fit_cart_regressor(np.array([[0.0], [1.0]]), [0.0, 1.0], max_depth=1, feature_names=["RR"])
    lines = export_tree_structure(stump, "text").splitlines()
    assert len(lines) == 3 and lines[0].startswith("RR <= 0.5")


def test_importance_informative_feature(rng):
    X = np.column_stack([rng.uniform(size=200), rng.uniform(size=200), np.full(200, 3.0)])
    y = (X[:, 0] > 0.5).astype(float)
    imp = feature_importance(fit_cart_regressor(X, y, max_depth=3))
    assert imp[0] > 0.9 and imp[2] == 0.0
    assert imp.sum() == pytest.approx(1.0, abs=1e-12)


def test_importance_unsupported_for_linear_models():
    m = fit_logistic(np.array([[0.0], [1.0]]), [0, 1])
    with pytest.raises(UnsupportedOperationError):
        feature_importance(m)


def test_negative_depth_rejected():
    with pytest.raises(InvalidParameterError):
        fit_cart_regressor(np.zeros((2, 1)), [0.0, 1.0], max_depth=-1)
