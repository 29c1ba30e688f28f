import numpy as np
import pytest

from thermoforge.ensembles import CLASSIFICATION, ForestConfig, fit_adaboost, fit_extra_trees, fit_random_forest
from thermoforge.errors import InvalidParameterError
from thermoforge.tree import feature_importance, fit_cart_classifier, fit_cart_regressor

STEP_X = np.array([[1.0], [2.0], [9.0], [10.0]])
STEP_Y = np.array([0.0, 0.0, 10.0, 10.0])


def test_single_tree_forest_equals_cart(rng):
    X = rng.normal(size=(30, 3))
    y = X[:, 0] ** 2 + rng.normal(scale=0.1, size=30)
    cfg = ForestConfig(n_trees=1, bootstrap=False, feature_subset_size=3, max_depth=None)
    forest = fit_random_forest(X, y, cfg)
    cart = fit_cart_regressor(X, y)
    Q = rng.normal(size=(50, 3))
    assert np.array_equal(forest.predict(Q), cart.predict(Q))


def test_single_tree_forest_equals_cart_classifier(rng):
    X = rng.normal(size=(30, 2))
    labels = (X[:, 0] + 0.3 * X[:, 1] > 0).astype(int)
    cfg = ForestConfig(n_trees=1, bootstrap=False, feature_subset_size=2, max_depth=None)
    forest = fit_random_forest(X, labels, cfg, task=CLASSIFICATION)
    cart = fit_cart_classifier(X, labels)
    Q = rng.normal(size=(50, 2))
    assert np.array_equal(forest.predict(Q), cart.predict(Q))


def test_forest_is_deterministic(rng):
    X = rng.normal(size=(25, 3))
    y = rng.normal(size=25)
    cfg = ForestConfig(n_trees=10, seed=7)
    a, b = fit_random_forest(X, y, cfg), fit_random_forest(X, y, cfg)
    assert a.to_dict() == b.to_dict()
    c = fit_random_forest(X, y, ForestConfig(n_trees=10, seed=8))
    assert a.to_dict() != c.to_dict()


def test_forest_on_step_data():
    forest = fit_random_forest(STEP_X, STEP_Y, ForestConfig(n_trees=50, feature_subset_size=1))
    p = float(forest.predict([[1.5]])[0])
    assert 0.0 <= p <= 10.0
    assert abs(p - 0.0) < abs(p - 10.0)


def test_zero_trees_rejected():
    with pytest.raises(InvalidParameterError):
        fit_random_forest(STEP_X, STEP_Y, ForestConfig(n_trees=0))


def test_classification_score_is_vote_fraction(rng):
    X = rng.normal(size=(40, 2))
    labels = (X[:, 0] > 0).astype(int)
    forest = fit_random_forest(X, labels, ForestConfig(n_trees=9), task=CLASSIFICATION)
    s = forest.decision_score(X)
    assert np.allclose(s * 9, np.round(s * 9))
    assert np.array_equal(forest.predict(X), (s > 0.5).astype(int))


def test_extra_trees_skip_constant_feature(rng):
    X = np.column_stack([np.full(30, 3.0), rng.uniform(size=30)])
    y = (X[:, 1] > 0.5).astype(float)
    model = fit_extra_trees(X, y, ForestConfig(n_trees=20, feature_subset_size=2, bootstrap=False))
    for tree in model.trees:
        assert not np.any(tree.feature == 0)
    assert feature_importance(model)[0] == 0.0


def test_extra_trees_deterministic_and_averaging():
    cfg = ForestConfig(n_trees=100, bootstrap=False, seed=3)
    a = fit_extra_trees(STEP_X, STEP_Y, cfg)
    assert a.to_dict() == fit_extra_trees(STEP_X, STEP_Y, cfg).to_dict()
    one = fit_extra_trees(STEP_X, STEP_Y, ForestConfig(n_trees=1, bootstrap=False, seed=3))
    mse = lambda m: float(np.mean((m.predict(STEP_X) - STEP_Y) ** 2))
    assert mse(a) <= mse(one)


def test_extra_trees_thresholds_inside_node_range(rng):
    X = rng.uniform(size=(30, 2))
    model = fit_extra_trees(X, X[:, 0] + X[:, 1], ForestConfig(n_trees=5, bootstrap=False))
    for tree in model.trees:
        inner = tree.feature >= 0
        f, t = tree.feature[inner], tree.threshold[inner]
        assert np.all((t >= X[:, f].min(axis=0)) & (t < X[:, f].max(axis=0)))


def test_adaboost_separable_stumps():
    X = np.arange(10.0)[:, None]
    labels = np.array([0, 0, 1, 1, 0, 0, 1, 1, 1, 1])
    model = fit_adaboost(X, labels, n_stages=10, base_depth=1)
    assert len(model.trees) <= 10
    assert np.array_equal(model.predict(X), labels)


def test_adaboost_weights_normalised(rng):
    X = rng.normal(size=(40, 2))
    labels = (X[:, 0] * X[:, 1] > 0).astype(int)
    model = fit_adaboost(X, labels, n_stages=20)
    for w in model.weight_history:
        assert abs(w.sum() - 1.0) < 1e-12
        assert np.all(w > 0)


def test_adaboost_perfect_stage_decides_alone():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    model = fit_adaboost(X, [0, 0, 1, 1], n_stages=50)
    assert len(model.trees) == 1 and model.alphas.tolist() == [1.0]
    assert model.predict(X).tolist() == [0, 0, 1, 1]


def test_adaboost_stage_weight_formula():
    # one mistake out of five on the first stump: err = 0.2, alpha = 0.5 ln 4
    X = np.arange(5.0)[:, None]
    labels = [0, 0, 1, 0, 1]
    model = fit_adaboost(X, labels, n_stages=1)
    assert model.alphas[0] == pytest.approx(0.5 * np.log(4.0), rel=1e-12)


def test_adaboost_regression_weighted_median(rng):
    X = rng.uniform(size=(40, 1))
    y = np.sin(6 * X[:, 0])
    model = fit_adaboost(X, y, n_stages=30, base_depth=3, task="regression")
    pred = model.predict(X)
    stage = np.stack([t.predict_value(X)[:, 0] for t in model.trees], axis=1)
    assert np.all(pred >= stage.min(axis=1)) and np.all(pred <= stage.max(axis=1))
    assert float(np.mean((pred - y) ** 2)) < float(np.var(y))


def test_adaboost_zero_stages_rejected():
    with pytest.raises(InvalidParameterError):
        fit_adaboost(STEP_X, [0, 0, 1, 1], n_stages=0)
