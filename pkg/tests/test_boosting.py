import numpy as np
import pytest
from hypothesis import example, given
from hypothesis import strategies as st

from thermoforge.boosting import (BoostConfig, fit_gradient_boosting_classifier, fit_gradient_boosting_regressor,
                                  fit_oblivious_structure, fit_ordered_boosting, fit_second_order_boosting,
                                  second_order_builder, sigmoid)
from thermoforge.errors import InvalidParameterError
from thermoforge.tree import fit_cart_regressor


@given(st.integers(0, 10_000))
def test_gradient_boosting_history_nonincreasing(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 2))
    y = rng.normal(size=20)
    model = fit_gradient_boosting_regressor(X, y, BoostConfig(n_stages=15, learning_rate=0.5, max_depth=2))
    h = np.array(model.history)
    assert np.all(np.diff(h) <= 1e-12 * max(1.0, h[0]))


def test_single_stage_memorises():
    X = np.array([[0.0], [1.0], [2.0], [5.0]])
    y = np.array([3.0, -1.0, 4.0, 1.5])
    model = fit_gradient_boosting_regressor(X, y, BoostConfig(n_stages=1, learning_rate=1.0, max_depth=None))
    assert model.history[-1] == pytest.approx(0.0, abs=1e-24)


def test_invalid_learning_rate():
    with pytest.raises(InvalidParameterError):
        fit_gradient_boosting_regressor([[0.0], [1.0]], [0.0, 1.0], BoostConfig(learning_rate=0.0))


def test_stochastic_variant_is_seeded(rng):
    X = rng.normal(size=(30, 2))
    y = X[:, 0] + rng.normal(scale=0.1, size=30)
    cfg = BoostConfig(n_stages=10, subsample=0.5, seed=5)
    a = fit_gradient_boosting_regressor(X, y, cfg)
    assert a.variant == "stochastic"
    assert a.to_dict() == fit_gradient_boosting_regressor(X, y, cfg).to_dict()


def test_second_order_leaf_weight():
    # residuals [2, 4] give gradients [-2, -4]; -G / (H + lambda) = 6 / 4
    tree = second_order_builder([-2.0, -4.0], [1.0, 1.0], BoostConfig(lambda_l2=2.0, max_depth=0)).build(
        np.zeros((2, 1)))
    assert tree.value[0, 0] == 1.5


def test_second_order_matches_plain_when_unregularised(rng):
    X = rng.normal(size=(25, 2))
    y = rng.normal(size=25)
    cfg = BoostConfig(n_stages=5, lambda_l2=0.0, gamma=0.0, max_depth=2)
    a = fit_second_order_boosting(X, y, cfg)
    b = fit_gradient_boosting_regressor(X, y, cfg)
    assert np.allclose(a.predict(X), b.predict(X), atol=1e-12)


def test_second_order_huge_gamma_has_no_splits(rng):
    X = rng.normal(size=(20, 2))
    y = rng.normal(size=20)
    model = fit_second_order_boosting(X, y, BoostConfig(n_stages=3, gamma=1e9))
    assert all(t.n_nodes == 1 for t in model.trees)


def test_second_order_rejects_negative_lambda():
    with pytest.raises(InvalidParameterError):
        fit_second_order_boosting([[0.0], [1.0]], [0.0, 1.0], BoostConfig(lambda_l2=-1.0))


@given(st.integers(0, 10_000))
@example(233)  # two splits isolating the same sample tie exactly
def test_depth_one_oblivious_is_stump(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(15, 3))
    r = rng.normal(size=15)
    feats, thrs, _, _ = fit_oblivious_structure(X, r, 1)
    t = fit_cart_regressor(X, r, max_depth=1).tree
    assert (feats[0], thrs[0]) == (int(t.feature[0]), float(t.threshold[0]))


def test_oblivious_structure_invariant(rng):
    X = rng.normal(size=(40, 3))
    y = np.sin(X[:, 0]) + X[:, 1] * X[:, 2]
    model = fit_ordered_boosting(X, y, BoostConfig(n_stages=10, max_depth=3))
    for ob in model.oblivious_trees:
        tree = ob.to_tree()
        by_depth = {}

        def walk(i, d):
            if tree.feature[i] < 0:
                return
            by_depth.setdefault(d, set()).add((int(tree.feature[i]), float(tree.threshold[i])))
            walk(tree.left[i], d + 1)
            walk(tree.right[i], d + 1)

        walk(0, 0)
        assert all(len(pairs) == 1 for pairs in by_depth.values())
        assert len(ob.leaf_values) == 2 ** ob.depth


def test_ordered_prefix_rule_identity_permutation():
    X = np.zeros((3, 1))
    y = np.array([1.0, 4.0, 7.0])
    lr = 0.5
    model = fit_ordered_boosting(X, y, BoostConfig(n_stages=1, max_depth=0, learning_rate=lr),
                                 permutations=[np.arange(3)])
    S = model.ordered_predictions[0]
    init = 4.0
    assert S[0] == init  # nothing precedes sample 0
    assert S[1] == pytest.approx(init + lr * (1.0 - init))
    assert S[2] == pytest.approx(init + lr * ((1.0 - init) + (4.0 - init)) / 2)


def test_ordered_boosting_reduces_training_error(rng):
    X = rng.uniform(size=(50, 2))
    y = 3 * X[:, 0] - 2 * X[:, 1] ** 2
    model = fit_ordered_boosting(X, y, BoostConfig(n_stages=60, max_depth=3))
    assert model.history[-1] < 0.1 * model.history[0]


def test_sigmoid_symmetry_and_extremes():
    z = np.array([-800.0, -30.0, -1.0, 0.0, 1.0, 30.0, 800.0])
    assert np.all(np.abs(sigmoid(z) + sigmoid(-z) - 1.0) <= 1e-15)
    assert sigmoid(np.array([0.0]))[0] == 0.5
    assert np.all(np.isfinite(sigmoid(z)))


def test_boosting_classifier_fits_separable(rng):
    X = rng.normal(size=(40, 2))
    labels = (X[:, 0] > 0.2).astype(int)
    model = fit_gradient_boosting_classifier(X, labels, BoostConfig(n_stages=30))
    assert np.array_equal(model.predict(X), labels)
    assert model.history[-1] < model.history[0]
    s = model.decision_score(X)
    assert np.all((s > 0) & (s < 1))
