import numpy as np
import pytest

from thermoforge.errors import InvalidParameterError
from thermoforge.linear import (KNNClassifier, LogisticModel, LogisticParams, euclidean_distance, fit_logistic,
                                fit_sgd_classifier, knn_predict)


def test_zero_coefficients_predict_one():
    m = LogisticModel(np.zeros(2), 0.0)
    X = np.array([[1.0, -3.0], [0.0, 0.0]])
    assert np.all(m.predict_proba(X) == 0.5)
    assert m.predict(X).tolist() == [1, 1]


def test_logistic_separable_fit():
    X = np.array([[-2.0], [-1.0], [-0.5], [0.5], [1.0], [2.0]])
    labels = [0, 0, 0, 1, 1, 1]
    m = fit_logistic(X, labels, LogisticParams(learning_rate=0.5, n_epochs=200))
    assert m.predict(X).tolist() == labels
    assert np.all(np.diff(m.loss_history) < 0)


def test_logistic_rejects_nonbinary_labels():
    with pytest.raises(Exception):
        fit_logistic([[0.0], [1.0]], [0, 3])


def test_logistic_label_flip_complements_probabilities(rng):
    X = rng.normal(size=(20, 2))
    labels = (X[:, 0] > 0).astype(int)
    a = fit_logistic(X, labels)
    b = fit_logistic(X, 1 - labels)
    assert np.allclose(a.predict_proba(X) + b.predict_proba(X), 1.0, atol=1e-12)


def test_sgd_single_step_by_hand():
    m = fit_sgd_classifier([[1.0]], [1], learning_rate=0.5, n_epochs=1, fit_intercept=False)
    assert m.coef.tolist() == [0.25]


def test_sgd_rejects_nonpositive_rate():
    with pytest.raises(InvalidParameterError):
        fit_sgd_classifier([[1.0]], [1], learning_rate=0.0)


def test_sgd_deterministic(rng):
    X = rng.normal(size=(30, 3))
    labels = (X @ [1.0, -1.0, 0.5] > 0).astype(int)
    a = fit_sgd_classifier(X, labels, n_epochs=20, seed=11)
    b = fit_sgd_classifier(X, labels, n_epochs=20, seed=11)
    assert a.coef.tolist() == b.coef.tolist() and a.loss_history == b.loss_history
    c = fit_sgd_classifier(X, labels, n_epochs=20, seed=12)
    assert a.coef.tolist() != c.coef.tolist()


def test_euclidean_distance():
    assert euclidean_distance((0, 0, 0), (1, 2, 2)) == 3.0


def test_knn_identity_and_full_k(rng):
    X = rng.normal(size=(11, 2))
    labels = np.array([0, 1, 1, 0, 1, 1, 0, 1, 0, 1, 1])
    lab, score = knn_predict(X, labels, X[3:4], 1)
    assert lab[0] == 0 and score[0] == 0.0
    lab, _ = knn_predict(X, labels, rng.normal(size=(5, 2)) * 100, len(X))
    assert np.all(lab == 1)


def test_knn_k1_perfect_training_accuracy(rng):
    X = rng.normal(size=(25, 3))
    labels = rng.integers(0, 2, 25)
    assert np.array_equal(KNNClassifier(X, labels, k=1).predict(X), labels)


def test_knn_tie_rules():
    X = np.array([[0.0], [2.0], [-3.0]])
    # distance tie between index 0 and 1 at query 1.0: lower index wins
    lab, _ = knn_predict(X, [1, 0, 0], [[1.0]], 1)
    assert lab[0] == 1
    # vote tie 1-1: class with nearer mean distance wins
    lab, score = knn_predict(np.array([[0.0], [3.0]]), [0, 1], [[2.0]], 2)
    assert lab[0] == 1 and score[0] == 0.5
    # exact vote and distance tie: class 0
    lab, _ = knn_predict(np.array([[0.0], [2.0]]), [1, 0], [[1.0]], 2)
    assert lab[0] == 0


def test_knn_k_too_large():
    with pytest.raises(InvalidParameterError):
        knn_predict([[0.0]], [1], [[0.0]], 2)
