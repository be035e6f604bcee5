"""Reference downstream classifier: softmax regression on time-pooled features."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._rng import SHUFFLE, stream
from .exceptions import FormatError, InvalidArgumentError

MODEL_FORMAT = "quanv-softmax/1"


def pool_features(fm):
    """Mean over the time axis; returns ``rows * channels`` values ordered (row, channel)."""
    fm = np.asarray(fm, dtype=float)
    if fm.ndim != 3:
        raise InvalidArgumentError("feature map must be 3-D (rows, cols, channels)")
    return fm.mean(axis=1).reshape(-1)


class FeaturePooler(TransformerMixin, BaseEstimator):
    """(n, rows, cols, channels) feature maps -> (n, rows * channels) vectors."""

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return np.stack([pool_features(fm) for fm in X])


@dataclass
class ClassifierParams:
    weights: np.ndarray  # (classes, features)
    bias: np.ndarray  # (classes,)

    @classmethod
    def zeros(cls, n_classes, n_features):
        return cls(np.zeros((n_classes, n_features)), np.zeros(n_classes))

    def copy(self):
        return ClassifierParams(self.weights.copy(), self.bias.copy())


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 50
    batch_size: int = 32
    rng_seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidArgumentError("learning_rate must be > 0")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise InvalidArgumentError("batch_size must be >= 1")
        if int(self.epochs) != self.epochs or self.epochs < 0:
            raise InvalidArgumentError("epochs must be >= 0")


def logits(params, X):
    return X @ params.weights.T + params.bias


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _check_labels(y, n_classes):
    y = np.asarray(y)
    if y.ndim != 1 or not np.issubdtype(y.dtype, np.integer):
        raise InvalidArgumentError("labels must be a 1-D integer array")
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise InvalidArgumentError(f"labels must lie in [0, {n_classes})")
    return y


def loss_and_grad(params, X, y):
    """Mean softmax cross-entropy and its analytic gradient."""
    X = np.asarray(X, dtype=float)
    n_classes = params.weights.shape[0]
    y = _check_labels(y, n_classes)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[1] != params.weights.shape[1]:
        raise InvalidArgumentError("feature matrix does not match labels or weights")
    z = logits(params, X)
    zmax = z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z - zmax).sum(axis=1)) + zmax[:, 0]
    n = X.shape[0]
    loss = float(np.mean(lse - z[np.arange(n), y]))
    g = np.exp(z - lse[:, None])
    g[np.arange(n), y] -= 1.0
    g /= n
    return loss, ClassifierParams(g.T @ X, g.sum(axis=0))


def train(features, labels, config, n_classes=None):
    """Minibatch SGD from zero weights with seeded shuffling.

    Returns ``(params, loss_trace)`` where ``loss_trace[e]`` is the full-data
    loss after epoch ``e``.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InvalidArgumentError("features must be a non-empty 2-D array")
    y = np.asarray(labels)
    if y.shape != (X.shape[0],):
        raise InvalidArgumentError(
            f"got {X.shape[0]} feature rows but labels of shape {y.shape}"
        )
    if n_classes is None:
        n_classes = int(y.max()) + 1
    y = _check_labels(y, n_classes)

    params = ClassifierParams.zeros(n_classes, X.shape[1])
    rng = stream(config.rng_seed, SHUFFLE)
    n = X.shape[0]
    bs = min(int(config.batch_size), n)
    trace = []
    for _ in range(int(config.epochs)):
        order = rng.permutation(n) if bs < n else np.arange(n)
        for s in range(0, n, bs):
            idx = order[s:s + bs]
            _, g = loss_and_grad(params, X[idx], y[idx])
            params.weights -= config.learning_rate * g.weights
            params.bias -= config.learning_rate * g.bias
        if not (np.all(np.isfinite(params.weights)) and np.all(np.isfinite(params.bias))):
            raise FloatingPointError("training diverged (non-finite parameters)")
        trace.append(loss_and_grad(params, X, y)[0])
    return params, trace


class SoftmaxRegression(ClassifierMixin, BaseEstimator):
    """Multinomial logistic regression trained by minibatch SGD.

    Features are standardized with statistics of the training set.  Pass
    ``classes`` to fix the label space (and its order) independent of which
    labels occur in ``y``.
    """

    def __init__(self, learning_rate=0.1, epochs=50, batch_size=32, random_state=0,
                 standardize=True, classes=None):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state
        self.standardize = standardize
        self.classes = classes

    def fit(self, X, y):
        X = check_array(X, dtype=float)
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise InvalidArgumentError("X and y have inconsistent lengths")
        self.classes_ = np.asarray(self.classes) if self.classes is not None else np.unique(y)
        index = {c: i for i, c in enumerate(self.classes_.tolist())}
        try:
            yi = np.array([index[v] for v in y.tolist()], dtype=int)
        except KeyError as exc:
            raise InvalidArgumentError(f"label {exc.args[0]!r} not among classes") from exc

        if self.standardize:
            self.mean_ = X.mean(axis=0)
            scale = X.std(axis=0)
            self.scale_ = np.where(scale > 0, scale, 1.0)
        else:
            self.mean_ = np.zeros(X.shape[1])
            self.scale_ = np.ones(X.shape[1])
        config = TrainConfig(self.learning_rate, self.epochs, self.batch_size, self.random_state)
        params, self.loss_curve_ = train(self._scale(X), yi, config, n_classes=len(self.classes_))
        self.coef_ = params.weights
        self.intercept_ = params.bias
        self.n_features_in_ = X.shape[1]
        return self

    def _scale(self, X):
        return (X - self.mean_) / self.scale_

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise InvalidArgumentError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        return logits(ClassifierParams(self.coef_, self.intercept_), self._scale(X))

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]

    def to_dict(self):
        check_is_fitted(self, "coef_")
        c, d = self.coef_.shape
        return {
            "seed": int(self.random_state),
            "n_classes": c,
            "n_features": d,
            "weights": self.coef_.reshape(-1).tolist(),
            "bias": self.intercept_.tolist(),
            "mean": self.mean_.tolist(),
            "scale": self.scale_.tolist(),
        }

    @classmethod
    def from_dict(cls, d, classes):
        c, n = int(d["n_classes"]), int(d["n_features"])
        if len(classes) != c:
            raise FormatError(f"model has {c} classes but {len(classes)} class names")
        est = cls(random_state=d.get("seed", 0), classes=list(classes))
        est.classes_ = np.asarray(classes)
        est.coef_ = np.asarray(d["weights"], dtype=float).reshape(c, n)
        est.intercept_ = np.asarray(d["bias"], dtype=float)
        est.mean_ = np.asarray(d["mean"], dtype=float)
        est.scale_ = np.asarray(d["scale"], dtype=float)
        est.n_features_in_ = n
        return est


def save_models(path, models, classes, kernel=None):
    doc = {
        "format": MODEL_FORMAT,
        "classes": list(classes),
        "kernel": kernel,
        "models": [m.to_dict() for m in models],
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def load_models(path):
    """Return ``(models, classes, kernel)`` from a saved model document."""
    try:
        doc = json.loads(Path(path).read_text())
        if doc.get("format") != MODEL_FORMAT:
            raise FormatError(f"{path}: unknown model format {doc.get('format')!r}")
        classes = doc["classes"]
        models = [SoftmaxRegression.from_dict(m, classes) for m in doc["models"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: unreadable model file ({exc})") from exc
    return models, classes, doc.get("kernel")
