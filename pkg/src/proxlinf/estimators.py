"""scikit-learn style wrappers around the featurizer and the threshold network."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .features import Filtered, feature_names, moment_features
from .tinynn import TrainConfig, fit_mlp, forward_batch, saliency


class MomentFeaturizer(TransformerMixin, BaseEstimator):
    """Map a ragged sequence of vectors to ``(n, k + 3)`` moment features.

    ``transform(X, alpha=...)`` takes any iterable of 1-D arrays (lengths may
    differ) and a scalar or per-vector ``alpha``. Inputs whose prox is zero
    raise ``ValueError`` since they have no meaningful feature vector.
    """

    def __init__(self, k=10, fast=False):
        self.k = k
        self.fast = fast

    def fit(self, X=None, y=None):
        self.n_features_out_ = int(self.k) + 3
        return self

    def transform(self, X, alpha=1.0, *, return_mu=False):
        check_is_fitted(self, "n_features_out_")
        X = list(X)
        alphas = np.broadcast_to(np.asarray(alpha, dtype=np.float64), (len(X),))
        W = np.empty((len(X), self.n_features_out_))
        mu = np.empty(len(X))
        for i, (x, a) in enumerate(zip(X, alphas)):
            out = moment_features(x, float(a), self.k, fast=self.fast)
            if isinstance(out, Filtered):
                raise ValueError(f"vector {i} has ||x||_1 <= alpha; its prox is zero")
            W[i], mu[i] = out
        return (W, mu) if return_mu else W

    def get_feature_names_out(self, input_features=None):
        return np.array(feature_names(self.k), dtype=object)


class ThresholdRegressor(RegressorMixin, BaseEstimator):
    """Feed-forward ReLU network predicting ``tau_hat`` from moment features.

    ``fit`` accepts ``eval_set=(X_test, y_test[, mu_test, alpha_test])``; the
    epoch with the lowest held-out error is kept (on ``tau`` when ``mu`` and
    ``alpha`` are supplied).
    """

    def __init__(
        self,
        hidden_layer_sizes=(25, 10),
        learning_rate=1e-3,
        batch_size=32,
        epochs=200,
        beta1=0.9,
        beta2=0.999,
        epsilon=1e-8,
        random_state=0,
        float32_inference=False,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.random_state = random_state
        self.float32_inference = float32_inference

    def _config(self):
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.random_state,
            beta1=self.beta1,
            beta2=self.beta2,
            epsilon=self.epsilon,
            hidden=tuple(self.hidden_layer_sizes),
        )

    def fit(self, X, y, *, eval_set=None):
        X, y = self._check_xy(X, y)
        extra = {}
        if eval_set is not None:
            if len(eval_set) not in (2, 4):
                raise ValueError("eval_set must be (X, y) or (X, y, mu, alpha)")
            extra["X_test"] = check_array(eval_set[0], dtype=np.float64)
            extra["y_test"] = np.asarray(eval_set[1], dtype=np.float64)
            if len(eval_set) == 4:
                extra["mu_test"], extra["alpha_test"] = eval_set[2], eval_set[3]
        self.model_, self.report_ = fit_mlp(X, y, self._config(), **extra)
        self.n_features_in_ = X.shape[1]
        return self

    def _check_xy(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = check_array(y, dtype=np.float64, ensure_2d=False)
        if y.shape != (X.shape[0],):
            raise ValueError(f"y of shape {y.shape} does not match {X.shape[0]} rows")
        return X, y

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        if self.float32_inference:
            out = forward_batch(self.model_.astype(np.float32), X.astype(np.float32))
            return out.astype(np.float64)
        return forward_batch(self.model_, X)

    def saliency(self, X):
        check_is_fitted(self, "model_")
        return saliency(self.model_, check_array(X, dtype=np.float64))
