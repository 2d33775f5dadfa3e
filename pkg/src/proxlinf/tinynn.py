"""A small fully connected regression network trained with Adam on MSE.

Hidden layers use ReLU, the output layer is affine. Weight matrices are
stored ``(fan_out, fan_in)``. Everything is float64 so gradients can be
checked against finite differences.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._validation import check_int

MAGIC = "MLPMODEL 1"
DEFAULT_HIDDEN = (25, 10)


class ModelFormatError(ValueError):
    pass


@dataclass(eq=False)
class MlpModel:
    weights: list
    biases: list

    def __post_init__(self):
        if not self.weights or len(self.weights) != len(self.biases):
            raise ValueError("need one bias vector per weight matrix")
        self.weights = [np.asarray(W) for W in self.weights]
        self.biases = [np.asarray(b) for b in self.biases]
        fan_in = self.weights[0].shape[1] if self.weights[0].ndim == 2 else None
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or W.shape[1] != fan_in:
                raise ValueError(f"layer {i}: weight shape {W.shape} does not chain from width {fan_in}")
            if b.shape != (W.shape[0],):
                raise ValueError(f"layer {i}: bias shape {b.shape} does not match {W.shape[0]} outputs")
            if not (np.isfinite(W).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {i}: non-finite parameters")
            fan_in = W.shape[0]
        if fan_in != 1:
            raise ValueError("the output layer must have a single unit")

    @property
    def layer_dims(self):
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    @property
    def n_features(self):
        return self.weights[0].shape[1]

    def params(self):
        """Flat list ``[W0, b0, W1, b1, ...]`` (views, not copies)."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    @classmethod
    def from_params(cls, params):
        return cls(weights=list(params[0::2]), biases=list(params[1::2]))

    def copy(self):
        return MlpModel.from_params([p.copy() for p in self.params()])

    def astype(self, dtype):
        return MlpModel.from_params([p.astype(dtype) for p in self.params()])


def init_model(layer_dims, seed=None):
    """Glorot-uniform weights, zero biases."""
    dims = [check_int(d, "layer width", minimum=1) for d in layer_dims]
    if len(dims) < 2 or dims[-1] != 1:
        raise ValueError(f"layer_dims must end in a single output unit, got {dims}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases)


def _check_inputs(model, X):
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected inputs of width {model.n_features}, got shape {X.shape}")
    return X


def _forward_cache(model, X):
    """Pre-activations of every layer for a batch."""
    pre = []
    h = X
    last = len(model.weights) - 1
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ W.T + b
        pre.append(z)
        h = z if i == last else np.maximum(z, 0.0)
    return pre


def forward_batch(model, X):
    X = _check_inputs(model, X)
    return _forward_cache(model, X)[-1][:, 0]


def forward(model, w):
    """Network output for a single feature vector."""
    w = np.asarray(w)
    if w.ndim != 1:
        raise ValueError(f"expected a 1-D feature vector, got shape {w.shape}")
    return float(forward_batch(model, w[None, :])[0])


def mse(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ValueError("mse of an empty batch")
    diff = pred - target
    return float(diff @ diff) / diff.size


def _loss_and_grads(model, X, y):
    pre = _forward_cache(model, X)
    out = pre[-1][:, 0]
    diff = out - y
    loss = float(diff @ diff) / y.size
    delta = (2.0 / y.size) * diff[:, None]
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        below = X if i == 0 else np.maximum(pre[i - 1], 0.0)
        grads_w[i] = delta.T @ below
        grads_b[i] = delta.sum(axis=0)
        if i:
            # ReLU subgradient at exactly zero is taken as 0
            delta = (delta @ model.weights[i]) * (pre[i - 1] > 0.0)
    return loss, grads_w, grads_b


def backward(model, X, y):
    """Exact gradients of the batch MSE; returns ``(grads_w, grads_b)``."""
    X = _check_inputs(model, X)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (X.shape[0],) or y.size == 0:
        raise ValueError(f"targets of shape {y.shape} do not match {X.shape[0]} inputs")
    _, grads_w, grads_b = _loss_and_grads(model, X, y)
    return grads_w, grads_b


def input_gradients(model, X):
    """Per-sample gradient of the scalar output with respect to the inputs."""
    X = _check_inputs(model, X)
    pre = _forward_cache(model, X)
    g = np.ones((X.shape[0], 1))
    for i in range(len(model.weights) - 1, -1, -1):
        g = g @ model.weights[i]
        if i:
            g = g * (pre[i - 1] > 0.0)
    return g


def saliency(model, X):
    """Mean absolute input gradient over a set of feature vectors."""
    X = _check_inputs(model, X)
    if X.shape[0] == 0:
        raise ValueError("saliency needs at least one feature vector")
    return np.abs(input_gradients(model, X)).mean(axis=0)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 200
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    hidden: tuple = DEFAULT_HIDDEN

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        check_int(self.batch_size, "batch_size", minimum=1)
        check_int(self.epochs, "epochs", minimum=1)
        for name in ("beta1", "beta2"):
            if not 0 <= getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        self.hidden = tuple(check_int(h, "hidden width", minimum=1) for h in self.hidden)


class AdamState(NamedTuple):
    m: list
    v: list

    @classmethod
    def zeros_like(cls, params):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params, grads, state, t, config):
    """One bias-corrected Adam update; returns new ``(params, state)``."""
    t = check_int(t, "t", minimum=1)
    b1, b2 = config.beta1, config.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        step = config.learning_rate * (m / c1) / (np.sqrt(v / c2) + config.epsilon)
        new_params.append(p - step)
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(new_m, new_v)


@dataclass
class TrainReport:
    """Per-epoch learning curves; ``best_epoch`` is 1-based."""

    train_mse: list = field(default_factory=list)
    test_mse_tau_hat: list = field(default_factory=list)
    test_mse_tau: list = field(default_factory=list)
    best_epoch: int = 0

    @property
    def epochs(self):
        return len(self.train_mse)


def fit_mlp(X, y, config, X_test=None, y_test=None, mu_test=None, alpha_test=None):
    """Train from scratch and return ``(best_model, report)``.

    Each epoch visits the training rows in a fresh random order in
    mini-batches (the last one may be short). After each epoch the whole
    test set is scored in one pass, on ``tau_hat`` and, when ``mu_test`` and
    ``alpha_test`` are given, on ``tau = alpha * (tau_hat + mu)``. The model
    from the epoch with the lowest ``tau`` test error is returned (earliest
    on ties); without ``mu``/``alpha`` the ``tau_hat`` error decides, and
    without a test set the final epoch is returned.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or y.shape != (X.shape[0],):
        raise ValueError(f"bad training arrays: X {X.shape}, y {y.shape}")
    has_test = X_test is not None
    if has_test:
        X_test = np.asarray(X_test, dtype=np.float64)
        y_test = np.asarray(y_test, dtype=np.float64)
        if X_test.ndim != 2 or X_test.shape[0] == 0 or X_test.shape[1] != X.shape[1]:
            raise ValueError(f"bad test arrays: X_test {X_test.shape}")
        if y_test.shape != (X_test.shape[0],):
            raise ValueError("y_test does not match X_test")
    has_tau = has_test and mu_test is not None and alpha_test is not None
    if has_tau:
        mu_test = np.asarray(mu_test, dtype=np.float64)
        alpha_test = np.asarray(alpha_test, dtype=np.float64)
        tau_test = alpha_test * (y_test + mu_test)

    rng = np.random.default_rng(config.seed)
    model = init_model([X.shape[1], *config.hidden, 1], rng)
    params = model.params()
    state = AdamState.zeros_like(params)
    report = TrainReport()
    best_model, best_score = model.copy(), math.inf
    n = X.shape[0]
    step = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, gw, gb = _loss_and_grads(model, X[idx], y[idx])
            grads = [g for pair in zip(gw, gb) for g in pair]
            step += 1
            params, state = adam_step(params, grads, state, step, config)
            model = MlpModel.from_params(params)
            losses.append(loss)
        report.train_mse.append(float(np.mean(losses)))

        if has_test:
            pred = _forward_cache(model, X_test)[-1][:, 0]
            report.test_mse_tau_hat.append(mse(pred, y_test))
            if has_tau:
                report.test_mse_tau.append(mse(alpha_test * (pred + mu_test), tau_test))
                score = report.test_mse_tau[-1]
            else:
                report.test_mse_tau.append(math.nan)
                score = report.test_mse_tau_hat[-1]
        else:
            report.test_mse_tau_hat.append(math.nan)
            report.test_mse_tau.append(math.nan)
            score = -epoch
        if score < best_score:
            best_score, best_model, report.best_epoch = score, model.copy(), epoch
    return best_model, report


def train(table, config, train_index, test_index):
    """Train on rows ``train_index`` of a :class:`FeatureTable`, select on ``test_index``."""
    train_index = np.asarray(train_index, dtype=np.intp)
    test_index = np.asarray(test_index, dtype=np.intp)
    if train_index.size == 0 or test_index.size == 0:
        raise ValueError("train and test index sets must both be non-empty")
    if np.intersect1d(train_index, test_index).size:
        raise ValueError("train and test index sets overlap")
    return fit_mlp(
        table.W[train_index],
        table.tau_hat[train_index],
        config,
        X_test=table.W[test_index],
        y_test=table.tau_hat[test_index],
        mu_test=table.mu[test_index],
        alpha_test=table.alpha[test_index],
    )


def save_model(model, path):
    lines = [MAGIC, " ".join(str(d) for d in model.layer_dims)]
    for W, b in zip(model.weights, model.biases):
        lines += [format(float(v), ".17g") for v in W.ravel()]
        lines += [format(float(v), ".17g") for v in b]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise ModelFormatError(f"{path}: line 1: expected header {MAGIC!r}")
    if len(lines) < 2:
        raise ModelFormatError(f"{path}: missing layer dimensions")
    try:
        dims = [int(tok) for tok in lines[1].split()]
    except ValueError:
        raise ModelFormatError(f"{path}: line 2: layer dimensions must be integers") from None
    if len(dims) < 2 or min(dims) < 1 or dims[-1] != 1:
        raise ModelFormatError(f"{path}: line 2: invalid layer dimensions {dims}")

    expected = sum(o * i + o for i, o in zip(dims[:-1], dims[1:]))
    body = lines[2:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != expected:
        raise ModelFormatError(f"{path}: expected {expected} parameter lines, found {len(body)}")
    values = np.empty(expected)
    for i, line in enumerate(body):
        try:
            values[i] = float(line)
        except ValueError:
            raise ModelFormatError(f"{path}: line {i + 3}: not a number: {line!r}") from None
        if not math.isfinite(values[i]):
            raise ModelFormatError(f"{path}: line {i + 3}: non-finite parameter")

    params, pos = [], 0
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        params.append(values[pos : pos + fan_out * fan_in].reshape(fan_out, fan_in).copy())
        pos += fan_out * fan_in
        params.append(values[pos : pos + fan_out].copy())
        pos += fan_out
    return MlpModel.from_params(params)
