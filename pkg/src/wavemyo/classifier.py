"""From-scratch multilayer perceptron: ReLU hidden layers, softmax output.

Parameters are float64 numpy arrays. Weights are stored ``(fan_in, fan_out)``
so a batch ``X`` of shape ``(n, fan_in)`` maps through ``X @ W + b``.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

__all__ = [
    "ClassPosterior",
    "MlpModel",
    "TrainConfig",
    "analytic_gradient",
    "forward",
    "gradient_check",
    "init_model",
    "load_model",
    "loss",
    "numeric_gradient",
    "predict_proba",
    "save_model",
    "train",
]

HIDDEN_LAYERS = (32, 32, 32, 32, 32, 32)
MODEL_FORMAT = "wavemyo-mlp"


@dataclass(frozen=True, eq=False)
class MlpModel:
    layer_dims: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    # standardization, applied to raw features before the first layer
    mean: np.ndarray
    std: np.ndarray
    feature_layout: tuple[str, ...] = ()
    hidden_activation: str = "relu"

    def __post_init__(self):
        dims = self.layer_dims
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("parameter count does not match layer_dims")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
                raise ValueError(f"layer {i}: shapes {w.shape}, {b.shape} do not chain with {dims}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i}: non-finite parameters")
        if self.mean.shape != (dims[0],) or self.std.shape != (dims[0],):
            raise ValueError("standardization vectors must match the input dimension")
        if np.any(self.std <= 0):
            raise ValueError("standardization std must be positive")
        if self.feature_layout and len(self.feature_layout) != dims[0]:
            raise ValueError("feature layout length does not match the input dimension")

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def class_count(self) -> int:
        return self.layer_dims[-1]

    @property
    def params(self) -> list[np.ndarray]:
        """Weights and biases interleaved: ``[W1, b1, W2, b2, ...]``."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def with_params(self, params: Sequence[np.ndarray]) -> MlpModel:
        return replace(self, weights=tuple(params[0::2]), biases=tuple(params[1::2]))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    patience: int = 30
    val_fraction: float = 0.1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.patience < 0:
            raise ValueError("patience must be non-negative")
        if not 0 <= self.val_fraction < 1:
            raise ValueError("val_fraction must be in [0, 1)")


@dataclass(frozen=True, eq=False)
class ClassPosterior:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("posterior must be a non-empty vector")
        if np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("posterior entries must lie in [0, 1] and sum to 1")
        object.__setattr__(self, "probs", p)

    @property
    def argmax_class(self) -> int:
        return int(np.argmax(self.probs)) + 1


def _rng(seed: int) -> np.random.Generator:
    s = int(seed) % (1 << 64)
    return np.random.default_rng([s & 0xFFFFFFFF, s >> 32])


def init_model(
    input_dim: int,
    class_count: int = 10,
    seed: int = 0,
    hidden: Sequence[int] = HIDDEN_LAYERS,
    feature_layout: Sequence[str] = (),
) -> MlpModel:
    """He-normal weights, zero biases, identity standardization."""
    if input_dim < 1:
        raise ValueError(f"input_dim must be positive, got {input_dim}")
    if class_count < 2:
        raise ValueError(f"class_count must be >= 2, got {class_count}")
    if any(h < 1 for h in hidden):
        raise ValueError("hidden layer widths must be positive")
    dims = (int(input_dim), *map(int, hidden), int(class_count))
    rng = _rng(seed)
    weights = tuple(rng.normal(0.0, np.sqrt(2.0 / dims[i]), size=(dims[i], dims[i + 1])) for i in range(len(dims) - 1))
    biases = tuple(np.zeros(d) for d in dims[1:])
    return MlpModel(
        layer_dims=dims,
        weights=weights,
        biases=biases,
        mean=np.zeros(input_dim),
        std=np.ones(input_dim),
        feature_layout=tuple(feature_layout),
    )


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _check_input(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.shape[1] != model.input_dim:
        raise ValueError(f"expected {model.input_dim} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")
    return X


def _logits(params: Sequence[np.ndarray], X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    acts = [X]
    h = X
    n_layers = len(params) // 2
    for i in range(n_layers):
        z = h @ params[2 * i] + params[2 * i + 1]
        if i < n_layers - 1:
            h = np.maximum(z, 0.0)
            acts.append(h)
        else:
            h = z
    return h, acts


def _standardize(model: MlpModel, X: np.ndarray) -> np.ndarray:
    return (X - model.mean) / model.std


def predict_proba(model: MlpModel, X) -> np.ndarray:
    """Class probabilities for a batch, shape ``(n, class_count)``."""
    X = _check_input(model, X)
    logits, _ = _logits(model.params, _standardize(model, X))
    return _softmax(logits)


def forward(model: MlpModel, features) -> ClassPosterior:
    values = getattr(features, "values", features)
    return ClassPosterior(predict_proba(model, values)[0])


def _loss_and_grads(
    params: Sequence[np.ndarray], X: np.ndarray, y0: np.ndarray, with_grads: bool = True
) -> tuple[float, list[np.ndarray]]:
    """Mean cross-entropy and its gradient; ``y0`` holds 0-based class indices."""
    logits, acts = _logits(params, X)
    z = logits - logits.max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = X.shape[0]
    value = float(-log_p[np.arange(n), y0].mean())
    if not with_grads:
        return value, []
    delta = np.exp(log_p)
    delta[np.arange(n), y0] -= 1.0
    delta /= n
    grads: list[np.ndarray] = [None] * len(params)  # type: ignore[list-item]
    for i in range(len(params) // 2 - 1, -1, -1):
        grads[2 * i] = acts[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params[2 * i].T) * (acts[i] > 0)
    return value, grads


def _labels0(model: MlpModel, labels) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1 or not np.issubdtype(y.dtype, np.integer):
        raise ValueError("labels must be a 1-D integer array")
    if np.any(y < 1) or np.any(y > model.class_count):
        raise ValueError(f"labels must lie in 1..{model.class_count}")
    return y.astype(np.int64) - 1


def loss(model: MlpModel, X, labels) -> float:
    """Mean cross-entropy of ``model`` on raw features ``X`` with 1-based labels."""
    X = _standardize(model, _check_input(model, X))
    return _loss_and_grads(model.params, X, _labels0(model, labels), with_grads=False)[0]


def train(model: MlpModel, features, labels, cfg: TrainConfig = TrainConfig()) -> tuple[MlpModel, list[float]]:
    """Fit standardization and parameters by mini-batch gradient descent.

    Examples are put in a canonical order before the seeded shuffle, so the
    result does not depend on the order they were passed in. With
    ``cfg.patience > 0`` a seeded ``val_fraction`` of the examples is held out
    and training stops once its loss has not improved for ``patience`` epochs;
    the best parameters seen are returned.

    Returns
    -------
    model : MlpModel
        New model; the input model is not modified.
    history : list of float
        Mean training cross-entropy after each epoch.
    """
    X = _check_input(model, features)
    y0 = _labels0(model, labels)
    if X.shape[0] != y0.shape[0]:
        raise ValueError(f"{X.shape[0]} feature rows but {y0.shape[0]} labels")
    missing = sorted(set(range(model.class_count)) - set(y0.tolist()))
    if missing:
        raise ValueError(f"classes absent from training data: {[m + 1 for m in missing]}")

    order = np.lexsort(np.column_stack([y0, X]).T[::-1])
    X, y0 = X[order], y0[order]

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    model = replace(model, mean=mean, std=std)
    Xs = _standardize(model, X)

    rng = _rng(cfg.seed)
    n = Xs.shape[0]
    use_val = cfg.patience > 0 and cfg.val_fraction > 0 and n >= 10
    if use_val:
        idx = rng.permutation(n)
        n_val = max(1, int(round(cfg.val_fraction * n)))
        val_idx, tr_idx = np.sort(idx[:n_val]), np.sort(idx[n_val:])
        X_val, y_val = Xs[val_idx], y0[val_idx]
        Xs, y0 = Xs[tr_idx], y0[tr_idx]
        n = Xs.shape[0]

    params = [p.copy() for p in model.params]
    history: list[float] = []
    best_val, best_params, stale = np.inf, params, 0
    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            _, grads = _loss_and_grads(params, Xs[batch], y0[batch])
            for p, g in zip(params, grads):
                p -= cfg.learning_rate * g
        epoch_loss, _ = _loss_and_grads(params, Xs, y0, with_grads=False)
        if not np.isfinite(epoch_loss):
            raise FloatingPointError(f"training diverged: non-finite loss at epoch {epoch}")
        history.append(epoch_loss)
        if use_val:
            val_loss, _ = _loss_and_grads(params, X_val, y_val, with_grads=False)
            if val_loss < best_val:
                best_val, best_params, stale = val_loss, [p.copy() for p in params], 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    final = best_params if use_val else params
    return model.with_params(final), history


def analytic_gradient(model: MlpModel, x, label: int) -> list[np.ndarray]:
    X = _standardize(model, _check_input(model, x))
    return _loss_and_grads(model.params, X, _labels0(model, [label]))[1]


def numeric_gradient(
    model: MlpModel, x, label: int, indices: Sequence[tuple[int, int]], step: float = 1e-5
) -> np.ndarray:
    """Central differences of the loss w.r.t. the flat parameter ``(array, offset)`` pairs."""
    X = _standardize(model, _check_input(model, x))
    y0 = _labels0(model, [label])
    params = [p.copy() for p in model.params]
    out = np.empty(len(indices))
    for k, (a, off) in enumerate(indices):
        flat = params[a].reshape(-1)
        orig = flat[off]
        flat[off] = orig + step
        plus = _loss_and_grads(params, X, y0, with_grads=False)[0]
        flat[off] = orig - step
        minus = _loss_and_grads(params, X, y0, with_grads=False)[0]
        flat[off] = orig
        out[k] = (plus - minus) / (2 * step)
    return out


def gradient_check(
    model: MlpModel,
    x,
    label: int,
    n_params: int = 200,
    seed: int = 0,
    step: float = 1e-5,
    floor: float = 1e-6,
) -> float:
    """Max relative error between backprop and central differences.

    ``n_params`` parameters are sampled uniformly (all of them if the model is
    smaller). The error for each is ``|a - n| / max(|a|, |n|, floor)``, so
    gradients smaller than ``floor`` are compared absolutely.
    """
    sizes = [p.size for p in model.params]
    total = sum(sizes)
    rng = _rng(seed)
    flat_idx = np.sort(rng.choice(total, size=min(n_params, total), replace=False))
    bounds = np.cumsum([0] + sizes)
    indices = []
    for f in flat_idx:
        a = int(np.searchsorted(bounds, f, side="right") - 1)
        indices.append((a, int(f - bounds[a])))
    grads = analytic_gradient(model, x, label)
    analytic = np.array([grads[a].reshape(-1)[off] for a, off in indices])
    numeric = numeric_gradient(model, x, label, indices, step)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def save_model(model: MlpModel, path: str | Path) -> Path:
    """Write the model as JSON. Floats use ``repr`` and round-trip exactly."""
    doc = {
        "format": MODEL_FORMAT,
        "version": 1,
        "layer_dims": list(model.layer_dims),
        "hidden_activation": model.hidden_activation,
        "output": "softmax",
        "feature_layout": ",".join(model.feature_layout),
        "mean": model.mean.tolist(),
        "std": model.std.tolist(),
        "weights": [w.reshape(-1).tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }
    path = Path(path)
    path.write_text(json.dumps(doc, indent=None, separators=(",", ":")) + "\n", encoding="utf-8")
    return path


def load_model(path: str | Path, expected_layout: Sequence[str] | None = None) -> MlpModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
    dims = tuple(doc["layer_dims"])
    layout = tuple(doc["feature_layout"].split(",")) if doc["feature_layout"] else ()
    if expected_layout is not None and tuple(expected_layout) != layout:
        raise ValueError(f"{path}: model feature layout does not match the configured features")
    weights = tuple(np.asarray(w, dtype=np.float64).reshape(dims[i], dims[i + 1]) for i, w in enumerate(doc["weights"]))
    biases = tuple(np.asarray(b, dtype=np.float64) for b in doc["biases"])
    return MlpModel(
        layer_dims=dims,
        weights=weights,
        biases=biases,
        mean=np.asarray(doc["mean"], dtype=np.float64),
        std=np.asarray(doc["std"], dtype=np.float64),
        feature_layout=layout,
        hidden_activation=doc.get("hidden_activation", "relu"),
    )
