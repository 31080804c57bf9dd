"""Per-type classifiers over name embeddings.

Two families estimate P(type | name):

* logistic regression — one independent binary model per type, trained by
  plain SGD on log loss with L2;
* a one-hidden-layer ReLU MLP with sigmoid outputs and summed binary
  cross-entropy, trained by mini-batch SGD with momentum; by default one
  shared network emits all types at once, with an optional per-type mode.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .metrics import micro_f1

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
_NEGATIVE_BIAS = -20.0  # constant-negative model: sigmoid(-20) ~ 2e-9


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class ClassifierConfig:
    kind: str = "lr"  # "lr" or "mlp"
    epochs: Optional[int] = None  # default 20 for lr, 50 for mlp
    learning_rate: Optional[float] = None  # default 0.01 for lr, 0.1 for mlp
    l2: Optional[float] = None  # default 1e-4 for lr, 0 for mlp
    hidden: int = 100
    batch_size: int = 32
    momentum: float = 0.9
    threshold: float = 0.5
    patience: int = 5
    per_type_mlp: bool = False
    standardize: bool = False
    seed: int = 1

    def __post_init__(self):
        if self.kind not in ("lr", "mlp"):
            raise ValueError(f"unknown classifier kind {self.kind!r}")
        if self.epochs is None:
            self.epochs = 20 if self.kind == "lr" else 50
        if self.learning_rate is None:
            self.learning_rate = 0.01 if self.kind == "lr" else 0.1
        if self.l2 is None:
            self.l2 = 1e-4 if self.kind == "lr" else 0.0
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie strictly inside (0, 1)")
        if self.epochs < 0 or self.learning_rate <= 0 or self.l2 < 0:
            raise ValueError("invalid training hyperparameters")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce_from_logits(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    # max(z,0) - z*y + log(1 + exp(-|z|)): stable elementwise BCE
    return np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale[scale == 0] = 1.0
        return cls(mean=mean, scale=scale)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale


@dataclass
class LinearPerTypeModel:
    """T independent logistic models: weights (T, dim) and biases (T,)."""

    weights: np.ndarray
    biases: np.ndarray
    metadata: dict = field(default_factory=dict)
    standardizer: Optional[Standardizer] = None

    def __post_init__(self):
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise ValueError("inconsistent LR parameter shapes")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.biases).all()):
            raise ValueError("non-finite LR parameters")

    @property
    def n_types(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


@dataclass
class MlpModel:
    """One-hidden-layer ReLU network with sigmoid outputs per type."""

    w1: np.ndarray  # (hidden, dim)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (n_types, hidden)
    b2: np.ndarray  # (n_types,)
    metadata: dict = field(default_factory=dict)
    standardizer: Optional[Standardizer] = None

    def __post_init__(self):
        h, d = self.w1.shape
        t = self.w2.shape[0]
        if self.b1.shape != (h,) or self.w2.shape != (t, h) or self.b2.shape != (t,):
            raise ValueError("inconsistent MLP parameter shapes")
        for arr in (self.w1, self.b1, self.w2, self.b2):
            if not np.isfinite(arr).all():
                raise ValueError("non-finite MLP parameters")

    @property
    def n_types(self) -> int:
        return self.w2.shape[0]

    @property
    def dim(self) -> int:
        return self.w1.shape[1]


@dataclass
class PerTypeMlpModel:
    """T independent single-output MLPs behind the shared-model interface."""

    models: list[MlpModel]
    metadata: dict = field(default_factory=dict)
    standardizer: Optional[Standardizer] = None

    @property
    def n_types(self) -> int:
        return len(self.models)

    @property
    def dim(self) -> int:
        return self.models[0].dim


def _check_xy(x: np.ndarray, y: np.ndarray):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=bool)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("need X of shape (N, dim) and Y of shape (N, T)")
    if x.shape[0] == 0:
        raise ValueError("empty training set")
    return x, y


def train_lr(x: np.ndarray, y: np.ndarray, config: ClassifierConfig
             ) -> LinearPerTypeModel:
    """SGD logistic regression, one binary model per type.

    All types share the same example visit order, which keeps them exactly
    independent: each type's parameters see only its own label column. The
    step size decays as lr / sqrt(step). Types with no positive examples
    get a constant-negative model and a warning.
    """
    x, y = _check_xy(x, y)
    n, dim = x.shape
    n_types = y.shape[1]
    std = Standardizer.fit(x) if config.standardize else None
    if std is not None:
        x = std.apply(x)
    yf = y.astype(np.float64)
    rng = np.random.default_rng(config.seed)
    w = np.zeros((n_types, dim))
    b = np.zeros(n_types)
    step = 0
    epoch_losses = []
    for _ in range(config.epochs):
        loss_sum = 0.0
        for i in rng.permutation(n):
            step += 1
            lr = config.learning_rate / np.sqrt(step)
            xi = x[i]
            z = w @ xi + b
            loss_sum += _bce_from_logits(z, yf[i]).sum()
            g = _sigmoid(z) - yf[i]  # (T,)
            w -= lr * (np.outer(g, xi) + config.l2 * w)
            b -= lr * g
        epoch_losses.append(loss_sum / n)
    dead = np.flatnonzero(~y.any(axis=0))
    if dead.size:
        logger.warning("train_lr: %d type(s) have no positive examples; "
                       "using constant-negative models for columns %s",
                       dead.size, dead.tolist())
        w[dead] = 0.0
        b[dead] = _NEGATIVE_BIAS
    return LinearPerTypeModel(weights=w, biases=b,
                              metadata={"config": asdict(config),
                                        "epoch_losses": epoch_losses},
                              standardizer=std)


def mlp_forward(model: MlpModel, x: np.ndarray):
    """Hidden activations and output logits for a batch."""
    z1 = x @ model.w1.T + model.b1
    h = np.maximum(z1, 0.0)
    z2 = h @ model.w2.T + model.b2
    return z1, h, z2


def mlp_loss_and_grads(model: MlpModel, x: np.ndarray, y: np.ndarray,
                       l2: float = 0.0):
    """Mean-over-batch, summed-over-types BCE loss and exact gradients."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    z1, h, z2 = mlp_forward(model, x)
    loss = _bce_from_logits(z2, y).sum() / n
    if l2:
        loss += 0.5 * l2 * ((model.w1 ** 2).sum() + (model.w2 ** 2).sum())
    dz2 = (_sigmoid(z2) - y) / n  # (N, T)
    gw2 = dz2.T @ h + l2 * model.w2
    gb2 = dz2.sum(axis=0)
    dh = dz2 @ model.w2
    dz1 = dh * (z1 > 0)
    gw1 = dz1.T @ x + l2 * model.w1
    gb1 = dz1.sum(axis=0)
    return loss, {"w1": gw1, "b1": gb1, "w2": gw2, "b2": gb2}


def _init_mlp(dim: int, hidden: int, n_types: int,
              rng: np.random.Generator) -> MlpModel:
    lim1 = np.sqrt(6.0 / (dim + hidden))
    lim2 = np.sqrt(6.0 / (hidden + n_types))
    return MlpModel(
        w1=rng.uniform(-lim1, lim1, size=(hidden, dim)),
        b1=np.zeros(hidden),
        w2=rng.uniform(-lim2, lim2, size=(n_types, hidden)),
        b2=np.zeros(n_types),
    )


def _train_mlp_single(x, y, config, dev) -> MlpModel:
    n, dim = x.shape
    n_types = y.shape[1]
    rng = np.random.default_rng(config.seed)
    model = _init_mlp(dim, config.hidden, n_types, rng)
    yf = y.astype(np.float64)
    vel = {k: np.zeros_like(v) for k, v in
           (("w1", model.w1), ("b1", model.b1),
            ("w2", model.w2), ("b2", model.b2))}
    best: Optional[dict] = None
    best_f1 = -1.0
    since_best = 0
    epoch_losses = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = mlp_loss_and_grads(model, x[idx], yf[idx], config.l2)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite MLP loss at epoch {epoch + 1}; lower the "
                    f"learning rate (learning_rate={config.learning_rate})")
            epoch_loss += loss
            n_batches += 1
            for key, grad in grads.items():
                v = vel[key]
                v *= config.momentum
                v -= config.learning_rate * grad
                param = getattr(model, key)
                param += v
        epoch_losses.append(epoch_loss / max(1, n_batches))
        if dev is not None:
            xd, yd = dev
            pred = predict_proba(model, xd) >= config.threshold
            f1 = float(micro_f1(pred, yd))
            if f1 > best_f1:
                best_f1 = f1
                best = {k: getattr(model, k).copy()
                        for k in ("w1", "b1", "w2", "b2")}
                since_best = 0
            else:
                since_best += 1
                if since_best >= config.patience:
                    logger.info("early stop at epoch %d (best dev micro-F1 "
                                "%.4f)", epoch + 1, best_f1)
                    break
        logger.debug("mlp epoch %d: mean batch loss %.6f", epoch + 1,
                     epoch_losses[-1])
    if best is not None:
        for k, v in best.items():
            setattr(model, k, v)
    model.metadata = {"config": asdict(config), "best_dev_micro_f1": best_f1,
                      "epoch_losses": epoch_losses}
    return model


def train_mlp(x: np.ndarray, y: np.ndarray, config: ClassifierConfig,
              dev: Optional[tuple[np.ndarray, np.ndarray]] = None):
    """Train the MLP classifier; returns MlpModel or PerTypeMlpModel.

    With a dev set, training early-stops on dev micro-F1 (patience per
    config) and restores the best-epoch parameters. Deterministic for a
    fixed seed.
    """
    x, y = _check_xy(x, y)
    std = Standardizer.fit(x) if config.standardize else None
    if std is not None:
        x = std.apply(x)
        if dev is not None:
            dev = (std.apply(np.asarray(dev[0], dtype=np.float64)), dev[1])
    if not config.per_type_mlp:
        model = _train_mlp_single(x, y, config, dev)
        model.standardizer = std
        return model
    models = []
    for t in range(y.shape[1]):
        dev_t = None
        if dev is not None:
            dev_t = (dev[0], np.asarray(dev[1], dtype=bool)[:, t:t + 1])
        models.append(_train_mlp_single(x, y[:, t:t + 1], config, dev_t))
    return PerTypeMlpModel(models=models, metadata={"config": asdict(config)},
                           standardizer=std)


def predict_proba(model, x: np.ndarray) -> np.ndarray:
    """P(type | embedding) for one vector (dim,) or a batch (N, dim).

    Pure function of (model, input); LR types are computed independently,
    the shared MLP in one forward pass.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError("input must be a vector or a matrix of vectors")
    if x.shape[1] != model.dim:
        raise ValueError(f"input width {x.shape[1]} does not match model "
                         f"dim {model.dim}")
    if isinstance(model, LinearPerTypeModel):
        if model.standardizer is not None:
            x = model.standardizer.apply(x)
        probs = _sigmoid(x @ model.weights.T + model.biases)
    elif isinstance(model, MlpModel):
        if model.standardizer is not None:
            x = model.standardizer.apply(x)
        _, _, z2 = mlp_forward(model, x)
        probs = _sigmoid(z2)
    elif isinstance(model, PerTypeMlpModel):
        if model.standardizer is not None:
            x = model.standardizer.apply(x)
        probs = np.hstack([predict_proba(m, x) for m in model.models])
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return probs[0] if single else probs


def predict_labels(proba: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Bitset with bit t set iff p_t >= threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie strictly inside (0, 1)")
    return np.asarray(proba) >= threshold


def save_model(model, path) -> None:
    """Serialize a trained classifier to a versioned npz container."""
    arrays: dict[str, np.ndarray] = {}
    meta = {"format_version": MODEL_FORMAT_VERSION,
            "metadata": getattr(model, "metadata", {})}
    if isinstance(model, LinearPerTypeModel):
        meta["kind"] = "lr"
        arrays["weights"] = model.weights
        arrays["biases"] = model.biases
        std = model.standardizer
    elif isinstance(model, MlpModel):
        meta["kind"] = "mlp"
        for k in ("w1", "b1", "w2", "b2"):
            arrays[k] = getattr(model, k)
        std = model.standardizer
    elif isinstance(model, PerTypeMlpModel):
        meta["kind"] = "mlp-per-type"
        meta["n_models"] = len(model.models)
        for i, m in enumerate(model.models):
            for k in ("w1", "b1", "w2", "b2"):
                arrays[f"m{i}_{k}"] = getattr(m, k)
        std = model.standardizer
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    if std is not None:
        arrays["std_mean"] = std.mean
        arrays["std_scale"] = std.scale
    arrays["meta_json"] = np.frombuffer(
        json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    np.savez(path, **arrays)


def load_model(path):
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta_json"]).decode())
        if meta.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version "
                             f"{meta.get('format_version')}")
        std = None
        if "std_mean" in data:
            std = Standardizer(mean=data["std_mean"], scale=data["std_scale"])
        kind = meta["kind"]
        if kind == "lr":
            return LinearPerTypeModel(weights=data["weights"],
                                      biases=data["biases"],
                                      metadata=meta["metadata"],
                                      standardizer=std)
        if kind == "mlp":
            return MlpModel(w1=data["w1"], b1=data["b1"], w2=data["w2"],
                            b2=data["b2"], metadata=meta["metadata"],
                            standardizer=std)
        if kind == "mlp-per-type":
            models = [MlpModel(w1=data[f"m{i}_w1"], b1=data[f"m{i}_b1"],
                               w2=data[f"m{i}_w2"], b2=data[f"m{i}_b2"])
                      for i in range(meta["n_models"])]
            return PerTypeMlpModel(models=models, metadata=meta["metadata"],
                                   standardizer=std)
    raise ValueError(f"unknown model kind {kind!r}")
