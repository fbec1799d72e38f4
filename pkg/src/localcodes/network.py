"""Three-layer feed-forward network trained from scratch.

Architecture is fixed at input -> hidden -> output with sigmoid output
units.  The hidden activation, loss, optimizer and dropout rate are
configurable.  Training is deterministic given (dataset, config): weight
init and per-epoch dropout masks are drawn from a generator seeded with
config.init_seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import expit

from . import backend
from .binio import read_container, write_container
from .errors import ConfigError, DataError, TrainingError, UsageError

if TYPE_CHECKING:
    from .codegen import Dataset

ACTIVATIONS = ("sigmoid", "relu")
OPTIMIZERS = ("adam", "sgd")
LOSSES = ("bce", "mse")
DTYPES = ("float64", "float32")

ACCURACY_HIGH = 0.9
ACCURACY_LOW = 0.1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

MODEL_MAGIC = b"LCNN"
MODEL_VERSION = 1
ACTIVATIONS_MAGIC = b"LCAC"
ACTIVATIONS_VERSION = 1


@dataclass(frozen=True)
class NetworkConfig:
    input_size: int
    hidden_size: int
    output_size: int
    hidden_activation: str = "sigmoid"
    dropout_rate: float = 0.0
    epochs: int = 1
    learning_rate: float = 1e-3
    batch_size: int | None = None
    optimizer: str = "adam"
    loss: str = "bce"
    dtype: str = "float64"
    init_seed: int = 0

    def __post_init__(self):
        if min(self.input_size, self.hidden_size, self.output_size) < 1:
            raise ConfigError("layer sizes must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate {self.dropout_rate} outside [0, 1)")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.hidden_activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.hidden_activation!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.dtype not in DTYPES:
            raise ConfigError(f"unknown dtype {self.dtype!r}")
        if not 0 <= self.init_seed < 2**64:
            raise ConfigError("init_seed must fit in 64 bits")

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64

    def to_dict(self) -> dict:
        return {
            "input_size": self.input_size, "hidden_size": self.hidden_size,
            "output_size": self.output_size, "hidden_activation": self.hidden_activation,
            "dropout_rate": self.dropout_rate, "epochs": self.epochs,
            "learning_rate": self.learning_rate, "batch_size": self.batch_size,
            "optimizer": self.optimizer, "loss": self.loss, "dtype": self.dtype,
            "init_seed": self.init_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        return cls(**{k: d[k] for k in (
            "input_size", "hidden_size", "output_size", "hidden_activation",
            "dropout_rate", "epochs", "learning_rate", "batch_size",
            "optimizer", "loss", "dtype", "init_seed")})


@dataclass
class TrainedNetwork:
    config: NetworkConfig
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    final_loss: float
    reached_full_accuracy: bool
    epochs_run: int
    loss_history: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        c = self.config
        expect = {
            "W1": (c.input_size, c.hidden_size), "b1": (c.hidden_size,),
            "W2": (c.hidden_size, c.output_size), "b2": (c.output_size,),
        }
        for name, shape in expect.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ConfigError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"{name} contains non-finite entries")

    def save(self, path) -> None:
        save_network(self, path)

    @classmethod
    def load(cls, path) -> "TrainedNetwork":
        return load_network(path)


@dataclass
class ActivationRecord:
    """Inference-mode hidden activations, one row per dataset item."""

    activations: np.ndarray   # (num_items, hidden_size) float64
    class_ids: np.ndarray     # (num_items,)
    hidden_activation: str = "sigmoid"

    def __post_init__(self):
        self.activations = np.asarray(self.activations, dtype=np.float64)
        self.class_ids = np.asarray(self.class_ids, dtype=np.int64)
        if self.activations.ndim != 2:
            raise UsageError("activations must be a 2-d matrix")
        if self.activations.shape[0] != self.class_ids.shape[0]:
            raise UsageError("class_ids length must match activation rows")
        if not np.all(np.isfinite(self.activations)):
            raise ConfigError("activation record contains non-finite entries")
        if self.hidden_activation == "sigmoid":
            if self.activations.size and (self.activations.min() < 0.0
                                          or self.activations.max() > 1.0):
                raise ConfigError("sigmoid activations outside [0, 1]")
        elif self.activations.size and self.activations.min() < 0.0:
            raise ConfigError("relu activations below 0")

    @property
    def num_units(self) -> int:
        return self.activations.shape[1]

    def save(self, path) -> None:
        write_container(path, ACTIVATIONS_MAGIC, ACTIVATIONS_VERSION,
                        {"hidden_activation": self.hidden_activation},
                        {"activations": self.activations,
                         "class_ids": self.class_ids})

    @classmethod
    def load(cls, path) -> "ActivationRecord":
        version, meta, arrays = read_container(path, ACTIVATIONS_MAGIC)
        if version != ACTIVATIONS_VERSION:
            raise DataError(f"unsupported activations format version {version}")
        return cls(activations=arrays["activations"], class_ids=arrays["class_ids"],
                   hidden_activation=meta["hidden_activation"])


def dropout_mask(rng: np.random.Generator, size: int, rate: float, dtype) -> np.ndarray:
    """Inverted-scaling dropout mask: kept units carry 1/(1-rate), dropped 0."""
    keep = rng.random(size) >= rate
    return (keep / (1.0 - rate)).astype(dtype)


def _init_params(config: NetworkConfig, rng: np.random.Generator):
    """Uniform fan-based init for weights, zero biases."""
    dt = config.np_dtype
    lim1 = math.sqrt(6.0 / (config.input_size + config.hidden_size))
    lim2 = math.sqrt(6.0 / (config.hidden_size + config.output_size))
    W1 = rng.uniform(-lim1, lim1, (config.input_size, config.hidden_size)).astype(dt)
    W2 = rng.uniform(-lim2, lim2, (config.hidden_size, config.output_size)).astype(dt)
    b1 = np.zeros(config.hidden_size, dtype=dt)
    b2 = np.zeros(config.output_size, dtype=dt)
    return W1, b1, W2, b2


def _hidden(config: NetworkConfig, W1, b1, X):
    z1 = X @ W1 + b1
    return np.maximum(z1, 0) if config.hidden_activation == "relu" else expit(z1)


def forward(net: TrainedNetwork, x) -> tuple[np.ndarray, np.ndarray]:
    """Inference for one input vector: (hidden activations, output activations)."""
    x = np.asarray(x, dtype=net.config.np_dtype)
    if x.shape != (net.config.input_size,):
        raise UsageError(f"input shape {x.shape} does not match input_size "
                         f"{net.config.input_size}")
    hidden = _hidden(net.config, net.W1, net.b1, x[None, :])[0]
    output = expit(hidden @ net.W2 + net.b2)
    return hidden, output


def forward_batch(net: TrainedNetwork, X) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=net.config.np_dtype)
    if X.ndim != 2 or X.shape[1] != net.config.input_size:
        raise UsageError(f"batch shape {X.shape} does not match input_size "
                         f"{net.config.input_size}")
    hidden = _hidden(net.config, net.W1, net.b1, X)
    output = expit(hidden @ net.W2 + net.b2)
    return hidden, output


def accuracy(net: TrainedNetwork, dataset: "Dataset") -> float:
    """Fraction of items whose every output bit clears the 0.9 / 0.1 margins."""
    X = dataset.input_matrix(net.config.np_dtype)
    T = dataset.target_matrix(np.float64)
    _, y = forward_batch(net, X)
    y = y.astype(np.float64)
    ok = np.all(np.where(T == 1.0, y > ACCURACY_HIGH, y < ACCURACY_LOW), axis=1)
    return float(np.mean(ok))


def train(dataset: "Dataset", config: NetworkConfig,
          kernel=None) -> tuple[TrainedNetwork, ActivationRecord]:
    """Gradient-descent training over the whole dataset for config.epochs.

    Dropout draws one scaled mask over hidden units per epoch.  Training
    stops with TrainingError on a non-finite loss.  The returned record
    holds inference-mode (mask-free) hidden activations for every item.
    """
    if config.input_size != dataset.spec.codeword_length:
        raise UsageError(f"config input_size {config.input_size} != codeword length "
                         f"{dataset.spec.codeword_length}")
    if config.output_size != dataset.target_length:
        raise UsageError(f"config output_size {config.output_size} != target length "
                         f"{dataset.target_length}")
    step = kernel.fused_train_step if kernel is not None else backend.fused_train_step
    dt = config.np_dtype
    X = np.ascontiguousarray(dataset.input_matrix(dt))
    T = np.ascontiguousarray(dataset.target_matrix(dt))
    n = X.shape[0]

    rng = np.random.default_rng(config.init_seed)
    W1, b1, W2, b2 = _init_params(config, rng)
    moments = [np.zeros_like(a) for a in (W1, W1, b1, b1, W2, W2, b2, b2)]

    use_adam = config.optimizer == "adam"
    act_relu = config.hidden_activation == "relu"
    loss_mse = config.loss == "mse"
    batch = n if config.batch_size is None else min(config.batch_size, n)

    losses = np.empty(config.epochs, dtype=np.float64)
    t = 0
    for epoch in range(config.epochs):
        if config.dropout_rate > 0.0:
            mask = dropout_mask(rng, config.hidden_size, config.dropout_rate, dt)
        else:
            mask = None
        epoch_loss = 0.0
        for start in range(0, n, batch):
            stop = min(start + batch, n)
            t += 1
            bc1 = 1.0 - ADAM_BETA1 ** t
            bc2 = 1.0 - ADAM_BETA2 ** t
            loss = step(X[start:stop], T[start:stop], W1, b1, W2, b2, *moments,
                        mask, act_relu, loss_mse, use_adam,
                        config.learning_rate, ADAM_BETA1, ADAM_BETA2, ADAM_EPS,
                        bc1, bc2)
            epoch_loss += loss * (stop - start)
        epoch_loss /= n
        if not math.isfinite(epoch_loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}", epoch=epoch)
        losses[epoch] = epoch_loss

    final_loss = float(losses[-1]) if config.epochs else math.nan
    net = TrainedNetwork(config=config, W1=W1, b1=b1, W2=W2, b2=b2,
                         final_loss=final_loss, reached_full_accuracy=False,
                         epochs_run=config.epochs, loss_history=losses)
    net.reached_full_accuracy = accuracy(net, dataset) == 1.0
    hidden, _ = forward_batch(net, X)
    record = ActivationRecord(activations=hidden.astype(np.float64),
                              class_ids=dataset.class_ids.copy(),
                              hidden_activation=config.hidden_activation)
    return net, record


def _loss_and_grads(config: NetworkConfig, params, X, T):
    """Loss and analytic gradients at the given parameters, no dropout."""
    W1, b1, W2, b2 = params
    z1 = X @ W1 + b1
    a1 = np.maximum(z1, 0) if config.hidden_activation == "relu" else expit(z1)
    z2 = a1 @ W2 + b2
    y = expit(z2)
    inv = 1.0 / T.size
    if config.loss == "mse":
        loss = float(np.mean(np.square(y - T)))
        dz2 = 2.0 * inv * (y - T) * y * (1.0 - y)
    else:
        loss = float(np.mean(np.logaddexp(0.0, z2) - T * z2))
        dz2 = inv * (y - T)
    dh = dz2 @ W2.T
    dz1 = dh * (z1 > 0) if config.hidden_activation == "relu" else dh * (a1 * (1.0 - a1))
    return loss, (X.T @ dz1, dz1.sum(axis=0), a1.T @ dz2, dz2.sum(axis=0))


def gradient_check(config: NetworkConfig, X, T, step: float = 1e-5,
                   params=None) -> float:
    """Max relative error between analytic and central-difference gradients.

    Intended for small networks; runs in float64 regardless of config.dtype.
    Parameters default to the config's seeded initialization.
    """
    X = np.asarray(X, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if params is None:
        rng = np.random.default_rng(config.init_seed)
        params = _init_params(config, rng)
    params = [np.asarray(p, dtype=np.float64).copy() for p in params]
    _, grads = _loss_and_grads(config, params, X, T)
    worst = 0.0
    for p, g in zip(params, grads):
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            loss_hi = _loss_and_grads(config, params, X, T)[0]
            flat[i] = orig - step
            loss_lo = _loss_and_grads(config, params, X, T)[0]
            flat[i] = orig
            numeric = (loss_hi - loss_lo) / (2.0 * step)
            denom = max(abs(numeric), abs(gflat[i]), 1e-8)
            worst = max(worst, abs(numeric - gflat[i]) / denom)
    return worst


def save_network(net: TrainedNetwork, path) -> None:
    meta = {
        "config": net.config.to_dict(),
        "final_loss": net.final_loss,
        "reached_full_accuracy": net.reached_full_accuracy,
        "epochs_run": net.epochs_run,
    }
    arrays = {"W1": net.W1, "b1": net.b1, "W2": net.W2, "b2": net.b2}
    write_container(path, MODEL_MAGIC, MODEL_VERSION, meta, arrays)


def load_network(path) -> TrainedNetwork:
    version, meta, arrays = read_container(path, MODEL_MAGIC)
    if version != MODEL_VERSION:
        raise DataError(f"unsupported model format version {version}")
    return TrainedNetwork(
        config=NetworkConfig.from_dict(meta["config"]),
        W1=arrays["W1"], b1=arrays["b1"], W2=arrays["W2"], b2=arrays["b2"],
        final_loss=meta["final_loss"],
        reached_full_accuracy=meta["reached_full_accuracy"],
        epochs_run=meta["epochs_run"],
    )


def with_init_seed(config: NetworkConfig, seed: int) -> NetworkConfig:
    return replace(config, init_seed=seed)
