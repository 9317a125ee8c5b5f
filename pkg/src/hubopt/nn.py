"""Dense networks, embeddings, losses, and Adam on plain numpy.

Everything exposes exact reverse-mode gradients so training code can be
checked against central finite differences. Arrays are float64 throughout;
row-vector convention (batch on axis 0).
"""

from __future__ import annotations

import base64
import hashlib
import json
from typing import Callable, Sequence

import numpy as np

ACTIVATIONS = ("identity", "relu", "sigmoid", "softmax")

CHECKPOINT_FORMAT = "hubopt-weights"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Unreadable, corrupt, or architecturally incompatible checkpoint."""


class NonFiniteGradientError(ValueError):
    """An optimizer update was rejected because a gradient had NaN/Inf entries."""


def act_forward(tag: str, z: np.ndarray) -> np.ndarray:
    if tag == "identity":
        return z
    if tag == "relu":
        return np.maximum(z, 0.0)
    if tag == "sigmoid":
        # clamp to keep exp() in range; the output saturates either way
        return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))
    if tag == "softmax":
        shifted = z - z.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)
    raise ValueError(f"unknown activation {tag!r}")


def act_backward(tag: str, out: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Gradient wrt pre-activation, given the activation output and its gradient."""
    if tag == "identity":
        return grad_out
    if tag == "relu":
        return grad_out * (out > 0.0)
    if tag == "sigmoid":
        return grad_out * out * (1.0 - out)
    if tag == "softmax":
        inner = (grad_out * out).sum(axis=1, keepdims=True)
        return out * (grad_out - inner)
    raise ValueError(f"unknown activation {tag!r}")


def _init_dense(rng: np.random.Generator, fan_in: int, fan_out: int):
    bound = 1.0 / np.sqrt(fan_in)
    w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    b = rng.uniform(-bound, bound, size=(fan_out,))
    return w, b


class DenseNet:
    """Stack of fully connected layers with per-layer activations."""

    def __init__(self, sizes: Sequence[int], activations: Sequence[str], rng: np.random.Generator):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if len(activations) != len(sizes) - 1:
            raise ValueError(
                f"got {len(activations)} activations for {len(sizes) - 1} layers"
            )
        for tag in activations:
            if tag not in ACTIVATIONS:
                raise ValueError(f"unknown activation {tag!r}")
        self.sizes = tuple(int(s) for s in sizes)
        self.activations = tuple(activations)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            w, b = _init_dense(rng, fan_in, fan_out)
            self.weights.append(w)
            self.biases.append(b)

    @property
    def input_dim(self) -> int:
        return self.sizes[0]

    @property
    def output_dim(self) -> int:
        return self.sizes[-1]

    def forward(self, x: np.ndarray):
        """Returns (output, cache); cache feeds backward()."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"expected input shape (n, {self.input_dim}), got {x.shape}")
        cache = []
        a = x
        for w, b, tag in zip(self.weights, self.biases, self.activations):
            z = a @ w + b
            a_next = act_forward(tag, z)
            cache.append((a, a_next))
            a = a_next
        return a, cache

    def backward(self, cache, grad_out: np.ndarray):
        """Returns (param gradients aligned with params(), gradient wrt input)."""
        grads = [None] * (2 * len(self.weights))
        grad_a = grad_out
        for i in reversed(range(len(self.weights))):
            x_in, a_out = cache[i]
            grad_z = act_backward(self.activations[i], a_out, grad_a)
            grads[2 * i] = x_in.T @ grad_z
            grads[2 * i + 1] = grad_z.sum(axis=0)
            grad_a = grad_z @ self.weights[i].T
        return grads, grad_a

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def state_arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{prefix}w{i}"] = w
            out[f"{prefix}b{i}"] = b
        return out

    def load_state(self, arrays: dict[str, np.ndarray], prefix: str = "") -> None:
        for name, target in self.state_arrays(prefix).items():
            if name not in arrays:
                raise CheckpointError(f"checkpoint missing array {name!r}")
            src = arrays[name]
            if src.shape != target.shape:
                raise CheckpointError(
                    f"array {name!r}: model expects shape {target.shape}, "
                    f"checkpoint has {src.shape}"
                )
            target[...] = src


class EmbeddingTable:
    """Dense lookup table with scatter-add gradients."""

    def __init__(self, vocab: int, dim: int, rng: np.random.Generator):
        if vocab <= 0 or dim <= 0:
            raise ValueError(f"vocab and dim must be positive, got {vocab}, {dim}")
        self.vocab = int(vocab)
        self.dim = int(dim)
        bound = 1.0 / np.sqrt(dim)
        self.table = rng.uniform(-bound, bound, size=(self.vocab, self.dim))

    def lookup(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx)
        if idx.size and (idx.min() < 0 or idx.max() >= self.vocab):
            raise IndexError(
                f"embedding index out of range [0, {self.vocab}): "
                f"min={idx.min()}, max={idx.max()}"
            )
        return self.table[idx]

    def grad(self, idx: np.ndarray, grad_rows: np.ndarray) -> np.ndarray:
        g = np.zeros_like(self.table)
        np.add.at(g, np.asarray(idx), grad_rows)
        return g


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean squared error over all elements; returns (value, grad wrt pred)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def nll_loss(probs: np.ndarray, labels: np.ndarray):
    """Mean negative log likelihood of the labeled class; grad is wrt probs."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    n = probs.shape[0]
    if labels.shape != (n,):
        raise ValueError(f"labels must have shape ({n},), got {labels.shape}")
    p = probs[np.arange(n), labels]
    if np.any(p <= 0.0):
        raise ValueError("nll_loss needs strictly positive probabilities")
    value = float(-np.mean(np.log(p)))
    grad = np.zeros_like(probs)
    grad[np.arange(n), labels] = -1.0 / (n * p)
    return value, grad


class Adam:
    """Adam with decoupled weight decay (decay applied to parameters directly)."""

    def __init__(
        self,
        params: Sequence[np.ndarray],
        lr: float = 1e-3,
        weight_decay: float = 0.0,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if lr <= 0:
            raise ValueError(f"lr must be positive, got {lr}")
        if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
            raise ValueError("betas must be in [0, 1)")
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        """Update params in place. Rejects the whole update on non-finite grads."""
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ValueError(
                f"expected {len(self.m)} parameter/gradient arrays, "
                f"got {len(params)}/{len(grads)}"
            )
        for i, g in enumerate(grads):
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradientError(
                    f"non-finite gradient for parameter {i} with shape {np.shape(g)}"
                )
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay:
                update = update + self.weight_decay * p
            p -= self.lr * update
            if not np.all(np.isfinite(p)):
                raise NonFiniteGradientError(
                    "parameters became non-finite after an Adam update"
                )


# -- checkpoint container ------------------------------------------------------


def _payload_digest(arrays: dict[str, np.ndarray], meta: dict) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(meta, sort_keys=True).encode("utf-8"))
    for name in arrays:
        arr = arrays[name]
        h.update(name.encode("utf-8"))
        h.update(str(arr.shape).encode("utf-8"))
        h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    return h.hexdigest()


def save_weights(path: str, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    """Write a versioned, checksummed weight container (JSON + base64 float64)."""
    meta = dict(meta or {})
    entries = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        entries.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "data": base64.b64encode(arr.tobytes()).decode("ascii"),
            }
        )
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "meta": meta,
        "arrays": entries,
        "checksum": _payload_digest(arrays, meta),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_weights(path: str):
    """Read a weight container; returns (arrays dict, meta dict).

    Raises CheckpointError for truncation, checksum mismatch, or version skew.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"{path} is not a readable checkpoint: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a {CHECKPOINT_FORMAT} container")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path} has container version {doc.get('version')}, "
            f"expected {CHECKPOINT_VERSION}"
        )
    arrays: dict[str, np.ndarray] = {}
    try:
        for entry in doc["arrays"]:
            raw = base64.b64decode(entry["data"].encode("ascii"))
            arr = np.frombuffer(raw, dtype=np.float64).reshape(entry["shape"]).copy()
            arrays[entry["name"]] = arr
        meta = doc["meta"]
        stored = doc["checksum"]
    except (KeyError, ValueError, TypeError) as exc:
        raise CheckpointError(f"{path} has a malformed payload: {exc}") from exc
    if _payload_digest(arrays, meta) != stored:
        raise CheckpointError(f"{path} failed its checksum; file corrupt or edited")
    return arrays, meta


# -- NCF-style scorer ----------------------------------------------------------


class EmbedMlp:
    """Station/slot embedding scorer: concatenated embeddings -> ReLU MLP -> sigmoid.

    The shape shared by the rating scorer, the outcome regressions, and the
    propensity classifier; one scalar output in (0, 1) per (station, slot) pair.
    """

    KIND = "embed_mlp"

    def __init__(
        self,
        n_stations: int,
        n_slots: int = 24,
        embed_dim: int = 16,
        hidden: Sequence[int] = (64, 32),
        seed: int = 0,
    ):
        rng = np.random.default_rng(seed)
        self.n_stations = int(n_stations)
        self.n_slots = int(n_slots)
        self.embed_dim = int(embed_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.emb_station = EmbeddingTable(self.n_stations, self.embed_dim, rng)
        self.emb_slot = EmbeddingTable(self.n_slots, self.embed_dim, rng)
        sizes = [2 * self.embed_dim, *self.hidden, 1]
        acts = ["relu"] * len(self.hidden) + ["sigmoid"]
        self.net = DenseNet(sizes, acts, rng)

    def forward(self, stations: np.ndarray, slots: np.ndarray):
        stations = np.asarray(stations)
        slots = np.asarray(slots)
        x = np.concatenate(
            [self.emb_station.lookup(stations), self.emb_slot.lookup(slots)], axis=1
        )
        out, net_cache = self.net.forward(x)
        return out[:, 0], (stations, slots, net_cache)

    def backward(self, cache, grad_out: np.ndarray) -> list[np.ndarray]:
        stations, slots, net_cache = cache
        net_grads, grad_x = self.net.backward(net_cache, np.asarray(grad_out)[:, None])
        d = self.embed_dim
        g_station = self.emb_station.grad(stations, grad_x[:, :d])
        g_slot = self.emb_slot.grad(slots, grad_x[:, d:])
        return [g_station, g_slot] + net_grads

    def params(self) -> list[np.ndarray]:
        return [self.emb_station.table, self.emb_slot.table] + self.net.params()

    def predict(self, stations: np.ndarray, slots: np.ndarray) -> np.ndarray:
        out, _ = self.forward(stations, slots)
        return out

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {"emb_station": self.emb_station.table, "emb_slot": self.emb_slot.table}
        out.update(self.net.state_arrays("net."))
        return out

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        for name in ("emb_station", "emb_slot"):
            if name not in arrays:
                raise CheckpointError(f"checkpoint missing array {name!r}")
            target = getattr(self, name).table
            if arrays[name].shape != target.shape:
                raise CheckpointError(
                    f"array {name!r}: model expects shape {target.shape}, "
                    f"checkpoint has {arrays[name].shape}"
                )
            target[...] = arrays[name]
        self.net.load_state(arrays, "net.")

    def save(self, path: str) -> None:
        meta = {
            "kind": self.KIND,
            "n_stations": self.n_stations,
            "n_slots": self.n_slots,
            "embed_dim": self.embed_dim,
            "hidden": list(self.hidden),
        }
        save_weights(path, self.state_arrays(), meta)

    @classmethod
    def from_checkpoint(cls, path: str) -> "EmbedMlp":
        arrays, meta = load_weights(path)
        if meta.get("kind") != cls.KIND:
            raise CheckpointError(f"{path} holds a {meta.get('kind')!r}, expected {cls.KIND!r}")
        model = cls(
            n_stations=meta["n_stations"],
            n_slots=meta["n_slots"],
            embed_dim=meta["embed_dim"],
            hidden=meta["hidden"],
        )
        model.load_state(arrays)
        return model


def fit_embed_mlp(
    model: EmbedMlp,
    stations: np.ndarray,
    slots: np.ndarray,
    targets: np.ndarray,
    *,
    epochs: int = 5,
    batch_size: int = 64,
    lr: float = 0.01,
    weight_decay: float = 1e-4,
    seed: int = 0,
) -> list[float]:
    """Minimize MSE(model(stations, slots), targets); returns per-epoch mean loss."""
    stations = np.asarray(stations)
    slots = np.asarray(slots)
    targets = np.asarray(targets, dtype=np.float64)
    n = len(targets)
    if n == 0:
        raise ValueError("cannot fit on an empty dataset")
    rng = np.random.default_rng(seed)
    adam = Adam(model.params(), lr=lr, weight_decay=weight_decay)
    history = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, batch_size):
            idx = order[lo : lo + batch_size]
            pred, cache = model.forward(stations[idx], slots[idx])
            value, grad = mse_loss(pred, targets[idx])
            grads = model.backward(cache, grad)
            adam.step(model.params(), grads)
            total += value * len(idx)
        history.append(total / n)
    return history
