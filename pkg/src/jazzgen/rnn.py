"""Recurrent network assembly, training loop, checkpointing, and sampling.

The forward graph is fixed: one-hot window -> two stacked LSTM layers ->
last timestep's hidden state -> batch norm -> dropout -> dense relu ->
dropout -> dense to vocabulary logits.  Training minimizes softmax
cross-entropy with Adam and keeps the parameters from the epoch with the
lowest mean loss.

Sequences everywhere are lists of token text strings; the vocabulary maps
them to the contiguous indices the network consumes.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .neural import (
    AdamState,
    BatchNormState,
    NumericalFault,
    adam_step,
    batchnorm_backward,
    batchnorm_forward,
    dense_backward,
    dense_forward,
    dropout_backward,
    dropout_forward,
    init_dense,
    init_lstm,
    lstm_backward,
    lstm_forward,
    softmax,
    softmax_cross_entropy,
)
from .tokenizer import Vocabulary

CHECKPOINT_MAGIC = b"JGCKPT01"
CHECKPOINT_VERSION = 1
ARGMAX_TEMPERATURE = 1e-6

TRAINABLE = (
    "lstm1/w", "lstm1/u", "lstm1/b",
    "lstm2/w", "lstm2/u", "lstm2/b",
    "norm/gamma", "norm/beta",
    "dense1/w", "dense1/b",
    "dense2/w", "dense2/b",
)
RUNNING_STATS = ("norm/mean", "norm/var")


class CheckpointError(ValueError):
    """Checkpoint file is unreadable: bad magic, version, size, or shapes."""


@dataclass
class RnnConfig:
    n_vocab: int
    window: int = 16
    lstm_units: int = 64
    dense_units: int = 64
    epochs: int = 30
    batch_size: int = 64
    temperature: float = 1.0
    dropout: float = 0.3
    seed: int = 0
    learning_rate: float = 1e-3
    bn_momentum: float = 0.99
    dtype: str = "float32"

    def __post_init__(self):
        for name in ("n_vocab", "window", "lstm_units", "dense_units", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 for batch normalization")
        if self.temperature <= 0.0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype!r}")


@dataclass
class Checkpoint:
    tensors: dict
    vocab: Vocabulary
    config: RnnConfig
    best_loss: float
    epoch: int


class Network:
    """Parameter container plus the fixed forward/backward wiring."""

    def __init__(self, config: RnnConfig, tensors: dict | None = None):
        self.config = config
        self.dtype = np.dtype(config.dtype)
        if tensors is not None:
            self.tensors = tensors
        else:
            rng = np.random.default_rng(config.seed)
            v, h, d = config.n_vocab, config.lstm_units, config.dense_units
            lstm1 = init_lstm(rng, v, h, self.dtype)
            lstm2 = init_lstm(rng, h, h, self.dtype)
            dense1 = init_dense(rng, h, d, self.dtype)
            dense2 = init_dense(rng, d, v, self.dtype)
            self.tensors = {
                "lstm1/w": lstm1["w"], "lstm1/u": lstm1["u"], "lstm1/b": lstm1["b"],
                "lstm2/w": lstm2["w"], "lstm2/u": lstm2["u"], "lstm2/b": lstm2["b"],
                "norm/gamma": np.ones(h, dtype=self.dtype),
                "norm/beta": np.zeros(h, dtype=self.dtype),
                "norm/mean": np.zeros(h, dtype=self.dtype),
                "norm/var": np.ones(h, dtype=self.dtype),
                "dense1/w": dense1["w"], "dense1/b": dense1["b"],
                "dense2/w": dense2["w"], "dense2/b": dense2["b"],
            }

    def one_hot(self, windows: np.ndarray) -> np.ndarray:
        return np.eye(self.config.n_vocab, dtype=self.dtype)[windows]

    def forward(self, x, training: bool, rng: np.random.Generator | None = None):
        """x is one-hot (B, L, V); returns (logits, cache)."""
        t = self.tensors
        hs1, cache1 = lstm_forward(x, t["lstm1/w"], t["lstm1/u"], t["lstm1/b"])
        hs2, cache2 = lstm_forward(hs1, t["lstm2/w"], t["lstm2/u"], t["lstm2/b"])
        last = hs2[:, -1, :]
        bn_state = BatchNormState(t["norm/mean"], t["norm/var"], self.config.bn_momentum)
        normed, bn_cache = batchnorm_forward(
            last, t["norm/gamma"], t["norm/beta"], bn_state, training
        )
        t["norm/mean"], t["norm/var"] = bn_state.mean, bn_state.var
        dropped1, mask1 = dropout_forward(normed, self.config.dropout, rng, training)
        hidden, dense1_cache = dense_forward(
            dropped1, t["dense1/w"], t["dense1/b"], activation="relu"
        )
        dropped2, mask2 = dropout_forward(hidden, self.config.dropout, rng, training)
        logits, dense2_cache = dense_forward(dropped2, t["dense2/w"], t["dense2/b"])
        cache = (hs2.shape, cache1, cache2, bn_cache, mask1, dense1_cache, mask2, dense2_cache)
        return logits, cache

    def backward(self, dlogits, cache) -> dict:
        t = self.tensors
        hs2_shape, cache1, cache2, bn_cache, mask1, dense1_cache, mask2, dense2_cache = cache
        ddropped2, dw2, db2 = dense_backward(dlogits, dense2_cache, t["dense2/w"])
        dhidden = dropout_backward(ddropped2, mask2)
        ddropped1, dw1, db1 = dense_backward(dhidden, dense1_cache, t["dense1/w"])
        dnormed = dropout_backward(ddropped1, mask1)
        dlast, dgamma, dbeta = batchnorm_backward(dnormed, bn_cache)
        dhs2 = np.zeros(hs2_shape, dtype=dlast.dtype)
        dhs2[:, -1, :] = dlast
        dhs1, dw_l2, du_l2, db_l2 = lstm_backward(dhs2, cache2, t["lstm2/w"], t["lstm2/u"])
        _, dw_l1, du_l1, db_l1 = lstm_backward(dhs1, cache1, t["lstm1/w"], t["lstm1/u"])
        return {
            "lstm1/w": dw_l1, "lstm1/u": du_l1, "lstm1/b": db_l1,
            "lstm2/w": dw_l2, "lstm2/u": du_l2, "lstm2/b": db_l2,
            "norm/gamma": dgamma, "norm/beta": dbeta,
            "dense1/w": dw1, "dense1/b": db1,
            "dense2/w": dw2, "dense2/b": db2,
        }


def make_training_windows(
    sequences: Iterable[Sequence[str]], vocab: Vocabulary, window: int
) -> list[tuple[tuple[int, ...], int]]:
    """Stride-1 sliding windows within each sequence, never across them.

    Sequences shorter than window+1 yield nothing; if every sequence is that
    short there is nothing to train on and that is an error.
    """
    windows = []
    for sequence in sequences:
        indices = [vocab.encode(token) for token in sequence]
        for i in range(len(indices) - window):
            windows.append((tuple(indices[i : i + window]), indices[i + window]))
    if not windows:
        raise ValueError(f"no sequence is longer than the window ({window} tokens)")
    return windows


def train(
    config: RnnConfig,
    sequences: Iterable[Sequence[str]],
    vocab: Vocabulary,
    on_epoch: Callable[[int, float, bool], None] | None = None,
) -> Checkpoint:
    """Adam + cross-entropy over shuffled windows; returns the best epoch.

    on_epoch, when given, is called after every epoch with
    (epoch index, mean loss, improved flag).
    """
    if len(vocab) != config.n_vocab:
        raise ValueError(f"vocab size {len(vocab)} != config n_vocab {config.n_vocab}")
    windows = make_training_windows(sequences, vocab, config.window)
    inputs = np.array([w for w, _ in windows], dtype=np.int64)
    targets = np.array([t for _, t in windows], dtype=np.int64)

    net = Network(config)
    rng = np.random.default_rng(config.seed)
    adam = AdamState()
    best_loss = float("inf")
    best_epoch = -1
    best_tensors = None

    for epoch in range(config.epochs):
        order = rng.permutation(len(windows))
        loss_sum = 0.0
        example_count = 0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            if len(batch) == 1:
                warnings.warn(
                    f"epoch {epoch}: skipping size-1 batch (batch normalization needs >= 2)"
                )
                continue
            try:
                x = net.one_hot(inputs[batch])
                logits, cache = net.forward(x, training=True, rng=rng)
                loss, _, dlogits = softmax_cross_entropy(logits, targets[batch])
                grads = net.backward(dlogits, cache)
                adam_step(
                    {name: net.tensors[name] for name in TRAINABLE},
                    grads,
                    adam,
                    lr=config.learning_rate,
                )
            except NumericalFault as fault:
                raise NumericalFault(
                    f"epoch {epoch}, batch {start // config.batch_size}: {fault}"
                ) from fault
            loss_sum += loss * len(batch)
            example_count += len(batch)
        if example_count == 0:
            raise ValueError("every batch was skipped; decrease batch_size or add data")
        mean_loss = loss_sum / example_count
        improved = mean_loss < best_loss
        if improved:
            best_loss = mean_loss
            best_epoch = epoch
            best_tensors = {name: array.copy() for name, array in net.tensors.items()}
        if on_epoch is not None:
            on_epoch(epoch, mean_loss, improved)
    return Checkpoint(best_tensors, vocab, config, best_loss, best_epoch)


def next_distribution(net: Network, context: Sequence[int], temperature: float) -> np.ndarray:
    """Softmax over the next token given a full window of indices."""
    x = net.one_hot(np.array([context], dtype=np.int64))
    logits, _ = net.forward(x, training=False)
    return softmax(logits[0].astype(np.float64), temperature)


def select_index(logits: np.ndarray, temperature: float, rng: np.random.Generator | None = None) -> int:
    """One sampling step: argmax at or below the temperature floor, else a
    draw from the tempered softmax computed in float64."""
    if temperature <= ARGMAX_TEMPERATURE:
        return int(np.argmax(logits))
    if rng is None:
        raise ValueError("sampling at temperature > 0 requires an rng")
    probs = softmax(np.asarray(logits, dtype=np.float64), temperature)
    probs = probs / probs.sum()
    return int(rng.choice(len(probs), p=probs))


def generate_rnn(
    ckpt: Checkpoint,
    seed: Sequence[str],
    steps: int,
    temperature: float | None = None,
    rng: np.random.Generator | None = None,
) -> list[str]:
    """Seed plus `steps` sampled continuation tokens.

    The final window-length slice of the seed is the initial context.
    Temperatures at or below 1e-6 short-circuit to argmax, which lands on
    the lexicographically smallest token among ties because the vocabulary
    is sorted.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    window = ckpt.config.window
    if len(seed) < window:
        raise ValueError(f"seed has {len(seed)} tokens; at least {window} required")
    if temperature is None:
        temperature = ckpt.config.temperature
    if rng is None:
        rng = np.random.default_rng(ckpt.config.seed)
    net = Network(ckpt.config, tensors=ckpt.tensors)
    context = [ckpt.vocab.encode(token) for token in seed][-window:]
    output = [str(token) for token in seed]
    for _ in range(steps):
        x = net.one_hot(np.array([context], dtype=np.int64))
        logits, _ = net.forward(x, training=False)
        index = select_index(logits[0], temperature, rng)
        output.append(ckpt.vocab.tokens[index])
        context = context[1:] + [index]
    return output


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    """Text manifest (JSON) plus concatenated little-endian float32 tensors."""
    names = sorted(ckpt.tensors)
    manifest = {
        "format_version": CHECKPOINT_VERSION,
        "config": asdict(ckpt.config),
        "vocab": list(ckpt.vocab.tokens),
        "best_loss": ckpt.best_loss,
        "epoch": ckpt.epoch,
        "tensors": [{"name": n, "shape": list(ckpt.tensors[n].shape)} for n in names],
    }
    blob = b"".join(np.ascontiguousarray(ckpt.tensors[n], dtype="<f4").tobytes() for n in names)
    encoded = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(CHECKPOINT_MAGIC)
        handle.write(struct.pack("<I", len(encoded)))
        handle.write(encoded)
        handle.write(blob)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as handle:
        data = handle.read()
    if len(data) < len(CHECKPOINT_MAGIC) + 4 or not data.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError("not a checkpoint file (bad magic)")
    offset = len(CHECKPOINT_MAGIC)
    (manifest_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if len(data) < offset + manifest_len:
        raise CheckpointError("truncated checkpoint: manifest cut short")
    try:
        manifest = json.loads(data[offset : offset + manifest_len])
    except json.JSONDecodeError as err:
        raise CheckpointError(f"manifest is not valid JSON: {err}") from err
    offset += manifest_len
    version = manifest.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"format version {version} not supported (expected {CHECKPOINT_VERSION})")
    config = RnnConfig(**manifest["config"])
    vocab = Vocabulary(tuple(manifest["vocab"]))
    dtype = np.dtype(config.dtype)
    expected = sum(
        int(np.prod(entry["shape"], dtype=np.int64)) for entry in manifest["tensors"]
    )
    blob = data[offset:]
    if len(blob) < expected * 4:
        raise CheckpointError(
            f"truncated checkpoint: tensor blob has {len(blob)} bytes, manifest needs {expected * 4}"
        )
    if len(blob) > expected * 4:
        raise CheckpointError(
            f"tensor blob has {len(blob)} bytes but manifest shapes account for {expected * 4}"
        )
    tensors = {}
    cursor = 0
    for entry in manifest["tensors"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        flat = np.frombuffer(blob, dtype="<f4", count=count, offset=cursor * 4)
        tensors[entry["name"]] = flat.reshape(entry["shape"]).astype(dtype)
        cursor += count
    return Checkpoint(tensors, vocab, config, float(manifest["best_loss"]), int(manifest["epoch"]))
