"""Learned value estimator replacing rollouts during planning.

The network maps a fixed-length encoding of (current state, adapted design)
to the three per-strategy cumulative rewards.  Inputs are split into
branches (heads): the current and adapted menus as one-hot entry rows, the
signed difference of the position-indexed relatedness matrices, the
previous/current click distributions, and per-position summaries of the
quantities the search models consume (interest mass, memory strength,
anchor relatedness, displacement).  Each head feeds a dense layer; the
concatenation feeds a trunk layer and three independent tails (one per
reward), each two stacked dense layers ending in a linear output, since
rewards are unbounded.

Everything is plain numpy with hand-written backpropagation so gradients can
be verified against finite differences.  Training uses root-mean-square
gradient scaling, dropout before the hidden dense layers (optionally the
input heads too), and early stopping on a validation split; inference is
deterministic and dropout-free.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .adaptation import apply_adaptation, enumerate_adaptations, transition
from .menu import SEPARATOR, InteractionState, MenuDesign
from .planner import DEFAULT_DISCOUNT, rollout
from .user_model import ModelParams, RewardVector, reward

CAPACITY_ITEMS = 20
CAPACITY_SEPS = 8
N_ENTRY_SLOTS = CAPACITY_ITEMS + CAPACITY_SEPS
N_CLASSES = CAPACITY_ITEMS + 2  # label slots + separator + padding
SEP_CLASS = CAPACITY_ITEMS
PAD_CLASS = CAPACITY_ITEMS + 1

# the design head sees both layouts: rewards are differences between the
# current and the adapted design, so the current one-hot block is required
# to make the target a function of the encoding
MENU_LENGTH = 2 * N_ENTRY_SLOTS * N_CLASSES
ASSOC_LENGTH = CAPACITY_ITEMS * CAPACITY_ITEMS
CLICKS_LENGTH = 2 * CAPACITY_ITEMS
N_SUMMARY_CHANNELS = 20
SUMMARY_LENGTH = N_SUMMARY_CHANNELS * CAPACITY_ITEMS
ENCODING_LENGTH = MENU_LENGTH + ASSOC_LENGTH + CLICKS_LENGTH + SUMMARY_LENGTH

TAILS = ("serial", "forage", "recall")

DATASET_VERSION = 1
MODEL_VERSION = 1


@dataclass(frozen=True)
class FeatureEncoding:
    menu_onehot: np.ndarray  # adapted design: (entry slots, classes), rows sum to 1
    menu_onehot_before: np.ndarray  # current design, same layout
    assoc_diff: np.ndarray  # (items, items), values in {-1, 0, 1}
    clicks_prev: np.ndarray  # (items,)
    clicks_curr: np.ndarray  # (items,)
    summaries: np.ndarray  # (channels, items): per-position model summaries

    def vector(self) -> np.ndarray:
        return np.concatenate(
            [
                self.menu_onehot.ravel(),
                self.menu_onehot_before.ravel(),
                self.assoc_diff.ravel(),
                self.clicks_prev,
                self.clicks_curr,
                self.summaries.ravel(),
            ]
        ).astype(np.float64)


def _positional_relatedness(design: MenuDesign) -> np.ndarray:
    """Relatedness matrix indexed by item position; moves change it, labels don't."""
    out = np.zeros((CAPACITY_ITEMS, CAPACITY_ITEMS))
    items = design.items
    related = design.association.related
    for p, a in enumerate(items):
        for q, b in enumerate(items):
            if related(a, b):
                out[p, q] = 1.0
    return out


def _click_distribution(labels: tuple[str, ...], slot: dict[str, int]) -> np.ndarray:
    out = np.zeros(CAPACITY_ITEMS)
    if not labels:
        return out
    for label in labels:
        out[slot[label]] += 1.0
    return out / len(labels)


def _position_summaries(
    before: InteractionState, after_design: MenuDesign
) -> np.ndarray:
    """Per-position summaries of interest, memory, and grouping structure.

    The raw one-hot blocks identify the designs but leave the value function
    a deep composition of label lookups; these channels expose the
    quantities the search models actually consume, one number per item
    position, which makes the rewards learnable at desk-scale sample counts.
    Channels: interest mass at each position (current and adapted layout),
    in-place memory strength of each occupant (both layouts), strongest
    off-position memory of the adapted occupant plus its interest-weighted
    version, anchor relatedness of each occupant (both layouts) plus
    interest-weighted versions, displacement terms, recall hit/near-miss
    indicators against each occupant's strongest remembered location (both
    layouts, with interest-weighted variants), local-search span, and the
    pointing-scale of the position.
    """
    from .user_model import activation

    user = before.user
    interest_map = user.interest
    out = np.zeros((N_SUMMARY_CHANNELS, CAPACITY_ITEMS))
    n = len(before.design.items)
    theta, flat_span = 0.5, 3  # default recall threshold and fovea half-span

    def squash(b: float) -> float:
        return b / (1.0 + b)

    def related_to_anchor(design: MenuDesign) -> dict[str, float]:
        flags = {}
        for group in design.groups:
            for member in group.members:
                flags[member] = float(design.association.related(group.anchor, member))
        return flags

    def recalled_location(label: str) -> int | None:
        best, best_b = None, theta
        for loc in range(1, n + 1):
            b = activation(user, label, loc)
            if b > best_b or (b == best_b and best is None and b >= theta):
                best, best_b = loc, b
        return best

    def recall_outcome(design: MenuDesign, label: str, p: int) -> tuple[float, float]:
        """(hit, near-miss): does memory point at p, or at p's neighborhood?"""
        remembered = recalled_location(label)
        if remembered is None:
            return 0.0, 0.0
        if remembered == p:
            return 1.0, 0.0
        if design.is_flat:
            nearby = abs(remembered - p) <= flat_span
        else:
            nearby = (
                design.group_of_location[remembered] == design.group_of_location[p]
            )
        return 0.0, float(nearby)

    def group_size_at(design: MenuDesign, p: int) -> float:
        return len(design.groups[design.group_of_location[p]].members) / CAPACITY_ITEMS

    rel_before = related_to_anchor(before.design)
    rel_after = related_to_anchor(after_design)
    before_pos = before.design.item_index
    for p in range(1, n + 1):
        item_b = before.design.items[p - 1]
        item_a = after_design.items[p - 1]
        w_b = interest_map.get(item_b, 0.0)
        w_a = interest_map.get(item_a, 0.0)
        off_memory = max(
            (activation(user, item_a, loc) for loc in range(1, n + 1) if loc != p),
            default=0.0,
        )
        displacement = (p - before_pos[item_a]) / CAPACITY_ITEMS
        hit_b, local_b = recall_outcome(before.design, item_b, p)
        hit_a, local_a = recall_outcome(after_design, item_a, p)
        column = (
            w_b,
            w_a,
            squash(activation(user, item_b, p)),
            squash(activation(user, item_a, p)),
            squash(off_memory),
            w_a * squash(off_memory),
            rel_before[item_b],
            rel_after[item_a],
            w_b * rel_before[item_b],
            w_a * rel_after[item_a],
            displacement,
            w_a * abs(displacement),
            hit_b,
            hit_a,
            local_b,
            local_a,
            w_b * hit_b - w_a * hit_a,
            w_b * local_b - w_a * local_a,
            group_size_at(after_design, p) - group_size_at(before.design, p),
            math.log2(1 + p) / 5.0,
        )
        out[:, p - 1] = column
    return out


def encode(
    before: InteractionState, after_design: MenuDesign, window: int = 20
) -> FeatureEncoding:
    """Deterministic fixed-length encoding of one candidate adaptation."""
    labels = sorted(before.design.items)
    if len(labels) > CAPACITY_ITEMS:
        raise ValueError(f"menu exceeds capacity ({len(labels)} > {CAPACITY_ITEMS} items)")
    if (
        before.design.n_separators > CAPACITY_SEPS
        or after_design.n_separators > CAPACITY_SEPS
    ):
        raise ValueError("menu exceeds separator capacity")
    slot = {label: i for i, label in enumerate(labels)}

    def one_hot(design: MenuDesign) -> np.ndarray:
        rows = np.zeros((N_ENTRY_SLOTS, N_CLASSES))
        for row, entry in enumerate(design.entries):
            rows[row, SEP_CLASS if entry == SEPARATOR else slot[entry]] = 1.0
        for row in range(len(design.entries), N_ENTRY_SLOTS):
            rows[row, PAD_CLASS] = 1.0
        return rows

    assoc_diff = _positional_relatedness(after_design) - _positional_relatedness(
        before.design
    )

    clicks = before.user.log.clicks
    curr = tuple(c.label for c in clicks[-window:])
    prev = tuple(c.label for c in clicks[-2 * window : -window]) if len(clicks) > window else ()
    return FeatureEncoding(
        menu_onehot=one_hot(after_design),
        menu_onehot_before=one_hot(before.design),
        assoc_diff=assoc_diff,
        clicks_prev=_click_distribution(prev, slot),
        clicks_curr=_click_distribution(curr, slot),
        summaries=_position_summaries(before, after_design),
    )


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArchConfig:
    head_width: int = 64
    trunk_width: int = 128
    tail_width: int = 64


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    decay: float = 0.9
    max_epochs: int = 200
    patience: int = 10
    batch_size: int = 64
    val_fraction: float = 0.2
    dropout: float = 0.5
    input_dropout: bool = False  # heads see sparse one-hots; masking them hurts
    seed: int = 0
    arch: ArchConfig = field(default_factory=ArchConfig)


HEADS = (
    ("head_menu", MENU_LENGTH),
    ("head_assoc", ASSOC_LENGTH),
    ("head_clicks", CLICKS_LENGTH),
    ("head_summary", SUMMARY_LENGTH),
)


def _layer_specs(arch: ArchConfig) -> list[tuple[str, int, int]]:
    specs = [(name, length, arch.head_width) for name, length in HEADS]
    specs.append(("trunk", len(HEADS) * arch.head_width, arch.trunk_width))
    for tail in TAILS:
        specs.append((f"tail_{tail}_1", arch.trunk_width, arch.tail_width))
        specs.append((f"tail_{tail}_2", arch.tail_width, arch.tail_width))
        specs.append((f"tail_{tail}_out", arch.tail_width, 1))
    return specs


def init_params(arch: ArchConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Fan-in-scaled uniform initialization; biases start at zero."""
    params = {}
    for name, fan_in, fan_out in _layer_specs(arch):
        bound = math.sqrt(1.0 / fan_in)
        params[f"{name}_W"] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        params[f"{name}_b"] = np.zeros(fan_out)
    return params


def _make_masks(
    arch: ArchConfig,
    batch: int,
    dropout: float,
    rng: np.random.Generator,
    input_dropout: bool = False,
) -> dict[str, np.ndarray] | None:
    """Inverted-dropout masks for the input of each dense layer."""
    if dropout <= 0:
        return None
    keep = 1.0 - dropout
    shapes = dict(HEADS) if input_dropout else {}
    shapes["trunk"] = len(HEADS) * arch.head_width
    for tail in TAILS:
        shapes[f"tail_{tail}_1"] = arch.trunk_width
        shapes[f"tail_{tail}_2"] = arch.tail_width
        shapes[f"tail_{tail}_out"] = arch.tail_width
    return {
        name: (rng.random((batch, dim)) < keep) / keep for name, dim in shapes.items()
    }


def _forward(
    params: dict[str, np.ndarray],
    X: np.ndarray,
    arch: ArchConfig,
    masks: dict[str, np.ndarray] | None = None,
):
    """Batched forward pass; returns outputs and the cache for backprop."""

    def dense(name, u, relu):
        if masks is not None and name in masks:
            u = u * masks[name]
        pre = u @ params[f"{name}_W"] + params[f"{name}_b"]
        out = np.maximum(pre, 0.0) if relu else pre
        return u, pre, out

    cache = {}
    offset = 0
    head_outs = []
    for name, length in HEADS:
        cache[name] = dense(name, X[:, offset : offset + length], relu=True)
        head_outs.append(cache[name][2])
        offset += length
    z = np.concatenate(head_outs, axis=1)
    cache["trunk"] = dense("trunk", z, relu=True)
    trunk_out = cache["trunk"][2]
    outs = []
    for tail in TAILS:
        cache[f"tail_{tail}_1"] = dense(f"tail_{tail}_1", trunk_out, relu=True)
        cache[f"tail_{tail}_2"] = dense(f"tail_{tail}_2", cache[f"tail_{tail}_1"][2], relu=True)
        cache[f"tail_{tail}_out"] = dense(f"tail_{tail}_out", cache[f"tail_{tail}_2"][2], relu=False)
        outs.append(cache[f"tail_{tail}_out"][2])
    Y = np.concatenate(outs, axis=1)
    return Y, cache


def loss_and_grads(
    params: dict[str, np.ndarray],
    X: np.ndarray,
    Y_target: np.ndarray,
    arch: ArchConfig,
    masks: dict[str, np.ndarray] | None = None,
):
    """Summed per-tail mean squared error and its analytic gradients."""
    Y, cache = _forward(params, X, arch, masks)
    batch = X.shape[0]
    diff = Y - Y_target
    loss = float(np.sum(np.mean(diff**2, axis=0)))
    grads = {name: np.zeros_like(p) for name, p in params.items()}

    def backward(name, dout, relu):
        u, pre, _ = cache[name]
        if relu:
            dout = dout * (pre > 0)
        grads[f"{name}_W"] += u.T @ dout
        grads[f"{name}_b"] += dout.sum(axis=0)
        du = dout @ params[f"{name}_W"].T
        if masks is not None and name in masks:
            du = du * masks[name]
        return du

    d_trunk_out = np.zeros_like(cache["trunk"][2])
    for i, tail in enumerate(TAILS):
        dy = (2.0 / batch) * diff[:, i : i + 1]
        d2 = backward(f"tail_{tail}_out", dy, relu=False)
        d1 = backward(f"tail_{tail}_2", d2, relu=True)
        d_trunk_out += backward(f"tail_{tail}_1", d1, relu=True)
    dz = backward("trunk", d_trunk_out, relu=True)
    w = arch.head_width
    for i, (name, _) in enumerate(HEADS):
        backward(name, dz[:, i * w : (i + 1) * w], relu=True)
    return loss, grads


@dataclass
class ValueModel:
    params: dict[str, np.ndarray]
    arch: ArchConfig
    target_mean: np.ndarray  # (3,)
    target_std: np.ndarray  # (3,)
    hyper: dict
    history: dict = field(default_factory=dict)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        Y, _ = _forward(self.params, np.atleast_2d(X), self.arch, masks=None)
        return Y * self.target_std + self.target_mean

    def predict(self, encoding: FeatureEncoding | np.ndarray) -> RewardVector:
        x = encoding.vector() if isinstance(encoding, FeatureEncoding) else encoding
        y = self.predict_batch(x.reshape(1, -1))[0]
        if not np.all(np.isfinite(y)):
            raise ValueError("non-finite value prediction")
        return RewardVector(float(y[0]), float(y[1]), float(y[2]))

    def value_fn(self, window: int = 20) -> Callable[[InteractionState, MenuDesign], RewardVector]:
        return lambda state, design: self.predict(encode(state, design, window))


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    X: np.ndarray  # float32 (count, encoding length)
    Y: np.ndarray  # float32 (count, 3)

    def __len__(self) -> int:
        return self.X.shape[0]


def save_dataset(dataset: Dataset, path) -> None:
    header = {
        "version": DATASET_VERSION,
        "encoding_length": int(dataset.X.shape[1]),
        "count": int(dataset.X.shape[0]),
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        f.write(dataset.X.astype(np.float32).tobytes())
        f.write(dataset.Y.astype(np.float32).tobytes())


def load_dataset(path) -> Dataset:
    with open(path, "rb") as f:
        header = json.loads(f.readline())
        if header["version"] != DATASET_VERSION:
            raise ValueError(f"unsupported dataset version {header['version']}")
        count, length = header["count"], header["encoding_length"]
        X = np.frombuffer(f.read(4 * count * length), dtype=np.float32).reshape(count, length)
        Y = np.frombuffer(f.read(4 * count * 3), dtype=np.float32).reshape(count, 3)
    return Dataset(X.copy(), Y.copy())


def generate_training_data(
    state_sampler: Callable[[np.random.Generator], InteractionState],
    rng: np.random.Generator,
    count: int,
    params: ModelParams,
    horizon: int = 4,
    session_length: int = 20,
    warmup_max: int = 3,
    window: int = 20,
    discount: float = DEFAULT_DISCOUNT,
) -> Dataset:
    """Sample (encoding, cumulative reward) pairs from random planning states.

    Each sample draws a fresh state, walks a few random visible adaptations
    to diversify it, then scores one random candidate adaptation the same way
    the planner's simulation path does: immediate reward plus a random
    rollout to the horizon.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    X = np.zeros((count, ENCODING_LENGTH), dtype=np.float32)
    Y = np.zeros((count, 3), dtype=np.float32)
    for i in range(count):
        state = state_sampler(rng)
        for _ in range(int(rng.integers(0, warmup_max + 1))):
            options = enumerate_adaptations(state.design)
            step = options[int(rng.integers(len(options)))]
            state = transition(state, replace(step, visible=True), session_length, rng)
        options = enumerate_adaptations(state.design)
        adaptation = options[int(rng.integers(len(options)))]
        after_design = apply_adaptation(state.design, adaptation)
        X[i] = encode(state, after_design, window).vector()
        child = transition(state, replace(adaptation, visible=True), session_length, rng)
        future = rollout(
            child, horizon - 1, rng, params, discount, session_length=session_length
        )
        value = reward(state, after_design, params) + future.scaled(discount)
        Y[i] = value.as_tuple()
    return Dataset(X, Y)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def train(dataset: Dataset, config: TrainConfig = TrainConfig()) -> ValueModel:
    """Fit the network with RMS-scaled gradient descent and early stopping."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    rng = np.random.default_rng(config.seed)
    n = len(dataset)
    order = rng.permutation(n)
    n_val = max(1, int(round(n * config.val_fraction))) if n > 1 else 0
    val_idx, train_idx = order[:n_val], order[n_val:]
    if len(train_idx) == 0:
        train_idx = order
    X_train = dataset.X[train_idx].astype(np.float64)
    Y_train_raw = dataset.Y[train_idx].astype(np.float64)
    X_val = dataset.X[val_idx].astype(np.float64)
    Y_val_raw = dataset.Y[val_idx].astype(np.float64)

    mean = Y_train_raw.mean(axis=0)
    std = np.maximum(Y_train_raw.std(axis=0), 1e-8)
    Y_train = (Y_train_raw - mean) / std
    Y_val = (Y_val_raw - mean) / std if len(val_idx) else Y_train

    arch = config.arch
    params = init_params(arch, rng)
    cache = {name: np.zeros_like(p) for name, p in params.items()}
    eps = 1e-8

    def val_loss():
        Y_hat, _ = _forward(params, X_val if len(val_idx) else X_train, arch)
        target = Y_val if len(val_idx) else Y_train
        return float(np.sum(np.mean((Y_hat - target) ** 2, axis=0)))

    best = {name: p.copy() for name, p in params.items()}
    best_val = val_loss()
    history = {"train_loss": [], "val_loss": [], "best_val": [best_val]}
    stale = 0
    n_train = X_train.shape[0]
    for epoch in range(config.max_epochs):
        perm = rng.permutation(n_train)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, n_train, config.batch_size):
            idx = perm[start : start + config.batch_size]
            masks = _make_masks(arch, len(idx), config.dropout, rng, config.input_dropout)
            loss, grads = loss_and_grads(params, X_train[idx], Y_train[idx], arch, masks)
            if not math.isfinite(loss):
                raise RuntimeError(
                    f"non-finite training loss at epoch {epoch}, batch {n_batches}: {loss}"
                )
            epoch_loss += loss
            n_batches += 1
            for name, g in grads.items():
                c = cache[name]
                c *= config.decay
                c += (1.0 - config.decay) * g * g
                params[name] -= config.learning_rate * g / (np.sqrt(c) + eps)
        history["train_loss"].append(epoch_loss / max(1, n_batches))
        current_val = val_loss()
        history["val_loss"].append(current_val)
        if current_val < best_val:
            best_val = current_val
            best = {name: p.copy() for name, p in params.items()}
            history["best_val"].append(best_val)
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return ValueModel(
        params=best,
        arch=arch,
        target_mean=mean,
        target_std=std,
        hyper={
            "learning_rate": config.learning_rate,
            "decay": config.decay,
            "max_epochs": config.max_epochs,
            "patience": config.patience,
            "batch_size": config.batch_size,
            "val_fraction": config.val_fraction,
            "dropout": config.dropout,
            "seed": config.seed,
        },
        history=history,
    )


# ---------------------------------------------------------------------------
# Model persistence: JSON header + row-major float64 weights
# ---------------------------------------------------------------------------


def save_model(model: ValueModel, path) -> None:
    names = sorted(model.params)
    header = {
        "version": MODEL_VERSION,
        "arch": {
            "head_width": model.arch.head_width,
            "trunk_width": model.arch.trunk_width,
            "tail_width": model.arch.tail_width,
        },
        "shapes": {name: list(model.params[name].shape) for name in names},
        "target_mean": model.target_mean.tolist(),
        "target_std": model.target_std.tolist(),
        "hyper": model.hyper,
        "history": model.history,
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for name in names:
            f.write(np.ascontiguousarray(model.params[name], dtype=np.float64).tobytes())


def load_model(path) -> ValueModel:
    with open(path, "rb") as f:
        header = json.loads(f.readline())
        if header["version"] != MODEL_VERSION:
            raise ValueError(f"unsupported model version {header['version']}")
        params = {}
        for name in sorted(header["shapes"]):
            shape = tuple(header["shapes"][name])
            size = int(np.prod(shape))
            params[name] = np.frombuffer(f.read(8 * size), dtype=np.float64).reshape(shape).copy()
    return ValueModel(
        params=params,
        arch=ArchConfig(**header["arch"]),
        target_mean=np.array(header["target_mean"]),
        target_std=np.array(header["target_std"]),
        hyper=header["hyper"],
        history=header.get("history", {}),
    )
