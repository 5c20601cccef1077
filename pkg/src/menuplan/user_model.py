"""Predictive models of menu search: activation, interest, selection time, reward.

Three search strategies estimate the time to select a target from a menu:

* serial search: top-to-bottom inspection, one read per item, at a cost that
  shrinks with memory activation.  A target found after its expected position
  incurs a fixed surprise penalty, a cautious re-scan of the intervening
  items, and a pointing movement.
* foraging search: group anchors (first item of each group) are read first;
  a group is scanned item-by-item only when its anchor is semantically
  related to the target.  If no related group holds the target, the scan
  exhausts all groups, a surprise penalty applies, and the user re-scans
  cautiously from the top.
* recall search: locations whose activation for the target exceeds a
  threshold are glanced at directly (strongest first).  A hit costs one
  pointing movement; a near miss triggers a bounded local search; if every
  remembered location fails, the user falls back to a cautious serial scan.

Memory activation of an item at a location follows a power law of practice
and recency: each past selection of that item at that location contributes
(now - t)^(-decay) with decay 0.5 by default.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Mapping

from .menu import ClickLog, InteractionState, MenuDesign, UserState


@dataclass(frozen=True)
class ModelParams:
    """Time constants of the search models, in one abstract time unit.

    ``delta`` is the cautious per-item inspection cost, ``t_c`` the surprise
    penalty for not finding a target where expected, ``t_trail`` the constant
    pointing cost when the cursor trails the gaze, ``theta`` the activation
    threshold enabling recall, ``a_p``/``b_p`` the pointing-law coefficients,
    and ``n_local_flat`` the number of items inspected during local search in
    menus without separators (twice a three-item fovea).
    """

    delta: float = 1.0
    t_c: float = 2.5
    t_trail: float = 1.0
    theta: float = 0.5
    a_p: float = 10.3
    b_p: float = 4.8
    n_local_flat: int = 6

    def __post_init__(self):
        for name in ("delta", "t_c", "t_trail"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.theta <= 1:
            raise ValueError("theta must be in (0, 1]")
        if self.n_local_flat < 1:
            raise ValueError("n_local_flat must be >= 1")

    @classmethod
    def from_dict(cls, data: Mapping) -> "ModelParams":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)

    @classmethod
    def from_file(cls, path) -> "ModelParams":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def with_overrides(self, **overrides) -> "ModelParams":
        clean = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **clean) if clean else self


STRATEGIES = ("serial", "forage", "recall")


@dataclass(frozen=True)
class RewardVector:
    """Per-strategy predicted reward (time saved; positive = improvement)."""

    serial: float
    forage: float
    recall: float

    def __add__(self, other: "RewardVector") -> "RewardVector":
        return RewardVector(
            self.serial + other.serial,
            self.forage + other.forage,
            self.recall + other.recall,
        )

    def scaled(self, factor: float) -> "RewardVector":
        return RewardVector(self.serial * factor, self.forage * factor, self.recall * factor)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.serial, self.forage, self.recall)

    def as_dict(self) -> dict[str, float]:
        return {"serial": self.serial, "forage": self.forage, "recall": self.recall}

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.as_tuple())


ZERO_REWARD = RewardVector(0.0, 0.0, 0.0)


def activation(user: UserState, label: str, location: int) -> float:
    """Power-law activation of ``label`` at ``location``; 0 if never selected there."""
    key = (label, location)
    cached = user._activation_cache.get(key)
    if cached is not None:
        return cached
    times = user.log.by_slot.get(key)
    if not times:
        user._activation_cache[key] = 0.0
        return 0.0
    now = user.now
    decay = user.decay
    total = 0.0
    for t in times:
        age = now - t
        if age <= 0:
            raise ValueError(f"selection time {t} is not in the past (now={now})")
        total += age ** -decay
    user._activation_cache[key] = total
    return total


def interest(log: ClickLog, window: int, labels: tuple[str, ...]) -> dict[str, float]:
    """Normalized click frequencies over the last ``window`` clicks.

    Falls back to a uniform distribution over ``labels`` when the window is
    empty.
    """
    recent = log.last_labels(window)
    if not recent:
        if not labels:
            raise ValueError("no labels to distribute interest over")
        p = 1.0 / len(labels)
        return {label: p for label in labels}
    n = len(recent)
    counts: dict[str, int] = {}
    for label in recent:
        counts[label] = counts.get(label, 0) + 1
    return {label: c / n for label, c in counts.items()}


def t_read(b: float, params: ModelParams) -> float:
    """Inspection cost of one item: cautious cost discounted by activation."""
    return params.delta / (1.0 + b)


def t_pointing(location: int, params: ModelParams) -> float:
    """Pointing-law movement time to a 1-based item index."""
    return params.a_p + params.b_p * math.log2(1 + location)


def _read_at(state: InteractionState, item_position: int, params: ModelParams) -> float:
    """Read cost of whatever item occupies ``item_position`` in the current design."""
    label = state.design.items[item_position - 1]
    return t_read(activation(state.user, label, item_position), params)


def t_serial(state: InteractionState, target: str, params: ModelParams) -> float:
    """Top-to-bottom search time for ``target`` in the current design."""
    try:
        e = state.expected_design.item_index[target]
        a = state.design.item_index[target]
    except KeyError:
        raise KeyError(f"unknown target {target!r}") from None
    if a <= e:
        reads = sum(_read_at(state, j, params) for j in range(1, a + 1))
        return reads + params.t_trail
    reads_to_e = sum(_read_at(state, j, params) for j in range(1, e + 1))
    return (
        reads_to_e
        + params.t_trail
        + params.t_c
        + (a - e) * params.delta
        + t_pointing(a, params)
    )


def t_forage(state: InteractionState, target: str, params: ModelParams) -> float:
    """Group-skipping search: read anchors, scan only related groups.

    The scan of a related group runs from its first item (the anchor again)
    up to the target if present, else the whole group.  If the target's own
    group has an unrelated anchor, the scan covers every group before the
    surprise penalty and a cautious serial pass from the top.
    """
    design = state.design
    if target not in design.item_index:
        raise KeyError(f"unknown target {target!r}")
    related = design.association.related
    all_groups = design.groups
    target_group = design.group_of_location[design.item_index[target]]
    findable = related(all_groups[target_group].anchor, target)
    scanned = all_groups[: target_group + 1] if findable else all_groups

    total = 0.0
    for g in scanned:
        total += _read_at(state, g.start_location, params)
        if related(g.anchor, target):
            if target in g.members:
                bound = g.members.index(target) + 1
            else:
                bound = len(g.members)
            for k in range(bound):
                total += _read_at(state, g.start_location + k, params)
    total += params.t_trail
    if not findable:
        a = design.item_index[target]
        total += params.t_c + a * params.delta + t_pointing(a, params)
    return total


def _local_span(design: MenuDesign, location: int, params: ModelParams) -> int:
    """Items inspected by a local search around ``location``."""
    if design.is_flat:
        return params.n_local_flat
    group = design.groups[design.group_of_location[location]]
    return len(group.members)


def _in_neighborhood(
    design: MenuDesign, location: int, target_location: int, params: ModelParams
) -> bool:
    """Whether local search around ``location`` reaches ``target_location``."""
    if design.is_flat:
        return abs(target_location - location) <= params.n_local_flat // 2
    return (
        design.group_of_location[location]
        == design.group_of_location[target_location]
    )


def t_recall(state: InteractionState, target: str, params: ModelParams) -> float:
    """Memory-driven search: glance at remembered locations, strongest first.

    With no location above threshold the user searches serially.  A glance at
    the target's actual location ends with a pointing movement; a miss costs
    a local search that succeeds only if the target is nearby; a full bust
    ends in a cautious serial pass from the top.
    """
    design = state.design
    if target not in design.item_index:
        raise KeyError(f"unknown target {target!r}")
    n = len(design.items)
    user = state.user
    candidates = []
    for loc in range(1, n + 1):
        b = activation(user, target, loc)
        if b >= params.theta:
            candidates.append((b, loc))
    if not candidates:
        return t_serial(state, target, params)
    candidates.sort(key=lambda pair: (-pair[0], pair[1]))

    a = design.item_index[target]
    total = 0.0
    for b, loc in candidates:
        total += t_read(b, params)
        if loc == a:
            return total + t_pointing(a, params)
        total += params.t_c + params.delta * _local_span(design, loc, params) + params.t_trail
        if _in_neighborhood(design, loc, a, params):
            return total
    return total + a * params.delta + t_pointing(a, params)


_STRATEGY_FNS = {"serial": t_serial, "forage": t_forage, "recall": t_recall}


def selection_time(
    state: InteractionState, target: str, strategy: str, params: ModelParams
) -> float:
    try:
        fn = _STRATEGY_FNS[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}") from None
    return fn(state, target, params)


def reward(
    before: InteractionState, after_design: MenuDesign, params: ModelParams
) -> RewardVector:
    """Interest-weighted selection-time saving of ``after_design`` per strategy.

    The hypothetical after-state keeps the user unchanged and still expecting
    the design they last saw, so estimating a reward never mutates the user.
    """
    after = InteractionState(after_design, before.user, before.expected_design)
    interest_map = before.user.interest
    serial = forage = recall = 0.0
    for label, w in interest_map.items():
        if w == 0.0:
            continue
        serial += w * (t_serial(before, label, params) - t_serial(after, label, params))
        forage += w * (t_forage(before, label, params) - t_forage(after, label, params))
        recall += w * (t_recall(before, label, params) - t_recall(after, label, params))
    return RewardVector(serial, forage, recall)


def avg_selection_time(state: InteractionState, params: ModelParams) -> float:
    """Interest-weighted selection time averaged over the three strategies."""
    total = 0.0
    for label, w in state.user.interest.items():
        if w == 0.0:
            continue
        total += w * (
            t_serial(state, label, params)
            + t_forage(state, label, params)
            + t_recall(state, label, params)
        )
    return total / len(STRATEGIES)
