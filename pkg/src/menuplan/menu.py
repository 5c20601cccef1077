"""Linear-menu data model: entries, semantic associations, click history.

A menu design is an ordered sequence of item labels and group separators
together with a symmetric boolean relatedness relation over labels (built
from designer-provided category lists).  Interaction state couples a design
with a user model: a per-trial click log, the distribution of interest over
labels from the previous session, and the design the user last saw.

All types are immutable values; any "mutation" produces a new value, so
instances can be shared freely between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple

SEPARATOR = "---"

DEFAULT_MAX_SEPARATORS = 8


@dataclass(frozen=True)
class AssociationMatrix:
    """Symmetric boolean relatedness over labels; every label relates to itself.

    ``pairs`` stores related off-diagonal pairs in both orders so lookups are
    a single set-membership test.
    """

    labels: frozenset[str]
    pairs: frozenset[tuple[str, str]]
    categories: tuple[tuple[str, ...], ...] | None = field(
        default=None, compare=False, repr=False
    )

    @classmethod
    def from_categories(
        cls, labels: Iterable[str], categories: Iterable[Iterable[str]] = ()
    ) -> "AssociationMatrix":
        label_set = frozenset(labels)
        cats = tuple(tuple(c) for c in categories)
        pairs = set()
        for cat in cats:
            for a in cat:
                if a not in label_set:
                    raise ValueError(f"category label {a!r} not in menu labels")
                for b in cat:
                    if a != b:
                        pairs.add((a, b))
        return cls(labels=label_set, pairs=frozenset(pairs), categories=cats)

    def related(self, a: str, b: str) -> bool:
        return a == b or (a, b) in self.pairs

    def to_categories(self) -> list[list[str]]:
        """Category lists for serialization; falls back to related pairs."""
        if self.categories is not None:
            return [list(c) for c in self.categories]
        seen = set()
        out = []
        for a, b in sorted(self.pairs):
            if (b, a) in seen:
                continue
            seen.add((a, b))
            out.append([a, b])
        return out


class Group(NamedTuple):
    """A separator-delimited run of items; the anchor is its first item."""

    anchor: str
    members: tuple[str, ...]
    start_location: int  # 1-based item index of the anchor


class Location(NamedTuple):
    item_index: int  # 1-based, counting items only; drives all model equations
    display_row: int  # 1-based, counting separators too


@dataclass(frozen=True)
class MenuDesign:
    """An ordered sequence of labels and separators plus the relatedness relation."""

    entries: tuple[str, ...]
    association: AssociationMatrix
    max_separators: int = DEFAULT_MAX_SEPARATORS

    @cached_property
    def items(self) -> tuple[str, ...]:
        return tuple(e for e in self.entries if e != SEPARATOR)

    @cached_property
    def item_index(self) -> dict[str, int]:
        return {label: i + 1 for i, label in enumerate(self.items)}

    @cached_property
    def display_row(self) -> dict[str, int]:
        return {e: i + 1 for i, e in enumerate(self.entries) if e != SEPARATOR}

    @cached_property
    def n_separators(self) -> int:
        return sum(1 for e in self.entries if e == SEPARATOR)

    @property
    def is_flat(self) -> bool:
        return self.n_separators == 0

    @cached_property
    def groups(self) -> tuple[Group, ...]:
        groups = []
        current: list[str] = []
        start = 1
        idx = 0
        for e in self.entries:
            if e == SEPARATOR:
                if current:
                    groups.append(Group(current[0], tuple(current), start))
                current = []
            else:
                idx += 1
                if not current:
                    start = idx
                current.append(e)
        if current:
            groups.append(Group(current[0], tuple(current), start))
        return tuple(groups)

    @cached_property
    def group_of_location(self) -> dict[int, int]:
        """Map from 1-based item index to 0-based group index."""
        out = {}
        for gi, g in enumerate(self.groups):
            for offset in range(len(g.members)):
                out[g.start_location + offset] = gi
        return out

    def with_entries(self, entries: tuple[str, ...]) -> "MenuDesign":
        return MenuDesign(entries, self.association, self.max_separators)


def validate_design(design: MenuDesign) -> str | None:
    """Return None if the design is well formed, else the first violation."""
    entries = design.entries
    if not entries:
        return "empty menu"
    if entries[0] == SEPARATOR:
        return "leading separator"
    if entries[-1] == SEPARATOR:
        return "trailing separator"
    for prev, cur in zip(entries, entries[1:]):
        if prev == SEPARATOR and cur == SEPARATOR:
            return "consecutive separators"
    labels = [e for e in entries if e != SEPARATOR]
    if len(set(labels)) != len(labels):
        return "duplicate item labels"
    n_sep = len(entries) - len(labels)
    if n_sep > design.max_separators:
        return f"separator budget exceeded ({n_sep} > {design.max_separators})"
    missing = set(labels) - design.association.labels
    if missing:
        return f"labels missing from association matrix: {sorted(missing)}"
    return None


def groups(design: MenuDesign) -> tuple[Group, ...]:
    """Ordered separator-delimited groups; a flat menu is a single group."""
    return design.groups


def location_of(design: MenuDesign, label: str) -> Location:
    """Item index (separators not counted) and display row (counted) of a label."""
    try:
        return Location(design.item_index[label], design.display_row[label])
    except KeyError:
        raise KeyError(f"unknown label {label!r}") from None


# ---------------------------------------------------------------------------
# Canonical JSON design format: {"items": ["label" | "---"], "categories": [...]}
# ---------------------------------------------------------------------------


def parse_design(
    data: Mapping | str, max_separators: int = DEFAULT_MAX_SEPARATORS
) -> MenuDesign:
    if isinstance(data, str):
        data = json.loads(data)
    entries = tuple(str(e) for e in data["items"])
    labels = [e for e in entries if e != SEPARATOR]
    association = AssociationMatrix.from_categories(labels, data.get("categories", []))
    design = MenuDesign(entries, association, max_separators)
    violation = validate_design(design)
    if violation is not None:
        raise ValueError(f"invalid menu design: {violation}")
    return design


def emit_design(design: MenuDesign) -> dict:
    return {
        "items": list(design.entries),
        "categories": design.association.to_categories(),
    }


# ---------------------------------------------------------------------------
# Click history and user state
# ---------------------------------------------------------------------------


class Click(NamedTuple):
    label: str
    location: int  # 1-based item index in the design shown at that trial
    time: int  # trial counter


@dataclass(frozen=True)
class ClickLog:
    clicks: tuple[Click, ...] = ()

    def __post_init__(self):
        last = 0
        for c in self.clicks:
            if c.time <= last:
                raise ValueError("click trial times must be strictly increasing")
            last = c.time

    @cached_property
    def by_slot(self) -> dict[tuple[str, int], tuple[int, ...]]:
        """Selection timestamps grouped by (label, location)."""
        out: dict[tuple[str, int], list[int]] = {}
        for c in self.clicks:
            out.setdefault((c.label, c.location), []).append(c.time)
        return {k: tuple(v) for k, v in out.items()}

    def extended(self, new_clicks: Iterable[Click]) -> "ClickLog":
        return ClickLog(self.clicks + tuple(new_clicks))

    def last_labels(self, window: int) -> tuple[str, ...]:
        if window <= 0:
            return ()
        return tuple(c.label for c in self.clicks[-window:])

    def __len__(self) -> int:
        return len(self.clicks)


@dataclass(frozen=True)
class UserState:
    """Click history, current trial time, previous-session interest, decay rate.

    ``now`` is the next trial index: strictly greater than every logged time.
    Activation values are memoized per instance; the cache is write-once per
    key so concurrent readers at worst recompute the same value.
    """

    log: ClickLog
    now: int
    interest: Mapping[str, float]
    decay: float = 0.5
    _activation_cache: dict = field(
        default_factory=dict, compare=False, repr=False, hash=False
    )

    def __post_init__(self):
        if self.decay <= 0:
            raise ValueError("decay must be positive")
        if self.interest:
            total = sum(self.interest.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"interest must sum to 1, got {total}")
            if any(p < 0 for p in self.interest.values()):
                raise ValueError("interest probabilities must be non-negative")
        if self.log.clicks and self.log.clicks[-1].time > self.now:
            raise ValueError("now must be >= every logged trial time")


@dataclass(frozen=True)
class InteractionState:
    """Current design, user, and the design the user last saw."""

    design: MenuDesign
    user: UserState
    expected_design: MenuDesign

    def __post_init__(self):
        if set(self.design.items) != set(self.expected_design.items):
            raise ValueError("design and expected_design must share the same labels")

    @classmethod
    def fresh(cls, design: MenuDesign, user: UserState) -> "InteractionState":
        return cls(design, user, design)
