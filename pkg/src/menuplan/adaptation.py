"""Menu reorganization operators and state transitions.

Six operators reorganize a menu: move an item, swap two items, add or remove
a separator, move a whole group, swap two groups, or change nothing.  Every
operator carries a visibility flag: a visible change is shown to the user
(and a simulated interaction session follows), an invisible change only
rewrites the design so several changes can be chained into one displayed
composite.

``enumerate_adaptations`` lists every feasible operator for a design, at most
one per distinct resulting design.  Moving an item that was alone in its
group dissolves that group (the orphaned separator is removed), so every
item is always movable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from .menu import (
    SEPARATOR,
    Click,
    ClickLog,
    InteractionState,
    MenuDesign,
    UserState,
)
from .user_model import interest

DEFAULT_SESSION_LENGTH = 20


class InfeasibleAdaptationError(ValueError):
    pass


@dataclass(frozen=True)
class NoChange:
    visible: bool = field(default=True, kw_only=True)


@dataclass(frozen=True)
class MoveItem:
    """Remove ``label`` and reinsert it at entry slot ``to_position``.

    ``to_position`` indexes the gaps of the entry list after removal (0 =
    front).  Removal that orphans a separator dissolves it first, so the
    slot refers to the repaired list.
    """

    label: str
    to_position: int
    visible: bool = field(default=True, kw_only=True)


@dataclass(frozen=True)
class SwapItems:
    a: str
    b: str
    visible: bool = field(default=True, kw_only=True)


@dataclass(frozen=True)
class AddSeparator:
    after_position: int  # 1-based item index; separator goes right after it
    visible: bool = field(default=True, kw_only=True)


@dataclass(frozen=True)
class RemoveSeparator:
    index: int  # 1-based among separators, top to bottom
    visible: bool = field(default=True, kw_only=True)


@dataclass(frozen=True)
class MoveGroup:
    group_index: int  # 1-based among groups
    to_position: int  # 1-based target rank among groups
    visible: bool = field(default=True, kw_only=True)


@dataclass(frozen=True)
class SwapGroups:
    i: int
    j: int
    visible: bool = field(default=True, kw_only=True)


Adaptation = Union[
    NoChange, MoveItem, SwapItems, AddSeparator, RemoveSeparator, MoveGroup, SwapGroups
]

_KIND_NAMES = {
    NoChange: "no_change",
    MoveItem: "move_item",
    SwapItems: "swap_items",
    AddSeparator: "add_separator",
    RemoveSeparator: "remove_separator",
    MoveGroup: "move_group",
    SwapGroups: "swap_groups",
}


def adaptation_to_json(adaptation: Adaptation) -> dict:
    args = {
        k: v
        for k, v in adaptation.__dict__.items()
        if k != "visible"
    }
    return {
        "kind": _KIND_NAMES[type(adaptation)],
        "args": args,
        "visible": adaptation.visible,
    }


def adaptation_from_json(data: dict) -> Adaptation:
    by_name = {name: cls for cls, name in _KIND_NAMES.items()}
    cls = by_name[data["kind"]]
    return cls(**data.get("args", {}), visible=data.get("visible", True))


# ---------------------------------------------------------------------------
# Applying adaptations to entry lists
# ---------------------------------------------------------------------------


def _repair(entries: list[str]) -> list[str]:
    """Collapse doubled separators and strip leading/trailing ones."""
    out: list[str] = []
    for e in entries:
        if e == SEPARATOR and (not out or out[-1] == SEPARATOR):
            continue
        out.append(e)
    while out and out[-1] == SEPARATOR:
        out.pop()
    return out


def _removed(entries: tuple[str, ...], label: str) -> list[str]:
    return _repair([e for e in entries if e != label])


def _rejoin(groups: Iterable[tuple[str, ...]]) -> tuple[str, ...]:
    out: list[str] = []
    for g in groups:
        if out:
            out.append(SEPARATOR)
        out.extend(g)
    return tuple(out)


def _apply_entries(design: MenuDesign, adaptation: Adaptation) -> tuple[str, ...]:
    """New entry tuple for ``adaptation``; raises when infeasible."""
    entries = design.entries
    match adaptation:
        case NoChange():
            return entries
        case MoveItem(label=label, to_position=slot):
            if label not in design.item_index:
                raise InfeasibleAdaptationError(f"unknown label {label!r}")
            rest = _removed(entries, label)
            if not 0 <= slot <= len(rest):
                raise InfeasibleAdaptationError(f"move slot {slot} out of range")
            return tuple(rest[:slot] + [label] + rest[slot:])
        case SwapItems(a=a, b=b):
            idx = design.item_index
            if a not in idx or b not in idx or a == b:
                raise InfeasibleAdaptationError(f"cannot swap {a!r} and {b!r}")
            swapped = {a: b, b: a}
            return tuple(swapped.get(e, e) for e in entries)
        case AddSeparator(after_position=pos):
            n = len(design.items)
            if not 1 <= pos <= n - 1:
                raise InfeasibleAdaptationError(f"separator position {pos} out of range")
            if design.n_separators + 1 > design.max_separators:
                raise InfeasibleAdaptationError("separator budget exhausted")
            out = []
            seen_items = 0
            for e in entries:
                out.append(e)
                if e != SEPARATOR:
                    seen_items += 1
                    if seen_items == pos:
                        out.append(SEPARATOR)
            result = tuple(out)
            for prev, cur in zip(result, result[1:]):
                if prev == SEPARATOR and cur == SEPARATOR:
                    raise InfeasibleAdaptationError("separator already present")
            return result
        case RemoveSeparator(index=index):
            if not 1 <= index <= design.n_separators:
                raise InfeasibleAdaptationError(f"no separator #{index}")
            out = []
            seen = 0
            for e in entries:
                if e == SEPARATOR:
                    seen += 1
                    if seen == index:
                        continue
                out.append(e)
            return tuple(out)
        case MoveGroup(group_index=gi, to_position=to):
            gs = [g.members for g in design.groups]
            if not 1 <= gi <= len(gs):
                raise InfeasibleAdaptationError(f"no group #{gi}")
            if not 1 <= to <= len(gs):
                raise InfeasibleAdaptationError(f"group position {to} out of range")
            moved = gs.pop(gi - 1)
            gs.insert(to - 1, moved)
            return _rejoin(gs)
        case SwapGroups(i=i, j=j):
            gs = [g.members for g in design.groups]
            if not (1 <= i <= len(gs) and 1 <= j <= len(gs)) or i == j:
                raise InfeasibleAdaptationError(f"cannot swap groups {i} and {j}")
            gs[i - 1], gs[j - 1] = gs[j - 1], gs[i - 1]
            return _rejoin(gs)
    raise InfeasibleAdaptationError(f"unknown adaptation {adaptation!r}")


def apply_adaptation(design: MenuDesign, adaptation: Adaptation) -> MenuDesign:
    """Apply one adaptation; labels and associations are preserved."""
    new_entries = _apply_entries(design, adaptation)
    if new_entries == design.entries:
        return design
    return design.with_entries(new_entries)


def enumerate_adaptations(design: MenuDesign) -> list[Adaptation]:
    """Every feasible adaptation, one per distinct resulting design.

    NoChange comes first; when several operators produce the same design the
    more specific one wins (swaps over moves, group swaps over group moves).
    Visibility is left at its default and chosen later by the planner.
    """
    out: list[Adaptation] = [NoChange()]
    seen = {design.entries}
    items = design.items
    n_groups = len(design.groups)

    def consider(candidate: Adaptation):
        entries = _apply_entries(design, candidate)
        if entries in seen:
            return
        seen.add(entries)
        out.append(candidate)

    for ai, a in enumerate(items):
        for b in items[ai + 1 :]:
            consider(SwapItems(a, b))
    for label in items:
        rest = _removed(design.entries, label)
        for slot in range(len(rest) + 1):
            consider(MoveItem(label, slot))
    for i in range(1, n_groups + 1):
        for j in range(i + 1, n_groups + 1):
            consider(SwapGroups(i, j))
    for gi in range(1, n_groups + 1):
        for to in range(1, n_groups + 1):
            if to != gi:
                consider(MoveGroup(gi, to))
    if design.n_separators < design.max_separators:
        for pos in range(1, len(items)):
            try:
                consider(AddSeparator(pos))
            except InfeasibleAdaptationError:
                continue
    for index in range(1, design.n_separators + 1):
        consider(RemoveSeparator(index))
    return out


# ---------------------------------------------------------------------------
# Simulated interaction sessions and the transition function
# ---------------------------------------------------------------------------


def simulate_session(
    state: InteractionState, n_clicks: int, rng: np.random.Generator
) -> InteractionState:
    """Simulate a session of ``n_clicks`` selections sampled from interest.

    Appends one log entry per click at the item's current location, advancing
    the trial clock by one per click, then recomputes interest from this
    session and marks the current design as seen.  Deterministic for a fixed
    generator state.
    """
    if n_clicks < 0:
        raise ValueError("n_clicks must be >= 0")
    design = state.design
    user = state.user
    if n_clicks == 0:
        return InteractionState(design, user, design)
    labels = sorted(label for label, p in user.interest.items() if p > 0)
    if not labels:
        raise ValueError("cannot simulate a session with empty interest support")
    probs = np.array([user.interest[label] for label in labels], dtype=float)
    probs /= probs.sum()
    draws = rng.choice(len(labels), size=n_clicks, p=probs)
    item_index = design.item_index
    now = user.now
    clicks = [
        Click(labels[k], item_index[labels[k]], now + offset)
        for offset, k in enumerate(draws)
    ]
    counts: dict[str, int] = {}
    for c in clicks:
        counts[c.label] = counts.get(c.label, 0) + 1
    new_interest = {label: cnt / n_clicks for label, cnt in counts.items()}
    new_user = UserState(
        log=user.log.extended(clicks),
        now=now + n_clicks,
        interest=new_interest,
        decay=user.decay,
    )
    return InteractionState(design, new_user, design)


def transition(
    state: InteractionState,
    adaptation: Adaptation,
    session_length: int = DEFAULT_SESSION_LENGTH,
    rng: np.random.Generator | None = None,
) -> InteractionState:
    """Apply an adaptation; a visible one is followed by a simulated session."""
    new_design = apply_adaptation(state.design, adaptation)
    moved = InteractionState(new_design, state.user, state.expected_design)
    if not adaptation.visible:
        return moved
    if rng is None:
        raise ValueError("visible transitions need a random generator")
    return simulate_session(moved, session_length, rng)


def recompute_interest(state: InteractionState, window: int) -> InteractionState:
    """Refresh interest from the last ``window`` logged clicks."""
    user = state.user
    new_interest = interest(user.log, window, state.design.items)
    return InteractionState(
        state.design,
        UserState(user.log, user.now, new_interest, user.decay),
        state.expected_design,
    )
