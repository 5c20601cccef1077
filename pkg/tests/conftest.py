from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from menuplan.menu import (
    SEPARATOR,
    AssociationMatrix,
    Click,
    ClickLog,
    InteractionState,
    MenuDesign,
    UserState,
    validate_design,
)
from menuplan.user_model import ModelParams, interest

LABEL_POOL = tuple(f"item{i}" for i in range(12))


@pytest.fixture
def params() -> ModelParams:
    return ModelParams()


def make_design(entries, categories=None, max_separators=8) -> MenuDesign:
    labels = [e for e in entries if e != SEPARATOR]
    assoc = AssociationMatrix.from_categories(labels, categories or [])
    design = MenuDesign(tuple(entries), assoc, max_separators)
    violation = validate_design(design)
    assert violation is None, violation
    return design


def make_state(
    design: MenuDesign,
    clicks=(),
    now=None,
    interest_map=None,
    expected: MenuDesign | None = None,
    decay: float = 0.5,
) -> InteractionState:
    log = ClickLog(tuple(Click(*c) for c in clicks))
    if now is None:
        now = (log.clicks[-1].time + 1) if log.clicks else 1
    if interest_map is None:
        interest_map = interest(log, 20, design.items)
    user = UserState(log, now, interest_map, decay)
    return InteractionState(design, user, expected if expected is not None else design)


# ---------------------------------------------------------------------------
# Hypothesis strategies
# ---------------------------------------------------------------------------


@st.composite
def design_strategy(draw, min_items=1, max_items=8, max_separators=8, allow_seps=True):
    n = draw(st.integers(min_items, max_items))
    labels = list(draw(st.permutations(LABEL_POOL[:n])))
    if allow_seps and n > 1:
        max_gaps = min(n - 1, max_separators)
        gaps = draw(
            st.lists(st.integers(1, n - 1), max_size=max_gaps, unique=True)
        )
    else:
        gaps = []
    entries = []
    for i, label in enumerate(labels, start=1):
        entries.append(label)
        if i in gaps:
            entries.append(SEPARATOR)
    if entries and entries[-1] == SEPARATOR:
        entries.pop()
    n_cats = draw(st.integers(0, max(0, n // 2)))
    shuffled = list(draw(st.permutations(labels)))
    categories = []
    pos = 0
    for _ in range(n_cats):
        size = draw(st.integers(2, 3))
        if pos + size > n:
            break
        categories.append(tuple(shuffled[pos : pos + size]))
        pos += size
    return make_design(entries, categories, max_separators)


@st.composite
def state_strategy(draw, min_items=1, max_items=6, max_clicks=30):
    design = draw(design_strategy(min_items=min_items, max_items=max_items))
    items = design.items
    n_clicks = draw(st.integers(0, max_clicks))
    idx = design.item_index
    clicks = []
    t = 0
    for _ in range(n_clicks):
        t += draw(st.integers(1, 3))
        label = draw(st.sampled_from(items))
        clicks.append(Click(label, idx[label], t))
    # the user may expect a different (permuted) layout they saw earlier
    if draw(st.booleans()):
        expected = design
    else:
        perm = list(draw(st.permutations(items)))
        expected = design.with_entries(tuple(perm))
    return make_state(design, clicks, expected=expected)


def rng(seed=0) -> np.random.Generator:
    return np.random.default_rng(seed)
