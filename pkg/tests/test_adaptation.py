import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from menuplan.adaptation import (
    AddSeparator,
    InfeasibleAdaptationError,
    MoveGroup,
    MoveItem,
    NoChange,
    RemoveSeparator,
    SwapGroups,
    SwapItems,
    adaptation_from_json,
    adaptation_to_json,
    apply_adaptation,
    enumerate_adaptations,
    simulate_session,
    transition,
)
from menuplan.menu import SEPARATOR, validate_design

from conftest import design_strategy, make_design, make_state, rng


def _grouped_15_item_design():
    labels = [f"w{i}" for i in range(15)]
    sizes = [2, 2, 2, 2, 2, 2, 1, 1, 1]  # 15 items, 8 separators
    entries, it = [], iter(labels)
    for k, size in enumerate(sizes):
        if k:
            entries.append(SEPARATOR)
        entries.extend(itertools.islice(it, size))
    return make_design(entries, categories=[labels[0:5], labels[5:10], labels[10:15]])


class TestEnumerate:
    def test_large_menu_exceeds_five_hundred(self):
        design = _grouped_15_item_design()
        options = enumerate_adaptations(design)
        assert len(options) > 500

    def test_single_item_menu_only_no_change(self):
        design = make_design(["a"], max_separators=0)
        assert enumerate_adaptations(design) == [NoChange()]

    def test_two_item_flat_menu(self):
        design = make_design(["a", "b"])
        options = enumerate_adaptations(design)
        assert NoChange() in options
        assert SwapItems("a", "b") in options
        assert AddSeparator(1) in options
        # item moves produce the same swapped design and are deduplicated
        results = {apply_adaptation(design, o).entries for o in options}
        assert ("b", "a") in results
        assert len(results) == len(options)

    def test_every_option_valid_and_distinct(self):
        design = make_design(["a", "b", SEPARATOR, "c", "d"], max_separators=2)
        options = enumerate_adaptations(design)
        seen = set()
        for option in options:
            result = apply_adaptation(design, option)
            assert validate_design(result) is None
            assert result.entries not in seen
            seen.add(result.entries)
        non_identity = [o for o in options if not isinstance(o, NoChange)]
        assert all(
            apply_adaptation(design, o).entries != design.entries for o in non_identity
        )


class TestApply:
    def test_no_change_identity(self):
        design = make_design(["a", "b"])
        assert apply_adaptation(design, NoChange()) is design

    def test_swap_involution(self):
        design = make_design(["a", "b", SEPARATOR, "c"])
        swap = SwapItems("a", "c")
        assert apply_adaptation(apply_adaptation(design, swap), swap).entries == design.entries

    def test_move_group_example(self):
        design = make_design(["a", "b", SEPARATOR, "c"])
        moved = apply_adaptation(design, MoveGroup(2, 1))
        assert moved.entries == ("c", SEPARATOR, "a", "b")

    def test_move_item_dissolves_orphan_group(self):
        design = make_design(["a", SEPARATOR, "b", SEPARATOR, "c"])
        moved = apply_adaptation(design, MoveItem("b", 0))
        assert moved.entries == ("b", "a", SEPARATOR, "c")

    def test_remove_separator_on_flat_menu_fails(self):
        with pytest.raises(InfeasibleAdaptationError):
            apply_adaptation(make_design(["a", "b"]), RemoveSeparator(1))

    def test_add_separator_budget(self):
        design = make_design(["a", "b"], max_separators=0)
        with pytest.raises(InfeasibleAdaptationError):
            apply_adaptation(design, AddSeparator(1))

    def test_swap_groups(self):
        design = make_design(["a", SEPARATOR, "b", "c"])
        swapped = apply_adaptation(design, SwapGroups(1, 2))
        assert swapped.entries == ("b", "c", SEPARATOR, "a")


@settings(max_examples=150, deadline=None)
@given(design_strategy(min_items=1, max_items=6))
def test_enumerate_apply_closure(design):
    for option in enumerate_adaptations(design):
        result = apply_adaptation(design, option)
        assert validate_design(result) is None
        assert sorted(result.items) == sorted(design.items)
        assert result.association is design.association
        # the new design supports enumeration again (no dead states)
        assert enumerate_adaptations(result)


@settings(max_examples=150, deadline=None)
@given(design_strategy(min_items=2, max_items=7))
def test_enumeration_duplicate_free(design):
    options = enumerate_adaptations(design)
    results = [apply_adaptation(design, o).entries for o in options]
    assert len(set(results)) == len(results)
    assert sum(isinstance(o, NoChange) for o in options) == 1


def test_adaptation_json_round_trip():
    cases = [
        NoChange(visible=False),
        MoveItem("a", 3),
        SwapItems("a", "b", visible=False),
        AddSeparator(2),
        RemoveSeparator(1),
        MoveGroup(2, 1),
        SwapGroups(1, 3),
    ]
    for adaptation in cases:
        data = adaptation_to_json(adaptation)
        assert adaptation_from_json(data) == adaptation


class TestSimulateSession:
    def test_zero_clicks_only_updates_expectation(self):
        design = make_design(["a", "b"])
        state = make_state(design, expected=design.with_entries(("b", "a")))
        out = simulate_session(state, 0, rng(0))
        assert out.user is state.user
        assert out.expected_design is design

    def test_deterministic_distribution(self):
        design = make_design(["a", "b"])
        state = make_state(design, interest_map={"a": 1.0, "b": 0.0})
        out = simulate_session(state, 5, rng(0))
        assert [c.label for c in out.user.log.clicks] == ["a"] * 5
        assert [c.location for c in out.user.log.clicks] == [1] * 5
        assert out.user.now == state.user.now + 5
        assert out.user.interest == {"a": 1.0}

    def test_seeded_repeatability(self):
        design = make_design(["a", "b"])
        state = make_state(design, interest_map={"a": 0.5, "b": 0.5})
        a = simulate_session(state, 100, rng(42))
        b = simulate_session(state, 100, rng(42))
        assert a.user.log.clicks == b.user.log.clicks
        assert a.user.interest == b.user.interest

    def test_empty_interest_support_fails(self):
        design = make_design(["a", "b"])
        degenerate = make_state(design, interest_map={})
        with pytest.raises(ValueError, match="interest"):
            simulate_session(degenerate, 1, rng(0))


class TestTransition:
    def test_invisible_keeps_user_identical(self):
        design = make_design(["a", "b"])
        state = make_state(design, clicks=[("a", 1, 1)], now=2)
        out = transition(state, SwapItems("a", "b", visible=False))
        assert out.design.entries == ("b", "a")
        assert out.user is state.user
        assert out.expected_design is state.expected_design

    def test_visible_no_change_logs_session(self):
        design = make_design(["a", "b"])
        state = make_state(design, interest_map={"a": 1.0, "b": 0.0})
        out = transition(state, NoChange(visible=True), session_length=3, rng=rng(1))
        assert out.design.entries == design.entries
        assert len(out.user.log) == 3

    def test_invisible_chain_then_visible_composite(self):
        design = make_design(["a", "b", "c"])
        state = make_state(design, interest_map={"a": 1.0, "b": 0.0, "c": 0.0})
        s1 = transition(state, MoveItem("c", 0, visible=False))
        s2 = transition(s1, SwapItems("a", "b", visible=False))
        assert s2.expected_design.entries == design.entries  # user saw nothing yet
        s3 = transition(s2, NoChange(visible=True), session_length=2, rng=rng(0))
        assert s3.expected_design.entries == s2.design.entries
        # the session logged clicks at the composite layout's locations
        assert all(c.location == s2.design.item_index[c.label] for c in s3.user.log.clicks[-2:])

    def test_visible_requires_rng(self):
        state = make_state(make_design(["a", "b"]))
        with pytest.raises(ValueError):
            transition(state, NoChange(visible=True))


@settings(max_examples=100, deadline=None)
@given(design_strategy(min_items=2, max_items=6), st.integers(0, 2**31 - 1))
def test_invisible_transitions_are_user_invariant(design, seed):
    from dataclasses import replace

    state = make_state(design)
    options = enumerate_adaptations(design)
    generator = np.random.default_rng(seed)
    option = options[int(generator.integers(len(options)))]
    out = transition(state, replace(option, visible=False))
    assert out.user == state.user
