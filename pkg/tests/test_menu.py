import json

import pytest
from hypothesis import given, settings

from menuplan.menu import (
    SEPARATOR,
    AssociationMatrix,
    Click,
    ClickLog,
    Group,
    InteractionState,
    MenuDesign,
    UserState,
    emit_design,
    groups,
    location_of,
    parse_design,
    validate_design,
)

from conftest import design_strategy, make_design, make_state


class TestValidateDesign:
    def test_minimal_menu_ok(self):
        assert validate_design(make_design(["a", "b"])) is None

    def test_leading_separator(self):
        design = MenuDesign(
            (SEPARATOR, "a"), AssociationMatrix.from_categories(["a"])
        )
        assert validate_design(design) == "leading separator"

    def test_trailing_separator(self):
        design = MenuDesign(
            ("a", SEPARATOR), AssociationMatrix.from_categories(["a"])
        )
        assert validate_design(design) == "trailing separator"

    def test_consecutive_separators(self):
        design = MenuDesign(
            ("a", SEPARATOR, SEPARATOR, "b"),
            AssociationMatrix.from_categories(["a", "b"]),
        )
        assert validate_design(design) == "consecutive separators"

    def test_separator_budget(self):
        labels = [f"x{i}" for i in range(10)]
        entries = []
        for i, label in enumerate(labels):
            if i:
                entries.append(SEPARATOR)
            entries.append(label)
        design = MenuDesign(
            tuple(entries), AssociationMatrix.from_categories(labels), max_separators=8
        )
        assert "separator budget" in validate_design(design)

    def test_duplicate_labels(self):
        design = MenuDesign(
            ("a", "a"), AssociationMatrix.from_categories(["a"])
        )
        assert validate_design(design) == "duplicate item labels"


class TestGroups:
    def test_two_groups(self):
        design = make_design(["a", "b", SEPARATOR, "c"])
        assert groups(design) == (
            Group("a", ("a", "b"), 1),
            Group("c", ("c",), 3),
        )

    def test_singleton(self):
        design = make_design(["a"])
        assert groups(design) == (Group("a", ("a",), 1),)

    def test_all_separated(self):
        design = make_design(["a", SEPARATOR, "b", SEPARATOR, "c"])
        gs = groups(design)
        assert len(gs) == 3
        assert all(len(g.members) == 1 for g in gs)


class TestLocationOf:
    def test_counts_items_only(self):
        design = make_design(["a", "b", SEPARATOR, "c"])
        loc = location_of(design, "c")
        assert loc.item_index == 3
        assert loc.display_row == 4

    def test_first_item(self):
        assert location_of(make_design(["a"]), "a") == (1, 1)

    def test_unknown_label(self):
        with pytest.raises(KeyError):
            location_of(make_design(["a"]), "z")


@settings(max_examples=200)
@given(design_strategy(min_items=1, max_items=8))
def test_groups_partition_items(design):
    flattened = tuple(label for g in groups(design) for label in g.members)
    assert flattened == design.items


@settings(max_examples=200)
@given(design_strategy(min_items=1, max_items=8))
def test_location_bijection(design):
    indices = [location_of(design, label).item_index for label in design.items]
    assert sorted(indices) == list(range(1, len(design.items) + 1))


@settings(max_examples=200)
@given(design_strategy(min_items=1, max_items=8))
def test_serialization_round_trip(design):
    emitted = emit_design(design)
    parsed = parse_design(json.loads(json.dumps(emitted)))
    assert parsed == design


def test_parse_rejects_invalid():
    with pytest.raises(ValueError, match="leading separator"):
        parse_design({"items": [SEPARATOR, "a"]})


def test_association_requires_known_labels():
    with pytest.raises(ValueError):
        AssociationMatrix.from_categories(["a"], [["a", "zz"]])


def test_association_symmetric_with_diagonal():
    assoc = AssociationMatrix.from_categories(["a", "b", "c"], [["a", "b"]])
    assert assoc.related("a", "a") and assoc.related("c", "c")
    assert assoc.related("a", "b") and assoc.related("b", "a")
    assert not assoc.related("a", "c")


class TestClickLog:
    def test_strictly_increasing_enforced(self):
        with pytest.raises(ValueError):
            ClickLog((Click("a", 1, 2), Click("a", 1, 2)))

    def test_by_slot_groups_timestamps(self):
        log = ClickLog((Click("a", 1, 1), Click("a", 2, 3), Click("a", 1, 5)))
        assert log.by_slot == {("a", 1): (1, 5), ("a", 2): (3,)}

    def test_extended_preserves_order(self):
        log = ClickLog((Click("a", 1, 1),)).extended([Click("b", 2, 2)])
        assert [c.label for c in log.clicks] == ["a", "b"]


class TestUserState:
    def test_interest_must_normalize(self):
        with pytest.raises(ValueError, match="interest"):
            UserState(ClickLog(), 1, {"a": 0.5, "b": 0.6})

    def test_now_must_cover_log(self):
        with pytest.raises(ValueError, match="now"):
            UserState(ClickLog((Click("a", 1, 5),)), 4, {"a": 1.0})

    def test_decay_positive(self):
        with pytest.raises(ValueError, match="decay"):
            UserState(ClickLog(), 1, {"a": 1.0}, decay=0.0)


def test_interaction_state_label_mismatch():
    d1 = make_design(["a", "b"])
    d2 = make_design(["a", "c"])
    user = UserState(ClickLog(), 1, {"a": 0.5, "b": 0.5})
    with pytest.raises(ValueError):
        InteractionState(d1, user, d2)


def test_state_helper_swapped_expectation():
    design = make_design(["a", "b"])
    state = make_state(design, expected=design.with_entries(("b", "a")))
    assert state.expected_design.items == ("b", "a")
