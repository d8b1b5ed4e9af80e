import pytest
from hypothesis import given, strategies as st

from stripforge import (
    Cut,
    EmptyLayoutError,
    GridConfig,
    Layout,
    ObjectiveTuple,
    board_extent,
    json_to_layout,
    layout_to_json,
    lex_compare,
    objective_tuple,
    strip_distance,
)
from stripforge.netlist import ComponentKind
from stripforge.layout import IRSchemaError

from conftest import make_circuit


class TestBoardExtent:
    def test_single_pin(self):
        layout = Layout(placements={("R1", 1): (5, 7)})
        extent = board_extent(layout)
        assert (extent.min_strip, extent.max_strip) == (5, 5)
        assert (extent.min_position, extent.max_position) == (7, 7)
        assert (extent.width, extent.length, extent.area) == (1, 1, 1)

    def test_seven_by_nine(self):
        layout = Layout(placements={("A", 1): (2, 1), ("A", 2): (8, 9)})
        extent = board_extent(layout)
        assert (extent.width, extent.length) == (7, 9)
        assert extent.area == 63

    def test_diagonal_pins(self):
        layout = Layout(placements={("A", 1): (1, 1), ("A", 2): (3, 10)})
        extent = board_extent(layout)
        assert (extent.width, extent.length, extent.area) == (3, 10, 30)

    def test_empty_layout_refused(self):
        with pytest.raises(EmptyLayoutError):
            board_extent(Layout(placements={}))


class TestStripDistance:
    def test_direct(self):
        layout = Layout(placements={("R1", 1): (3, 1), ("R1", 2): (5, 4)})
        assert strip_distance(layout, "R1") == 2

    def test_symmetry_of_absolute_value(self):
        layout = Layout(placements={("R1", 1): (9, 1), ("R1", 2): (2, 4)})
        assert strip_distance(layout, "R1") == 7

    def test_single_pin_contributes_nothing(self):
        layout = Layout(placements={("TP1", 1): (3, 3)})
        assert strip_distance(layout, "TP1") == 0

    @given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 20), st.integers(1, 20))
    def test_swap_invariance(self, s1, p1, s2, p2):
        a = Layout(placements={("X", 1): (s1, p1), ("X", 2): (s2, p2)})
        b = Layout(placements={("X", 1): (s2, p2), ("X", 2): (s1, p1)})
        assert strip_distance(a, "X") == strip_distance(b, "X")


class TestObjective:
    def test_single_resistor(self):
        circuit = make_circuit([("R1", ComponentKind.RESISTOR, 2)])
        layout = Layout(placements={("R1", 1): (1, 1), ("R1", 2): (2, 4)})
        assert objective_tuple(layout, circuit).as_tuple() == (1, 8, 2)

    def test_single_pin_components_have_zero_distance(self):
        circuit = make_circuit([("TP1", ComponentKind.OTHER, 1),
                                ("TP2", ComponentKind.OTHER, 1)])
        layout = Layout(placements={("TP1", 1): (1, 1), ("TP2", 1): (4, 2)})
        assert objective_tuple(layout, circuit).total_strip_distance == 0

    def test_two_resistors_sum(self):
        circuit = make_circuit([("R1", ComponentKind.RESISTOR, 2),
                                ("R2", ComponentKind.RESISTOR, 2)])
        layout = Layout(placements={
            ("R1", 1): (1, 1), ("R1", 2): (2, 4),
            ("R2", 1): (3, 1), ("R2", 2): (5, 4),
        })
        assert objective_tuple(layout, circuit).total_strip_distance == 3

    def test_empty_layout_scores_zero(self):
        circuit = make_circuit([])
        assert objective_tuple(Layout(placements={}), circuit).as_tuple() == (0, 0, 0)

    @given(st.integers(-10, 10), st.integers(-10, 10))
    def test_translation_invariance(self, ds, dp):
        circuit = make_circuit([("R1", ComponentKind.RESISTOR, 2),
                                ("C1", ComponentKind.CAPACITOR, 2)])
        layout = Layout(placements={
            ("R1", 1): (20, 20), ("R1", 2): (22, 24),
            ("C1", 1): (21, 21), ("C1", 2): (23, 22),
        })
        moved = layout.translated(ds, dp)
        assert objective_tuple(moved, circuit) == objective_tuple(layout, circuit)


tuples = st.builds(
    ObjectiveTuple,
    st.integers(0, 50),
    st.integers(0, 500),
    st.integers(0, 30),
)


class TestLexCompare:
    def test_distance_dominates(self):
        assert lex_compare(ObjectiveTuple(3, 20, 4), ObjectiveTuple(4, 10, 2)) == -1

    def test_area_breaks_ties(self):
        assert lex_compare(ObjectiveTuple(3, 20, 4), ObjectiveTuple(3, 18, 9)) == 1

    def test_equal(self):
        assert lex_compare(ObjectiveTuple(3, 20, 4), ObjectiveTuple(3, 20, 4)) == 0

    @given(tuples, tuples)
    def test_antisymmetric(self, a, b):
        assert lex_compare(a, b) == -lex_compare(b, a)

    @given(tuples, tuples, tuples)
    def test_transitive(self, a, b, c):
        if lex_compare(a, b) <= 0 and lex_compare(b, c) <= 0:
            assert lex_compare(a, c) <= 0

    @given(tuples, tuples)
    def test_total(self, a, b):
        if lex_compare(a, b) == 0:
            assert a == b


holes_strategy = st.dictionaries(
    st.tuples(st.sampled_from(["R1", "C1", "D1"]), st.integers(1, 2)),
    st.tuples(st.integers(1, 12), st.integers(1, 12)),
    min_size=1, max_size=6,
)


class TestExtentProperties:
    @given(holes_strategy)
    def test_area_covers_distinct_holes(self, placements):
        layout = Layout(placements=placements)
        extent = board_extent(layout)
        assert extent.area == extent.width * extent.length
        assert extent.area >= len(set(placements.values()))


class TestLayoutJson:
    def test_round_trip(self):
        layout = Layout(
            placements={("R1", 1): (1, 1), ("R1", 2): (2, 4)},
            grid=GridConfig(5, 9),
            cuts=(Cut(strip=2, after_position=2),),
        )
        assert json_to_layout(layout_to_json(layout)) == layout

    def test_deterministic_and_sorted(self):
        layout = Layout(placements={("B1", 1): (2, 2), ("A1", 1): (1, 1)})
        text = layout_to_json(layout)
        assert text == layout_to_json(layout)
        assert text.index('"A1"') < text.index('"B1"')

    def test_duplicate_placement_rejected(self):
        text = """{"grid": {"max_strips": 5, "max_positions": 5},
                   "placements": [{"ref": "R1", "pin": 1, "strip": 1, "position": 1},
                                  {"ref": "R1", "pin": 1, "strip": 2, "position": 2}],
                   "cuts": []}"""
        with pytest.raises(IRSchemaError, match="duplicate"):
            json_to_layout(text)

    def test_malformed_rejected(self):
        with pytest.raises(IRSchemaError):
            json_to_layout("[]")
