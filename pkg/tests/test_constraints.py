import itertools

import pytest
from hypothesis import given, settings, strategies as st

from stripforge import (
    GridConfig,
    Layout,
    check_all,
    check_hole_exclusivity,
    check_min_span,
    check_net_same_strip,
    check_shared_strip_segments,
    check_two_pin_distinct_strips,
    is_feasible,
    pin_groups,
)
from stripforge.constraints import Propagator, ViolationKind, check_bounds
from stripforge.netlist import ComponentKind

from conftest import make_circuit, resistor_pair
from oracles import naive_feasible

RC = [("R1", ComponentKind.RESISTOR, 2), ("C1", ComponentKind.CAPACITOR, 2)]


def kinds(violations):
    return [v.kind for v in violations]


class TestNetSameStrip:
    def test_same_strip_ok(self):
        circuit = make_circuit(RC, [[("R1", 1), ("C1", 1)]])
        layout = Layout(placements={("R1", 1): (4, 1), ("C1", 1): (4, 3)})
        assert check_net_same_strip(circuit, layout) == []

    def test_split_net_flagged(self):
        circuit = make_circuit(RC, [[("R1", 1), ("C1", 1)]])
        layout = Layout(placements={("R1", 1): (4, 1), ("C1", 1): (5, 3)})
        violations = check_net_same_strip(circuit, layout)
        assert kinds(violations) == [ViolationKind.NET_SPLIT]

    def test_no_nets_no_violations(self):
        circuit = make_circuit(RC)
        layout = Layout(placements={("R1", 1): (1, 1), ("C1", 1): (2, 1)})
        assert check_net_same_strip(circuit, layout) == []

    def test_one_violation_per_net(self):
        circuit = make_circuit(RC, [[("R1", 1), ("R1", 2), ("C1", 1)]])
        layout = Layout(placements={
            ("R1", 1): (1, 1), ("R1", 2): (2, 1), ("C1", 1): (3, 1)})
        assert len(check_net_same_strip(circuit, layout)) == 1


class TestHoleExclusivity:
    def test_cross_component_conflict(self):
        circuit = make_circuit(RC)
        layout = Layout(placements={("R1", 1): (3, 3), ("C1", 1): (3, 3)})
        assert kinds(check_hole_exclusivity(circuit, layout)) == [ViolationKind.HOLE_CONFLICT]

    def test_same_component_conflict(self):
        circuit = make_circuit(RC)
        layout = Layout(placements={("R1", 1): (3, 3), ("R1", 2): (3, 3)})
        assert kinds(check_hole_exclusivity(circuit, layout)) == [ViolationKind.HOLE_CONFLICT]

    def test_distinct_holes_ok(self):
        circuit = make_circuit(RC)
        layout = Layout(placements={("R1", 1): (1, 1), ("R1", 2): (2, 1),
                                    ("C1", 1): (1, 3)})
        assert check_hole_exclusivity(circuit, layout) == []


class TestMinSpan:
    def test_boundary_exactly_three(self):
        circuit = resistor_pair()
        layout = Layout(placements={("R1", 1): (1, 2), ("R1", 2): (2, 5)})
        assert check_min_span(circuit, layout) == []

    def test_too_short(self):
        circuit = resistor_pair()
        layout = Layout(placements={("R1", 1): (1, 2), ("R1", 2): (2, 4)})
        assert kinds(check_min_span(circuit, layout)) == [ViolationKind.SPAN_TOO_SHORT]

    def test_signed_rule_rejects_leftward_pin2(self):
        circuit = resistor_pair()
        layout = Layout(placements={("R1", 1): (1, 5), ("R1", 2): (2, 2)})
        assert kinds(check_min_span(circuit, layout)) == [ViolationKind.SPAN_TOO_SHORT]

    def test_unsigned_relaxation_accepts_leftward_pin2(self):
        circuit = resistor_pair()
        layout = Layout(placements={("R1", 1): (1, 5), ("R1", 2): (2, 2)})
        assert check_min_span(circuit, layout, unsigned_span=True) == []

    def test_only_listed_kinds_constrained(self):
        circuit = make_circuit([("C1", ComponentKind.CAPACITOR, 2)])
        layout = Layout(placements={("C1", 1): (1, 1), ("C1", 2): (2, 1)})
        assert check_min_span(circuit, layout) == []

    def test_custom_span_table(self):
        circuit = make_circuit([("C1", ComponentKind.CAPACITOR, 2)])
        layout = Layout(placements={("C1", 1): (1, 1), ("C1", 2): (2, 2)})
        table = {ComponentKind.CAPACITOR: 2}
        assert kinds(check_min_span(circuit, layout, span_table=table)) == \
            [ViolationKind.SPAN_TOO_SHORT]


class TestDistinctStrips:
    def test_same_strip_flagged(self):
        circuit = make_circuit([("C1", ComponentKind.CAPACITOR, 2)])
        layout = Layout(placements={("C1", 1): (2, 1), ("C1", 2): (2, 5)})
        assert kinds(check_two_pin_distinct_strips(circuit, layout)) == \
            [ViolationKind.SAME_STRIP_COMPONENT]

    def test_distinct_strips_ok(self):
        circuit = make_circuit([("C1", ComponentKind.CAPACITOR, 2)])
        layout = Layout(placements={("C1", 1): (2, 1), ("C1", 2): (3, 1)})
        assert check_two_pin_distinct_strips(circuit, layout) == []

    def test_single_pin_component_exempt(self):
        circuit = make_circuit([("TP1", ComponentKind.OTHER, 1)])
        layout = Layout(placements={("TP1", 1): (2, 1)})
        assert check_two_pin_distinct_strips(circuit, layout) == []


class TestSharedStripSegments:
    def test_separable_with_gap(self):
        circuit = make_circuit(RC, [[("R1", 1), ("R1", 2)], [("C1", 1), ("C1", 2)]])
        layout = Layout(placements={
            ("R1", 1): (2, 1), ("R1", 2): (2, 3),
            ("C1", 1): (2, 5), ("C1", 2): (2, 8)})
        assert check_shared_strip_segments(circuit, layout) == []

    def test_overlap_flagged(self):
        circuit = make_circuit(RC, [[("R1", 1), ("R1", 2)], [("C1", 1), ("C1", 2)]])
        layout = Layout(placements={
            ("R1", 1): (2, 1), ("R1", 2): (2, 5),
            ("C1", 1): (2, 4), ("C1", 2): (2, 8)})
        assert kinds(check_shared_strip_segments(circuit, layout)) == \
            [ViolationKind.SHARED_STRIP_OVERLAP]

    def test_abutting_intervals_flagged(self):
        circuit = make_circuit(RC, [[("R1", 1), ("R1", 2)], [("C1", 1), ("C1", 2)]])
        layout = Layout(placements={
            ("R1", 1): (2, 1), ("R1", 2): (2, 3),
            ("C1", 1): (2, 4), ("C1", 2): (2, 8)})
        assert kinds(check_shared_strip_segments(circuit, layout)) == \
            [ViolationKind.SHARED_STRIP_OVERLAP]

    def test_one_net_per_strip_ok(self):
        circuit = make_circuit(RC, [[("R1", 1), ("R1", 2)], [("C1", 1), ("C1", 2)]])
        layout = Layout(placements={
            ("R1", 1): (1, 1), ("R1", 2): (1, 2),
            ("C1", 1): (2, 1), ("C1", 2): (2, 2)})
        assert check_shared_strip_segments(circuit, layout) == []

    def test_unconnected_pins_are_singleton_groups(self):
        circuit = make_circuit(RC)  # no nets: every pin its own group
        layout = Layout(placements={("R1", 1): (1, 1), ("C1", 1): (1, 2),
                                    ("R1", 2): (2, 1), ("C1", 2): (2, 2)})
        violations = check_shared_strip_segments(circuit, layout)
        assert len(violations) == 2  # both strips host two abutting singletons


class TestPinGroups:
    def test_every_pin_in_exactly_one_group(self, circuits):
        for circuit in circuits.values():
            groups = pin_groups(circuit)
            seen = [pin for members in groups.values() for pin in members]
            assert sorted(seen) == sorted(circuit.all_pins())


class TestCheckAll:
    def test_feasible_single_resistor(self):
        circuit = resistor_pair()
        layout = Layout(placements={("R1", 1): (1, 1), ("R1", 2): (2, 4)})
        assert check_all(circuit, layout) == []

    def test_empty_circuit(self):
        circuit = make_circuit([])
        assert check_all(circuit, Layout(placements={})) == []

    def test_out_of_bounds(self):
        circuit = resistor_pair()
        layout = Layout(placements={("R1", 1): (1, 1), ("R1", 2): (2, 9)},
                        grid=GridConfig(2, 4))
        assert ViolationKind.OUT_OF_BOUNDS in kinds(check_bounds(circuit, layout))

    def test_single_rule_violations_isolated(self):
        circuit = resistor_pair()
        base = {("R1", 1): (1, 1), ("R1", 2): (2, 4)}
        breakers = {
            ViolationKind.SPAN_TOO_SHORT: {("R1", 1): (1, 1), ("R1", 2): (2, 3)},
            ViolationKind.SAME_STRIP_COMPONENT: {("R1", 1): (1, 1), ("R1", 2): (1, 4)},
        }
        assert check_all(circuit, Layout(placements=base)) == []
        for kind, placements in breakers.items():
            got = kinds(check_all(circuit, Layout(placements=placements)))
            assert got == [kind], kind

    def test_checks_independent(self):
        # a layout violating several rules reports each kind exactly once here
        circuit = make_circuit(RC, [[("R1", 1), ("C1", 1)]])
        layout = Layout(placements={
            ("R1", 1): (1, 1), ("C1", 1): (2, 1),   # net split
            ("R1", 2): (1, 2),                      # same strip + span
            ("C1", 2): (1, 2),                      # hole conflict
        })
        got = set(kinds(check_all(circuit, layout)))
        assert ViolationKind.NET_SPLIT in got
        assert ViolationKind.HOLE_CONFLICT in got
        assert ViolationKind.SAME_STRIP_COMPONENT in got


class TestOracleAgreement:
    def test_exhaustive_tiny(self):
        """check_all and the first-principles oracle agree on every total
        assignment of a resistor+capacitor circuit on a 3x5 grid."""
        circuit = make_circuit(RC, [[("R1", 2), ("C1", 1)]])
        grid = GridConfig(3, 5)
        holes = [(s, p) for s in range(1, 4) for p in range(1, 6)]
        pins = list(circuit.all_pins())
        mismatches = 0
        for combo in itertools.product(holes, repeat=len(pins)):
            layout = Layout(placements=dict(zip(pins, combo)), grid=grid)
            if (not check_all(circuit, layout)) != naive_feasible(circuit, layout):
                mismatches += 1
        assert mismatches == 0

    def test_monotonicity(self):
        """Adding a placement never removes an existing violation."""
        circuit = make_circuit(RC, [[("R1", 1), ("C1", 1)]])
        partial = {("R1", 1): (1, 1), ("C1", 1): (2, 1)}
        broken_kinds = set(kinds(check_all(circuit, Layout(placements=partial))))
        extended = dict(partial)
        extended[("R1", 2)] = (3, 4)
        extended_kinds = set(kinds(check_all(circuit, Layout(placements=extended))))
        assert broken_kinds <= extended_kinds


placement_moves = st.lists(
    st.tuples(st.integers(0, 3), st.integers(1, 4), st.integers(1, 6)),
    min_size=4, max_size=4, unique_by=lambda t: t[0],
)


class TestPropagator:
    def test_agrees_with_batch_on_complete_assignments(self):
        circuit = make_circuit(RC, [[("R1", 2), ("C1", 1)]])
        grid = GridConfig(3, 6)
        pins = list(circuit.all_pins())

        @given(st.tuples(*[st.tuples(st.integers(1, 3), st.integers(1, 6))
                           for _ in pins]))
        @settings(max_examples=300, deadline=None)
        def run(holes):
            prop = Propagator(circuit, grid)
            all_pushed = True
            for (ref, pin), (s, p) in zip(pins, holes):
                if not prop.try_place(ref, pin, s, p):
                    all_pushed = False
                    break
            layout = Layout(placements=dict(zip(pins, holes)), grid=grid)
            if all_pushed:
                assert check_all(circuit, layout) == []
            else:
                assert check_all(circuit, layout) != []

        run()

    def test_push_pop_restores_state(self):
        circuit = resistor_pair()
        prop = Propagator(circuit, GridConfig(3, 6))
        assert prop.try_place("R1", 1, 1, 1)
        snapshot = (dict(prop.placements), dict(prop.group_strip))
        assert prop.try_place("R1", 2, 2, 4)
        prop.pop()
        assert (dict(prop.placements), dict(prop.group_strip)) == snapshot

    def test_preemptive_partner_strip_conflict(self):
        # pin 2's net already decided onto this strip: pin 1 cannot join it
        circuit = make_circuit(
            [("R1", ComponentKind.RESISTOR, 2), ("C1", ComponentKind.CAPACITOR, 2)],
            [[("R1", 2), ("C1", 1)]])
        prop = Propagator(circuit, GridConfig(4, 8))
        assert prop.try_place("C1", 1, 2, 1)   # decides R1.2's net onto strip 2
        assert prop.conflict("R1", 1, 2, 5) is ViolationKind.SAME_STRIP_COMPONENT

    def test_candidate_strips_collapse_once_net_decided(self):
        circuit = make_circuit(RC, [[("R1", 1), ("C1", 1)]])
        prop = Propagator(circuit, GridConfig(4, 8))
        assert list(prop.candidate_strips("C1", 1, 4)) == [1, 2, 3, 4]
        assert prop.try_place("R1", 1, 3, 1)
        assert prop.candidate_strips("C1", 1, 4) == [3]

    def test_group_can_extend_windows(self):
        circuit = make_circuit(RC, [[("R1", 1), ("C1", 1)], [("R1", 2), ("C1", 2)]])
        prop = Propagator(circuit, GridConfig(3, 8))
        assert prop.try_place("R1", 1, 1, 4)
        assert prop.try_place("C1", 1, 1, 5)
        # net 2 still fits beside [4,5] (at 1..2 or 7..8) but nowhere in [3..6]
        assert prop.group_can_extend(1, 2, 8)
        assert not prop.group_can_extend(1, 2, 8, lo=3, hi=6)
