import random

import pytest

from stripforge import (
    BoardExtent,
    Cut,
    GridConfig,
    Layout,
    SolveConfig,
    board_extent,
    check_all,
    derive_cuts,
    normalize,
    objective_tuple,
    solve,
    solve_phase1,
    verify,
)
from stripforge.netlist import ComponentKind
from stripforge.postprocess import InfeasibleLayoutError
from stripforge.solver import SolveStatus

from conftest import make_circuit, resistor_pair
from oracles import random_circuit

RC_TWO_NETS = (
    [("R1", ComponentKind.RESISTOR, 2), ("C1", ComponentKind.CAPACITOR, 2)],
    [[("R1", 1), ("C1", 1)], [("R1", 2), ("C1", 2)]],
)


class TestNormalize:
    def test_pure_translation(self):
        circuit = resistor_pair()
        layout = Layout(placements={("R1", 1): (3, 4), ("R1", 2): (5, 9)})
        result = normalize(layout, circuit)
        assert result.placements == {("R1", 1): (1, 1), ("R1", 2): (3, 6)}

    def test_empty_strip_removed(self):
        circuit = make_circuit(*RC_TWO_NETS)
        # strip 2 empty between occupied strips 1 and 3; no component spans it
        # with pins 1..2 of any part? R1 spans 1->3, so it must be KEPT.
        layout = Layout(placements={
            ("R1", 1): (1, 1), ("C1", 1): (1, 2),
            ("R1", 2): (3, 4), ("C1", 2): (3, 5)})
        result = normalize(layout, circuit)
        # strip 2 sits between R1's pins: deleting it would change the
        # strip distance, so it survives
        assert objective_tuple(result, circuit) == objective_tuple(layout, circuit)
        assert result.placements == dict(layout.placements)

    def test_unspanned_empty_strip_removed(self):
        circuit = make_circuit(
            [("TP1", ComponentKind.OTHER, 1), ("TP2", ComponentKind.OTHER, 1)])
        layout = Layout(placements={("TP1", 1): (1, 1), ("TP2", 1): (3, 1)})
        result = normalize(layout, circuit)
        assert result.placements == {("TP1", 1): (1, 1), ("TP2", 1): (2, 1)}
        assert check_all(circuit, result) == []

    def test_span_protected_columns_kept(self):
        circuit = resistor_pair()
        layout = Layout(placements={("R1", 1): (1, 1), ("R1", 2): (2, 4)})
        result = normalize(layout, circuit)
        assert result.placements == dict(layout.placements)
        assert objective_tuple(result, circuit).board_area == 8

    def test_unprotected_empty_column_removed(self):
        circuit = make_circuit(
            [("TP1", ComponentKind.OTHER, 1), ("TP2", ComponentKind.OTHER, 1)])
        layout = Layout(placements={("TP1", 1): (1, 1), ("TP2", 1): (2, 5)})
        result = normalize(layout, circuit)
        assert result.placements == {("TP1", 1): (1, 1), ("TP2", 1): (2, 2)}

    def test_cut_gap_columns_survive(self):
        # two single-member nets sharing a strip keep a one-hole gap
        circuit = make_circuit(
            [("TP1", ComponentKind.OTHER, 1), ("TP2", ComponentKind.OTHER, 1)],
            [[("TP1", 1)], [("TP2", 1)]])
        layout = Layout(placements={("TP1", 1): (1, 1), ("TP2", 1): (1, 5)})
        result = normalize(layout, circuit)
        assert result.placements == {("TP1", 1): (1, 1), ("TP2", 1): (1, 3)}
        assert check_all(circuit, result) == []

    def test_infeasible_input_refused(self):
        circuit = resistor_pair()
        layout = Layout(placements={("R1", 1): (1, 1), ("R1", 2): (1, 4)})
        with pytest.raises(InfeasibleLayoutError):
            normalize(layout, circuit)

    def test_empty_layout(self):
        circuit = make_circuit([])
        assert normalize(Layout(placements={}), circuit).placements == {}

    def test_idempotent_and_invariant_on_random_feasible(self):
        rng = random.Random(4242)
        checked = 0
        while checked < 40:
            circuit, grid = random_circuit(rng)
            r1 = solve_phase1(circuit, SolveConfig(grid=grid))
            if r1.status is not SolveStatus.FEASIBLE_ONLY or not r1.layout.placements:
                continue
            checked += 1
            layout = r1.layout
            once = normalize(layout, circuit)
            assert normalize(once, circuit) == once
            before = objective_tuple(layout, circuit)
            after = objective_tuple(once, circuit)
            assert after.total_strip_distance == before.total_strip_distance
            assert after.board_area <= before.board_area
            assert check_all(circuit, once) == []


class TestDeriveCuts:
    def test_cut_after_left_interval(self):
        circuit = make_circuit(*RC_TWO_NETS)
        # strip 2 holds net 1 at 1..3 and net 2 at 5..8
        aux = make_circuit(
            [("A1", ComponentKind.OTHER, 1), ("A2", ComponentKind.OTHER, 1),
             ("B1", ComponentKind.OTHER, 1), ("B2", ComponentKind.OTHER, 1)],
            [[("A1", 1), ("A2", 1)], [("B1", 1), ("B2", 1)]])
        layout = Layout(placements={
            ("A1", 1): (2, 1), ("A2", 1): (2, 3),
            ("B1", 1): (2, 5), ("B2", 1): (2, 8)})
        cuts = derive_cuts(layout, aux)
        assert cuts == [Cut(strip=2, after_position=3)]

    def test_single_net_strip_no_cuts(self):
        circuit = make_circuit(
            [("A1", ComponentKind.OTHER, 1), ("A2", ComponentKind.OTHER, 1)],
            [[("A1", 1), ("A2", 1)]])
        layout = Layout(placements={("A1", 1): (1, 1), ("A2", 1): (1, 4)})
        assert derive_cuts(layout, circuit) == []

    def test_two_one_hole_nets(self):
        circuit = make_circuit(
            [("A1", ComponentKind.OTHER, 1), ("B1", ComponentKind.OTHER, 1)],
            [[("A1", 1)], [("B1", 1)]])
        layout = Layout(placements={("A1", 1): (1, 1), ("B1", 1): (1, 3)})
        assert derive_cuts(layout, circuit) == [Cut(strip=1, after_position=1)]

    def test_overlap_refused(self):
        circuit = make_circuit(
            [("A1", ComponentKind.OTHER, 1), ("A2", ComponentKind.OTHER, 1),
             ("B1", ComponentKind.OTHER, 1)],
            [[("A1", 1), ("A2", 1)], [("B1", 1)]])
        layout = Layout(placements={
            ("A1", 1): (1, 1), ("A2", 1): (1, 5), ("B1", 1): (1, 3)})
        with pytest.raises(InfeasibleLayoutError):
            derive_cuts(layout, circuit)

    def test_cuts_never_inside_intervals(self):
        rng = random.Random(31337)
        checked = 0
        while checked < 30:
            circuit, grid = random_circuit(rng)
            r1 = solve_phase1(circuit, SolveConfig(grid=grid))
            if r1.status is not SolveStatus.FEASIBLE_ONLY or not r1.layout.placements:
                continue
            checked += 1
            layout = normalize(r1.layout, circuit)
            from stripforge.constraints import pin_groups
            intervals = {}
            for key, members in pin_groups(circuit).items():
                placed = [layout.placements[m] for m in members]
                strip = placed[0][0]
                positions = [p for _, p in placed]
                intervals.setdefault(strip, []).append((min(positions), max(positions)))
            for cut in derive_cuts(layout, circuit):
                for lo, hi in intervals.get(cut.strip, []):
                    assert not (lo <= cut.after_position < hi)


def _pipeline(circuit, grid=None):
    result = solve(circuit, SolveConfig(grid=grid or GridConfig()))
    layout = normalize(result.layout, circuit)
    return Layout(placements=layout.placements, grid=layout.grid,
                  cuts=tuple(derive_cuts(layout, circuit)))


class TestVerify:
    def test_solver_output_passes(self, circuits):
        circuit = circuits["lrc"]
        layout = _pipeline(circuit)
        report = verify(circuit, layout, board_extent(layout))
        assert report.overall
        assert [e["ok"] for e in report.evidence] == [True, True, True, True]

    def test_shared_hole_fails_feasibility(self):
        circuit = make_circuit(*RC_TWO_NETS)
        layout = Layout(placements={
            ("R1", 1): (1, 1), ("C1", 1): (1, 1),
            ("R1", 2): (2, 4), ("C1", 2): (2, 5)})
        report = verify(circuit, layout, board_extent(layout))
        assert not report.feasibility_ok

    def test_inflated_claim_fails_dimensions(self):
        circuit = resistor_pair()
        layout = _pipeline(circuit)
        true_extent = board_extent(layout)
        inflated = BoardExtent(
            min_strip=true_extent.min_strip,
            max_strip=true_extent.max_strip + 1,
            min_position=true_extent.min_position,
            max_position=true_extent.max_position)
        report = verify(circuit, layout, inflated)
        assert not report.dimensions_ok

    def test_missing_cut_fails_connectivity(self):
        circuit = make_circuit(
            [("A1", ComponentKind.OTHER, 1), ("B1", ComponentKind.OTHER, 1)],
            [[("A1", 1)], [("B1", 1)]])
        layout = Layout(placements={("A1", 1): (1, 1), ("B1", 1): (1, 3)})
        report = verify(circuit, layout, board_extent(layout))
        assert not report.connectivity_ok
        with_cut = Layout(placements=layout.placements, grid=layout.grid,
                          cuts=(Cut(strip=1, after_position=1),))
        assert verify(circuit, with_cut, board_extent(with_cut)).connectivity_ok

    def test_single_strip_component_fails_pin_placement(self):
        circuit = make_circuit([("C1", ComponentKind.CAPACITOR, 2)])
        layout = Layout(placements={("C1", 1): (1, 1), ("C1", 2): (1, 3)},
                        cuts=(Cut(strip=1, after_position=1),))
        report = verify(circuit, layout, board_extent(layout))
        assert not report.pin_placement_ok

    def test_report_json_shape(self):
        circuit = resistor_pair()
        layout = _pipeline(circuit)
        obj = verify(circuit, layout, board_extent(layout)).to_json_obj()
        assert set(obj) == {"connectivity_ok", "pin_placement_ok", "dimensions_ok",
                            "feasibility_ok", "overall", "evidence"}
        assert obj["overall"] is True

    def test_reconstruction_on_random_instances(self):
        rng = random.Random(2024)
        checked = 0
        while checked < 25:
            circuit, grid = random_circuit(rng)
            result = solve(circuit, SolveConfig(grid=grid))
            if result.status is not SolveStatus.OPTIMAL or not result.layout.placements:
                continue
            checked += 1
            layout = _pipeline(circuit, grid)
            report = verify(circuit, layout, board_extent(layout))
            assert report.overall, report.evidence
