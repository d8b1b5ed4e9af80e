"""Hard layout constraints: batch checkers and an incremental propagator.

Four placement rules guard electrical and geometric validity:

* all pins of a net share one strip,
* no hole hosts two pins,
* resistor pins sit at least a minimum position span apart (signed:
  pin 2 right of pin 1),
* pins 1 and 2 of a component sit on different strips.

A fifth rule guards cut feasibility: two connectivity groups sharing a
strip need disjoint position intervals with at least one free hole
between them, otherwise no strip cut can separate them.  Unconnected
pins count as singleton groups so they can always be isolated.

The batch checkers are pure functions over complete layouts; the
Propagator mirrors them incrementally for search, and the two must agree
on every complete assignment.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Mapping, Optional

from .layout import GridConfig, Layout
from .netlist import Circuit, ComponentKind

__all__ = [
    "ViolationKind",
    "ConstraintViolation",
    "DEFAULT_SPAN_TABLE",
    "pin_groups",
    "check_net_same_strip",
    "check_hole_exclusivity",
    "check_min_span",
    "check_two_pin_distinct_strips",
    "check_shared_strip_segments",
    "check_bounds",
    "check_all",
    "is_feasible",
    "violations_to_json_obj",
    "Propagator",
]

# Minimum pin-1 to pin-2 position span, by component kind.  Only kinds
# listed here are constrained.
DEFAULT_SPAN_TABLE: Mapping[ComponentKind, int] = {ComponentKind.RESISTOR: 3}

GroupKey = Hashable


class ViolationKind(str, Enum):
    NET_SPLIT = "net_split"
    HOLE_CONFLICT = "hole_conflict"
    SPAN_TOO_SHORT = "span_too_short"
    SAME_STRIP_COMPONENT = "same_strip_component"
    OUT_OF_BOUNDS = "out_of_bounds"
    SHARED_STRIP_OVERLAP = "shared_strip_overlap"


@dataclass(frozen=True)
class ConstraintViolation:
    """Witness of one broken rule: the placements involved plus a message."""

    kind: ViolationKind
    witnesses: tuple[tuple[str, int, int, int], ...]  # (ref, pin, strip, position)
    message: str

    def to_json_obj(self) -> dict:
        return {
            "kind": self.kind.value,
            "refs": [w[0] for w in self.witnesses],
            "pins": [w[1] for w in self.witnesses],
            "strips": [w[2] for w in self.witnesses],
            "positions": [w[3] for w in self.witnesses],
            "message": self.message,
        }


def violations_to_json_obj(violations: list[ConstraintViolation]) -> list[dict]:
    return [v.to_json_obj() for v in violations]


def pin_groups(circuit: Circuit) -> dict[GroupKey, tuple[tuple[str, int], ...]]:
    """Connectivity groups: one per net, plus a singleton per unconnected pin.

    Every circuit pin belongs to exactly one group.  Group keys are net
    ids (int) or ("pin", ref, pin) for singletons.
    """
    groups: dict[GroupKey, tuple[tuple[str, int], ...]] = {}
    for net in circuit.nets:
        groups[net.id] = tuple(net.members)
    for ref, pin in circuit.all_pins():
        if circuit.net_of(ref, pin) is None:
            groups[("pin", ref, pin)] = ((ref, pin),)
    return groups


def _group_label(key: GroupKey, circuit: Circuit) -> str:
    if isinstance(key, int):
        return f"net {circuit.nets[key - 1].name!r}"
    return f"unconnected pin {key[1]}.{key[2]}"


def check_bounds(circuit: Circuit, layout: Layout) -> list[ConstraintViolation]:
    """Every placement must land inside the grid."""
    grid = layout.grid
    out = []
    for (ref, pin), (s, p) in sorted(layout.placements.items()):
        if not (1 <= s <= grid.max_strips and 1 <= p <= grid.max_positions):
            out.append(ConstraintViolation(
                kind=ViolationKind.OUT_OF_BOUNDS,
                witnesses=((ref, pin, s, p),),
                message=f"{ref}.{pin} at ({s},{p}) outside "
                        f"{grid.max_strips}x{grid.max_positions} grid",
            ))
    return out


def check_net_same_strip(circuit: Circuit, layout: Layout) -> list[ConstraintViolation]:
    """One violation per net whose placed members span several strips."""
    out = []
    for net in circuit.nets:
        placed = [(ref, pin, *layout.placements[(ref, pin)])
                  for ref, pin in net.members if (ref, pin) in layout.placements]
        strips = {w[2] for w in placed}
        if len(strips) > 1:
            out.append(ConstraintViolation(
                kind=ViolationKind.NET_SPLIT,
                witnesses=tuple(placed),
                message=f"net {net.name!r} split across strips {sorted(strips)}",
            ))
    return out


def check_hole_exclusivity(circuit: Circuit, layout: Layout) -> list[ConstraintViolation]:
    """One violation per hole hosting more than one pin (any components)."""
    by_hole: dict[tuple[int, int], list[tuple[str, int]]] = {}
    for (ref, pin), hole in layout.placements.items():
        by_hole.setdefault(hole, []).append((ref, pin))
    out = []
    for hole in sorted(h for h, pins in by_hole.items() if len(pins) > 1):
        pins = sorted(by_hole[hole])
        out.append(ConstraintViolation(
            kind=ViolationKind.HOLE_CONFLICT,
            witnesses=tuple((ref, pin, hole[0], hole[1]) for ref, pin in pins),
            message=f"hole {hole} hosts " + ", ".join(f"{r}.{p}" for r, p in pins),
        ))
    return out


def check_min_span(
    circuit: Circuit,
    layout: Layout,
    span_table: Optional[Mapping[ComponentKind, int]] = None,
    unsigned_span: bool = False,
) -> list[ConstraintViolation]:
    """Components of span-constrained kinds need pins 1/2 far enough apart.

    The rule is signed by default (pin 2 at least ``span`` positions right
    of pin 1); ``unsigned_span`` relaxes it to |P2 - P1| >= span.
    """
    table = DEFAULT_SPAN_TABLE if span_table is None else span_table
    out = []
    for comp in circuit.components:
        span = table.get(comp.kind)
        if span is None:
            continue
        a = layout.placements.get((comp.ref, 1))
        b = layout.placements.get((comp.ref, 2))
        if a is None or b is None:
            continue
        delta = b[1] - a[1]
        if unsigned_span:
            delta = abs(delta)
        if delta < span:
            out.append(ConstraintViolation(
                kind=ViolationKind.SPAN_TOO_SHORT,
                witnesses=((comp.ref, 1, a[0], a[1]), (comp.ref, 2, b[0], b[1])),
                message=f"{comp.ref}: pin span {delta} < {span}",
            ))
    return out


def check_two_pin_distinct_strips(circuit: Circuit, layout: Layout) -> list[ConstraintViolation]:
    """Pins 1 and 2 of any component must sit on different strips."""
    out = []
    for comp in circuit.components:
        a = layout.placements.get((comp.ref, 1))
        b = layout.placements.get((comp.ref, 2))
        if a is None or b is None:
            continue
        if a[0] == b[0]:
            out.append(ConstraintViolation(
                kind=ViolationKind.SAME_STRIP_COMPONENT,
                witnesses=((comp.ref, 1, a[0], a[1]), (comp.ref, 2, b[0], b[1])),
                message=f"{comp.ref}: both pins on strip {a[0]}",
            ))
    return out


def _strip_intervals(
    circuit: Circuit, layout: Layout
) -> dict[int, dict[GroupKey, tuple[int, int]]]:
    """Per strip, each group's (min, max) position interval of placed pins."""
    group_of: dict[tuple[str, int], GroupKey] = {}
    for key, members in pin_groups(circuit).items():
        for member in members:
            group_of[member] = key
    per_strip: dict[int, dict[GroupKey, tuple[int, int]]] = {}
    for (ref, pin), (s, p) in layout.placements.items():
        group = group_of.get((ref, pin))
        if group is None:
            continue
        intervals = per_strip.setdefault(s, {})
        lo, hi = intervals.get(group, (p, p))
        intervals[group] = (min(lo, p), max(hi, p))
    return per_strip


def check_shared_strip_segments(circuit: Circuit, layout: Layout) -> list[ConstraintViolation]:
    """Groups sharing a strip need a free hole between their intervals.

    A cut removes the copper between two adjacent holes, so two groups are
    separable only when their position intervals are disjoint with at
    least one hole strictly between them.
    """
    out = []
    per_strip = _strip_intervals(circuit, layout)
    for s in sorted(per_strip):
        items = sorted(per_strip[s].items(), key=lambda kv: (kv[1], str(kv[0])))
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                (ga, (alo, ahi)), (gb, (blo, bhi)) = items[i], items[j]
                if blo - ahi >= 2 or alo - bhi >= 2:
                    continue
                out.append(ConstraintViolation(
                    kind=ViolationKind.SHARED_STRIP_OVERLAP,
                    witnesses=_interval_witnesses(layout, circuit, s, (ga, gb)),
                    message=f"strip {s}: {_group_label(ga, circuit)} "
                            f"[{alo},{ahi}] and {_group_label(gb, circuit)} "
                            f"[{blo},{bhi}] cannot be separated by a cut",
                ))
    return out


def _interval_witnesses(layout, circuit, strip, group_keys):
    groups = pin_groups(circuit)
    witnesses = []
    for key in group_keys:
        for ref, pin in groups[key]:
            placed = layout.placements.get((ref, pin))
            if placed is not None and placed[0] == strip:
                witnesses.append((ref, pin, placed[0], placed[1]))
    return tuple(sorted(witnesses))


def check_all(
    circuit: Circuit,
    layout: Layout,
    span_table: Optional[Mapping[ComponentKind, int]] = None,
    unsigned_span: bool = False,
) -> list[ConstraintViolation]:
    """All constraint checks; an empty result means the layout is feasible."""
    return (
        check_bounds(circuit, layout)
        + check_net_same_strip(circuit, layout)
        + check_hole_exclusivity(circuit, layout)
        + check_min_span(circuit, layout, span_table, unsigned_span)
        + check_two_pin_distinct_strips(circuit, layout)
        + check_shared_strip_segments(circuit, layout)
    )


def is_feasible(
    circuit: Circuit,
    layout: Layout,
    span_table: Optional[Mapping[ComponentKind, int]] = None,
    unsigned_span: bool = False,
) -> bool:
    """Same verdict as ``check_all(...) == []``."""
    return not check_all(circuit, layout, span_table, unsigned_span)


# ---------------------------------------------------------------------------
# Incremental propagator


class Propagator:
    """Single-owner incremental constraint state for backtracking search.

    ``conflict`` answers whether one new placement clashes with the
    current partial assignment; ``push``/``pop`` maintain the assignment.
    Because every rule is monotone in the set of placed pins, a partial
    assignment that already conflicts can never be completed, and a fully
    pushed assignment is feasible exactly when the batch checkers accept
    the same layout.
    """

    def __init__(
        self,
        circuit: Circuit,
        grid: GridConfig,
        span_table: Optional[Mapping[ComponentKind, int]] = None,
        unsigned_span: bool = False,
    ):
        self.circuit = circuit
        self.grid = grid
        self.unsigned_span = unsigned_span
        table = DEFAULT_SPAN_TABLE if span_table is None else span_table
        self.span_of: dict[str, int] = {
            comp.ref: table[comp.kind]
            for comp in circuit.components
            if comp.kind in table and comp.pin_count >= 2
        }
        self.two_pin_refs: set[str] = {
            comp.ref for comp in circuit.components if comp.pin_count >= 2
        }
        self.group_of: dict[tuple[str, int], GroupKey] = {}
        for key, members in pin_groups(circuit).items():
            for member in members:
                self.group_of[member] = key
        self.n_groups = len(pin_groups(circuit))

        self.placements: dict[tuple[str, int], tuple[int, int]] = {}
        self.occupied: dict[tuple[int, int], tuple[str, int]] = {}
        self.group_strip: dict[GroupKey, int] = {}
        self.group_count: dict[GroupKey, int] = {}
        self.strip_intervals: dict[int, dict[GroupKey, tuple[int, int]]] = {}
        self._trail: list[tuple] = []

    def conflict(self, ref: str, pin: int, strip: int, pos: int) -> Optional[ViolationKind]:
        """Kind of the immediate conflict this placement would cause, if any."""
        if not (1 <= strip <= self.grid.max_strips and 1 <= pos <= self.grid.max_positions):
            return ViolationKind.OUT_OF_BOUNDS
        if (strip, pos) in self.occupied:
            return ViolationKind.HOLE_CONFLICT
        group = self.group_of[(ref, pin)]
        decided = self.group_strip.get(group)
        if decided is not None and decided != strip:
            return ViolationKind.NET_SPLIT
        if pin in (1, 2) and ref in self.two_pin_refs:
            partner_key = (ref, 2 if pin == 1 else 1)
            partner = self.placements.get(partner_key)
            if partner is not None:
                if partner[0] == strip:
                    return ViolationKind.SAME_STRIP_COMPONENT
                span = self.span_of.get(ref)
                if span is not None:
                    delta = partner[1] - pos if pin == 1 else pos - partner[1]
                    if self.unsigned_span:
                        delta = abs(delta)
                    if delta < span:
                        return ViolationKind.SPAN_TOO_SHORT
            elif self.group_strip.get(self.group_of[partner_key]) == strip:
                # partner unplaced but its net is pinned to this strip, so
                # completing the assignment would break the distinct-strip rule
                return ViolationKind.SAME_STRIP_COMPONENT
        intervals = self.strip_intervals.get(strip)
        if intervals:
            lo, hi = intervals.get(group, (pos, pos))
            lo, hi = min(lo, pos), max(hi, pos)
            for other, (olo, ohi) in intervals.items():
                if other is group or other == group:
                    continue
                if not (olo - hi >= 2 or lo - ohi >= 2):
                    return ViolationKind.SHARED_STRIP_OVERLAP
        return None

    def try_place(self, ref: str, pin: int, strip: int, pos: int) -> bool:
        """Place one pin; False (state unchanged) on immediate conflict."""
        if self.conflict(ref, pin, strip, pos) is not None:
            return False
        self.place_unchecked(ref, pin, strip, pos)
        return True

    def place_unchecked(self, ref: str, pin: int, strip: int, pos: int) -> None:
        """Place a pin the caller has already cleared through ``conflict``."""
        key = (ref, pin)
        group = self.group_of[key]
        intervals = self.strip_intervals.setdefault(strip, {})
        old_interval = intervals.get(group)
        first_of_group = group not in self.group_strip
        self._trail.append((key, (strip, pos), group, old_interval, first_of_group))
        self.placements[key] = (strip, pos)
        self.occupied[(strip, pos)] = key
        if first_of_group:
            self.group_strip[group] = strip
            self.group_count[group] = 1
        else:
            self.group_count[group] += 1
        if old_interval is None:
            intervals[group] = (pos, pos)
        else:
            lo, hi = old_interval
            intervals[group] = (min(lo, pos), max(hi, pos))

    def pop(self) -> None:
        """Undo the most recent successful placement."""
        key, hole, group, old_interval, first_of_group = self._trail.pop()
        del self.placements[key]
        del self.occupied[hole]
        intervals = self.strip_intervals[hole[0]]
        if old_interval is None:
            del intervals[group]
        else:
            intervals[group] = old_interval
        if first_of_group:
            del self.group_strip[group]
            del self.group_count[group]
        else:
            self.group_count[group] -= 1

    def group_can_extend(self, strip: int, group: GroupKey, max_pos: int,
                         lo: int = 1, hi: Optional[int] = None) -> bool:
        """True when at least one more pin of ``group`` fits on ``strip``
        within [lo, hi] without breaking hole exclusivity or interval
        separability."""
        if hi is None:
            hi = max_pos
        intervals = self.strip_intervals.get(strip, {})
        current = intervals.get(group)
        others = [iv for g, iv in intervals.items() if g != group]
        occupied = self.occupied
        for q in range(max(lo, 1), min(hi, max_pos) + 1):
            if (strip, q) in occupied:
                continue
            if current is None:
                new_lo = new_hi = q
            else:
                new_lo = current[0] if current[0] < q else q
                new_hi = current[1] if current[1] > q else q
            for olo, ohi in others:
                if not (olo - new_hi >= 2 or new_lo - ohi >= 2):
                    break
            else:
                return True
        return False

    def candidate_strips(self, ref: str, pin: int, max_strip: int) -> range | list[int]:
        """Strip domain for a pin under the current assignment.

        A decided group pins the strip outright; otherwise the full range
        is returned (finer pruning happens per-value in ``conflict``).
        """
        decided = self.group_strip.get(self.group_of[(ref, pin)])
        if decided is not None:
            return [decided] if decided <= max_strip else []
        return range(1, max_strip + 1)

    def depth(self) -> int:
        return len(self._trail)
