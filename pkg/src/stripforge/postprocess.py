"""Layout normalization, strip-cut derivation, and layout verification.

Normalization translates a feasible layout to a 1-based origin and
removes empty strips and position columns that are safe to drop: a
strip strictly between a component's two pin strips would change the
strip-distance objective, and a column is kept when it sits strictly
between a component's pin positions (span protection) or is the only
free hole separating two groups on a strip (a cut needs that gap).
The result is feasible, has the same total strip distance, and never a
larger board.

Cuts are derived per strip: one cut in each gap between adjacent group
intervals, immediately after the left interval.

Verification is independent of the solver: it reconstructs electrical
connectivity purely from pin geometry and cuts and compares it against
the source netlist, alongside pin-placement, dimension, and feasibility
checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .constraints import (
    ConstraintViolation,
    check_all,
    check_shared_strip_segments,
    pin_groups,
)
from .layout import BoardExtent, Cut, Layout, board_extent
from .netlist import Circuit, ComponentKind

__all__ = [
    "InfeasibleLayoutError",
    "VerificationReport",
    "normalize",
    "derive_cuts",
    "verify",
]


class InfeasibleLayoutError(ValueError):
    """Input layout breaks hard constraints; carries the violation list."""

    def __init__(self, violations: list[ConstraintViolation]):
        self.violations = violations
        summary = "; ".join(v.message for v in violations[:3])
        more = f" (+{len(violations) - 3} more)" if len(violations) > 3 else ""
        super().__init__(f"layout is infeasible: {summary}{more}")


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of the four independent layout checks."""

    connectivity_ok: bool
    pin_placement_ok: bool
    dimensions_ok: bool
    feasibility_ok: bool
    evidence: tuple[dict, ...]

    @property
    def overall(self) -> bool:
        return (self.connectivity_ok and self.pin_placement_ok
                and self.dimensions_ok and self.feasibility_ok)

    def to_json_obj(self) -> dict:
        return {
            "connectivity_ok": self.connectivity_ok,
            "pin_placement_ok": self.pin_placement_ok,
            "dimensions_ok": self.dimensions_ok,
            "feasibility_ok": self.feasibility_ok,
            "overall": self.overall,
            "evidence": list(self.evidence),
        }


# ---------------------------------------------------------------------------
# Normalization


def _group_map(circuit: Circuit) -> dict[tuple[str, int], object]:
    group_of: dict[tuple[str, int], object] = {}
    for key, members in pin_groups(circuit).items():
        for member in members:
            group_of[member] = key
    return group_of


def _strip_group_intervals(placements, group_of) -> dict[int, dict]:
    per_strip: dict[int, dict] = {}
    for key, (s, p) in placements.items():
        intervals = per_strip.setdefault(s, {})
        group = group_of[key]
        lo, hi = intervals.get(group, (p, p))
        intervals[group] = (min(lo, p), max(hi, p))
    return per_strip


def normalize(
    layout: Layout,
    circuit: Circuit,
    span_table: Optional[Mapping[ComponentKind, int]] = None,
    unsigned_span: bool = False,
) -> Layout:
    """Translate to origin (1,1) and drop removable empty strips/columns.

    Refuses infeasible input.  Cuts are invalidated by renumbering and
    come back empty; derive them again afterwards.
    """
    violations = check_all(circuit, layout, span_table, unsigned_span)
    if violations:
        raise InfeasibleLayoutError(violations)
    if not layout.placements:
        return Layout(placements={}, grid=layout.grid)

    placements = dict(layout.placements)
    group_of = _group_map(circuit)

    # (a) translate to a 1-based origin
    smin = min(s for s, _ in placements.values())
    pmin = min(p for _, p in placements.values())
    if smin != 1 or pmin != 1:
        placements = {key: (s - smin + 1, p - pmin + 1)
                      for key, (s, p) in placements.items()}

    def pin_pair(ref: str):
        a = placements.get((ref, 1))
        b = placements.get((ref, 2))
        return (a, b) if a is not None and b is not None else None

    # (b) delete empty strips, protecting strip distance
    s = 2
    while s <= max(st for st, _ in placements.values()):
        occupied = any(st == s for st, _ in placements.values())
        protected = False
        if not occupied:
            for comp in circuit.components:
                pair = pin_pair(comp.ref)
                if pair and min(pair[0][0], pair[1][0]) < s < max(pair[0][0], pair[1][0]):
                    protected = True
                    break
        if occupied or protected:
            s += 1
            continue
        placements = {key: (st - 1 if st > s else st, p)
                      for key, (st, p) in placements.items()}

    # (c) delete empty columns, protecting spans and cut gaps
    c = 2
    while c <= max(p for _, p in placements.values()):
        occupied = any(p == c for _, p in placements.values())
        blocked = occupied
        if not blocked:
            for comp in circuit.components:
                pair = pin_pair(comp.ref)
                if pair and min(pair[0][1], pair[1][1]) < c < max(pair[0][1], pair[1][1]):
                    blocked = True
                    break
        if not blocked:
            # a 1-hole gap between two groups must survive as a cut site
            for intervals in _strip_group_intervals(placements, group_of).values():
                spans = sorted(intervals.values())
                for (alo, ahi), (blo, bhi) in zip(spans, spans[1:]):
                    if ahi < c < blo and blo - ahi - 1 <= 1:
                        blocked = True
                        break
                if blocked:
                    break
        if blocked:
            c += 1
            continue
        placements = {key: (st, p - 1 if p > c else p)
                      for key, (st, p) in placements.items()}

    result = Layout(placements=placements, grid=layout.grid)
    residual = check_all(circuit, result, span_table, unsigned_span)
    if residual:  # pragma: no cover - compaction is constraint-preserving
        raise InfeasibleLayoutError(residual)
    return result


# ---------------------------------------------------------------------------
# Cut derivation


def derive_cuts(layout: Layout, circuit: Circuit) -> list[Cut]:
    """One cut per inter-group gap on each strip, right after the left group.

    Requires group intervals to be separable (at least one free hole in
    every gap); never places a cut inside a group's interval.
    """
    violations = check_shared_strip_segments(circuit, layout)
    if violations:
        raise InfeasibleLayoutError(violations)
    group_of = _group_map(circuit)
    cuts: list[Cut] = []
    for s, intervals in sorted(_strip_group_intervals(layout.placements, group_of).items()):
        spans = sorted(intervals.values())
        for (alo, ahi), (blo, bhi) in zip(spans, spans[1:]):
            cuts.append(Cut(strip=s, after_position=ahi))
    return cuts


# ---------------------------------------------------------------------------
# Verification


def _reconstruct_partition(layout: Layout) -> set[frozenset]:
    """Pin groups implied by geometry alone: pins sharing a strip segment
    (between cuts) are electrically connected."""
    cuts_by_strip: dict[int, list[int]] = {}
    for cut in layout.cuts:
        cuts_by_strip.setdefault(cut.strip, []).append(cut.after_position)
    for positions in cuts_by_strip.values():
        positions.sort()
    segments: dict[tuple[int, int], set] = {}
    for key, (s, p) in layout.placements.items():
        index = 0
        for after in cuts_by_strip.get(s, ()):
            if p > after:
                index += 1
            else:
                break
        segments.setdefault((s, index), set()).add(key)
    return {frozenset(pins) for pins in segments.values()}


def verify(
    circuit: Circuit,
    layout: Layout,
    claimed_extent: Optional[BoardExtent] = None,
) -> VerificationReport:
    """Run the four checks; failures are report content, never exceptions.

    1. connectivity: nets reconstructed from strips and cuts equal the
       circuit's nets as a partition of pins (unconnected pins must come
       back as singletons);
    2. pin placement: no multi-pin component with every pin on one strip;
    3. dimensions: the claimed board extent matches the recomputed one;
    4. feasibility: no shared holes, everything inside the claimed extent.
    """
    evidence: list[dict] = []

    expected = {frozenset(members) for members in pin_groups(circuit).values()}
    actual = _reconstruct_partition(layout)
    connectivity_ok = expected == actual
    detail: dict = {"groups_expected": len(expected), "groups_found": len(actual)}
    if not connectivity_ok:
        mism = [sorted(f"{r}.{p}" for r, p in grp) for grp in (actual - expected)]
        detail["unexpected_groups"] = sorted(mism)[:10]
        mism = [sorted(f"{r}.{p}" for r, p in grp) for grp in (expected - actual)]
        detail["missing_groups"] = sorted(mism)[:10]
    evidence.append({"check": "connectivity", "ok": connectivity_ok, **detail})

    bad_comps = []
    for comp in circuit.components:
        if comp.pin_count < 2:
            continue
        strips = {layout.placements[(comp.ref, pin)][0]
                  for pin in range(1, comp.pin_count + 1)
                  if (comp.ref, pin) in layout.placements}
        if len(strips) == 1 and sum(
            1 for pin in range(1, comp.pin_count + 1)
            if (comp.ref, pin) in layout.placements
        ) >= 2:
            bad_comps.append(comp.ref)
    pin_placement_ok = not bad_comps
    evidence.append({"check": "pin_placement", "ok": pin_placement_ok,
                     "single_strip_components": bad_comps})

    if layout.placements:
        recomputed: Optional[BoardExtent] = board_extent(layout)
    else:
        recomputed = None
    dimensions_ok = claimed_extent == recomputed
    evidence.append({
        "check": "dimensions",
        "ok": dimensions_ok,
        "claimed": _extent_obj(claimed_extent),
        "actual": _extent_obj(recomputed),
    })

    holes: dict[tuple[int, int], list] = {}
    for key, hole in layout.placements.items():
        holes.setdefault(hole, []).append(key)
    shared = sorted(h for h, pins in holes.items() if len(pins) > 1)
    outside = []
    if claimed_extent is None:
        outside = sorted(layout.placements)
    else:
        for key, (s, p) in layout.placements.items():
            if not (claimed_extent.min_strip <= s <= claimed_extent.max_strip
                    and claimed_extent.min_position <= p <= claimed_extent.max_position):
                outside.append(key)
    feasibility_ok = not shared and not outside
    evidence.append({"check": "feasibility", "ok": feasibility_ok,
                     "shared_holes": [list(h) for h in shared],
                     "outside_pins": [f"{r}.{p}" for r, p in sorted(outside)]})

    return VerificationReport(
        connectivity_ok=connectivity_ok,
        pin_placement_ok=pin_placement_ok,
        dimensions_ok=dimensions_ok,
        feasibility_ok=feasibility_ok,
        evidence=tuple(evidence),
    )


def _extent_obj(extent: Optional[BoardExtent]) -> Optional[dict]:
    if extent is None:
        return None
    return {
        "min_strip": extent.min_strip,
        "max_strip": extent.max_strip,
        "min_position": extent.min_position,
        "max_position": extent.max_position,
        "width": extent.width,
        "length": extent.length,
        "area": extent.area,
    }
