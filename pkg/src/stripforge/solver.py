"""Exact layout search: feasibility synthesis plus lexicographic optimization.

The search is hierarchical and exact.  Total strip distance and board
width depend only on which strip each connectivity group (net or
unconnected pin) occupies, so the outer level is a branch-and-bound over
group-to-strip assignments in relative coordinates (translation-free,
reflection-broken), bounded by the exact strip distance of decided pairs
plus 1 per undecided two-pin component, by per-strip hole capacity, and
by board-area floors.  For each surviving strip assignment the inner
level packs pin positions by chronological backtracking with forward
conflict checking, growing the board length from its packing lower bound
until the first feasible packing, which is therefore length-optimal.

Phase 1 stops at the first feasible layout; phase 2 runs the full
branch-and-bound warm-started with a feasible incumbent as the upper
bound; one-phase mode is the same search without the warm start.  All
orders are fixed and deterministic; identical inputs give identical
layouts.  Objectives use exact integer arithmetic throughout.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum
from itertools import permutations
from math import ceil, factorial
from typing import Callable, Mapping, Optional

from .constraints import DEFAULT_SPAN_TABLE, Propagator, check_all, pin_groups
from .layout import GridConfig, Layout, ObjectiveTuple, objective_tuple
from .netlist import Circuit, ComponentKind

__all__ = [
    "SolveMode",
    "SolveStatus",
    "SolveConfig",
    "SolveResult",
    "solve",
    "solve_phase1",
    "solve_phase2",
    "brute_force_solve",
    "BRUTE_FORCE_GUARD",
]

# Raw assignment-count ceiling for the exhaustive oracle.
BRUTE_FORCE_GUARD = 20_000_000

_TIME_CHECK_MASK = 0xFF


class SolveMode(str, Enum):
    TWO_PHASE = "two_phase"
    ONE_PHASE = "one_phase"


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE_ONLY = "feasible_only"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class SolveConfig:
    grid: GridConfig = GridConfig()
    mode: SolveMode = SolveMode.TWO_PHASE
    time_limit: Optional[float] = None
    unsigned_span: bool = False
    span_table: Optional[Mapping[ComponentKind, int]] = None

    def __post_init__(self):
        object.__setattr__(self, "mode", SolveMode(self.mode))
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be > 0 when present")


@dataclass(frozen=True)
class SolveResult:
    status: SolveStatus
    layout: Optional[Layout] = None
    objective: Optional[ObjectiveTuple] = None
    phase1_time: float = 0.0
    phase2_time: float = 0.0
    total_time: float = 0.0
    note: str = ""


class _Timeout(Exception):
    pass


class _FoundFeasible(Exception):
    pass


class _PackBudget(Exception):
    pass


_PACK_BUDGET = 20_000  # nodes per packing attempt before escalation


def _group_sort_key(key) -> tuple:
    if isinstance(key, int):
        return (0, key, "", 0)
    return (1, 0, key[1], key[2])


def _edge_excess(partner_strips: list[int]) -> int:
    """Cost beyond 1-per-edge for a group joined to these decided strips.

    The group must avoid its partners' strips, so the reachable minimum of
    the summed distances can exceed the edge count (for example around a
    triangle whose other two corners are already adjacent)."""
    if not partner_strips:
        return 0
    lo = min(partner_strips) - 1
    hi = max(partner_strips) + 1
    taken = set(partner_strips)
    best = None
    for r in range(lo, hi + 1):
        if r in taken:
            continue
        total = sum(abs(r - v) for v in partner_strips)
        if best is None or total < best:
            best = total
    return best - len(partner_strips)


class _Search:
    """One hierarchical search over group strips and pin positions."""

    def __init__(self, circuit: Circuit, config: SolveConfig, optimize: bool,
                 incumbent: Optional[Layout] = None,
                 on_improvement: Optional[Callable[[ObjectiveTuple], None]] = None):
        self.circuit = circuit
        self.config = config
        self.grid = config.grid
        self.optimize = optimize
        self.on_improvement = on_improvement

        groups = pin_groups(circuit)
        self.group_members = {g: tuple(m) for g, m in groups.items()}
        self.group_size = {g: len(m) for g, m in groups.items()}
        self.group_of: dict[tuple[str, int], object] = {}
        for g, members in groups.items():
            for member in members:
                self.group_of[member] = g
        self.n_groups = len(groups)
        self.n_pins = circuit.pin_total

        table = DEFAULT_SPAN_TABLE if config.span_table is None else config.span_table
        self.span_of: dict[str, int] = {
            c.ref: table[c.kind] for c in circuit.components
            if c.kind in table and c.pin_count >= 2
        }

        # Two-pin components as edges between the groups of pins 1 and 2.
        self.pairs: list[tuple[str, object, object]] = []
        self.touching: dict[object, list[int]] = {}
        self.statically_infeasible = False
        for comp in circuit.components:
            if comp.pin_count < 2:
                continue
            g1 = self.group_of[(comp.ref, 1)]
            g2 = self.group_of[(comp.ref, 2)]
            if g1 == g2:
                # one net holding both pins contradicts the distinct-strip rule
                self.statically_infeasible = True
            ci = len(self.pairs)
            self.pairs.append((comp.ref, g1, g2))
            self.touching.setdefault(g1, []).append(ci)
            if g2 != g1:
                self.touching.setdefault(g2, []).append(ci)

        self.w_cap = min(self.grid.max_strips, max(1, self.n_groups))
        slack = sum(span - 1 for span in self.span_of.values())
        self.p_cap = min(self.grid.max_positions,
                         max(1, self.n_pins + slack + max(0, self.n_groups - 1)))
        self.min_width = 2 if self.pairs else (1 if self.n_pins else 0)
        self.min_len = max([s + 1 for s in self.span_of.values()], default=1)

        self.order = self._group_order()
        self.single_from = self._interchangeable_tail()

        # Level-A state: relative strip per group, per-strip occupancy.
        self.rel: dict[object, int] = {}
        self.strip_total: dict[int, int] = {}
        self.strip_count: dict[int, int] = {}
        self.max_load = 0
        self.rel_min: Optional[int] = None
        self.rel_max: Optional[int] = None
        self.contrib = [1] * len(self.pairs)
        self.td_lb = len(self.pairs)
        # Assigned-partner strips per unassigned group: the group's edges to
        # them cost at least min over r (excluding those strips, which the
        # distinct-strip rule forbids) of the summed distances, which beats
        # the base 1-per-edge count around triangles and tight clusters.
        self.partner_rels: dict[object, list[int]] = {g: [] for g in self.group_members}
        self.corr: dict[object, int] = {g: 0 for g in self.group_members}
        self.corr_sum = 0
        # Edge-disjoint triangles of the pair graph cost one extra unit of
        # strip distance each (three mutually distinct strips cannot be
        # pairwise adjacent).  The credit is claimed only while all three
        # corners are unassigned, which keeps it disjoint from the
        # assigned-partner corrections above.
        self.triangles = self._edge_disjoint_triangles()
        self.tri_free: list[int] = [3] * len(self.triangles)
        self.tri_of: dict[object, list[int]] = {}
        for ti, (a, b, c) in enumerate(self.triangles):
            for g in (a, b, c):
                self.tri_of.setdefault(g, []).append(ti)
        self.tri_active = len(self.triangles)
        self._trail: list[tuple] = []

        self.best_tuple: Optional[tuple[int, int, int]] = None
        self.best_placements: Optional[dict] = None
        if incumbent is not None:
            self.best_tuple = objective_tuple(incumbent, circuit).as_tuple()
            self.best_placements = dict(incumbent.placements)

        self.nodes = 0
        self.deadline: Optional[float] = None
        self.timed_out = False
        self.pack_budget = _PACK_BUDGET
        self.aborted_any = False
        # strip assignments whose packing ran out of budget while still
        # looking competitive; revisited with bigger budgets after the sweep
        self.deferred: list[tuple[dict, int, int, int]] = []

    def _edge_disjoint_triangles(self) -> list[tuple]:
        adjacency: dict[object, dict[object, list[int]]] = {}
        for ci, (_, g1, g2) in enumerate(self.pairs):
            if g1 == g2:
                continue
            adjacency.setdefault(g1, {}).setdefault(g2, []).append(ci)
            adjacency.setdefault(g2, {}).setdefault(g1, []).append(ci)
        used_edges: set[int] = set()
        triangles: list[tuple] = []
        for a in sorted(adjacency, key=_group_sort_key):
            for b in sorted(adjacency[a], key=_group_sort_key):
                if _group_sort_key(b) <= _group_sort_key(a):
                    continue
                for c in sorted(adjacency[a], key=_group_sort_key):
                    if _group_sort_key(c) <= _group_sort_key(b):
                        continue
                    if c not in adjacency.get(b, {}):
                        continue
                    sides = []
                    for u, v in ((a, b), (b, c), (a, c)):
                        free = [ci for ci in adjacency[u][v] if ci not in used_edges]
                        if not free:
                            break
                        sides.append(free[0])
                    if len(sides) == 3:
                        used_edges.update(sides)
                        triangles.append((a, b, c))
        return triangles

    # -- deterministic orders ------------------------------------------------

    def _group_order(self) -> list:
        degree = {g: 0 for g in self.group_members}
        for _, g1, g2 in self.pairs:
            degree[g1] += 1
            if g2 != g1:
                degree[g2] += 1
        edged = [g for g in self.group_members if degree[g] > 0 or self.group_size[g] > 1]
        singles = [g for g in self.group_members
                   if degree[g] == 0 and self.group_size[g] == 1]
        order: list = []
        placed: set = set()
        neighbors: dict[object, set] = {g: set() for g in self.group_members}
        for _, g1, g2 in self.pairs:
            if g1 != g2:
                neighbors[g1].add(g2)
                neighbors[g2].add(g1)

        def pick(candidates):
            return min(candidates, key=lambda g: (
                -len(neighbors[g] & placed),
                -degree[g],
                -self.group_size[g],
                _group_sort_key(g),
            ))

        remaining = set(edged)
        while remaining:
            g = pick(remaining)
            order.append(g)
            placed.add(g)
            remaining.discard(g)
        order.extend(sorted(singles, key=_group_sort_key))
        return order

    def _interchangeable_tail(self) -> int:
        """Index where the trailing edge-free singleton groups start."""
        i = len(self.order)
        while i > 0:
            g = self.order[i - 1]
            if self.group_size[g] == 1 and g not in self.touching:
                i -= 1
            else:
                break
        return i

    # -- level A bookkeeping --------------------------------------------------

    def _assign(self, g, r: int) -> None:
        total = self.strip_total.get(r, 0)
        count = self.strip_count.get(r, 0)
        changed: list[tuple[int, int]] = []
        partner_changes: list[tuple] = []
        frame = (g, r, total, count, self.max_load, self.rel_min, self.rel_max,
                 changed, self.corr[g], partner_changes)
        self.strip_total[r] = total + self.group_size[g]
        self.strip_count[r] = count + 1
        load = self.strip_total[r] + self.strip_count[r] - 1
        if load > self.max_load:
            self.max_load = load
        if self.rel_min is None or r < self.rel_min:
            self.rel_min = r
        if self.rel_max is None or r > self.rel_max:
            self.rel_max = r
        self.rel[g] = r
        self.corr_sum -= self.corr[g]
        self.corr[g] = 0
        for ti in self.tri_of.get(g, ()):
            self.tri_free[ti] -= 1
            if self.tri_free[ti] == 2:
                self.tri_active -= 1
        for ci in self.touching.get(g, ()):
            _, g1, g2 = self.pairs[ci]
            other = g2 if g1 == g else g1
            r_other = self.rel.get(other)
            if r_other is not None:
                new = max(1, abs(r - r_other)) if other != g else 1
                if new != self.contrib[ci]:
                    changed.append((ci, self.contrib[ci]))
                    self.td_lb += new - self.contrib[ci]
                    self.contrib[ci] = new
            else:
                partner_changes.append((other, self.corr[other]))
                self.partner_rels[other].append(r)
                new_corr = _edge_excess(self.partner_rels[other])
                self.corr_sum += new_corr - self.corr[other]
                self.corr[other] = new_corr
        self._trail.append(frame)

    def _unassign(self) -> None:
        (g, r, total, count, max_load, rel_min, rel_max,
         changed, old_corr_g, partner_changes) = self._trail.pop()
        if total == 0:
            del self.strip_total[r]
            del self.strip_count[r]
        else:
            self.strip_total[r] = total
            self.strip_count[r] = count
        self.max_load = max_load
        self.rel_min = rel_min
        self.rel_max = rel_max
        del self.rel[g]
        for ti in self.tri_of.get(g, ()):
            self.tri_free[ti] += 1
            if self.tri_free[ti] == 3:
                self.tri_active += 1
        self.corr_sum += old_corr_g
        self.corr[g] = old_corr_g
        for ci, old in changed:
            self.td_lb += old - self.contrib[ci]
            self.contrib[ci] = old
        for other, old_corr in reversed(partner_changes):
            self.partner_rels[other].pop()
            self.corr_sum += old_corr - self.corr[other]
            self.corr[other] = old_corr

    def _td_if(self, g, r: int) -> int:
        """Full strip-distance lower bound were ``g`` assigned to ``r``."""
        td = self.td_lb + self.corr_sum - self.corr[g] + self.tri_active
        for ti in self.tri_of.get(g, ()):
            if self.tri_free[ti] == 3:
                td -= 1
        seen: dict[object, int] = {}
        for ci in self.touching.get(g, ()):
            _, g1, g2 = self.pairs[ci]
            other = g2 if g1 == g else g1
            r_other = self.rel.get(other)
            if r_other is not None:
                new = max(1, abs(r - r_other)) if other != g else 1
                td += new - self.contrib[ci]
            else:
                seen[other] = seen.get(other, 0) + 1
        for other, extra in seen.items():
            rels = self.partner_rels[other]
            rels.extend([r] * extra)
            td += _edge_excess(rels) - self.corr[other]
            del rels[-extra:]
        return td

    # -- search ---------------------------------------------------------------

    def run(self, time_limit: Optional[float]) -> None:
        if self.statically_infeasible:
            return
        if time_limit is not None:
            self.deadline = time.perf_counter() + time_limit
        if not self.optimize:
            placements = self._construct_feasible()
            if placements is not None:
                self.best_placements = placements
                return
        try:
            while True:
                self.aborted_any = False
                self._dfs(0)
                if self.optimize:
                    self._drain_deferred()
                    break
                if self.best_placements is not None or not self.aborted_any:
                    break  # solved, or genuine exhaustion: infeasible
                # every remaining strip assignment had an unresolved packing;
                # retry them with a larger budget (completeness, not speed)
                self.pack_budget *= 16
        except _Timeout:
            self.timed_out = True
        except _FoundFeasible:
            pass

    def _drain_deferred(self) -> None:
        """Resolve budget-aborted strip assignments that could still win.

        Most entries die to the bound check once better incumbents exist;
        survivors are retried with geometrically growing budgets, so the
        optimum is eventually proven exactly.
        """
        budget = self.pack_budget * 4
        while self.deferred:
            queue = sorted(self.deferred, key=lambda e: (e[2], e[1], sorted(
                (str(k), v) for k, v in e[0].items())))
            self.deferred = []
            for strips, width, td, length in queue:
                if self.best_tuple is not None and (
                        td, width * length, width) >= self.best_tuple:
                    continue
                self._resolve_sigma(strips, width, td, length, budget)
            budget *= 4

    def _construct_feasible(self) -> Optional[dict]:
        """O(n) feasibility construction: one group per strip.

        Fillers and span pin 1s take the next free position per strip;
        span pin 2s follow at max(next free, pin 1 + span).  With private
        strips there are no separability or net constraints left, so the
        result is feasible whenever everything stays inside the grid.
        """
        if self.n_groups > self.grid.max_strips:
            return None
        strip_of = {g: i + 1 for i, g in enumerate(self.order)}
        next_free = {g: 1 for g in self.order}
        placements: dict[tuple[str, int], tuple[int, int]] = {}
        deferred: list[tuple[str, int]] = []
        for g in self.order:
            for key in sorted(self.group_members[g]):
                ref, pin = key
                if ref in self.span_of and pin == 2:
                    deferred.append(key)
                    continue
                placements[key] = (strip_of[g], next_free[g])
                next_free[g] += 1
        for ref, pin in deferred:
            g = self.group_of[(ref, pin)]
            span = self.span_of[ref]
            partner = placements[(ref, 1)]
            pos = max(next_free[g], partner[1] + span)
            placements[(ref, pin)] = (strip_of[g], pos)
            next_free[g] = pos + 1
        if any(p > self.grid.max_positions for _, p in placements.values()):
            return None
        return placements

    def _values(self, idx: int) -> list[int]:
        """Candidate relative strips for the group at order position idx."""
        span = self.w_cap - 1
        if idx == 0:
            return [0]
        if not self.rel or all(r == 0 for r in self.rel.values()):
            lo, hi = 0, span  # reflection symmetry: first offset is positive
        else:
            lo, hi = -span, span
        if idx >= self.single_from:
            # interchangeable singletons grow the extent at most one strip
            # at a time; together with the no-interior-gap completion rule
            # this still reaches every canonical assignment
            lo = max(lo, self.rel_min - 1)
            hi = min(hi, self.rel_max + 1)
        # spiral outward from the nearest assigned partner (or 0)
        center = 0
        for ci in self.touching.get(self.order[idx], ()):
            _, g1, g2 = self.pairs[ci]
            other = g2 if g1 == self.order[idx] else g1
            if other in self.rel:
                center = self.rel[other]
                break
        center = min(max(center, lo), hi)
        out = [center]
        step = 1
        while len(out) < hi - lo + 1:
            if center + step <= hi:
                out.append(center + step)
            if center - step >= lo:
                out.append(center - step)
            step += 1
        return out

    def _dfs(self, idx: int) -> None:
        self.nodes += 1
        if self.deadline is not None and (self.nodes & _TIME_CHECK_MASK) == 0:
            if time.perf_counter() > self.deadline:
                raise _Timeout
        if idx == len(self.order):
            self._complete()
            return
        g = self.order[idx]
        size = self.group_size[g]
        best = self.best_tuple
        bounding = self.optimize and best is not None
        partner_rels = set()
        for ci in self.touching.get(g, ()):
            _, g1, g2 = self.pairs[ci]
            other = g2 if g1 == g else g1
            if other in self.rel:
                partner_rels.add(self.rel[other])
        for r in self._values(idx):
            if r in partner_rels:
                continue  # a two-pin component cannot collapse onto one strip
            total = self.strip_total.get(r, 0)
            count = self.strip_count.get(r, 0)
            new_load = total + size + count  # + (count+1) - 1
            if new_load > self.p_cap:
                continue
            nmin = r if self.rel_min is None else min(self.rel_min, r)
            nmax = r if self.rel_max is None else max(self.rel_max, r)
            width = nmax - nmin + 1
            if width > self.w_cap:
                continue
            if bounding:
                td_after = self._td_if(g, r)
                width_lb = max(width, self.min_width)
                len_lb = max(self.max_load, new_load, self.min_len,
                             ceil(self.n_pins / self.w_cap))
                area_lb = max(self.n_pins, width_lb * len_lb)
                if (td_after, area_lb, width_lb) >= best:
                    continue
            self._assign(g, r)
            self._dfs(idx + 1)
            self._unassign()

    def _complete(self) -> None:
        rel_values = set(self.rel.values())
        width = (self.rel_max - self.rel_min + 1) if self.rel else 0
        if len(rel_values) != width:
            return  # interior empty strip: a compacted equivalent is also visited
        strips = {g: r - self.rel_min + 1 for g, r in self.rel.items()}
        td = self.td_lb
        len_lb = max(self.max_load, self.min_len, ceil(self.n_pins / max(width, 1)))
        if not self.optimize:
            # Feasibility wants the loosest box, not the tightest: pack at
            # full length (easy), leaving compaction to normalization and
            # the optimization phase.  run() escalates budgets if every
            # assignment is left unresolved.
            status, placements = self._try_lengths(strips, width, self.p_cap)
            if status == "sat":
                self.best_placements = placements
                raise _FoundFeasible
            if status == "abort":
                self.aborted_any = True
            return
        self._resolve_sigma(strips, width, td, len_lb, self.pack_budget)

    def _resolve_sigma(self, strips: dict, width: int, td: int,
                       len_lb: int, budget: int) -> None:
        """Find the minimal feasible length for one strip assignment.

        Grows the length from its packing lower bound; the first feasible
        packing is length-minimal because any shorter layout would fit the
        smaller box.  A budget-aborted attempt defers the assignment when
        it could still beat the incumbent (resolved later with a larger
        budget), or drops it when it provably cannot.
        """
        best = self.best_tuple
        if best is not None and td > best[0]:
            return
        if best is not None and td == best[0]:
            area_star, width_star = best[1], best[2]
            area_budget = area_star if width < width_star else area_star - 1
            len_hi = min(self.p_cap, area_budget // max(width, 1))
        else:
            len_hi = self.p_cap
        length = len_lb
        while length <= len_hi:
            status, placements = self._try_lengths(strips, width, length, budget)
            if status == "sat":
                found = (td, width * length, width)
                if self.best_tuple is None or found < self.best_tuple:
                    self.best_tuple = found
                    self.best_placements = placements
                    if self.on_improvement is not None:
                        self.on_improvement(ObjectiveTuple(*found))
                return  # first feasible length is minimal for this assignment
            if status == "unsat":
                length += 1
                continue
            if self.best_tuple is not None and (
                    td, width * length, width) >= self.best_tuple:
                return  # cannot beat the incumbent even at this length
            self.deferred.append((dict(strips), width, td, length))
            return

    def _try_lengths(self, strips, width: int, length: int,
                     budget: Optional[int] = None) -> tuple[str, Optional[dict]]:
        """One packing attempt per portfolio ordering at a fixed length."""
        if budget is None:
            budget = self.pack_budget
        aborted = False
        for ordering in range(3):
            status, placements = self._pack(strips, width, length, budget, ordering)
            if status == "sat":
                return ("sat", placements)
            if status == "unsat":
                return ("unsat", None)  # a proof from any ordering is final
            aborted = True
        return ("abort", None) if aborted else ("unsat", None)

    # -- level B: position packing --------------------------------------------

    def _pack(self, strips: Mapping, width: int, length: int,
              budget: Optional[int] = None,
              ordering: int = 0) -> tuple[str, Optional[dict]]:
        """Pack pin positions into [1..length] under a fixed strip map.

        Returns ("sat", placements), ("unsat", None), or ("abort", None)
        when the node budget ran out before a proof either way.

        The outer layer enumerates the left-to-right order of the groups
        on each strip (interchangeable groups deduplicated); an order
        yields per-pin position windows from block prefix sums, tightened
        to a fixpoint through the span constraints, and usually dies right
        there when infeasible.  Orders that survive go to a backtracking
        position search.  The ordering index varies the deterministic
        iteration order, nothing else.
        """
        loads: dict[int, int] = {}
        counts: dict[int, int] = {}
        for g, s in strips.items():
            loads[s] = loads.get(s, 0) + self.group_size[g]
            counts[s] = counts.get(s, 0) + 1
        for s in loads:
            if loads[s] + counts[s] - 1 > length:
                return ("unsat", None)

        unsigned = self.config.unsigned_span
        node_limit = None if budget is None else self.nodes + budget

        members_on_strip: dict[int, list] = {}
        for g, s in strips.items():
            members_on_strip.setdefault(s, []).append(g)
        size_sign = 1 if ordering == 1 else -1
        for s in members_on_strip:
            members_on_strip[s].sort(
                key=lambda g: (size_sign * self.group_size[g], _group_sort_key(g)))

        base_lo: dict[tuple[str, int], int] = {}
        base_hi: dict[tuple[str, int], int] = {}
        for g in strips:
            for key in self.group_members[g]:
                ref, pin = key
                lo, hi = 1, length
                if not unsigned and pin in (1, 2):
                    span = self.span_of.get(ref)
                    if span is not None:
                        if pin == 1:
                            hi = length - span
                        else:
                            lo = 1 + span
                if lo > hi:
                    return ("unsat", None)
                base_lo[key] = lo
                base_hi[key] = hi

        span_pairs = [] if unsigned else [
            (ref, span) for ref, span in self.span_of.items() if (ref, 1) in base_lo]

        def span_fixpoint(wlo: dict, whi: dict) -> bool:
            for _ in range(8):
                changed = False
                for ref, span in span_pairs:
                    k1, k2 = (ref, 1), (ref, 2)
                    lo2 = wlo[k1] + span
                    if lo2 > wlo[k2]:
                        wlo[k2] = lo2
                        changed = True
                    hi1 = whi[k2] - span
                    if hi1 < whi[k1]:
                        whi[k1] = hi1
                        changed = True
                    if wlo[k1] > whi[k1] or wlo[k2] > whi[k2]:
                        return False
                if not changed:
                    break
            return True

        # Candidate group orders per strip.  Groups of equal size with no
        # span pins are interchangeable; only their canonical relative
        # order is kept.
        def interch_class(g):
            for key in self.group_members[g]:
                if key[0] in self.span_of and key[1] in (1, 2):
                    return None
            return self.group_size[g]

        perms_by_strip: dict[int, list[tuple]] = {}
        total_combos = 1
        fallback = False
        for s, groups_here in members_on_strip.items():
            if len(groups_here) == 1:
                perms_by_strip[s] = [tuple(groups_here)]
                continue
            if factorial(len(groups_here)) > 50_000:
                fallback = True
                break
            classes = {g: interch_class(g) for g in groups_here}
            rank = {g: i for i, g in enumerate(groups_here)}
            valid = []
            for perm in permutations(groups_here):
                last: dict = {}
                for g in perm:
                    cls = classes[g]
                    if cls is not None:
                        prev = last.get(cls)
                        if prev is not None and rank[g] < rank[prev]:
                            break
                        last[cls] = g
                else:
                    valid.append(perm)
            perms_by_strip[s] = valid
            total_combos *= len(valid)
            if total_combos > 5_000:
                fallback = True
                break

        strip_list = sorted(members_on_strip,
                            key=lambda s: ((loads[s], s) if ordering == 2
                                           else (-loads[s], s)))

        if fallback:
            # too many orders to enumerate: search positions directly
            # (complete, since base windows are necessary conditions only)
            wlo, whi = dict(base_lo), dict(base_hi)
            if not span_fixpoint(wlo, whi):
                return ("unsat", None)
            order = [(s, tuple(members_on_strip[s])) for s in strip_list]
            return self._pack_positions(strips, width, length, node_limit,
                                        order, wlo, whi)

        sizes_cache = self.group_size
        found: dict = {}

        def choose(idx: int, wlo: dict, whi: dict, chosen: list) -> bool:
            self.nodes += 1
            if (self.nodes & _TIME_CHECK_MASK) == 0:
                if self.deadline is not None and time.perf_counter() > self.deadline:
                    raise _Timeout
                if node_limit is not None and self.nodes > node_limit:
                    raise _PackBudget
            if idx == len(strip_list):
                status, placements = self._pack_positions(
                    strips, width, length, node_limit, chosen, dict(wlo), dict(whi))
                if status == "sat":
                    found["placements"] = placements
                    return True
                if status == "abort":
                    raise _PackBudget
                return False
            s = strip_list[idx]
            for perm in perms_by_strip[s]:
                nlo = dict(wlo)
                nhi = dict(whi)
                viable = True
                prefix = 0
                k = len(perm)
                total_here = loads[s]
                for i, g in enumerate(perm):
                    size = sizes_cache[g]
                    block_lo = 1 + prefix + i
                    block_hi = length - (total_here - prefix - size) - (k - 1 - i)
                    prefix += size
                    for key in self.group_members[g]:
                        if block_lo > nlo[key]:
                            nlo[key] = block_lo
                        if block_hi < nhi[key]:
                            nhi[key] = block_hi
                        if nlo[key] > nhi[key]:
                            viable = False
                            break
                    if not viable:
                        break
                if not viable or not span_fixpoint(nlo, nhi):
                    continue
                if choose(idx + 1, nlo, nhi, chosen + [(s, perm)]):
                    return True
            return False

        try:
            if choose(0, dict(base_lo), dict(base_hi), []):
                return ("sat", found["placements"])
            return ("unsat", None)
        except _PackBudget:
            return ("abort", None)

    def _pack_positions(self, strips: Mapping, width: int, length: int,
                        node_limit: Optional[int], order: list,
                        win_lo: dict, win_hi: dict) -> tuple[str, Optional[dict]]:
        """Backtracking position assignment under fixed strips and windows."""
        unsigned = self.config.unsigned_span
        prop = Propagator(self.circuit, GridConfig(max(width, 1), length),
                          self.config.span_table, self.config.unsigned_span)
        prop.group_strip.update(strips)
        for g in strips:
            prop.group_count[g] = 0

        vars_: list[tuple[str, int]] = []
        for _s, perm in order:
            for g in perm:
                vars_.extend(sorted(self.group_members[g]))
        remaining = {g: self.group_size[g] for g in strips}

        # Non-span pins of one group are interchangeable: forcing them into
        # ascending positions removes factorial duplicate orderings.
        def is_filler(key: tuple[str, int]) -> bool:
            return not (key[0] in self.span_of and key[1] in (1, 2))

        prev_filler = [-1] * len(vars_)
        for i in range(1, len(vars_)):
            if (is_filler(vars_[i]) and is_filler(vars_[i - 1])
                    and self.group_of[vars_[i]] == self.group_of[vars_[i - 1]]):
                prev_filler[i] = i - 1

        # span components with pins on a given strip, for partner lookahead
        span_on_strip: dict[int, list[str]] = {}
        for ref in self.span_of:
            for pin in (1, 2):
                s = strips.get(self.group_of.get((ref, pin)))
                if s is not None:
                    span_on_strip.setdefault(s, []).append(ref)

        members_on_strip: dict[int, list] = {}
        for g, s in strips.items():
            members_on_strip.setdefault(s, []).append(g)

        def strip_windows_ok(s: int) -> bool:
            stats = []
            total = -1
            for g in members_on_strip[s]:
                maxlo = 0
                minhi = length + 1
                for key in self.group_members[g]:
                    if win_lo[key] > maxlo:
                        maxlo = win_lo[key]
                    if win_hi[key] < minhi:
                        minhi = win_hi[key]
                need = maxlo - minhi + 1
                size = self.group_size[g]
                total += (need if need > size else size) + 1
                stats.append((maxlo, minhi))
            if total > length:
                return False
            for i in range(len(stats)):
                maxlo_i, minhi_i = stats[i]
                for j in range(i + 1, len(stats)):
                    maxlo_j, minhi_j = stats[j]
                    if maxlo_i + 2 > minhi_j and maxlo_j + 2 > minhi_i:
                        return False
            return True

        def partner_window_ok(ref: str) -> bool:
            span = self.span_of[ref]
            p1 = prop.placements.get((ref, 1))
            p2 = prop.placements.get((ref, 2))
            if (p1 is None) == (p2 is None):
                return True
            if unsigned:
                return True  # window spans both sides; conflict checks suffice
            if p2 is None:
                pin, t = 2, strips[self.group_of[(ref, 2)]]
                lo, hi = p1[1] + span, length
            else:
                pin, t = 1, strips[self.group_of[(ref, 1)]]
                lo, hi = 1, p2[1] - span
            key = (ref, pin)
            lo = max(lo, win_lo[key])
            hi = min(hi, win_hi[key])
            if lo > hi:
                return False
            return prop.group_can_extend(t, self.group_of[key], length, lo, hi)

        def tighten(key, lo: int, hi: int, wtrail: list) -> bool:
            olo, ohi = win_lo[key], win_hi[key]
            nlo = lo if lo > olo else olo
            nhi = hi if hi < ohi else ohi
            if nlo != olo or nhi != ohi:
                wtrail.append((key, olo, ohi))
                win_lo[key] = nlo
                win_hi[key] = nhi
            return nlo <= nhi

        def propagate(key, p: int, wtrail: list) -> bool:
            ref, pin = key
            ok = tighten(key, p, p, wtrail)
            affected = [strips[self.group_of[key]]]
            if ok and not unsigned and pin in (1, 2):
                span = self.span_of.get(ref)
                if span is not None:
                    pkey = (ref, 2 if pin == 1 else 1)
                    if pin == 1:
                        ok = tighten(pkey, p + span, length, wtrail)
                    else:
                        ok = tighten(pkey, 1, p - span, wtrail)
                    affected.append(strips[self.group_of[pkey]])
            if not ok:
                return False
            for t in affected:
                if not strip_windows_ok(t):
                    return False
            return True

        for s in members_on_strip:
            if not strip_windows_ok(s):
                return ("unsat", None)

        placements: Optional[dict] = None

        def dfs(depth: int) -> bool:
            nonlocal placements
            self.nodes += 1
            if (self.nodes & _TIME_CHECK_MASK) == 0:
                if self.deadline is not None and time.perf_counter() > self.deadline:
                    raise _Timeout
                if node_limit is not None and self.nodes > node_limit:
                    raise _PackBudget
            if depth == len(vars_):
                placements = dict(prop.placements)
                return True
            key = vars_[depth]
            ref, pin = key
            g = self.group_of[key]
            s = strips[g]
            p_lo, p_hi = win_lo[key], win_hi[key]
            if prev_filler[depth] >= 0:
                p_lo = max(p_lo, prop.placements[vars_[prev_filler[depth]]][1] + 1)
            for p in range(p_lo, p_hi + 1):
                if prop.conflict(ref, pin, s, p) is not None:
                    continue
                prop.place_unchecked(ref, pin, s, p)
                remaining[g] -= 1
                wtrail: list = []
                ok = propagate(key, p, wtrail)
                if ok:
                    intervals = prop.strip_intervals.get(s, {})
                    for other in intervals:
                        if remaining[other] > 0 and not prop.group_can_extend(
                                s, other, length):
                            ok = False
                            break
                if ok:
                    for sref in span_on_strip.get(s, ()):
                        if not partner_window_ok(sref):
                            ok = False
                            break
                if ok and dfs(depth + 1):
                    return True
                for wkey, olo, ohi in reversed(wtrail):
                    win_lo[wkey] = olo
                    win_hi[wkey] = ohi
                remaining[g] += 1
                prop.pop()
            return False

        try:
            if dfs(0):
                return ("sat", placements)
            return ("unsat", None)
        except _PackBudget:
            return ("abort", None)

    def best_layout(self) -> Optional[Layout]:
        if self.best_placements is None:
            return None
        return Layout(placements=self.best_placements, grid=self.grid)


def _empty_result(circuit: Circuit, config: SolveConfig, status: SolveStatus) -> SolveResult:
    layout = Layout(placements={}, grid=config.grid)
    return SolveResult(status=status, layout=layout,
                       objective=objective_tuple(layout, circuit))


def solve_phase1(circuit: Circuit, config: SolveConfig) -> SolveResult:
    """Find any feasible layout (or prove there is none)."""
    t0 = time.perf_counter()
    if circuit.pin_total == 0:
        result = _empty_result(circuit, config, SolveStatus.FEASIBLE_ONLY)
        elapsed = time.perf_counter() - t0
        return SolveResult(status=result.status, layout=result.layout,
                           objective=result.objective,
                           phase1_time=elapsed, total_time=elapsed)
    if circuit.pin_total > config.grid.max_strips * config.grid.max_positions:
        elapsed = time.perf_counter() - t0
        return SolveResult(status=SolveStatus.INFEASIBLE, phase1_time=elapsed,
                           total_time=elapsed,
                           note=f"grid too small: {circuit.pin_total} pins exceed "
                                f"{config.grid.max_strips}x{config.grid.max_positions} holes")
    search = _Search(circuit, config, optimize=False)
    search.run(config.time_limit)
    elapsed = time.perf_counter() - t0
    if search.timed_out and search.best_placements is None:
        return SolveResult(status=SolveStatus.TIMEOUT, phase1_time=elapsed, total_time=elapsed)
    layout = search.best_layout()
    if layout is None:
        return SolveResult(status=SolveStatus.INFEASIBLE, phase1_time=elapsed,
                           total_time=elapsed, note="search space exhausted")
    return SolveResult(status=SolveStatus.FEASIBLE_ONLY, layout=layout,
                       objective=objective_tuple(layout, circuit),
                       phase1_time=elapsed, total_time=elapsed)


def solve_phase2(
    circuit: Circuit,
    config: SolveConfig,
    incumbent: Layout,
    on_improvement: Optional[Callable[[ObjectiveTuple], None]] = None,
) -> SolveResult:
    """Branch-and-bound to the lexicographic optimum, starting from a
    feasible incumbent whose objective is the initial upper bound."""
    t0 = time.perf_counter()
    violations = check_all(circuit, incumbent, config.span_table, config.unsigned_span)
    if violations:
        raise ValueError(f"incumbent is infeasible: {violations[0].message}")
    if circuit.pin_total == 0:
        result = _empty_result(circuit, config, SolveStatus.OPTIMAL)
        elapsed = time.perf_counter() - t0
        return SolveResult(status=result.status, layout=result.layout,
                           objective=result.objective,
                           phase2_time=elapsed, total_time=elapsed)
    search = _Search(circuit, config, optimize=True, incumbent=incumbent,
                     on_improvement=on_improvement)
    search.run(config.time_limit)
    elapsed = time.perf_counter() - t0
    layout = search.best_layout()
    status = SolveStatus.TIMEOUT if search.timed_out else SolveStatus.OPTIMAL
    return SolveResult(status=status, layout=layout,
                       objective=ObjectiveTuple(*search.best_tuple),
                       phase2_time=elapsed, total_time=elapsed)


def solve(
    circuit: Circuit,
    config: Optional[SolveConfig] = None,
    on_improvement: Optional[Callable[[ObjectiveTuple], None]] = None,
) -> SolveResult:
    """Run the configured solving pipeline (two-phase by default).

    Both modes are exact: when they report ``optimal`` their objective
    tuples are equal by construction of the search.
    """
    from .postprocess import normalize

    config = config or SolveConfig()
    t0 = time.perf_counter()

    if config.mode is SolveMode.TWO_PHASE:
        r1 = solve_phase1(circuit, config)
        if r1.status is not SolveStatus.FEASIBLE_ONLY:
            total = time.perf_counter() - t0
            return SolveResult(status=r1.status, layout=r1.layout, objective=r1.objective,
                               phase1_time=r1.phase1_time, total_time=total, note=r1.note)
        # A compacted incumbent gives phase 2 a tighter starting bound.
        incumbent = normalize(r1.layout, circuit, span_table=config.span_table,
                              unsigned_span=config.unsigned_span)
        remaining = None
        if config.time_limit is not None:
            remaining = max(config.time_limit - (time.perf_counter() - t0), 0.001)
        phase2_config = SolveConfig(grid=config.grid, mode=config.mode,
                                    time_limit=remaining,
                                    unsigned_span=config.unsigned_span,
                                    span_table=config.span_table)
        r2 = solve_phase2(circuit, phase2_config, incumbent, on_improvement)
        total = time.perf_counter() - t0
        return SolveResult(status=r2.status, layout=r2.layout, objective=r2.objective,
                           phase1_time=r1.phase1_time, phase2_time=r2.phase2_time,
                           total_time=total)

    # One-phase: a single branch-and-bound with no feasibility warm start.
    if circuit.pin_total == 0:
        result = _empty_result(circuit, config, SolveStatus.OPTIMAL)
        total = time.perf_counter() - t0
        return SolveResult(status=result.status, layout=result.layout,
                           objective=result.objective, phase2_time=total, total_time=total)
    if circuit.pin_total > config.grid.max_strips * config.grid.max_positions:
        total = time.perf_counter() - t0
        return SolveResult(status=SolveStatus.INFEASIBLE, phase2_time=total, total_time=total,
                           note="grid too small")
    search = _Search(circuit, config, optimize=True, on_improvement=on_improvement)
    search.run(config.time_limit)
    total = time.perf_counter() - t0
    layout = search.best_layout()
    if search.timed_out:
        objective = ObjectiveTuple(*search.best_tuple) if search.best_tuple else None
        return SolveResult(status=SolveStatus.TIMEOUT, layout=layout, objective=objective,
                           phase2_time=total, total_time=total)
    if layout is None:
        return SolveResult(status=SolveStatus.INFEASIBLE, phase2_time=total, total_time=total,
                           note="search space exhausted")
    return SolveResult(status=SolveStatus.OPTIMAL, layout=layout,
                       objective=ObjectiveTuple(*search.best_tuple),
                       phase2_time=total, total_time=total)


# ---------------------------------------------------------------------------
# Exhaustive oracle


def brute_force_solve(circuit: Circuit, config: Optional[SolveConfig] = None) -> SolveResult:
    """Reference solver: enumerate every assignment, keep the lex minimum.

    Feasibility is decided by first-principles pairwise checks applied as
    each pin is added (sound pruning because every rule is monotone in
    the placed-pin set), giving the same verdict as the batch checkers.
    Guarded to small search spaces; this is a test oracle, not a solver.
    """
    config = config or SolveConfig()
    t0 = time.perf_counter()
    grid = config.grid
    pins = list(circuit.all_pins())
    n = len(pins)
    if (grid.max_strips * grid.max_positions) ** n > BRUTE_FORCE_GUARD:
        raise ValueError("search space too large for the exhaustive oracle")
    if n == 0:
        result = _empty_result(circuit, config, SolveStatus.OPTIMAL)
        total = time.perf_counter() - t0
        return SolveResult(status=result.status, layout=result.layout,
                           objective=result.objective, total_time=total)

    table = DEFAULT_SPAN_TABLE if config.span_table is None else config.span_table
    unsigned = config.unsigned_span

    comp_of: dict[str, object] = {c.ref: c for c in circuit.components}
    index_of = {key: i for i, key in enumerate(pins)}
    group: dict[tuple[str, int], object] = {}
    for net in circuit.nets:
        for member in net.members:
            group[member] = net.id
    for key in pins:
        group.setdefault(key, ("pin",) + key)

    holes = [(s, p) for s in range(1, grid.max_strips + 1)
             for p in range(1, grid.max_positions + 1)]
    placed: list[tuple[int, int]] = []
    best: dict = {"tuple": None, "holes": None}

    def prefix_ok(idx: int, s: int, p: int) -> bool:
        ref, pin = pins[idx]
        g = group[(ref, pin)]
        for j in range(idx):
            js, jp = placed[j]
            jref, jpin = pins[j]
            if js == s and jp == p:
                return False
            if group[(jref, jpin)] == g and js != s:
                return False
            if jref == ref and {pin, jpin} == {1, 2}:
                if js == s:
                    return False
                span = table.get(comp_of[ref].kind)
                if span is not None:
                    delta = (p - jp) if pin == 2 else (jp - p)
                    if unsigned:
                        delta = abs(delta)
                    if delta < span:
                        return False
        # strip sharing: my group's interval versus every other group's
        lo = hi = p
        others: dict = {}
        for j in range(idx):
            js, jp = placed[j]
            if js != s:
                continue
            jg = group[pins[j]]
            if jg == g:
                lo, hi = min(lo, jp), max(hi, jp)
            else:
                olo, ohi = others.get(jg, (jp, jp))
                others[jg] = (min(olo, jp), max(ohi, jp))
        for olo, ohi in others.values():
            if not (olo - hi >= 2 or lo - ohi >= 2):
                return False
        return True

    def leaf_tuple() -> tuple[int, int, int]:
        td = 0
        for ref, comp in comp_of.items():
            if comp.pin_count >= 2:
                s1 = placed[index_of[(ref, 1)]][0]
                s2 = placed[index_of[(ref, 2)]][0]
                td += abs(s1 - s2)
        strips = [s for s, _ in placed]
        cols = [p for _, p in placed]
        width = max(strips) - min(strips) + 1
        area = width * (max(cols) - min(cols) + 1)
        return (td, area, width)

    def enumerate_pins(idx: int) -> None:
        if idx == n:
            found = leaf_tuple()
            if best["tuple"] is None or found < best["tuple"]:
                best["tuple"] = found
                best["holes"] = list(placed)
            return
        for s, p in holes:
            if prefix_ok(idx, s, p):
                placed.append((s, p))
                enumerate_pins(idx + 1)
                placed.pop()

    enumerate_pins(0)
    total = time.perf_counter() - t0
    if best["tuple"] is None:
        return SolveResult(status=SolveStatus.INFEASIBLE, total_time=total,
                           note="exhaustive enumeration found no feasible layout")
    layout = Layout(placements={pins[i]: best["holes"][i] for i in range(n)}, grid=grid)
    return SolveResult(status=SolveStatus.OPTIMAL, layout=layout,
                       objective=ObjectiveTuple(*best["tuple"]), total_time=total)
