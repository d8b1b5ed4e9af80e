"""Grid model, layouts, and the derived board metrics.

A layout assigns every circuit pin to one (strip, position) hole on a
grid of horizontal copper strips.  All objective arithmetic is exact
integer math: total strip distance, board area, and board width form a
lexicographically ordered objective tuple (in that priority order).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

from .netlist import Circuit, IRSchemaError

__all__ = [
    "GridConfig",
    "PinPlacement",
    "Cut",
    "Layout",
    "BoardExtent",
    "ObjectiveTuple",
    "EmptyLayoutError",
    "board_extent",
    "strip_distance",
    "objective_tuple",
    "lex_compare",
    "layout_to_json",
    "json_to_layout",
]


class EmptyLayoutError(ValueError):
    """Raised for metrics that are undefined on a layout with no pins."""


@dataclass(frozen=True)
class GridConfig:
    """Board search space: strips (rows) x positions (holes per strip)."""

    max_strips: int = 30
    max_positions: int = 50

    def __post_init__(self):
        if self.max_strips < 1 or self.max_positions < 1:
            raise ValueError("grid dimensions must be >= 1")


@dataclass(frozen=True)
class PinPlacement:
    ref: str
    pin: int
    strip: int
    position: int


@dataclass(frozen=True)
class Cut:
    """Strip interruption between after_position and after_position + 1."""

    strip: int
    after_position: int


@dataclass(frozen=True)
class Layout:
    """Assignment of pins to holes plus the derived strip cuts.

    ``placements`` maps (ref, pin) -> (strip, position).  Cuts are empty
    until derived by postprocessing.
    """

    placements: Mapping[tuple[str, int], tuple[int, int]]
    grid: GridConfig = GridConfig()
    cuts: tuple[Cut, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "placements", dict(self.placements))

    def __eq__(self, other):
        if not isinstance(other, Layout):
            return NotImplemented
        return (
            dict(self.placements) == dict(other.placements)
            and self.grid == other.grid
            and sorted(self.cuts, key=lambda c: (c.strip, c.after_position))
            == sorted(other.cuts, key=lambda c: (c.strip, c.after_position))
        )

    def pin_placements(self) -> list[PinPlacement]:
        """Placements as records, sorted by (ref, pin)."""
        return [
            PinPlacement(ref=ref, pin=pin, strip=s, position=p)
            for (ref, pin), (s, p) in sorted(self.placements.items())
        ]

    def translated(self, strip_offset: int, position_offset: int) -> "Layout":
        """Shift every placement by a constant offset; cuts are dropped."""
        return Layout(
            placements={
                key: (s + strip_offset, p + position_offset)
                for key, (s, p) in self.placements.items()
            },
            grid=self.grid,
        )


@dataclass(frozen=True)
class BoardExtent:
    """Bounding box of the occupied holes."""

    min_strip: int
    max_strip: int
    min_position: int
    max_position: int

    @property
    def width(self) -> int:
        return self.max_strip - self.min_strip + 1

    @property
    def length(self) -> int:
        return self.max_position - self.min_position + 1

    @property
    def area(self) -> int:
        return self.width * self.length


@dataclass(frozen=True, order=False)
class ObjectiveTuple:
    """Lexicographic objective: strip distance, then area, then width."""

    total_strip_distance: int
    board_area: int
    board_width: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.total_strip_distance, self.board_area, self.board_width)


def board_extent(layout: Layout) -> BoardExtent:
    """Bounding box over placed pins; undefined for an empty layout."""
    if not layout.placements:
        raise EmptyLayoutError("no placements: board extent is undefined")
    strips = [s for s, _ in layout.placements.values()]
    positions = [p for _, p in layout.placements.values()]
    return BoardExtent(
        min_strip=min(strips),
        max_strip=max(strips),
        min_position=min(positions),
        max_position=max(positions),
    )


def strip_distance(layout: Layout, ref: str) -> int:
    """|strip(pin 1) - strip(pin 2)| for the component, 0 if either pin
    is absent (single-pin components contribute nothing to the total)."""
    a = layout.placements.get((ref, 1))
    b = layout.placements.get((ref, 2))
    if a is None or b is None:
        return 0
    return abs(a[0] - b[0])


def objective_tuple(layout: Layout, circuit: Circuit) -> ObjectiveTuple:
    """Objective of a layout; the empty layout scores (0, 0, 0)."""
    td = sum(strip_distance(layout, comp.ref) for comp in circuit.components)
    if not layout.placements:
        return ObjectiveTuple(td, 0, 0)
    extent = board_extent(layout)
    return ObjectiveTuple(td, extent.area, extent.width)


def lex_compare(a: ObjectiveTuple, b: ObjectiveTuple) -> int:
    """-1, 0, or 1 as a orders before, equal to, or after b."""
    ta, tb = a.as_tuple(), b.as_tuple()
    if ta < tb:
        return -1
    if ta > tb:
        return 1
    return 0


# ---------------------------------------------------------------------------
# Layout JSON (interchange between solver, postprocess, render, and CLI)


def layout_to_json(layout: Layout) -> str:
    obj = {
        "grid": {
            "max_strips": layout.grid.max_strips,
            "max_positions": layout.grid.max_positions,
        },
        "placements": [
            {"ref": ref, "pin": pin, "strip": s, "position": p}
            for (ref, pin), (s, p) in sorted(layout.placements.items())
        ],
        "cuts": [
            {"strip": c.strip, "after_position": c.after_position}
            for c in sorted(layout.cuts, key=lambda c: (c.strip, c.after_position))
        ],
    }
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def json_to_layout(text: str) -> Layout:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IRSchemaError(f"invalid JSON: {exc}", "$") from None
    if not isinstance(obj, dict):
        raise IRSchemaError("expected object", "$")
    grid_obj = obj.get("grid")
    if not isinstance(grid_obj, dict):
        raise IRSchemaError("expected object", "$.grid")
    try:
        grid = GridConfig(
            max_strips=int(grid_obj["max_strips"]),
            max_positions=int(grid_obj["max_positions"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise IRSchemaError(f"bad grid: {exc}", "$.grid") from None
    placements: dict[tuple[str, int], tuple[int, int]] = {}
    raw_placements = obj.get("placements")
    if not isinstance(raw_placements, list):
        raise IRSchemaError("expected array", "$.placements")
    for i, raw in enumerate(raw_placements):
        path = f"$.placements[{i}]"
        if not isinstance(raw, dict):
            raise IRSchemaError("expected object", path)
        try:
            key = (str(raw["ref"]), int(raw["pin"]))
            value = (int(raw["strip"]), int(raw["position"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise IRSchemaError(f"bad placement: {exc}", path) from None
        if key in placements:
            raise IRSchemaError(f"duplicate placement for {key[0]}.{key[1]}", path)
        placements[key] = value
    cuts: list[Cut] = []
    raw_cuts = obj.get("cuts", [])
    if not isinstance(raw_cuts, list):
        raise IRSchemaError("expected array", "$.cuts")
    for i, raw in enumerate(raw_cuts):
        path = f"$.cuts[{i}]"
        if not isinstance(raw, dict):
            raise IRSchemaError("expected object", path)
        try:
            cuts.append(Cut(strip=int(raw["strip"]), after_position=int(raw["after_position"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise IRSchemaError(f"bad cut: {exc}", path) from None
    return Layout(placements=placements, grid=grid, cuts=tuple(cuts))
