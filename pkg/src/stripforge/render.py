"""Deterministic SVG and ASCII views of a normalized layout.

Strips are horizontal bands (rows), positions run left to right.  Pins
show as reference initials (ASCII) or labeled pin-to-pin lines (SVG);
cuts show as an ``X`` between two holes; the board boundary is the
bounding rectangle of the normalized layout.  Identical inputs always
produce byte-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional
from xml.sax.saxutils import escape

from .layout import Cut, Layout, board_extent
from .netlist import Circuit

__all__ = ["RenderFormat", "Theme", "RenderOptions", "RenderError", "render"]


class RenderError(ValueError):
    pass


class RenderFormat(str, Enum):
    SVG = "svg"
    ASCII = "ascii"


class Theme(str, Enum):
    LIGHT = "light"
    DARK = "dark"


@dataclass(frozen=True)
class RenderOptions:
    format: RenderFormat = RenderFormat.SVG
    cell_size: int = 24
    show_labels: bool = True
    theme: Theme = Theme.LIGHT

    def __post_init__(self):
        object.__setattr__(self, "format", RenderFormat(self.format))
        object.__setattr__(self, "theme", Theme(self.theme))
        if self.format is RenderFormat.SVG and self.cell_size < 8:
            raise ValueError("cell_size must be >= 8 for SVG output")


_THEMES = {
    Theme.LIGHT: {
        "bg": "#ffffff", "strip": "#d9b38c", "hole": "#ffffff",
        "hole_stroke": "#8a6b4f", "wire": "#1f3a93", "text": "#111111",
        "cut": "#cc2222", "board": "#333333",
    },
    Theme.DARK: {
        "bg": "#1e1e1e", "strip": "#7a5a3a", "hole": "#1e1e1e",
        "hole_stroke": "#caa77a", "wire": "#7aa2f7", "text": "#eeeeee",
        "cut": "#ff6b6b", "board": "#cccccc",
    },
}


def render(
    layout: Layout,
    circuit: Circuit,
    cuts: Optional[Iterable[Cut]] = None,
    options: Optional[RenderOptions] = None,
) -> str:
    """Render a normalized layout; refuses layouts not anchored at (1,1)."""
    options = options or RenderOptions()
    cut_list = sorted(layout.cuts if cuts is None else cuts,
                      key=lambda c: (c.strip, c.after_position))
    if layout.placements:
        extent = board_extent(layout)
        if extent.min_strip != 1 or extent.min_position != 1:
            raise RenderError(
                f"layout is not normalized: origin at "
                f"({extent.min_strip},{extent.min_position}), expected (1,1)"
            )
        width, length = extent.width, extent.length
    else:
        width = length = 0
    if options.format is RenderFormat.ASCII:
        return _render_ascii(layout, circuit, cut_list, options, width, length)
    return _render_svg(layout, circuit, cut_list, options, width, length)


# ---------------------------------------------------------------------------
# ASCII


def _render_ascii(layout, circuit, cuts, options, width, length) -> str:
    if width == 0:
        return ""
    by_hole = {(s, p): ref for (ref, _pin), (s, p) in sorted(layout.placements.items())}
    cut_set = {(c.strip, c.after_position) for c in cuts}
    lines = []
    for s in range(1, width + 1):
        row = []
        for p in range(1, length + 1):
            ref = by_hole.get((s, p))
            row.append(ref[0].upper() if ref else "o")
            if p < length:
                row.append("X" if (s, p) in cut_set else " ")
        lines.append("".join(row))
    if options.show_labels:
        lines.append("")
        for comp in sorted(circuit.components, key=lambda c: c.ref):
            placed = [
                f"{pin}@({s},{p})"
                for pin in range(1, comp.pin_count + 1)
                for (s, p) in [layout.placements.get((comp.ref, pin), (None, None))]
                if s is not None
            ]
            if placed:
                lines.append(f"{comp.ref}: " + " ".join(placed))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# SVG


def _render_svg(layout, circuit, cuts, options, width, length) -> str:
    cell = options.cell_size
    margin = cell
    colors = _THEMES[options.theme]
    canvas_w = 2 * margin + length * cell
    canvas_h = 2 * margin + width * cell

    def cx(p: int) -> float:
        return margin + (p - 0.5) * cell

    def cy(s: int) -> float:
        return margin + (s - 0.5) * cell

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{canvas_w}" '
        f'height="{canvas_h}" viewBox="0 0 {canvas_w} {canvas_h}">',
        f'<rect x="0" y="0" width="{canvas_w}" height="{canvas_h}" '
        f'fill="{colors["bg"]}"/>',
    ]
    band = cell // 2
    for s in range(1, width + 1):
        y = cy(s) - band / 2
        out.append(
            f'<rect x="{margin}" y="{y:.1f}" width="{length * cell}" '
            f'height="{band}" fill="{colors["strip"]}"/>'
        )
    hole_r = max(cell // 6, 2)
    for s in range(1, width + 1):
        for p in range(1, length + 1):
            out.append(
                f'<circle cx="{cx(p):.1f}" cy="{cy(s):.1f}" r="{hole_r}" '
                f'fill="{colors["hole"]}" stroke="{colors["hole_stroke"]}"/>'
            )
    arm = cell / 4
    for cut in cuts:
        x = margin + cut.after_position * cell
        y = cy(cut.strip)
        out.append(
            f'<line x1="{x - arm:.1f}" y1="{y - arm:.1f}" x2="{x + arm:.1f}" '
            f'y2="{y + arm:.1f}" stroke="{colors["cut"]}" stroke-width="2"/>'
        )
        out.append(
            f'<line x1="{x - arm:.1f}" y1="{y + arm:.1f}" x2="{x + arm:.1f}" '
            f'y2="{y - arm:.1f}" stroke="{colors["cut"]}" stroke-width="2"/>'
        )
    for comp in circuit.components:
        holes = [layout.placements[(comp.ref, pin)]
                 for pin in range(1, comp.pin_count + 1)
                 if (comp.ref, pin) in layout.placements]
        for (s1, p1), (s2, p2) in zip(holes, holes[1:]):
            out.append(
                f'<line x1="{cx(p1):.1f}" y1="{cy(s1):.1f}" x2="{cx(p2):.1f}" '
                f'y2="{cy(s2):.1f}" stroke="{colors["wire"]}" stroke-width="3" '
                f'stroke-linecap="round"/>'
            )
        if holes and options.show_labels:
            s0, p0 = holes[0]
            out.append(
                f'<text x="{cx(p0):.1f}" y="{cy(s0) - hole_r - 2:.1f}" '
                f'font-family="monospace" font-size="{max(cell // 2, 8)}" '
                f'fill="{colors["text"]}" text-anchor="middle">'
                f'{escape(comp.ref)}</text>'
            )
    out.append(
        f'<rect x="{margin}" y="{margin}" width="{length * cell}" '
        f'height="{width * cell}" fill="none" stroke="{colors["board"]}" '
        f'stroke-width="2"/>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
