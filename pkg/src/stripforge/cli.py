"""Command-line pipeline: parse, solve, verify, render, export-asp, bench.

Exit codes are a scripting contract: 0 success, 1 verification failure,
2 parse/schema error, 3 infeasible, 4 timeout, 5 internal inconsistency.

Option precedence: command-line flags > STRIPFORGE_* environment
variables > TOML config file (--config, or ./stripforge.toml when
present) > built-in defaults.

Note: normalized layouts are 1-based; strip 1, position 1 is the board
origin used everywhere in this toolchain.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
import time
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .constraints import check_all, violations_to_json_obj
from .layout import (
    BoardExtent,
    GridConfig,
    Layout,
    board_extent,
    json_to_layout,
    layout_to_json,
    objective_tuple,
)
from .netlist import (
    IRSchemaError,
    NetlistParseError,
    NetlistSemanticError,
    circuit_to_json,
    emit_asp_facts,
    json_to_circuit,
    parse_netlist,
)
from .postprocess import derive_cuts, normalize, verify
from .render import RenderFormat, RenderOptions, Theme, render
from .solver import SolveConfig, SolveMode, SolveStatus, solve

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_PARSE_ERROR = 2
EXIT_INFEASIBLE = 3
EXIT_TIMEOUT = 4
EXIT_INTERNAL = 5

_ENV_PREFIX = "STRIPFORGE_"
_DEFAULTS = {
    "grid": "30x50",
    "mode": "two_phase",
    "time_limit": None,
    "unsigned_span": False,
    "format": "svg",
    "cell_size": 24,
    "theme": "light",
}


def _load_config_file(path: Optional[str]) -> dict:
    candidate = Path(path) if path else Path("stripforge.toml")
    if not candidate.is_file():
        if path:
            raise FileNotFoundError(f"config file not found: {path}")
        return {}
    with open(candidate, "rb") as handle:
        return tomllib.load(handle)


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def _setting(name: str, flag_value, file_cfg: dict, convert=lambda v: v):
    if flag_value is not None:
        return flag_value
    env = os.environ.get(_ENV_PREFIX + name.upper())
    if env is not None:
        return convert(env)
    if name in file_cfg:
        return convert(file_cfg[name])
    default = _DEFAULTS[name]
    return default


def _parse_grid(text: str) -> GridConfig:
    match = re.fullmatch(r"(\d+)x(\d+)", str(text).strip())
    if not match:
        raise ValueError(f"grid must look like 30x50, got {text!r}")
    return GridConfig(max_strips=int(match.group(1)), max_positions=int(match.group(2)))


def _solve_settings(args, file_cfg: dict) -> SolveConfig:
    grid = _parse_grid(_setting("grid", args.grid, file_cfg, str))
    mode = SolveMode(_setting("mode", getattr(args, "mode", None), file_cfg, str))
    time_limit = _setting("time_limit", getattr(args, "time_limit", None), file_cfg, float)
    if time_limit is not None:
        time_limit = float(time_limit)
    unsigned = _setting("unsigned_span",
                        True if getattr(args, "unsigned_span", False) else None,
                        file_cfg, _as_bool)
    return SolveConfig(grid=grid, mode=mode, time_limit=time_limit,
                       unsigned_span=bool(unsigned))


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def _read_circuit(path: str):
    return json_to_circuit(Path(path).read_text(encoding="utf-8"))


def _board_string(layout: Layout) -> str:
    if not layout.placements:
        return "0x0"
    extent = board_extent(layout)
    return f"{extent.width}x{extent.length}"


def _extent_from_board(board: str) -> BoardExtent:
    match = re.fullmatch(r"(\d+)x(\d+)", board.strip())
    if not match:
        raise ValueError(f"board must look like WxL, got {board!r}")
    return BoardExtent(min_strip=1, max_strip=int(match.group(1)),
                       min_position=1, max_position=int(match.group(2)))


# ---------------------------------------------------------------------------
# Subcommands


def cmd_parse(args) -> int:
    text = Path(args.netlist).read_text(encoding="utf-8")
    circuit = parse_netlist(text, source_name=Path(args.netlist).name)
    _write_text(args.out, circuit_to_json(circuit))
    return EXIT_OK


def cmd_solve(args) -> int:
    file_cfg = _load_config_file(args.config)
    circuit = _read_circuit(args.ir)
    config = _solve_settings(args, file_cfg)
    result = solve(circuit, config)

    layout_text = None
    summary = {
        "status": result.status.value,
        "phase1_s": round(result.phase1_time, 6),
        "phase2_s": round(result.phase2_time, 6),
        "total_s": round(result.total_time, 6),
    }
    if result.note:
        summary["note"] = result.note
    if result.layout is not None and result.layout.placements:
        final = normalize(result.layout, circuit, unsigned_span=config.unsigned_span)
        final = Layout(placements=final.placements, grid=final.grid,
                       cuts=tuple(derive_cuts(final, circuit)))
        objective = objective_tuple(final, circuit)
        summary["td"] = objective.total_strip_distance
        summary["area"] = objective.board_area
        summary["width"] = objective.board_width
        summary["board"] = _board_string(final)
        layout_text = layout_to_json(final)
    elif result.layout is not None:
        layout_text = layout_to_json(result.layout)
        summary["td"], summary["area"], summary["width"] = 0, 0, 0
        summary["board"] = "0x0"

    summary_text = json.dumps(summary, sort_keys=True, indent=2) + "\n"
    if layout_text is not None:
        _write_text(args.out, layout_text)
    if args.out is None or args.out == "-":
        sys.stderr.write(summary_text)
    else:
        _write_text(args.summary, summary_text)

    if result.status is SolveStatus.INFEASIBLE:
        if result.note:
            print(f"infeasible: {result.note}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if result.status is SolveStatus.TIMEOUT:
        return EXIT_TIMEOUT
    return EXIT_OK


def cmd_verify(args) -> int:
    circuit = _read_circuit(args.ir)
    layout = json_to_layout(Path(args.layout).read_text(encoding="utf-8"))
    if args.board:
        claimed = _extent_from_board(args.board)
    elif args.summary:
        summary = json.loads(Path(args.summary).read_text(encoding="utf-8"))
        claimed = _extent_from_board(summary["board"])
    elif layout.placements:
        claimed = board_extent(layout)
    else:
        claimed = None
    report = verify(circuit, layout, claimed)
    obj = report.to_json_obj()
    obj["violations"] = violations_to_json_obj(check_all(circuit, layout))
    _write_text(args.out, json.dumps(obj, sort_keys=True, indent=2) + "\n")
    return EXIT_OK if report.overall else EXIT_VERIFY_FAILED


def cmd_render(args) -> int:
    file_cfg = _load_config_file(args.config)
    circuit = _read_circuit(args.ir)
    layout = json_to_layout(Path(args.layout).read_text(encoding="utf-8"))
    options = RenderOptions(
        format=RenderFormat(_setting("format", args.format, file_cfg, str)),
        cell_size=int(_setting("cell_size", args.cell_size, file_cfg, int)),
        show_labels=not args.no_labels,
        theme=Theme(_setting("theme", args.theme, file_cfg, str)),
    )
    _write_text(args.out, render(layout, circuit, None, options))
    return EXIT_OK


def cmd_export_asp(args) -> int:
    circuit = _read_circuit(args.ir)
    _write_text(args.out, emit_asp_facts(circuit))
    return EXIT_OK


def cmd_bench(args) -> int:
    file_cfg = _load_config_file(args.config)
    modes = [SolveMode(m.strip()) for m in args.modes.split(",") if m.strip()]
    fixture_dir = Path(args.fixtures)
    netlists = sorted(fixture_dir.glob("*.net"))

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["name", "components", "nets", "mode", "status",
                     "td", "area", "width", "board",
                     "phase1_s", "phase2_s", "total_s"])
    mismatch = None
    for path in netlists:
        circuit = parse_netlist(path.read_text(encoding="utf-8"), source_name=path.name)
        tuples = {}
        for mode in modes:
            config = _solve_settings(args, file_cfg)
            config = SolveConfig(grid=config.grid, mode=mode,
                                 time_limit=config.time_limit,
                                 unsigned_span=config.unsigned_span)
            result = solve(circuit, config)
            td = area = width = board = ""
            if result.layout is not None and result.layout.placements:
                final = normalize(result.layout, circuit,
                                  unsigned_span=config.unsigned_span)
                objective = objective_tuple(final, circuit)
                td = objective.total_strip_distance
                area = objective.board_area
                width = objective.board_width
                board = _board_string(final)
                if result.status is SolveStatus.OPTIMAL:
                    tuples[mode] = objective.as_tuple()
            writer.writerow([
                path.stem, len(circuit.components), len(circuit.nets),
                mode.value, result.status.value, td, area, width, board,
                f"{result.phase1_time:.3f}", f"{result.phase2_time:.3f}",
                f"{result.total_time:.3f}",
            ])
        if len(tuples) > 1 and len(set(tuples.values())) > 1:
            mismatch = (path.stem, tuples)
    _write_text(args.out, buffer.getvalue())
    if mismatch is not None:
        name, tuples = mismatch
        detail = ", ".join(f"{m.value}={t}" for m, t in sorted(tuples.items(),
                                                               key=lambda kv: kv[0].value))
        print(f"internal consistency failure: {name}: optimal tuples differ ({detail})",
              file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stripforge",
        description="Stripboard layout synthesis and optimization toolchain.",
        epilog="Coordinates are 1-based: normalized layouts start at strip 1, "
               "position 1. Option precedence: flags > STRIPFORGE_* environment "
               "variables > TOML config file > defaults.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a netlist into the JSON IR")
    p.add_argument("netlist")
    p.add_argument("--out", default=None, help="IR output path (default stdout)")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("solve", help="solve, normalize, derive cuts, emit layout JSON")
    p.add_argument("ir")
    p.add_argument("--mode", choices=[m.value for m in SolveMode], default=None)
    p.add_argument("--grid", default=None, metavar="RxC",
                   help="strips x positions, e.g. 30x50")
    p.add_argument("--time-limit", dest="time_limit", type=float, default=None)
    p.add_argument("--unsigned-span", dest="unsigned_span", action="store_true",
                   help="relax the span rule to |P2-P1| >= span")
    p.add_argument("--out", default=None, help="layout JSON path (default stdout)")
    p.add_argument("--summary", default=None,
                   help="summary JSON path (default stdout, or stderr when "
                        "the layout goes to stdout)")
    p.add_argument("--config", default=None, help="TOML config file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run the four layout checks")
    p.add_argument("ir")
    p.add_argument("layout")
    p.add_argument("--board", default=None, metavar="WxL",
                   help="claimed board dimensions to verify against")
    p.add_argument("--summary", default=None,
                   help="solve summary JSON carrying the claimed board")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("render", help="render a layout as SVG or ASCII")
    p.add_argument("ir")
    p.add_argument("layout")
    p.add_argument("--format", choices=[f.value for f in RenderFormat], default=None)
    p.add_argument("--cell-size", dest="cell_size", type=int, default=None)
    p.add_argument("--theme", choices=[t.value for t in Theme], default=None)
    p.add_argument("--no-labels", dest="no_labels", action="store_true")
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("export-asp", help="emit logic-program facts for the circuit")
    p.add_argument("ir")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_export_asp)

    p = sub.add_parser("bench", help="run every fixture under each mode, emit CSV")
    p.add_argument("fixtures", help="directory of .net fixture files")
    p.add_argument("--modes", default="two_phase,one_phase")
    p.add_argument("--grid", default=None, metavar="RxC")
    p.add_argument("--time-limit", dest="time_limit", type=float, default=None)
    p.add_argument("--unsigned-span", dest="unsigned_span", action="store_true")
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NetlistParseError, NetlistSemanticError, IRSchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
