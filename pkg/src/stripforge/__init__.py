"""stripforge: stripboard circuit layout synthesis and optimization.

Pipeline: parse a netlist into a circuit IR, search for a feasible pin
placement, optimize it lexicographically (total strip distance, board
area, board width), normalize, derive strip cuts, verify, and render.
"""

from .constraints import (
    ConstraintViolation,
    Propagator,
    ViolationKind,
    check_all,
    check_hole_exclusivity,
    check_min_span,
    check_net_same_strip,
    check_shared_strip_segments,
    check_two_pin_distinct_strips,
    is_feasible,
    pin_groups,
)
from .layout import (
    BoardExtent,
    Cut,
    EmptyLayoutError,
    GridConfig,
    Layout,
    ObjectiveTuple,
    PinPlacement,
    board_extent,
    json_to_layout,
    layout_to_json,
    lex_compare,
    objective_tuple,
    strip_distance,
)
from .netlist import (
    Circuit,
    Component,
    ComponentKind,
    Net,
    circuit_to_json,
    emit_asp_facts,
    json_to_circuit,
    parse_netlist,
)
from .postprocess import (
    InfeasibleLayoutError,
    VerificationReport,
    derive_cuts,
    normalize,
    verify,
)
from .render import RenderFormat, RenderOptions, Theme, render
from .solver import (
    SolveConfig,
    SolveMode,
    SolveResult,
    SolveStatus,
    brute_force_solve,
    solve,
    solve_phase1,
    solve_phase2,
)

__version__ = "0.1.0"
