import sys
from pathlib import Path

import pytest

from stripforge import Circuit, parse_netlist
from stripforge.netlist import Component, ComponentKind, Net

sys.path.insert(0, str(Path(__file__).parent))

FIXTURE_DIR = Path(__file__).parent.parent / "fixtures"
GOLDEN_DIR = Path(__file__).parent / "golden"

FIXTURE_NAMES = ["counter_4bit", "guitar_pedal", "led_flasher", "lrc", "opamp_filter"]


def fixture_text(name: str) -> str:
    return (FIXTURE_DIR / f"{name}.net").read_text(encoding="utf-8")


def fixture_circuit(name: str) -> Circuit:
    return parse_netlist(fixture_text(name), source_name=f"{name}.net")


@pytest.fixture(scope="session")
def circuits() -> dict[str, Circuit]:
    return {name: fixture_circuit(name) for name in FIXTURE_NAMES}


def make_circuit(comps, nets=(), source="test") -> Circuit:
    """Shorthand builder: comps as (ref, kind, pin_count), nets as lists of
    (ref, pin)."""
    components = tuple(
        Component(ref=ref, kind=kind, value="", pin_count=pin_count)
        for ref, kind, pin_count in comps
    )
    net_objs = tuple(
        Net(id=i + 1, name=f"N{i + 1}", members=tuple(members))
        for i, members in enumerate(nets)
    )
    return Circuit(source_name=source, components=components, nets=net_objs)


def resistor_pair(ref="R1"):
    """One resistor with each pin in a private single-member net."""
    return make_circuit(
        [(ref, ComponentKind.RESISTOR, 2)],
        [[(ref, 1)], [(ref, 2)]],
    )
