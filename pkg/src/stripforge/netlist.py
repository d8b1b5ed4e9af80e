"""Netlist parsing, JSON IR serialization, and ASP fact export.

Reads the KiCad-style S-expression netlist subset::

    (export
      (components (comp (ref R1) (value 10k)) ...)
      (nets (net (code 1) (name VCC) (node (ref R1) (pin 1)) ...) ...))

and produces an immutable circuit IR.  Unknown sections are skipped so
newer netlist features do not break parsing.  The IR round-trips through
a canonical JSON form and exports to logic-program facts
(``component/3``, ``pin/2``, ``circuit_net/3``) for external solvers.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

__all__ = [
    "ComponentKind",
    "Component",
    "Net",
    "Circuit",
    "NetlistParseError",
    "NetlistSemanticError",
    "IRSchemaError",
    "AspEmissionError",
    "parse_netlist",
    "circuit_to_json",
    "json_to_circuit",
    "emit_asp_facts",
]


class NetlistParseError(ValueError):
    """Malformed S-expression input; carries 1-based line/column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class NetlistSemanticError(ValueError):
    """Structurally valid netlist with inconsistent content."""


class IRSchemaError(ValueError):
    """JSON IR violating the schema; carries the offending path."""

    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class AspEmissionError(ValueError):
    """Reference cannot be turned into a safe logic-program atom."""


class ComponentKind(str, Enum):
    RESISTOR = "resistor"
    CAPACITOR = "capacitor"
    INDUCTOR = "inductor"
    DIODE = "diode"
    LED = "led"
    TRANSISTOR = "transistor"
    IC = "ic"
    CONNECTOR = "connector"
    OTHER = "other"


# Reference-prefix convention: the netlist format carries no explicit type,
# so the kind is inferred from the leading letters of the reference.
_PREFIX_KINDS = {
    "R": ComponentKind.RESISTOR,
    "C": ComponentKind.CAPACITOR,
    "L": ComponentKind.INDUCTOR,
    "D": ComponentKind.DIODE,
    "Q": ComponentKind.TRANSISTOR,
    "U": ComponentKind.IC,
    "J": ComponentKind.CONNECTOR,
    "P": ComponentKind.CONNECTOR,
}


@dataclass(frozen=True)
class Component:
    """One netlist component: reference, inferred kind, value, pin count."""

    ref: str
    kind: ComponentKind
    value: str
    pin_count: int


@dataclass(frozen=True)
class Net:
    """An electrical net: dense integer id, original name, member pins."""

    id: int
    name: str
    members: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class Circuit:
    """Parsed circuit: the electrical ground truth for layout synthesis."""

    source_name: str
    components: tuple[Component, ...]
    nets: tuple[Net, ...]
    _by_ref: dict = field(init=False, repr=False, compare=False, hash=False)
    _net_of: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        by_ref: dict[str, Component] = {}
        for comp in self.components:
            if not comp.ref:
                raise NetlistSemanticError("component with empty reference")
            if comp.ref in by_ref:
                raise NetlistSemanticError(f"duplicate component reference {comp.ref!r}")
            if comp.pin_count < 1:
                raise NetlistSemanticError(f"{comp.ref}: pin_count must be >= 1")
            by_ref[comp.ref] = comp
        net_of: dict[tuple[str, int], int] = {}
        for index, net in enumerate(self.nets):
            if net.id != index + 1:
                raise NetlistSemanticError(
                    f"net {net.name!r}: id {net.id} not dense (expected {index + 1})"
                )
            if not net.members:
                raise NetlistSemanticError(f"net {net.name!r} has no members")
            for ref, pin in net.members:
                comp = by_ref.get(ref)
                if comp is None:
                    raise NetlistSemanticError(
                        f"net {net.name!r} references unknown component {ref!r}"
                    )
                if not 1 <= pin <= comp.pin_count:
                    raise NetlistSemanticError(
                        f"net {net.name!r}: pin {ref}.{pin} outside 1..{comp.pin_count}"
                    )
                if (ref, pin) in net_of:
                    raise NetlistSemanticError(
                        f"pin {ref}.{pin} appears in more than one net"
                    )
                net_of[(ref, pin)] = net.id
        object.__setattr__(self, "_by_ref", by_ref)
        object.__setattr__(self, "_net_of", net_of)

    def component(self, ref: str) -> Component:
        return self._by_ref[ref]

    def net_of(self, ref: str, pin: int) -> Optional[int]:
        """Net id containing (ref, pin), or None for an unconnected pin."""
        return self._net_of.get((ref, pin))

    def all_pins(self) -> Iterator[tuple[str, int]]:
        """Every (ref, pin) of the circuit, component order, pins ascending."""
        for comp in self.components:
            for pin in range(1, comp.pin_count + 1):
                yield comp.ref, pin

    @property
    def pin_total(self) -> int:
        return sum(comp.pin_count for comp in self.components)


# ---------------------------------------------------------------------------
# S-expression layer


_TOKEN_RE = re.compile(r'\(|\)|"(?:[^"\\]|\\.)*"|[^\s()"]+')


def _tokenize(text: str) -> Iterator[tuple[str, int, int]]:
    line = 1
    line_start = 0
    pos = 0
    length = len(text)
    while pos < length:
        ch = text[pos]
        if ch == "\n":
            line += 1
            line_start = pos + 1
            pos += 1
            continue
        if ch.isspace():
            pos += 1
            continue
        if ch == '"':
            match = _TOKEN_RE.match(text, pos)
            if match is None or not match.group().endswith('"') or len(match.group()) < 2:
                raise NetlistParseError("unterminated string", line, pos - line_start + 1)
            yield match.group(), line, pos - line_start + 1
            pos = match.end()
            continue
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise NetlistParseError(f"unexpected character {ch!r}", line, pos - line_start + 1)
        token = match.group()
        yield token, line, pos - line_start + 1
        pos = match.end()
        # keep line tracking correct for multi-line strings (not expected,
        # but cheap to stay honest)
        newlines = token.count("\n")
        if newlines:
            line += newlines
            line_start = pos - (len(token) - token.rfind("\n") - 1)


def _unquote(token: str) -> str:
    if token.startswith('"'):
        body = token[1:-1]
        return body.replace('\\"', '"').replace("\\\\", "\\")
    return token


def _parse_sexpr(text: str) -> list:
    """Parse one top-level S-expression into nested lists of strings."""
    stack: list[list] = []
    root: Optional[list] = None
    last_line, last_col = 1, 1
    for token, line, col in _tokenize(text):
        last_line, last_col = line, col
        if token == "(":
            node: list = []
            if stack:
                stack[-1].append(node)
            elif root is None:
                root = node
            else:
                raise NetlistParseError("multiple top-level expressions", line, col)
            stack.append(node)
        elif token == ")":
            if not stack:
                raise NetlistParseError("unbalanced ')'", line, col)
            stack.pop()
        else:
            if not stack:
                raise NetlistParseError(f"atom {token!r} outside any list", line, col)
            stack[-1].append(_unquote(token))
    if stack:
        raise NetlistParseError("unbalanced '('", last_line, last_col)
    if root is None:
        raise NetlistParseError("empty input", 1, 1)
    return root


def _entries(node: list, head: str) -> Iterator[list]:
    for child in node:
        if isinstance(child, list) and child and child[0] == head:
            yield child


def _first_value(node: list, head: str) -> Optional[str]:
    for child in _entries(node, head):
        if len(child) >= 2 and isinstance(child[1], str):
            return child[1]
        return ""
    return None


# ---------------------------------------------------------------------------
# Netlist -> Circuit


def _infer_kind(ref: str, value: str, footprint: str) -> ComponentKind:
    prefix = ""
    for ch in ref:
        if ch.isalpha():
            prefix += ch.upper()
        else:
            break
    kind = _PREFIX_KINDS.get(prefix, ComponentKind.OTHER)
    if kind is ComponentKind.DIODE and "led" in (value + " " + footprint).lower():
        return ComponentKind.LED
    return kind


def parse_netlist(text: str, source_name: str = "<netlist>") -> Circuit:
    """Parse netlist source into a Circuit.

    Component kind comes from the reference prefix (R -> resistor, C ->
    capacitor, ...); pin count is the highest pin number referenced by any
    net, at least 1.  Net ids are assigned densely from 1 in netlist order;
    net entries without nodes are dropped.
    """
    root = _parse_sexpr(text)
    if not root or root[0] != "export":
        raise NetlistSemanticError("top-level expression is not (export ...)")

    raw_comps: list[tuple[str, str, str]] = []
    seen_refs: set[str] = set()
    for section in _entries(root, "components"):
        for comp in _entries(section, "comp"):
            ref = _first_value(comp, "ref")
            if not ref:
                raise NetlistSemanticError("component entry without (ref ...)")
            if ref in seen_refs:
                raise NetlistSemanticError(f"duplicate component reference {ref!r}")
            seen_refs.add(ref)
            value = _first_value(comp, "value") or ""
            footprint = _first_value(comp, "footprint") or ""
            raw_comps.append((ref, value, footprint))

    raw_nets: list[tuple[str, list[tuple[str, int]]]] = []
    for section in _entries(root, "nets"):
        for net in _entries(section, "net"):
            name = _first_value(net, "name")
            if name is None:
                name = _first_value(net, "code") or ""
            nodes: list[tuple[str, int]] = []
            for node in _entries(net, "node"):
                ref = _first_value(node, "ref")
                pin_text = _first_value(node, "pin")
                if not ref or pin_text is None:
                    raise NetlistSemanticError(f"net {name!r}: node without ref/pin")
                if ref not in seen_refs:
                    raise NetlistSemanticError(
                        f"net {name!r} references unknown component {ref!r}"
                    )
                try:
                    pin = int(pin_text)
                except ValueError:
                    raise NetlistSemanticError(
                        f"net {name!r}: pin {pin_text!r} of {ref} is not an integer"
                    ) from None
                if pin < 1:
                    raise NetlistSemanticError(f"net {name!r}: pin {ref}.{pin} must be >= 1")
                nodes.append((ref, pin))
            if nodes:
                raw_nets.append((name, nodes))

    max_pin: dict[str, int] = {ref: 1 for ref, _, _ in raw_comps}
    for _, nodes in raw_nets:
        for ref, pin in nodes:
            if pin > max_pin[ref]:
                max_pin[ref] = pin

    components = tuple(
        Component(ref=ref, kind=_infer_kind(ref, value, footprint), value=value,
                  pin_count=max_pin[ref])
        for ref, value, footprint in raw_comps
    )
    nets = tuple(
        Net(id=index + 1, name=name, members=tuple(nodes))
        for index, (name, nodes) in enumerate(raw_nets)
    )
    return Circuit(source_name=source_name, components=components, nets=nets)


# ---------------------------------------------------------------------------
# JSON IR


def circuit_to_json(circuit: Circuit) -> str:
    """Serialize to the canonical JSON IR: sorted keys, 2-space indent, LF."""
    obj = {
        "source_name": circuit.source_name,
        "components": [
            {"ref": c.ref, "kind": c.kind.value, "value": c.value, "pin_count": c.pin_count}
            for c in circuit.components
        ],
        "nets": [
            {
                "id": n.id,
                "name": n.name,
                "members": [{"ref": ref, "pin": pin} for ref, pin in n.members],
            }
            for n in circuit.nets
        ],
    }
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _expect(value, types, path: str):
    if not isinstance(value, types):
        names = types.__name__ if isinstance(types, type) else "/".join(t.__name__ for t in types)
        raise IRSchemaError(f"expected {names}, got {type(value).__name__}", path)
    return value


def json_to_circuit(text: str) -> Circuit:
    """Parse the JSON IR back into a Circuit, validating the schema."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IRSchemaError(f"invalid JSON: {exc}", "$") from None
    _expect(obj, dict, "$")
    source_name = _expect(obj.get("source_name", ""), str, "$.source_name")
    components = []
    for i, raw in enumerate(_expect(obj.get("components"), list, "$.components")):
        path = f"$.components[{i}]"
        _expect(raw, dict, path)
        ref = _expect(raw.get("ref"), str, path + ".ref")
        kind_name = _expect(raw.get("kind"), str, path + ".kind")
        try:
            kind = ComponentKind(kind_name)
        except ValueError:
            raise IRSchemaError(f"unknown kind {kind_name!r}", path + ".kind") from None
        value = _expect(raw.get("value", ""), str, path + ".value")
        pin_count = _expect(raw.get("pin_count"), int, path + ".pin_count")
        components.append(Component(ref=ref, kind=kind, value=value, pin_count=pin_count))
    nets = []
    for i, raw in enumerate(_expect(obj.get("nets"), list, "$.nets")):
        path = f"$.nets[{i}]"
        _expect(raw, dict, path)
        net_id = _expect(raw.get("id"), int, path + ".id")
        name = _expect(raw.get("name", ""), str, path + ".name")
        members = []
        for j, member in enumerate(_expect(raw.get("members"), list, path + ".members")):
            mpath = f"{path}.members[{j}]"
            _expect(member, dict, mpath)
            mref = _expect(member.get("ref"), str, mpath + ".ref")
            mpin = _expect(member.get("pin"), int, mpath + ".pin")
            members.append((mref, mpin))
        nets.append(Net(id=net_id, name=name, members=tuple(members)))
    try:
        return Circuit(source_name=source_name, components=tuple(components), nets=tuple(nets))
    except NetlistSemanticError as exc:
        raise IRSchemaError(str(exc), "$") from None


# ---------------------------------------------------------------------------
# ASP fact export


_ATOM_RE = re.compile(r"[a-z][a-z0-9_]*\Z")


def _mangle_atom(ref: str) -> str:
    atom = re.sub(r"[^a-z0-9_]", "_", ref.lower())
    if not _ATOM_RE.match(atom):
        raise AspEmissionError(f"reference {ref!r} cannot form a valid atom ({atom!r})")
    return atom


def _quote_term(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_asp_facts(circuit: Circuit) -> str:
    """Emit facts, one per line: components, then pins, then net membership.

    Ordering is fixed (components in input order, pins ascending, nets in
    input order) so identical circuits emit byte-identical text.
    """
    atoms: dict[str, str] = {}
    for comp in circuit.components:
        atom = _mangle_atom(comp.ref)
        if atom in atoms.values():
            raise AspEmissionError(f"references {comp.ref!r} and another mangle to {atom!r}")
        atoms[comp.ref] = atom

    lines: list[str] = []
    for comp in circuit.components:
        lines.append(f"component({atoms[comp.ref]}, {comp.kind.value}, {_quote_term(comp.value)}).")
    for comp in circuit.components:
        for pin in range(1, comp.pin_count + 1):
            lines.append(f"pin({atoms[comp.ref]}, {pin}).")
    for net in circuit.nets:
        for ref, pin in net.members:
            lines.append(f"circuit_net({atoms[ref]}, {pin}, {net.id}).")
    return "".join(line + "\n" for line in lines)
