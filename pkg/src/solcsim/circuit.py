"""Netlist construction for self-organizing inversion circuits.

A netlist is a set of voltage nodes, three-terminal gates (AND/OR/XOR),
clamps holding known nodes at the logic levels +-1, and named registers
mapping bit positions to nodes.  A gate constrains its terminals to one of
the four input/output rows of its truth table with no preferred signal
direction; clamped circuits are therefore satisfiability problems whose
solutions are exactly the assignments of the embedded integer identity.

The inversion circuit is a schoolbook multiplier: an n x (n + n_b) array
of partial-product ANDs accumulated row by row with half/full adders
(half adder = XOR + AND, full adder = 2 XOR + 2 AND + OR).  For n >= 2 and
w = n + n_b the census is closed form:

    half adders  H = n
    full adders  F = n*w - n - w
    AND = n*w + H + 2*F,  XOR = H + 2*F,  OR = F
    total = n*w + 2*H + 5*F = 6*n*w - 3*n - 5*w

(for n = 1 the circuit is just the w partial-product ANDs).  With n_b = 0
this is exactly quadratic in the width: total = 6*n**2 - 8*n.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from .embedding import (
    Bits,
    EmbeddedInstance,
    EmbeddingLayout,
    int_to_bits,
)
from .errors import InvalidLayout, LayoutMismatch, UnknownNode

NodeId = int

GATE_KINDS = ("AND", "OR", "XOR")

_GATE_FUNC = {
    "AND": lambda p, q: p & q,
    "OR": lambda p, q: p | q,
    "XOR": lambda p, q: p ^ q,
}


@dataclass(frozen=True)
class Gate:
    kind: str
    in1: NodeId
    in2: NodeId
    out: NodeId

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    @property
    def terminals(self) -> tuple[NodeId, NodeId, NodeId]:
        return (self.in1, self.in2, self.out)

    def satisfied_by(self, in1: int, in2: int, out: int) -> bool:
        """True iff the bit triple is one of the gate's four truth-table rows."""
        return _GATE_FUNC[self.kind](in1, in2) == out

    def satisfying_rows(self) -> list[tuple[int, int, int]]:
        f = _GATE_FUNC[self.kind]
        return [(p, q, f(p, q)) for p in (0, 1) for q in (0, 1)]


@dataclass(frozen=True)
class Clamp:
    node: NodeId
    level: int  # +1 is Boolean 1, -1 is Boolean 0

    def __post_init__(self):
        if self.level not in (+1, -1):
            raise ValueError("clamp level must be +1 or -1")


@dataclass
class Netlist:
    """Mutable while under construction; treat as immutable once complete."""

    nodes: list[NodeId] = field(default_factory=list)
    gates: list[Gate] = field(default_factory=list)
    clamps: dict[NodeId, int] = field(default_factory=dict)
    registers: dict[str, Bits] = field(default_factory=dict)
    _node_set: set[NodeId] = field(default_factory=set, compare=False, repr=False)

    def new_node(self) -> NodeId:
        node = self.nodes[-1] + 1 if self.nodes else 0
        self.add_node(node)
        return node

    def add_node(self, node: NodeId) -> NodeId:
        if node in self._node_set:
            raise ValueError(f"node {node} already exists")
        self.nodes.append(node)
        self._node_set.add(node)
        return node

    def _check(self, *nodes: NodeId):
        for node in nodes:
            if node not in self._node_set:
                raise UnknownNode(f"node {node} is not in the netlist")

    def add_gate(self, kind: str, in1: NodeId, in2: NodeId, out: NodeId) -> Gate:
        self._check(in1, in2, out)
        gate = Gate(kind, in1, in2, out)
        self.gates.append(gate)
        return gate

    def add_clamp(self, node: NodeId, level: int):
        self._check(node)
        if node in self.clamps:
            if self.clamps[node] != level:
                raise LayoutMismatch(
                    f"node {node} already clamped to {self.clamps[node]}, "
                    f"cannot re-clamp to {level}"
                )
            return
        Clamp(node, level)  # validates level
        self.clamps[node] = level

    def set_register(self, name: str, nodes) -> None:
        nodes = tuple(nodes)
        self._check(*nodes)
        self.registers[name] = nodes

    def floating_nodes(self) -> list[NodeId]:
        return [n for n in self.nodes if n not in self.clamps]

    def copy(self) -> "Netlist":
        return copy.deepcopy(self)

    def __eq__(self, other):
        if not isinstance(other, Netlist):
            return NotImplemented
        return (
            set(self.nodes) == set(other.nodes)
            and self.gates == other.gates
            and self.clamps == other.clamps
            and self.registers == other.registers
        )


def build_half_adder(netlist: Netlist, x: NodeId, y: NodeId) -> tuple[NodeId, NodeId]:
    """Append sum = x XOR y and carry = x AND y on two fresh nodes."""
    s = netlist.new_node()
    netlist.add_gate("XOR", x, y, s)
    c = netlist.new_node()
    netlist.add_gate("AND", x, y, c)
    return s, c


def build_full_adder(
    netlist: Netlist, x: NodeId, y: NodeId, cin: NodeId
) -> tuple[NodeId, NodeId]:
    """Append a 3-input adder stage: x + y + cin = 2*cout + sum (5 gates)."""
    t = netlist.new_node()
    netlist.add_gate("XOR", x, y, t)
    s = netlist.new_node()
    netlist.add_gate("XOR", t, cin, s)
    g1 = netlist.new_node()
    netlist.add_gate("AND", x, y, g1)
    g2 = netlist.new_node()
    netlist.add_gate("AND", t, cin, g2)
    cout = netlist.new_node()
    netlist.add_gate("OR", g1, g2, cout)
    return s, cout


def _multiplier_array(
    netlist: Netlist, a_lsb: list[NodeId], b_lsb: list[NodeId]
) -> list[NodeId]:
    """Schoolbook product of two node registers (both LSB first).

    Builds the full partial-product AND array first (row-major), then
    accumulates rows least-significant first with ripple half/full adders.
    Returns len(a) + len(b) product nodes for len(a) >= 2, len(b) for a
    single-row multiplier.
    """
    rows = []
    for ai in a_lsb:
        row = []
        for bj in b_lsb:
            p = netlist.new_node()
            netlist.add_gate("AND", ai, bj, p)
            row.append(p)
        rows.append(row)

    acc = list(rows[0])
    for i in range(1, len(rows)):
        carry = None
        for j, pp in enumerate(rows[i]):
            pos = i + j
            if pos < len(acc):
                if carry is None:
                    acc[pos], carry = build_half_adder(netlist, acc[pos], pp)
                else:
                    acc[pos], carry = build_full_adder(netlist, acc[pos], pp, carry)
            else:
                # top row bit lands one past the accumulator (first addition only)
                s, carry = build_half_adder(netlist, pp, carry)
                acc.append(s)
        acc.append(carry)
    return acc


def build_inversion_circuit(layout: EmbeddingLayout) -> Netlist:
    """Multiplier netlist realizing a_int * b_hat over the product window.

    The product window is 2n + n_b bits wide: the top n bits form register
    "c", the next n the "consistency" zeros, and the low n_b bits the
    floating slack "c_f".  Registers "a" (n bits) and "b"/"b_f" (n/n_b bits
    of b_hat) name the operands; all registers are stored MSB first.
    """
    if layout.n_a != 0:
        raise InvalidLayout("build requires a reduced layout (n_a = 0)")
    n, n_b = layout.n, layout.n_b
    w = layout.width

    nl = Netlist()
    a_lsb = [nl.new_node() for _ in range(n)]
    bhat_lsb = [nl.new_node() for _ in range(w)]

    product = _multiplier_array(nl, a_lsb, bhat_lsb)
    # n = 1 leaves the window's top position structurally zero and undriven;
    # it is filled with a fresh node that instance clamping pins down.
    while len(product) < 2 * n + n_b:
        product.append(nl.new_node())

    nl.set_register("a", list(reversed(a_lsb)))
    nl.set_register("b", list(reversed(bhat_lsb[n_b:])))
    nl.set_register("b_f", list(reversed(bhat_lsb[:n_b])))
    nl.set_register("c", list(reversed(product[n + n_b:])))
    nl.set_register("consistency", list(reversed(product[n_b:n + n_b])))
    nl.set_register("c_f", list(reversed(product[:n_b])))
    return nl


def clamp_instance(netlist: Netlist, instance: EmbeddedInstance) -> Netlist:
    """Return a copy with "a" clamped to a_int and the known product bits set.

    The "c" and "consistency" registers together hold the constant
    c_int * 2**(n + n_b - c_shift); for raw instances this is c_int's bits in
    "c" and all zeros in "consistency".  b, b_f and c_f stay floating.
    """
    layout = instance.layout
    n, n_b = layout.n, layout.n_b
    for name, want in (("a", n), ("c", n), ("consistency", n), ("c_f", n_b)):
        if len(netlist.registers.get(name, ())) != want:
            raise LayoutMismatch(f"register {name!r} does not match layout {layout}")
    clamped = netlist.copy()
    level = lambda bit: +1 if bit else -1

    for node, bit in zip(clamped.registers["a"], int_to_bits(instance.a_int, n)):
        clamped.add_clamp(node, level(bit))

    known = int_to_bits(instance.rhs_constant >> n_b, 2 * n)
    window = clamped.registers["c"] + clamped.registers["consistency"]
    for node, bit in zip(window, known):
        clamped.add_clamp(node, level(bit))
    return clamped


def instance_from_netlist(netlist: Netlist, layout: EmbeddingLayout) -> EmbeddedInstance:
    """Recover the embedded instance from a clamped inversion netlist."""
    n, n_b = layout.n, layout.n_b

    def register_value(name: str) -> int:
        value = 0
        for node in netlist.registers[name]:
            if node not in netlist.clamps:
                raise LayoutMismatch(f"register {name!r} is not fully clamped")
            value = (value << 1) | (1 if netlist.clamps[node] > 0 else 0)
        return value

    a_int = register_value("a")
    rhs = (register_value("c") << n) | register_value("consistency")
    rhs <<= n_b
    for shift in (0, 1):
        c_int = rhs >> (n + n_b - shift)
        if c_int << (n + n_b - shift) == rhs and c_int < (1 << n):
            return EmbeddedInstance(a_int=a_int, c_int=c_int, layout=layout, c_shift=shift)
    raise LayoutMismatch("clamped product constant is not a valid instance encoding")


@dataclass(frozen=True)
class GateCensus:
    counts: dict[str, int]
    total: int


def count_gates(netlist: Netlist) -> GateCensus:
    """Exact per-kind gate counts."""
    counts = {kind: 0 for kind in GATE_KINDS}
    for gate in netlist.gates:
        counts[gate.kind] += 1
    return GateCensus(counts=counts, total=len(netlist.gates))


def expected_inversion_census(layout: EmbeddingLayout) -> GateCensus:
    """Closed-form census of build_inversion_circuit (see module docstring)."""
    n, w = layout.n, layout.width
    if n == 1:
        counts = {"AND": w, "XOR": 0, "OR": 0}
    else:
        half = n
        full = n * w - n - w
        counts = {
            "AND": n * w + half + 2 * full,
            "XOR": half + 2 * full,
            "OR": full,
        }
    return GateCensus(counts=counts, total=sum(counts.values()))


def build_twos_complement_stage(
    netlist: Netlist, magnitude: list[NodeId], sign: NodeId
) -> list[NodeId]:
    """Conditional negation: XOR every magnitude bit with sign, then add sign.

    When sign is 0 the stage passes the magnitude through; when sign is 1 it
    yields the two's complement (flip all bits, add one).  Input and output
    are MSB first and the same width; the final carry wraps away.
    """
    if not magnitude:
        raise ValueError("magnitude register must be nonempty")
    netlist._check(sign, *magnitude)
    flipped_lsb = []
    for bit in reversed(magnitude):
        f = netlist.new_node()
        netlist.add_gate("XOR", bit, sign, f)
        flipped_lsb.append(f)
    out_lsb = []
    carry = sign
    for f in flipped_lsb:
        s, carry = build_half_adder(netlist, f, carry)
        out_lsb.append(s)
    return list(reversed(out_lsb))


NETLIST_HEADER = "solc v1"


def export_netlist(netlist: Netlist) -> str:
    """Deterministic line-oriented serialization (see README for the grammar)."""
    lines = [NETLIST_HEADER]
    for node in sorted(netlist.nodes):
        lines.append(f"node {node}")
    for gate in netlist.gates:
        lines.append(f"gate {gate.kind} {gate.in1} {gate.in2} {gate.out}")
    for node in sorted(netlist.clamps):
        level = "+1" if netlist.clamps[node] > 0 else "-1"
        lines.append(f"clamp {node} {level}")
    for name in sorted(netlist.registers):
        ids = " ".join(str(n) for n in netlist.registers[name])
        lines.append(f"reg {name} {ids}".rstrip())
    return "\n".join(lines) + "\n"


def import_netlist(text: str) -> Netlist:
    """Parse the serialized form back into a netlist."""
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines or lines[0] != NETLIST_HEADER:
        raise ValueError(f"missing or unsupported header (expected {NETLIST_HEADER!r})")
    nl = Netlist()
    for ln in lines[1:]:
        fields = ln.split()
        kind = fields[0]
        if kind == "node":
            nl.add_node(int(fields[1]))
        elif kind == "gate":
            nl.add_gate(fields[1], int(fields[2]), int(fields[3]), int(fields[4]))
        elif kind == "clamp":
            if fields[2] not in ("+1", "-1"):
                raise ValueError(f"bad clamp level {fields[2]!r}")
            nl.add_clamp(int(fields[1]), 1 if fields[2] == "+1" else -1)
        elif kind == "reg":
            nl.set_register(fields[1], [int(f) for f in fields[2:]])
        else:
            raise ValueError(f"unknown record {kind!r}")
    return nl
