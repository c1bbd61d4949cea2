"""Exhaustive Boolean oracles for small netlists.

Ground truth for the circuit layer: enumerate every assignment of the
floating nodes that satisfies all gates and clamps, then cross-check the
(b_hat, c_f) projection against the arithmetic enumeration.  Clamped values
are propagated through gates before and during the search, so the branch
space is the independent source nodes rather than every internal node.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuit import Netlist
from .embedding import (
    DecodedSolution,
    EmbeddedInstance,
    bits_to_int,
    enumerate_solutions,
)
from .errors import Mismatch, TooLarge

_CONFLICT = object()


@dataclass(frozen=True)
class SatAssignment:
    """Bit values for every floating node of a netlist, sorted by node id."""

    bits: tuple[tuple[int, int], ...]

    @classmethod
    def from_dict(cls, values: dict[int, int]) -> "SatAssignment":
        return cls(tuple(sorted(values.items())))

    def as_dict(self) -> dict[int, int]:
        return dict(self.bits)

    def __getitem__(self, node: int) -> int:
        return self.as_dict()[node]


def _propagate(netlist: Netlist, known: dict[int, int]) -> bool:
    """Forward/backward constant propagation through gates.

    Extends ``known`` in place with every value the gates determine; returns
    False on a contradiction.  Rules per kind: an AND output is 0 as soon as
    one input is 0 and forces both inputs to 1 when the output is 1 (OR is
    the dual); an XOR terminal is fixed once the other two are known.
    """
    changed = True
    while changed:
        changed = False
        for gate in netlist.gates:
            a = known.get(gate.in1)
            b = known.get(gate.in2)
            o = known.get(gate.out)
            updates: list[tuple[int, int]] = []
            if gate.kind == "AND":
                if a == 0 or b == 0:
                    updates.append((gate.out, 0))
                elif a == 1 and b == 1:
                    updates.append((gate.out, 1))
                if o == 1:
                    updates.append((gate.in1, 1))
                    updates.append((gate.in2, 1))
                elif o == 0:
                    if a == 1:
                        updates.append((gate.in2, 0))
                    if b == 1:
                        updates.append((gate.in1, 0))
            elif gate.kind == "OR":
                if a == 1 or b == 1:
                    updates.append((gate.out, 1))
                elif a == 0 and b == 0:
                    updates.append((gate.out, 0))
                if o == 0:
                    updates.append((gate.in1, 0))
                    updates.append((gate.in2, 0))
                elif o == 1:
                    if a == 0:
                        updates.append((gate.in2, 1))
                    if b == 0:
                        updates.append((gate.in1, 1))
            else:  # XOR
                if a is not None and b is not None:
                    updates.append((gate.out, a ^ b))
                if a is not None and o is not None:
                    updates.append((gate.in2, a ^ o))
                if b is not None and o is not None:
                    updates.append((gate.in1, b ^ o))
            for node, value in updates:
                prev = known.get(node)
                if prev is None:
                    known[node] = value
                    changed = True
                elif prev != value:
                    return False
    return True


def brute_force_sat(
    netlist: Netlist,
    *,
    use_propagation: bool = True,
    max_free: int = 26,
) -> list[SatAssignment]:
    """All satisfying assignments of the floating nodes, canonically sorted.

    With propagation enabled the search branches on undetermined *source*
    nodes (nodes that are not any gate's output); everything downstream is
    filled in by propagation, so the cost is 2**sources rather than
    2**floating.  Raises TooLarge when more than ``max_free`` branch nodes
    remain after the initial propagation pass.

    ``use_propagation=False`` enumerates every floating-node combination
    directly (tiny netlists only); both paths return the same set.
    """
    floating = netlist.floating_nodes()
    clamp_bits = {node: (1 if lvl > 0 else 0) for node, lvl in netlist.clamps.items()}

    if not use_propagation:
        if len(floating) > 20:
            raise TooLarge("plain enumeration is capped at 20 floating nodes")
        results = []
        for pattern in range(1 << len(floating)):
            values = dict(clamp_bits)
            for k, node in enumerate(floating):
                values[node] = (pattern >> k) & 1
            if all(
                g.satisfied_by(values[g.in1], values[g.in2], values[g.out])
                for g in netlist.gates
            ):
                results.append(
                    SatAssignment.from_dict({n: values[n] for n in floating})
                )
        return sorted(results, key=lambda s: s.bits)

    outputs = {g.out for g in netlist.gates}
    known = dict(clamp_bits)
    if not _propagate(netlist, known):
        return []
    branchable = [n for n in floating if n not in known and n not in outputs]
    if len(branchable) > max_free:
        raise TooLarge(
            f"{len(branchable)} free nodes after propagation exceeds {max_free}"
        )

    results: list[SatAssignment] = []

    def undetermined(known: dict[int, int]) -> int | None:
        for node in floating:
            if node not in known and node not in outputs:
                return node
        for node in floating:
            if node not in known:
                return node
        return None

    def search(known: dict[int, int]):
        node = undetermined(known)
        if node is None:
            # fully determined; propagation already validated every gate
            results.append(
                SatAssignment.from_dict({n: known[n] for n in floating})
            )
            return
        for value in (0, 1):
            trial = dict(known)
            trial[node] = value
            if _propagate(netlist, trial):
                search(trial)

    search(known)
    return sorted(results, key=lambda s: s.bits)


@dataclass(frozen=True)
class CrossCheckReport:
    circuit_solutions: frozenset[DecodedSolution]
    oracle_solutions: frozenset[DecodedSolution]

    @property
    def bijective(self) -> bool:
        return self.circuit_solutions == self.oracle_solutions


def project_assignment(
    netlist: Netlist, assignment: SatAssignment, layout
) -> DecodedSolution:
    """Read the (b_hat, c_f) registers out of a satisfying assignment."""
    values = assignment.as_dict()
    values.update(
        {node: (1 if lvl > 0 else 0) for node, lvl in netlist.clamps.items()}
    )

    def register_int(name: str) -> int:
        return bits_to_int(values[node] for node in netlist.registers[name])

    b_int = register_int("b")
    b_f = register_int("b_f")
    c_f = register_int("c_f")
    n_b = len(netlist.registers["b_f"])
    b_hat = (b_int << n_b) | b_f
    from .embedding import int_to_bits

    return DecodedSolution(
        b_hat=b_hat,
        b_bits=int_to_bits(b_int, len(netlist.registers["b"])),
        b_f=b_f,
        c_f=c_f,
    )


def cross_check(netlist: Netlist, instance: EmbeddedInstance) -> CrossCheckReport:
    """Assert the circuit's satisfying set projects bijectively onto the oracle's.

    Returns the report on success; raises Mismatch carrying both sets when
    they disagree (which signals a construction bug, never a dynamics one).
    """
    assignments = brute_force_sat(netlist)
    circuit = frozenset(
        project_assignment(netlist, asg, instance.layout) for asg in assignments
    )
    # distinct internal assignments must not collapse onto one projection
    report = CrossCheckReport(
        circuit_solutions=circuit,
        oracle_solutions=frozenset(enumerate_solutions(instance)),
    )
    if len(circuit) != len(assignments) or not report.bijective:
        raise Mismatch(
            f"circuit set ({len(circuit)}) != oracle set "
            f"({len(report.oracle_solutions)})",
            report=report,
        )
    return report
