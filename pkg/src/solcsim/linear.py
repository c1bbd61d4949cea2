"""2x2 matrix inversion as two independent column systems.

Inverting A means solving A x = e_k for each identity column e_k.  All four
matrix entries are rescaled to one shared exponent so each equation becomes
integer arithmetic on mantissas:

    sum_j (+-) m_ij * X_j = B_i + slack_i,     B_i = b_i * 2**rhs_pow

with unknown sign bits and n-bit mantissas X_j.  Each product m_ij * X_j is
a multiplier array; its sign (an XOR of the known entry sign with the
floating unknown sign) drives a two's-complement stage, and the signed
products ripple-add into a sum register.  The sum is clamped to the bits of
B_i except for the low slack window, which stays floating and absorbs the
remainder on systems whose solution is not exactly representable; on
exactly representable systems the slack must decode to zero.

The result exponent is chosen up front (by default just large enough for
the largest inverse entry) and restored when the mantissas are decoded.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .circuit import (
    Netlist,
    _multiplier_array,
    build_full_adder,
    build_half_adder,
    build_twos_complement_stage,
)
from .dynamics import SimConfig, SolveReport, Trace, _integrate, _compiled
from .embedding import EmbeddingLayout, FixedPointScalar, bits_to_int, int_to_bits
from .errors import LayoutMismatch, Singular


@dataclass(frozen=True)
class Matrix2:
    a11: FixedPointScalar
    a12: FixedPointScalar
    a21: FixedPointScalar
    a22: FixedPointScalar

    def entries(self):
        return (self.a11, self.a12, self.a21, self.a22)

    def values(self):
        return tuple(e.value() for e in self.entries())

    def determinant(self) -> Fraction:
        v11, v12, v21, v22 = self.values()
        return v11 * v22 - v12 * v21

    @classmethod
    def from_values(cls, values, n: int) -> "Matrix2":
        """Encode four rationals exactly as n-bit scalars (LayoutMismatch if lossy)."""
        return cls(*(_scalar_from_value(Fraction(v), n) for v in values))


def _scalar_from_value(value: Fraction, n: int) -> FixedPointScalar:
    if value == 0:
        return FixedPointScalar(+1, 0, (0,) * n)
    sign = 1 if value > 0 else -1
    mag = abs(value)
    exponent = 0
    while mag >= (1 << exponent):
        exponent += 1
    mantissa = mag * (1 << n) / Fraction(2) ** exponent
    if mantissa.denominator != 1:
        raise LayoutMismatch(f"{value} is not representable with an {n}-bit mantissa")
    return FixedPointScalar(sign, exponent, int_to_bits(int(mantissa), n))


def _rescale_entries(A: Matrix2, n: int):
    """Express every entry at the largest exponent; returns (e0, mantissas, signs)."""
    entries = A.entries()
    if any(e.n != n for e in entries):
        raise LayoutMismatch("all entries must share the layout mantissa width")
    e0 = max(e.exponent for e in entries if e.mantissa_int != 0)
    mantissas, signs = [], []
    for e in entries:
        shift = e0 - e.exponent
        m = e.mantissa_int
        if m != 0 and (m >> shift) << shift != m:
            raise LayoutMismatch(
                f"entry {e} cannot be rescaled exactly to exponent {e0}"
            )
        mantissas.append(m >> shift if m else 0)
        signs.append(e.sign)
    return e0, mantissas, signs


def _auto_result_exponent(A: Matrix2) -> int:
    """Smallest exponent whose fraction range covers every exact inverse entry."""
    inverse = _exact_inverse(A)
    largest = max(abs(v) for row in inverse for v in row)
    ex = 0
    while Fraction(2) ** ex <= largest:
        ex += 1
    while Fraction(2) ** (ex - 1) > largest:
        ex -= 1
    return ex


def _exact_inverse(A: Matrix2):
    det = A.determinant()
    if det == 0:
        raise Singular("matrix determinant is zero")
    v11, v12, v21, v22 = A.values()
    return (
        (v22 / det, -v12 / det),
        (-v21 / det, v11 / det),
    )


def _ripple_add(netlist: Netlist, x_lsb, y_lsb):
    """Equal-width ripple adder, LSB first; the final carry is dropped."""
    out = []
    carry = None
    for xb, yb in zip(x_lsb, y_lsb):
        if carry is None:
            s, carry = build_half_adder(netlist, xb, yb)
        else:
            s, carry = build_full_adder(netlist, xb, yb, carry)
        out.append(s)
    return out


@dataclass
class ColumnSystem:
    netlist: Netlist
    layout: EmbeddingLayout
    column_index: int
    common_exponent: int
    result_exponent: int
    rhs_pow: int
    rhs_bits: tuple[int, int]
    mantissas: tuple[int, int, int, int]  # rescaled |entries|, row-major
    signs: tuple[int, int, int, int]


def build_column_system(
    A: Matrix2,
    column_index: int,
    layout: EmbeddingLayout,
    result_exponent: Optional[int] = None,
) -> ColumnSystem:
    """Netlist whose satisfying assignments encode column ``column_index`` of A^-1.

    Registers: ``x1``/``x2`` (unknown mantissas, MSB first), ``x1_sign``/
    ``x2_sign`` (one floating sign node each), ``slack1``/``slack2`` (low
    n_b bits of each equation sum), ``eq1``/``eq2`` (the full sums).
    """
    if column_index not in (1, 2):
        raise ValueError("column_index must be 1 or 2")
    if A.determinant() == 0:
        raise Singular("matrix determinant is zero")
    n, n_b = layout.n, layout.n_b
    e0, mantissas, signs = _rescale_entries(A, n)
    if result_exponent is None:
        result_exponent = _auto_result_exponent(A)

    # B_i = b_i * 2**rhs_pow keeps the identity column exact at this scale
    rhs_pow = 2 * n - e0 - result_exponent
    b_bits_col = (1, 0) if column_index == 1 else (0, 1)
    sum_width = 2 * n + 2
    for b in b_bits_col:
        if b and not (n_b <= rhs_pow <= sum_width - 1):
            raise LayoutMismatch(
                f"rhs power {rhs_pow} outside [{n_b}, {sum_width - 1}]; "
                "choose a different result exponent or slack width"
            )

    nl = Netlist()
    x_signs = [nl.new_node() for _ in range(2)]
    x_mags_lsb = [[nl.new_node() for _ in range(n)] for _ in range(2)]

    def clamp_const_bit(bit: int):
        node = nl.new_node()
        nl.add_clamp(node, +1 if bit else -1)
        return node

    signed_products = [[None, None], [None, None]]  # [row][col], width 2n+1 lsb
    for i in range(2):
        for j in range(2):
            m = mantissas[2 * i + j]
            s_entry = signs[2 * i + j]
            a_nodes = [clamp_const_bit((m >> k) & 1) for k in range(n)]
            prod = _multiplier_array(nl, a_nodes, x_mags_lsb[j])
            while len(prod) < 2 * n:
                prod.append(clamp_const_bit(0))  # single-row product, n = 1
            prod.append(clamp_const_bit(0))  # zero-extend before negation
            sign_node = nl.new_node()
            nl.add_gate(
                "XOR", clamp_const_bit(1 if s_entry < 0 else 0), x_signs[j], sign_node
            )
            tc_msb = build_twos_complement_stage(
                nl, list(reversed(prod)), sign_node
            )
            signed_products[i][j] = list(reversed(tc_msb))

    eq_sums = []
    for i in range(2):
        lhs = [p + [p[-1]] for p in signed_products[i]]  # sign-extend to 2n+2
        eq_sums.append(_ripple_add(nl, lhs[0], lhs[1]))

    rhs_values = [b * (1 << rhs_pow) for b in b_bits_col]
    for i, total in enumerate(eq_sums):
        for pos in range(n_b, sum_width):
            nl.add_clamp(total[pos], +1 if (rhs_values[i] >> pos) & 1 else -1)

    nl.set_register("x1_sign", [x_signs[0]])
    nl.set_register("x2_sign", [x_signs[1]])
    nl.set_register("x1", list(reversed(x_mags_lsb[0])))
    nl.set_register("x2", list(reversed(x_mags_lsb[1])))
    nl.set_register("slack1", list(reversed(eq_sums[0][:n_b])))
    nl.set_register("slack2", list(reversed(eq_sums[1][:n_b])))
    nl.set_register("eq1", list(reversed(eq_sums[0])))
    nl.set_register("eq2", list(reversed(eq_sums[1])))

    return ColumnSystem(
        netlist=nl,
        layout=layout,
        column_index=column_index,
        common_exponent=e0,
        result_exponent=result_exponent,
        rhs_pow=rhs_pow,
        rhs_bits=b_bits_col,
        mantissas=tuple(mantissas),
        signs=tuple(signs),
    )


@dataclass
class ColumnSolution:
    report: SolveReport
    trace: Trace
    x: Optional[tuple[FixedPointScalar, FixedPointScalar]]
    slacks: Optional[tuple[int, int]]


def _decode_column(system: ColumnSystem, state) -> tuple:
    comp = _compiled(system.netlist)
    regs = system.netlist.registers
    clamps = system.netlist.clamps

    def node_bit(node):
        if node in clamps:
            return 1 if clamps[node] > 0 else 0
        return 1 if state.v[comp.index[node]] > 0 else 0

    def register_int(name):
        return bits_to_int(node_bit(node) for node in regs[name])

    scalars = []
    for j in (1, 2):
        sign = -1 if register_int(f"x{j}_sign") else +1
        bits = tuple(node_bit(node) for node in regs[f"x{j}"])
        scalars.append(FixedPointScalar(sign, system.result_exponent, bits))
    slacks = (register_int("slack1"), register_int("slack2"))
    return tuple(scalars), slacks


def _column_identity_ok(system: ColumnSystem, x, slacks) -> bool:
    """Exact check of sum_j (+-) m_ij X_j = B_i + slack_i for both equations."""
    for i, b in enumerate(system.rhs_bits):
        lhs = sum(
            system.signs[2 * i + j]
            * x[j].sign
            * system.mantissas[2 * i + j]
            * x[j].mantissa_int
            for j in range(2)
        )
        if lhs != b * (1 << system.rhs_pow) + slacks[i]:
            return False
    return True


def solve_column(system: ColumnSystem, config: SimConfig) -> ColumnSolution:
    """Relax a column system and decode the signed fixed-point unknowns."""
    trace = Trace()
    state, converged, t_c, steps = _integrate(system.netlist, config, trace)
    if not converged:
        report = SolveReport(
            converged=False, t_c=None, decoded=None,
            identity_ok=None, readout_flag=None, steps=steps,
        )
        return ColumnSolution(report=report, trace=trace, x=None, slacks=None)
    x, slacks = _decode_column(system, state)
    identity_ok = _column_identity_ok(system, x, slacks)
    report = SolveReport(
        converged=True, t_c=t_c, decoded=None,
        identity_ok=identity_ok,
        readout_flag="exact" if all(s == 0 for s in slacks) else None,
        steps=steps,
    )
    return ColumnSolution(report=report, trace=trace, x=x, slacks=slacks)


@dataclass
class InversionResult:
    matrix: Optional[Matrix2]
    column_solutions: tuple[ColumnSolution, ColumnSolution]
    residual_inf: Optional[Fraction]
    kappa_bound: Optional[float]
    residual_ok: Optional[bool]

    @property
    def converged(self) -> bool:
        return all(cs.report.converged for cs in self.column_solutions)


def invert_matrix(
    A: Matrix2,
    layout: EmbeddingLayout,
    config: SimConfig,
    result_exponent: Optional[int] = None,
    parallel: bool = False,
) -> InversionResult:
    """Solve both column systems and assemble the inverse matrix.

    Columns are independent simulations; ``parallel=True`` runs them on a
    thread pool with identical per-column seeds, so sequential and parallel
    execution decode identically.  The residual A*X - I is computed in exact
    rational arithmetic and compared against 2**(1-n) times a reported
    condition-number bound (norm_inf(A) * norm_inf(A^-1)).
    """
    det = A.determinant()
    if det == 0:
        raise Singular("matrix determinant is zero")
    systems = [
        build_column_system(A, col, layout, result_exponent) for col in (1, 2)
    ]
    configs = [
        SimConfig(
            epsilon=config.epsilon, t_max=config.t_max,
            dt_initial=config.dt_initial, seed=config.seed + col - 1,
            record_every=config.record_every,
            record_voltages=config.record_voltages,
        )
        for col in (1, 2)
    ]
    if parallel:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=2) as pool:
            solutions = list(pool.map(solve_column, systems, configs))
    else:
        solutions = [solve_column(s, c) for s, c in zip(systems, configs)]

    if not all(cs.report.converged for cs in solutions):
        return InversionResult(
            matrix=None,
            column_solutions=tuple(solutions),
            residual_inf=None, kappa_bound=None, residual_ok=None,
        )

    (x11, x21), (x12, x22) = solutions[0].x, solutions[1].x
    X = Matrix2(a11=x11, a12=x12, a21=x21, a22=x22)

    a = [[A.a11.value(), A.a12.value()], [A.a21.value(), A.a22.value()]]
    x = [[x11.value(), x12.value()], [x21.value(), x22.value()]]
    residual = Fraction(0)
    for i in range(2):
        row_sum = Fraction(0)
        for j in range(2):
            entry = sum(a[i][k] * x[k][j] for k in range(2)) - (1 if i == j else 0)
            row_sum += abs(entry)
        residual = max(residual, row_sum)

    inv = _exact_inverse(A)
    norm_a = max(sum(abs(v) for v in row) for row in a)
    norm_inv = max(sum(abs(v) for v in row) for row in inv)
    kappa = float(norm_a * norm_inv)
    residual_ok = residual <= Fraction(2) ** (1 - layout.n) * Fraction(norm_a * norm_inv)

    return InversionResult(
        matrix=X,
        column_solutions=tuple(solutions),
        residual_inf=residual,
        kappa_bound=kappa,
        residual_ok=bool(residual_ok),
    )
