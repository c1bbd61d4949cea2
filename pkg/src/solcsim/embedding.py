"""Exact-arithmetic layer for fixed-point inversion.

A fixed-point scalar is ``sign * 2**exponent * (0.b_{n-1}...b_0)``.  Dividing
c by a is recast as integer arithmetic on the mantissas: find b_hat with

    a_int * b_hat = c_int * 2**(n + n_b) + c_f,

where b_hat carries n readout bits plus n_b floating (satisfiability) bits
and c_f < 2**n_b absorbs the remainder.  Euclidean division guarantees a
solution with c_f < a_int, so n_b equal to the bit length of a_int always
suffices.  Everything here is pure integer/rational arithmetic (Python ints,
``fractions.Fraction``); these functions are the ground truth the circuit
and dynamics layers are checked against.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import (
    DivisorZero,
    LayoutMismatch,
    QuotientOverflow,
    SlackOverflow,
    TooLarge,
    ZeroMantissa,
)

Bits = tuple[int, ...]


def bits_to_int(bits: Iterable[int]) -> int:
    """Interpret a most-significant-first bit vector as an unsigned integer."""
    value = 0
    for b in bits:
        value = (value << 1) | (b & 1)
    return value


def int_to_bits(value: int, width: int) -> Bits:
    """Unsigned integer to a most-significant-first bit vector of given width."""
    if value < 0 or value >= (1 << width):
        raise ValueError(f"{value} does not fit in {width} bits")
    return tuple((value >> k) & 1 for k in reversed(range(width)))


@dataclass(frozen=True)
class FixedPointScalar:
    """A signed fixed-point number ``sign * 2**exponent * (mantissa / 2**n)``.

    The mantissa is stored most-significant bit first and read as the binary
    fraction 0.b_{n-1}...b_0.  A scalar is *normalized* when its leading
    mantissa bit is 1; raw (unnormalized) scalars are permitted and simply
    report ``is_normalized == False``.
    """

    sign: int
    exponent: int
    mantissa: Bits

    def __post_init__(self):
        if self.sign not in (+1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        if len(self.mantissa) < 1:
            raise ValueError("mantissa must have at least one bit")
        if any(b not in (0, 1) for b in self.mantissa):
            raise ValueError("mantissa bits must be 0 or 1")
        object.__setattr__(self, "mantissa", tuple(self.mantissa))

    @property
    def n(self) -> int:
        return len(self.mantissa)

    @property
    def mantissa_int(self) -> int:
        return bits_to_int(self.mantissa)

    @property
    def is_normalized(self) -> bool:
        return self.mantissa[0] == 1

    def value(self) -> Fraction:
        """Exact rational value of the scalar."""
        frac = Fraction(self.mantissa_int, 1 << self.n)
        return self.sign * frac * Fraction(2) ** self.exponent

    def __str__(self):
        bits = "".join(str(b) for b in self.mantissa)
        s = "-" if self.sign < 0 else ""
        return f"{s}0.{bits}b2^{self.exponent}"


def normalize(sign: int, exponent: int, raw_mantissa: Iterable[int]) -> FixedPointScalar:
    """Left-shift the mantissa until its leading bit is 1, preserving value.

    Each left shift doubles the fraction, so the exponent drops by the shift
    count and ``sign * 2**exponent * fraction`` is unchanged as an exact
    rational.  Raises ZeroMantissa for an all-zero mantissa.
    """
    bits = tuple(raw_mantissa)
    if not any(bits):
        raise ZeroMantissa("all-zero mantissa cannot be normalized")
    shift = bits.index(1)
    shifted = bits[shift:] + (0,) * shift
    return FixedPointScalar(sign, exponent - shift, shifted)


def from_decimal(value: int, n: int, sign: int = +1) -> FixedPointScalar:
    """Encode a positive integer as a raw n-bit scalar (mantissa = value).

    The exponent is set to n so that ``2**n * (value / 2**n) == value``.
    This is the raw-mode encoding used to reproduce integer test inputs
    directly in the mantissa register.
    """
    if value <= 0:
        raise ValueError("decimal raw encoding requires a positive integer")
    if value >= (1 << n):
        raise ValueError(f"{value} does not fit an {n}-bit mantissa")
    return FixedPointScalar(sign, n, int_to_bits(value, n))


def solve_exponent(m_a: int, m_c: int) -> int:
    """Exponent of the quotient: the operand exponents satisfy m_a + m_b = m_c."""
    return m_c - m_a


def sign_of_quotient(s_a: int, s_c: int) -> int:
    """Sign of c/a: XOR of the operand sign bits (+1 if equal, -1 otherwise)."""
    if s_a not in (+1, -1) or s_c not in (+1, -1):
        raise ValueError("signs must be +1 or -1")
    return s_a * s_c


@dataclass(frozen=True)
class EmbeddingLayout:
    """Register widths of the integer embedding.

    n    -- mantissa width of the operands and the readout
    n_a  -- enhanced-precision zero padding on a (reduced away before any
            circuit is built; it contributes no significant digits)
    n_b  -- satisfiability / floating bit count; at most n is ever needed,
            smaller values (down to 0) are allowed for negative tests
    """

    n: int
    n_a: int = 0
    n_b: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.n_a < 0:
            raise ValueError("n_a must be >= 0")
        if not 0 <= self.n_b <= self.n:
            raise ValueError("n_b must be in [0, n]")

    @property
    def width(self) -> int:
        """Width of the unknown register b_hat (n + n_b)."""
        return self.n + self.n_b


def reduce_precision_bits(layout: EmbeddingLayout) -> EmbeddingLayout:
    """Drop the precision padding on a (n_a -> 0), all else unchanged.

    Padding a with zeros scales both sides of the integer identity by the
    same power of two, so the minimal solution and its readout bits are
    invariant; the padded register is inert and is eliminated here.
    """
    return replace(layout, n_a=0)


@dataclass(frozen=True)
class EmbeddedInstance:
    """The integer problem a_int * b_hat = c_int * 2**(n + n_b - c_shift) + c_f.

    c_shift is 0 for raw instances.  Strict-mode pre-normalization sets it
    to 1 when c_int >= a_int: the known product's contribution is halved
    (exactly, through the power of two) so the quotient mantissa stays below
    one, and the decoded result exponent is adjusted by +1 in compensation.
    """

    a_int: int
    c_int: int
    layout: EmbeddingLayout
    c_shift: int = 0

    def __post_init__(self):
        if self.layout.n_a != 0:
            raise LayoutMismatch("instances are built on reduced layouts (n_a = 0)")
        if self.a_int == 0:
            raise DivisorZero("a_int must be nonzero")
        if not 0 < self.a_int < (1 << self.layout.n):
            raise LayoutMismatch(f"a_int={self.a_int} does not fit {self.layout.n} bits")
        if not 0 <= self.c_int < (1 << self.layout.n):
            raise LayoutMismatch(f"c_int={self.c_int} does not fit {self.layout.n} bits")
        if self.c_shift not in (0, 1):
            raise ValueError("c_shift must be 0 or 1")

    @property
    def rhs_constant(self) -> int:
        """The known part of the product register: c_int * 2**(n + n_b - c_shift)."""
        return self.c_int << (self.layout.n + self.layout.n_b - self.c_shift)


def build_embedding(
    a: FixedPointScalar,
    c: FixedPointScalar,
    layout: EmbeddingLayout,
    *,
    strict: bool = False,
) -> EmbeddedInstance:
    """Reinterpret the operand mantissas as integers and form the instance.

    Raw mode (default) takes the mantissas verbatim and leaves the caller
    responsible for c_int < a_int.  Strict mode requires normalized operands
    and, when c_int >= a_int, pre-normalizes the quotient by halving c's
    contribution (recorded in c_shift) so that the embedded ratio is below
    one -- the standard division pre-shift.
    """
    if layout.n_a != 0:
        layout = reduce_precision_bits(layout)
    if a.n != layout.n or c.n != layout.n:
        raise LayoutMismatch(
            f"mantissa widths ({a.n}, {c.n}) do not match layout n={layout.n}"
        )
    a_int = a.mantissa_int
    c_int = c.mantissa_int
    if a_int == 0:
        raise DivisorZero("cannot invert a zero mantissa")
    c_shift = 0
    if strict:
        if not (a.is_normalized and c.is_normalized):
            raise ValueError("strict mode requires normalized operands")
        if c_int >= a_int:
            c_shift = 1
    return EmbeddedInstance(a_int=a_int, c_int=c_int, layout=layout, c_shift=c_shift)


@dataclass(frozen=True)
class DecodedSolution:
    """A satisfying assignment of the integer identity.

    b_hat  -- full (n + n_b)-bit unknown
    b_bits -- top n bits of b_hat, the fixed-point readout (MSB first)
    b_f    -- low n_b bits of b_hat
    c_f    -- slack absorbed on the known side
    """

    b_hat: int
    b_bits: Bits
    b_f: int
    c_f: int

    @property
    def b_bits_int(self) -> int:
        return bits_to_int(self.b_bits)


def _make_solution(b_hat: int, c_f: int, layout: EmbeddingLayout) -> DecodedSolution:
    n_b = layout.n_b
    return DecodedSolution(
        b_hat=b_hat,
        b_bits=int_to_bits(b_hat >> n_b, layout.n),
        b_f=b_hat & ((1 << n_b) - 1),
        c_f=c_f,
    )


def oracle_divide(instance: EmbeddedInstance) -> DecodedSolution:
    """Solve the integer identity directly by ceiling division.

    Returns the minimal satisfying b_hat = ceil(rhs / a_int), for which the
    slack c_f = a_int * b_hat - rhs lies in [0, a_int).  Raises
    QuotientOverflow when b_hat needs more than n + n_b bits (only possible
    for c_int >= a_int) and SlackOverflow when c_f does not fit n_b bits
    (only possible when n_b is below the bit length of a_int).
    """
    if instance.c_int < 1:
        raise ValueError("oracle requires c_int >= 1")
    layout = instance.layout
    rhs = instance.rhs_constant
    a_int = instance.a_int
    b_hat = -(-rhs // a_int)
    c_f = a_int * b_hat - rhs
    if b_hat >= (1 << layout.width):
        raise QuotientOverflow(
            f"b_hat={b_hat} needs more than {layout.width} bits (c_int >= a_int?)"
        )
    if c_f >= (1 << layout.n_b):
        raise SlackOverflow(
            f"slack {c_f} does not fit {layout.n_b} bits; "
            f"a_int={a_int} needs n_b >= {a_int.bit_length()}"
        )
    return _make_solution(b_hat, c_f, layout)


def verify_identity(sol: DecodedSolution, instance: EmbeddedInstance) -> bool:
    """Check the integer identity exactly with arbitrary-width arithmetic."""
    layout = instance.layout
    if sol.b_f >= (1 << layout.n_b) or sol.c_f >= (1 << layout.n_b):
        return False
    if sol.b_f < 0 or sol.c_f < 0:
        return False
    if sol.b_hat != sol.b_bits_int * (1 << layout.n_b) + sol.b_f:
        return False
    return instance.a_int * sol.b_hat == instance.rhs_constant + sol.c_f


def enumerate_solutions(instance: EmbeddedInstance) -> set[DecodedSolution]:
    """Exhaustively enumerate every satisfying (b_hat, c_f) pair.

    Scans all b_hat < 2**(n + n_b); the identity determines the unique
    candidate slack for each, which is kept iff it fits the slack register.
    Widths are capped at 24 bits so the int64 products stay exact and the
    scan stays tractable.
    """
    layout = instance.layout
    if layout.width > 24:
        raise TooLarge(f"n + n_b = {layout.width} exceeds the enumeration bound (24)")
    rhs = instance.rhs_constant
    b_hat = np.arange(1 << layout.width, dtype=np.int64)
    c_f = instance.a_int * b_hat - np.int64(rhs)
    mask = (c_f >= 0) & (c_f < (1 << layout.n_b))
    return {
        _make_solution(int(b), int(s), layout)
        for b, s in zip(b_hat[mask], c_f[mask])
    }


def exact_truncation(instance: EmbeddedInstance) -> int:
    """The quotient c/a truncated to n fractional bits, as an integer."""
    return (instance.rhs_constant // instance.a_int) >> instance.layout.n_b


def classify_readout(instance: EmbeddedInstance, b_bits_int: int) -> str:
    """Label a readout as 'exact' or 'plus-one-ulp' relative to truncation.

    Satisfying assignments can sit one unit high when the family of valid
    b_hat values crosses a readout boundary; anything else is not a valid
    readout and raises ValueError.
    """
    trunc = exact_truncation(instance)
    if b_bits_int == trunc:
        return "exact"
    if b_bits_int == trunc + 1:
        return "plus-one-ulp"
    raise ValueError(f"readout {b_bits_int} is neither truncation {trunc} nor +1 ulp")


def quotient_scalar(
    a: FixedPointScalar,
    c: FixedPointScalar,
    instance: EmbeddedInstance,
    sol: DecodedSolution,
) -> FixedPointScalar:
    """Assemble the fixed-point quotient from readout bits, signs and exponents."""
    sign = sign_of_quotient(a.sign, c.sign)
    exponent = solve_exponent(a.exponent, c.exponent) + instance.c_shift
    return FixedPointScalar(sign, exponent, sol.b_bits)
