"""Exact planar lattice arithmetic.

Everything here works over the integers and :class:`fractions.Fraction`;
no floating point is ever produced.  The vertex conditions of marked
semitoric polygons reduce to exact equalities between small integer
vectors, so this module is the foundation for the combinatorial layers.
"""

from __future__ import annotations

from enum import Enum
from fractions import Fraction
from math import gcd
from typing import NamedTuple, Union

Rational = Fraction
RationalLike = Union[int, Fraction, str]


class IntVec2(NamedTuple):
    x: int
    y: int

    def __neg__(self) -> "IntVec2":
        return IntVec2(-self.x, -self.y)

    def __add__(self, other) -> "IntVec2":  # type: ignore[override]
        return IntVec2(self.x + other[0], self.y + other[1])

    def __sub__(self, other) -> "IntVec2":
        return IntVec2(self.x - other[0], self.y - other[1])


class RatPoint2(NamedTuple):
    x: Fraction
    y: Fraction

    def __add__(self, other) -> "RatPoint2":  # type: ignore[override]
        return RatPoint2(self.x + other[0], self.y + other[1])

    def __sub__(self, other) -> "RatPoint2":
        return RatPoint2(self.x - other[0], self.y - other[1])


class LatticeError(ValueError):
    """Base class for errors raised by the exact layers."""


class DegenerateSegment(LatticeError):
    pass


def to_rational(value: RationalLike) -> Fraction:
    """Parse an exact rational.

    Accepts ints, Fractions and strings of the form ``"p"`` or ``"p/q"``.
    Decimal strings and floats are rejected so that the boundary between
    exact and approximate input stays explicit.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if any(ch in text for ch in ".eE") or not text:
            raise LatticeError(f"not an exact rational: {value!r}")
        return Fraction(text)
    raise TypeError(f"cannot interpret {type(value).__name__} as an exact rational")


def point(x: RationalLike, y: RationalLike) -> RatPoint2:
    return RatPoint2(to_rational(x), to_rational(y))


def format_rational(q: Fraction) -> str:
    """Serialize as ``"p/q"``, or ``"p"`` when the denominator is one."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def det2(v1, v2) -> int:
    return v1[0] * v2[1] - v2[0] * v1[1]


def shear(v, k: int) -> IntVec2:
    """Apply ``(T*)^k``, i.e. ``(x, y) -> (x + k y, y)``."""
    return IntVec2(v[0] + k * v[1], v[1])


def is_primitive(v) -> bool:
    return (v[0], v[1]) != (0, 0) and gcd(abs(v[0]), abs(v[1])) == 1


def primitive(v) -> IntVec2:
    """Divide an integer vector by the gcd of its entries (sign kept)."""
    g = gcd(abs(v[0]), abs(v[1]))
    if g == 0:
        raise DegenerateSegment("zero vector has no primitive direction")
    return IntVec2(v[0] // g, v[1] // g)


def primitive_direction(p, q) -> IntVec2:
    """Primitive integer direction of the rational segment from p to q.

    The sign is kept so that the vector points from p to q.  Use
    :func:`canonical_direction` for the orientation-free version.
    """
    dx = Fraction(q[0]) - Fraction(p[0])
    dy = Fraction(q[1]) - Fraction(p[1])
    if dx == 0 and dy == 0:
        raise DegenerateSegment(f"segment {p} -> {q} is a point")
    # clear denominators then reduce
    den = dx.denominator * dy.denominator // gcd(dx.denominator, dy.denominator)
    return primitive((int(dx * den), int(dy * den)))


def canonical_direction(v) -> IntVec2:
    """Primitive direction oriented by x > 0, or x = 0 and y > 0."""
    w = primitive(v)
    if w.x < 0 or (w.x == 0 and w.y < 0):
        w = -w
    return w


def sl2z_length(p, q) -> Fraction:
    """Affine lattice length of the segment pq.

    This is the length of A(pq) for any A in SL(2, Z) making the segment
    horizontal.
    """
    a, b = canonical_direction(primitive_direction(p, q))
    if a != 0:
        return abs(Fraction(q[0]) - Fraction(p[0])) / abs(a)
    return abs(Fraction(q[1]) - Fraction(p[1])) / abs(b)


def inward_normal(p, q) -> IntVec2:
    """Primitive inward normal of the edge p -> q of a CCW polygon."""
    dx, dy = primitive_direction(p, q)
    return IntVec2(-dy, dx)


class VertexKind(str, Enum):
    DELZANT = "Delzant"
    HIDDEN = "Hidden"
    FAKE = "Fake"
    INVALID = "Invalid"


class VertexCondition(NamedTuple):
    kind: VertexKind
    k: int

    def __str__(self) -> str:
        if self.kind in (VertexKind.HIDDEN, VertexKind.FAKE):
            return f"{self.kind.value}({self.k})"
        return self.kind.value


def vertex_condition(v1, v2, k: int) -> VertexCondition:
    """Classify a vertex from its inward normals and its cut multiplicity.

    For k = 0 only the Delzant condition is tested.  For k >= 1 the
    fake condition is checked first, then the hidden one.
    """
    if k < 0:
        raise ValueError("cut multiplicity must be nonnegative")
    if not (is_primitive(v1) and is_primitive(v2)):
        raise LatticeError("vertex_condition expects primitive vectors")
    if k == 0:
        if det2(v1, v2) == 1:
            return VertexCondition(VertexKind.DELZANT, 0)
        return VertexCondition(VertexKind.INVALID, 0)
    w = shear(v2, k)
    if tuple(v1) == tuple(w):
        return VertexCondition(VertexKind.FAKE, k)
    if det2(v1, w) == 1:
        return VertexCondition(VertexKind.HIDDEN, k)
    return VertexCondition(VertexKind.INVALID, k)


def apply_matrix(m, v):
    """Multiply a 2x2 integer matrix (row-major nested tuple) by a vector."""
    return (m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1])
