"""Semitoric helices.

A helix is stored by one fundamental window ``v[0..d-1]`` together with
the complexity ``s``; the full sequence is recovered from the rule
``v[n + d] = (T*)^s v[n]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import atan2, pi
from typing import Optional

from .lattice import IntVec2, LatticeError, RatPoint2, VertexKind, det2, shear, to_rational
from .polygon import Mark, MarkedWeightedPolygon, classify


class HelixError(LatticeError):
    pass


class NoDelzantVertex(HelixError):
    pass


class NoHorizontal(HelixError):
    pass


class SZero(HelixError):
    pass


class ParamOutOfRange(HelixError):
    pass


@dataclass(frozen=True)
class SemitoricHelix:
    d: int
    s: int
    v: tuple

    def __post_init__(self):
        v = tuple(IntVec2(int(a), int(b)) for a, b in self.v)
        object.__setattr__(self, "v", v)
        if self.d != len(v) or self.d <= 0:
            raise HelixError(f"window has {len(v)} vectors but d = {self.d}")
        if self.s < 0:
            raise HelixError("complexity s must be nonnegative")

    def at(self, n: int) -> IntVec2:
        """The n-th vector of the bi-infinite sequence."""
        q, r = divmod(n, self.d)
        return shear(self.v[r], self.s * q)

    def window(self, start: int) -> tuple:
        return tuple(self.at(start + i) for i in range(self.d))

    def check(self) -> None:
        """Raise unless the det = 1 chain and counter-clockwise order hold."""
        for n in range(self.d):
            if det2(self.at(n), self.at(n + 1)) != 1:
                raise HelixError(f"det(v_{n}, v_{n + 1}) != 1")
        # consecutive turns are in (0, pi); the window must not wrap past a full turn
        total = 0.0
        for n in range(self.d - 1):
            a, b = self.v[n], self.v[n + 1]
            total += atan2(det2(a, b), a[0] * b[0] + a[1] * b[1])
        if total >= 2 * pi:
            raise HelixError("window vectors are not in counter-clockwise order")

    def to_json(self) -> dict:
        return {"d": self.d, "s": self.s, "v": [[int(a), int(b)] for a, b in self.v]}


def helix(s: int, vectors) -> SemitoricHelix:
    return SemitoricHelix(len(vectors), s, tuple(vectors))


# --- Algorithm 1 ----------------------------------------------------------------

def helix_from_polygon(P: MarkedWeightedPolygon) -> SemitoricHelix:
    """Unwind the cuts of a valid marked polygon into its helix.

    The walk starts right after the lexicographically smallest Delzant
    corner, so that (w[p-1], w[0]) is Delzant.
    """
    reports = classify(P)
    p = len(reports)
    delzant = [i for i, r in enumerate(reports) if r.kind == VertexKind.DELZANT]
    if not delzant:
        raise NoDelzantVertex("polygon has no Delzant corner to start from")
    i0 = min(delzant, key=lambda i: (reports[i].vertex.x, reports[i].vertex.y))
    # reports[i].normals = (normal of edge into vertex i, normal of edge out of it)
    order = [(i0 + j) % p for j in range(p)]
    w = [reports[i].normals[1] for i in order]          # w[j] = normal of the j-th edge
    corner = [reports[order[(j + 1) % p]] for j in range(p)]  # vertex between w[j] and w[j+1]
    shifted = []
    acc = 0
    for j in range(p):
        shifted.append(shear(w[j], acc))
        if j < p - 1 and corner[j].kind in (VertexKind.HIDDEN, VertexKind.FAKE):
            acc += corner[j].cut_multiplicity
    out = [shifted[0]]
    for j in range(p - 1):
        if corner[j].kind == VertexKind.FAKE:
            assert shifted[j + 1] == shifted[j]
            continue
        out.append(shifted[j + 1])
    s = sum(r.cut_multiplicity for r in reports)
    h = helix(s, out)
    h.check()
    return h


# --- equivalence and reflections --------------------------------------------------

def _solve_shear(a, b) -> Optional[int]:
    """k with (T*)^k b = a, when the y-components agree and b.y != 0."""
    if a[1] != b[1] or b[1] == 0:
        return None
    num = a[0] - b[0]
    if num % b[1]:
        return None
    return num // b[1]


def equivalent(h1: SemitoricHelix, h2: SemitoricHelix) -> bool:
    if (h1.d, h1.s) != (h2.d, h2.s):
        return False
    j0 = next(i for i in range(h1.d) if h1.v[i][1] != 0)
    for ell in range(h1.d):
        k = _solve_shear(h1.v[j0], h2.at(j0 + ell))
        if k is None:
            continue
        if all(h1.v[n] == shear(h2.at(n + ell), k) for n in range(h1.d)):
            return True
    return False


def reflect_helix(h: SemitoricHelix, axis: str) -> SemitoricHelix:
    axis = axis.upper()
    if axis == "J":
        v = [IntVec2(-h.v[h.d - 1 - j][0], h.v[h.d - 1 - j][1]) for j in range(h.d)]
    elif axis == "H":
        v = [IntVec2(h.v[h.d - 1 - j][0], -h.v[h.d - 1 - j][1]) for j in range(h.d)]
    else:
        raise ValueError("axis must be 'J' or 'H'")
    return SemitoricHelix(h.d, h.s, tuple(v))


# --- minimality -------------------------------------------------------------------

def corner_witnesses(h: SemitoricHelix) -> list:
    """Indices j with v_j = v_{j-1} + v_{j+1}."""
    return [j for j in range(h.d) if h.at(j) == h.at(j - 1) + h.at(j + 1)]


def is_minimal(h: SemitoricHelix) -> bool:
    return not corner_witnesses(h)


def has_horizontal(h: SemitoricHelix) -> Optional[int]:
    for i, v in enumerate(h.v):
        if v[1] == 0:
            return i
    return None


def strictly_minimal(h: SemitoricHelix) -> bool:
    return is_minimal(h) and has_horizontal(h) is None


def helix_blowdown(h: SemitoricHelix, hidx: int) -> SemitoricHelix:
    if h.s < 1:
        raise SZero("a helix with s = 0 admits no semitoric blowdown")
    if not 0 <= hidx < h.d or h.v[hidx][1] != 0:
        raise NoHorizontal(f"v_{hidx} is not horizontal")
    v = [shear(h.v[i], 1) if i < hidx else h.v[i] for i in range(h.d)]
    out = SemitoricHelix(h.d, h.s - 1, tuple(v))
    out.check()
    return out


def complete_blowdown(h: SemitoricHelix) -> SemitoricHelix:
    """Blow down until s = 0, rotating the window to start at a horizontal vector."""
    idx = has_horizontal(h)
    if idx is None:
        raise NoHorizontal("helix has no horizontal vector")
    h = SemitoricHelix(h.d, h.s, h.window(idx))
    while h.s:
        h = helix_blowdown(h, 0)
    return h


# --- types ------------------------------------------------------------------------

@dataclass(frozen=True)
class HelixType:
    tag: str
    params: dict = field(default_factory=dict)
    reflect_J: bool = False
    reflect_H: bool = False

    def to_json(self) -> dict:
        return {"tag": self.tag, "params": dict(self.params),
                "reflection": {"J": self.reflect_J, "H": self.reflect_H}}


def _aligned_windows(h: SemitoricHelix, anchor_index: int, anchor):
    """All windows of h, shifted so that entry ``anchor_index`` equals ``anchor``.

    A horizontal anchor is fixed by every shear, so for it the shear is
    instead pinned by the following entry being (0, 1).
    """
    for ell in range(h.d):
        win = h.window(ell)
        if anchor[1] != 0:
            k = _solve_shear(anchor, win[anchor_index])
        else:
            if win[anchor_index] != anchor:
                continue
            k = _solve_shear((0, 1), win[(anchor_index + 1) % h.d]) if anchor_index + 1 < h.d else None
        if k is None:
            continue
        yield tuple(shear(w, k) for w in win)


def _match_template(h: SemitoricHelix):
    d, s = h.d, h.s
    if d == 2 and s in (1, 2):
        for u in _aligned_windows(h, 0, (0, 1)):
            if s == 1 and u[1] == (-1, -2):
                return "T1", {}
            if s == 2 and u[1] == (-1, -1):
                return "T2", {}
    if d == 3:
        for u in _aligned_windows(h, 0, (0, 1)):
            if s == 1 and u[2] == (0, -1) and u[1][0] == -1 and 1 - u[1][1] >= 1:
                return "T3", {"n": 1 - u[1][1]}
        for u in _aligned_windows(h, 0, (1, 0)):
            if s != 2 and u[1] == (0, 1) and u[2] == (-1, -1):
                return "T4", {"s": s}
    if d == 4:
        for u in _aligned_windows(h, 0, (1, 0)):
            if u[1] != (0, 1):
                continue
            if s != 1 and u[3] == (0, -1) and u[2][0] == -1 and 1 - u[2][1] >= 1:
                return "T5", {"n": 1 - u[2][1], "s": s}
            if s >= 1 and u[2] == (-1, 0) and u[3][1] == -1:
                return "T6", {"n": 1 - u[3][0], "s": s}
    return None


def classify_type(h: SemitoricHelix) -> HelixType:
    if h.s == 0:
        return HelixType("S0Fan", {"model": _fan_model(h)})
    for flags in ((False, False), (True, False), (False, True), (True, True)):
        g = h
        if flags[0]:
            g = reflect_helix(g, "J")
        if flags[1]:
            g = reflect_helix(g, "H")
        m = _match_template(g)
        if m is not None:
            return HelixType(m[0], m[1], *flags)
    if h.d >= 6 and is_minimal(h):
        for ell in range(h.d):
            win = h.window(ell)
            if win[2] == -win[0] and any(w[1] == 0 and abs(w[0]) == 1 for w in win[3:]):
                return HelixType("LongMinimal", {"start": ell})
    return HelixType("Other")


def _fan_model(h: SemitoricHelix) -> str:
    """Name of the toric surface of a smooth complete fan (s = 0)."""
    if h.d == 3:
        return "CP2"
    if h.d == 4:
        coeffs = []
        for j in range(4):
            a, b, c = h.at(j - 1), h.at(j), h.at(j + 1)
            tot = a + c
            # a + c is a multiple of b for a smooth complete fan
            m = tot[0] // b[0] if b[0] else tot[1] // b[1]
            coeffs.append(m)
        return f"W{max(abs(m) for m in coeffs)}"
    return f"Blowup(d={h.d})"


def minimal_toric_model(h: SemitoricHelix) -> str:
    """Toric model reached by the complete left semitoric blowdown."""
    if h.s == 0:
        return _fan_model(h)
    t = classify_type(h)
    if t.tag not in ("T4", "T5", "T6"):
        raise HelixError(f"helix of type {t.tag} has no minimal toric model")
    return _fan_model(complete_blowdown(h))


# --- strictly minimal polygons ------------------------------------------------------

def build_minimal_polygon(kind: str, alpha=None, beta=None, n: Optional[int] = None,
                          h=None, h1=None, h2=None) -> MarkedWeightedPolygon:
    """The representatives of the strictly minimal polygon types.

    ``kind`` is one of ``1, 2a, 2b, 3a, 3b, 3c``.
    """
    q = lambda x: None if x is None else to_rational(x)
    alpha, beta, h, h1, h2 = q(alpha), q(beta), q(h), q(h1), q(h2)
    kind = str(kind)

    def need(cond, msg):
        if not cond:
            raise ParamOutOfRange(msg)

    P = lambda pts, marks: MarkedWeightedPolygon(
        tuple(RatPoint2(Fraction(x), Fraction(y)) for x, y in pts),
        tuple(Mark(RatPoint2(Fraction(x), Fraction(y)), 1) for x, y in marks))
    if kind == "1":
        need(alpha is not None and alpha > 0, "alpha > 0")
        need(h is not None and 0 < h < alpha / 2, "0 < h < alpha/2")
        return P([(0, 0), (2 * alpha, 0), (alpha, alpha / 2)], [(alpha, h)])
    if kind in ("2a", "2b"):
        need(beta is not None and beta > 0, "beta > 0")
        need(h1 is not None and h2 is not None and 0 < h1 < beta and 0 < h2 < beta, "0 < h1, h2 < beta")
        if kind == "2a":
            need(alpha is not None and alpha > 0, "alpha > 0")
            return P([(0, 0), (alpha + 2 * beta, 0), (alpha + beta, beta), (beta, beta)],
                     [(beta, h1), (alpha + beta, h2)])
        return P([(0, 0), (2 * beta, 0), (beta, beta)], [(beta, h1), (beta, h2)])
    need(n is not None, "n is required")
    need(beta is not None and beta > 0, "beta > 0")
    need(h is not None and h > 0, "h > 0")
    if kind == "3a":
        need(n >= 1, "n >= 1")
        need(alpha is not None and alpha > 0, "alpha > 0")
        need(h < beta, "h < beta")
        return P([(0, 0), (alpha + n * beta, 0), (alpha + beta, beta), (beta, beta)], [(beta, h)])
    if kind == "3b":
        need(n >= 2, "n >= 2")
        need(h < beta, "h < beta")
        return P([(0, 0), (n * beta, 0), (beta, beta)], [(beta, h)])
    if kind == "3c":
        need(n >= 2, "n >= 2")
        need(alpha is not None and 0 < alpha < beta, "0 < alpha < beta")
        top = beta - alpha / (n - 1)
        need(h < top, "h < beta - alpha/(n-1)")
        return P([(0, 0), (n * beta - alpha, 0), (beta, top), (beta - alpha, beta - alpha)], [(beta, h)])
    raise ParamOutOfRange(f"unknown polygon type {kind!r}")
