"""Reduced-Hamiltonian analysis of the explicit one-parameter families.

Each family is described on the reduced space ``J = j`` by

    H(X, theta) = a(j, X) - b(j, X) cos(theta) sqrt(c(j, X)),   X = rho**2,

and its rank one points are located through ``f = 2 a_X sqrt(c)`` and
``g = 2 b_X c + b c_X``: critical points sit at ``theta = arccos(eps)``
with ``f = eps g``.  Partial derivatives of a, b and c are produced
exactly by a small forward-mode Taylor jet, so that the near-zero
comparisons of the parabolic test are not polluted by finite-difference
noise.

The built-in families are the CP^2 half-family (a type (1) polygon) and
the unified type (3) family: sigma = -1 gives type (3c), sigma = +1
type (3a) and alpha = 0 type (3b).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

# ---------------------------------------------------------------------------
# errors


class ReducedError(ValueError):
    """Base class for numerical-layer errors."""


class ParamInvalid(ReducedError):
    pass


class JOutOfRange(ReducedError):
    pass


class TNotInWindow(ReducedError):
    pass


class NewtonDiverged(ReducedError):
    pass


# ---------------------------------------------------------------------------
# forward-mode jets in the two variables (X, j)


class Jet:
    """Truncated bivariate Taylor polynomial around a base point.

    ``coef[(i, k)]`` holds the coefficient of ``dX**i dj**k``, so the
    partial derivative of order (i, k) is ``coef[(i, k)] * i! * k!``.
    Coefficients may be numpy arrays, which makes every operation
    vectorized over a batch of base points.
    """

    __slots__ = ("coef", "order")

    def __init__(self, coef: dict, order: int):
        self.coef = coef
        self.order = order

    @classmethod
    def variable(cls, value, which: str, order: int) -> "Jet":
        unit = (1, 0) if which == "X" else (0, 1)
        coef = {(0, 0): value}
        if order >= 1:
            coef[unit] = 1.0
        return cls(coef, order)

    @property
    def value(self):
        return self.coef[(0, 0)]

    def partial(self, i: int, k: int = 0):
        if i + k > self.order:
            raise ValueError("derivative order exceeds jet order")
        return self.coef.get((i, k), 0.0) * math.factorial(i) * math.factorial(k)

    def dX(self) -> "Jet":
        coef = {(i - 1, k): i * v for (i, k), v in self.coef.items() if i >= 1}
        coef.setdefault((0, 0), 0.0)
        return Jet(coef, self.order - 1)

    def truncate(self, order: int) -> "Jet":
        return Jet({key: v for key, v in self.coef.items() if sum(key) <= order}, order)

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet({(0, 0): other}, self.order)

    def __add__(self, other):
        other = self._lift(other)
        n = min(self.order, other.order)
        coef = {}
        for src in (self.coef, other.coef):
            for key, v in src.items():
                if sum(key) <= n:
                    coef[key] = coef[key] + v if key in coef else v
        return Jet(coef, n)

    __radd__ = __add__

    def __neg__(self):
        return Jet({key: -v for key, v in self.coef.items()}, self.order)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet({key: v * other for key, v in self.coef.items()}, self.order)
        n = min(self.order, other.order)
        coef: dict = {}
        for (i1, k1), v1 in self.coef.items():
            for (i2, k2), v2 in other.coef.items():
                if i1 + i2 + k1 + k2 <= n:
                    key = (i1 + i2, k1 + k2)
                    coef[key] = coef[key] + v1 * v2 if key in coef else v1 * v2
        return Jet(coef, n)

    __rmul__ = __mul__

    def _compose(self, derivs) -> "Jet":
        """Apply a scalar function given its derivatives at the base value."""
        delta = Jet({k: v for k, v in self.coef.items() if k != (0, 0)}, self.order)
        out = Jet({(0, 0): derivs[0]}, self.order)
        power = None
        for m in range(1, self.order + 1):
            power = delta if power is None else power * delta
            out = out + power * (derivs[m] / math.factorial(m))
        return out

    def __pow__(self, p):
        if isinstance(p, int) and p >= 0:
            out = Jet({(0, 0): 1.0}, self.order)
            for _ in range(p):
                out = out * self
            return out
        u0 = self.value
        derivs = []
        for m in range(self.order + 1):
            fall = 1.0
            for r in range(m):
                fall *= p - r
            derivs.append(fall * u0 ** (p - m))
        return self._compose(derivs)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other ** -1
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return (self ** -1) * other


def _sqrt(x):
    if isinstance(x, Jet):
        return x ** 0.5
    return np.sqrt(x)


# ---------------------------------------------------------------------------
# rank zero classification


FOCUS_FOCUS = "FocusFocus"
ELLIPTIC_ELLIPTIC = "EllipticElliptic"
DEGENERATE = "Degenerate"
NON_INTEGRABLE = "NonIntegrable"


def rank_zero_type(mu1: float, mu2: float, mu3: float, tol: float = 1e-12) -> str:
    """Type of a fixed point whose quadratic part is
    ``mu1 Re(z1 z2) + mu2 |z1|^2 + mu3 |z2|^2``."""
    s = mu2 + mu3
    if mu1 == 0 and s == 0:
        return NON_INTEGRABLE
    gap = abs(s) - abs(mu1)
    if abs(gap) <= tol:
        return DEGENERATE
    return FOCUS_FOCUS if gap < 0 else ELLIPTIC_ELLIPTIC


@dataclass(frozen=True)
class FixedPoint:
    label: str
    j: float
    mu: Callable[[float], tuple]
    value: Optional[Callable[[float], float]] = None


def w1_transition_point(beta: float, gamma: float) -> FixedPoint:
    """Transition point C of the W_1 family with H_t = (1-2t)|u3|^2/2 + t gamma Re(conj(u1) u3 conj(u4))."""
    return FixedPoint("C", float("nan"),
                      lambda t: (t * gamma * math.sqrt(2 * beta), 0.0, -(1 - 2 * t) / 2))


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class ReducedFamily:
    """Common interface; concrete families override the model hooks."""

    t: float
    permissive: bool = False

    name = "abstract"
    sphere_side = "min"   # whether the Z_k-sphere carries minima or maxima of H_t

    # model hooks --------------------------------------------------------
    def a(self, j, X):
        raise NotImplementedError

    def b(self, j, X):
        raise NotImplementedError

    def c(self, j, X):
        raise NotImplementedError

    def x_minus(self, j):
        raise NotImplementedError

    def x_plus(self, j):
        raise NotImplementedError

    def j_range(self) -> tuple:
        raise NotImplementedError

    def transition_point(self) -> FixedPoint:
        raise NotImplementedError

    def closed_times(self) -> tuple:
        raise NotImplementedError

    def height_G(self, X):
        raise NotImplementedError

    def height_interval(self) -> tuple:
        raise NotImplementedError

    def ambient_pairs(self, rng, samples: int, z3_zero: bool = False):
        """Return (H_sphere, H_z) arrays for points sharing a J-fiber."""
        raise NotImplementedError

    # shared -------------------------------------------------------------
    def with_t(self, t: float) -> "ReducedFamily":
        return replace(self, t=t)

    def H(self, j, X, theta):
        return self.a(j, X) - self.b(j, X) * np.cos(theta) * np.sqrt(self.c(j, X))

    def params(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class CP2Family(ReducedFamily):
    alpha: float = 1.0
    gamma: float = 0.125
    delta: float = 5.0

    name = "cp2"
    sphere_side = "min"

    def __post_init__(self):
        al, ga, de = self.alpha, self.gamma, self.delta
        if not (al > 0 and ga > 0):
            raise ParamInvalid("need alpha > 0 and gamma > 0")
        if not 0 <= self.t <= 1:
            raise ParamInvalid("t must lie in [0, 1]")
        if not self.permissive:
            if not ga < 1 / (4 * al):
                raise ParamInvalid(f"gamma must be < 1/(4 alpha) = {1 / (4 * al)}")
            if not de > 1 / (2 * ga * al):
                raise ParamInvalid(f"delta must be > 1/(2 gamma alpha) = {1 / (2 * ga * al)}")

    def a(self, j, X):
        al, ga, de, t = self.alpha, self.gamma, self.delta, self.t
        return 2 * ga * de * t * al ** 2 + (1 - 2 * t) * (al + j - X) - 2 * ga * de * t * (X - j) ** 2

    def b(self, j, X):
        return 4 * self.gamma * self.t * (X - self.alpha - j)

    def c(self, j, X):
        return X * (X - 2 * j)

    def x_minus(self, j):
        return max(0.0, 2 * j)

    def x_plus(self, j):
        return self.alpha + j

    def j_range(self):
        return (-self.alpha, self.alpha)

    def transition_point(self):
        al, ga, de = self.alpha, self.gamma, self.delta
        return FixedPoint(
            "B", 0.0,
            lambda t: (4 * ga * t * al, (2 * t - 1) / 2, (2 * t - 1) / 2),
            lambda t: 2 * ga * de * t * al ** 2 + (1 - 2 * t) * al)

    def closed_times(self):
        k = 2 * self.gamma * self.alpha
        return (1 / (2 * (1 + k)), 1 / (2 * (1 - k)))

    # explicit f, g used as an independent check on the jet assembly
    def f_explicit(self, j, X):
        ga, de, t = self.gamma, self.delta, self.t
        return 2 * (2 * t - 1 - 4 * ga * de * t * (X - j)) * np.sqrt(X * (X - 2 * j))

    def g_explicit(self, j, X):
        return 8 * self.gamma * self.t * (2 * X ** 2 - (self.alpha + 4 * j) * X + j * (self.alpha + j))

    def height_G(self, X):
        ga, de, t, al = self.gamma, self.delta, self.t, self.alpha
        return (1 - 2 * t + 2 * ga * de * t * X) / (4 * ga * t * (al - X))

    def height_interval(self):
        return (0.0, self.alpha)

    def x_plus_height(self):
        tm, _ = self.closed_times()
        return (self.t / tm - 1) / (2 * self.gamma * self.t * (self.delta + 2))

    def j_t(self):
        """Closed-form bound on the flap width for t in (t+, 1]."""
        ga, al, de, t = self.gamma, self.alpha, self.delta, self.t
        disc = 16 * ga * al * t * (2 * t - 1 + ga * al * t * (de ** 2 - 4 * de + 1)) - (2 * t - 1) ** 2
        return ((de - 2) * (2 * (1 - 4 * ga * al) * t - 1) + math.sqrt(disc)) / (4 * ga * t * (de ** 2 - 4 * de + 5))

    def j_1(self):
        ga, al, de = self.gamma, self.alpha, self.delta
        disc = 16 * ga * al * (1 + ga * al * (de ** 2 - 4 * de + 1)) - 1
        return ((de - 2) * (1 - 8 * ga * al) + math.sqrt(disc)) / (4 * ga * (de ** 2 - 4 * de + 5))

    def k_t(self, j):
        """The decreasing function whose unique zero in (0, alpha) is j_t."""
        ga, al, de, t = self.gamma, self.alpha, self.delta, self.t
        _, tp = self.closed_times()
        return t / tp - 1 - 4 * ga * t * ((de - 2) * j + al - math.sqrt(al ** 2 - j ** 2))

    def ambient_H(self, z):
        al, ga, de, t = self.alpha, self.gamma, self.delta, self.t
        z1, z2, z3 = z
        R = 0.5 * (abs(z1) ** 2 + abs(z2) ** 2)
        Xc = np.real(z1 * z2 * np.conj(z3) ** 2)
        return 2 * ga * de * t * al ** 2 + (1 - 2 * t) * abs(z3) ** 2 / 2 + 2 * ga * t * (Xc - de * R ** 2)

    def ambient_pairs(self, rng, samples, z3_zero=False):
        al = self.alpha
        if z3_zero:
            u = rng.uniform(0, 1, samples)
            mods = np.stack([2 * al * u, 2 * al * (1 - u), np.zeros(samples)])
        else:
            mods = 2 * al * rng.dirichlet(np.ones(3), samples).T
        phases = rng.uniform(0, 2 * np.pi, (3, samples))
        z = np.sqrt(mods) * np.exp(1j * phases)
        j = 0.5 * (mods[0] - mods[1])
        w = (np.sqrt(al + j).astype(complex), np.sqrt(al - j).astype(complex), np.zeros(samples, complex))
        return self.ambient_H(w), self.ambient_H(z), np.ones(samples, bool)


SIGMA = {"3c": -1, "3a": 1, "3b": 0}


@dataclass(frozen=True)
class Type3Family(ReducedFamily):
    kind: str = "3c"
    alpha: float = 1.0
    beta: float = 2.0
    n: int = 3
    gamma: float = 1 / 30
    delta: float = 6.0

    sphere_side = "max"

    @property
    def name(self):  # type: ignore[override]
        return self.kind

    @property
    def sigma(self) -> int:
        return SIGMA[self.kind]

    @property
    def L(self) -> float:
        return (self.n - 1) * self.beta + self.sigma * self.alpha

    def gamma_max(self) -> float:
        n, b = self.n, self.beta
        return (n - 1) / (2 ** ((n + 3) / 2) * self.L ** ((n - 1) / 2) * math.sqrt(2 * b))

    def delta_bounds(self) -> tuple:
        n, b, L = self.n, self.beta, self.L
        d0 = 2 ** ((n + 1) / 2) * L ** ((n - 3) / 2) * (n * (n - 1) * b + self.sigma * self.alpha) / ((n - 1) ** 2 * math.sqrt(2 * b))
        return (1 / (2 * L * self.gamma), d0)

    def __post_init__(self):
        if self.kind not in SIGMA:
            raise ParamInvalid(f"unknown type-3 kind {self.kind!r}")
        if not (isinstance(self.n, int) and self.n >= 3):
            raise ParamInvalid("n must be an integer >= 3")
        if not (self.beta > 0 and self.gamma > 0):
            raise ParamInvalid("need beta > 0 and gamma > 0")
        if self.kind == "3b" and self.alpha != 0:
            raise ParamInvalid("type (3b) has alpha = 0")
        if self.kind == "3c" and not 0 < self.alpha < self.beta:
            raise ParamInvalid("type (3c) needs 0 < alpha < beta")
        if self.kind == "3a" and not self.alpha > 0:
            raise ParamInvalid("type (3a) needs alpha > 0")
        if not 0 <= self.t <= 1:
            raise ParamInvalid("t must lie in [0, 1]")
        if not self.permissive:
            if not self.gamma < self.gamma_max():
                raise ParamInvalid(f"gamma must be < {self.gamma_max()}")
            lo = max(self.delta_bounds())
            if not self.delta > lo:
                raise ParamInvalid(f"delta must be > {lo}")

    def _z3sq(self, j, X):
        return 2 * (self.beta + self.sigma * self.alpha + (self.n - 2) * j) - (self.n - 1) * X

    def a(self, j, X):
        n, b, ga, de, t = self.n, self.beta, self.gamma, self.delta, self.t
        R = ((n - 1) * X + 2 * (n - 2) * (b - j)) / 2
        return (2 * t - 1) / 2 * self._z3sq(j, X) + 2 * ga * de * t * R ** 2 - 2 * ga * de * t * self.L ** 2

    def b(self, j, X):
        return -2 * self.gamma * self.t + 0 * X

    def c(self, j, X):
        return X * (2 * j - X) * (2 * (self.beta - j) + X) * self._z3sq(j, X) ** (self.n - 1)

    def x_minus(self, j):
        return max(0.0, 2 * (j - self.beta))

    def x_plus(self, j):
        return min(2 * j, 2 * (self.beta + self.sigma * self.alpha + (self.n - 2) * j) / (self.n - 1))

    def j_range(self):
        return (0.0, self.n * self.beta + self.sigma * self.alpha)

    def transition_point(self):
        n, b, ga, de, L = self.n, self.beta, self.gamma, self.delta, self.L
        return FixedPoint(
            "D", b,
            lambda t: (2 * ga * t * math.sqrt(2 * b) * (2 * L) ** ((n - 1) / 2), (1 - 2 * t) / 2, (n - 2) * (1 - 2 * t) / 2),
            lambda t: (2 * t - 1) * L - 2 * ga * de * t * L ** 2)

    def closed_times(self):
        n = self.n
        K = 2 ** ((n + 1) / 2) * self.gamma * self.L ** ((n - 1) / 2) * math.sqrt(2 * self.beta) / (n - 1)
        return (1 / (2 * (1 + K)), 1 / (2 * (1 - K)))

    def f_explicit(self, j, X):
        """f and g as written for n = 3 with the |z3|^2 factor kept inside b."""
        if self.n != 3:
            raise ParamInvalid("explicit forms exist for n = 3 only")
        b, ga, de, t = self.beta, self.gamma, self.delta, self.t
        return 2 * (1 - 2 * t + 4 * ga * de * t * (X + b - j)) * np.sqrt(X * (2 * j - X) * (2 * (b - j) + X))

    def g_explicit(self, j, X):
        if self.n != 3:
            raise ParamInvalid("explicit forms exist for n = 3 only")
        a, b = self.sigma * self.alpha, self.beta
        # cubic with alpha replaced by -alpha for type (3a)
        P = (5 * X ** 3 + (-3 * a + 5 * b - 19 * j) * X ** 2
             + 4 * (-a * b + 5 * j ** 2 - 2 * j * b + 2 * j * a - b ** 2) * X
             + 4 * j * (b - j) * (b + a + j))
        return -4 * self.gamma * self.t * P

    def height_G(self, X):
        n, b, ga, de, t, L = self.n, self.beta, self.gamma, self.delta, self.t, self.L
        return (n - 1) * (2 * t - 1 - ga * de * t * (n - 1) * X) / (
            4 * ga * t * np.sqrt((2 * b - X) * (2 * L - (n - 1) * X) ** (n - 1)))

    def height_interval(self):
        return (0.0, min(2 * self.beta, 2 * self.L / (self.n - 1)))

    def ambient_H(self, z):
        n, ga, de, t, L = self.n, self.gamma, self.delta, self.t, self.L
        z1, z2, z3, z4 = z
        R = 0.5 * (abs(z1) ** 2 + (n - 2) * abs(z4) ** 2)
        Xc = np.real(z1 * np.conj(z2) * np.conj(z3) ** (n - 1) * z4)
        return (2 * t - 1) / 2 * abs(z3) ** 2 + 2 * ga * t * (Xc + de * R ** 2) - 2 * ga * de * t * L ** 2

    def ambient_pairs(self, rng, samples, z3_zero=False):
        n, b, L = self.n, self.beta, self.L
        m4 = 2 * b * rng.uniform(0, 1, samples)
        m2 = 2 * b - m4
        rem = 2 * L - (n - 2) * m4
        v = np.ones(samples) if z3_zero else rng.uniform(0, 1, samples)
        m1 = rem * v
        m3 = rem * (1 - v)
        j = 0.5 * (m1 + m2)
        w4 = (2 * L + 2 * b - 2 * j) / (n - 1)
        w2 = 2 * b - w4
        w1 = 2 * j - w2
        ok = (rem >= 0) & (w1 >= 0) & (w2 >= 0) & (w4 >= 0)
        phases = rng.uniform(0, 2 * np.pi, (4, samples))
        mods = np.stack([m1, m2, m3, m4])
        z = np.sqrt(np.clip(mods, 0, None)) * np.exp(1j * phases)
        w = np.sqrt(np.clip(np.stack([w1, w2, np.zeros(samples), w4]), 0, None)).astype(complex)
        return self.ambient_H(w), self.ambient_H(z), ok


def cp2(alpha=1.0, gamma=0.125, delta=5.0, t=0.5, permissive=False) -> CP2Family:
    return CP2Family(t=t, permissive=permissive, alpha=alpha, gamma=gamma, delta=delta)


def type3(kind, beta, n=3, gamma=None, delta=None, t=0.5, alpha=0.0, permissive=False) -> Type3Family:
    return Type3Family(t=t, permissive=permissive, kind=kind, alpha=alpha, beta=beta, n=n,
                       gamma=gamma, delta=delta)


def limit_family(kind: str, alpha: float, beta: float, n: int = 3) -> Type3Family:
    """Type (3) family at the corner (gamma_max, delta_min, t = 1) of its window."""
    probe = Type3Family(t=1.0, permissive=True, kind=kind, alpha=alpha, beta=beta, n=n, gamma=1.0, delta=1.0)
    g = probe.gamma_max()
    probe = replace(probe, gamma=g)
    return replace(probe, delta=max(probe.delta_bounds()))


BUILTINS = {
    "cp2": lambda t=0.5: cp2(1.0, 1 / 8, 5.0, t),
    "3c": lambda t=0.5: type3("3c", 2.0, 3, 1 / 30, 6.0, t, alpha=1.0),
    "3a": lambda t=0.5: type3("3a", 1.0, 3, 1 / 24, 6.0, t, alpha=1.0),
    "3b": lambda t=0.5: type3("3b", 2.0, 3, 1 / 50, 7.0, t),
}


# ---------------------------------------------------------------------------
# f, g assembly


def fg_jets(F: ReducedFamily, j, X, order: int = 1):
    """Jets of f and g of total order ``order`` at (j, X)."""
    N = order + 1
    Xj = Jet.variable(np.asarray(X, float), "X", N)
    jj = Jet.variable(np.asarray(j, float), "j", N)
    A = F.a(jj, Xj)
    B = F.b(jj, Xj)
    S = _sqrt(F.c(jj, Xj))
    S_low = S.truncate(order)
    f = S_low * A.dX() * 2
    g = S_low * (B * S).dX() * 2
    return f, g


def fg(F: ReducedFamily, j, X):
    f, g = fg_jets(F, j, X, order=0)
    return f.value, g.value


def H_at(F: ReducedFamily, j, X, eps):
    return F.a(j, X) - eps * F.b(j, X) * np.sqrt(F.c(j, X))


# ---------------------------------------------------------------------------
# critical points


ELLIPTIC_MIN = "EllipticMin"
ELLIPTIC_MAX = "EllipticMax"
HYPERBOLIC = "Hyperbolic"

GRID_CELLS = 2048
REL_TOL = 1e-12
DEGEN_TOL = 1e-8


@dataclass(frozen=True)
class CriticalPoint:
    j: float
    X: float
    eps: int
    theta: float
    kind: str
    value: float

    def to_json(self):
        return {"j": self.j, "X": self.X, "eps": self.eps, "theta": self.theta,
                "kind": self.kind, "value": self.value}


def _near(u, v, tol=DEGEN_TOL):
    return abs(u - v) < tol * max(abs(u), abs(v), 1.0)


def _classify(F, j, X, eps) -> tuple:
    f, g = fg_jets(F, j, X, order=1)
    fX, gX = float(f.partial(1)), float(g.partial(1))
    bval = float(np.asarray(F.b(j, X)))
    if _near(fX, eps * gX):
        kind = DEGENERATE
    elif eps * bval * (fX - eps * gX) > 0:
        kind = ELLIPTIC_MIN if eps * bval > 0 else ELLIPTIC_MAX
    else:
        kind = HYPERBOLIC
    return kind, float(H_at(F, j, X, eps))


def _interior_grid(F, j, cells):
    lo, hi = F.x_minus(j), F.x_plus(j)
    eta = 1e-9 * (hi - lo)
    return np.linspace(lo + eta, hi - eta, cells + 1)


def _roots(F, j, eps, cells=GRID_CELLS):
    """Bracket sign changes of f - eps g on the grid and bisect them."""
    xs = _interior_grid(F, j, cells)
    f, g = fg(F, j, xs)
    phi = f - eps * g
    exact = xs[phi == 0]
    idx = np.nonzero(phi[:-1] * phi[1:] < 0)[0]
    lo, hi = xs[idx].copy(), xs[idx + 1].copy()
    plo = phi[idx].copy()
    scale = max(abs(xs[0]), abs(xs[-1]), xs[-1] - xs[0])
    for _ in range(200):
        if lo.size == 0 or np.all(hi - lo <= REL_TOL * scale):
            break
        mid = 0.5 * (lo + hi)
        fm, gm = fg(F, j, mid)
        pm = fm - eps * gm
        left = np.sign(pm) == np.sign(plo)
        lo = np.where(left, mid, lo)
        plo = np.where(left, pm, plo)
        hi = np.where(left, hi, mid)
    return sorted(list(0.5 * (lo + hi)) + list(exact))


def critical_points(F: ReducedFamily, j: float, cells: int = GRID_CELLS) -> list:
    jmin, jmax = F.j_range()
    if not jmin < j < jmax:
        raise JOutOfRange(f"j = {j} is not interior to ({jmin}, {jmax})")
    out = []
    for eps in (1, -1):
        for X in _roots(F, j, eps, cells):
            kind, value = _classify(F, j, X, eps)
            out.append(CriticalPoint(float(j), float(X), eps, math.acos(eps), kind, value))
    out.sort(key=lambda p: (p.j, p.X))
    return out


# ---------------------------------------------------------------------------
# brute-force oracle on the (X, theta) cylinder


def _grad_hess(F, j, X, theta):
    """Gradient and Hessian of H in (X, theta), plus the cancellation scale of H_XX."""
    Xj = Jet.variable(np.asarray(X, float), "X", 2)
    jj = Jet.variable(np.asarray(j, float), "j", 2)
    A = F.a(jj, Xj)
    BS = F.b(jj, Xj) * _sqrt(F.c(jj, Xj))
    ct, st = np.cos(theta), np.sin(theta)
    gX = A.partial(1) - ct * BS.partial(1)
    gT = BS.value * st
    hXX = A.partial(2) - ct * BS.partial(2)
    hXT = -BS.partial(1) * st
    hTT = BS.value * ct
    scale = abs(A.partial(2)) + abs(BS.partial(2))
    return np.array([gX, gT]), np.array([[hXX, hXT], [hXT, hTT]]), scale


def _morse_signature(hess, scale) -> str:
    d = np.abs(np.diag(hess))
    if d[0] < DEGEN_TOL * scale or d[1] == 0:
        return "degenerate"
    # Jacobi scaling keeps the inertia and removes the chart's anisotropy near X = Xminus
    D = 1 / np.sqrt(d)
    ev = np.linalg.eigvalsh(hess * np.outer(D, D))
    if np.min(np.abs(ev)) < DEGEN_TOL:
        return "degenerate"
    if ev[0] > 0:
        return "min"
    if ev[1] < 0:
        return "max"
    return "saddle"


def brute_force_critical(F: ReducedFamily, j: float, grid_n: int = 256) -> list:
    """Stationary points of H on a grid_n x grid_n grid, refined by Newton.

    The grid is uniform in (u, theta) with X = Xminus + w sin(pi u / 2)**2,
    w = Xplus - Xminus.  Near either end sqrt(X - end) is a polar radius, so
    the grid is extended two rows past u = 0 and u = 1 through the
    identification (u, theta) ~ (-u, theta + pi); stationary points close to
    the boundary then sit between grid rows like any other.

    Returns tuples (X, theta, value, signature) with signature one of
    ``"max"``, ``"min"``, ``"saddle"``, ``"degenerate"``.
    """
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    lo, hi = F.x_minus(j), F.x_plus(j)
    width = hi - lo
    pad = 2
    us = (np.arange(-pad, grid_n + pad) + 0.5) / grid_n
    ts = 2 * np.pi * np.arange(grid_n) / grid_n
    UU, TT = np.meshgrid(us, ts, indexing="ij")
    XX = lo + width * np.sin(np.pi * UU / 2) ** 2
    flip = np.sign(np.sin(np.pi * UU))
    with np.errstate(invalid="ignore"):
        H = F.a(j, XX) - F.b(j, XX) * np.cos(TT) * np.sqrt(np.clip(F.c(j, XX), 0, None)) * flip
    dU = (H[2:, :] - H[:-2, :]) / 2
    dT = (np.roll(H, -1, axis=1) - np.roll(H, 1, axis=1))[1:-1, :] / 2
    norm = dU ** 2 + dT ** 2
    padded = np.pad(norm, ((1, 1), (0, 0)), constant_values=np.inf)
    is_min = np.ones_like(norm, bool)
    for di in (-1, 0, 1):
        for dk in (-1, 0, 1):
            if di == 0 and dk == 0:
                continue
            shifted = np.roll(padded, -dk, axis=1)[1 + di:1 + di + norm.shape[0], :]
            is_min &= norm <= shifted
    found = []
    for i, k in np.argwhere(is_min):
        u, th = us[i + 1], ts[k]
        if u < 0 or u > 1:
            th += np.pi
        x = float(lo + width * np.sin(np.pi * u / 2) ** 2)
        ok = False
        for _ in range(60):
            grad, hess, _ = _grad_hess(F, j, x, th)
            try:
                step = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                break
            if not np.all(np.isfinite(step)):
                break
            lam = 1.0
            while not lo < x + lam * step[0] < hi:
                lam /= 2
            x, th = x + lam * step[0], th + lam * step[1]
            if abs(lam * step[0]) <= 1e-14 * width + 4 * np.spacing(x) and abs(lam * step[1]) <= 1e-12:
                ok = True
                break
        # runs that slide onto an end of the interval found a boundary point, not an interior one
        if not ok or not lo + 1e-10 * width < x < hi - 1e-10 * width:
            continue
        th = th % (2 * np.pi)
        if 2 * np.pi - th < 1e-9:
            th = 0.0
        if any(abs(x - fx) < 1e-7 and min(abs(th - ft), 2 * np.pi - abs(th - ft)) < 1e-6 for fx, ft, *_ in found):
            continue
        _, hess, scale = _grad_hess(F, j, x, th)
        found.append((float(x), float(th), float(F.H(j, x, th)), _morse_signature(hess, scale)))
    found.sort()
    return found


SIGNATURE_OF_KIND = {ELLIPTIC_MAX: "max", ELLIPTIC_MIN: "min", HYPERBOLIC: "saddle", DEGENERATE: "degenerate"}


# ---------------------------------------------------------------------------
# parabolic points and the flap


PARABOLIC = "parabolic"
DEGENERATE_NONPARABOLIC = "degenerate-nonparabolic"
NONDEGENERATE = "nondegenerate"


@dataclass(frozen=True)
class ParabolicReport:
    j: float
    X: float
    eps: int
    conditions: tuple
    verdict: str
    value: float

    def to_json(self):
        return {"j": self.j, "X": self.X, "eps": self.eps, "conditions": list(self.conditions),
                "verdict": self.verdict, "value": self.value}


def _parabolic_conditions(F, j, X, eps):
    f, g = fg_jets(F, j, X, order=2)
    p = lambda jet, i, k=0: float(jet.partial(i, k))
    c1 = _near(p(f, 0), eps * p(g, 0))
    c2 = _near(p(f, 1), eps * p(g, 1))
    c3 = not _near(p(f, 2), eps * p(g, 2))
    c4 = not _near(p(f, 0, 1), eps * p(g, 0, 1))
    conds = (c1, c2, c3, c4)
    if all(conds):
        verdict = PARABOLIC
    elif c1 and c2:
        verdict = DEGENERATE_NONPARABOLIC
    else:
        verdict = NONDEGENERATE
    return conds, verdict


def parabolic_scan(F: ReducedFamily, seeds: int = 64, iterations: int = 30, merge: float = 1e-7) -> list:
    """Solve f = eps g, f_X = eps g_X in (j, X) by Newton from a seed grid."""
    jmin, jmax = F.j_range()
    jw = jmax - jmin
    js = jmin + jw * (np.arange(seeds) + 0.5) / seeds
    fr = (np.arange(seeds) + 0.5) / seeds
    J0, FR = np.meshgrid(js, fr, indexing="ij")
    xm = np.vectorize(F.x_minus)(J0)
    xp = np.vectorize(F.x_plus)(J0)
    X0 = xm + FR * (xp - xm)
    reports = []
    for eps in (1, -1):
        j, X = J0.ravel().copy(), X0.ravel().copy()
        alive = np.ones(j.shape, bool)
        with np.errstate(all="ignore"):
            for _ in range(iterations):
                f, g = fg_jets(F, j, X, order=2)
                r1 = f.partial(0) - eps * g.partial(0)
                r2 = f.partial(1) - eps * g.partial(1)
                a11 = f.partial(1) - eps * g.partial(1)
                a12 = f.partial(0, 1) - eps * g.partial(0, 1)
                a21 = f.partial(2) - eps * g.partial(2)
                a22 = f.partial(1, 1) - eps * g.partial(1, 1)
                det = a11 * a22 - a12 * a21
                dX = (-r1 * a22 + r2 * a12) / det
                dj = (-a11 * r2 + a21 * r1) / det
                X = X + dX
                j = j + dj
                lo = np.vectorize(lambda v: F.x_minus(v) if jmin < v < jmax else np.nan)(j)
                hi = np.vectorize(lambda v: F.x_plus(v) if jmin < v < jmax else np.nan)(j)
                alive &= np.isfinite(X) & np.isfinite(j) & (X > lo) & (X < hi)
                j = np.where(alive, j, J0.ravel())
                X = np.where(alive, X, X0.ravel())
        found = []
        for jj, XX in zip(j[alive], X[alive]):
            if any(abs(jj - fj) < merge and abs(XX - fx) < merge for fj, fx in found):
                continue
            conds, verdict = _parabolic_conditions(F, jj, XX, eps)
            if not (conds[0] and conds[1]):
                continue
            found.append((jj, XX))
            reports.append(ParabolicReport(float(jj), float(XX), eps, tuple(bool(c) for c in conds), verdict,
                                           float(H_at(F, jj, XX, eps))))
    reports.sort(key=lambda r: (r.j, r.X))
    return reports


@dataclass
class FlapTrace:
    t: float
    x1: float
    parabolic_js: list
    reports: list
    j_t: float
    j_t_root: float
    j_1: float
    js: list = field(default_factory=list)
    xi1: list = field(default_factory=list)
    xi2: list = field(default_factory=list)
    kinds: list = field(default_factory=list)

    def to_json(self):
        return {k: (v if not isinstance(v, list) or not v or not hasattr(v[0], "to_json")
                    else [r.to_json() for r in v]) for k, v in self.__dict__.items()}


def _bisect(fun, lo, hi, tol=1e-14, iters=200):
    flo = fun(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def flap_trace(F: CP2Family, t: float, samples: int = 40) -> FlapTrace:
    if not isinstance(F, CP2Family):
        raise ParamInvalid("flap_trace is implemented for the CP^2 family")
    Ft = F.with_t(t)
    _, tp = Ft.closed_times()
    if not tp < t <= 1:
        raise TNotInWindow(f"t = {t} is not in (t+, 1] = ({tp}, 1]")
    reports = [r for r in parabolic_scan(Ft) if r.verdict == PARABOLIC]
    pos = sorted(r.j for r in reports if r.j > 0)
    if not pos:
        raise NewtonDiverged("no parabolic point with J > 0 was found")
    x1 = pos[0]
    eps_al = 1e-12 * Ft.alpha
    j_t_root = _bisect(Ft.k_t, eps_al, Ft.alpha - eps_al)
    trace = FlapTrace(t, x1, pos, reports, Ft.j_t(), j_t_root, Ft.j_1())
    for k in range(1, samples + 1):
        j = x1 * k / (samples + 1)
        pts = [p for p in critical_points(Ft, j) if p.eps == -1]
        if len(pts) != 2:
            continue
        trace.js.append(j)
        trace.xi1.append(pts[0].value)
        trace.xi2.append(pts[1].value)
        trace.kinds.append((pts[0].kind, pts[1].kind))
    return trace


# ---------------------------------------------------------------------------
# transition times


def times_from_mu(point: FixedPoint) -> tuple:
    """Solve |mu2 + mu3| = |mu1| for mu affine in t."""
    m0, m1 = point.mu(0.0), point.mu(1.0)
    p1, q1 = m0[0], m1[0] - m0[0]
    p, q = m0[1] + m0[2], (m1[1] + m1[2]) - (m0[1] + m0[2])
    roots = []
    for sgn in (1, -1):
        den = q - sgn * q1
        if den == 0:
            raise ParamInvalid("degenerate transition: mu is constant in t")
        roots.append((sgn * p1 - p) / den)
    return tuple(sorted(roots))


def transition_times(F) -> tuple:
    point = F if isinstance(F, FixedPoint) else F.transition_point()
    return times_from_mu(point)


def transition_type_at(F, t: float) -> str:
    point = F if isinstance(F, FixedPoint) else F.transition_point()
    return rank_zero_type(*point.mu(t))


# ---------------------------------------------------------------------------
# height invariant


GL_NODES = 64


def _gl(n=GL_NODES):
    return np.polynomial.legendre.leggauss(n)


def _integrate_sqrt_ends(fun, a, b, panels=4, n=GL_NODES):
    """Integrate a function with square-root behaviour at both ends.

    Each half is mapped by X = end -/+ (half width) s**2, which turns the
    endpoint singularity of the derivative into a smooth integrand.
    """
    nodes, weights = _gl(n)
    mid = 0.5 * (a + b)
    total = 0.0
    for end, sign in ((a, 1.0), (b, -1.0)):
        hw = abs(mid - a)
        for p in range(panels):
            s0, s1 = p / panels, (p + 1) / panels
            s = s0 + (s1 - s0) * (nodes + 1) / 2
            X = end + sign * hw * s ** 2
            total += float(np.sum(weights * fun(X) * 2 * hw * s)) * (s1 - s0) / 2
    return total


def height_cutoffs(F: ReducedFamily, cells: int = GRID_CELLS) -> list:
    """Points of the height interval where G crosses -1 or +1."""
    lo, hi = F.height_interval()
    eta = 1e-9 * (hi - lo)
    xs = np.linspace(lo + eta, hi - eta, cells + 1)
    with np.errstate(all="ignore"):
        G = F.height_G(xs)
    cuts = []
    for level in (-1.0, 1.0):
        d = G - level
        for i in np.nonzero(np.isfinite(d[:-1]) & np.isfinite(d[1:]) & (d[:-1] * d[1:] < 0))[0]:
            cuts.append(_bisect(lambda x: F.height_G(x) - level, xs[i], xs[i + 1], tol=1e-12 * (hi - lo)))
    return sorted(cuts)


def height_invariant(F: ReducedFamily, panels: int = 4) -> float:
    """Volume below the focus-focus value in its J-fiber, divided by 2 pi."""
    tm, tp = F.closed_times()
    if not F.permissive and not tm < F.t < tp:
        raise TNotInWindow(f"t = {F.t} is not in ({tm}, {tp})")
    lo, hi = F.height_interval()
    pts = [lo] + height_cutoffs(F) + [hi]

    def integrand(X):
        with np.errstate(all="ignore"):
            G = F.height_G(X)
        return np.pi - np.arccos(np.clip(G, -1.0, 1.0))

    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        with np.errstate(all="ignore"):
            gm = F.height_G(0.5 * (a + b))
        if gm >= 1:
            total += np.pi * (b - a)
        elif gm <= -1:
            continue
        else:
            total += _integrate_sqrt_ends(integrand, a, b, panels)
    return total / (2 * np.pi)


def generic_height_G(F: ReducedFamily, X):
    """G rebuilt from a, b, c and the focus-focus value, for cross-checks."""
    fp = F.transition_point()
    j0 = fp.j
    return (fp.value(F.t) - F.a(j0, X)) / (-F.b(j0, X) * np.sqrt(F.c(j0, X)))


# ---------------------------------------------------------------------------
# image sampling and emitters


@dataclass
class ImageRow:
    j: float
    H_min: float
    H_max: float
    critical: list


@dataclass
class ImageData:
    family: str
    params: dict
    rows: list
    fixed_points: list


def sample_image(F: ReducedFamily, j_cells: int = 64) -> ImageData:
    if j_cells < 16:
        raise ValueError("j_cells must be at least 16")
    jmin, jmax = F.j_range()
    rows = []
    for k in range(j_cells):
        j = jmin + (jmax - jmin) * (k + 0.5) / j_cells
        crit = critical_points(F, j)
        vals = [float(F.a(j, F.x_minus(j))), float(F.a(j, F.x_plus(j)))] + [p.value for p in crit]
        rows.append(ImageRow(j, min(vals), max(vals), crit))
    fp = F.transition_point()
    fixed = [{"label": fp.label, "j": fp.j, "value": fp.value(F.t) if fp.value else None,
              "type": rank_zero_type(*fp.mu(F.t))}]
    return ImageData(F.name, F.params(), rows, fixed)


def image_to_csv(img: ImageData) -> str:
    width = max((len(r.critical) for r in img.rows), default=0)
    header = ["j", "H_min", "H_max"]
    for i in range(1, width + 1):
        header += [f"X{i}", f"eps{i}", f"kind{i}", f"value{i}"]
    lines = [",".join(header)]
    for r in img.rows:
        cells = [repr(r.j), repr(r.H_min), repr(r.H_max)]
        for p in r.critical:
            cells += [repr(p.X), str(p.eps), p.kind, repr(p.value)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


KIND_COLORS = {ELLIPTIC_MAX: "#c0392b", ELLIPTIC_MIN: "#2471a3", HYPERBOLIC: "#1e8449", DEGENERATE: "#8e44ad"}


def image_to_svg(img: ImageData, width: int = 640, height: int = 480, margin: int = 40) -> str:
    js = [r.j for r in img.rows]
    hs = [r.H_min for r in img.rows] + [r.H_max for r in img.rows]
    hs += [fp["value"] for fp in img.fixed_points if fp["value"] is not None]
    j0, j1 = min(js), max(js)
    h0, h1 = min(hs), max(hs)
    pad = 0.05 * ((h1 - h0) or 1.0)
    h0, h1 = h0 - pad, h1 + pad

    def xy(j, h):
        x = margin + (j - j0) / ((j1 - j0) or 1.0) * (width - 2 * margin)
        y = height - margin - (h - h0) / (h1 - h0) * (height - 2 * margin)
        return f"{x:.2f},{y:.2f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
           f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
           f'<text x="{width / 2}" y="{height - 8}" font-size="12" text-anchor="middle">J</text>',
           f'<text x="12" y="{height / 2}" font-size="12">H</text>']
    for attr in ("H_min", "H_max"):
        pts = " ".join(xy(r.j, getattr(r, attr)) for r in img.rows)
        out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>')
    curves: dict = {}
    for r in img.rows:
        seen: dict = {}
        for p in r.critical:
            key = (p.eps, p.kind, seen.get((p.eps, p.kind), 0))
            seen[(p.eps, p.kind)] = key[2] + 1
            curves.setdefault(key, []).append((r.j, p.value))
    for (eps, kind, _), pts in sorted(curves.items()):
        coords = " ".join(xy(j, h) for j, h in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{KIND_COLORS[kind]}" '
                   f'stroke-width="1" stroke-dasharray="{"" if eps == 1 else "4,2"}"/>')
    for fp in img.fixed_points:
        if fp["value"] is not None:
            x, y = xy(fp["j"], fp["value"]).split(",")
            out.append(f'<text x="{x}" y="{y}" font-size="14" text-anchor="middle" dominant-baseline="middle">×</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Z_k-sphere boundary property


def boundary_sphere_check(F: ReducedFamily, samples: int = 10_000, seed: int = 0, z3_zero: bool = False) -> float:
    """Minimum over samples of the H-gap between the Z_k-sphere and the fiber.

    The gap is oriented so that it is nonnegative when the sphere lies on
    the boundary of the image (bottom for CP^2, top for type (3)).
    """
    rng = np.random.default_rng(seed)
    gaps = []
    got = 0
    while got < samples:
        Hw, Hz, ok = F.ambient_pairs(rng, samples, z3_zero=z3_zero)
        gap = (Hz - Hw) if F.sphere_side == "min" else (Hw - Hz)
        gap = gap[ok][: samples - got]
        gaps.append(gap)
        got += gap.size
    return float(np.min(np.concatenate(gaps)))
