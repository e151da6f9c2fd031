"""Exact kernels on the tree of p-adic balls.

A ball is ``B(c, p^-r)`` with rational centre c and rational radius
exponent r (``r = None`` for a classical point). Kernel values are
rational multiples of ``log p`` and are kept exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import BudgetError, DegenerateMapError, InvalidInput
from .ratmap import bareiss_det, form_compose, sylvester_matrix

INF = math.inf


def _check_prime(p: int):
    if not isinstance(p, int) or p < 2 or any(p % q == 0 for q in range(2, math.isqrt(p) + 1)):
        raise InvalidInput(f"{p!r} is not a prime")


def vp(x, p: int):
    """p-adic valuation of a rational; +inf at 0."""
    x = Fraction(x)
    if x == 0:
        return INF
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def absp(x, p: int) -> Fraction:
    v = vp(x, p)
    return Fraction(0) if v == INF else Fraction(p) ** (-v)


@dataclass(frozen=True)
class LogValue:
    """q log p, exact; ``q = None`` encodes -infinity."""

    p: int
    q: Fraction | None

    @classmethod
    def neg_inf(cls, p: int) -> "LogValue":
        return cls(p, None)

    @property
    def is_neg_inf(self) -> bool:
        return self.q is None

    def _same(self, other: "LogValue"):
        if other.p != self.p:
            raise InvalidInput("log values for different primes")

    def __add__(self, other):
        self._same(other)
        if self.is_neg_inf or other.is_neg_inf:
            return LogValue.neg_inf(self.p)
        return LogValue(self.p, self.q + other.q)

    def __neg__(self):
        if self.is_neg_inf:
            raise ArithmeticError("negating -infinity")
        return LogValue(self.p, -self.q)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LogValue":
        if self.is_neg_inf:
            raise ArithmeticError("scaling -infinity")
        return LogValue(self.p, self.q * Fraction(c))

    def __float__(self):
        return -math.inf if self.is_neg_inf else float(self.q) * math.log(self.p)

    def __str__(self):
        return "-inf" if self.is_neg_inf else str(self.q)

    def __lt__(self, other):
        self._same(other)
        if self.is_neg_inf:
            return not other.is_neg_inf
        return False if other.is_neg_inf else self.q < other.q

    def __le__(self, other):
        return self == other or self < other


@dataclass(frozen=True, eq=False)
class PadicBall:
    p: int
    center: Fraction
    r: Fraction | None

    def __post_init__(self):
        object.__setattr__(self, "center", Fraction(self.center))
        if self.r is not None:
            object.__setattr__(self, "r", Fraction(self.r))

    @classmethod
    def point(cls, p: int, c) -> "PadicBall":
        return cls(p, Fraction(c), None)

    @classmethod
    def gauss(cls, p: int) -> "PadicBall":
        return cls(p, Fraction(0), Fraction(0))

    @property
    def rv(self):
        """Radius exponent; +inf for a classical point."""
        return INF if self.r is None else self.r

    @property
    def is_classical(self) -> bool:
        return self.r is None

    def contains(self, x) -> bool:
        return vp(Fraction(x) - self.center, self.p) >= self.rv

    def __eq__(self, other):
        if not isinstance(other, PadicBall):
            return NotImplemented
        return self.p == other.p and self.rv == other.rv and self.contains(other.center)

    __hash__ = None

    def __le__(self, other: "PadicBall") -> bool:
        """Inclusion."""
        return self.rv >= other.rv and other.contains(self.center)

    def log_diam(self) -> LogValue:
        return LogValue.neg_inf(self.p) if self.r is None else LogValue(self.p, -self.r)

    def log_abs(self) -> LogValue:
        """log |S| with |S| = sup of |z| over S = max(|c|, diam S)."""
        v = min(vp(self.center, self.p), self.rv)
        return LogValue.neg_inf(self.p) if v == INF else LogValue(self.p, -Fraction(v))

    def __repr__(self):
        r = "0" if self.r is None else f"{self.p}^-({self.r})"
        return f"B({self.center}, {r}; p={self.p})"


def _same_prime(S: PadicBall, T: PadicBall):
    if S.p != T.p:
        raise InvalidInput(f"balls over different primes {S.p} and {T.p}")


def join(S: PadicBall, T: PadicBall) -> PadicBall:
    """The smallest ball containing both."""
    _same_prime(S, T)
    v = min(S.rv, T.rv, vp(S.center - T.center, S.p))
    return PadicBall(S.p, S.center, None if v == INF else Fraction(v))


def hsia(S: PadicBall, T: PadicBall) -> LogValue:
    return join(S, T).log_diam()


def rho(S: PadicBall, T: PadicBall) -> LogValue:
    """Path length in the tree: 2 log diam(S ^ T) - log diam S - log diam T."""
    if S.is_classical or T.is_classical:
        raise InvalidInput("rho is defined on non-classical balls only")
    J = join(S, T)
    return J.log_diam().scale(2) - S.log_diam() - T.log_diam()


def _pos(x: LogValue) -> LogValue:
    """max(0, x)."""
    return x if (not x.is_neg_inf and x.q > 0) else LogValue(x.p, Fraction(0))


def delta_can(S: PadicBall, T: PadicBall) -> LogValue:
    """log of diam(S ^ T) / (max(1, |S|) max(1, |T|))."""
    return hsia(S, T) - _pos(S.log_abs()) - _pos(T.log_abs())


def median(S: PadicBall, T: PadicBall, U: PadicBall) -> PadicBall:
    """Tree median: the smallest of the three pairwise joins."""
    joins = [join(S, T), join(S, U), join(T, U)]
    return max(joins, key=lambda B: B.rv)


def gromov_check(S: PadicBall, T: PadicBall) -> tuple[LogValue, LogValue]:
    """(log delta_can(S, T), -rho(median(S, T, S_can), S_can)); raises if unequal."""
    _same_prime(S, T)
    can = PadicBall.gauss(S.p)
    lhs = delta_can(S, T)
    rhs = -rho(median(S, T, can), can)
    if lhs != rhs:
        raise ArithmeticError(f"Gromov identity fails: {lhs} != {rhs}")
    return lhs, rhs


# ---------------------------------------------------------------------------
# maps with rational coefficients

def rational_coeffs(seq: Sequence) -> list[Fraction]:
    out = []
    for c in seq:
        if hasattr(c, "im"):
            if c.im != 0:
                raise InvalidInput("p-adic routines need rational coefficients")
            c = c.re
        elif isinstance(c, complex):
            if c.imag != 0:
                raise InvalidInput("p-adic routines need rational coefficients")
            c = c.real
        out.append(Fraction(c))
    return out


def resultant_rational(P: Sequence, Q: Sequence) -> Fraction:
    P, Q = rational_coeffs(P), rational_coeffs(Q)
    if len(P) != len(Q) or len(P) < 3:
        raise InvalidInput("P and Q must have equal length d + 1 >= 3")
    return bareiss_det(sylvester_matrix(P, Q))


def vf_padic(P: Sequence, Q: Sequence, p: int) -> LogValue:
    """V_F = v_p(Res F) / (d (d - 1)) log p."""
    _check_prime(p)
    res = resultant_rational(P, Q)
    if res == 0:
        raise DegenerateMapError("Res(P, Q) = 0")
    d = len(P) - 1
    return LogValue(p, Fraction(vp(res, p), d * (d - 1)))


@dataclass(frozen=True)
class GaussGreen:
    p: int
    values: list[LogValue]
    differences: list[LogValue]
    vf: LogValue
    phi_self: LogValue

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "VF_logp": str(self.vf),
            "gauss_green": [str(v) for v in self.values],
            "cauchy_diff": [str(v) for v in self.differences],
            "phi_self": str(self.phi_self),
        }


MAX_GAUSS_COEFFS = 4097


def gauss_green(P: Sequence, Q: Sequence, p: int, k_max: int) -> GaussGreen:
    """g_k = d^-k log ||F^k||_Gauss for k = 1..k_max, and Phi_f(S_can, S_can) = -2 g - V_F."""
    _check_prime(p)
    if not 1 <= k_max <= 6:
        raise BudgetError("k_max must be in 1..6")
    P, Q = rational_coeffs(P), rational_coeffs(Q)
    d = len(P) - 1
    if d ** k_max + 1 > MAX_GAUSS_COEFFS:
        raise BudgetError(f"F^{k_max} has {d ** k_max + 1} coefficients, over budget")
    vf = vf_padic(P, Q, p)
    values = []
    A, B = P, Q
    for k in range(1, k_max + 1):
        if k > 1:
            A, B = form_compose(P, A, B), form_compose(Q, A, B)
        v = min(vp(c, p) for c in A + B)
        values.append(LogValue(p, Fraction(-v, d ** k)))
    diffs = [values[i + 1] - values[i] for i in range(len(values) - 1)]
    g = values[-1]
    return GaussGreen(p, values, diffs, vf, g.scale(-2) - vf)
