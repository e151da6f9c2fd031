"""Rational maps of the projective line through homogeneous lifts.

A lift ``F = (P, Q)`` is a pair of degree-d binary forms, each given by
``d + 1`` coefficients ordered ``X^d, X^(d-1) Y, ..., Y^d``. The affine
map is ``z -> P(z, 1) / Q(z, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import BudgetError, DegenerateMapError, InvalidInput
from .projline import EPS_PT, ProjPoint, check_unitary, chordal, normalize_pair
from .qi import QI
from .rootsolve import RootList, roots_binary_form

# d^k + 1 coefficients per coordinate
MAX_LIFT_COEFFS = 4097


# ---------------------------------------------------------------------------
# binary forms (generic over complex / Fraction / QI entries)

def form_mul(a: Sequence, b: Sequence) -> list:
    out = [a[0] * 0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def form_pow(a: Sequence, n: int) -> list:
    out = [a[0] * 0 + 1]
    base = list(a)
    while n:
        if n & 1:
            out = form_mul(out, base)
        n >>= 1
        if n:
            base = form_mul(base, base)
    return out


def _mul(a, b):
    if isinstance(a, np.ndarray) and isinstance(b, np.ndarray):
        return np.convolve(a, b)
    return form_mul(a, b)


def form_compose(c: Sequence, g1: Sequence, g2: Sequence):
    """``sum c[i] g1^(n-i) g2^i`` for binary forms g1, g2 of equal degree."""
    n = len(c) - 1
    numeric = isinstance(g1, np.ndarray)
    zero = 0j if numeric else g1[0] * 0
    p1 = [np.array([1.0 + 0j]) if numeric else [zero + 1]]
    p2 = [np.array([1.0 + 0j]) if numeric else [zero + 1]]
    for _ in range(n):
        p1.append(_mul(p1[-1], g1))
        p2.append(_mul(p2[-1], g2))
    size = (len(g1) - 1) * n + 1
    out = np.zeros(size, dtype=complex) if numeric else [zero] * size
    for i, ci in enumerate(c):
        if not ci:
            continue
        term = _mul(p1[n - i], p2[i])
        if numeric:
            out = out + ci * term
        else:
            out = [o + ci * t for o, t in zip(out, term)]
    return out


def form_dx(c: Sequence) -> list:
    n = len(c) - 1
    return [(n - i) * c[i] for i in range(n)]


def form_dy(c: Sequence) -> list:
    n = len(c) - 1
    return [i * c[i] for i in range(1, n + 1)]


def eval_form(c, x, y):
    """Evaluate ``sum c[i] x^(n-i) y^i`` on arrays by homogeneous Horner."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    acc = np.full(np.broadcast(x, y).shape, complex(c[0]))
    ypow = np.ones_like(acc)
    for ci in c[1:]:
        ypow = ypow * y
        acc = acc * x + complex(ci) * ypow
    return acc


# ---------------------------------------------------------------------------
# exact determinants

def bareiss_det(rows: list[list]):
    """Fraction-free elimination; entries from any exact field (QI, Fraction)."""
    a = [list(r) for r in rows]
    n = len(a)
    one = a[0][0] * 0 + 1
    sign, prev = 1, one
    for k in range(n - 1):
        if not a[k][k]:
            swap = next((i for i in range(k + 1, n) if a[i][k]), None)
            if swap is None:
                return one * 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev
        prev = a[k][k]
    return a[n - 1][n - 1] * sign


def sylvester_matrix(P: Sequence, Q: Sequence) -> list[list]:
    d = len(P) - 1
    zero = P[0] * 0
    rows = []
    for coeffs in (P, Q):
        for s in range(d):
            rows.append([zero] * s + list(coeffs) + [zero] * (d - 1 - s))
    return rows


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalSet:
    atoms: list[tuple[ProjPoint, int]]
    roots: RootList

    @property
    def total(self) -> int:
        return sum(m for _, m in self.atoms)


class HomLift:
    """A non-degenerate lift ``F = (P, Q)`` of a rational map of degree d >= 2.

    Coefficients are kept as given: no rescaling, so ``Res F`` and ``V_F``
    refer to this representative. When built from exact Gaussian rationals
    the exact coefficients are kept alongside.
    """

    def __init__(self, P, Q, exact: tuple[list[QI], list[QI]] | None = None, *, check: bool = True):
        P = np.array(P, dtype=complex)
        Q = np.array(Q, dtype=complex)
        if P.ndim != 1 or P.shape != Q.shape:
            raise InvalidInput("P and Q must be coefficient sequences of equal length")
        if len(P) < 3:
            raise InvalidInput("degree must be at least 2")
        P.setflags(write=False)
        Q.setflags(write=False)
        self.P = P
        self.Q = Q
        self.d = len(P) - 1
        self.exact = exact
        if check:
            self._check_nondegenerate()

    @classmethod
    def from_exact(cls, P: Sequence, Q: Sequence) -> "HomLift":
        Pe = [QI.coerce(x) for x in P]
        Qe = [QI.coerce(x) for x in Q]
        return cls([complex(x) for x in Pe], [complex(x) for x in Qe], exact=(Pe, Qe))

    @classmethod
    def from_json(cls, obj: dict) -> "HomLift":
        """``{"d": 2, "P": [[re, im], ...], "Q": [...]}``; entries may be
        numbers or rational strings such as ``"1/2"``."""
        try:
            d = int(obj["d"])
            P = [_qi_from_json(x) for x in obj["P"]]
            Q = [_qi_from_json(x) for x in obj["Q"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed lift JSON: {exc}") from exc
        if len(P) != d + 1 or len(Q) != d + 1:
            raise InvalidInput(f"lift JSON needs {d + 1} coefficients per form")
        return cls.from_exact(P, Q)

    def to_json(self) -> dict:
        return {"d": self.d,
                "P": [[c.real, c.imag] for c in self.P],
                "Q": [[c.real, c.imag] for c in self.Q]}

    def _check_nondegenerate(self):
        res = resultant(self)
        scale = max(np.max(np.abs(self.P)), np.max(np.abs(self.Q)))
        if self.exact is not None:
            if resultant_exact(self) == 0:
                raise DegenerateMapError("Res(P, Q) = 0: P and Q share a root")
        elif abs(res) < 1e-12 * scale ** (2 * self.d):
            raise DegenerateMapError(f"|Res(P, Q)| = {abs(res):.3g} is numerically zero")

    def scaled(self, c: complex) -> "HomLift":
        if self.exact is not None and isinstance(c, (int, QI)):
            c = QI.coerce(c)
            return HomLift.from_exact([c * x for x in self.exact[0]], [c * x for x in self.exact[1]])
        return HomLift(c * self.P, c * self.Q)

    def __call__(self, p: ProjPoint) -> ProjPoint:
        return evaluate(self, p)

    def apply(self, z0, z1):
        """Unnormalized ``F(z0, z1)`` on arrays."""
        return eval_form(self.P, z0, z1), eval_form(self.Q, z0, z1)

    @cached_property
    def critical(self) -> CriticalSet:
        return critical_points(self)

    def __repr__(self):
        return f"HomLift(d={self.d}, P={list(self.P)}, Q={list(self.Q)})"


def _qi_from_json(x) -> QI:
    from fractions import Fraction
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError("complex coefficients are [re, im] pairs")
        return QI(Fraction(str(x[0])), Fraction(str(x[1])))
    return QI(Fraction(str(x)))


def evaluate(F: HomLift, p: ProjPoint) -> ProjPoint:
    a, b = F.apply(p.z0, p.z1)
    return ProjPoint(complex(a), complex(b))


def jacobian_form(F: HomLift) -> np.ndarray:
    """Coefficients of det DF = P_X Q_Y - P_Y Q_X (degree 2d - 2)."""
    J = np.convolve(form_dx(F.P), form_dy(F.Q)) - np.convolve(form_dy(F.P), form_dx(F.Q))
    if not np.any(np.abs(J) > 0):
        raise DegenerateMapError("identically vanishing Jacobian")
    return J


def jacobian_exact(F: HomLift) -> list:
    P, Q = F.exact
    return [a - b for a, b in zip(form_mul(form_dx(P), form_dy(Q)), form_mul(form_dy(P), form_dx(Q)))]


def critical_points(F: HomLift) -> CriticalSet:
    roots = roots_binary_form(jacobian_form(F))
    atoms = list(roots.atoms)
    if sum(m for _, m in atoms) != 2 * F.d - 2:
        raise DegenerateMapError("critical multiplicities do not sum to 2d - 2")
    return CriticalSet(atoms=atoms, roots=roots)


def local_degree(F: HomLift, p: ProjPoint, tol: float = EPS_PT) -> int:
    for c, m in F.critical.atoms:
        if chordal(c, p) < tol:
            return 1 + m
    return 1


def resultant_exact(F: HomLift) -> QI:
    if F.exact is None:
        raise ValueError("lift has no exact coefficients")
    P, Q = F.exact
    return bareiss_det(sylvester_matrix(P, Q))


def resultant(F: HomLift) -> complex:
    """Homogeneous resultant via the 2d x 2d Sylvester determinant."""
    if F.exact is not None:
        return complex(resultant_exact(F))
    M = np.array(sylvester_matrix(list(F.P), list(F.Q)), dtype=complex)
    return complex(np.linalg.det(M))


def compose(F: HomLift, G: HomLift) -> HomLift:
    """Lift of f o g as F o G."""
    if F.exact is not None and G.exact is not None:
        g1, g2 = G.exact
        return HomLift.from_exact(form_compose(F.exact[0], g1, g2), form_compose(F.exact[1], g1, g2))
    return HomLift(form_compose(F.P, G.P, G.Q), form_compose(F.Q, G.P, G.Q), check=False)


def iterate_lift(F: HomLift, k: int, max_coeffs: int = MAX_LIFT_COEFFS) -> HomLift:
    if k < 1:
        raise InvalidInput("iterate count must be >= 1")
    if F.d ** k + 1 > max_coeffs:
        raise BudgetError(f"F^{k} has degree {F.d ** k}, over the coefficient budget")
    G = F
    for _ in range(k - 1):
        G = compose(F, G)
    return G


def conjugate(F: HomLift, h) -> HomLift:
    """Lift of h^-1 o f o h as H^-1 o F o H for unitary H."""
    h = check_unitary(h)
    hi = np.linalg.inv(h)
    g1 = np.array([h[0, 0], h[0, 1]])
    g2 = np.array([h[1, 0], h[1, 1]])
    PH = form_compose(F.P, g1, g2)
    QH = form_compose(F.Q, g1, g2)
    return HomLift(hi[0, 0] * PH + hi[0, 1] * QH, hi[1, 0] * PH + hi[1, 1] * QH)


def fixed_point_form(F: HomLift) -> np.ndarray:
    """Y P - X Q, whose roots are the fixed points (degree d + 1)."""
    return np.concatenate([[0], F.P]) - np.concatenate([F.Q, [0]])


def multiplier(F: HomLift, p: ProjPoint) -> complex:
    """Derivative of f at a fixed point p, in a chart around p."""
    if abs(p.z0) <= abs(p.z1):
        t, num, den = p.z0 / p.z1, F.P, F.Q          # z = X / Y
    else:
        t, num, den = p.z1 / p.z0, F.Q[::-1], F.P[::-1]   # w = Y / X
    n, dn = np.polyval(num, t), np.polyval(np.polyder(num), t)
    q, dq = np.polyval(den, t), np.polyval(np.polyder(den), t)
    return complex((dn * q - n * dq) / (q * q))


@dataclass(frozen=True)
class PeriodicPoint:
    point: ProjPoint
    period: int
    multiplier: complex
    kind: str
    multiplicity: int


def classify_multiplier(lam: complex, tol: float = 1e-8) -> str:
    a = abs(lam)
    if a < tol:
        return "superattracting"
    if a < 1 - tol:
        return "attracting"
    if a <= 1 + tol:
        return "indifferent"
    return "repelling"


def classify_periodic(F: HomLift, p_max: int) -> list[PeriodicPoint]:
    if not 1 <= p_max <= 3:
        raise InvalidInput("p_max must be in 1..3")
    out: list[PeriodicPoint] = []
    for n in range(1, p_max + 1):
        Fn = iterate_lift(F, n)
        for z, m in roots_binary_form(fixed_point_form(Fn)).atoms:
            period = n
            w = z
            for j in range(1, n):
                w = evaluate(F, w)
                if n % j == 0 and chordal(w, z) < 1e-8:
                    period = j
                    break
            if period < n:
                continue
            lam = multiplier(Fn, z)
            out.append(PeriodicPoint(z, n, lam, classify_multiplier(lam), m))
    return out


def lift_from_affine(num: Sequence, den: Sequence) -> HomLift:
    """Homogenize ``num(z) / den(z)`` (coefficients in ascending powers)."""
    d = max(len(num), len(den)) - 1
    P = [0] * (d + 1)
    Q = [0] * (d + 1)
    for j, c in enumerate(num):
        P[d - j] = c
    for j, c in enumerate(den):
        Q[d - j] = c
    if all(isinstance(c, (int, QI)) or hasattr(c, "denominator") for c in P + Q):
        return HomLift.from_exact(P, Q)
    return HomLift(P, Q)


def affine_derivative(F: HomLift, z: complex) -> complex:
    """f'(z) for finite z with finite image."""
    num, den = F.P, F.Q
    n, dn = np.polyval(num, z), np.polyval(np.polyder(num), z)
    q, dq = np.polyval(den, z), np.polyval(np.polyder(den), z)
    return complex((dn * q - n * dq) / (q * q))


def unit_pairs(points: Sequence[ProjPoint]):
    z0 = np.array([p.z0 for p in points], dtype=complex)
    z1 = np.array([p.z1 for p in points], dtype=complex)
    return z0, z1


def apply_normalized(F: HomLift, z0, z1):
    return normalize_pair(*F.apply(z0, z1))


def log_abs_res(F: HomLift) -> float:
    if F.exact is not None:
        r = resultant_exact(F)
        # exact norm avoids float overflow for large rational coefficients
        n = r.norm()
        return 0.5 * (math.log(n.numerator) - math.log(n.denominator))
    return math.log(abs(resultant(F)))
