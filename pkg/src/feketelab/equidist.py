"""Test functions on the sphere and equidistribution of preimages.

Points of the projective line are identified with unit vectors of R^3
(infinity at the north pole). The chordal metric is half the euclidean
chord, and the normalized area measure omega is dA / (4 pi).

With the Laplacian normalized so that ``Delta log[., w]`` has unit mass,
``Delta phi = 2 Delta_S phi omega`` where ``Delta_S`` is the Laplace-Beltrami
operator of the unit sphere. Hence

    int phi dmu_f = int phi domega + int g_F 2 Delta_S phi domega,
    <phi, phi>    = 2 int |grad_S phi|^2 domega.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidInput
from .potential import GreenEvaluator
from .projline import ProjPoint, as_point, normalize_pair, pairs_from_sphere, sphere_coords
from .pullback import PullbackMeasure


# ---------------------------------------------------------------------------
# quadrature

@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre in x = cos(theta) times the uniform rule in azimuth."""

    n_theta: int
    n_phi: int

    @classmethod
    def of_size(cls, n: int) -> "QuadratureRule":
        return cls(n, 2 * n)

    @cached_property
    def _nodes(self):
        x, wx = np.polynomial.legendre.leggauss(self.n_theta)
        phi = (np.arange(self.n_phi) + 0.5) * 2 * np.pi / self.n_phi
        Xg, PHg = np.meshgrid(x, phi, indexing="ij")
        s = np.sqrt(1 - Xg ** 2)
        pts = np.stack([s * np.cos(PHg), s * np.sin(PHg), Xg], axis=-1).reshape(-1, 3)
        w = np.repeat(wx / (2 * self.n_phi), self.n_phi)
        return pts, w

    @property
    def points(self) -> np.ndarray:
        return self._nodes[0]

    @property
    def weights(self) -> np.ndarray:
        return self._nodes[1]

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def doubled(self) -> "QuadratureRule":
        return QuadratureRule(2 * self.n_theta, 2 * self.n_phi)


# ---------------------------------------------------------------------------
# test functions

class TestFunction:
    """A function on the sphere with its tangential gradient and Laplace-Beltrami."""

    name = "phi"
    lip_rigorous = True

    def value(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def laplacian(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def lip(self) -> float:
        raise NotImplementedError

    def dirichlet_quadrature(self, rule: QuadratureRule) -> float:
        g = self.grad(rule.points)
        return 2 * rule.integrate(np.sum(g * g, axis=-1))

    @property
    def dirichlet(self) -> float:
        rule = QuadratureRule.of_size(96)
        return self.dirichlet_quadrature(rule)

    def at(self, z0, z1) -> np.ndarray:
        return self.value(sphere_coords(z0, z1))

    def chart_laplacian(self, z) -> np.ndarray:
        """Euclidean Laplacian in the affine chart z."""
        z = np.asarray(z, dtype=complex)
        X = sphere_coords(z, np.ones_like(z))
        return 4 / (1 + np.abs(z) ** 2) ** 2 * self.laplacian(X)

    def norm(self) -> float:
        """max(Lip, <phi, phi>^(1/2))."""
        return max(self.lip, math.sqrt(self.dirichlet))


class Quadratic(TestFunction):
    """u(X) = c + b.X + X^T A X restricted to the unit sphere."""

    def __init__(self, b=(0, 0, 0), A=None, c=0.0, name="quadratic"):
        self.b = np.asarray(b, dtype=float)
        A = np.zeros((3, 3)) if A is None else np.asarray(A, dtype=float)
        self.A = 0.5 * (A + A.T)
        self.c = float(c)
        self.name = name

    def value(self, X):
        return self.c + X @ self.b + np.einsum("...i,ij,...j->...", X, self.A, X)

    def grad(self, X):
        g = self.b + 2 * X @ self.A
        return g - np.sum(g * X, axis=-1, keepdims=True) * X

    def laplacian(self, X):
        return 2 * np.trace(self.A) - 2 * X @ self.b - 6 * np.einsum("...i,ij,...j->...", X, self.A, X)

    @property
    def lip(self) -> float:
        # chordal distance is half the chord; ambient gradient <= |b| + 2|A| on the ball
        return 2 * (np.linalg.norm(self.b) + 2 * np.linalg.norm(self.A, 2))

    @property
    def dirichlet(self) -> float:
        trA = np.trace(self.A)
        trA2 = np.trace(self.A @ self.A)
        return float(2 * (2 / 3 * self.b @ self.b + 12 / 15 * trA2 - 4 / 15 * trA ** 2))

    def rotated(self, R) -> "Quadratic":
        """phi o R for a rotation R of R^3."""
        R = np.asarray(R, dtype=float)
        return Quadratic(R.T @ self.b, R.T @ self.A @ R, self.c, self.name)


class HeightBump(TestFunction):
    """A smooth bump psi(X3) supported in lo < X3 < hi."""

    lip_rigorous = False

    def __init__(self, lo: float, hi: float):
        if not -1 <= lo < hi <= 1:
            raise InvalidInput("bump needs -1 <= lo < hi <= 1")
        self.lo, self.hi = lo, hi
        self.name = f"bump@{lo:g}:{hi:g}"

    def _psi(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.lo, self.hi
        inside = (x > a) & (x < b)
        xs = np.where(inside, x, 0.5 * (a + b))
        q = (xs - a) * (b - xs)
        s = (a + b - 2 * xs)
        e = np.exp(-1 / q)
        d1 = e * s / q ** 2
        # derivative of s / q^2 is (-2 q^2 - 2 q s^2) / q^4
        d2 = e * (s * s / q ** 4 + (-2 * q - 2 * s * s) / q ** 3)
        z = np.zeros_like(x)
        return np.where(inside, e, z), np.where(inside, d1, z), np.where(inside, d2, z)

    def value(self, X):
        return self._psi(X[..., 2])[0]

    def grad(self, X):
        x = X[..., 2]
        _, d1, _ = self._psi(x)
        e3 = np.array([0.0, 0.0, 1.0])
        t = e3 - x[..., None] * X
        return d1[..., None] * t

    def laplacian(self, X):
        x = X[..., 2]
        _, d1, d2 = self._psi(x)
        return (1 - x * x) * d2 - 2 * x * d1

    @cached_property
    def lip(self) -> float:
        xs = np.linspace(self.lo, self.hi, 20001)
        return 2 * float(np.max(np.abs(self._psi(xs)[1])))


def coordinate(i: int, name: str) -> Quadratic:
    b = np.zeros(3)
    b[i] = 1.0
    return Quadratic(b=b, name=name)


def chordal_squared(w: ProjPoint) -> Quadratic:
    """[z, w]^2 = (1 - X . W) / 2."""
    W = sphere_coords(w.z0, w.z1)
    return Quadratic(b=-0.5 * W, c=0.5, name=f"chordal2@{_label(w)}")


def _label(w: ProjPoint) -> str:
    if w.is_infinity:
        return "inf"
    z = w.affine
    return f"{z.real:g}{z.imag:+g}i" if z.imag else f"{z.real:g}"


BUILTIN = ("re", "im", "height", "chordal2@W", "bump@LO:HI")


def builtin(name: str) -> TestFunction:
    """``re`` = 2 Re z / (1 + |z|^2), ``im``, ``height`` = X3, ``chordal2@w``, ``bump@lo:hi``."""
    if name == "re":
        return coordinate(0, "re")
    if name == "im":
        return coordinate(1, "im")
    if name == "height":
        return coordinate(2, "height")
    if name.startswith("chordal2@"):
        return chordal_squared(as_point(name.split("@", 1)[1]))
    m = re.fullmatch(r"bump@([-+0-9.eE]+):([-+0-9.eE]+)", name)
    if m:
        return HeightBump(float(m.group(1)), float(m.group(2)))
    raise InvalidInput(f"unknown test function {name!r}; expected one of {', '.join(BUILTIN)}")


def dirichlet_chart(phi: TestFunction, chart: str, rule: QuadratureRule, h: float = 1e-6) -> float:
    """(1/2 pi) int |grad phi|^2 dx dy in the chart z or 1/z, by central differences."""
    z0, z1 = pairs_from_sphere(rule.points)
    if chart == "z":
        w = z0 / z1
        to_pair = lambda u: (u, np.ones_like(u))
    elif chart == "1/z":
        w = z1 / z0
        to_pair = lambda u: (np.ones_like(u), u)
    else:
        raise InvalidInput("chart must be 'z' or '1/z'")
    step = h * (1 + np.abs(w) ** 2)
    f = lambda u: phi.value(sphere_coords(*to_pair(u)))
    gx = (f(w + step) - f(w - step)) / (2 * step)
    gy = (f(w + 1j * step) - f(w - 1j * step)) / (2 * step)
    # dx dy = pi (1 + |w|^2)^2 domega
    integrand = (gx ** 2 + gy ** 2) * (1 + np.abs(w) ** 2) ** 2
    return 0.5 * rule.integrate(integrand)


def rotation_of(h) -> np.ndarray:
    """The rotation of R^3 induced by a unitary 2x2 matrix."""
    h = np.asarray(h, dtype=complex)
    cols = []
    for e in np.eye(3):
        a, b = pairs_from_sphere(e)
        a2, b2 = normalize_pair(h[0, 0] * a + h[0, 1] * b, h[1, 0] * a + h[1, 1] * b)
        cols.append(sphere_coords(a2, b2))
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# integration against mu_f and pullback measures

@dataclass(frozen=True)
class Integral:
    value: float
    error: float
    coarse: float
    fine: float


def _mu_f_once(G: GreenEvaluator, phi: TestFunction, rule: QuadratureRule) -> float:
    X = rule.points
    z0, z1 = pairs_from_sphere(X)
    g = G.escape_rate_arrays(z0, z1)
    return rule.integrate(phi.value(X) + 2 * g * phi.laplacian(X))


def integrate_mu_f(G: GreenEvaluator, phi: TestFunction, rule: QuadratureRule | None = None) -> Integral:
    """int phi dmu_f; the error is the change under one doubling of the rule."""
    rule = QuadratureRule.of_size(128) if rule is None else rule
    coarse = _mu_f_once(G, phi, rule)
    fine = _mu_f_once(G, phi, rule.doubled())
    return Integral(fine, abs(fine - coarse), coarse, fine)


def measure_average(nu: PullbackMeasure, phi: TestFunction) -> float:
    vals = phi.at(nu.z0, nu.z1)
    return math.fsum(nu.weights.astype(float) * vals) / nu.mass


def equidist_error(G: GreenEvaluator, nu: PullbackMeasure, phi: TestFunction,
                   rule: QuadratureRule | None = None, mu: Integral | None = None) -> tuple[float, float]:
    """(|d^-k sum w phi(w) - int phi dmu_f|, quadrature error estimate)."""
    mu = integrate_mu_f(G, phi, rule) if mu is None else mu
    return abs(measure_average(nu, phi) - mu.value), mu.error


@dataclass(frozen=True)
class BoundCheck:
    error: float
    frl_bound: float
    frl_margin: float
    rate: float
    ratio: float


def verify_bound(error: float, energy: float, d: int, k: int, D: int, phi_norm: float,
                 C: float = 1.0) -> BoundCheck:
    """Compare the measured error with C max{Lip, <phi,phi>^1/2} sqrt(|E| + k d^-2k D)
    and return error / (norm sqrt(k d^-k)), the constant the rate shape needs."""
    frl = C * phi_norm * math.sqrt(abs(energy) + k * D / float(d) ** (2 * k))
    rate = math.sqrt(k / float(d) ** k)
    ratio = error / (phi_norm * rate) if phi_norm > 0 else 0.0
    return BoundCheck(error, frl, frl - error, rate, ratio)


def inferred_constants(ratios: list[float]) -> list[float]:
    """Running maximum: the least C valid for every k of the sweep so far."""
    out, cur = [], 0.0
    for r in ratios:
        cur = max(cur, r)
        out.append(cur)
    return out
