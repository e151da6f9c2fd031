"""Escape rate, dynamical Green functions and the kernel Phi_f.

Everything is evaluated on unit homogeneous representatives, where
``log|p| = 0`` and the Green function ``g_F`` coincides with the escape
rate ``G^F``. For arbitrary representatives ``G^F(lp) = G^F(p) + log|l|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .projline import EPS_PT, ProjPoint
from .ratmap import HomLift, eval_form, form_dx, form_dy, jacobian_form, log_abs_res
from .rootsolve import reconstruct_form


@dataclass(frozen=True)
class SupBound:
    """An upper bound for a supremum plus the grid value it was derived from."""

    bound: float
    estimate: float
    grid: int
    rigorous: bool


def _theta_grid(n_theta: int):
    """Cell-centred (x = cos theta, phi) grid, uniform in theta."""
    n_phi = 2 * n_theta
    th = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    ph = (np.arange(n_phi) + 0.5) * 2 * np.pi / n_phi
    T, PH = np.meshgrid(th, ph, indexing="ij")
    z0 = np.cos(T / 2) * np.exp(1j * PH)
    z1 = np.sin(T / 2) + 0j
    # any point of the sphere is within angle h of a centre, h = cell half-diagonal
    h = math.hypot(np.pi / (2 * n_theta), 2 * np.pi / (2 * n_phi))
    return z0.ravel(), z1.ravel(), h


class GreenEvaluator:
    """Green-function evaluator bound to one lift.

    The series for ``G^F`` is summed for a fixed number of terms chosen so
    that the certified tail ``tf_sup * d^-n / (1 - 1/d)`` is below ``tol``;
    the count is capped at ``max_iter`` and the tail is then reported.
    """

    def __init__(self, lift: HomLift, tol: float = 1e-12, max_iter: int = 60):
        self.lift = lift
        self.d = lift.d
        self.tol = tol
        self.max_iter = max_iter
        self.vf = -log_abs_res(lift) / (self.d * (self.d - 1))
        self.tf = self._tf_bound()
        self.tf_sup = self.tf.bound
        n = 1
        while n < max_iter and self.tail(n) >= tol:
            n += 1
        self.n_terms = n

    # -- bounds -------------------------------------------------------------

    def _lipschitz(self) -> float:
        """Euclidean Lipschitz bound for F on the unit ball of C^2."""
        parts = [form_dx(self.lift.P), form_dy(self.lift.P), form_dx(self.lift.Q), form_dy(self.lift.Q)]
        return math.sqrt(sum(float(np.sum(np.abs(c))) ** 2 for c in parts))

    def _tf_bound(self) -> SupBound:
        """Certified bound for sup |T_F| with T_F(p) = log|F(p)| / d on |p| = 1."""
        L = self._lipschitz()
        n = 64
        while True:
            z0, z1, h = _theta_grid(n)
            a, b = self.lift.apply(z0, z1)
            norm = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2)
            # chordal radius sin(h/2) <= h/2; nearest unit lift within sqrt(2) of that
            delta = L * math.sqrt(2) * h / 2
            lo, hi = float(norm.min()), float(norm.max())
            est = max(abs(math.log(lo)), abs(math.log(hi))) / self.d
            if lo - delta > 0.5 * lo or n >= 4096:
                break
            n *= 2
        if lo - delta <= 0:
            return SupBound(bound=math.inf, estimate=est, grid=n, rigorous=False)
        bound = max(abs(math.log(lo - delta)), abs(math.log(hi + delta))) / self.d
        return SupBound(bound=bound, estimate=est, grid=n, rigorous=True)

    def tail(self, n: int) -> float:
        """Bound on the omitted terms after summing n terms of the series."""
        d = self.d
        return self.tf_sup * d ** (-(n - 1)) / (d - 1)

    @property
    def truncation_error(self) -> float:
        return self.tail(self.n_terms)

    @cached_property
    def sup_gf(self) -> SupBound:
        """sup |g_f|: certified as d/(d-1) sup|T_F| + |V_F|/2, with a grid estimate."""
        d = self.d
        bound = d / (d - 1) * self.tf_sup + abs(self.vf) / 2
        z0, z1, _ = _theta_grid(64)
        est = float(np.max(np.abs(self.escape_rate_arrays(z0, z1) + self.vf / 2)))
        z0, z1, _ = _theta_grid(128)
        est = max(est, float(np.max(np.abs(self.escape_rate_arrays(z0, z1) + self.vf / 2))))
        return SupBound(bound=bound, estimate=est, grid=128, rigorous=self.tf.rigorous)

    # -- evaluation ---------------------------------------------------------

    def escape_rate_arrays(self, z0, z1) -> np.ndarray:
        """G^F at arbitrary (nonzero) representatives, vectorized."""
        z0 = np.asarray(z0, dtype=complex)
        z1 = np.asarray(z1, dtype=complex)
        scale = np.sqrt(np.abs(z0) ** 2 + np.abs(z1) ** 2)
        q0, q1 = z0 / scale, z1 / scale
        total = np.log(scale)
        w = 1.0
        for _ in range(self.n_terms):
            w /= self.d
            a, b = self.lift.apply(q0, q1)
            n = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2)
            total = total + w * np.log(n)
            q0, q1 = a / n, b / n
        return total

    def escape_rate(self, p) -> float:
        if isinstance(p, ProjPoint):
            p = p.coords
        return float(self.escape_rate_arrays(p[0], p[1]))

    def green_gF(self, x: ProjPoint) -> float:
        return self.escape_rate(x)

    def green_gf(self, x: ProjPoint) -> float:
        return self.escape_rate(x) + self.vf / 2

    def phi_f(self, x: ProjPoint, y: ProjPoint) -> float:
        c = abs(x.z0 * y.z1 - x.z1 * y.z0)
        if c < EPS_PT:
            return -math.inf
        # g(x) + g(y) is grouped first so the result is symmetric bit for bit
        return math.log(min(c, 1.0)) - (self.escape_rate(x) + self.escape_rate(y)) - self.vf

    def phi_matrix(self, z0, z1, G=None) -> np.ndarray:
        """Phi_f between all pairs of points given as unit pairs; -inf on coincidences."""
        z0 = np.asarray(z0, dtype=complex)
        z1 = np.asarray(z1, dtype=complex)
        if G is None:
            G = self.escape_rate_arrays(z0, z1)
        w = np.abs(z0[:, None] * z1[None, :] - z1[:, None] * z0[None, :])
        # SIMD complex products are not bitwise commutative; force symmetry
        w = np.maximum(w, w.T)
        with np.errstate(divide="ignore"):
            out = np.log(np.minimum(w, 1.0)) - (G[:, None] + G[None, :]) - self.vf
        out[w < EPS_PT] = -np.inf
        return out

    # -- derived quantities -------------------------------------------------

    @cached_property
    def critical(self):
        return self.lift.critical.atoms

    @cached_property
    def jacobian_constant(self) -> complex:
        """c with det DF = c * prod (p ^ C_j) for the unit critical representatives."""
        J = jacobian_form(self.lift)
        R = reconstruct_form(self.critical)
        i = int(np.argmax(np.abs(R)))
        return complex(J[i] / R[i])

    @cached_property
    def bifurcation(self) -> float:
        total = sum(m * self.escape_rate(c) for c, m in self.critical)
        return total + (2 * self.d - 2) * self.vf + math.log(abs(self.jacobian_constant))

    def chordal_derivative(self, z: ProjPoint) -> float:
        p0, p1 = z.coords
        a, b = self.lift.apply(p0, p1)
        J = eval_form(jacobian_form(self.lift), p0, p1)
        return float(abs(J) / (self.d * (abs(a) ** 2 + abs(b) ** 2)))

    def potential(self, atoms, z: ProjPoint) -> float:
        """U_mu(z) = sum of w * Phi_f(z, x) over weighted atoms (x, w)."""
        total = 0.0
        for x, w in atoms:
            v = self.phi_f(z, x)
            if v == -math.inf:
                return -math.inf
            total += w * v
        return total


def bifurcation_potential(G: GreenEvaluator) -> float:
    return G.bifurcation


def chordal_derivative(G: GreenEvaluator, z: ProjPoint) -> float:
    return G.chordal_derivative(z)


def escape_rate(G: GreenEvaluator, p) -> float:
    return G.escape_rate(p)


def green_gf(G: GreenEvaluator, x: ProjPoint) -> float:
    return G.green_gf(x)


def phi_f(G: GreenEvaluator, x: ProjPoint, y: ProjPoint) -> float:
    return G.phi_f(x, y)


def potential_of_measure(G: GreenEvaluator, atoms, z: ProjPoint) -> float:
    return G.potential(atoms, z)
