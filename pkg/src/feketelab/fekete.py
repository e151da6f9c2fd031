"""Fekete energy of preimage configurations and the two-sided estimate.

The energy ``E_f(k, a)`` is computed twice: as the off-diagonal double
sum of ``Phi_f`` over the atoms of ``(f^k)^*(a)``, and as the weighted sum
of ``c_z(f^k)`` over the same atoms with ``c_z(f^k)`` assembled by the
chain rule along the preimage tree.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import InvalidInput
from .potential import GreenEvaluator
from .projline import EPS_PT, ProjPoint, chordal
from .pullback import PreimageTree, PullbackMeasure, ordered_map
from .ratmap import evaluate, local_degree

ROUTE_RTOL = 1e-6
ROUTE_ATOL = 1e-9
LIMIT_SPREAD_TOL = 1e-4
ORBIT_HORIZON = 64
BLOCK = 512


# ---------------------------------------------------------------------------
# direct route

def energy_direct(G: GreenEvaluator, nu: PullbackMeasure) -> float:
    """d^-2k times the sum over ordered pairs of distinct atoms of w_i w_j Phi_f."""
    z0, z1 = nu.z0, nu.z1
    w = nu.weights.astype(float)
    g = G.escape_rate_arrays(z0, z1)
    n = len(w)

    def block(start):
        stop = min(start + BLOCK, n)
        wedge = np.abs(z0[start:stop, None] * z1[None, :] - z1[start:stop, None] * z0[None, :])
        with np.errstate(divide="ignore"):
            phi = np.log(np.minimum(wedge, 1.0)) - (g[start:stop, None] + g[None, :]) - G.vf
        # merged atoms are distinct, so only the true diagonal is excluded
        idx = np.arange(start, stop)
        phi[idx - start, idx] = 0.0
        return float(np.sum(w[start:stop, None] * w[None, :] * phi))

    parts = ordered_map(block, list(range(0, n, BLOCK)))
    return math.fsum(parts) / float(nu.mass) ** 2


# ---------------------------------------------------------------------------
# c_z(f)

def _orthogonal(p: ProjPoint):
    return (-p.z1.conjugate(), p.z0.conjugate())


def _line_coeffs(c, p, v):
    """Coefficients in t of the binary form c restricted to the line p + t v."""
    d = len(c) - 1
    X = np.array([p[0], v[0]], dtype=complex)
    Y = np.array([p[1], v[1]], dtype=complex)
    out = np.zeros(d + 1, dtype=complex)
    for i, ci in enumerate(c):
        if ci:
            term = npoly.polymul(npoly.polypow(X, d - i), npoly.polypow(Y, i))
            out[: len(term)] += ci * term
    return out


def c_z_taylor(G: GreenEvaluator, z: ProjPoint, m: int | None = None) -> float:
    """c_z(f) from the leading Taylor coefficient of F(p + t v) ^ F(p).

    With p a unit representative, v a unit vector orthogonal to p and
    m = deg_z f, c_z(f) = log|h_m| - 2 (d - m) G^F(p) + (m - 1) V_F.
    """
    F = G.lift
    if m is None:
        m = local_degree(F, z)
    p = z.coords
    v = _orthogonal(z)
    Pt = _line_coeffs(F.P, p, v)
    Qt = _line_coeffs(F.Q, p, v)
    h = Pt * Qt[0] - Qt * Pt[0]
    return math.log(abs(h[m])) - 2 * (F.d - m) * G.escape_rate(z) + (m - 1) * G.vf


def c_z_regular(G: GreenEvaluator, z: ProjPoint) -> float:
    """-log d + B(f) + sum over critical c of m_c Phi_f(z, c), for z not critical."""
    total = -math.log(G.d) + G.bifurcation
    for c, m in G.critical:
        v = G.phi_f(z, c)
        if v == -math.inf:
            raise InvalidInput("c_z_regular needs a non-critical point; use c_z_limit")
        total += m * v
    return total


@dataclass(frozen=True)
class LimitValue:
    value: float
    spread: float
    low_confidence: bool


def c_z_limit(G: GreenEvaluator, z: ProjPoint) -> LimitValue:
    """c_z(f) straight from its defining limit.

    Samples u = p + t v at |t| on a geometric ladder in four directions; the
    average cancels the first- and second-order harmonic terms, Richardson
    removes the |t|^2 term, and the adjacent pair with the smallest
    disagreement plus rounding allowance is kept.
    """
    F = G.lift
    m = local_degree(F, z)
    fz = evaluate(F, z)
    p = z.coords
    v = _orthogonal(z)
    q = 10 ** -0.5
    radii = [1e-2 * q ** i for i in range(15)]
    radii = [r for r in radii if r ** m >= 1e-9]
    dirs = [1, 1j, -1, -1j]

    def sample(r):
        vals = []
        for e in dirs:
            t = r * e
            u = ProjPoint(p[0] + t * v[0], p[1] + t * v[1])
            vals.append(G.phi_f(evaluate(F, u), fz) - m * G.phi_f(u, z))
        return math.fsum(vals) / len(vals)

    E = [sample(r) for r in radii]
    R = [(E[i + 1] - q * q * E[i]) / (1 - q * q) for i in range(len(E) - 1)]
    if len(R) == 1:
        return LimitValue(R[0], math.inf, True)
    # rounding in the wedge of f(u) and f(z) grows like eps / r^m
    noise = [1e-15 / radii[i + 2] ** m for i in range(len(R) - 1)]
    best = min(range(len(R) - 1), key=lambda i: abs(R[i + 1] - R[i]) + noise[i])
    spread = abs(R[best + 1] - R[best])
    return LimitValue(0.5 * (R[best] + R[best + 1]), spread, spread > LIMIT_SPREAD_TOL)


def is_critical(G: GreenEvaluator, z: ProjPoint) -> bool:
    return any(chordal(z, c) < EPS_PT for c, _ in G.critical)


def c_z(G: GreenEvaluator, z: ProjPoint) -> float:
    """c_z(f) by the closed formula off C(f) and the Taylor formula on it."""
    if is_critical(G, z):
        return c_z_taylor(G, z)
    return c_z_regular(G, z)


def c_z_level(G: GreenEvaluator, nu: PullbackMeasure, weight_parent: np.ndarray) -> np.ndarray:
    """c_w(f) for every atom w of a level, vectorized off the critical set."""
    z0, z1 = nu.z0, nu.z1
    g = G.escape_rate_arrays(z0, z1)
    out = np.full(len(z0), -math.log(G.d) + G.bifurcation)
    crit = np.zeros(len(z0), dtype=bool)
    for c, m in G.critical:
        wedge = np.abs(z0 * c.z1 - z1 * c.z0)
        hit = wedge < EPS_PT
        crit |= hit
        with np.errstate(divide="ignore"):
            out = out + m * (np.log(np.minimum(wedge, 1.0)) - (g + G.escape_rate(c)) - G.vf)
    # an atom is critical iff its weight exceeds its parent's
    crit |= nu.weights != weight_parent
    for i in np.flatnonzero(crit):
        z = ProjPoint(z0[i], z1[i])
        m = int(nu.weights[i] // weight_parent[i])
        out[i] = c_z_taylor(G, z, m)
    return out


class CzTree:
    """c_z(f^L) for every node of a preimage tree, by the chain rule.

    For a node z on level L with ancestors z_(L-1), ..., z_0 = a,
    c_z(f^L) = sum_(j=1..L) deg_(f^j z)(f^(L-j)) c_(f^(j-1) z)(f), and
    deg_(f^j z)(f^(L-j)) is the weight of the ancestor on level L - j.
    """

    def __init__(self, G: GreenEvaluator, tree: PreimageTree):
        self.G = G
        self.tree = tree
        self.local: list[np.ndarray] = [np.zeros(1)]
        self.total: list[np.ndarray] = [np.zeros(1)]
        for L in range(1, tree.k + 1):
            nu = tree[L]
            wpar = tree[L - 1].weights[nu.parent]
            loc = c_z_level(G, nu, wpar)
            self.local.append(loc)
            self.total.append(self.total[-1][nu.parent] + wpar * loc)

    def energy(self, k: int) -> float:
        nu = self.tree[k]
        if k == 0:
            return 0.0
        return math.fsum(nu.weights.astype(float) * self.total[k]) / float(nu.mass) ** 2


def c_z_iterate(G: GreenEvaluator, z: ProjPoint, k: int) -> float:
    """c_z(f^k) by the chain rule along the forward orbit of z."""
    orbit = [z]
    for _ in range(k):
        orbit.append(evaluate(G.lift, orbit[-1]))
    degs = [local_degree(G.lift, x) for x in orbit]
    total = 0.0
    for j in range(1, k + 1):
        # deg at f^j(z) of f^(k-j)
        w = math.prod(degs[j:k])
        total += w * c_z(G, orbit[j - 1])
    return total


def energy_cz(G: GreenEvaluator, tree: PreimageTree, k: int | None = None) -> float:
    k = tree.k if k is None else k
    return CzTree(G, tree).energy(k)


# ---------------------------------------------------------------------------
# critical orbits and constants

@dataclass
class CriticalOrbit:
    point: ProjPoint
    multiplicity: int
    orbit: list[ProjPoint]
    preperiodic: bool
    preperiod: int | None = None
    period: int | None = None


def critical_orbits(G: GreenEvaluator, horizon: int = ORBIT_HORIZON) -> list[CriticalOrbit]:
    out = []
    for c, m in G.critical:
        orbit = [c]
        found = None
        for _ in range(horizon):
            x = evaluate(G.lift, orbit[-1])
            hit = next((i for i, y in enumerate(orbit) if chordal(x, y) < EPS_PT), None)
            if hit is not None:
                found = (hit, len(orbit) - hit)
                break
            orbit.append(x)
        if found:
            out.append(CriticalOrbit(c, m, orbit, True, found[0], found[1]))
        else:
            out.append(CriticalOrbit(c, m, orbit, False))
    return out


@dataclass
class CfReport:
    value: float
    terms: dict
    heuristic: bool
    reasons: list[str] = field(default_factory=list)


def C_f_est(G: GreenEvaluator, orbits: list[CriticalOrbit] | None = None) -> CfReport:
    """The explicit constant: |B| + max|c_c| + 2 max sup|c_(f^l c)| over preperiodic c
    - (2d-2) max log[c,c'] + log d + (8d-8) sup|g_f|."""
    d = G.d
    orbits = critical_orbits(G) if orbits is None else orbits
    reasons = []
    cc = max(abs(c_z(G, o.point)) for o in orbits)
    pre = [max(abs(c_z(G, x)) for x in o.orbit) for o in orbits if o.preperiodic]
    if any(not o.preperiodic for o in orbits):
        reasons.append("critical orbit not closed within horizon (taken as wandering)")
    pts = [o.point for o in orbits]
    dists = [chordal(a, b) for i, a in enumerate(pts) for b in pts[i + 1:]]
    sep = -(2 * d - 2) * max(math.log(x) for x in dists) if dists else 0.0
    sup = G.sup_gf
    if not sup.rigorous:
        reasons.append("sup|g_f| is a grid estimate")
    terms = {
        "abs_B": abs(G.bifurcation),
        "max_abs_cc": cc,
        "preperiodic": 2 * max(pre, default=0.0),
        "separation": sep,
        "log_d": math.log(d),
        "sup_gf": (8 * d - 8) * sup.bound,
    }
    value = math.fsum(terms.values())
    return CfReport(value, terms, bool(reasons), reasons)


def degree_along(G: GreenEvaluator, orbit: list[ProjPoint], start: int, n: int) -> int:
    """deg at orbit[start] of f^n."""
    return math.prod(local_degree(G.lift, orbit[i]) for i in range(start, start + n))


@dataclass
class Proximity:
    terms: list[list[float]]
    excluded: list[tuple[int, int]]
    S: list[float]
    running_max: list[float]


def _forward(G: GreenEvaluator, c: ProjPoint, k: int) -> list[ProjPoint]:
    orbit = [c]
    for _ in range(k):
        orbit.append(evaluate(G.lift, orbit[-1]))
    return orbit


def proximity_terms(G: GreenEvaluator, a: ProjPoint, k: int) -> Proximity:
    """d^-j log(1/[f^j(c), a]) for j = 1..k and each critical c (index into G.critical).

    Pairs with f^j(c) = a are excluded and listed; their terms are nan.
    """
    terms = []
    excluded = []
    S = []
    running = []
    cur = -math.inf
    orbits = [_forward(G, c, k) for c, _ in G.critical]
    for j in range(1, k + 1):
        row = []
        s = 0.0
        for ci, ((c, m), orb) in enumerate(zip(G.critical, orbits)):
            dist = chordal(orb[j], a)
            if dist < EPS_PT:
                excluded.append((j, ci))
                row.append(math.nan)
                continue
            t = -math.log(dist) / G.d ** j
            row.append(t)
            s += m * t
            cur = max(cur, t)
        terms.append(row)
        S.append(s)
        running.append(cur if cur > -math.inf else 0.0)
    return Proximity(terms, excluded, S, running)


def C_fa_terms(G: GreenEvaluator, a: ProjPoint, k: int, etas: list[int],
               orbits: list[CriticalOrbit] | None = None) -> list[tuple[int, int, float]]:
    """(j, critical index, eta_(a,j) m_c |c_c(f^j)|) for wandering c with f^j(c) = a, j <= k."""
    orbits = critical_orbits(G) if orbits is None else orbits
    out = []
    for ci, o in enumerate(orbits):
        if o.preperiodic:
            continue
        orb = _forward(G, o.point, k)
        for j in range(1, k + 1):
            if chordal(orb[j], a) < EPS_PT:
                out.append((j, ci, o.multiplicity * abs(c_z_iterate(G, o.point, j)) * etas[j - 1]))
    return out


def C_fa(G: GreenEvaluator, a: ProjPoint, k: int, etas: list[int],
         orbits: list[CriticalOrbit] | None = None) -> float:
    return math.fsum(t for _, _, t in C_fa_terms(G, a, k, etas, orbits))


def theorem_a_bounds(d: int, k: int, S: list[float], etas: list[int], Cf: float, Cfa: float):
    dk = float(d) ** k
    eta_sum = sum(etas[:k])
    lower = -math.fsum(e * s for e, s in zip(etas[:k], S[:k])) / dk - Cf * eta_sum / dk - Cfa / dk
    upper = -math.fsum(S[:k]) / dk + Cf * eta_sum / dk + Cfa / dk
    return lower, upper


def rate_bundle(d: int, k: int, etas: list[int], Ds: list[int]) -> tuple[float, float, float]:
    """((1/d^k) sum eta_j, k D_k / d^2k, k eta_k / d^k); max of the first two <= third."""
    dk = Fraction(d) ** k
    r1 = Fraction(sum(etas[:k])) / dk
    r2 = k * Fraction(Ds[k - 1]) / dk ** 2
    r3 = k * Fraction(etas[k - 1]) / dk
    if max(r1, r2) > r3:
        raise AssertionError(f"rate inequality fails at k={k}")
    return float(r1), float(r2), float(r3)


# ---------------------------------------------------------------------------
# reports

@dataclass
class EnergyReport:
    k: int
    a: str
    energy_direct: float
    energy_cz: float
    route_ok: bool
    eta_seq: list[int]
    D_seq: list[int]
    proximity_max: float
    proximity_sum: float
    proximity_weighted_sum: float
    lower_bound: float
    upper_bound: float
    lower_margin: float
    upper_margin: float
    sandwich_ok: bool
    C_f_est: float
    C_fa: float
    rate_bundle: tuple[float, float, float]
    flags: list[str]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rate_bundle"] = list(self.rate_bundle)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    CSV_FIELDS = ("k", "energy_direct", "energy_cz", "lower_bound", "upper_bound",
                  "lower_margin", "upper_margin", "proximity_max", "eta", "D",
                  "C_f_est", "C_fa", "r1", "r2", "r3", "flags")

    def csv_row(self) -> str:
        vals = [str(self.k)]
        for x in (self.energy_direct, self.energy_cz, self.lower_bound, self.upper_bound,
                  self.lower_margin, self.upper_margin, self.proximity_max):
            vals.append(f"{x:.17g}")
        vals += [str(self.eta_seq[-1]), str(self.D_seq[-1])]
        for x in (self.C_f_est, self.C_fa, *self.rate_bundle):
            vals.append(f"{x:.17g}")
        vals.append("|".join(self.flags))
        return ",".join(vals)


def point_label(p: ProjPoint) -> str:
    if p.is_infinity:
        return "inf"
    z = p.affine
    return f"{z.real:.17g}{z.imag:+.17g}i"


class EnergyStudy:
    """All energy quantities for one (f, a) up to a horizon k_max."""

    def __init__(self, G: GreenEvaluator, a: ProjPoint, k_max: int, max_atoms: int | None = None):
        self.G = G
        self.a = a
        self.k_max = k_max
        kw = {} if max_atoms is None else {"max_atoms": max_atoms}
        self.tree = PreimageTree(G.lift, a, k_max, **kw)
        self.cz = CzTree(G, self.tree)
        self.orbits = critical_orbits(G)
        self.Cf = C_f_est(G, self.orbits)
        self.etas = self.tree.eta_seq()
        self.Ds = self.tree.D_seq()
        self.prox = proximity_terms(G, a, k_max)

    @cached_property
    def cfa_terms(self):
        return C_fa_terms(self.G, self.a, self.k_max, self.etas, self.orbits)

    def report(self, k: int) -> EnergyReport:
        if not 1 <= k <= self.k_max:
            raise InvalidInput(f"k must be in 1..{self.k_max}")
        G = self.G
        nu = self.tree[k]
        e_dir = energy_direct(G, nu)
        e_cz = self.cz.energy(k)
        route_ok = abs(e_dir - e_cz) <= ROUTE_RTOL * abs(e_dir) + ROUTE_ATOL
        # hits beyond the current k are outside this horizon
        cfa = math.fsum(t for j, _, t in self.cfa_terms if j <= k)
        lower, upper = theorem_a_bounds(G.d, k, self.prox.S, self.etas, self.Cf.value, cfa)
        flags = list(nu.flags)
        if self.Cf.heuristic:
            flags.append("C_f-heuristic")
        if not route_ok:
            flags.append("route-mismatch")
        sandwich_ok = lower <= e_dir <= upper
        if not sandwich_ok:
            flags.append("sandwich-violated")
        S = self.prox.S[:k]
        weighted = math.fsum(e * s for e, s in zip(self.etas[:k], S))
        return EnergyReport(
            k=k, a=point_label(self.a),
            energy_direct=e_dir, energy_cz=e_cz, route_ok=route_ok,
            eta_seq=self.etas[:k], D_seq=self.Ds[:k],
            proximity_max=self.prox.running_max[k - 1],
            proximity_sum=math.fsum(S), proximity_weighted_sum=weighted,
            lower_bound=lower, upper_bound=upper,
            lower_margin=e_dir - lower, upper_margin=upper - e_dir,
            sandwich_ok=sandwich_ok,
            C_f_est=self.Cf.value, C_fa=cfa,
            rate_bundle=rate_bundle(G.d, k, self.etas, self.Ds),
            flags=flags,
        )

    def reports(self) -> list[EnergyReport]:
        return [self.report(k) for k in range(1, self.k_max + 1)]


def fekete_energy(G: GreenEvaluator, a: ProjPoint, k: int) -> float:
    return energy_direct(G, PreimageTree(G.lift, a, k)[k])
