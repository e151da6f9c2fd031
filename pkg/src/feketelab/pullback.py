"""Iterated preimage measures ``(f^k)^*(a)`` built level by level.

Each level stores its atoms as arrays of unit pairs, the integer local
degrees ``deg_w(f^k)`` as weights, and the index of the image atom on the
previous level. The parent links form the preimage tree used by the
chain rule for ``c_z(f^k)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, InvalidInput, NumericFailure
from .projline import EPS_PT, ProjPoint, chordal, sphere_coords
from .ratmap import HomLift, evaluate
from .rootsolve import point_sort_key, roots_binary_form

MAX_ATOMS = 2 ** 16

# flag a base atom this close (chordal) to a critical value
CRITICAL_VALUE_TOL = 1e-8


def thread_count() -> int:
    raw = os.environ.get("FEKETELAB_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise InvalidInput(f"FEKETELAB_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


def ordered_map(fn, items):
    """``list(map(fn, items))``, threaded when FEKETELAB_THREADS > 1; order is kept."""
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass
class PullbackMeasure:
    k: int
    base: ProjPoint
    z0: np.ndarray
    z1: np.ndarray
    weights: np.ndarray
    parent: np.ndarray | None = None
    flags: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.weights)

    @property
    def mass(self) -> int:
        return int(np.sum(self.weights))

    @property
    def atoms(self) -> list[tuple[ProjPoint, int]]:
        return [(ProjPoint(a, b), int(w)) for a, b, w in zip(self.z0, self.z1, self.weights)]

    def eta_and_D(self) -> tuple[int, int]:
        return eta_and_D(self)

    def to_csv(self) -> str:
        lines = ["# feketelab v1", "re,im,is_infinity,weight"]
        for a, b, w in zip(self.z0, self.z1, self.weights):
            if abs(b) < EPS_PT:
                lines.append(f"0,0,1,{int(w)}")
            else:
                z = a / b
                lines.append(f"{z.real:.17g},{z.imag:.17g},0,{int(w)}")
        return "\n".join(lines) + "\n"


def base_measure(a: ProjPoint) -> PullbackMeasure:
    return PullbackMeasure(0, a, np.array([a.z0]), np.array([a.z1]), np.array([1], dtype=np.int64))


def preimages(F: HomLift, b: ProjPoint):
    """Roots of b1 P - b0 Q: the points of f^-1(b) with local degrees."""
    return roots_binary_form(b.z1 * F.P - b.z0 * F.Q)


def _check_distinct(z0, z1):
    """Atoms from different parents must not coincide (grid hashing in R^3)."""
    X = sphere_coords(z0, z1)
    cell = 4 * EPS_PT
    keys = np.floor(X / cell).astype(np.int64)
    seen: dict[tuple, list[int]] = {}
    for i, key in enumerate(map(tuple, keys)):
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    for j in seen.get((key[0] + dx, key[1] + dy, key[2] + dz), ()):
                        if abs(z0[i] * z1[j] - z1[i] * z0[j]) < EPS_PT:
                            raise NumericFailure("preimages of distinct atoms coincide")
        seen.setdefault(key, []).append(i)


def pull_back_once(F: HomLift, nu: PullbackMeasure) -> PullbackMeasure:
    parents = [ProjPoint(a, b) for a, b in zip(nu.z0, nu.z1)]
    solved = ordered_map(lambda b: preimages(F, b), parents)
    rows = []
    flags = list(nu.flags)
    for idx, (roots, w) in enumerate(zip(solved, nu.weights)):
        if roots.ambiguous and "ambiguous-clustering" not in flags:
            flags.append("ambiguous-clustering")
        for p, m in roots.atoms:
            rows.append((point_sort_key(p), p.z0, p.z1, int(w) * m, idx))
    rows.sort(key=lambda r: r[0])
    z0 = np.array([r[1] for r in rows], dtype=complex)
    z1 = np.array([r[2] for r in rows], dtype=complex)
    weights = np.array([r[3] for r in rows], dtype=np.int64)
    parent = np.array([r[4] for r in rows], dtype=np.int64)
    if int(weights.sum()) != F.d * nu.mass:
        raise NumericFailure(f"mass {int(weights.sum())} != {F.d * nu.mass} at level {nu.k + 1}")
    _check_distinct(z0, z1)
    return PullbackMeasure(nu.k + 1, nu.base, z0, z1, weights, parent, flags)


def critical_values(F: HomLift) -> list[ProjPoint]:
    return [evaluate(F, c) for c, _ in F.critical.atoms]


class PreimageTree:
    """Levels 0..k of the preimage tree of a."""

    def __init__(self, F: HomLift, a: ProjPoint, k: int, max_atoms: int = MAX_ATOMS):
        if k < 0:
            raise InvalidInput("k must be non-negative")
        if F.d ** k > max_atoms:
            raise BudgetError(f"d^k = {F.d ** k} atoms exceeds the budget of {max_atoms}")
        self.F = F
        self.a = a
        self.levels = [base_measure(a)]
        cvs = critical_values(F)
        for _ in range(k):
            nu = self.levels[-1]
            near = any(chordal(ProjPoint(x, y), v) < CRITICAL_VALUE_TOL
                       for x, y in zip(nu.z0, nu.z1) for v in cvs)
            nxt = pull_back_once(F, nu)
            if near and "at-critical-value" not in nxt.flags:
                nxt.flags.append("at-critical-value")
            self.levels.append(nxt)

    @property
    def k(self) -> int:
        return len(self.levels) - 1

    def __getitem__(self, j: int) -> PullbackMeasure:
        return self.levels[j]

    def eta_seq(self) -> list[int]:
        return [eta_and_D(nu)[0] for nu in self.levels[1:]]

    def D_seq(self) -> list[int]:
        return [eta_and_D(nu)[1] for nu in self.levels[1:]]


def pullback(F: HomLift, a: ProjPoint, k: int, max_atoms: int = MAX_ATOMS) -> PullbackMeasure:
    return PreimageTree(F, a, k, max_atoms)[k]


def eta_and_D(nu: PullbackMeasure) -> tuple[int, int]:
    w = [int(x) for x in nu.weights]
    eta = max(w)
    D = sum(x * x for x in w)
    mass = sum(w)
    if not mass <= D <= mass * eta:
        raise NumericFailure("D outside [d^k, d^k eta]")
    return eta, D


@dataclass(frozen=True)
class EtaProbe:
    etas: list[int]
    classification: str
    bound: int


def eta_growth_probe(F: HomLift, a: ProjPoint, k_max: int, max_atoms: int = MAX_ATOMS) -> EtaProbe:
    """Finite-horizon reading of the eta sequence; labels are diagnostics only."""
    etas = PreimageTree(F, a, k_max, max_atoms).eta_seq()
    d = F.d
    bound = d ** (2 * d - 2)
    if all(e == d ** j for j, e in enumerate(etas, start=1)):
        label = "exceptional-candidate"
    elif max(etas) > bound:
        label = "superattracting-candidate"
    else:
        label = "ordinary"
    return EtaProbe(etas, label, bound)


def push_forward(F: HomLift, child: PullbackMeasure, parent: PullbackMeasure) -> np.ndarray:
    """Image weights of ``child`` under f, aggregated onto the atoms of ``parent``.

    Images are matched to parent atoms geometrically, not via the stored links.
    """
    a, b = F.apply(child.z0, child.z1)
    out = np.zeros(len(parent), dtype=np.int64)
    for i in range(len(child)):
        dist = np.abs(a[i] * parent.z1 - b[i] * parent.z0) / math.hypot(abs(a[i]), abs(b[i]))
        j = int(np.argmin(dist))
        if dist[j] > 1e-7:
            raise NumericFailure("image of a preimage is not an atom of the parent level")
        out[j] += child.weights[i]
    # f_* (f^(k+1))^*(a) = d (f^k)^*(a)
    return out
