"""Projective roots of binary forms, with multiplicities.

A binary form of degree n is a coefficient sequence ``c[0..n]`` meaning
``sum c[i] X^(n-i) Y^i``. Leading zeros contribute the root at infinity;
the affine part is solved by Aberth-Ehrlich iteration, polished by Newton
in whichever chart keeps the root inside the unit disc, then clustered.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericFailure
from .projline import EPS_PT, ProjPoint, normalize_pair

log = logging.getLogger(__name__)

MAX_ITER = 200
_EPS = np.finfo(float).eps


class RootSolveError(NumericFailure):
    """Non-convergence; carries the best iterate and its residuals."""

    def __init__(self, message, iterate=None, residuals=None):
        super().__init__(message)
        self.iterate = iterate
        self.residuals = residuals


@dataclass
class RootList:
    atoms: list[tuple[ProjPoint, int]]
    residual_max: float
    ambiguous: bool = False
    warnings: list[str] = field(default_factory=list)

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.atoms)

    def points(self) -> list[ProjPoint]:
        return [p for p, _ in self.atoms]


def _aberth(poly: np.ndarray) -> np.ndarray:
    """Simultaneous Aberth-Ehrlich iteration; ``poly`` highest degree first."""
    n = len(poly) - 1
    if n == 1:
        return np.array([-poly[1] / poly[0]])
    a = poly / poly[0]
    # radius from the geometric mean of the roots, clipped by the Cauchy bound
    r = abs(a[-1]) ** (1.0 / n) if a[-1] != 0 else 0.0
    cauchy = 1 + np.max(np.abs(a[1:]))
    if not (0 < r < cauchy):
        r = min(1.0, cauchy)
    z = r * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    dpoly = np.polyder(a)
    for _ in range(MAX_ITER):
        pv = np.polyval(a, z)
        dv = np.polyval(dpoly, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        s = np.sum(1.0 / diff, axis=1) - 1.0 / np.diag(diff)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pv / dv
            step = ratio / (1 - ratio * s)
        step = np.where(pv == 0, 0, step)
        if not np.all(np.isfinite(step)):
            break
        z = z - step
        if np.all(np.abs(step) <= 4 * _EPS * np.maximum(np.abs(z), 1e-300)):
            return z
    # stalled: companion-matrix eigenvalues
    return np.roots(a)


def _polish(coeffs: np.ndarray, x0: complex, x1: complex, steps: int = 3):
    """Newton on the form in the chart where the root is small."""
    if abs(x0) <= abs(x1):
        poly, t = coeffs, x0 / x1          # affine chart X/Y
    else:
        poly, t = coeffs[::-1], x1 / x0    # chart Y/X
    dpoly = np.polyder(poly)
    for _ in range(steps):
        dv = np.polyval(dpoly, t)
        if dv == 0:
            break
        step = np.polyval(poly, t) / dv
        if not np.isfinite(step) or abs(step) > 1e-3 * max(1.0, abs(t)):
            break
        t = t - step
    if abs(x0) <= abs(x1):
        return t, 1.0
    return 1.0, t


def form_residual(coeffs: np.ndarray, x0, x1) -> np.ndarray:
    """Relative residual |form(p)| / sum |c_i| at unit-normalized points."""
    x0, x1 = normalize_pair(x0, x1)
    n = len(coeffs) - 1
    val = sum(c * x0 ** (n - i) * x1 ** i for i, c in enumerate(coeffs))
    return np.abs(val) / np.sum(np.abs(coeffs))


def _taylor_coeff(poly: np.ndarray, t: complex, m: int) -> complex:
    """m-th Taylor coefficient of ``poly`` (highest first) at ``t``."""
    d = poly
    for _ in range(m):
        d = np.polyder(d)
    return np.polyval(d, t) / math.factorial(m) if len(d) else 0.0


def _refine_multiple(poly: np.ndarray, t: complex, m: int) -> complex:
    """A root of multiplicity m is a simple root of the (m-1)-th derivative."""
    d = poly
    for _ in range(m - 1):
        d = np.polyder(d)
    dd = np.polyder(d)
    t0 = t
    for _ in range(8):
        dv = np.polyval(dd, t)
        if dv == 0:
            break
        step = np.polyval(d, t) / dv
        if not np.isfinite(step):
            break
        t = t - step
        if abs(step) <= 2 * _EPS * max(1.0, abs(t)):
            break
    # refuse a refinement that wandered off the cluster
    if abs(t - t0) > 1e-3 * max(1.0, abs(t0)):
        return t0
    return t


def _clusters(x0, x1, coeffs) -> tuple[list[list[int]], bool]:
    """Single-linkage clusters at radius EPS_PT, then merged further when
    the spread is explained by rounding of a multiple root."""
    n = len(x0)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    dist = np.abs(x0[:, None] * x1[None, :] - x1[:, None] * x0[None, :])
    for i in range(n):
        for j in range(i + 1, n):
            if dist[i, j] < EPS_PT:
                parent[find(i)] = find(j)

    # noise-aware pass: a root of multiplicity m computed in double precision
    # splits by ~ (eps * |form| / |m-th Taylor coeff|)^(1/m)
    loose = 1e-4
    scale = np.sum(np.abs(coeffs))
    changed = True
    while changed:
        changed = False
        groups = {}
        for i in range(n):
            groups.setdefault(find(i), []).append(i)
        reps = list(groups.values())
        for gi in range(len(reps)):
            for gj in range(gi + 1, len(reps)):
                A, B = reps[gi], reps[gj]
                if min(dist[i, j] for i in A for j in B) > loose:
                    continue
                members = A + B
                m = len(members)
                # centroid in the chart where the cluster is small
                c0, c1 = x0[members[0]], x1[members[0]]
                if abs(c0) <= abs(c1):
                    poly = coeffs
                    ts = x0[members] / x1[members]
                else:
                    poly = coeffs[::-1]
                    ts = x1[members] / x0[members]
                t = np.mean(ts)
                lead = abs(_taylor_coeff(poly, t, m))
                if lead == 0:
                    continue
                noise = 64 * _EPS * scale * max(1.0, abs(t)) ** (len(coeffs) - 1)
                radius = 8 * (noise / lead) ** (1.0 / m)
                if np.max(np.abs(ts - t)) <= radius:
                    parent[find(A[0])] = find(B[0])
                    changed = True
                    break
            if changed:
                break

    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = list(groups.values())

    ambiguous = False
    if len(out) > 1:
        for g in out:
            inner = max((dist[i, j] for i in g for j in g if i != j), default=0.0)
            outer = min(dist[i, j] for i in g for j in range(n) if j not in g)
            if inner > 0 and outer < 10 * inner:
                ambiguous = True
    return out, ambiguous


def roots_binary_form(coeffs) -> RootList:
    """Projective roots with multiplicity of ``sum c[i] X^(n-i) Y^i``."""
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or len(c) < 2:
        raise ValueError("a binary form needs at least two coefficients")
    scale = np.max(np.abs(c))
    if scale == 0:
        raise ValueError("the zero form has no well-defined roots")
    c = c / scale
    n = len(c) - 1
    nz = np.flatnonzero(np.abs(c) > 0)
    m_inf = int(nz[0])
    # trailing zeros are the root X = 0 (the point 0)
    m_zero = n - int(nz[-1])
    affine = c[m_inf: n + 1 - m_zero]

    xs0, xs1 = [], []
    xs0 += [1.0] * m_inf
    xs1 += [0.0] * m_inf
    xs0 += [0.0] * m_zero
    xs1 += [1.0] * m_zero
    if len(affine) > 1:
        for t in _aberth(affine):
            a, b = _polish(c, t, 1.0)
            xs0.append(a)
            xs1.append(b)
    x0, x1 = normalize_pair(np.array(xs0, dtype=complex), np.array(xs1, dtype=complex))
    res = form_residual(c, x0, x1)
    if not np.all(np.isfinite(res)):
        raise RootSolveError("root iteration produced non-finite values", (x0, x1), res)
    if np.max(res) > 1e-6:
        raise RootSolveError(
            f"root residual {np.max(res):.3g} too large", (x0, x1), res)

    groups, ambiguous = _clusters(x0, x1, c)
    atoms = []
    for g in groups:
        # representative: exact zeros/infinity if present, else the mean in-chart
        gi = g[0]
        if len(g) == 1:
            p = ProjPoint(x0[gi], x1[gi])
        elif abs(x0[gi]) <= abs(x1[gi]):
            p = ProjPoint(_refine_multiple(c, np.mean(x0[g] / x1[g]), len(g)), 1.0)
        else:
            p = ProjPoint(1.0, _refine_multiple(c[::-1], np.mean(x1[g] / x0[g]), len(g)))
        atoms.append((p, len(g)))
    atoms.sort(key=lambda a: point_sort_key(a[0]))
    warnings = []
    if ambiguous:
        warnings.append("ambiguous root clustering (gap ratio < 10)")
        log.warning("ambiguous root clustering for form of degree %d", n)
    return RootList(atoms=atoms, residual_max=float(np.max(res)),
                    ambiguous=ambiguous, warnings=warnings)


def point_sort_key(p: ProjPoint):
    if p.z1 == 0 or abs(p.z0 / p.z1) > 1e300:
        return (1, 0.0, 0.0)
    z = p.z0 / p.z1
    return (0, z.real, z.imag)


def reconstruct_form(atoms: list[tuple[ProjPoint, int]], lead: complex = 1.0) -> np.ndarray:
    """Coefficients of ``lead * prod (b X - a Y)^m`` for atoms (a : b)."""
    out = np.array([lead], dtype=complex)
    for p, m in atoms:
        for _ in range(m):
            out = np.convolve(out, np.array([p.z1, -p.z0]))
    return out
