"""Points of the complex projective line and the chordal kernel.

Points are stored as unit-length homogeneous pairs ``(z0, z1)`` with
affine coordinate ``z = z0 / z1``. With unit representatives the chordal
distance is just ``|p ^ q|``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

# Library-wide point-identification tolerance, in chordal distance.
EPS_PT = 1e-10

UNITARY_TOL = 1e-12


def normalize_pair(z0, z1):
    """Scale arrays (or scalars) of pairs to unit length with a canonical phase.

    The coordinate of larger modulus is made real and positive.
    """
    z0 = np.asarray(z0, dtype=complex)
    z1 = np.asarray(z1, dtype=complex)
    # rescale first so huge affine values do not overflow the norm
    m = np.maximum(np.abs(z0), np.abs(z1))
    if np.any(m == 0):
        raise InvalidInput("(0, 0) is not a point of the projective line")
    z0 = z0 / m
    z1 = z1 / m
    n = np.sqrt(np.abs(z0) ** 2 + np.abs(z1) ** 2)
    z0 = z0 / n
    z1 = z1 / n
    lead = np.where(np.abs(z0) >= np.abs(z1), z0, z1)
    phase = np.conj(lead) / np.abs(lead)
    return z0 * phase, z1 * phase


@dataclass(frozen=True, eq=False)
class ProjPoint:
    z0: complex
    z1: complex

    def __post_init__(self):
        a, b = normalize_pair(self.z0, self.z1)
        object.__setattr__(self, "z0", complex(a))
        object.__setattr__(self, "z1", complex(b))

    @classmethod
    def from_affine(cls, z) -> "ProjPoint":
        return cls(complex(z), 1.0)

    @classmethod
    def infinity(cls) -> "ProjPoint":
        return cls(1.0, 0.0)

    @classmethod
    def parse(cls, text: str) -> "ProjPoint":
        """Parse ``"inf"`` or a complex literal such as ``"0.3+0.4i"``."""
        t = text.strip().lower()
        if t in ("inf", "infinity", "oo"):
            return cls.infinity()
        return cls.from_affine(parse_complex(t))

    @property
    def coords(self) -> tuple[complex, complex]:
        return (self.z0, self.z1)

    @property
    def is_infinity(self) -> bool:
        return abs(self.z1) < EPS_PT

    @property
    def affine(self) -> complex:
        """Affine coordinate; ``complex('inf')`` at infinity."""
        if self.z1 == 0:
            return complex(np.inf, 0.0)
        return self.z0 / self.z1

    def __eq__(self, other):
        if not isinstance(other, ProjPoint):
            return NotImplemented
        return chordal(self, other) < EPS_PT

    __hash__ = None

    def __repr__(self):
        if self.is_infinity:
            return "ProjPoint(inf)"
        return f"ProjPoint({self.affine!r})"


_COMPLEX_RE = re.compile(
    r"^\s*([+-]?\d*\.?\d+(?:e[+-]?\d+)?)?\s*(?:([+-])\s*(\d*\.?\d*(?:e[+-]?\d+)?)\s*[ij])?\s*$"
)


def parse_complex(text: str) -> complex:
    """Parse ``a``, ``bi``, ``a+bi`` (``j`` also accepted)."""
    t = text.strip().lower().replace(" ", "")
    if not t:
        raise InvalidInput("empty complex literal")
    try:
        return complex(t.replace("i", "j"))
    except ValueError:
        pass
    m = _COMPLEX_RE.match(t)
    if not m or (m.group(1) is None and m.group(2) is None):
        raise InvalidInput(f"cannot parse complex literal {text!r}")
    re_part = float(m.group(1)) if m.group(1) else 0.0
    im_part = 0.0
    if m.group(2):
        mag = m.group(3)
        im_part = float(mag) if mag else 1.0
        if m.group(2) == "-":
            im_part = -im_part
    return complex(re_part, im_part)


def as_point(x) -> ProjPoint:
    if isinstance(x, ProjPoint):
        return x
    if isinstance(x, str):
        return ProjPoint.parse(x)
    z = complex(x)
    if np.isinf(z.real) or np.isinf(z.imag):
        return ProjPoint.infinity()
    return ProjPoint.from_affine(z)


def wedge(p: ProjPoint, q: ProjPoint) -> complex:
    return p.z0 * q.z1 - p.z1 * q.z0


def chordal(p: ProjPoint, q: ProjPoint) -> float:
    return min(1.0, abs(wedge(p, q)))


def chordal_affine(z: complex, w: complex) -> float:
    """Chordal distance between two finite affine points (closed form)."""
    return abs(z - w) / (np.sqrt(1 + abs(z) ** 2) * np.sqrt(1 + abs(w) ** 2))


def check_unitary(h) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.shape != (2, 2):
        raise InvalidInput("Moebius matrix must be 2x2")
    err = np.max(np.abs(h.conj().T @ h - np.eye(2)))
    if err > UNITARY_TOL:
        raise InvalidInput(f"matrix is not unitary (defect {err:.3g})")
    return h


def mobius_apply(h, p: ProjPoint) -> ProjPoint:
    h = check_unitary(h)
    return ProjPoint(h[0, 0] * p.z0 + h[0, 1] * p.z1, h[1, 0] * p.z0 + h[1, 1] * p.z1)


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of SU(2)."""
    v = rng.normal(size=4)
    v /= np.linalg.norm(v)
    a = complex(v[0], v[1])
    b = complex(v[2], v[3])
    return np.array([[a, -b.conjugate()], [b, a.conjugate()]])


def random_points(rng: np.random.Generator, n: int) -> list[ProjPoint]:
    """Points uniform for the spherical area measure."""
    x = rng.uniform(-1.0, 1.0, size=n)
    phi = rng.uniform(0.0, 2 * np.pi, size=n)
    return [sphere_point(xi, ph) for xi, ph in zip(x, phi)]


def sphere_point(x: float, phi: float) -> ProjPoint:
    """Point with height ``x = cos(theta)`` and azimuth ``phi`` (x = 1 is infinity)."""
    x = float(np.clip(x, -1.0, 1.0))
    return ProjPoint(np.sqrt((1 + x) / 2) * np.exp(1j * phi), np.sqrt((1 - x) / 2))


def sphere_coords(z0, z1):
    """Unit vectors in R^3 for arrays of homogeneous pairs (infinity = north pole)."""
    z0 = np.asarray(z0, dtype=complex)
    z1 = np.asarray(z1, dtype=complex)
    n2 = np.abs(z0) ** 2 + np.abs(z1) ** 2
    w = 2 * z0 * np.conj(z1) / n2
    x3 = (np.abs(z0) ** 2 - np.abs(z1) ** 2) / n2
    return np.stack([w.real, w.imag, x3], axis=-1)


def pairs_from_sphere(X):
    """Inverse of :func:`sphere_coords` for an array of unit vectors."""
    X = np.asarray(X, dtype=float)
    x3 = np.clip(X[..., 2], -1.0, 1.0)
    a = np.sqrt((1 + x3) / 2)
    b = np.sqrt((1 - x3) / 2)
    w = X[..., 0] + 1j * X[..., 1]
    # z0 * conj(z1) = w / 2 with |z0| = a, |z1| = b
    phase = np.where(a * b > 0, w / np.where(a * b > 0, 2 * a * b, 1.0), 1.0)
    return normalize_pair(a * phase, b + 0j)
