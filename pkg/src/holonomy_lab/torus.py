"""Hyperbolic toral automorphism base: leaves, brackets, su-paths.

The base map is linear, so stable/unstable foliations are the eigenline
translates and everything here is closed-form; iteration is done in exact
rational arithmetic so orbit segments are reproducible to the last bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, NamedTuple

import numpy as np

from .errors import OutOfLocalRange


class TorusPoint(NamedTuple):
    x1: float
    x2: float

    @staticmethod
    def make(x1, x2):
        return TorusPoint(float(x1) % 1.0, float(x2) % 1.0)

    def as_array(self):
        return np.array([self.x1, self.x2])


def torus_displacement(p: TorusPoint, q: TorusPoint):
    """Shortest representative of q - p; ties at 0.5 broken toward +."""
    d = (np.array([q.x1 - p.x1, q.x2 - p.x2])) % 1.0
    return np.where(d > 0.5, d - 1.0, d)


def torus_dist(p: TorusPoint, q: TorusPoint):
    return float(np.linalg.norm(torus_displacement(p, q)))


@dataclass(frozen=True, eq=False)
class AnosovBase:
    """2x2 integer hyperbolic matrix with |det| = 1, plus eigen-data."""

    matrix: tuple
    r_loc: float = 0.2
    lambda_s: float = 0.0
    lambda_u: float = 0.0
    e_s: np.ndarray = None
    e_u: np.ndarray = None

    def __init__(self, matrix=((2, 1), (1, 1)), r_loc=0.2):
        m = np.asarray(matrix, dtype=np.int64)
        if m.shape != (2, 2):
            raise ValueError("matrix must be 2x2")
        det = int(round(np.linalg.det(m)))
        if abs(det) != 1:
            raise ValueError("matrix must have |det| = 1")
        evals, evecs = np.linalg.eig(m.astype(float))
        if np.iscomplexobj(evals) and np.abs(evals.imag).max() > 0:
            raise ValueError("matrix must have real eigenvalues")
        evals = evals.real
        evecs = evecs.real
        if np.abs(np.abs(evals) - 1.0).min() < 1e-9:
            raise ValueError("matrix must be hyperbolic (no unit eigenvalues)")
        i_s = int(np.argmin(np.abs(evals)))
        i_u = 1 - i_s
        e_s = evecs[:, i_s] / np.linalg.norm(evecs[:, i_s])
        e_u = evecs[:, i_u] / np.linalg.norm(evecs[:, i_u])
        lam_s = abs(float(evals[i_s]))
        lam_u = abs(float(evals[i_u]))
        for lam, vec, idx in ((evals[i_s], e_s, i_s), (evals[i_u], e_u, i_u)):
            if np.linalg.norm(m @ vec - lam * vec) > 1e-12:
                raise ValueError("eigen residual exceeds 1e-12")
        if abs(lam_s * lam_u - 1.0) > 1e-12:
            raise ValueError("eigenvalue product must be 1 within 1e-12")
        object.__setattr__(self, "matrix", tuple(map(tuple, m.tolist())))
        object.__setattr__(self, "r_loc", float(r_loc))
        object.__setattr__(self, "lambda_s", lam_s)
        object.__setattr__(self, "lambda_u", lam_u)
        e_s.flags.writeable = False
        e_u.flags.writeable = False
        object.__setattr__(self, "e_s", e_s)
        object.__setattr__(self, "e_u", e_u)

    # -- the map -------------------------------------------------------------

    def _int_matrix(self, inverse=False):
        (a, b), (c, d) = self.matrix
        if not inverse:
            return a, b, c, d
        det = a * d - b * c
        return d * det, -b * det, -c * det, a * det

    def apply_f(self, p: TorusPoint, n: int = 1) -> TorusPoint:
        """M^n p mod 1, step-by-step in exact rational arithmetic.

        Exact (Fraction) coordinates stay exact, so iterates commute with
        composition: f^m(f^n p) == f^(m+n) p with no rounding.
        """
        exact = isinstance(p.x1, Fraction)
        a, b, c, d = self._int_matrix(inverse=n < 0)
        u, v = Fraction(p.x1), Fraction(p.x2)
        for _ in range(abs(n)):
            u, v = (a * u + b * v) % 1, (c * u + d * v) % 1
        return TorusPoint(u, v) if exact else TorusPoint(float(u), float(v))

    def orbit(self, p: TorusPoint, n: int):
        """[p, fp, ..., f^n p] (or backward orbit for n < 0)."""
        exact = isinstance(p.x1, Fraction)
        a, b, c, d = self._int_matrix(inverse=n < 0)
        u, v = Fraction(p.x1), Fraction(p.x2)
        pts = [p]
        for _ in range(abs(n)):
            u, v = (a * u + b * v) % 1, (c * u + d * v) % 1
            pts.append(TorusPoint(u, v) if exact else TorusPoint(float(u), float(v)))
        return pts

    # -- leaves and brackets ---------------------------------------------------

    def leaf_point(self, p: TorusPoint, leaf: Literal["s", "u"], ell: float) -> TorusPoint:
        vec = self.e_s if leaf == "s" else self.e_u
        return TorusPoint.make(p.x1 + ell * vec[0], p.x2 + ell * vec[1])

    def eigen_coords(self, vec):
        """Solve a*e_s + b*e_u = vec."""
        basis = np.column_stack([self.e_s, self.e_u])
        a, b = np.linalg.solve(basis, np.asarray(vec, dtype=float))
        return float(a), float(b)

    def bracket(self, p: TorusPoint, z: TorusPoint):
        """y = W^s_loc(p) cap W^u_loc(z) with its eigen coordinates (a, b)."""
        a, b = self.eigen_coords(torus_displacement(p, z))
        if abs(a) > self.r_loc or abs(b) > self.r_loc:
            raise OutOfLocalRange(
                f"bracket coordinates ({a:.3g}, {b:.3g}) exceed r_loc={self.r_loc}"
            )
        y = self.leaf_point(p, "s", a)
        return y, a, b

    def contraction_check(self, p: TorusPoint, q: TorusPoint, n: int) -> bool:
        """d(f^k p, f^k q) <= lambda^k d(p, q) for all 1 <= k <= n."""
        d0 = torus_dist(p, q)
        pk, qk = p, q
        for k in range(1, n + 1):
            pk = self.apply_f(pk)
            qk = self.apply_f(qk)
            if torus_dist(pk, qk) > self.lambda_s**k * d0 + 1e-12:
                return False
        return True


class Leg(NamedTuple):
    start: TorusPoint
    leaf: Literal["s", "u"]
    param: float


@dataclass(frozen=True)
class SuPath:
    """Concatenation of stable/unstable legs."""

    legs: tuple
    base: AnosovBase
    origin: TorusPoint

    @property
    def endpoint(self) -> TorusPoint:
        if not self.legs:
            return self.origin
        last = self.legs[-1]
        return self.base.leaf_point(last.start, last.leaf, last.param)

    def points(self):
        """origin, leg endpoints ... (length = len(legs) + 1)."""
        pts = [self.origin]
        for leg in self.legs:
            pts.append(self.base.leaf_point(leg.start, leg.leaf, leg.param))
        return pts

    def is_closed(self, tol=1e-12):
        return torus_dist(self.origin, self.endpoint) <= tol

    def reversed(self) -> "SuPath":
        legs = [
            Leg(self.base.leaf_point(leg.start, leg.leaf, leg.param), leg.leaf, -leg.param)
            for leg in reversed(self.legs)
        ]
        return SuPath(tuple(legs), self.base, self.endpoint)

    def concat(self, other: "SuPath") -> "SuPath":
        if torus_dist(self.endpoint, other.origin) > 1e-12:
            raise ValueError("paths do not chain")
        return SuPath(self.legs + other.legs, self.base, self.origin)


def build_su_path(base: AnosovBase, x: TorusPoint, y: TorusPoint,
                  max_leg_length: float | None = None) -> SuPath:
    """su-path from x to y: subdivide the straight segment, bracket each step."""
    step = max_leg_length if max_leg_length is not None else base.r_loc / 2
    if step > base.r_loc:
        raise ValueError("max_leg_length must be <= r_loc")
    disp = torus_displacement(x, y)
    dist = float(np.linalg.norm(disp))
    legs = []
    if dist > 0.0:
        n_seg = max(1, int(math.ceil(dist / step)))
        cur = x
        for j in range(1, n_seg + 1):
            nxt_vec = np.array([x.x1, x.x2]) + disp * (j / n_seg)
            nxt = TorusPoint.make(nxt_vec[0], nxt_vec[1])
            a, b = base.eigen_coords(torus_displacement(cur, nxt))
            if abs(a) > 1e-15:
                legs.append(Leg(cur, "s", a))
            mid = base.leaf_point(cur, "s", a)
            if abs(b) > 1e-15:
                legs.append(Leg(mid, "u", b))
            cur = base.leaf_point(mid, "u", b)
    path = SuPath(tuple(legs), base, x)
    if torus_dist(path.endpoint, y) > 1e-12:
        raise AssertionError("constructed path endpoint drifted from target")
    return path


def bracket_cycle(base: AnosovBase, x: TorusPoint, scale: float) -> SuPath:
    """Closed 4-leg parallelogram cycle at x: s, u, -s, -u legs of size scale."""
    p0 = x
    p1 = base.leaf_point(p0, "s", scale)
    p2 = base.leaf_point(p1, "u", scale)
    p3 = base.leaf_point(p2, "s", -scale)
    legs = (
        Leg(p0, "s", scale),
        Leg(p1, "u", scale),
        Leg(p2, "s", -scale),
        Leg(p3, "u", -scale),
    )
    return SuPath(legs, base, x)
