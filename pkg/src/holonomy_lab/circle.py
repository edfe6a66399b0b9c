"""Calculus on orientation-preserving circle diffeomorphisms.

A diffeomorphism g is stored through its periodic displacement phi on a
uniform dyadic grid t_j = j/N, with lift g(t) = t + phi(t).  Evaluation
between grid points uses the trigonometric interpolant of phi, so smooth
maps are resolved to spectral accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._core import eval_trig_series, eval_trig_series_pair
from .errors import MonotonicityLost, OrderTooHigh, ToleranceNotMet

TWO_PI = 2.0 * math.pi

# Trailing Fourier modes below this relative magnitude are dropped from
# evaluation (not from storage), which keeps long composition chains fast.
_TRUNCATION_REL = 1e-15


@dataclass(frozen=True)
class DiffMetricConfig:
    """Tolerances and cutoffs for the distance calculus."""

    epsilon0: float = 0.25
    delta0: float = 0.1
    inversion_tol: float = 1e-10
    grid_size: int = 256
    max_order: int = 8

    def __post_init__(self):
        if not 0.0 < self.epsilon0 <= 0.5:
            raise ValueError("epsilon0 must lie in (0, 1/2]")
        if self.delta0 <= 0 or self.inversion_tol <= 0:
            raise ValueError("tolerances must be positive")
        n = self.grid_size
        if n < 8 or n & (n - 1):
            raise ValueError("grid_size must be a power of two >= 8")


DEFAULT_CONFIG = DiffMetricConfig()


def circle_dist(u, v=0.0):
    """Arc-length distance on R/Z (unit-circumference convention)."""
    d = np.mod(np.asarray(u) - v, 1.0)
    return np.minimum(d, 1.0 - d)


def _displacement_coeffs(phi):
    """Real cos/sin coefficients of the trig interpolant of samples phi."""
    n = len(phi)
    c = np.fft.rfft(phi) / n
    a = 2.0 * c.real
    a[0] = c[0].real
    a[-1] = c[-1].real  # Nyquist mode kept as pure cosine
    b = -2.0 * c.imag
    b[0] = 0.0
    b[-1] = 0.0
    return a, b


def _truncate(a, b):
    mags = np.maximum(np.abs(a), np.abs(b))
    scale = mags.max()
    if scale == 0.0:
        return a[:1], b[:1]
    keep = np.nonzero(mags > _TRUNCATION_REL * scale)[0]
    k = keep[-1] + 1
    return a[:k], b[:k]


def _deriv_coeffs(a, b, order):
    """Coefficients of the order-th derivative of a trig series."""
    k = TWO_PI * np.arange(len(a))
    for _ in range(order):
        a, b = k * b, -k * a
    return a, b


class CircleDiffeo:
    """Orientation-preserving diffeomorphism of the circle.

    Immutable; all operations return new instances.
    """

    __slots__ = ("phi", "grid_size", "_a", "_b", "_inv", "_deriv_cache")

    def __init__(self, displacement_samples, validate=True):
        phi = np.ascontiguousarray(displacement_samples, dtype=float)
        n = len(phi)
        if n < 8 or n & (n - 1):
            raise ValueError("grid size must be a power of two >= 8")
        phi.flags.writeable = False
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "grid_size", n)
        a, b = _displacement_coeffs(phi)
        ta, tb = _truncate(a, b)
        object.__setattr__(self, "_a", np.ascontiguousarray(ta))
        object.__setattr__(self, "_b", np.ascontiguousarray(tb))
        object.__setattr__(self, "_inv", None)
        object.__setattr__(self, "_deriv_cache", {})
        if validate:
            self._check_monotone()

    def __setattr__(self, name, value):
        raise AttributeError("CircleDiffeo is immutable")

    # -- construction helpers ------------------------------------------------

    @classmethod
    def identity(cls, grid_size=None):
        n = grid_size or DEFAULT_CONFIG.grid_size
        return cls(np.zeros(n), validate=False)

    @classmethod
    def rotation(cls, amount, grid_size=None):
        n = grid_size or DEFAULT_CONFIG.grid_size
        return cls(np.full(n, float(amount)), validate=False)

    @classmethod
    def from_lift(cls, fn, grid_size=None, validate=True):
        """Sample a lift t -> fn(t) with fn(t+1) = fn(t) + 1."""
        n = grid_size or DEFAULT_CONFIG.grid_size
        t = np.arange(n) / n
        return cls(np.asarray(fn(t), dtype=float) - t, validate=validate)

    # -- evaluation ----------------------------------------------------------

    @property
    def grid(self):
        return np.arange(self.grid_size) / self.grid_size

    def displacement(self, pts):
        pts = np.ascontiguousarray(pts, dtype=float)
        return eval_trig_series(self._a, self._b, pts)

    def __call__(self, pts):
        """Lift values g(t) = t + phi(t); not reduced mod 1."""
        pts = np.ascontiguousarray(pts, dtype=float)
        return pts + eval_trig_series(self._a, self._b, pts)

    def deriv(self, pts, order=1):
        """Order-th derivative of the lift at pts (order >= 1)."""
        da, db = self._deriv_series(order)
        vals = eval_trig_series(da, db, np.ascontiguousarray(pts, dtype=float))
        if order == 1:
            vals = vals + 1.0
        return vals

    def _deriv_series(self, order):
        cache = self._deriv_cache
        if order not in cache:
            da, db = _deriv_coeffs(self._a, self._b, order)
            cache[order] = (np.ascontiguousarray(da), np.ascontiguousarray(db))
        return cache[order]

    def value_and_deriv(self, pts):
        pts = np.ascontiguousarray(pts, dtype=float)
        da, db = self._deriv_series(1)
        v, d = eval_trig_series_pair(self._a, self._b, da, db, pts)
        return pts + v, 1.0 + d

    # -- invariants ----------------------------------------------------------

    def _check_monotone(self):
        n2 = 2 * self.grid_size
        pts = np.arange(n2) / n2
        if np.min(self.deriv(pts)) <= 0.0:
            raise MonotonicityLost(
                "lift derivative <= 0 at grid/midpoints; increase grid_size"
            )

    def is_monotone(self):
        try:
            self._check_monotone()
        except MonotonicityLost:
            return False
        return True

    def inverse(self, config=DEFAULT_CONFIG):
        if self._inv is None:
            inv = invert(self, config)
            object.__setattr__(inv, "_inv", self)
            object.__setattr__(self, "_inv", inv)
        return self._inv

    def __repr__(self):
        return f"CircleDiffeo(N={self.grid_size}, |phi|_max={np.abs(self.phi).max():.3g})"


# -- group operations --------------------------------------------------------


def compose(g: CircleDiffeo, h: CircleDiffeo, validate=True) -> CircleDiffeo:
    """g after h, sampled by evaluating g's displacement at h(t_j)."""
    if g.grid_size != h.grid_size:
        raise ValueError("operands sampled on different grids")
    t = h.grid
    u = t + h.phi
    new_phi = h.phi + g.displacement(u)
    return CircleDiffeo(new_phi, validate=validate)


def invert(g: CircleDiffeo, config=DEFAULT_CONFIG) -> CircleDiffeo:
    """Inverse diffeomorphism via safeguarded Newton on the monotone lift."""
    n = g.grid_size
    t = g.grid
    phi_min = g.phi.min() - 1e-3
    phi_max = g.phi.max() + 1e-3
    lo = t - phi_max
    hi = t - phi_min
    s = t - g.phi  # first-order guess
    tol = config.inversion_tol
    max_iter = 80
    for _ in range(max_iter):
        val, der = g.value_and_deriv(s)
        res = val - t
        if np.max(np.abs(res)) <= 0.25 * tol:
            break
        hi = np.where(res > 0, np.minimum(hi, s), hi)
        lo = np.where(res < 0, np.maximum(lo, s), lo)
        step = res / der
        s_new = s - step
        bad = (s_new <= lo) | (s_new >= hi)
        s = np.where(bad, 0.5 * (lo + hi), s_new)
    val = g(s)
    if np.max(np.abs(val - t)) > tol:
        raise ToleranceNotMet(
            f"inversion residual {np.max(np.abs(val - t)):.3g} > {tol:.3g}"
        )
    return CircleDiffeo(s - t, validate=False)


def derivative(g: CircleDiffeo, order: int, config=DEFAULT_CONFIG):
    """Order-th derivative of g on the grid, with a spectral reliability guard."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if order > config.max_order:
        raise OrderTooHigh(f"order {order} exceeds configured max {config.max_order}")
    a, b = _deriv_coeffs(g._a, g._b, order)
    energy = a * a + b * b
    total = energy[1:].sum()
    if total > 0.0:
        guard = max(2, int(0.75 * (g.grid_size // 2)))
        tail = energy[guard:].sum()
        if tail > 0.01 * total:
            raise OrderTooHigh(
                f"order-{order} derivative has {100 * tail / total:.1f}% spectral "
                "energy in the guard band"
            )
    return g.deriv(g.grid, order)


# -- norms and distances -----------------------------------------------------


@dataclass(frozen=True)
class NormReport:
    """Components of the C^r size of a diffeomorphism."""

    r: float
    c_norm: tuple  # grid sups: order 0 is displacement, then |D^i g|
    holder_seminorm: float
    norm: float  # ||g||_{C^r}
    inv_norm: float  # ||g^{-1}||_{C^r}
    size: float  # |g|_{C^r} = norm + inv_norm
    m_r: float | None = None  # fitted composition constant, when measured


def _half_grid(g):
    n2 = 2 * g.grid_size
    return np.arange(n2) / n2


def _norm_components(g, r, config):
    k = int(math.floor(r))
    alpha = r - k
    pts = _half_grid(g)
    comps = [float(circle_dist(g.displacement(pts)).max())]
    for i in range(1, k + 1):
        comps.append(float(np.abs(g.deriv(pts, i)).max()))
    hold = 0.0
    if alpha > 1e-12:
        hold = holder_seminorm(g, k, alpha, config)
    norm = comps[0] + (max(comps[1:]) if k >= 1 else 0.0) + hold
    return comps, hold, norm


def norm_cr(g: CircleDiffeo, r: float, config=DEFAULT_CONFIG) -> NormReport:
    """C^r size report; sups are grid sups over grid points and midpoints."""
    if r < 1:
        raise ValueError("r must be >= 1")
    comps, hold, norm = _norm_components(g, r, config)
    _, _, inv_norm = _norm_components(g.inverse(config), r, config)
    return NormReport(
        r=r,
        c_norm=tuple(comps),
        holder_seminorm=hold,
        norm=norm,
        inv_norm=inv_norm,
        size=norm + inv_norm,
    )


def holder_seminorm(g: CircleDiffeo, k: int, alpha: float, config=DEFAULT_CONFIG):
    """Grid estimate (from below) of the alpha-Hoelder seminorm of D^k g.

    alpha = 1 encodes the Lipschitz case.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    pts = _half_grid(g)
    vals = g.deriv(pts, k) if k >= 1 else pts + g.displacement(pts)
    n2 = len(pts)
    max_off = int(config.epsilon0 * n2)
    best = 0.0
    for off in range(1, max_off + 1):
        diff = np.abs(np.roll(vals, -off) - vals)
        if k == 0:
            diff = np.minimum(diff, np.abs(diff - 1.0))  # lift wrap at the seam
        d = min(off / n2, 1.0 - off / n2)
        if d <= 0.0:
            continue
        best = max(best, float(diff.max()) / d**alpha)
    return best


def _phi_pair(g: CircleDiffeo, h: CircleDiffeo):
    """Displacement samples of g and h on a shared (finer) grid."""
    if g.grid_size == h.grid_size:
        return g.phi, h.phi
    n = max(g.grid_size, h.grid_size)
    pts = np.arange(n) / n
    return g.displacement(pts), h.displacement(pts)


def dist_c0(g: CircleDiffeo, h: CircleDiffeo, config=DEFAULT_CONFIG):
    """(d0, dC0): sup circle distance, plus the same between inverses."""
    pg, ph = _phi_pair(g, h)
    d0 = float(circle_dist(pg - ph).max())
    pgi, phi = _phi_pair(g.inverse(config), h.inverse(config))
    d0_inv = float(circle_dist(pgi - phi).max())
    return d0, d0 + d0_inv


def d0(g: CircleDiffeo, h: CircleDiffeo):
    """Forward-only sup circle distance (cheap inner-loop variant)."""
    pg, ph = _phi_pair(g, h)
    return float(circle_dist(pg - ph).max())


def _diff_norm_cr(g, h, r, config):
    """C^r norm of the lift difference g - h (local-trivialization proxy)."""
    k = int(math.floor(r))
    alpha = r - k
    pts = _half_grid(g)
    delta0 = float(circle_dist(g.displacement(pts) - h.displacement(pts)).max())
    dterms = [
        float(np.abs(g.deriv(pts, i) - h.deriv(pts, i)).max()) for i in range(1, k + 1)
    ]
    total = delta0 + (max(dterms) if dterms else 0.0)
    if alpha > 1e-12:
        dk = g.deriv(pts, k) - h.deriv(pts, k) if k >= 1 else None
        if dk is None:
            dk = g.displacement(pts) - h.displacement(pts)
        n2 = len(pts)
        best = 0.0
        for off in range(1, int(config.epsilon0 * n2) + 1):
            d = min(off / n2, 1.0 - off / n2)
            best = max(best, float(np.abs(np.roll(dk, -off) - dk).max()) / d**alpha)
        total += best
    return total


@dataclass(frozen=True)
class CrDistance:
    """Norm-difference proxy for d_{C^r}, with its validity flag."""

    value: float
    in_regime: bool
    regime_threshold: float


def dist_cr(g: CircleDiffeo, h: CircleDiffeo, r: float, config=DEFAULT_CONFIG):
    """Proxy ||g-h||_{C^r} + ||g^{-1}-h^{-1}||_{C^r} with the regime flag.

    The proxy stands in for the path-infimum distance only when it is
    below delta0 / |g|_{C^r}; outside that regime the value is still
    returned but flagged.
    """
    fwd = _diff_norm_cr(g, h, r, config)
    bwd = _diff_norm_cr(g.inverse(config), h.inverse(config), r, config)
    value = fwd + bwd
    threshold = config.delta0 / norm_cr(g, r, config).size
    return CrDistance(value=value, in_regime=value < threshold, regime_threshold=threshold)


def straight_path_length_cr(g, h, r, config=DEFAULT_CONFIG, n_steps=16):
    """Upper estimate of d_{C^r}(g,h) from the straight displacement path.

    The forward path is linear in displacement (its length is a single
    difference norm); the inverse path is the induced path of inverses,
    whose length is accumulated over n_steps segments.
    """
    fwd = _diff_norm_cr(g, h, r, config)
    bwd = 0.0
    prev = h.inverse(config)
    for j in range(1, n_steps + 1):
        s = j / n_steps
        mid = CircleDiffeo((1 - s) * h.phi + s * g.phi, validate=False)
        cur = mid.inverse(config)
        bwd += _diff_norm_cr(cur, prev, r, config)
        prev = cur
    return fwd + bwd


# -- sampling helpers (shared by tests and the distance-calculus fits) -------


def random_band_limited(rng, grid_size=None, n_modes=4, amplitude=0.5, rotation=True):
    """Random smooth diffeo with sup |phi'| <= amplitude < 1."""
    n = grid_size or DEFAULT_CONFIG.grid_size
    t = np.arange(n) / n
    phi = np.full(n, rng.uniform(0.0, 1.0) if rotation else 0.0)
    weights = rng.uniform(-1.0, 1.0, size=(n_modes, 2))
    norm = np.sum(np.abs(weights).sum(axis=1) * (np.arange(n_modes) + 1)) * TWO_PI
    scale = amplitude / norm
    for m in range(n_modes):
        phi += scale * (
            weights[m, 0] * np.cos(TWO_PI * (m + 1) * t)
            + weights[m, 1] * np.sin(TWO_PI * (m + 1) * t)
        )
    return CircleDiffeo(phi)
