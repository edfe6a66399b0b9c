"""Cocycle generators over the torus base, iteration, and diagnostics.

Parameter fields are trigonometric polynomials on T^2, so generators are
Lipschitz in the base point and the Hoelder exponent beta = 1 is exact for
every built-in family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import circle
from .circle import CircleDiffeo, TWO_PI, compose, invert
from .errors import Unbounded
from .torus import AnosovBase, TorusPoint

REVALIDATE_EVERY = 16
DEFAULT_ITERATION_BUDGET = 500


@dataclass(frozen=True)
class TrigPoly2:
    """Real trigonometric polynomial on T^2.

    coeffs: iterable of (k1, k2, cos_amp, sin_amp); (0, 0, c, .) is the
    constant term c.
    """

    coeffs: tuple

    def __init__(self, coeffs):
        object.__setattr__(
            self,
            "coeffs",
            tuple((int(k1), int(k2), float(ca), float(sa)) for k1, k2, ca, sa in coeffs),
        )

    @classmethod
    def constant(cls, c):
        return cls([(0, 0, c, 0.0)])

    def __call__(self, p: TorusPoint) -> float:
        val = 0.0
        for k1, k2, ca, sa in self.coeffs:
            if k1 == 0 and k2 == 0:
                val += ca
            else:
                ang = TWO_PI * (k1 * p.x1 + k2 * p.x2)
                val += ca * math.cos(ang) + sa * math.sin(ang)
        return val

    def amplitude_bound(self) -> float:
        return sum(abs(ca) + abs(sa) for _, _, ca, sa in self.coeffs)

    def scaled(self, factor) -> "TrigPoly2":
        return TrigPoly2([(k1, k2, factor * ca, factor * sa) for k1, k2, ca, sa in self.coeffs])


class DiffeoFamily:
    """x -> Phi_x, a circle diffeo with trig-polynomial parameter fields.

    Lift: Phi_x(t) = t + a(x) + sum_m c_m(x)/(2 pi m) * sin(2 pi m t + psi_m(x)).
    """

    def __init__(self, rotation: TrigPoly2 | None = None, waves=()):
        # waves: iterable of (m, c: TrigPoly2, psi: TrigPoly2)
        self.rotation = rotation or TrigPoly2.constant(0.0)
        self.waves = tuple((int(m), c, psi) for m, c, psi in waves)
        amp = sum(c.amplitude_bound() for _, c, psi in self.waves)
        if amp >= 1.0:
            raise ValueError("wave amplitudes must total < 1 for monotone lifts")

    def value(self, p: TorusPoint, ts):
        ts = np.asarray(ts, dtype=float)
        out = ts + self.rotation(p)
        for m, c, psi in self.waves:
            out = out + c(p) / (TWO_PI * m) * np.sin(TWO_PI * m * ts + psi(p))
        return out

    def deriv(self, p: TorusPoint, ts):
        ts = np.asarray(ts, dtype=float)
        out = np.ones_like(ts)
        for m, c, psi in self.waves:
            out = out + c(p) * np.cos(TWO_PI * m * ts + psi(p))
        return out

    def inverse_value(self, p: TorusPoint, ts, tol=1e-13):
        """Solve Phi_x(s) = t by Newton; the lift is uniformly monotone."""
        ts = np.asarray(ts, dtype=float)
        s = ts - self.rotation(p)
        for _ in range(60):
            res = self.value(p, s) - ts
            if np.max(np.abs(res)) <= tol:
                break
            s = s - res / self.deriv(p, s)
        return s

    def at(self, p: TorusPoint, grid_size=None) -> CircleDiffeo:
        n = grid_size or circle.DEFAULT_CONFIG.grid_size
        t = np.arange(n) / n
        return CircleDiffeo(self.value(p, t) - t, validate=False)


class CocycleGenerator:
    """Base class: x -> A(x) in Diff(S^1), Hoelder in x."""

    family = "abstract"

    def __init__(self, base: AnosovBase, q: float = 2.0, grid_size=None):
        self.base = base
        self.q = float(q)
        self.grid_size = grid_size or circle.DEFAULT_CONFIG.grid_size

    # closed-form fiber action; subclasses override
    def apply(self, p: TorusPoint, ts, next_point=None):
        raise NotImplementedError

    def apply_deriv(self, p: TorusPoint, ts, next_point=None):
        raise NotImplementedError

    def apply_with_deriv(self, p: TorusPoint, ts, next_point=None):
        """(A_p(ts), D A_p(ts)); subclasses override to share work."""
        return (self.apply(p, ts, next_point=next_point),
                self.apply_deriv(p, ts, next_point=next_point))

    def at(self, p: TorusPoint, next_point=None) -> CircleDiffeo:
        t = np.arange(self.grid_size) / self.grid_size
        return CircleDiffeo(self.apply(p, t, next_point=next_point) - t, validate=False)

    def rotation_amount(self, p: TorusPoint):
        """Rotation number when A(p) is a rigid rotation, else None."""
        return None

    def ground_truth(self):
        """Attached conjugating family for synthesized generators, else None."""
        return None


class ConstantGenerator(CocycleGenerator):
    family = "constant"

    def __init__(self, base, value: CircleDiffeo | None = None, q=2.0, grid_size=None):
        super().__init__(base, q, grid_size)
        self.value = value if value is not None else CircleDiffeo.identity(self.grid_size)

    def apply(self, p, ts, next_point=None):
        return self.value(np.asarray(ts, dtype=float))

    def apply_deriv(self, p, ts, next_point=None):
        return self.value.deriv(np.asarray(ts, dtype=float))

    def at(self, p, next_point=None):
        return self.value

    def rotation_amount(self, p):
        phi = self.value.phi
        if np.ptp(phi) < 1e-15:
            return float(phi[0])
        return None


class RotationFieldGenerator(CocycleGenerator):
    """A(x) = rigid rotation by alpha(x)."""

    family = "rotation_field"

    def __init__(self, base, alpha: TrigPoly2, q=2.0, grid_size=None):
        super().__init__(base, q, grid_size)
        self.alpha = alpha

    def apply(self, p, ts, next_point=None):
        return np.asarray(ts, dtype=float) + self.alpha(p)

    def apply_deriv(self, p, ts, next_point=None):
        return np.ones_like(np.asarray(ts, dtype=float))

    def at(self, p, next_point=None):
        return CircleDiffeo.rotation(self.alpha(p), self.grid_size)

    def rotation_amount(self, p):
        return self.alpha(p)


class PerturbedRotationGenerator(CocycleGenerator):
    """A_x(t) = t + alpha(x) + eps(x)/(2 pi) sin(2 pi t + phase(x))."""

    family = "perturbed_rotation"

    def __init__(self, base, alpha: TrigPoly2, eps: TrigPoly2,
                 phase: TrigPoly2 | None = None, q=2.0, grid_size=None):
        super().__init__(base, q, grid_size)
        self.alpha = alpha
        self.eps = eps
        self.phase = phase or TrigPoly2.constant(0.0)

    def apply(self, p, ts, next_point=None):
        ts = np.asarray(ts, dtype=float)
        return ts + self.alpha(p) + self.eps(p) / TWO_PI * np.sin(TWO_PI * ts + self.phase(p))

    def apply_deriv(self, p, ts, next_point=None):
        ts = np.asarray(ts, dtype=float)
        return 1.0 + self.eps(p) * np.cos(TWO_PI * ts + self.phase(p))


class ConjugatedGenerator(CocycleGenerator):
    """A_x = Phi_{fx} o B_x o Phi_x^{-1} with Phi a known DiffeoFamily."""

    family = "conjugated"

    def __init__(self, base, inner: CocycleGenerator, phi: DiffeoFamily, grid_size=None):
        super().__init__(base, inner.q, grid_size)
        self.inner = inner
        self.phi = phi

    def _fx(self, p, next_point):
        return next_point if next_point is not None else self.base.apply_f(p)

    def apply(self, p, ts, next_point=None):
        fp = self._fx(p, next_point)
        s = self.phi.inverse_value(p, ts)
        return self.phi.value(fp, self.inner.apply(p, s))

    def apply_deriv(self, p, ts, next_point=None):
        fp = self._fx(p, next_point)
        s = self.phi.inverse_value(p, ts)
        mid = self.inner.apply(p, s)
        return (
            self.phi.deriv(fp, mid)
            * self.inner.apply_deriv(p, s)
            / self.phi.deriv(p, s)
        )

    def apply_with_deriv(self, p, ts, next_point=None):
        # one Newton inversion shared between value and derivative
        fp = self._fx(p, next_point)
        s = self.phi.inverse_value(p, ts)
        mid = self.inner.apply(p, s)
        val = self.phi.value(fp, mid)
        d = (self.phi.deriv(fp, mid)
             * self.inner.apply_deriv(p, s)
             / self.phi.deriv(p, s))
        return val, d

    def ground_truth(self):
        return self.phi


def synthesize_cohomologous(inner: CocycleGenerator, phi: DiffeoFamily) -> ConjugatedGenerator:
    """A_x = Phi_{fx} o B_x o Phi_x^{-1}; Phi is recorded as ground truth."""
    return ConjugatedGenerator(inner.base, inner, phi, grid_size=inner.grid_size)


def synthesize_bounded(base: AnosovBase, theta_field: TrigPoly2, phi: DiffeoFamily,
                       q=2.0, grid_size=None, probe_n=200, probe_points=3) -> ConjugatedGenerator:
    """Conjugate of an isometric (rotation) cocycle: bounded in every C^r.

    The n-step C^1 norms are probed over n <= probe_n before returning.
    """
    gen = ConjugatedGenerator(
        base, RotationFieldGenerator(base, theta_field, q=q, grid_size=grid_size), phi,
        grid_size=grid_size,
    )
    rng = np.random.default_rng(7)
    ts = np.arange(64) / 64
    for _ in range(probe_points):
        p = TorusPoint.make(rng.uniform(), rng.uniform())
        sup = derivative_growth(gen, p, probe_n, ts)
        bound = phi_derivative_bound(phi)
        if sup > bound * 1.01:
            raise Unbounded(
                f"probe found sup_n |D A^n| = {sup:.3g} above chain-rule bound {bound:.3g}"
            )
    return gen


def phi_derivative_bound(phi: DiffeoFamily):
    """(sup |D Phi|) * (sup |D Phi^{-1}|) over the wave amplitude bounds."""
    amp = sum(c.amplitude_bound() for _, c, _ in phi.waves)
    return (1.0 + amp) / (1.0 - amp)


def derivative_growth(gen: CocycleGenerator, p: TorusPoint, n: int, ts):
    """sup over steps <= n of |D A^n_p| along fiber sample points ts."""
    orbit = gen.base.orbit(p, n)
    u = np.asarray(ts, dtype=float)
    logd = np.zeros_like(u)
    sup = 1.0
    for i in range(n):
        logd = logd + np.log(gen.apply_deriv(orbit[i], u, next_point=orbit[i + 1]))
        u = gen.apply(orbit[i], u, next_point=orbit[i + 1]) % 1.0
        sup = max(sup, float(np.exp(np.max(np.abs(logd)))))
    return sup


# -- iteration ----------------------------------------------------------------


def evaluate(gen: CocycleGenerator, x: TorusPoint, n: int,
             budget=DEFAULT_ITERATION_BUDGET) -> CircleDiffeo:
    """n-step cocycle product A(f^{n-1}x) o ... o A(x); inverses for n < 0."""
    if abs(n) > budget:
        raise ValueError(f"|n| = {abs(n)} exceeds iteration budget {budget}")
    if n == 0:
        return CircleDiffeo.identity(gen.grid_size)
    if n < 0:
        return invert(evaluate(gen, gen.base.apply_f(x, n), -n, budget))
    orbit = gen.base.orbit(x, n)
    prod = gen.at(orbit[0], next_point=orbit[1])
    for i in range(1, n):
        prod = compose(gen.at(orbit[i], next_point=orbit[i + 1]), prod,
                       validate=(i % REVALIDATE_EVERY == 0))
    prod._check_monotone()
    return prod


# -- diagnostics ---------------------------------------------------------------


def estimate_beta(gen: CocycleGenerator, n_pairs=200, seed=0, scale_range=(1e-3, 1e-1)):
    """(beta, c) from log-log regression of d_{C^q}(A_x, A_y) vs d_X(x, y)."""
    from .torus import torus_dist

    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for _ in range(n_pairs):
        p = TorusPoint.make(rng.uniform(), rng.uniform())
        scale = math.exp(rng.uniform(math.log(scale_range[0]), math.log(scale_range[1])))
        ang = rng.uniform(0, TWO_PI)
        q_pt = TorusPoint.make(p.x1 + scale * math.cos(ang), p.x2 + scale * math.sin(ang))
        d_base = torus_dist(p, q_pt)
        d_fiber = circle.dist_cr(gen.at(p), gen.at(q_pt), gen.q).value
        if d_base > 0 and d_fiber > 1e-14:
            xs.append(math.log(d_base))
            ys.append(math.log(d_fiber))
    if len(xs) < max(8, n_pairs // 10):
        return 1.0, 0.0  # (locally) constant generator by convention
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(slope), float(math.exp(intercept))


def estimate_sigma(gen: CocycleGenerator, base_resolution=64, fiber_resolution=64):
    """Grid sup of max(|D A_x|, |D A_x^{-1}|); a lower estimate of sigma."""
    ts = np.arange(fiber_resolution) / fiber_resolution
    sup = 0.0
    for i in range(base_resolution):
        for j in range(base_resolution):
            p = TorusPoint(i / base_resolution, j / base_resolution)
            d = gen.apply_deriv(p, ts)
            sup = max(sup, float(d.max()), 1.0 / float(d.min()))
    return sup


@dataclass(frozen=True)
class BunchingReport:
    """Measured contraction/expansion data and the fiber-bunching flags."""

    lam: float
    sigma: float
    beta: float
    holder_constant: float
    theta: float  # sigma * lam**beta
    eta: float
    big_k: float
    fit_residual: float
    r: float
    q: float
    rho: float
    e1_ok: bool
    e3_ok: bool
    e3prime_ok: bool


def bunching_report(gen: CocycleGenerator, r: float, n_fit=20, n_points=4,
                    seed=0, sigma_resolution=32) -> BunchingReport:
    """Fill the bunching flags from measured sigma, beta, and fitted eta, K."""
    lam = gen.base.lambda_s
    sigma = estimate_sigma(gen, base_resolution=sigma_resolution)
    beta, c_holder = estimate_beta(gen, seed=seed)
    theta = sigma * lam**beta

    rng = np.random.default_rng(seed)
    ns, logs = [], []
    for _ in range(n_points):
        p = TorusPoint.make(rng.uniform(), rng.uniform())
        for n in range(1, n_fit + 1):
            g = evaluate(gen, p, n)
            ns.append(n)
            logs.append(math.log(max(circle.norm_cr(g, gen.q).size, 1e-300)))
    slope, intercept = np.polyfit(ns, logs, 1)
    eta = math.exp(slope)
    big_k = math.exp(intercept)
    resid = float(np.sqrt(np.mean((np.polyval([slope, intercept], ns) - logs) ** 2)))

    q = gen.q
    rho = q - r
    k_int = math.floor(q) if q != math.floor(q) else int(q) - 1
    e1 = theta < 1.0
    e3 = rho > 0 and eta ** (2.0 * (r + 1.0) / rho) * lam**beta < 1.0
    e3p = rho > 0 and sigma ** (2.0 * (r + 1.0) * (k_int + 1.0) / rho) * lam**beta < 1.0
    return BunchingReport(
        lam=lam, sigma=sigma, beta=beta, holder_constant=c_holder, theta=theta,
        eta=eta, big_k=big_k, fit_residual=resid, r=r, q=q, rho=rho,
        e1_ok=e1, e3_ok=e3, e3prime_ok=e3p,
    )


def cocycle_equation_residual(gen, x, n, k):
    """dC0 residual of A^{n+k}_x vs A^n_{f^k x} o A^k_x."""
    lhs = evaluate(gen, x, n + k)
    rhs = compose(evaluate(gen, gen.base.apply_f(x, k), n), evaluate(gen, x, k))
    return circle.dist_c0(lhs, rhs)[1]
