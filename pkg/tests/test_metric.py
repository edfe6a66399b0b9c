import numpy as np
import pytest

from holonomy_lab import (
    AnosovBase,
    CircleDiffeo,
    ConstantGenerator,
    DiffeoFamily,
    PerturbedRotationGenerator,
    RotationFieldGenerator,
    TorusPoint,
    TrigPoly2,
    Unbounded,
    build_invariant_metric,
    metric_residuals,
    pushforward_metric,
    synthesize_cohomologous,
)
from holonomy_lab.metric import (
    fiber_holder_slope,
    halving_check,
    holonomy_invariance,
    invariance_residual_bound,
    leafwise_holder_slope,
    log_density,
    oracle_comparison,
    pushforward_log_density,
    telescoping_residual,
)


@pytest.fixture(scope="module")
def base():
    return AnosovBase()


@pytest.fixture(scope="module")
def conj_gen(base):
    # a strong inner rotation field makes fiber orbits equidistribute fast,
    # so the Cesaro averages converge well within the iteration budgets used
    # here; the wave amplitude varies with the base point so the density has
    # genuine leafwise dependence
    inner = RotationFieldGenerator(base, TrigPoly2([(1, 0, 0.3, 0.1)]))
    phi = DiffeoFamily(
        TrigPoly2([(1, 0, 0.05, 0.02)]),
        [(1, TrigPoly2([(0, 0, 0.2, 0.0), (1, 0, 0.12, 0.0)]),
          TrigPoly2([(1, 0, 0.0, 0.3)]))],
    )
    return synthesize_cohomologous(inner, phi), phi


def test_pushforward_identity():
    ts = np.arange(64) / 64
    rho = 1.0 + 0.3 * np.cos(2 * np.pi * ts)
    out = pushforward_metric(rho, CircleDiffeo.identity(64), ts)
    assert np.max(np.abs(out - rho)) < 1e-12


def test_pushforward_rotation_shifts_density():
    ts = np.arange(128) / 128
    rho = 1.0 + 0.3 * np.cos(2 * np.pi * ts)
    out = pushforward_metric(rho, CircleDiffeo.rotation(0.25, 128), ts)
    want = 1.0 + 0.3 * np.cos(2 * np.pi * (ts - 0.25))
    assert np.max(np.abs(out - want)) < 1e-10


def test_pushforward_sine_map_pointwise():
    # g with lift t + sin(2 pi t)/(2 pi (1/0.1))... use derivative 1 + 0.1 cos
    n = 256
    ts = np.arange(n) / n
    g = CircleDiffeo.from_lift(lambda t: t + 0.1 / (2 * np.pi) * np.sin(2 * np.pi * t), n)
    out = pushforward_metric(np.ones(n), g, ts)
    # at t = g(0) = 0, the density is 1/Dg(0)^2 = (1 + 0.1)^-2
    assert abs(out[0] - (1.0 + 0.1) ** (-2)) < 1e-6
    # change of variables: integral of g_* rho equals integral of rho/Dg
    assert abs(out.mean() - np.mean(1.0 / g.deriv(ts))) < 1e-6


def test_pushforward_contravariant_under_composition():
    from holonomy_lab import compose

    n = 256
    ts = np.arange(n) / n
    rho = 1.0 + 0.2 * np.sin(2 * np.pi * ts)
    g = CircleDiffeo.from_lift(lambda t: t + 0.05 / (2 * np.pi) * np.sin(2 * np.pi * t), n)
    h = CircleDiffeo.rotation(0.3, n)
    lhs = pushforward_metric(rho, compose(g, h), ts)
    rhs = pushforward_metric(pushforward_metric(rho, h, ts), g, ts)
    assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_log_density_rotation_cocycle_constant(base):
    # rotations are fiber isometries: the invariant density is identically 1
    gen = RotationFieldGenerator(base, TrigPoly2([(1, 0, 0.04, 0.0)]))
    ts = np.arange(32) / 32
    vals, c, c_sup = log_density(gen, TorusPoint.make(0.3, 0.7), ts, 500)
    assert np.max(np.abs(vals)) < 1e-12
    assert c_sup < 1e-12


def test_telescoping_identity(base, conj_gen):
    gen, _ = conj_gen
    ts = np.arange(32) / 32
    res = telescoping_residual(gen, TorusPoint.make(0.21, 0.64), ts, n_iter=2000)
    assert res < 1e-10


def test_halving_ratio(base, conj_gen):
    gen, _ = conj_gen
    ts = np.arange(32) / 32
    ratio = halving_check(gen, TorusPoint.make(0.1, 0.8), ts, n_iter=500)
    assert 0.4 <= ratio <= 0.6


def test_oracle_comparison_closed_form(base, conj_gen):
    # for A = Phi_{fx} o R o Phi_x^{-1} the invariant density at x is the
    # pullback of Lebesgue under Phi_x^{-1}: log rho_x = -2 log D Phi_x (Phi_x^{-1})
    gen, phi = conj_gen

    def oracle(p, ts):
        inv = phi.inverse_value(p, np.asarray(ts))
        return -2.0 * np.log(phi.deriv(p, inv))

    rel = oracle_comparison(gen, oracle, resolution=4, fiber_size=16, n_iter=10_000)
    assert rel < 0.05


def test_holonomy_invariance(base, conj_gen):
    gen, _ = conj_gen
    rel = holonomy_invariance(gen, n_pairs=4, fiber_size=16, n_iter=4000, seed=2)
    assert rel < 0.05


def test_unbounded_probe(base):
    gen = PerturbedRotationGenerator(
        base, TrigPoly2([(1, 0, 0.29, 0.11)]), TrigPoly2.constant(0.6)
    )
    ts = np.arange(16) / 16
    with pytest.raises(Unbounded):
        log_density(gen, TorusPoint.make(0.37, 0.58), ts, 4000)


def test_holder_slopes(base, conj_gen):
    gen, _ = conj_gen
    s_fiber = fiber_holder_slope(gen, TorusPoint.make(0.4, 0.15),
                                 fiber_size=64, n_iter=2000)
    assert s_fiber >= 0.9
    s_leaf = leafwise_holder_slope(gen, n_points=2, fiber_size=16,
                                   n_iter=4000, seed=1)
    assert s_leaf >= 0.9


def test_invariance_bound_decreases(base, conj_gen):
    gen, _ = conj_gen
    ts = np.arange(16) / 16
    x = TorusPoint.make(0.55, 0.31)
    b1 = invariance_residual_bound(gen, x, ts, 500)
    b2 = invariance_residual_bound(gen, x, ts, 4000)
    assert b2 < b1


def test_metric_family_anchor_normalization(base, conj_gen):
    gen, _ = conj_gen
    fam = build_invariant_metric(gen, resolution=4, fiber_size=16, n_iter=1000)
    assert abs(fam.log_rho[fam.anchor].mean()) < 1e-12
    assert fam.log_rho.shape == (4, 4, 16)


def test_pushforward_log_density_roundtrip():
    ts = np.arange(64) / 64
    vals = 0.2 * np.sin(2 * np.pi * ts)
    g = CircleDiffeo.rotation(0.25, 64)
    pts, pushed = pushforward_log_density(vals, ts, g)
    assert np.allclose(pts, (ts + 0.25) % 1.0)
    assert np.allclose(pushed, vals)  # rotations have unit derivative


def test_metric_residuals_report(base, conj_gen):
    gen, _ = conj_gen
    rep = metric_residuals(gen, n_iter=2000, fiber_size=16, seed=0,
                           holder_fits=False)
    assert rep.telescoping_max < 1e-10
    assert 0.4 <= rep.halving_ratio <= 0.6
    assert rep.holonomy_invariance < 0.1
    assert rep.n_iter == 2000
