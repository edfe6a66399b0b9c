"""End-to-end acceptance gates for the laboratory.

Each test checks one numbered criterion (A1-A9) at its stated tolerance
and prints a single PASS/FAIL line; run with ``pytest -s`` to see the
lines for passing gates as well.
"""

import time

import numpy as np
import pytest

from holonomy_lab import (
    AnosovBase,
    CircleDiffeo,
    ConstantGenerator,
    DiffeoFamily,
    ExperimentConfig,
    PathIndependenceViolated,
    RotationFieldGenerator,
    TorusPoint,
    TrigPoly2,
    bracket_cycle,
    build_conjugacy,
    check_path_independence,
    compose,
    conjugacy_residual,
    constant_reduction,
    cycle_weight,
    dist_c0,
    dist_cr,
    holonomy_property_residuals,
    intertwining_residual,
    invert,
    leaf_holonomy,
    norm_cr,
    pp_residual,
    run_experiment,
    synthesize_cohomologous,
)
from holonomy_lab.circle import (
    random_band_limited,
    straight_path_length_cr,
)
from holonomy_lab.cocycle import PerturbedRotationGenerator, estimate_beta, estimate_sigma
from holonomy_lab.holonomy import scalar_series_holonomy
from holonomy_lab.metric import (
    halving_check,
    holonomy_invariance,
    oracle_comparison,
    telescoping_residual,
)


def _verdict(tag, ok, detail):
    print(f"{tag}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


@pytest.fixture(scope="module")
def base():
    return AnosovBase()


@pytest.fixture(scope="module")
def rot_gen(base):
    return RotationFieldGenerator(
        base, TrigPoly2([(1, 0, 0.05, 0.02), (0, 1, 0.0, 0.03)])
    )


@pytest.fixture(scope="module")
def conj_pair(base):
    """Cocycle A conjugated to rotation-field B via a known trig family."""
    inner = RotationFieldGenerator(base, TrigPoly2([(1, 0, 0.04, 0.0)]))
    phi = DiffeoFamily(
        TrigPoly2([(1, 0, 0.05, 0.02)]),
        [(1, TrigPoly2([(0, 0, 0.15, 0.0)]), TrigPoly2([(0, 1, 0.0, 0.4)]))],
    )
    return synthesize_cohomologous(inner, phi), inner, phi


def test_a1_holonomy_convergence(base):
    gen = PerturbedRotationGenerator(
        base,
        TrigPoly2([(1, 0, 0.05, 0.02), (0, 1, 0.0, 0.03)]),
        TrigPoly2.constant(0.1),
    )
    sigma = estimate_sigma(gen, 16, 16)
    beta = min(estimate_beta(gen)[0], 1.0)
    bound = sigma * base.lambda_s**beta + 0.05
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    worst_theta = 0.0
    worst_tail = 0.0
    for _ in range(50):
        x = TorusPoint.make(rng.uniform(), rng.uniform())
        side = "s" if rng.uniform() < 0.5 else "u"
        ell = rng.uniform(0.005, 0.1) * (1 if rng.uniform() < 0.5 else -1)
        h = leaf_holonomy(gen, x, side, ell, 1e-8)
        worst_theta = max(worst_theta, h.measured_theta)
        worst_tail = max(worst_tail, h.tail_bound)
    elapsed = time.perf_counter() - t0
    ok = worst_theta <= bound and worst_tail <= 1e-8 and elapsed <= 30.0
    assert _verdict(
        "A1 holonomy convergence", ok,
        f"theta {worst_theta:.4f} <= {bound:.4f}, tail {worst_tail:.2e}, "
        f"{elapsed:.1f}s",
    )


def test_a2_holonomy_properties(rot_gen):
    rep = holonomy_property_residuals(
        rot_gen, n_samples=50, seed=0, tol=1e-9, max_param=0.1
    )
    h2_worst = rep.h2_invariance
    for n in range(1, 6):
        r_n = holonomy_property_residuals(
            rot_gen, n_samples=10, seed=n, tol=1e-9, h2_n=n
        )
        h2_worst = max(h2_worst, r_n.h2_invariance)
    ok = rep.h1_composition <= 3e-8 and h2_worst <= 5e-8 and rep.h3_slope >= 0.9
    assert _verdict(
        "A2 holonomy properties", ok,
        f"H1 {rep.h1_composition:.2e}, H2 {h2_worst:.2e}, "
        f"H3 slope {rep.h3_slope:.3f}",
    )


def test_a3_scalar_oracle_equivalence(rot_gen, base):
    rng = np.random.default_rng(1)
    worst_ratio = 0.0
    for _ in range(100):
        x = TorusPoint.make(rng.uniform(), rng.uniform())
        side = "s" if rng.uniform() < 0.5 else "u"
        ell = rng.uniform(0.005, 0.1) * (1 if rng.uniform() < 0.5 else -1)
        h = leaf_holonomy(rot_gen, x, side, ell, 1e-9)
        y = base.leaf_point(x, side, ell)
        c = scalar_series_holonomy(rot_gen, x, y, side)
        diff = dist_c0(h.value, CircleDiffeo.rotation(c))[1]
        worst_ratio = max(worst_ratio, diff / (2.0 * h.tail_bound))
    ok = worst_ratio <= 1.0
    assert _verdict(
        "A3 scalar oracle equivalence", ok,
        f"worst diff / (2 tail) = {worst_ratio:.3f} over 100 pairs",
    )


def test_a4_conjugacy_recovery(conj_pair):
    gen, inner, phi = conj_pair
    anchor = TorusPoint.make(0.0, 0.0)
    t0 = time.perf_counter()
    field = build_conjugacy(gen, inner, anchor, phi.at(anchor, 256),
                            resolution=32, tol=1e-9)
    sup_d = max(
        dist_c0(val, phi.at(field.point(i, j), 256))[1]
        for (i, j), val in field.values.items()
    )
    rep_c = conjugacy_residual(gen, inner, field, 1e-9)
    rep_i = intertwining_residual(gen, inner, field, n_pairs=20, seed=0, tol=1e-9)
    elapsed = time.perf_counter() - t0
    ok = (sup_d <= 1e-3 and rep_c.max_residual <= 1e-3
          and rep_i.max_residual <= 1e-3 and elapsed <= 180.0)
    assert _verdict(
        "A4 conjugacy recovery", ok,
        f"sup dC0 {sup_d:.2e}, conjugacy {rep_c.max_residual:.2e}, "
        f"intertwining {rep_i.max_residual:.2e}, {elapsed:.1f}s",
    )


def test_a5_path_independence_vs_obstruction(conj_pair, base):
    gen, inner, phi = conj_pair
    x = TorusPoint.make(0.15, 0.85)
    y = TorusPoint.make(0.6, 0.3)
    resid, _ = check_path_independence(gen, inner, phi.at(x, 256), x, y, 1e-9)

    # two independent rotation fields are not cohomologous; the builder
    # must refuse and the cycle weight must match the scalar obstruction
    gen_a = RotationFieldGenerator(base, TrigPoly2([(1, 0, 0.05, 0.02),
                                                    (0, 1, 0.0, 0.03)]))
    gen_b = RotationFieldGenerator(base, TrigPoly2([(0, 1, 0.0, 0.05)]))
    raised = False
    try:
        build_conjugacy(gen_a, gen_b, TorusPoint.make(0.0, 0.0),
                        CircleDiffeo.identity(), resolution=4, tol=1e-9)
    except PathIndependenceViolated:
        raised = True
    cyc = bracket_cycle(base, TorusPoint.make(0.3, 0.4), 0.08)
    cw = cycle_weight(gen_a, cyc, 1e-10)
    total = sum(
        scalar_series_holonomy(gen_a, leg.start,
                               base.leaf_point(leg.start, leg.leaf, leg.param),
                               leg.leaf)
        for leg in cyc.legs
    )
    oracle = dist_c0(CircleDiffeo.rotation(total), CircleDiffeo.identity())[1]
    rel = abs(cw.obstruction - oracle) / oracle
    ok = resid <= 1e-4 and raised and cw.obstruction > 0 and rel <= 0.1
    assert _verdict(
        "A5 path independence vs obstruction", ok,
        f"residual {resid:.2e}, refusal {raised}, oracle rel err {rel:.3f}",
    )


def test_a6_constant_reduction(base):
    # a coboundary: the inner cocycle is the constant identity
    inner = ConstantGenerator(base, CircleDiffeo.identity())
    phi = DiffeoFamily(
        TrigPoly2([(1, 0, 0.04, 0.01)]),
        [(1, TrigPoly2([(0, 0, 0.1, 0.0)]), TrigPoly2([(1, 0, 0.0, 0.2)]))],
    )
    gen = synthesize_cohomologous(inner, phi)
    x0 = TorusPoint.make(0.0, 0.0)
    red = constant_reduction(gen, x0, phi.at(x0, 256), tol=1e-9, resolution=8)
    d_id = dist_c0(red.b_const, CircleDiffeo.identity())[1]
    rep = pp_residual(gen, red, n_pairs=50, seed=0, tol=1e-9)
    ok = (not red.obstructed) and d_id <= 1e-3 and rep.max_residual <= 1e-3
    assert _verdict(
        "A6 constant reduction", ok,
        f"dC0(B, Id) {d_id:.2e}, PP residual {rep.max_residual:.2e} "
        f"on {rep.n_samples} pairs",
    )


def test_a7_invariant_metric(base):
    inner = RotationFieldGenerator(base, TrigPoly2([(1, 0, 0.3, 0.1)]))
    phi = DiffeoFamily(
        TrigPoly2([(1, 0, 0.05, 0.02)]),
        [(1, TrigPoly2([(0, 0, 0.2, 0.0), (1, 0, 0.12, 0.0)]),
          TrigPoly2([(1, 0, 0.0, 0.3)]))],
    )
    gen = synthesize_cohomologous(inner, phi)
    t0 = time.perf_counter()
    ts = np.arange(64) / 64
    tele = telescoping_residual(gen, TorusPoint.make(0.2, 0.7), ts, n_iter=2000)
    halving = halving_check(gen, TorusPoint.make(0.1, 0.8), ts, n_iter=500)

    def oracle(p, fiber_ts):
        inv = phi.inverse_value(p, np.asarray(fiber_ts))
        return -2.0 * np.log(phi.deriv(p, inv))

    rel = oracle_comparison(gen, oracle, resolution=16, fiber_size=64,
                            n_iter=10_000)
    hol = holonomy_invariance(gen, n_pairs=6, fiber_size=32, n_iter=10_000,
                              seed=2)
    elapsed = time.perf_counter() - t0
    ok = (tele <= 1e-10 and 0.4 <= halving <= 0.6 and rel <= 0.05
          and hol <= 0.05 and elapsed <= 600.0)
    assert _verdict(
        "A7 invariant metric", ok,
        f"telescoping {tele:.2e}, halving {halving:.3f}, oracle rel {rel:.3f}, "
        f"holonomy invariance {hol:.3f}, {elapsed:.0f}s",
    )


def _fit_composition_constant(seed, n=200, r=2.0):
    """Largest ratio |h.g|_r / (|h|_r (1+|g|_r)^r) over random samples."""
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n):
        g = random_band_limited(rng, amplitude=0.5, n_modes=2)
        h = random_band_limited(rng, amplitude=0.5, n_modes=2)
        lhs = norm_cr(compose(h, g), r).norm
        rhs = norm_cr(h, r).norm * (1.0 + norm_cr(g, r).norm) ** r
        best = max(best, lhs / rhs)
    return best


def _fit_sandwich_constant(seed, n=200, r=1.5, q=2.0, rho=0.5):
    """Largest Holder-continuity ratio for h -> g . h . g~ plus the
    worst proxy/path-length agreement factor over the same samples."""
    rng = np.random.default_rng(seed)
    t = np.arange(256) / 256
    best = 0.0
    kappa = 1.0
    kept = 0
    while kept < n:
        g = random_band_limited(rng, amplitude=0.3)
        gt = random_band_limited(rng, amplitude=0.3)
        h1 = random_band_limited(rng, amplitude=0.3)
        eps = np.exp(rng.uniform(np.log(1e-6), np.log(3e-4)))
        h2 = CircleDiffeo(h1.phi + eps * np.sin(2 * np.pi * t))
        dd = dist_cr(h1, h2, r)
        lhs = dist_cr(compose(g, compose(h1, gt)), compose(g, compose(h2, gt)), r)
        if not (dd.in_regime and lhs.in_regime):
            continue
        kept += 1
        factor = (
            norm_cr(g, q).norm * (1.0 + norm_cr(gt, r).norm) ** r
            + norm_cr(invert(gt), q).norm * (1.0 + norm_cr(invert(g), r).norm) ** r
        )
        best = max(best, lhs.value / (factor * dd.value**rho))
        plen = straight_path_length_cr(h1, h2, r)
        if isinstance(plen, tuple):
            plen = plen[0]
        kappa = max(kappa, plen / dd.value, dd.value / plen)
    return best, kappa


def test_a8_distance_calculus():
    m1_a = _fit_composition_constant(0)
    m1_b = _fit_composition_constant(1)
    drift1 = abs(m1_a - m1_b) / max(m1_a, m1_b)
    m2_a, kappa_a = _fit_sandwich_constant(0)
    m2_b, kappa_b = _fit_sandwich_constant(1)
    drift2 = abs(m2_a - m2_b) / max(m2_a, m2_b)
    kappa = max(kappa_a, kappa_b)
    ok = drift1 <= 0.2 and drift2 <= 0.2 and kappa <= 10.0
    assert _verdict(
        "A8 distance calculus", ok,
        f"M_comp {m1_a:.4f}/{m1_b:.4f} drift {drift1:.1%}, "
        f"M_sandwich {m2_a:.4f}/{m2_b:.4f} drift {drift2:.1%}, "
        f"kappa {kappa:.6f}",
    )


def test_a9_determinism(tmp_path):
    cfg = ExperimentConfig.from_dict({
        "cocycle": {
            "family": "rotation_field",
            "coeffs": {"alpha": [[1, 0, 0.05, 0.02], [0, 1, 0.0, 0.03]]},
        },
        "sampling": {"n_samples": 8, "leaf_param": 0.05},
        "seed": 11,
    })
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    run_experiment(cfg, "holonomy", out1)
    run_experiment(cfg, "holonomy", out2)
    b1 = (out1 / "holonomy.csv").read_bytes()
    b2 = (out2 / "holonomy.csv").read_bytes()
    ok = b1 == b2 and len(b1) > 0
    assert _verdict(
        "A9 determinism", ok,
        f"holonomy.csv identical across runs ({len(b1)} bytes)",
    )
