"""Cycle weights, path transport, and conjugacy construction from one value.

A conjugacy field is grown from a single anchor value by transporting along
su-paths with the two cocycles' path weights; path independence (checked,
not assumed) makes the construction canonical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import circle
from .circle import CircleDiffeo, compose, invert
from .cocycle import CocycleGenerator
from .errors import NotClosed, PathIndependenceViolated
from .holonomy import DEFAULT_TOL, leaf_holonomy
from .torus import SuPath, TorusPoint, build_su_path, bracket_cycle, torus_dist

SAFETY_FACTOR = 3.0
OBSTRUCTION_FACTOR = 10.0
CYCLE_SCALES = (0.02, 0.05, 0.1)


@dataclass(frozen=True)
class PathWeight:
    """Ordered composition of leg holonomies along an su-path."""

    value: CircleDiffeo
    path: SuPath
    accumulated_error: float


def path_weight(gen: CocycleGenerator, path: SuPath, tol=DEFAULT_TOL) -> PathWeight:
    """H_{x_{k-1},x_k} o ... o H_{x0,x1} with per-leg certified holonomies."""
    value = CircleDiffeo.identity(gen.grid_size)
    err = 0.0
    for leg in path.legs:
        h = leaf_holonomy(gen, leg.start, leg.leaf, leg.param, tol)
        value = compose(h.value, value, validate=False)
        err += h.tail_bound
    return PathWeight(value, path, SAFETY_FACTOR * max(err, tol * max(len(path.legs), 1)))


@dataclass(frozen=True)
class CycleWeight:
    """Path weight of a closed path, with its obstruction magnitude."""

    weight: PathWeight
    obstruction: float  # dC0(value, Id)


def cycle_weight(gen: CocycleGenerator, path: SuPath, tol=DEFAULT_TOL) -> CycleWeight:
    if not path.is_closed():
        raise NotClosed(
            f"endpoint is {torus_dist(path.origin, path.endpoint):.3g} from start"
        )
    w = path_weight(gen, path, tol)
    obstruction = circle.dist_c0(w.value, CircleDiffeo.identity(gen.grid_size))[1]
    return CycleWeight(w, obstruction)


def transport_value(gen_a, gen_b, phi_x: CircleDiffeo, path: SuPath,
                    tol=DEFAULT_TOL):
    """Phi at the path endpoint: W_A o Phi_x o W_B^{-1}."""
    w_a = path_weight(gen_a, path, tol)
    w_b = path_weight(gen_b, path, tol)
    value = compose(w_a.value, compose(phi_x, invert(w_b.value), validate=False),
                    validate=False)
    return value, w_a.accumulated_error + w_b.accumulated_error


def check_path_independence(gen_a, gen_b, phi_x: CircleDiffeo, x: TorusPoint,
                            y: TorusPoint, tol=DEFAULT_TOL):
    """dC0 between values transported along two distinct su-paths x -> y."""
    base = gen_a.base
    p1 = build_su_path(base, x, y, base.r_loc / 2)
    p2 = build_su_path(base, x, y, base.r_loc / 3)
    v1, e1 = transport_value(gen_a, gen_b, phi_x, p1, tol)
    v2, e2 = transport_value(gen_a, gen_b, phi_x, p2, tol)
    return circle.dist_c0(v1, v2)[1], e1 + e2


@dataclass
class ConjugacyField:
    """Per-grid-point conjugacy values grown from one anchor."""

    resolution: int
    anchor_point: TorusPoint
    anchor_value: CircleDiffeo
    values: dict  # (i, j) -> CircleDiffeo
    errors: dict  # (i, j) -> accumulated transport error
    base: object = None

    def point(self, i, j) -> TorusPoint:
        return TorusPoint(i / self.resolution, j / self.resolution)

    def nearest_index(self, p: TorusPoint):
        m = self.resolution
        return (int(round(p.x1 * m)) % m, int(round(p.x2 * m)) % m)

    def max_error(self):
        return max(self.errors.values())


def _grid_tree_edges(resolution):
    """BFS spanning tree of the torus grid rooted at (0, 0)."""
    from collections import deque

    m = resolution
    seen = {(0, 0)}
    queue = deque([(0, 0)])
    edges = []
    while queue:
        node = queue.popleft()
        i, j = node
        for nbr in (((i + 1) % m, j), ((i - 1) % m, j), (i, (j + 1) % m), (i, (j - 1) % m)):
            if nbr not in seen:
                seen.add(nbr)
                edges.append((node, nbr))
                queue.append(nbr)
    return edges


def build_conjugacy(gen_a, gen_b, anchor_point: TorusPoint, anchor_value: CircleDiffeo,
                    resolution=32, tol=DEFAULT_TOL, strategy="tree",
                    spot_checks=10, seed=0) -> ConjugacyField:
    """Grow the field over a resolution x resolution grid by path transport.

    Path independence is spot-checked before the full build; a residual
    beyond OBSTRUCTION_FACTOR times the error budget aborts the build,
    since the two cocycles then carry a genuine cycle obstruction.
    """
    base = gen_a.base
    rng = np.random.default_rng(seed)
    for _ in range(spot_checks):
        target = TorusPoint.make(
            anchor_point.x1 + rng.uniform(-0.3, 0.3),
            anchor_point.x2 + rng.uniform(-0.3, 0.3),
        )
        resid, budget = check_path_independence(gen_a, gen_b, anchor_value,
                                                anchor_point, target, tol)
        if resid > OBSTRUCTION_FACTOR * budget:
            raise PathIndependenceViolated(
                f"residual {resid:.3g} > {OBSTRUCTION_FACTOR:.0f} x budget {budget:.3g} "
                f"at {target}"
            )

    values, errors = {}, {}
    root = TorusPoint(0.0, 0.0)
    p0 = build_su_path(base, anchor_point, root, base.r_loc / 2)
    v0, e0 = transport_value(gen_a, gen_b, anchor_value, p0, tol)
    values[(0, 0)], errors[(0, 0)] = v0, e0

    if strategy == "tree":
        for parent, child in _grid_tree_edges(resolution):
            p_pt = TorusPoint(parent[0] / resolution, parent[1] / resolution)
            c_pt = TorusPoint(child[0] / resolution, child[1] / resolution)
            edge = build_su_path(base, p_pt, c_pt, base.r_loc / 2)
            v, e = transport_value(gen_a, gen_b, values[parent], edge, tol)
            values[child] = v
            errors[child] = errors[parent] + e
    elif strategy == "direct":
        for i in range(resolution):
            for j in range(resolution):
                if (i, j) in values:
                    continue
                target = TorusPoint(i / resolution, j / resolution)
                path = build_su_path(base, anchor_point, target, base.r_loc / 2)
                v, e = transport_value(gen_a, gen_b, anchor_value, path, tol)
                values[(i, j)] = v
                errors[(i, j)] = e
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    return ConjugacyField(resolution, anchor_point, anchor_value, values, errors, base)


def field_value_at(gen_a, gen_b, field: ConjugacyField, p: TorusPoint,
                   tol=DEFAULT_TOL):
    """Phi_p by short-path transport from the nearest grid value."""
    idx = field.nearest_index(p)
    grid_pt = field.point(*idx)
    if torus_dist(grid_pt, p) <= 1e-12:
        return field.values[idx], field.errors[idx]
    path = build_su_path(field.base, grid_pt, p, field.base.r_loc / 2)
    v, e = transport_value(gen_a, gen_b, field.values[idx], path, tol)
    return v, field.errors[idx] + e


@dataclass(frozen=True)
class ResidualReport:
    max_residual: float
    mean_residual: float
    n_samples: int


def conjugacy_residual(gen_a, gen_b, field: ConjugacyField, tol=DEFAULT_TOL) -> ResidualReport:
    """max over the grid of dC0(A_x, Phi_{fx} o B_x o Phi_x^{-1})."""
    base = gen_a.base
    residuals = []
    for (i, j), phi_x in field.values.items():
        x = field.point(i, j)
        fx = base.apply_f(x)
        phi_fx, _ = field_value_at(gen_a, gen_b, field, fx, tol)
        lhs = gen_a.at(x, next_point=fx)
        rhs = compose(phi_fx, compose(gen_b.at(x, next_point=fx), invert(phi_x),
                                      validate=False), validate=False)
        residuals.append(circle.dist_c0(lhs, rhs)[1])
    arr = np.array(residuals)
    return ResidualReport(float(arr.max()), float(arr.mean()), len(arr))


def intertwining_residual(gen_a, gen_b, field: ConjugacyField, n_pairs=20,
                          seed=0, tol=DEFAULT_TOL, max_param=0.05) -> ResidualReport:
    """max over sampled leaf pairs of
    dC0(H^A_{x,y}, Phi_y o H^B_{x,y} o Phi_x^{-1}),
    with Phi_y routed through its nearest grid value (not through H_{x,y})."""
    rng = np.random.default_rng(seed)
    base = gen_a.base
    m = field.resolution
    residuals = []
    for _ in range(n_pairs):
        idx = (int(rng.integers(m)), int(rng.integers(m)))
        x = field.point(*idx)
        side = "s" if rng.uniform() < 0.5 else "u"
        ell = rng.uniform(0.2, 1.0) * max_param * (1 if rng.uniform() < 0.5 else -1)
        y = base.leaf_point(x, side, ell)
        h_a = leaf_holonomy(gen_a, x, side, ell, tol)
        h_b = leaf_holonomy(gen_b, x, side, ell, tol)
        phi_x = field.values[idx]
        phi_y, _ = field_value_at(gen_a, gen_b, field, y, tol)
        rhs = compose(phi_y, compose(h_b.value, invert(phi_x), validate=False),
                      validate=False)
        residuals.append(circle.dist_c0(h_a.value, rhs)[1])
    arr = np.array(residuals)
    return ResidualReport(float(arr.max()), float(arr.mean()), len(arr))


@dataclass
class ConstantReduction:
    """Outcome of the reduction to a constant cocycle."""

    obstructed: bool
    b_const: CircleDiffeo | None
    field: ConjugacyField | None
    cycle_scan: tuple  # (scale, obstruction, error_bound) rows
    worst_cycle: tuple | None


def constant_reduction(gen_a, x0: TorusPoint, phi_x0: CircleDiffeo,
                       tol=DEFAULT_TOL, resolution=8,
                       scales=CYCLE_SCALES) -> ConstantReduction:
    """Corollary-style reduction: trivial cycle weights at x0 imply a
    conjugacy to the constant cocycle B = Phi0^{-1} o W~^{-1} o A_{x0} o Phi0,
    with the field transported by A-weights alone."""
    base = gen_a.base
    scan, worst = [], None
    obstructed = False
    for scale in scales:
        cyc = bracket_cycle(base, x0, scale)
        cw = cycle_weight(gen_a, cyc, tol)
        scan.append((scale, cw.obstruction, cw.weight.accumulated_error))
        if cw.obstruction > OBSTRUCTION_FACTOR * cw.weight.accumulated_error:
            obstructed = True
            if worst is None or cw.obstruction > worst[1]:
                worst = (scale, cw.obstruction, cw.weight.accumulated_error)
    if obstructed:
        return ConstantReduction(True, None, None, tuple(scan), worst)

    fx0 = base.apply_f(x0)
    tilde = build_su_path(base, x0, fx0, base.r_loc / 2)
    w_tilde = path_weight(gen_a, tilde, tol)
    b_const = compose(
        invert(phi_x0),
        compose(invert(w_tilde.value), compose(gen_a.at(x0, next_point=fx0), phi_x0,
                                               validate=False), validate=False),
        validate=False,
    )
    gen_b = _constant_like(gen_a, b_const)
    field = build_conjugacy(gen_a, gen_b, x0, phi_x0, resolution=resolution,
                            tol=tol, spot_checks=4)
    return ConstantReduction(False, b_const, field, tuple(scan), None)


def _constant_like(gen_a, value):
    from .cocycle import ConstantGenerator

    return ConstantGenerator(gen_a.base, value, q=gen_a.q, grid_size=gen_a.grid_size)


def pp_residual(gen_a, reduction: ConstantReduction, n_pairs=50, seed=0,
                tol=DEFAULT_TOL, max_param=0.05) -> ResidualReport:
    """Residual of Phi_y o Phi_x^{-1} = H^A_{x,y} on sampled leaf pairs."""
    field = reduction.field
    gen_b = _constant_like(gen_a, reduction.b_const)
    rng = np.random.default_rng(seed)
    base = gen_a.base
    m = field.resolution
    residuals = []
    for _ in range(n_pairs):
        idx = (int(rng.integers(m)), int(rng.integers(m)))
        x = field.point(*idx)
        side = "s" if rng.uniform() < 0.5 else "u"
        ell = rng.uniform(0.2, 1.0) * max_param * (1 if rng.uniform() < 0.5 else -1)
        y = base.leaf_point(x, side, ell)
        h = leaf_holonomy(gen_a, x, side, ell, tol)
        phi_y, _ = field_value_at(gen_a, gen_b, field, y, tol)
        lhs = compose(phi_y, invert(field.values[idx]), validate=False)
        residuals.append(circle.dist_c0(lhs, h.value)[1])
    arr = np.array(residuals)
    return ResidualReport(float(arr.max()), float(arr.mean()), len(arr))
