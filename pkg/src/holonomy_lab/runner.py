"""Experiment pipelines: dispatch, CSV emission, and reproducibility manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, circle, conjugacy, metric
from .circle import CircleDiffeo
from .cocycle import cocycle_equation_residual
from .config import ExperimentConfig, build_base, build_generator, build_phi
from .errors import PathIndependenceViolated
from .holonomy import leaf_holonomy
from .torus import TorusPoint, bracket_cycle

COMMANDS = ("synth", "holonomy", "conjugacy", "cycles", "metric")


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    code_version: str = __version__
    files: list = field(default_factory=list)     # {"path", "sha256"}
    timings: dict = field(default_factory=dict)   # stage -> seconds
    gates: dict = field(default_factory=dict)     # gate name -> bool
    summary: dict = field(default_factory=dict)   # free-form scalar results

    def all_gates_pass(self) -> bool:
        return all(self.gates.values())

    def to_dict(self):
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "code_version": self.code_version,
            "files": self.files,
            "timings": self.timings,
            "gates": self.gates,
            "summary": self.summary,
        }


class _Run:
    """Accumulates outputs for one experiment; single-writer."""

    def __init__(self, manifest: RunManifest, out_dir: Path):
        self.manifest = manifest
        self.out_dir = out_dir
        out_dir.mkdir(parents=True, exist_ok=True)

    def write_csv(self, name, header, rows):
        path = self.out_dir / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self.manifest.files.append({"path": name, "sha256": _sha256(path)})

    def timed(self, stage, fn, *args, **kwargs):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        self.manifest.timings[stage] = round(time.perf_counter() - t0, 4)
        return out


def _sample_points(rng, n):
    return [TorusPoint.make(rng.uniform(), rng.uniform()) for _ in range(n)]


def _run_synth(cfg, run, rng):
    gen = run.timed("build", build_generator, cfg)
    rows = []
    for p in _sample_points(rng, min(cfg.n_samples, 10)):
        res = cocycle_equation_residual(gen, p, 2, 1)
        rows.append((p.x1, p.x2, res))
    run.write_csv("synth_check.csv", ["x1", "x2", "cocycle_equation_residual"], rows)
    worst = max(r[2] for r in rows)
    run.manifest.summary["max_cocycle_equation_residual"] = worst
    run.manifest.gates["cocycle_equation"] = worst <= 1e-9
    truth = gen.ground_truth()
    if truth is not None:
        run.manifest.summary["ground_truth_phi"] = {
            "rotation": list(truth.rotation.coeffs),
            "waves": [[m, list(c.coeffs), list(psi.coeffs)] for m, c, psi in truth.waves],
        }


def _run_holonomy(cfg, run, rng):
    gen = build_generator(cfg)
    ident = CircleDiffeo.identity(cfg.fiber_grid_size)
    rows = []
    for p in _sample_points(rng, cfg.n_samples):
        side = "s" if rng.uniform() < 0.5 else "u"
        ell = rng.uniform(0.2, 1.0) * cfg.leaf_param * (1 if rng.uniform() < 0.5 else -1)
        h = leaf_holonomy(gen, p, side, ell, cfg.tolerance_holonomy)
        rows.append((p.x1, p.x2, ell, side, h.truncation, h.tail_bound,
                     h.measured_theta, circle.dist_c0(h.value, ident)[1]))
    run.write_csv(
        "holonomy.csv",
        ["x1", "x2", "leaf_param", "side", "n", "tail_bound", "measured_theta",
         "dC0_to_Id"],
        rows,
    )
    worst_tail = max(r[5] for r in rows)
    worst_theta = max(r[6] for r in rows)
    run.manifest.summary["max_tail_bound"] = worst_tail
    run.manifest.summary["max_measured_theta"] = worst_theta
    run.manifest.gates["tail_bound"] = worst_tail <= cfg.tolerance_holonomy
    run.manifest.gates["contraction"] = worst_theta < 1.0


def _run_conjugacy(cfg, run, rng):
    gen_a = build_generator(cfg)
    truth = gen_a.ground_truth()
    if cfg.cocycle_b is not None:
        gen_b = build_generator(cfg, spec=cfg.cocycle_b, which="cocycle_b")
    elif truth is not None:
        gen_b = gen_a.inner
    else:
        raise PathIndependenceViolated("no second cocycle to conjugate against")
    anchor_pt = TorusPoint(0.0, 0.0)
    anchor_val = (truth.at(anchor_pt, cfg.fiber_grid_size) if truth is not None
                  else CircleDiffeo.identity(cfg.fiber_grid_size))
    fld = run.timed(
        "build_conjugacy", conjugacy.build_conjugacy, gen_a, gen_b, anchor_pt,
        anchor_val, resolution=cfg.base_resolution, tol=cfg.tolerance_holonomy,
        seed=cfg.seed,
    )
    sample_rows, field_rows = [], []
    for (i, j), phi in sorted(fld.values.items()):
        field_rows.append((i, j, i / fld.resolution, j / fld.resolution, fld.errors[(i, j)]))
        for k, v in enumerate(phi.phi):
            sample_rows.append((i, j, k, v))
    run.write_csv("field.csv", ["i", "j", "x1", "x2", "transport_error"], field_rows)
    run.write_csv("field_samples.csv", ["i", "j", "t_index", "displacement"], sample_rows)
    rep_c = run.timed("conjugacy_residual", conjugacy.conjugacy_residual,
                      gen_a, gen_b, fld, cfg.tolerance_holonomy)
    rep_i = run.timed("intertwining_residual", conjugacy.intertwining_residual,
                      gen_a, gen_b, fld, n_pairs=min(cfg.n_samples, 20), seed=cfg.seed,
                      tol=cfg.tolerance_holonomy, max_param=cfg.leaf_param)
    run.write_csv(
        "conjugacy_residuals.csv",
        ["check", "max_residual", "mean_residual", "n_samples"],
        [("conjugacy_equation", rep_c.max_residual, rep_c.mean_residual, rep_c.n_samples),
         ("intertwining", rep_i.max_residual, rep_i.mean_residual, rep_i.n_samples)],
    )
    run.manifest.summary["conjugacy_residual"] = rep_c.max_residual
    run.manifest.summary["intertwining_residual"] = rep_i.max_residual
    run.manifest.gates["conjugacy_residual"] = rep_c.max_residual <= 1e-3
    run.manifest.gates["intertwining_residual"] = rep_i.max_residual <= 1e-3


def _run_cycles(cfg, run, rng):
    gen = build_generator(cfg)
    base = build_base(cfg)
    rows = []
    obstructed = False
    worst = None
    for p in _sample_points(rng, max(1, cfg.n_samples // 4)):
        for scale in cfg.cycle_scales:
            cyc = bracket_cycle(base, p, scale)
            cw = conjugacy.cycle_weight(gen, cyc, cfg.tolerance_holonomy)
            bound = cw.weight.accumulated_error
            rows.append((p.x1, p.x2, scale, cw.obstruction, bound))
            if cw.obstruction > conjugacy.OBSTRUCTION_FACTOR * bound:
                obstructed = True
                if worst is None or cw.obstruction > worst[3]:
                    worst = rows[-1]
    run.write_csv("cycles.csv",
                  ["x1", "x2", "scale", "obstruction_dC0", "error_bound"], rows)
    run.manifest.summary["obstructed"] = obstructed
    if worst is not None:
        run.manifest.summary["worst_cycle"] = {
            "x1": worst[0], "x2": worst[1], "scale": worst[2],
            "obstruction": worst[3], "error_bound": worst[4],
        }
    run.manifest.gates["cycles_trivial"] = not obstructed


def _run_metric(cfg, run, rng):
    gen = build_generator(cfg)
    fam = run.timed("build_metric", metric.build_invariant_metric, gen,
                    resolution=cfg.base_resolution, fiber_size=64,
                    n_iter=cfg.averaging_n)
    rows = []
    for i in range(fam.resolution):
        for j in range(fam.resolution):
            for k, t in enumerate(fam.fiber):
                rows.append((i / fam.resolution, j / fam.resolution, t,
                             fam.log_rho[i, j, k]))
    run.write_csv("metric.csv", ["x1", "x2", "t", "log_rho"], rows)
    # heat-map plot data: one row per base point, fiber mean of log rho
    heat = [(i / fam.resolution, j / fam.resolution, fam.log_rho[i, j].mean())
            for i in range(fam.resolution) for j in range(fam.resolution)]
    run.write_csv("metric_heatmap.csv", ["x1", "x2", "mean_log_rho"], heat)
    rep = run.timed("residuals", metric.metric_residuals, gen,
                    n_iter=min(cfg.averaging_n, 2000), seed=cfg.seed,
                    holder_fits=False)
    run.write_csv(
        "metric_residuals.csv",
        ["telescoping_max", "halving_ratio", "holonomy_invariance", "n_iter"],
        [(rep.telescoping_max, rep.halving_ratio, rep.holonomy_invariance, rep.n_iter)],
    )
    run.manifest.summary["telescoping_max"] = rep.telescoping_max
    run.manifest.summary["halving_ratio"] = rep.halving_ratio
    run.manifest.summary["holonomy_invariance"] = rep.holonomy_invariance
    run.manifest.gates["telescoping"] = rep.telescoping_max <= 1e-9
    run.manifest.gates["halving"] = 0.35 <= rep.halving_ratio <= 0.65
    run.manifest.gates["holonomy_invariance"] = rep.holonomy_invariance <= 0.05


_PIPELINES = {
    "synth": _run_synth,
    "holonomy": _run_holonomy,
    "conjugacy": _run_conjugacy,
    "cycles": _run_cycles,
    "metric": _run_metric,
}


def run_experiment(cfg: ExperimentConfig, command: str, out_dir,
                   seed_override=None) -> RunManifest:
    if command not in _PIPELINES:
        raise ValueError(f"unknown command {command!r}; expected one of {COMMANDS}")
    seed = cfg.seed if seed_override is None else int(seed_override)
    cfg.seed = seed
    manifest = RunManifest(command=command, config=cfg.to_dict(), seed=seed)
    run = _Run(manifest, Path(out_dir))
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    try:
        _PIPELINES[command](cfg, run, rng)
    except PathIndependenceViolated as exc:
        manifest.summary["obstructed"] = True
        manifest.summary["detail"] = str(exc)
        manifest.gates["path_independence"] = False
    manifest.timings["total"] = round(time.perf_counter() - t0, 4)
    path = run.out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def emit_report(manifest: RunManifest) -> str:
    lines = [f"run: {manifest.command}  (seed={manifest.seed}, "
             f"version={manifest.code_version})"]
    if not manifest.timings:
        lines.append("no stages executed")
        return "\n".join(lines)
    if manifest.summary.get("obstructed"):
        lines.append("verdict: Obstructed")
        worst = manifest.summary.get("worst_cycle")
        if worst:
            lines.append(
                f"  worst cycle at ({_fmt(worst['x1'])}, {_fmt(worst['x2'])}) "
                f"scale {worst['scale']}: obstruction {worst['obstruction']:.3g} "
                f"(bound {worst['error_bound']:.3g})"
            )
    for key, val in sorted(manifest.summary.items()):
        if key in ("obstructed", "worst_cycle", "ground_truth_phi", "detail"):
            continue
        lines.append(f"  {key}: {val:.6g}" if isinstance(val, float) else f"  {key}: {val}")
    for name, ok in sorted(manifest.gates.items()):
        lines.append(f"  gate {name}: {'pass' if ok else 'FAIL'}")
    lines.append(f"  total time: {manifest.timings.get('total', 0.0):.2f}s")
    lines.append(f"  files: {', '.join(f['path'] for f in manifest.files) or 'none'}")
    return "\n".join(lines)
