"""Experiment configuration: YAML round-trip, validation, object factories."""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .circle import CircleDiffeo
from .cocycle import (
    ConstantGenerator,
    DiffeoFamily,
    PerturbedRotationGenerator,
    RotationFieldGenerator,
    TrigPoly2,
    synthesize_cohomologous,
)
from .errors import ConfigInvalid
from .torus import AnosovBase

_KNOWN_FAMILIES = ("constant", "rotation_field", "perturbed_rotation", "conjugated")


@dataclass
class ExperimentConfig:
    """Structured run description; round-trips through YAML byte-identically."""

    base_matrix: list = field(default_factory=lambda: [[2, 1], [1, 1]])
    base_r_loc: float = 0.2
    fiber_grid_size: int = 256
    cocycle: dict = field(default_factory=lambda: {"family": "constant", "coeffs": {}, "q": 2.0})
    cocycle_b: dict | None = None
    phi: dict | None = None
    tolerance_holonomy: float = 1e-8
    tolerance_inversion: float = 1e-10
    truncation_max_n: int = 200
    averaging_n: int = 2000
    base_resolution: int = 8
    n_samples: int = 20
    leaf_param: float = 0.05
    cycle_scales: list = field(default_factory=lambda: [0.02, 0.05, 0.1])
    seed: int = 0

    def to_dict(self):
        return {
            "base": {"matrix": self.base_matrix, "r_loc": self.base_r_loc},
            "fiber": {"grid_size": self.fiber_grid_size},
            "cocycle": self.cocycle,
            "cocycle_b": self.cocycle_b,
            "phi": self.phi,
            "tolerances": {"holonomy": self.tolerance_holonomy,
                           "inversion": self.tolerance_inversion},
            "truncation": {"max_n": self.truncation_max_n},
            "averaging": {"N": self.averaging_n},
            "grid": {"base_resolution": self.base_resolution},
            "sampling": {"n_samples": self.n_samples, "leaf_param": self.leaf_param,
                         "cycle_scales": self.cycle_scales},
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigInvalid("<root>", "config must be a mapping")

        def get(section, key, default, kind=None):
            sec = d.get(section, {})
            if sec is None:
                sec = {}
            if not isinstance(sec, dict):
                raise ConfigInvalid(section, "must be a mapping")
            val = sec.get(key, default)
            if kind is not None and val is not None:
                try:
                    val = kind(val)
                except (TypeError, ValueError) as exc:
                    raise ConfigInvalid(f"{section}.{key}", str(exc)) from exc
            return val

        cfg = cls(
            base_matrix=get("base", "matrix", [[2, 1], [1, 1]]),
            base_r_loc=get("base", "r_loc", 0.2, float),
            fiber_grid_size=get("fiber", "grid_size", 256, int),
            cocycle=d.get("cocycle") or {"family": "constant", "coeffs": {}, "q": 2.0},
            cocycle_b=d.get("cocycle_b"),
            phi=d.get("phi"),
            tolerance_holonomy=get("tolerances", "holonomy", 1e-8, float),
            tolerance_inversion=get("tolerances", "inversion", 1e-10, float),
            truncation_max_n=get("truncation", "max_n", 200, int),
            averaging_n=get("averaging", "N", 2000, int),
            base_resolution=get("grid", "base_resolution", 8, int),
            n_samples=get("sampling", "n_samples", 20, int),
            leaf_param=get("sampling", "leaf_param", 0.05, float),
            cycle_scales=get("sampling", "cycle_scales", [0.02, 0.05, 0.1]),
            seed=int(d.get("seed", 0)),
        )
        cfg.validate()
        return cfg

    def validate(self):
        if self.fiber_grid_size < 8 or self.fiber_grid_size & (self.fiber_grid_size - 1):
            raise ConfigInvalid("fiber.grid_size", "must be a power of two >= 8")
        if not (0 < self.base_r_loc <= 0.5):
            raise ConfigInvalid("base.r_loc", "must lie in (0, 0.5]")
        for which, spec in (("cocycle", self.cocycle), ("cocycle_b", self.cocycle_b)):
            if spec is None:
                continue
            fam = spec.get("family")
            if fam not in _KNOWN_FAMILIES:
                raise ConfigInvalid(f"{which}.family",
                                    f"{fam!r} not one of {_KNOWN_FAMILIES}")
        if self.averaging_n < 1:
            raise ConfigInvalid("averaging.N", "must be >= 1")
        if self.base_resolution < 1:
            raise ConfigInvalid("grid.base_resolution", "must be >= 1")

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=False)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigInvalid("<file>", str(exc)) from exc
    except yaml.YAMLError as exc:
        raise ConfigInvalid("<yaml>", str(exc)) from exc
    return ExperimentConfig.from_dict(data or {})


def save_config(cfg: ExperimentConfig, path):
    with open(path, "w") as fh:
        fh.write(cfg.dumps())


# ---------------------------------------------------------------------------
# factories

def build_base(cfg: ExperimentConfig) -> AnosovBase:
    try:
        return AnosovBase(cfg.base_matrix, cfg.base_r_loc)
    except ValueError as exc:
        raise ConfigInvalid("base.matrix", str(exc)) from exc


def _trig_poly(spec, where):
    """spec: number, or list of [k1, k2, cos_amp, sin_amp] rows."""
    if spec is None:
        return TrigPoly2.constant(0.0)
    if isinstance(spec, (int, float)):
        return TrigPoly2.constant(float(spec))
    try:
        return TrigPoly2(spec)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(where, f"bad trig-polynomial coefficients: {exc}") from exc


def build_phi(cfg: ExperimentConfig) -> DiffeoFamily:
    spec = cfg.phi or {}
    coeffs = spec.get("coeffs", spec)
    rotation = _trig_poly(coeffs.get("rotation"), "phi.coeffs.rotation")
    waves = []
    for idx, row in enumerate(coeffs.get("waves", []) or []):
        where = f"phi.coeffs.waves[{idx}]"
        try:
            m, c_spec, psi_spec = row
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(where, "expected [m, amp_coeffs, phase_coeffs]") from exc
        waves.append((int(m), _trig_poly(c_spec, where), _trig_poly(psi_spec, where)))
    try:
        return DiffeoFamily(rotation, waves)
    except ValueError as exc:
        raise ConfigInvalid("phi.coeffs.waves", str(exc)) from exc


def build_generator(cfg: ExperimentConfig, spec=None, which="cocycle"):
    spec = spec if spec is not None else cfg.cocycle
    if spec is None:
        raise ConfigInvalid(which, "missing cocycle description")
    base = build_base(cfg)
    fam = spec.get("family")
    coeffs = spec.get("coeffs", {}) or {}
    q = float(spec.get("q", 2.0))
    n = cfg.fiber_grid_size
    if fam == "constant":
        rot = float(coeffs.get("rotation", 0.0))
        return ConstantGenerator(base, CircleDiffeo.rotation(rot, n), q=q, grid_size=n)
    if fam == "rotation_field":
        alpha = _trig_poly(coeffs.get("alpha"), f"{which}.coeffs.alpha")
        return RotationFieldGenerator(base, alpha, q=q, grid_size=n)
    if fam == "perturbed_rotation":
        return PerturbedRotationGenerator(
            base,
            _trig_poly(coeffs.get("alpha"), f"{which}.coeffs.alpha"),
            _trig_poly(coeffs.get("eps"), f"{which}.coeffs.eps"),
            _trig_poly(coeffs.get("phase"), f"{which}.coeffs.phase"),
            q=q, grid_size=n,
        )
    if fam == "conjugated":
        inner_spec = coeffs.get("inner")
        if inner_spec is None:
            raise ConfigInvalid(f"{which}.coeffs.inner", "conjugated family needs an inner cocycle")
        inner = build_generator(cfg, spec=inner_spec, which=f"{which}.coeffs.inner")
        phi_cfg = ExperimentConfig(**{**cfg.__dict__, "phi": coeffs.get("phi") or cfg.phi})
        return synthesize_cohomologous(inner, build_phi(phi_cfg))
    raise ConfigInvalid(f"{which}.family", f"unknown family {fam!r}")
