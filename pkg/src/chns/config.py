"""Run configuration: flat sectioned text files, schema-validated.

The format is INI-style (configparser) with one section per concern; every
key has a documented default, unknown keys or sections are rejected, and
``serialize_config(parse_config(path))`` parses back to an equal config so a
run can always be archived next to its outputs.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .boundary import Amplitude, WallData, wall_profile
from .errors import ParseError, ValidationError
from .grid import Grid, ScalarField, VectorField
from .ops import leray_project
from .potential import PotentialSpec, ViscositySpec
from .solver import MODES, SolverConfig

_MISSING = object()


@dataclass(frozen=True)
class RunConfig:
    # [grid]
    nx: int = 64
    ny: int = 64
    lx: float = 1.0
    ly: float = 1.0
    # [time]
    dt: float = 1e-3
    t_end: float = 1.0
    record_every: float = 0.01
    # [solver]
    mode: str = "direct"
    stabilization: float = 2.0
    cfl_safety: float = 0.4
    force_form: str = "mu_grad_phi"
    # [potential]
    potential_kind: str = "quartic_double_well"
    q: float = 3.0
    c1: float = 8.0
    c2: float = 4.0
    c3: float = 4.0
    c4: float = 12.0
    c4p: float = 4.0
    c5: float = 24.0
    # [viscosity]
    viscosity_kind: str = "tanh"
    nu1: float = 1.0
    nu2: float = 1.05
    nu_value: float | None = None
    nu_gap: float | None = None
    # [boundary]
    family: str = "custom_static"
    a0: float = 0.0
    a_inf: float = 0.0
    rate: float = 1.0
    omega: float = 0.0
    p_exponent: float = 1.0
    g_bottom: str = "zero"
    g_top: str = "zero"
    g_bottom_scale: float = 1.0
    g_top_scale: float = 1.0
    # [initial]
    phi_profile: str = "noise"
    phi_mean: float = 0.0
    phi_amp: float = 0.01
    phi_mode_x: int = 1
    phi_mode_y: int = 1
    seed: int = 1234
    u_profile: str = "zero"
    u_vortex_amp: float = 0.0
    # [outputs]
    directory: str = "out"
    snapshot_every: float = 0.0
    # [experiment]
    experiment: str = "single"
    epsilon: float = 0.0
    perturb: str = "boundary"
    cutoffs: tuple = (4, 8, 16, 32)
    gamma: float = 1.0
    res_factor: float = 0.1
    t_ref: float = 1.0


def _parse_cutoffs(raw: str) -> tuple:
    return tuple(int(tok) for tok in raw.replace(",", " ").split())


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _opt_float(raw: str):
    return None if raw.strip() == "" else float(raw)


# section -> key -> (config field, converter)
SCHEMA = {
    "grid": {"nx": ("nx", int), "ny": ("ny", int), "lx": ("lx", float), "ly": ("ly", float)},
    "time": {"dt": ("dt", float), "t_end": ("t_end", float),
             "record_every": ("record_every", float)},
    "solver": {"mode": ("mode", str), "stabilization": ("stabilization", float),
               "cfl_safety": ("cfl_safety", float), "force_form": ("force_form", str)},
    "potential": {"kind": ("potential_kind", str), "q": ("q", float),
                  "c1": ("c1", float), "c2": ("c2", float), "c3": ("c3", float),
                  "c4": ("c4", float), "c4p": ("c4p", float), "c5": ("c5", float)},
    "viscosity": {"kind": ("viscosity_kind", str), "nu1": ("nu1", float),
                  "nu2": ("nu2", float), "value": ("nu_value", _opt_float),
                  "nu_gap": ("nu_gap", _opt_float)},
    "boundary": {"family": ("family", str), "a0": ("a0", float),
                 "a_inf": ("a_inf", float), "rate": ("rate", float),
                 "omega": ("omega", float), "p": ("p_exponent", float),
                 "g_bottom": ("g_bottom", str), "g_top": ("g_top", str),
                 "g_bottom_scale": ("g_bottom_scale", float),
                 "g_top_scale": ("g_top_scale", float)},
    "initial": {"phi": ("phi_profile", str), "phi_mean": ("phi_mean", float),
                "phi_amp": ("phi_amp", float), "phi_mode_x": ("phi_mode_x", int),
                "phi_mode_y": ("phi_mode_y", int), "seed": ("seed", int),
                "u": ("u_profile", str), "u_vortex_amp": ("u_vortex_amp", float)},
    "outputs": {"directory": ("directory", str),
                "snapshot_every": ("snapshot_every", float)},
    "experiment": {"kind": ("experiment", str), "epsilon": ("epsilon", float),
                   "perturb": ("perturb", str), "cutoffs": ("cutoffs", _parse_cutoffs),
                   "gamma": ("gamma", float), "res_factor": ("res_factor", float),
                   "t_ref": ("t_ref", float)},
}

_FIELD_TO_SECTION_KEY = {
    fname: (section, key)
    for section, keys in SCHEMA.items()
    for key, (fname, _) in keys.items()
}


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ParseError(f"{source}: {exc}") from exc

    values = {}
    problems = []
    for section in cp.sections():
        if section not in SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                problems.append(f"unknown key [{section}] {key}")
                continue
            fname, conv = SCHEMA[section][key]
            try:
                values[fname] = conv(raw)
            except (TypeError, ValueError) as exc:
                problems.append(f"[{section}] {key} = {raw!r}: {exc}")
    if problems:
        raise ValidationError(problems)
    cfg = RunConfig(**values)
    validate_config(cfg)
    return cfg


def parse_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def serialize_config(cfg: RunConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    data = asdict(cfg)
    for section, keys in SCHEMA.items():
        cp[section] = {key: _fmt(data[fname]) for key, (fname, _) in keys.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def validate_config(cfg: RunConfig) -> None:
    """Collect every schema violation; raise ValidationError listing them all."""
    bad = []
    if cfg.nx < 4 or cfg.nx % 2:
        bad.append(f"grid nx must be even and >= 4, got {cfg.nx}")
    if cfg.ny < 4:
        bad.append(f"grid ny must be >= 4, got {cfg.ny}")
    if cfg.lx <= 0 or cfg.ly <= 0:
        bad.append("domain lengths must be positive")
    if cfg.dt <= 0:
        bad.append(f"dt must be positive, got {cfg.dt}")
    if cfg.t_end < 0:
        bad.append("t_end must be nonnegative")
    if cfg.record_every <= 0:
        bad.append("record_every must be positive")
    if cfg.mode not in MODES:
        bad.append(f"unknown solver mode {cfg.mode!r}")
    if cfg.stabilization < 0:
        bad.append("stabilization must be nonnegative")
    if cfg.force_form not in ("mu_grad_phi", "phi_grad_mu"):
        bad.append(f"unknown force form {cfg.force_form!r}")
    if not cfg.nu1 < cfg.nu2:
        bad.append(f"need nu1 < nu2, got nu1={cfg.nu1}, nu2={cfg.nu2}")
    if cfg.nu1 <= 0:
        bad.append("nu1 must be positive")
    if cfg.viscosity_kind not in ("tanh", "constant", "clamped_linear"):
        bad.append(f"unknown viscosity kind {cfg.viscosity_kind!r}")
    if cfg.viscosity_kind == "constant":
        v = cfg.nu_value if cfg.nu_value is not None else 0.5 * (cfg.nu1 + cfg.nu2)
        if not (cfg.nu1 < v < cfg.nu2):
            bad.append("constant viscosity value must lie strictly inside (nu1, nu2)")
    if cfg.family not in ("couette_ramp", "decaying_oscillation", "custom_static",
                          "power_decay"):
        bad.append(f"unknown boundary family {cfg.family!r}")
    for name in (cfg.g_bottom, cfg.g_top):
        if not (name in ("zero", "uniform") or name.startswith("single_mode")):
            bad.append(f"unknown wall profile {name!r}")
    if cfg.phi_profile not in ("noise", "constant", "mode"):
        bad.append(f"unknown phi profile {cfg.phi_profile!r}")
    if cfg.u_profile not in ("zero", "couette", "lift", "lift_vortex"):
        bad.append(f"unknown u profile {cfg.u_profile!r}")
    if cfg.experiment not in ("single", "pair", "galerkin", "longtime"):
        bad.append(f"unknown experiment kind {cfg.experiment!r}")
    if cfg.perturb not in ("boundary", "phi0"):
        bad.append(f"unknown perturbation target {cfg.perturb!r}")
    if any(n <= 0 for n in cfg.cutoffs):
        bad.append("cutoffs must be positive")
    if cfg.gamma <= 0:
        bad.append("gamma must be positive")
    if bad:
        raise ValidationError(bad)


# ---------------------------------------------------------------------------
# object builders
# ---------------------------------------------------------------------------

def build_grid(cfg: RunConfig) -> Grid:
    return Grid(cfg.nx, cfg.ny, cfg.lx, cfg.ly)


def build_potential(cfg: RunConfig) -> PotentialSpec:
    return PotentialSpec(kind=cfg.potential_kind, q=cfg.q, c1=cfg.c1, c2=cfg.c2,
                         c3=cfg.c3, c4=cfg.c4, c4p=cfg.c4p, c5=cfg.c5)


def build_viscosity(cfg: RunConfig) -> ViscositySpec:
    return ViscositySpec(nu1=cfg.nu1, nu2=cfg.nu2, kind=cfg.viscosity_kind,
                         value=cfg.nu_value, nu_gap=cfg.nu_gap)


def build_wall_data(cfg: RunConfig, grid: Grid) -> WallData:
    amp = Amplitude(cfg.family, a0=cfg.a0, a_inf=cfg.a_inf, rate=cfg.rate,
                    omega=cfg.omega, p=cfg.p_exponent)
    return WallData(grid,
                    wall_profile(grid, cfg.g_bottom, cfg.g_bottom_scale),
                    wall_profile(grid, cfg.g_top, cfg.g_top_scale),
                    amp)


def build_initial_phi(cfg: RunConfig, grid: Grid, seed: int | None = None) -> ScalarField:
    if cfg.phi_profile == "constant":
        return ScalarField(np.full((grid.nx, grid.ny), cfg.phi_mean), grid)
    if cfg.phi_profile == "mode":
        mx, my = cfg.phi_mode_x, cfg.phi_mode_y
        return ScalarField.from_function(
            grid, lambda x, y: cfg.phi_mean
            + cfg.phi_amp * np.cos(2 * np.pi * mx * x / grid.lx)
            * np.cos(np.pi * my * y / grid.ly))
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    vals = cfg.phi_amp * rng.standard_normal((grid.nx, grid.ny))
    return ScalarField(vals - vals.mean() + cfg.phi_mean, grid)


def _vortex(grid: Grid) -> VectorField:
    """Divergence-free interior roll with vanishing trace (stream function
    sin(2 pi x / lx) sin^2(pi y / ly))."""
    two_pi = 2 * np.pi / grid.lx
    pi_ly = np.pi / grid.ly

    def ux(x, y):  # d(psi)/dy
        return 2 * pi_ly * np.sin(two_pi * x) * np.sin(pi_ly * y) * np.cos(pi_ly * y)

    def uy(x, y):  # -d(psi)/dx
        return -two_pi * np.cos(two_pi * x) * np.sin(pi_ly * y) ** 2

    v, _ = leray_project(VectorField.from_components(grid, ux, uy))
    return v


def build_initial_u(cfg: RunConfig, grid: Grid, data: WallData) -> VectorField:
    if cfg.u_profile == "zero":
        return VectorField.zeros(grid)
    if cfg.u_profile == "couette":
        return VectorField(np.tile(grid.yc / grid.ly, (grid.nx, 1)),
                           np.zeros((grid.nx, grid.ny + 1)), grid)
    from .lifting import EllipticLift
    lift = EllipticLift(grid, cfg.nu1, data)
    u0, _ = lift.at(0.0)
    if cfg.u_profile == "lift_vortex" and cfg.u_vortex_amp != 0.0:
        u0 = u0 + cfg.u_vortex_amp * _vortex(grid)
    return u0


def build_solver_config(cfg: RunConfig) -> SolverConfig:
    return SolverConfig(dt=cfg.dt, t_end=cfg.t_end, mode=cfg.mode,
                        stabilization=cfg.stabilization, cfl_safety=cfg.cfl_safety,
                        record_every=cfg.record_every, force_form=cfg.force_form,
                        potential=build_potential(cfg), viscosity=build_viscosity(cfg))


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    new = replace(cfg, **kw)
    validate_config(new)
    return new
