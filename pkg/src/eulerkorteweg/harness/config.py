"""INI run configuration.

Example::

    [scenario]
    name = ktest
    dx = 0.00025
    end_time = 1.0
    snapshot_times = 0.5, 1.0

    [solver]
    flux = rusanov
    temporal = rk2
    reconstruction = muscl
    dt = 120dx2

``dt`` is a number, ``<c>dx2`` for ``c dx^2`` or ``auto-entropy-cfl``.
Floats are written with ``repr`` so a written file parses back to equal values.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import asdict, dataclass, field, fields, replace

from ..ek_solver import AUTO_DT, FORMULATIONS, RECONSTRUCTIONS, SolverConfig
from ..hamiltonian_solver import HAM_STEPPERS
from ..hyperbolic_flux import FLUX_KINDS, LIMITERS, FluxSpec

SCENARIOS = ("ktest", "liu_gollub")

# short names accepted on the command line and in files
FLUX_ALIASES = {
    "lf": "lax_friedrichs",
    "mlf": "modified_lf",
    "rusanov": "rusanov",
    "hll": "hll",
    "econs": "entropy_conservative",
}
TEMPORAL_ALIASES = {"fe": "FE", "be": "BE", "rk2": "RK2", "rk4": "RK4"}

_DX2 = re.compile(r"^\s*([0-9.eE+-]+)\s*\*?\s*dx\^?2\s*$")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass
class ScenarioSection:
    name: str = "ktest"
    dx: float = 2.5e-4
    end_time: float = 1.0
    snapshot_times: tuple = ()


@dataclass
class SolverSection:
    flux: str = "rusanov"
    extra_viscosity: float = 0.0
    quadrature_order: int = 8
    temporal: str = "RK2"
    reconstruction: str = "muscl"
    limiter: str = "minmod"
    dt: str = "120dx2"
    newton_tol: float = 1e-10
    newton_max_iter: int = 20
    enforce_w: bool = False
    formulation: str = "extended"
    entropy_check: bool = False


@dataclass
class LiuGollubSection:
    reynolds: float = 29.0
    nu: float = 6.28e-6
    g: float = 9.8
    theta_deg: float = 6.4
    rho: float = 1134.0
    sigma: float = 0.067
    wavelength: float = 0.01
    inlet_freq: float = 1.5
    inlet_amp: float = 0.03
    domain_length: float = 2.0
    velocity_scale: str = "quoted"  # "quoted" or "formula"


@dataclass
class HamiltonianSection:
    method: str = "BE"
    dt: float = 1e-4
    newton_tol: float = 1e-10
    newton_max_iter: int = 20


@dataclass
class StabilitySection:
    rho_bar: float = 1.0
    u_bar: float = 0.5
    c_bar: float = 1.0
    sigma_bar: float = 1.0
    scheme: str = "rusanov"
    q: float = -1.0  # negative: the scheme's own viscosity
    temporal: str = "FE"
    theta: float = 0.0
    dx: float = 0.01
    dt: float = 1e-5
    n_xi: int = 2049


@dataclass
class OutputSection:
    dir: str = "out"
    seed: int = 0


@dataclass
class RunConfig:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    solver: SolverSection = field(default_factory=SolverSection)
    liu_gollub: LiuGollubSection = field(default_factory=LiuGollubSection)
    hamiltonian: HamiltonianSection = field(default_factory=HamiltonianSection)
    stability: StabilitySection = field(default_factory=StabilitySection)
    output: OutputSection = field(default_factory=OutputSection)

    def validate(self) -> "RunConfig":
        sc, so = self.scenario, self.solver
        if sc.name not in SCENARIOS:
            raise ConfigError(f"unknown scenario {sc.name!r}; expected one of {SCENARIOS}")
        if not sc.dx > 0 or not sc.end_time > 0:
            raise ConfigError("dx and end_time must be positive")
        if any(t < 0 or t > sc.end_time for t in sc.snapshot_times):
            raise ConfigError("snapshot times must lie in [0, end_time]")
        if so.flux not in FLUX_KINDS:
            raise ConfigError(f"unknown flux {so.flux!r}")
        if so.limiter not in LIMITERS or so.reconstruction not in RECONSTRUCTIONS:
            raise ConfigError("bad limiter or reconstruction")
        if so.formulation not in FORMULATIONS:
            raise ConfigError(f"unknown formulation {so.formulation!r}")
        if self.hamiltonian.method not in HAM_STEPPERS:
            raise ConfigError(f"unknown Hamiltonian method {self.hamiltonian.method!r}")
        if self.liu_gollub.velocity_scale not in ("quoted", "formula"):
            raise ConfigError("velocity_scale must be 'quoted' or 'formula'")
        parse_dt(so.dt, sc.dx)
        try:
            self.solver_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def solver_config(self, dx=None, sources=None) -> SolverConfig:
        so = self.solver
        kw = {} if sources is None else {"sources": sources}
        return SolverConfig(
            flux=FluxSpec(so.flux, so.extra_viscosity, so.quadrature_order),
            temporal=so.temporal,
            dt=parse_dt(so.dt, self.scenario.dx if dx is None else dx),
            reconstruction=so.reconstruction,
            limiter=so.limiter,
            newton_tol=so.newton_tol,
            newton_max_iter=so.newton_max_iter,
            enforce_w_relation=so.enforce_w,
            formulation=so.formulation,
            **kw,
        )


def normalise_flux(name: str) -> str:
    return FLUX_ALIASES.get(name.lower(), name)


def normalise_temporal(name: str) -> str:
    return TEMPORAL_ALIASES.get(name.lower(), name.upper())


def parse_dt(text, dx):
    """Number, ``<c>dx2`` (c dx^2) or the automatic entropy-CFL marker."""
    if isinstance(text, (int, float)):
        value = float(text)
    else:
        text = str(text).strip()
        if text == AUTO_DT:
            return AUTO_DT
        m = _DX2.match(text)
        try:
            value = float(m.group(1)) * dx * dx if m else float(text)
        except ValueError:
            raise ConfigError(f"cannot parse dt {text!r}") from None
    if not value > 0:
        raise ConfigError("dt must be positive")
    return value


def _parse_value(kind, text):
    if kind is bool:
        low = text.strip().lower()
        if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
            raise ConfigError(f"not a boolean: {text!r}")
        return low in ("true", "yes", "1", "on")
    if kind is tuple:
        return tuple(float(t) for t in text.replace(",", " ").split())
    return kind(text.strip())


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def _field_type(default):
    return type(default) if not isinstance(default, str) else str


def parse_config(text: str) -> RunConfig:
    """Parse INI text; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    cfg = RunConfig()
    known = {f.name: f for f in fields(RunConfig)}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]")
        current = getattr(cfg, section)
        types = {f.name: _field_type(getattr(current, f.name)) for f in fields(current)}
        updates = {}
        for key, raw in parser.items(section):
            if key not in types:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                updates[key] = _parse_value(types[key], raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from None
        setattr(cfg, section, replace(current, **updates))
    cfg.solver = replace(cfg.solver, flux=normalise_flux(cfg.solver.flux),
                         temporal=normalise_temporal(cfg.solver.temporal))
    return cfg.validate()


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for name, section in asdict(cfg).items():
        lines.append(f"[{name}]")
        for key, value in section.items():
            current = getattr(getattr(cfg, name), key)
            lines.append(f"{key} = {_format_value(current)}")
        lines.append("")
    return "\n".join(lines)
