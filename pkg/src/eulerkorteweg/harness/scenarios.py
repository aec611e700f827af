"""Scenario builders: the periodic capillary bump, the falling film, a smooth test wave."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..ek_solver import SourceSpec
from ..model import (
    BC_INLET_OUTLET,
    BC_PERIODIC,
    ConservedState,
    FluidModel,
    liu_gollub_model,
    shallow_water_model,
)

G_EARTH = 9.8
# aqueous glycerin solution of the film experiment
FLUID_DENSITY = 1134.0  # kg/m^3
SURFACE_TENSION = 0.067  # N/m
KTEST_KAPPA = SURFACE_TENSION / FLUID_DENSITY
KTEST_LENGTH = 0.8
KTEST_H_N = 1e-3
KTEST_DX = 2.5e-4
KTEST_DT_FACTOR = 120.0

# quoted values for the film experiment
QUOTED_U_N = 9.49e-2
QUOTED_NONDIM = {"h_N": 1.28e-3, "u_N": QUOTED_U_N, "T_N": 0.105, "froude_sq": 0.723, "weber": 1.52}


@dataclass
class Scenario:
    name: str
    model: FluidModel
    initial: ConservedState
    end_time: float
    snapshot_times: tuple = ()
    sources: SourceSpec = field(default_factory=SourceSpec)
    dt: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.snapshot_times = tuple(sorted(float(t) for t in self.snapshot_times))
        if any(t < 0 or t > self.end_time for t in self.snapshot_times):
            raise ValueError("snapshot times must lie in [0, end_time]")

    @property
    def dx(self) -> float:
        return self.initial.dx


def ktest_height(x, h_n=KTEST_H_N):
    """h_N (1 + 0.3 exp(-2000 (x - 0.4)^2)), x in metres."""
    return h_n * (1.0 + 0.3 * np.exp(-2000.0 * (np.asarray(x) - 0.4) ** 2))


def ktest_scenario(dx=KTEST_DX, dt_rule=KTEST_DT_FACTOR, end_time=1.0, snapshot_times=()) -> Scenario:
    """Flat-bottom frictionless periodic bump in SI units.

    ``dt_rule`` is either a factor ``c`` giving ``dt = c dx^2`` or ``None`` to let
    the solver choose.
    """
    if not dx > 0:
        raise ValueError("dx must be positive")
    n = int(round(KTEST_LENGTH / dx))
    model = shallow_water_model(G_EARTH, KTEST_KAPPA)
    x = np.arange(n) * (KTEST_LENGTH / n)
    state = ConservedState.from_profile(model, 0.0, KTEST_LENGTH, ktest_height(x), bc=BC_PERIODIC)
    dt = None if dt_rule is None else float(dt_rule) * state.dx**2
    return Scenario("ktest", model, state, end_time, snapshot_times, dt=dt)


@dataclass(frozen=True)
class NondimensionalSet:
    h_N: float
    u_N: float
    T_N: float
    froude_sq: float
    weber: float
    epsilon: float
    reynolds: float
    wavelength: float

    def __post_init__(self):
        vals = (self.h_N, self.u_N, self.T_N, self.froude_sq, self.weber, self.epsilon)
        if not all(v > 0 for v in vals):
            raise ValueError("nondimensional numbers must be positive")

    @property
    def kappa(self) -> float:
        """Capillarity eps/We of the nondimensional model."""
        return self.epsilon / self.weber


@dataclass(frozen=True)
class NondimReport:
    """Formula values, the values obtained with the quoted u_N, and their ratio."""

    formula: NondimensionalSet
    quoted_u: Optional[NondimensionalSet]
    u_ratio: Optional[float]


def _set_for_velocity(re, h_n, u_n, theta, rho, sigma, wavelength):
    return NondimensionalSet(
        h_N=h_n,
        u_N=u_n,
        T_N=wavelength / u_n,
        froude_sq=2.0 / 9.0 * re * math.tan(theta),
        weber=rho * wavelength * u_n**2 / sigma,
        epsilon=h_n / wavelength,
        reynolds=re,
        wavelength=wavelength,
    )


def liu_gollub_nondimensionalize(re, nu, g=G_EARTH, theta_deg=6.4, rho=FLUID_DENSITY,
                                 sigma=SURFACE_TENSION, wavelength=0.01, quoted_u_n=QUOTED_U_N) -> NondimReport:
    """h_N = (2 Re nu^2/(g sin theta))^(1/3), u_N = nu Re/h_N, F^2 = 2 Re tan(theta)/9, ...

    The quoted u_N of the experiment is not the formula value (the ratio is about
    2/3, the Nusselt mean velocity); both sets are returned.
    """
    if not all(v > 0 for v in (re, nu, g, theta_deg, rho, sigma, wavelength)):
        raise ValueError("all inputs must be positive")
    theta = math.radians(theta_deg)
    h_n = (2.0 * re * nu**2 / (g * math.sin(theta))) ** (1.0 / 3.0)
    u_n = nu * re / h_n
    formula = _set_for_velocity(re, h_n, u_n, theta, rho, sigma, wavelength)
    if quoted_u_n is None:
        return NondimReport(formula, None, None)
    quoted = _set_for_velocity(re, h_n, quoted_u_n, theta, rho, sigma, wavelength)
    return NondimReport(formula, quoted, quoted_u_n / u_n)


def liu_gollub_scenario(nondim: NondimensionalSet, inlet_freq=1.5, domain_length=2.0, dx=0.05,
                        end_time=2000.0, inlet_amp=0.03, snapshot_times=()) -> Scenario:
    """Falling film with inlet forcing; lengths scaled by the wavelength, times by T_N.

    ``domain_length`` is in metres, ``dx`` and ``end_time`` are nondimensional.
    """
    length = domain_length / nondim.wavelength
    n = int(round(length / dx))
    model = liu_gollub_model(nondim.froude_sq, nondim.kappa)
    ones = np.ones(n)
    state = ConservedState(0.0, length, ones.copy(), ones.copy(), np.zeros(n), bc=BC_INLET_OUTLET)
    sources = SourceSpec(
        kind="liu_gollub",
        epsilon=nondim.epsilon,
        reynolds=nondim.reynolds,
        weber=nondim.weber,
        froude_sq=nondim.froude_sq,
        inlet_freq=inlet_freq,
        inlet_amp=inlet_amp,
        time_scale=nondim.T_N,
    )
    meta = {"nondim": nondim, "forcing_period": 1.0 / (inlet_freq * nondim.T_N)}
    return Scenario("liu_gollub", model, state, end_time, snapshot_times, sources=sources, meta=meta)


def smooth_wave_scenario(n_cells, g=1.0, kappa=1e-3, amplitude=0.1, end_time=0.1) -> Scenario:
    """h = 1 + a sin(2 pi x), u = a sin(2 pi x)/2 on the periodic unit interval."""
    model = shallow_water_model(g, kappa)
    x = np.arange(n_cells) / n_cells
    h = 1.0 + amplitude * np.sin(2 * np.pi * x)
    u = 0.5 * amplitude * np.sin(2 * np.pi * x)
    state = ConservedState.from_profile(model, 0.0, 1.0, h, u)
    return Scenario("smooth_wave", model, state, end_time)
