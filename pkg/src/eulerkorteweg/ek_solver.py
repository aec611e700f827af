"""Time integration of the extended Euler-Korteweg system.

The semi-discrete scheme on grid values ``v_j = (rho, rho u, rho w)_j`` is

    dv_j/dt = -(f_{j+1/2} - f_{j-1/2})/dx
              + (B_{j+1/2} (z_{j+1} - z_j) - B_{j-1/2} (z_j - z_{j-1}))/dx^2 + S_j

with ``B`` the skew capillary matrix (``mu`` on the (u, w) block) and ``S`` the
optional thin-film sources.  Both boundary kinds work on a row padded with two
ghost cells per side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InsufficientViscosityError, NewtonError, PositivityError
from .hyperbolic_flux import (
    FluxSpec,
    entropy_conservative_matrix,
    gauss_unit,
    interface_flux,
    mean_dv_dz,
    muscl_reconstruct,
    viscosity_coefficient,
)
from .model import (
    BC_INLET_OUTLET,
    BC_PERIODIC,
    ConservedState,
    FluidModel,
    dg_dz,
    dv_dz,
    entropy_hessian,
    entropy_variables,
    mu,
    total_entropy,
    w_from_density,
)
from .newton import BandedJacobian, newton_solve

N_GHOST = 2
TEMPORAL_KINDS = ("FE", "BE", "RK2", "RK4")
RECONSTRUCTIONS = ("first_order", "muscl")
FORMULATIONS = ("extended", "original")
AUTO_DT = "auto-entropy-cfl"


@dataclass(frozen=True)
class SourceSpec:
    """Thin-film source terms and inlet forcing (nondimensional).

    ``time_scale`` is T_N, so the inlet height is
    ``1 + inlet_amp sin(2 pi inlet_freq time_scale t)``.
    """

    kind: str = "none"
    epsilon: float = 0.0
    reynolds: float = 0.0
    weber: float = 0.0
    froude_sq: float = 0.0
    inlet_freq: float = 0.0
    inlet_amp: float = 0.0
    time_scale: float = 1.0
    inlet_flux: float = 1.0

    def __post_init__(self):
        if self.kind not in ("none", "liu_gollub"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "liu_gollub":
            vals = (self.epsilon, self.reynolds, self.weber, self.froude_sq,
                    self.inlet_freq, self.inlet_amp, self.time_scale)
            if not all(v > 0 for v in vals):
                raise ValueError("Liu-Gollub sources need all parameters positive")

    @property
    def friction_coeff(self) -> float:
        return 2.0 / (9.0 * self.epsilon * self.reynolds)

    @property
    def viscous_coeff(self) -> float:
        return 6.0 * self.epsilon / self.reynolds

    def inlet_height(self, t: float) -> float:
        return 1.0 + self.inlet_amp * math.sin(2 * math.pi * self.inlet_freq * self.time_scale * t)


@dataclass(frozen=True)
class SolverConfig:
    flux: FluxSpec = field(default_factory=FluxSpec)
    temporal: str = "FE"
    dt: float | str = AUTO_DT
    reconstruction: str = "first_order"
    limiter: str = "minmod"
    newton_tol: float = 1e-10
    newton_max_iter: int = 20
    enforce_w_relation: bool = False
    sources: SourceSpec = field(default_factory=SourceSpec)
    capillarity: bool = True
    formulation: str = "extended"

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if self.temporal not in TEMPORAL_KINDS:
            raise ValueError(f"unknown temporal scheme {self.temporal!r}")
        if self.reconstruction not in RECONSTRUCTIONS:
            raise ValueError(f"unknown reconstruction {self.reconstruction!r}")
        if self.temporal == "RK2" and self.reconstruction != "muscl":
            raise ValueError("RK2 is only used with MUSCL reconstruction")
        if not self.newton_tol > 0 or self.newton_max_iter < 1:
            raise ValueError("newton_tol must be positive and newton_max_iter >= 1")
        if isinstance(self.dt, str):
            if self.dt != AUTO_DT:
                raise ValueError(f"dt must be a number or {AUTO_DT!r}")
        elif not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def fixed_dt(self) -> Optional[float]:
        return None if isinstance(self.dt, str) else float(self.dt)


@dataclass
class StepReport:
    dt_used: float
    entropy_before: float
    entropy_after: float
    newton_iters: int = 0
    max_residual: float = 0.0


# ---------------------------------------------------------------- boundaries

def apply_boundary(v, bc=BC_PERIODIC, sources: SourceSpec | None = None, t=0.0):
    """Return ``v`` padded with two ghost cells on each side, shape ``(3, N+4)``.

    Inlet-outlet: the first ghost carries the forced inlet height and flux, the
    second mirrors cell 0 so the centred height gradient at the inlet vanishes
    (its ``rho w`` is mirrored with a sign flip); outlet ghosts copy the last cell.
    """
    v = np.asarray(v)
    if bc == BC_PERIODIC:
        return np.concatenate([v[:, -N_GHOST:], v, v[:, :N_GHOST]], axis=1)
    if bc != BC_INLET_OUTLET:
        raise ValueError(f"unknown boundary tag {bc!r}")
    src = sources or SourceSpec()
    h_in = src.inlet_height(t) if src.kind != "none" else v[0, 0]
    q_in = src.inlet_flux if src.kind != "none" else v[1, 0]
    g1 = np.array([h_in, q_in, 0.0], dtype=v.dtype)
    g2 = np.array([v[0, 0], q_in, -v[2, 0]], dtype=v.dtype)
    out = np.empty((3, v.shape[1] + 2 * N_GHOST), dtype=v.dtype)
    out[:, 0] = g2
    out[:, 1] = g1
    out[:, N_GHOST:-N_GHOST] = v
    out[:, -2] = v[:, -1]
    out[:, -1] = v[:, -1]
    return out


# ---------------------------------------------------------------- right-hand side

def _interface_mu(model, rho_padded):
    return mu(model, 0.5 * (rho_padded[:-1] + rho_padded[1:]))


def _capillary_from_padded(model, vp, dx):
    # interfaces between consecutive padded cells 1..N+2 (N+1 of them)
    inner = vp[:, 1:-1]
    rho, u, w = inner[0], inner[1] / inner[0], inner[2] / inner[0]
    m = _interface_mu(model, rho)
    du, dw = np.diff(u), np.diff(w)
    out = np.zeros((3, inner.shape[1] - 2))
    out[1] = (m[1:] * dw[1:] - m[:-1] * dw[:-1]) / dx**2
    out[2] = -(m[1:] * du[1:] - m[:-1] * du[:-1]) / dx**2
    return out


def capillary_rhs(model: FluidModel, state: ConservedState, dx=None):
    """(B_{j+1/2}(z_{j+1} - z_j) - B_{j-1/2}(z_j - z_{j-1}))/dx^2 per cell."""
    dx = state.dx if dx is None else dx
    vp = apply_boundary(state.as_array(), state.bc)
    return _capillary_from_padded(model, vp, dx)


def _fluxes_from_padded(model, vp, config: SolverConfig, dx, dt):
    if config.reconstruction == "muscl":
        v_l, v_r, _ = muscl_reconstruct(vp, config.limiter)
    else:
        v_l, v_r = vp[:, 1:-2], vp[:, 2:-1]
    return interface_flux(model, config.flux, v_l, v_r, dx, dt)


def _source_terms(vp, config: SolverConfig, dx):
    src = config.sources
    out = np.zeros((3, vp.shape[1] - 2 * N_GHOST))
    if src.kind == "liu_gollub":
        h = vp[0, N_GHOST:-N_GHOST]
        q = vp[1]
        u = q[N_GHOST:-N_GHOST] / h
        out[1] = src.friction_coeff * (h - u / h)
        out[1] += src.viscous_coeff * (q[3:-1] - 2 * q[2:-2] + q[1:-3]) / dx**2
    return out


def _original_capillary(model, vp, dx):
    """kappa h h_xxx on the momentum row, centred five-point third derivative."""
    kappa = model.constant_kappa()
    if kappa is None:
        raise ValueError("the original formulation needs constant capillarity")
    h = vp[0]
    d3 = (h[4:] - 2 * h[3:-1] + 2 * h[1:-3] - h[:-4]) / (2 * dx**3)
    out = np.zeros((3, d3.size))
    out[1] = kappa * h[2:-2] * d3
    return out


def _rhs_array(model, v, config: SolverConfig, dx, bc, t, dt):
    vp = apply_boundary(v, bc, config.sources, t)
    if np.any(~(vp[0] > 0)):
        raise DomainError("non-positive density")
    original = config.formulation == "original"
    if original:
        vp = vp.copy()
        vp[2] = 0.0  # w plays no part in the original system
    f = _fluxes_from_padded(model, vp, config, dx, dt)
    out = -(f[:, 1:] - f[:, :-1]) / dx
    if original:
        out[2] = 0.0
        if config.capillarity:
            out += _original_capillary(model, vp, dx)
    elif config.capillarity:
        out += _capillary_from_padded(model, vp, dx)
    if config.sources.kind != "none":
        out += _source_terms(vp, config, dx)
    return out


def semi_discrete_rhs(model: FluidModel, state: ConservedState, config: SolverConfig, t=None, dt=None):
    """Right-hand side per cell, shape ``(3, N)``.  ``dt`` feeds the LF viscosity."""
    t = state.time if t is None else t
    dt = config.fixed_dt if dt is None else dt
    return _rhs_array(model, state.as_array(), config, state.dx, state.bc, t, dt)


def entropy_flux_numerical(model: FluidModel, state: ConservedState, config: SolverConfig, dt=None):
    """Full interface entropy flux G0 - mu (u_j w_{j+1} - u_{j+1} w_j)/dx (periodic grids).

    Only defined for the viscosity-form fluxes; returns N+1 interface values.
    """
    from .hyperbolic_flux import numerical_entropy_flux_G0

    dt = config.fixed_dt if dt is None else dt
    vp = apply_boundary(state.as_array(), state.bc, config.sources, state.time)
    v_l, v_r = vp[:, 1:-2], vp[:, 2:-1]
    f = interface_flux(model, config.flux, v_l, v_r, state.dx, dt)
    g0 = numerical_entropy_flux_G0(model, entropy_variables(model, v_l), entropy_variables(model, v_r), f)
    u_l, w_l = v_l[1] / v_l[0], v_l[2] / v_l[0]
    u_r, w_r = v_r[1] / v_r[0], v_r[2] / v_r[0]
    m = mu(model, 0.5 * (v_l[0] + v_r[0])) if config.capillarity else 0.0
    return g0 - m * (u_l * w_r - u_r * w_l) / state.dx


# ---------------------------------------------------------------- steppers

def _check_positive(v, t):
    bad = np.flatnonzero(~(v[0] > 0))
    if bad.size:
        raise PositivityError(bad[0], v[0, bad[0]], t)


def _resolve_dt(config, dt):
    dt = config.fixed_dt if dt is None else dt
    if dt is None or not dt > 0:
        raise ValueError("a positive dt is required (config dt is automatic)")
    return float(dt)


def _finish(model, state, v_new, dt, before, iters=0, res=0.0):
    t_new = state.time + dt
    _check_positive(v_new, t_new)
    new = state.with_array(v_new, time=t_new)
    return new, StepReport(dt, before, total_entropy(model, new), iters, res)


def step_fe(model: FluidModel, state: ConservedState, config: SolverConfig, dt=None):
    """Forward Euler: v + dt rhs(v)."""
    dt = _resolve_dt(config, dt)
    v = state.as_array()
    v_new = v + dt * _rhs_array(model, v, config, state.dx, state.bc, state.time, dt)
    return _finish(model, state, v_new, dt, total_entropy(model, state))


def step_be(model: FluidModel, state: ConservedState, config: SolverConfig, dt=None, jacobian=None):
    """Backward Euler by Newton on v - v^n - dt rhs(v) = 0."""
    dt = _resolve_dt(config, dt)
    v0 = state.as_array()
    t1 = state.time + dt
    jac = jacobian or BandedJacobian(3, state.n_cells, band=2)

    def residual(v):
        try:
            return v - v0 - dt * _rhs_array(model, v, config, state.dx, state.bc, t1, dt)
        except DomainError:
            return np.full_like(v, np.nan)

    try:
        sol = newton_solve(residual, v0, jac, config.newton_tol, config.newton_max_iter)
    except NewtonError:
        raise
    return _finish(model, state, sol.x, dt, total_entropy(model, state), sol.iterations, sol.residual)


def step_rk2(model: FluidModel, state: ConservedState, config: SolverConfig, dt=None):
    """Heun's method with MUSCL fluxes."""
    if config.reconstruction != "muscl":
        raise ValueError("RK2 needs MUSCL reconstruction")
    dt = _resolve_dt(config, dt)
    v = state.as_array()
    t, dx, bc = state.time, state.dx, state.bc
    v1 = v + dt * _rhs_array(model, v, config, dx, bc, t, dt)
    _check_positive(v1, t + dt)
    v2 = v1 + dt * _rhs_array(model, v1, config, dx, bc, t + dt, dt)
    return _finish(model, state, 0.5 * (v + v2), dt, total_entropy(model, state))


def step_rk4(model: FluidModel, state: ConservedState, config: SolverConfig, dt=None):
    """Classical fourth-order Runge-Kutta; a reference integrator for the semi-discrete scheme."""
    dt = _resolve_dt(config, dt)
    v = state.as_array()
    t, dx, bc = state.time, state.dx, state.bc

    def rhs(x, s):
        return _rhs_array(model, x, config, dx, bc, s, dt)

    k1 = rhs(v, t)
    k2 = rhs(v + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = rhs(v + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = rhs(v + dt * k3, t + dt)
    return _finish(model, state, v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4), dt, total_entropy(model, state))


STEPPERS: dict[str, Callable] = {"FE": step_fe, "BE": step_be, "RK2": step_rk2, "RK4": step_rk4}


def enforce_w_relation(model: FluidModel, state: ConservedState) -> ConservedState:
    """Reset rho w from the density.

    Constant capillarity uses ``(2/3) sqrt(kappa) (h_{j+1}^{3/2} - h_{j-1}^{3/2})/(2 dx)``;
    otherwise ``rho`` times :func:`w_from_density`.
    """
    rho = state.rho
    kappa = model.constant_kappa()
    if kappa is not None:
        hp = apply_boundary(state.as_array(), state.bc)[0] ** 1.5
        if state.bc == BC_INLET_OUTLET:
            grad = np.gradient(rho**1.5, state.dx, edge_order=2)
        else:
            grad = (hp[N_GHOST + 1:-N_GHOST + 1] - hp[N_GHOST - 1:-N_GHOST - 1]) / (2 * state.dx)
        srw = (2.0 / 3.0) * math.sqrt(kappa) * grad
    else:
        srw = rho * w_from_density(model, rho, state.dx, state.bc)
    return replace(state, srw=srw)


# ---------------------------------------------------------------- entropy CFL

@dataclass
class EntropyCFL:
    """Result of :func:`entropy_cfl_estimate`.

    ``insufficient_viscosity`` is set when no positive step satisfies the
    condition because ``min Sp(D) <= 0`` somewhere.
    """

    dt: float
    insufficient_viscosity: bool
    min_gamma: float
    binding_cell: int


def _sym_power(mats, power):
    lam, vec = np.linalg.eigh(mats)
    return np.einsum("...ij,...j,...kj->...ik", vec, lam**power, vec)


def _spec_norm(mats):
    return np.linalg.norm(mats, ord=2, axis=(-2, -1))


def _congruence(s, mats):
    return np.einsum("...ij,...jk,...lk->...il", s, mats, s)


class _CFLTerms:
    """dt-independent interface data for the entropy CFL condition (periodic grids)."""

    def __init__(self, model, state, config: SolverConfig, metric, n_nodes=4):
        if not config.flux.has_scalar_viscosity:
            raise ValueError("the entropy CFL needs a flux with scalar viscosity (LF, modified LF, Rusanov)")
        if state.bc != BC_PERIODIC:
            raise ValueError("the entropy CFL estimate is implemented for periodic grids")
        self.model, self.state, self.config = model, state, config
        v = state.as_array()
        self.v = v
        vr = np.roll(v, -1, axis=1)  # interface j+1/2 between j and j+1
        z, zr = entropy_variables(model, v), np.roll(entropy_variables(model, v), -1, axis=1)
        order = config.flux.quadrature_order
        vbar = mean_dv_dz(model, z, zr, order)
        qstar = entropy_conservative_matrix(model, z, zr, order)
        nodes, weights = gauss_unit(n_nodes)
        zs = z[:, None] + nodes[None, :, None] * (zr - z)[:, None]
        dg = np.moveaxis(dg_dz(model, zs), 0, 1)  # (n, K, 3, 3)
        m = mu(model, 0.5 * (v[0] + vr[0])) if config.capillarity else np.zeros(v.shape[1])
        bmat = np.zeros((v.shape[1], 3, 3))
        bmat[:, 1, 2], bmat[:, 2, 1] = m, -m
        if metric == "entropy":
            w_cell = dv_dz(model, z)
            s_cell = _sym_power(w_cell, -0.5)
            self.half = _sym_power(w_cell, 0.5)
        elif metric == "euclidean":
            s_cell = np.broadcast_to(np.eye(3), (v.shape[1], 3, 3))
            self.half = s_cell
        else:
            raise ValueError(f"unknown metric {metric!r}")
        # each interface j+1/2 is seen from cell j (side 0) and cell j+1 (side 1)
        self.s_sides = np.stack([s_cell, np.roll(s_cell, -1, axis=0)])
        s = self.s_sides[:, :, None]
        self.g_norm = np.einsum("k,snk->sn", weights, _spec_norm(_congruence(s, dg[None])))
        self.v_norm = _spec_norm(_congruence(self.s_sides, vbar[None]))
        self.b_norm = _spec_norm(_congruence(self.s_sides, bmat[None]))
        self.vbar, self.qstar = vbar, qstar
        self.v_l, self.v_r = v, vr

    def gamma(self, p):
        d = p[:, None, None] * self.vbar - self.qstar
        return np.linalg.eigvalsh(_congruence(self.s_sides, d[None]))[..., 0]

    def hessian_sup(self, dt):
        """sup over the FE segment v^n -> v^n + dt rhs of the metric-weighted Hessian norm, per cell."""
        st = self.state
        dv = dt * _rhs_array(self.model, self.v, self.config, st.dx, st.bc, st.time, dt)
        best = np.zeros(self.v.shape[1])
        for xi in (0.0, 0.25, 0.5, 0.75, 1.0):
            vv = self.v + xi * dv
            if np.any(~(vv[0] > 0)):
                return None
            h = entropy_hessian(self.model, vv)
            best = np.maximum(best, _spec_norm(_congruence(self.half, h)))
        return best

    def margin(self, dt):
        """Per (side, interface) slack lambda1 Gamma - M (lambda1 N + lambda2 |B|)^2, or None."""
        dx = self.state.dx
        p = viscosity_coefficient(self.model, self.config.flux, self.v_l, self.v_r, dx, dt)
        m_cell = self.hessian_sup(dt)
        if m_cell is None:
            return None, None
        m_sides = np.stack([m_cell, np.roll(m_cell, -1)])
        lam1, lam2 = dt / dx, dt / dx**2
        n_term = self.g_norm + p[None] * self.v_norm
        gam = self.gamma(p)
        return lam1 * gam - m_sides * (lam1 * n_term + lam2 * self.b_norm) ** 2, gam


def entropy_cfl_estimate(model: FluidModel, state: ConservedState, config: SolverConfig,
                         metric="entropy", safety=0.9, rel_tol=1e-3) -> EntropyCFL:
    """Largest dt satisfying M (lambda1 N + lambda2 |B|)^2 <= lambda1 min Sp(D) at every interface.

    Matrix norms are spectral norms in the metric of the entropy Hessian of
    the cell (``metric="entropy"``) or plain Euclidean ones.  ``M`` is the sup of
    the Hessian norm along the actual forward-Euler segment, which is computable
    because the step is explicit.  The condition is solved numerically since
    Lax-Friedrichs viscosity itself depends on dt.
    """
    terms = _CFLTerms(model, state, config, metric)

    def ok(dt):
        margin, _ = terms.margin(dt)
        return margin is not None and bool(np.all(margin >= 0))

    speed = float(np.max(np.abs(state.u) + model.sound_speed(state.rho)))
    dt = state.dx / speed
    lo = 1e-12 * state.dx**2
    if ok(dt):
        hi = dt
        for _ in range(60):
            hi *= 2
            if not ok(hi):
                break
        else:
            return EntropyCFL(math.inf, False, float("nan"), -1)
        good = hi / 2
    else:
        good = dt
        while not ok(good):
            good /= 2
            if good < lo:
                _, gam = terms.margin(lo)
                gmin = float(np.min(gam)) if gam is not None else float("nan")
                return EntropyCFL(0.0, bool(gmin <= 0), gmin, -1)
        hi = 2 * good
    while hi - good > rel_tol * good:
        mid = math.sqrt(hi * good)
        if ok(mid):
            good = mid
        else:
            hi = mid
    margin, gam = terms.margin(hi)
    binding = int(np.argmin(np.min(margin, axis=0))) if margin is not None else -1
    return EntropyCFL(safety * good, False, float(np.min(terms.gamma(
        viscosity_coefficient(model, config.flux, terms.v_l, terms.v_r, state.dx, good)))), binding)


def entropy_cfl_max_dt(model: FluidModel, state: ConservedState, config: SolverConfig, metric="entropy",
                       safety=0.9) -> float:
    """Entropy-stable forward Euler step size; 0.0 when the viscosity is insufficient."""
    return entropy_cfl_estimate(model, state, config, metric, safety).dt


# ---------------------------------------------------------------- driver

@dataclass
class DiagnosticRow:
    t: float
    total_entropy: float
    mass: float
    momentum: float
    newton_iters: int
    dt: float


@dataclass
class RunResult:
    state: ConservedState
    snapshots: dict
    diagnostics: list
    steps: int = 0
    halvings: int = 0
    entropy_increases: int = 0


def _row(model, state, iters=0, dt=0.0):
    return DiagnosticRow(state.time, total_entropy(model, state), float(np.sum(state.rho) * state.dx),
                         float(np.sum(state.mom) * state.dx), iters, dt)


def run(model: FluidModel, state: ConservedState, config: SolverConfig, t_end: float,
        snapshot_times=(), entropy_check=False, cfl_every=1, max_halvings=30, max_steps=None,
        cfl_metric="entropy", callback=None) -> RunResult:
    """Integrate to ``t_end``, landing exactly on the requested snapshot times.

    With ``entropy_check`` a step whose total entropy exceeds the previous one
    (relative tolerance 1e-12) is redone with half the step, as many as
    ``max_halvings`` times; the count is reported.

    In the original formulation ``rho w`` is recomputed from the density after
    every step so that the reported entropy includes the capillary energy.
    """
    if config.formulation == "original" and (entropy_check or config.fixed_dt is None):
        raise ValueError("the original formulation needs a fixed dt and no entropy check")
    stepper = STEPPERS[config.temporal]
    targets = sorted({float(s) for s in snapshot_times if 0 <= s <= t_end} | {float(t_end)})
    snapshots = {}
    if targets and targets[0] <= state.time:
        snapshots[targets[0]] = state.copy()
    diags = [_row(model, state)]
    result = RunResult(state, snapshots, diags)
    jac = BandedJacobian(3, state.n_cells, band=2) if config.temporal == "BE" else None
    auto = config.fixed_dt is None
    dt_auto = None
    steps = 0
    eps_t = 1e-12 * max(1.0, abs(t_end))
    for target in targets:
        while state.time < target - eps_t:
            if max_steps is not None and steps >= max_steps:
                result.state = state
                return result
            if auto:
                if dt_auto is None or steps % cfl_every == 0:
                    est = entropy_cfl_estimate(model, state, config, cfl_metric)
                    if not est.dt > 0:
                        raise InsufficientViscosityError(
                            f"entropy CFL gives no positive step at t={state.time:.6g} "
                            f"(min Sp(D) = {est.min_gamma:.3e})")
                    dt_auto = est.dt
                dt = dt_auto
            else:
                dt = config.fixed_dt
            dt = min(dt, target - state.time)
            for _ in range(max_halvings + 1):
                kwargs = {"jacobian": jac} if jac is not None else {}
                new, rep = stepper(model, state, config, dt, **kwargs)
                increased = rep.entropy_after > rep.entropy_before + 1e-12 * abs(rep.entropy_before)
                if not (entropy_check and increased):
                    break
                result.halvings += 1
                dt *= 0.5
            if increased:
                result.entropy_increases += 1
            if config.enforce_w_relation or config.formulation == "original":
                new = enforce_w_relation(model, new)
            if abs(new.time - target) <= eps_t:
                new.time = target
            state = new
            steps += 1
            diags.append(_row(model, state, rep.newton_iters, rep.dt_used))
            if callback is not None:
                callback(state, rep)
        snapshots[target] = state.copy()
    result.state = state
    result.steps = steps
    return result
