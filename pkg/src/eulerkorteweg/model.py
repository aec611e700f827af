"""Continuous Euler-Korteweg model: closures, entropy pair and the extended variables.

The extended formulation works with the conserved vector ``v = (rho, rho*u, rho*w)``
where ``w = sqrt(kappa(rho)) * d_x rho / sqrt(rho)``.  All functions here are
vectorised over trailing axes: a state is an array of shape ``(3, ...)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import DomainError

ArrayFn = Callable[[np.ndarray], np.ndarray]

BC_PERIODIC = "periodic"
BC_INLET_OUTLET = "inlet-outlet"


def _const(value: float) -> ArrayFn:
    return lambda rho: np.full_like(np.asarray(rho, dtype=float), value)


@dataclass(frozen=True)
class FluidModel:
    """Closure functions of the capillary fluid.

    ``energy_density`` must satisfy ``rho*F'(rho) - F(rho) = P(rho)``; use
    :func:`check_closure` to verify a hand-built model.
    """

    kappa: ArrayFn
    kappa_prime: ArrayFn
    pressure: ArrayFn
    pressure_prime: ArrayFn
    energy_density: ArrayFn
    energy_density_prime: ArrayFn
    # Optional closed-form inverse of F'; a safeguarded Newton solve is used otherwise.
    energy_density_prime_inverse: Optional[ArrayFn] = None
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def energy_density_second(self, rho):
        """F''(rho) = P'(rho)/rho, from differentiating the closure relation."""
        rho = np.asarray(rho, dtype=float)
        return self.pressure_prime(rho) / rho

    def sound_speed(self, rho):
        return np.sqrt(self.pressure_prime(np.asarray(rho, dtype=float)))

    def constant_kappa(self) -> Optional[float]:
        return self.params.get("kappa")


def shallow_water_model(g: float, kappa: float) -> FluidModel:
    """Shallow water with constant capillarity: P = F = g h^2 / 2."""
    if g <= 0 or kappa < 0:
        raise DomainError("shallow water model needs g > 0 and kappa >= 0")
    return FluidModel(
        kappa=_const(kappa),
        kappa_prime=_const(0.0),
        pressure=lambda h: 0.5 * g * np.asarray(h, dtype=float) ** 2,
        pressure_prime=lambda h: g * np.asarray(h, dtype=float),
        energy_density=lambda h: 0.5 * g * np.asarray(h, dtype=float) ** 2,
        energy_density_prime=lambda h: g * np.asarray(h, dtype=float),
        energy_density_prime_inverse=lambda phi: np.asarray(phi, dtype=float) / g,
        name="shallow_water",
        params={"g": g, "kappa": kappa},
    )


def liu_gollub_model(froude_sq: float, kappa: float = 0.0) -> FluidModel:
    """Film model with P(h) = h^2/(2 F^2) + 2 h^5 / 25.

    The energy density F(h) = h^2/(2 F^2) + h^5/50 is the solution of
    ``h F' - F = P`` with ``F(h)/h -> 0`` at vacuum.  ``kappa`` is the
    constant capillarity eps/We.
    """
    if froude_sq <= 0 or kappa < 0:
        raise DomainError("Liu-Gollub model needs F^2 > 0 and kappa >= 0")
    a = 1.0 / froude_sq

    def pressure(h):
        h = np.asarray(h, dtype=float)
        return 0.5 * a * h**2 + 0.08 * h**5

    def pressure_prime(h):
        h = np.asarray(h, dtype=float)
        return a * h + 0.4 * h**4

    def energy(h):
        h = np.asarray(h, dtype=float)
        return 0.5 * a * h**2 + h**5 / 50.0

    def energy_prime(h):
        h = np.asarray(h, dtype=float)
        return a * h + 0.1 * h**4

    return FluidModel(
        kappa=_const(kappa),
        kappa_prime=_const(0.0),
        pressure=pressure,
        pressure_prime=pressure_prime,
        energy_density=energy,
        energy_density_prime=energy_prime,
        name="liu_gollub",
        params={"froude_sq": froude_sq, "kappa": kappa},
    )


def with_kappa(model: FluidModel, kappa: float) -> FluidModel:
    """Copy of a constant-capillarity model with a different kappa."""
    params = dict(model.params, kappa=kappa)
    return replace(model, kappa=_const(kappa), kappa_prime=_const(0.0), params=params)


def check_closure(model: FluidModel, rho) -> float:
    """Largest relative defect of ``rho F' - F - P`` over the sample points."""
    rho = np.asarray(rho, dtype=float)
    lhs = rho * model.energy_density_prime(rho) - model.energy_density(rho)
    p = model.pressure(rho)
    scale = np.maximum(np.abs(p), np.finfo(float).tiny)
    return float(np.max(np.abs(lhs - p) / scale))


class EntropyVariables(NamedTuple):
    z1: np.ndarray
    z2: np.ndarray
    z3: np.ndarray


def _require_positive(rho, what="density"):
    rho = np.asarray(rho, dtype=float)
    if np.any(~(rho > 0)):
        raise DomainError(f"non-positive {what}")
    return rho


def primitives(v):
    """Split ``v = (rho, rho u, rho w)`` into ``(rho, u, w)``."""
    v = np.asarray(v, dtype=float)
    rho = _require_positive(v[0])
    return rho, v[1] / rho, v[2] / rho


def entropy(model: FluidModel, v):
    """U(v) = rho (u^2 + w^2)/2 + F(rho)."""
    rho, u, w = primitives(v)
    return 0.5 * rho * (u * u + w * w) + model.energy_density(rho)


def entropy_flux(model: FluidModel, v):
    """Entropy flux of the convective part, G0 = u (U + P)."""
    rho, u, _ = primitives(v)
    return u * (entropy(model, v) + model.pressure(rho))


def entropy_variables(model: FluidModel, v) -> np.ndarray:
    """z = grad_v U = (F'(rho) - (u^2+w^2)/2, u, w), stacked along axis 0."""
    rho, u, w = primitives(v)
    return np.stack([model.energy_density_prime(rho) - 0.5 * (u * u + w * w), u, w])


def density_from_potential(model: FluidModel, phi):
    """Invert F'(rho) = phi for rho > 0."""
    phi = np.asarray(phi, dtype=float)
    if model.energy_density_prime_inverse is not None:
        rho = np.asarray(model.energy_density_prime_inverse(phi), dtype=float)
    else:
        rho = _invert_monotone(model.energy_density_prime, model.energy_density_second, phi)
    if np.any(~(rho > 0)):
        raise DomainError("entropy variables map to a non-positive density")
    return rho


def _invert_monotone(fn, dfn, target, tol=1e-14, max_iter=200):
    # Bracketed Newton on an increasing function of rho > 0.
    target = np.asarray(target, dtype=float)
    lo = np.full(target.shape, 0.0)
    hi = np.ones(target.shape)
    for _ in range(200):
        short = fn(hi) < target
        if not np.any(short):
            break
        hi = np.where(short, 2.0 * hi, hi)
    f0 = fn(np.full(target.shape, np.finfo(float).tiny))
    if np.any(target <= f0):
        raise DomainError("entropy variables map to a non-positive density")
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = fn(x) - target
        lo = np.where(fx < 0, x, lo)
        hi = np.where(fx >= 0, x, hi)
        step = fx / dfn(x)
        xn = x - step
        outside = ~((xn > lo) & (xn < hi))
        xn = np.where(outside, 0.5 * (lo + hi), xn)
        if np.all(np.abs(xn - x) <= tol * np.abs(xn)):
            return xn
        x = xn
    return x


def conserved_from_entropy_variables(model: FluidModel, z) -> np.ndarray:
    """Inverse map v(z)."""
    z = np.asarray(z, dtype=float)
    u, w = z[1], z[2]
    rho = density_from_potential(model, z[0] + 0.5 * (u * u + w * w))
    return np.stack([rho, rho * u, rho * w])


def convective_flux(model: FluidModel, v) -> np.ndarray:
    """f(v) = (rho u, rho u^2 + P, rho u w)."""
    rho, u, w = primitives(v)
    return np.stack([rho * u, rho * u * u + model.pressure(rho), rho * u * w])


def flux_from_entropy_variables(model: FluidModel, z) -> np.ndarray:
    """g(z) = f(v(z))."""
    return convective_flux(model, conserved_from_entropy_variables(model, z))


def flux_jacobian(model: FluidModel, v) -> np.ndarray:
    """grad_v f with shape ``(..., 3, 3)``; eigenvalues are u - c, u, u + c."""
    rho, u, w = primitives(v)
    c2 = model.pressure_prime(rho)
    zero, one = np.zeros_like(rho), np.ones_like(rho)
    rows = [
        [zero, one, zero],
        [c2 - u * u, 2 * u, zero],
        [-u * w, w, u],
    ]
    return np.moveaxis(np.array(rows), (0, 1), (-2, -1))


def spectral_radius(model: FluidModel, v):
    """|u| + c, the spectral radius of grad_v f."""
    rho, u, _ = primitives(v)
    return np.abs(u) + model.sound_speed(rho)


def entropy_hessian(model: FluidModel, v) -> np.ndarray:
    """grad_v^2 U with shape ``(..., 3, 3)``."""
    rho, u, w = primitives(v)
    d = (u * u + w * w) / rho + model.energy_density_second(rho)
    inv = 1.0 / rho
    zero = np.zeros_like(rho)
    rows = [
        [d, -u * inv, -w * inv],
        [-u * inv, inv, zero],
        [-w * inv, zero, inv],
    ]
    return np.moveaxis(np.array(rows), (0, 1), (-2, -1))


def _outer_with_rho(rho, u, w, c2):
    a = np.stack([np.ones_like(rho), u, w])
    return a, rho / c2


def dv_dz(model: FluidModel, z) -> np.ndarray:
    """grad_z v = (rho/c^2) a a^T + rho diag(0,1,1) with a = (1, u, w); symmetric."""
    z = np.asarray(z, dtype=float)
    v = conserved_from_entropy_variables(model, z)
    rho, u, w = v[0], z[1], z[2]
    a, s = _outer_with_rho(rho, u, w, model.pressure_prime(rho))
    out = s[..., None, None] * np.einsum("i...,j...->...ij", a, a)
    out[..., 1, 1] += rho
    out[..., 2, 2] += rho
    return out


def dg_dz(model: FluidModel, z) -> np.ndarray:
    """grad_z g for g(z) = f(v(z)); symmetric because g is a gradient."""
    z = np.asarray(z, dtype=float)
    v = conserved_from_entropy_variables(model, z)
    rho, u, w = v[0], z[1], z[2]
    c2 = model.pressure_prime(rho)
    a, s = _outer_with_rho(rho, u, w, c2)
    drho = s * a  # d rho / dz
    zero = np.zeros_like(rho)
    e2 = np.stack([zero, rho, zero])
    e3 = np.stack([zero, zero, rho])
    row1 = u * drho + e2
    row2 = (u * u + c2) * drho + 2 * u * e2
    row3 = u * w * drho + w * e2 + u * e3
    return np.moveaxis(np.array([row1, row2, row3]), (0, 1), (-2, -1))


def mu(model: FluidModel, rho):
    """mu(rho) = rho^{3/2} sqrt(kappa(rho))."""
    rho = _require_positive(rho)
    return rho**1.5 * np.sqrt(model.kappa(rho))


def centered_gradient(values, dx, bc=BC_PERIODIC):
    """Second-order centred derivative; one-sided second-order stencils at open ends."""
    values = np.asarray(values, dtype=float)
    if bc == BC_PERIODIC:
        return (np.roll(values, -1) - np.roll(values, 1)) / (2 * dx)
    return np.gradient(values, dx, edge_order=2)


def w_from_density(model: FluidModel, rho_field, dx, bc=BC_PERIODIC):
    """w_j = sqrt(kappa(rho_j)/rho_j) (rho_{j+1} - rho_{j-1}) / (2 dx)."""
    rho = _require_positive(rho_field)
    return np.sqrt(model.kappa(rho) / rho) * centered_gradient(rho, dx, bc)


@dataclass
class ConservedState:
    """Grid values of ``v = (rho, rho u, rho w)`` on ``[x0, x0 + length]``.

    Nodes sit at ``x_j = x0 + j dx`` for ``j = 0 .. n_cells - 1``.
    """

    x0: float
    length: float
    rho: np.ndarray
    mom: np.ndarray
    srw: np.ndarray
    bc: str = BC_PERIODIC
    time: float = 0.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.mom = np.asarray(self.mom, dtype=float)
        self.srw = np.asarray(self.srw, dtype=float)
        if not (self.rho.shape == self.mom.shape == self.srw.shape) or self.rho.ndim != 1:
            raise ValueError("rho, mom and srw must be 1D arrays of equal length")
        if self.bc not in (BC_PERIODIC, BC_INLET_OUTLET):
            raise ValueError(f"unknown boundary tag {self.bc!r}")

    @property
    def n_cells(self) -> int:
        return self.rho.size

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n_cells)

    @property
    def u(self) -> np.ndarray:
        return self.mom / self.rho

    @property
    def w(self) -> np.ndarray:
        return self.srw / self.rho

    def as_array(self) -> np.ndarray:
        return np.stack([self.rho, self.mom, self.srw])

    def with_array(self, v, time=None) -> "ConservedState":
        v = np.asarray(v, dtype=float)
        return replace(self, rho=v[0].copy(), mom=v[1].copy(), srw=v[2].copy(),
                       time=self.time if time is None else time)

    def copy(self) -> "ConservedState":
        return self.with_array(self.as_array())

    @classmethod
    def from_profile(cls, model, x0, length, rho, u=None, bc=BC_PERIODIC, time=0.0):
        """Build a state from a density profile; ``rho w`` comes from :func:`w_from_density`."""
        rho = np.asarray(rho, dtype=float)
        u = np.zeros_like(rho) if u is None else np.broadcast_to(np.asarray(u, dtype=float), rho.shape)
        dx = length / rho.size
        w = w_from_density(model, rho, dx, bc)
        return cls(x0, length, rho, rho * u, rho * w, bc=bc, time=time)


def total_entropy(model: FluidModel, state: ConservedState) -> float:
    """Sum_j U(v_j) dx."""
    return float(np.sum(entropy(model, state.as_array())) * state.dx)
