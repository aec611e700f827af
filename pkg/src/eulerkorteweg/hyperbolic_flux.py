"""Numerical fluxes for the convective part of the extended system.

Fluxes act on arrays of interface states of shape ``(3, n)``.  Schemes in
viscosity form read

    f_{j+1/2} = (f(v_j) + f(v_{j+1}))/2 - Q_{j+1/2} (z_{j+1} - z_j)/2

with ``Q`` symmetric and ``z`` the entropy variables.  The scalar family
(Lax-Friedrichs, Rusanov) uses ``p (v_{j+1} - v_j)/2`` instead, which is the
same thing with ``Q = p int_0^1 dv/dz``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DomainError, SegmentVacuumError
from .model import (
    FluidModel,
    conserved_from_entropy_variables,
    convective_flux,
    dg_dz,
    dv_dz,
    entropy_flux,
    entropy_variables,
    flux_from_entropy_variables,
    spectral_radius,
)

FLUX_KINDS = ("lax_friedrichs", "modified_lf", "rusanov", "hll", "entropy_conservative")
SCALAR_FLUX_KINDS = ("lax_friedrichs", "modified_lf", "rusanov")
LIMITERS = ("none", "minmod")


@dataclass(frozen=True)
class FluxSpec:
    """Choice of numerical flux.

    For ``lax_friedrichs`` the added viscosity is ``dx/(2 dt)`` and for
    ``modified_lf`` half of that; ``extra_viscosity`` is the user-set ``p~`` of
    the Rusanov kind.  All scalar kinds add the largest local wave speed.
    """

    kind: str = "rusanov"
    extra_viscosity: float = 0.0
    quadrature_order: int = 8

    def __post_init__(self):
        if self.kind not in FLUX_KINDS:
            raise ValueError(f"unknown flux kind {self.kind!r}")
        if self.extra_viscosity < 0:
            raise ValueError("extra_viscosity must be non-negative")
        if self.quadrature_order < 2:
            raise ValueError("quadrature_order must be at least 2")

    @property
    def needs_dt(self) -> bool:
        return self.kind in ("lax_friedrichs", "modified_lf")

    @property
    def has_scalar_viscosity(self) -> bool:
        return self.kind in SCALAR_FLUX_KINDS


@dataclass
class InterfaceFlux:
    """Flux values with, when requested, the viscosity matrix and entropy flux.

    ``value`` has shape ``(3, n)``, ``viscosity_matrix_Q`` shape ``(n, 3, 3)``.
    """

    value: np.ndarray
    viscosity_matrix_Q: Optional[np.ndarray] = None
    entropy_flux_G0: Optional[np.ndarray] = None


@lru_cache(maxsize=None)
def gauss_unit(order: int):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _columns(*arrays):
    """Promote single states ``(3,)`` to one-column batches ``(3, 1)``."""
    arrs = [np.asarray(a, dtype=float) for a in arrays]
    single = arrs[0].ndim == 1
    return single, [a[:, None] if a.ndim == 1 else a for a in arrs]


def _squeeze(single, flux: "InterfaceFlux") -> "InterfaceFlux":
    if not single:
        return flux
    q = None if flux.viscosity_matrix_Q is None else flux.viscosity_matrix_Q[0]
    g = None if flux.entropy_flux_G0 is None else flux.entropy_flux_G0[0]
    return InterfaceFlux(flux.value[:, 0], q, g)


def _segment(zl, zr, nodes):
    # z(s) = zl + s (zr - zl) for every node; shape (3, K, n)
    zl = np.asarray(zl, dtype=float)
    dz = np.asarray(zr, dtype=float) - zl
    return zl[:, None] + nodes[None, :, None] * dz[:, None]


def _on_segment(fn, model, zs):
    try:
        return fn(model, zs)
    except DomainError as exc:
        raise SegmentVacuumError("density vanishes along the entropy-variable segment") from exc


def mean_dv_dz(model: FluidModel, zl, zr, order: int = 8) -> np.ndarray:
    """int_0^1 dv/dz(z_l + s (z_r - z_l)) ds, shape ``(n, 3, 3)``."""
    nodes, weights = gauss_unit(order)
    jac = _on_segment(dv_dz, model, _segment(zl, zr, nodes))  # (K, n, 3, 3)
    return np.einsum("k,kn...->n...", weights, jac)


def mean_dg_dz(model: FluidModel, zl, zr, order: int = 8) -> np.ndarray:
    """int_0^1 dg/dz along the segment, shape ``(n, 3, 3)``."""
    nodes, weights = gauss_unit(order)
    jac = _on_segment(dg_dz, model, _segment(zl, zr, nodes))
    return np.einsum("k,kn...->n...", weights, jac)


def entropy_conservative_matrix(model: FluidModel, zl, zr, order: int = 8) -> np.ndarray:
    """Q* = int_{-1/2}^{1/2} 2 s dg/dz((z_l+z_r)/2 + s (z_r - z_l)) ds."""
    nodes, weights = gauss_unit(order)
    jac = _on_segment(dg_dz, model, _segment(zl, zr, nodes))
    s = nodes - 0.5
    return np.einsum("k,kn...->n...", weights * 2 * s, jac)


def rusanov_p(model: FluidModel, v_l, v_r, p_tilde=0.0):
    """p = p~ + max(|u| + c) over the two states."""
    return np.maximum(spectral_radius(model, v_l), spectral_radius(model, v_r)) + p_tilde


def viscosity_coefficient(model: FluidModel, spec: FluxSpec, v_l, v_r, dx=None, dt=None):
    """Interface viscosity p of the scalar kinds."""
    if spec.kind == "rusanov":
        return rusanov_p(model, v_l, v_r, spec.extra_viscosity)
    if spec.kind in ("lax_friedrichs", "modified_lf"):
        if dx is None or dt is None or dt <= 0:
            raise ValueError(f"{spec.kind} needs dx and a positive dt")
        scale = 2.0 if spec.kind == "lax_friedrichs" else 4.0
        return rusanov_p(model, v_l, v_r, dx / (scale * dt))
    raise ValueError(f"{spec.kind} has no scalar viscosity")


def scalar_viscosity_flux(model: FluidModel, v_l, v_r, p, with_matrix=False, quadrature_order=8):
    """(f(v_l) + f(v_r))/2 - p (v_r - v_l)/2.

    With ``with_matrix`` the equivalent symmetric ``Q`` and the entropy flux are
    also returned.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("viscosity p must be non-negative")
    single, (v_l, v_r) = _columns(v_l, v_r)
    value = 0.5 * (convective_flux(model, v_l) + convective_flux(model, v_r)) - 0.5 * p * (v_r - v_l)
    if not with_matrix:
        return _squeeze(single, InterfaceFlux(value))
    z_l, z_r = entropy_variables(model, v_l), entropy_variables(model, v_r)
    q = np.broadcast_to(p, z_l.shape[1:])[:, None, None] * mean_dv_dz(model, z_l, z_r, quadrature_order)
    return _squeeze(single, InterfaceFlux(value, q, numerical_entropy_flux_G0(model, z_l, z_r, value)))


def entropy_conservative_flux(model: FluidModel, z_l, z_r, quadrature_order=8) -> InterfaceFlux:
    """Tadmor's flux (g(z_l) + g(z_r))/2 - Q* (z_r - z_l)/2."""
    if quadrature_order < 2:
        raise ValueError("quadrature_order must be at least 2")
    single, (z_l, z_r) = _columns(z_l, z_r)
    qstar = entropy_conservative_matrix(model, z_l, z_r, quadrature_order)
    avg = 0.5 * (flux_from_entropy_variables(model, z_l) + flux_from_entropy_variables(model, z_r))
    value = avg - 0.5 * np.einsum("nij,jn->in", qstar, z_r - z_l)
    return _squeeze(single, InterfaceFlux(value, qstar, numerical_entropy_flux_G0(model, z_l, z_r, value)))


def entropy_potential(model: FluidModel, z):
    """psi(z) = <z, g(z)> - G0(v(z))."""
    v = conserved_from_entropy_variables(model, z)
    return np.sum(np.asarray(z) * convective_flux(model, v), axis=0) - entropy_flux(model, v)


def numerical_entropy_flux_G0(model: FluidModel, z_l, z_r, flux_value):
    """<(z_l + z_r)/2, f> - (psi(z_l) + psi(z_r))/2."""
    z_l = np.asarray(z_l, dtype=float)
    z_r = np.asarray(z_r, dtype=float)
    avg = 0.5 * (z_l + z_r)
    return np.sum(avg * flux_value, axis=0) - 0.5 * (entropy_potential(model, z_l) + entropy_potential(model, z_r))


def hll_flux(model: FluidModel, v_l, v_r) -> InterfaceFlux:
    """HLL flux with Davis wave-speed bounds."""
    single, (v_l, v_r) = _columns(v_l, v_r)
    u_l, u_r = v_l[1] / v_l[0], v_r[1] / v_r[0]
    c_l, c_r = model.sound_speed(v_l[0]), model.sound_speed(v_r[0])
    s_l = np.minimum(np.minimum(u_l - c_l, u_r - c_r), 0.0)
    s_r = np.maximum(np.maximum(u_l + c_l, u_r + c_r), 0.0)
    f_l, f_r = convective_flux(model, v_l), convective_flux(model, v_r)
    width = s_r - s_l
    # width > 0 whenever c > 0
    value = (s_r * f_l - s_l * f_r + s_l * s_r * (v_r - v_l)) / width
    return _squeeze(single, InterfaceFlux(value))


def interface_flux(model: FluidModel, spec: FluxSpec, v_l, v_r, dx=None, dt=None) -> np.ndarray:
    """Flux values only; the fast path used by the solvers."""
    if spec.has_scalar_viscosity:
        p = viscosity_coefficient(model, spec, v_l, v_r, dx, dt)
        return scalar_viscosity_flux(model, v_l, v_r, p).value
    if spec.kind == "hll":
        return hll_flux(model, v_l, v_r).value
    z_l, z_r = entropy_variables(model, v_l), entropy_variables(model, v_r)
    return entropy_conservative_flux(model, z_l, z_r, spec.quadrature_order).value


def minmod(a, b):
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def muscl_reconstruct(states, limiter="minmod", check_positivity=True):
    """Left and right states at the interfaces of a padded row of cells.

    ``states`` has shape ``(3, m)`` with ``m >= 4``; interface ``k`` sits between
    cells ``k+1`` and ``k+2`` for ``k = 0 .. m-4``.  Returns ``(v_l, v_r, fallback)``
    where ``fallback`` marks interfaces that reverted to first order because a
    reconstructed density was not positive.
    """
    if limiter not in LIMITERS:
        raise ValueError(f"unknown limiter {limiter!r}")
    v = np.asarray(states)
    if v.shape[-1] < 4:
        raise ValueError("need at least four cells to reconstruct")
    fwd = v[:, 2:] - v[:, 1:-1]
    bwd = v[:, 1:-1] - v[:, :-2]
    slope = 0.5 * (fwd + bwd) if limiter == "none" else minmod(fwd, bwd)
    # slopes live on cells 1 .. m-2
    v_l = v[:, 1:-2] + 0.5 * slope[:, :-1]
    v_r = v[:, 2:-1] - 0.5 * slope[:, 1:]
    fallback = np.zeros(v_l.shape[-1], dtype=bool)
    if check_positivity and not np.iscomplexobj(v):
        fallback = ~((v_l[0] > 0) & (v_r[0] > 0))
        if np.any(fallback):
            v_l = np.where(fallback, v[:, 1:-2], v_l)
            v_r = np.where(fallback, v[:, 2:-1], v_r)
    return v_l, v_r, fallback
