"""Von Neumann analysis of the linearised Euler-Korteweg difference schemes.

The linearised system about a constant state is ``v_t + A v_x = B v_xxx`` with
``v = (rho, q)``.  Every semi-discrete scheme considered here has a Fourier
symbol of the form ``i xi M(xi)``, with ``xi = 2 sin(theta/2) / dx`` ranging over
``[-2/dx, 2/dx]``.  Time integration turns each eigenvalue ``Lambda`` of ``M``
into a scalar amplification factor; a scheme is stable when every factor has
modulus at most one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import FluidModel

TOL_GROWTH = 1e-10
DEFAULT_N_XI = 2049

FIRST_ORDER_KINDS = ("lax_friedrichs", "modified_lf", "rusanov", "godunov_roe", "centered")
MUSCL_KINDS = ("muscl_lf", "muscl_rusanov", "muscl_centered")
SCALAR_KINDS = ("lax_friedrichs", "modified_lf", "rusanov", "centered",
                "muscl_lf", "muscl_rusanov", "muscl_centered")


@dataclass(frozen=True)
class LinearizedSetup:
    rho_bar: float
    u_bar: float
    c_bar: float
    sigma_bar: float

    def __post_init__(self):
        if not self.c_bar > 0:
            raise DomainError("c_bar must be positive")
        if self.sigma_bar < 0:
            raise DomainError("sigma_bar must be non-negative")

    @classmethod
    def from_model(cls, model: FluidModel, rho_bar: float, u_bar: float) -> "LinearizedSetup":
        c2 = float(model.pressure_prime(np.asarray(rho_bar)))
        sigma = float(rho_bar * model.kappa(np.asarray(rho_bar)))
        return cls(rho_bar, u_bar, math.sqrt(c2), sigma)

    @property
    def spectral_radius(self) -> float:
        return abs(self.u_bar) + self.c_bar


@dataclass(frozen=True)
class SpatialScheme:
    """First-order or MUSCL spatial discretisation of the convective part.

    ``q`` is only used by ``rusanov``-type kinds when given; otherwise the
    viscosity follows from the kind and the time step.
    """

    kind: str
    q: float | None = None

    def __post_init__(self):
        if self.kind not in FIRST_ORDER_KINDS + MUSCL_KINDS:
            raise ValueError(f"unknown spatial scheme {self.kind!r}")
        if self.q is not None and self.q < 0:
            raise ValueError("viscosity q must be non-negative")

    @property
    def is_muscl(self) -> bool:
        return self.kind in MUSCL_KINDS

    def scalar_q(self, setup: LinearizedSetup, dx: float, dt: float) -> float:
        """Scalar viscosity q with Q = (dt/dx) q Id."""
        base = self.kind.removeprefix("muscl_")
        if base in ("lax_friedrichs", "lf"):
            return dx / dt
        if base == "modified_lf":
            return dx / (2 * dt)
        if base == "rusanov":
            return setup.spectral_radius if self.q is None else self.q
        if base == "centered":
            return 0.0
        raise ValueError(f"{self.kind} has no scalar viscosity")

    def viscosity_matrix(self, setup: LinearizedSetup, dx: float, dt: float) -> np.ndarray:
        lam1 = dt / dx
        if self.kind == "godunov_roe":
            return lam1 * godunov_abs_A(setup)
        return lam1 * self.scalar_q(setup, dx, dt) * np.eye(2)


@dataclass(frozen=True)
class TemporalScheme:
    kind: str
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("FE", "BE", "Theta", "RK2", "CN"):
            raise ValueError(f"unknown temporal scheme {self.kind!r}")
        if self.kind == "Theta" and not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")

    @property
    def effective_theta(self) -> float | None:
        return {"FE": 0.0, "BE": 1.0, "CN": 0.5, "Theta": self.theta}.get(self.kind)


FE = TemporalScheme("FE")
BE = TemporalScheme("BE")
CN = TemporalScheme("CN")
RK2 = TemporalScheme("RK2")


def theta_scheme(theta: float) -> TemporalScheme:
    return TemporalScheme("Theta", theta)


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    max_amplification: float
    worst_xi: float
    scanned_points: int
    necessary_condition: bool = True
    min_xi_imag: float = 0.0


def matrix_A(setup: LinearizedSetup) -> np.ndarray:
    u, c = setup.u_bar, setup.c_bar
    return np.array([[0.0, 1.0], [c * c - u * u, 2 * u]])


def matrix_B(setup: LinearizedSetup) -> np.ndarray:
    return np.array([[0.0, 0.0], [setup.sigma_bar, 0.0]])


def godunov_abs_A(setup: LinearizedSetup) -> np.ndarray:
    """|A| as the matrix absolute value built on the eigenvectors of A."""
    u, c = setup.u_bar, setup.c_bar
    if c <= 0:
        raise DomainError("degenerate state c_bar = 0")
    ap, am = abs(u + c), abs(u - c)
    return np.array([
        [am * (u + c) - ap * (u - c), ap - am],
        [(c * c - u * u) * (ap - am), ap * (u + c) - am * (u - c)],
    ]) / (2 * c)


def _zeta(xi, dx):
    xi = np.asarray(xi, dtype=float)
    arg = 1.0 - (xi * dx) ** 2 / 4.0
    if np.any(arg < -1e-12):
        raise DomainError("|xi| must not exceed 2/dx")
    return np.sqrt(np.clip(arg, 0.0, None))


def first_order_symbol(setup, spatial: SpatialScheme, xi, dx, dt) -> np.ndarray:
    """M(xi) = zeta (A + xi^2 B) + i xi dx^2/(2 dt) Q; shape ``xi.shape + (2, 2)``."""
    xi = np.asarray(xi, dtype=float)
    zeta = _zeta(xi, dx)[..., None, None]
    Q = spatial.viscosity_matrix(setup, dx, dt)
    A, B = matrix_A(setup), matrix_B(setup)
    x = xi[..., None, None]
    return zeta * (A + x**2 * B) + 1j * x * (dx * dx / (2 * dt)) * Q


def muscl_symbol(setup, spatial: SpatialScheme, xi, dx, dt) -> np.ndarray:
    """MUSCL symbol zeta((1 + xi^2 dx^2/4) A + xi^2 B) + i xi (xi^2 dx^4 / (16 dt)) Q."""
    xi = np.asarray(xi, dtype=float)
    zeta = _zeta(xi, dx)[..., None, None]
    Q = spatial.viscosity_matrix(setup, dx, dt)
    A, B = matrix_A(setup), matrix_B(setup)
    x = xi[..., None, None]
    return zeta * ((1 + x**2 * dx**2 / 4) * A + x**2 * B) + 1j * x * (x**2 * dx**4 / (16 * dt)) * Q


def symbol(setup, spatial, xi, dx, dt):
    if spatial.is_muscl:
        return muscl_symbol(setup, spatial, xi, dx, dt)
    return first_order_symbol(setup, spatial, xi, dx, dt)


def lf_family_eigenvalues(setup, q, xi, dx, dt=None):
    """Closed-form eigenvalues of M for Q = (dt/dx) q Id, returned as (Lambda+, Lambda-)."""
    xi = np.asarray(xi, dtype=float)
    zeta = _zeta(xi, dx)
    root = np.sqrt(setup.c_bar**2 + setup.sigma_bar * xi**2)
    damping = 1j * xi * dx * q / 2
    return zeta * (setup.u_bar + root) + damping, zeta * (setup.u_bar - root) + damping


def muscl_eigenvalues(setup, q, xi, dx, dt=None):
    """Closed-form eigenvalues of the MUSCL symbol for scalar viscosity."""
    xi = np.asarray(xi, dtype=float)
    zeta = _zeta(xi, dx)
    s = 2.0 - zeta**2
    root = np.sqrt(setup.c_bar**2 + setup.sigma_bar * xi**2 / s)
    damping = 1j * q * xi * dx / 4 * (1 - zeta**2)
    return zeta * s * (setup.u_bar + root) + damping, zeta * s * (setup.u_bar - root) + damping


def godunov_asymptotic_xi_imag(setup, xi, dx):
    """Leading-order xi I_pm for the Godunov symbol as |xi| -> infinity (diagnostic)."""
    xi = np.asarray(xi, dtype=float)
    zeta = _zeta(xi, dx)
    s = setup.sigma_bar
    a12 = godunov_abs_A(setup)[0, 1]
    core = np.sqrt(s * s * zeta**4 + 2 * s * zeta * np.sqrt(1 - zeta**2) * a12) - s * zeta**2
    lead = xi * np.abs(xi) * core
    return lead, -lead


def eigenvalues(setup, spatial, xi, dx, dt):
    """Both eigenvalue branches of the scheme symbol, shape ``(2,) + xi.shape``.

    Scalar-viscosity kinds use the closed forms; Godunov uses a dense eigensolver
    with branches ordered by real part.
    """
    if spatial.kind in SCALAR_KINDS:
        q = spatial.scalar_q(setup, dx, dt)
        fn = muscl_eigenvalues if spatial.is_muscl else lf_family_eigenvalues
        return np.stack(fn(setup, q, xi, dx, dt))
    lam = np.linalg.eigvals(symbol(setup, spatial, xi, dx, dt))
    order = np.argsort(-lam.real, axis=-1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=-1)
    return np.moveaxis(lam, -1, 0)


def amplification(temporal: TemporalScheme, lam, xi, dt):
    """Modulus of the scalar update factor for eigenvalue ``lam`` at wavenumber ``xi``."""
    z = np.asarray(xi) * dt * np.asarray(lam)
    if temporal.kind == "RK2":
        return np.abs(1 + 1j * z - z * z / 2)
    theta = temporal.effective_theta
    den = np.abs(1 - 1j * theta * z)
    if np.any(den == 0):
        raise DomainError("singular resolvent in implicit update")
    return np.abs(1 + 1j * (1 - theta) * z) / den


def xi_grid(dx, n_xi=DEFAULT_N_XI):
    return np.linspace(-2.0 / dx, 2.0 / dx, n_xi)


def stability_scan(setup, spatial, temporal, dx, dt, n_xi=DEFAULT_N_XI, tol_growth=TOL_GROWTH,
                   return_table=False):
    """Scan both eigenvalue branches over the resolvable band.

    Returns a :class:`StabilityVerdict`; with ``return_table`` also the arrays
    ``(xi, |G+|, |G-|)``.  The verdict records separately whether
    ``xi Im(Lambda) >= 0`` holds at every scanned point.
    """
    if n_xi < 64:
        raise ValueError("n_xi must be at least 64")
    xi = xi_grid(dx, n_xi)
    lam = eigenvalues(setup, spatial, xi, dx, dt)
    amp = amplification(temporal, lam, xi, dt)
    idx = np.unravel_index(int(np.argmax(amp)), amp.shape)
    max_amp = float(amp[idx])
    xi_imag = xi * lam.imag
    scale = np.abs(xi) * np.abs(lam) + 1e-300
    necessary = bool(np.all(xi_imag >= -1e-12 * scale))
    verdict = StabilityVerdict(
        stable=max_amp <= 1 + tol_growth,
        max_amplification=max_amp,
        worst_xi=float(xi[idx[1]]),
        scanned_points=int(n_xi),
        necessary_condition=necessary,
        min_xi_imag=float(np.min(xi_imag)),
    )
    if return_table:
        return verdict, (xi, amp[0], amp[1])
    return verdict


def _theta_factor(theta, numerator):
    if theta >= 0.5:
        return math.inf
    return numerator / (1 - 2 * theta)


def cfl_bound_closed_form(setup, scheme_kind, theta=0.0, dx=1e-2, corrected=False):
    """Largest admissible dt from the closed-form CFL conditions.

    ``scheme_kind`` is one of ``lax_friedrichs``, ``modified_lf``, ``rusanov``
    (Theta schemes), ``muscl_lf`` (MUSCL + RK2) or ``muscl_rusanov`` (MUSCL + RK2,
    leading-order 7/3 bound).  For Rusanov the result is a dict with the two
    branches of the max-constraint and their minimum under ``"dt"``.

    With ``corrected=True`` the Theta-scheme right-hand sides are halved
    (``1/(1-2 Theta)`` instead of ``2/(1-2 Theta)``), which is what the exact
    amplification factor of the symbol requires; see the module tests.
    """
    u, c, s = abs(setup.u_bar), setup.c_bar, setup.sigma_bar
    rho_a = setup.spectral_radius
    num = 1.0 if corrected else 2.0
    if scheme_kind in ("lax_friedrichs", "modified_lf"):
        rhs = _theta_factor(theta, num if scheme_kind == "lax_friedrichs" else num / 2)
        if math.isinf(rhs):
            return math.inf
        # (|u| + c) dt/dx + 2 sqrt(sigma) dt/dx^2 <= sqrt(rhs)
        return math.sqrt(rhs) / ((u + c) / dx + 2 * math.sqrt(s) / dx**2)
    if scheme_kind == "rusanov":
        rhs = _theta_factor(theta, num * rho_a)
        if math.isinf(rhs):
            return {"dt": math.inf, "dispersive": math.inf, "hyperbolic": math.inf}
        lead = (u * dx + math.sqrt(c * c * dx * dx + 4 * s)) ** 2
        dispersive = rhs * dx**3 / lead
        hyperbolic = rhs * dx / rho_a**2
        return {"dt": min(dispersive, hyperbolic), "dispersive": dispersive, "hyperbolic": hyperbolic}
    if scheme_kind == "muscl_lf":
        return dx / (u + math.sqrt(c * c + 2 * s / dx**2))
    if scheme_kind == "muscl_rusanov":
        if s == 0:
            return math.inf
        const = (math.sqrt(u + c) / s) ** (2.0 / 3.0) * 7 ** (7.0 / 6.0) * math.sqrt(3) / 24
        return const * dx ** (7.0 / 3.0)
    raise ValueError(f"no closed-form bound for {scheme_kind!r}")


@dataclass(frozen=True)
class CriticalDt:
    dt: float
    found: bool
    monotone: bool
    bracket: tuple


def critical_dt_bisection(setup, spatial, temporal, dx, tol=1e-6, n_xi=DEFAULT_N_XI,
                          dt_lo=None, dt_hi=None, n_check=8):
    """Largest dt for which :func:`stability_scan` is stable, by log-space bisection.

    A dt counts as stable when the amplification stays within tolerance and the
    symbol satisfies ``xi Im(Lambda) >= 0`` on the whole band.

    ``tol`` is relative to the bracket.  Returns ``CriticalDt(0, found=False)``
    when the scheme is already unstable at ``dt_lo``; ``dt = inf`` when still
    stable at ``dt_hi``.  Monotonicity is spot-checked at ``n_check`` points below
    the critical value.
    """
    lo = 1e-12 * dx * dx if dt_lo is None else dt_lo
    hi = 10.0 * dx if dt_hi is None else dt_hi

    def stable(dt):
        # The necessary condition is the dt -> 0 limit of the growth rate; the
        # per-step tolerance alone would accept any scheme at tiny dt.
        v = stability_scan(setup, spatial, temporal, dx, dt, n_xi)
        return v.stable and v.necessary_condition

    if not stable(lo):
        return CriticalDt(0.0, False, True, (lo, hi))
    if stable(hi):
        return CriticalDt(math.inf, True, True, (lo, hi))
    a, b = math.log(lo), math.log(hi)
    while (math.exp(b) - math.exp(a)) > tol * math.exp(b):
        mid = 0.5 * (a + b)
        if stable(math.exp(mid)):
            a = mid
        else:
            b = mid
    crit = math.exp(a)
    samples = np.exp(np.linspace(math.log(lo), a, n_check + 2)[1:-1])
    monotone = all(stable(float(d)) for d in samples)
    return CriticalDt(crit, True, monotone, (crit, math.exp(b)))


def fit_exponent(dxs, dts):
    """Least-squares slope of log(dt) against log(dx)."""
    slope, _ = np.polyfit(np.log(np.asarray(dxs)), np.log(np.asarray(dts)), 1)
    return float(slope)
