"""Randomised property tests."""
import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eulerkorteweg.ek_solver import SolverConfig, capillary_rhs, semi_discrete_rhs
from eulerkorteweg.hamiltonian_solver import HamiltonianState, grad_hamiltonian, hamiltonian_rhs
from eulerkorteweg.harness.config import RunConfig, dump_config, parse_config
from eulerkorteweg.harness.io import read_csv, write_csv
from eulerkorteweg.hyperbolic_flux import (
    FluxSpec,
    entropy_conservative_flux,
    entropy_potential,
    interface_flux,
    muscl_reconstruct,
    scalar_viscosity_flux,
)
from eulerkorteweg.model import (
    ConservedState,
    conserved_from_entropy_variables,
    convective_flux,
    entropy_variables,
    liu_gollub_model,
    shallow_water_model,
)
from eulerkorteweg.vn_stability import (
    LinearizedSetup,
    SpatialScheme,
    cfl_bound_closed_form,
    stability_scan,
    theta_scheme,
)

MODELS = {
    "sw": shallow_water_model(9.8, 1e-3),
    "lg": liu_gollub_model(0.723, 0.084),
}
FAST = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])

densities = st.floats(0.3, 3.0)
velocities = st.floats(-2.0, 2.0)


@st.composite
def states(draw, n=None):
    n = draw(st.integers(1, 12)) if n is None else n
    rho = draw(arrays(float, n, elements=densities))
    u = draw(arrays(float, n, elements=velocities))
    w = draw(arrays(float, n, elements=velocities))
    return np.stack([rho, rho * u, rho * w])


@FAST
@given(v=states(), name=st.sampled_from(sorted(MODELS)))
def test_entropy_variable_round_trip(v, name):
    m = MODELS[name]
    back = conserved_from_entropy_variables(m, entropy_variables(m, v))
    np.testing.assert_allclose(back, v, rtol=1e-10, atol=1e-12)


@FAST
@given(v=states(), kind=st.sampled_from(["lax_friedrichs", "modified_lf", "rusanov", "hll", "entropy_conservative"]))
def test_fluxes_are_consistent(v, kind):
    m = MODELS["sw"]
    f = interface_flux(m, FluxSpec(kind), v, v, 0.01, 1e-3)
    np.testing.assert_allclose(f, convective_flux(m, v), rtol=1e-12, atol=1e-12)


@FAST
@given(v=states(n=4), scale=st.floats(0.0, 0.2), p=st.floats(0.0, 10.0), seed=st.integers(0, 2**16))
def test_viscosity_matrix_symmetric(v, scale, p, seed):
    m = MODELS["sw"]
    vr = v * (1 + scale * np.random.default_rng(seed).uniform(-1, 1, v.shape))
    vr[0] = np.abs(vr[0]) + 0.1
    q = scalar_viscosity_flux(m, v, vr, p, with_matrix=True).viscosity_matrix_Q
    np.testing.assert_allclose(q, np.swapaxes(q, 1, 2), atol=1e-12 * (1 + np.max(np.abs(q))))


@FAST
@given(v=states(n=3), seed=st.integers(0, 2**16), name=st.sampled_from(sorted(MODELS)))
def test_entropy_conservative_identity(v, seed, name):
    m = MODELS[name]
    zl = entropy_variables(m, v)
    zr = zl * (1 + 0.05 * np.random.default_rng(seed).uniform(-1, 1, zl.shape))
    f = entropy_conservative_flux(m, zl, zr).value
    lhs = np.sum((zr - zl) * f, axis=0)
    rhs = entropy_potential(m, zr) - entropy_potential(m, zl)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-8, atol=1e-9)


@FAST
@given(v=states(n=10))
def test_minmod_faces_bounded_by_neighbours(v):
    vl, vr, _ = muscl_reconstruct(v, "minmod")
    # face k sits between cells k+1 and k+2
    lo = np.minimum(v[:, 1:-2], v[:, 2:-1])
    hi = np.maximum(v[:, 1:-2], v[:, 2:-1])
    tol = 1e-12 * (1 + np.abs(v).max())
    for face in (vl, vr):
        assert np.all(face >= lo - tol) and np.all(face <= hi + tol)


@FAST
@given(v=states(n=16), name=st.sampled_from(sorted(MODELS)))
def test_capillary_work_vanishes_and_mass_telescopes(v, name):
    m = MODELS[name]
    s = ConservedState(0.0, 1.0, v[0], v[1], v[2])
    rhs = capillary_rhs(m, s)
    work = np.sum(s.u * rhs[1] + s.w * rhs[2])
    assert abs(work) <= 1e-11 * (1 + np.sum(np.abs(s.u * rhs[1]) + np.abs(s.w * rhs[2])))
    full = semi_discrete_rhs(m, s, SolverConfig(FluxSpec("rusanov"), dt=1e-3))
    assert abs(np.sum(full[0])) <= 1e-11 * (1 + np.sum(np.abs(full[0])))


@FAST
@given(rho=arrays(float, 12, elements=densities), u=arrays(float, 12, elements=velocities),
       name=st.sampled_from(sorted(MODELS)))
def test_hamiltonian_field_is_energy_neutral(rho, u, name):
    m = MODELS[name]
    s = HamiltonianState(rho, u, 0.07)
    g_rho, g_u = grad_hamiltonian(m, s)
    d_rho, d_u = hamiltonian_rhs(m, s)
    scale = np.abs(g_rho) @ np.abs(d_rho) + np.abs(g_u) @ np.abs(d_u)
    assert abs(g_rho @ d_rho + g_u @ d_u) <= 1e-13 * (1 + scale)


@settings(max_examples=25, deadline=None)
@given(u=st.floats(-1.0, 1.0), c=st.floats(0.5, 2.0), sigma=st.floats(0.1, 2.0),
       kind=st.sampled_from(["lax_friedrichs", "modified_lf", "rusanov"]), theta=st.sampled_from([0.0, 0.25]))
def test_corrected_closed_form_step_is_stable(u, c, sigma, kind, theta):
    s = LinearizedSetup(1.0, u, c, sigma)
    dx = 0.01
    bound = cfl_bound_closed_form(s, kind, theta, dx, corrected=True)
    bound = bound["dt"] if isinstance(bound, dict) else bound
    verdict = stability_scan(s, SpatialScheme(kind), theta_scheme(theta), dx, bound * (1 - 1e-6), n_xi=513)
    assert verdict.stable


@FAST
@given(dx=st.floats(1e-5, 1e-2), end=st.floats(0.1, 10.0), c=st.floats(1.0, 500.0),
       flux=st.sampled_from(["lf", "mlf", "rusanov", "hll", "econs"]), enforce=st.booleans())
def test_config_round_trip(dx, end, c, flux, enforce):
    text = (f"[scenario]\ndx = {dx!r}\nend_time = {end!r}\nsnapshot_times = {end / 2!r}, {end!r}\n"
            f"[solver]\nflux = {flux}\ndt = {c!r}dx2\nenforce_w = {str(enforce).lower()}\n")
    cfg = parse_config(text)
    assert parse_config(dump_config(cfg)) == cfg
    assert cfg.scenario.dx == dx and cfg.scenario.snapshot_times[-1] == end


def test_default_config_round_trip():
    cfg = RunConfig().validate()
    assert parse_config(dump_config(cfg)) == cfg


@FAST
@given(values=arrays(float, (5, 3), elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_csv_floats_round_trip_exactly(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "v.csv"
    write_csv(path, ("a", "b", "c"), values)
    _, cols = read_csv(path)
    np.testing.assert_array_equal(np.stack([cols["a"], cols["b"], cols["c"]], axis=1), values)
