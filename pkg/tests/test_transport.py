from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from abtransport import transport as T
from abtransport.liouvillian import Numerics, build_liouvillian, vectorize
from abtransport.presets import fig2_system, fig6_system

DEFAULT = Numerics()
SECULAR = Numerics(mode="secular")
NO_LAMB = Numerics(bath_lamb_shift=False)
phis = st.floats(-np.pi, np.pi)
gammas = st.sampled_from([0.0, 0.1, 1.0, 5.0])


def _solve(spec, numerics=DEFAULT):
    liou = build_liouvillian(spec, numerics)
    return liou, T.steady_state(liou)


def _equal_bias(spec):
    return replace(spec, leads=(spec.leads[0], replace(spec.leads[1], mu=spec.leads[0].mu)))


@given(phi=phis, gamma=gammas, numerics=st.sampled_from([DEFAULT, SECULAR]))
def test_steady_state_invariants(phi, gamma, numerics):
    liou, ss = _solve(fig2_system(gamma=gamma, phi=phi), numerics)
    assert ss.p0 + ss.p_lambda.sum() == pytest.approx(1.0, abs=1e-10)
    assert ss.residual < 1e-12
    assert ss.hermiticity_error < 1e-10
    assert np.linalg.eigvalsh(ss.coherences).min() > -1e-10
    i1 = T.stationary_current(liou, ss, 1)
    assert abs(i1 + T.stationary_current(liou, ss, 2)) < 1e-12


def test_steady_state_matches_long_time_propagation():
    liou, ss = _solve(fig2_system(gamma=1.0, phi=0.7))
    vacuum = vectorize(1.0, np.zeros((3, 3)))
    late = expm(liou.full() * 1e3 / 0.005) @ vacuum  # 1e3 of the slowest (lead) time scale
    assert np.max(np.abs(late - ss.rho)) < 1e-8 * np.max(np.abs(ss.rho))


def test_single_lead_gives_no_current():
    spec = fig2_system(gamma=0.0, phi=0.7)
    spec = replace(spec, leads=(replace(spec.leads[0], mu=20.0), replace(spec.leads[1], gamma0=0.0)))
    liou, ss = _solve(spec)
    assert ss.p0 < 0.01
    assert abs(T.transport_current(liou, ss)) < 1e-12


@pytest.mark.parametrize("numerics", [SECULAR, NO_LAMB, DEFAULT], ids=["secular", "no-bath-lamb-shift", "default"])
@pytest.mark.parametrize("gamma", [0.0, 1.0])
def test_equilibrium_current_vanishes(numerics, gamma):
    spec = _equal_bias(fig2_system(gamma=gamma, phi=0.7))
    assert abs(T.current_at(spec, numerics)) < 1e-12


def test_kernel_check_reports_singular_values():
    spec = fig2_system(gamma=0.0)
    spec = replace(spec, leads=tuple(replace(ld, gamma0=0.0) for ld in spec.leads))
    liou = build_liouvillian(spec)
    with pytest.raises(T.NumericError, match="singular values"):
        T.steady_state(liou)


def test_zero_flux_current_is_a_local_minimum_without_bath():
    phis = np.linspace(-np.pi, np.pi, 401)
    cur = np.array([T.current_at(fig2_system(gamma=0.0, phi=p)) for p in phis[190:211]])
    assert cur[10] < cur[9] and cur[10] < cur[11]
    assert np.argmin(cur) == 10


@given(phi=phis, gamma=gammas)
def test_observables_are_2pi_periodic(phi, gamma):
    a = T.current_at(fig2_system(gamma=gamma, phi=phi))
    b = T.current_at(fig2_system(gamma=gamma, phi=phi + 2 * np.pi))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-18)


@pytest.mark.parametrize("numerics", [SECULAR, DEFAULT], ids=["secular", "default"])
@pytest.mark.parametrize("gamma", [0.0, 1.0])
def test_phase_rigidity_of_the_current(numerics, gamma):
    cur = [T.current_at(fig2_system(gamma=gamma, phi=s * 1.1), numerics) for s in (1, -1)]
    assert abs(cur[0] - cur[1]) < 1e-8 * max(abs(c) for c in cur)


# --------------------------------------------------------------------------
# counting statistics and noise


@pytest.mark.parametrize("gamma", [0.0, 1.0, 5.0])
def test_mean_current_from_tilted_generator(gamma):
    liou, ss = _solve(fig2_system(gamma=gamma, phi=0.6))
    assert T.mean_current_fcs(liou, 1) == pytest.approx(T.stationary_current(liou, ss, 1), rel=1e-7)


@pytest.mark.parametrize("gamma", [0.0, 1.0, 5.0])
@pytest.mark.parametrize("n", [1, 2])
def test_full_noise_at_zero_frequency_matches_counting_statistics(gamma, n):
    liou, ss = _solve(fig2_system(gamma=gamma, phi=0.6))
    s0 = T.noise_spectrum(liou, ss, n, [0.0], variant="full").values[0]
    assert s0 == pytest.approx(T.zero_frequency_noise_fcs(liou, n), rel=1e-4)


@given(phi=phis, w=st.floats(0.0, 8.0), variant=st.sampled_from(["nojump", "full"]))
def test_noise_is_even_in_frequency(phi, w, variant):
    liou, ss = _solve(fig2_system(gamma=1.0, phi=phi))
    vals = T.noise_spectrum(liou, ss, 2, [w, -w], variant=variant).values
    assert vals[0] == pytest.approx(vals[1], rel=1e-12)


@pytest.mark.parametrize("variant", ["nojump", "full"])
def test_noise_reaches_shot_plateau(variant):
    liou, ss = _solve(fig2_system(gamma=1.0, phi=0.3))
    ns = T.noise_spectrum(liou, ss, 2, [1e4], variant=variant)
    assert ns.values[0] == pytest.approx(ns.plateau, rel=1e-6)
    assert ns.plateau > 0


def test_noise_rejects_unknown_variant():
    liou, ss = _solve(fig2_system())
    with pytest.raises(ValueError):
        T.noise_spectrum(liou, ss, 1, [0.0], variant="bogus")


# --------------------------------------------------------------------------
# waiting times and transients


@pytest.mark.parametrize("gamma", [0.0, 1.0, 5.0])
def test_waiting_time_normalization_and_quadrature(gamma):
    liou, ss = _solve(fig6_system(gamma=gamma, phi=0.5))
    taus = np.concatenate([np.linspace(0, 20, 4001), np.linspace(20, 4e4, 800001)[1:]])
    grid = T.waiting_time(liou, ss, 1, taus)
    assert grid.normalization[1] == pytest.approx(1.0, abs=1e-6)
    total = T.integrate_waiting(grid, (1, 1)) + T.integrate_waiting(grid, (1, 2))
    assert total == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("numerics", [SECULAR, DEFAULT], ids=["secular", "default"])
@pytest.mark.parametrize("phi", [0.0, np.pi / 2, -np.pi / 2])
def test_waiting_time_distribution_is_nonnegative(numerics, phi):
    liou, ss = _solve(fig6_system(gamma=0.0, phi=phi), numerics)
    grid = T.waiting_time(liou, ss, 1, T.default_taus())
    assert min(grid.p[(1, 1)].min(), grid.p[(1, 2)].min()) >= -1e-12


def test_waiting_time_propagator_paths_agree():
    liou, ss = _solve(fig6_system(gamma=1.0, phi=0.4))
    taus = np.array([0.0, 0.3, 2.0, 7.5])
    x = liou.jump(1, 1) @ ss.rho
    fast = T.Propagator(liou.w0).apply(taus, x)
    slow = T.Propagator(liou.w0, cond_limit=0.0).apply(taus, x)
    assert np.allclose(fast, slow, atol=1e-12)


def test_strong_bath_confines_flux_dependence_to_short_waits():
    taus = np.linspace(0, 20, 2001)
    p = {}
    for phi in (np.pi / 2, -np.pi / 2):
        liou, ss = _solve(fig6_system(gamma=5.0, phi=phi))
        p[phi] = T.waiting_time(liou, ss, 1, taus).p[(1, 2)]
    diff = np.abs(p[np.pi / 2] - p[-np.pi / 2])
    assert diff[taus > 4].max() < diff[taus < 4].max()


def test_waiting_time_needs_an_entry_rate():
    spec = fig6_system(gamma=0.0, phi=0.3)
    spec = replace(spec, leads=(replace(spec.leads[0], gamma0=0.0), spec.leads[1]))
    spec = replace(spec, leads=(spec.leads[0], replace(spec.leads[1], mu=20.0)))
    liou, ss = _solve(spec)
    with pytest.raises(T.NumericError):
        T.waiting_time(liou, ss, 1, [0.0, 1.0])


def test_injection_lands_on_site_one():
    liou, ss = _solve(fig6_system(gamma=0.0, phi=0.3))
    tr = T.transient_occupations(liou, ss, 1, [0.0])
    assert tr.sites[0] == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)


@pytest.mark.parametrize("phi,first,second", [(np.pi / 2, 1, 2), (-np.pi / 2, 2, 1)])
def test_flux_steers_the_injected_particle(phi, first, second):
    taus = np.linspace(0, 10, 1001)
    liou, ss = _solve(fig6_system(gamma=0.0, phi=phi))
    sites = T.transient_occupations(liou, ss, 1, taus).sites
    arrival = [taus[np.argmax(sites[:, k] > 0.1)] for k in range(3)]
    assert arrival[first] < arrival[second]


@pytest.mark.parametrize("numerics", [SECULAR, DEFAULT], ids=["secular", "default"])
def test_total_occupation_never_increases(numerics):
    taus = np.linspace(0, 10, 1001)
    liou, ss = _solve(fig6_system(gamma=0.0, phi=np.pi / 2), numerics)
    total = T.transient_occupations(liou, ss, 1, taus).total
    assert np.max(np.diff(total)) <= 1e-12


# --------------------------------------------------------------------------
# diagnostics


def test_eigen_occupations_sum_to_one():
    liou, ss = _solve(fig2_system(gamma=1.0, phi=0.2))
    occ = T.eigen_occupations(liou, ss)
    assert occ.shape == (4,) and occ.sum() == pytest.approx(1.0)


def test_bath_rates_vanish_without_bath():
    liou = build_liouvillian(fig6_system(gamma=0.0, phi=0.3))
    assert np.all(T.bath_transition_rates(liou) == 0)


def test_bath_rates_conserve_population():
    g = T.bath_transition_rates(build_liouvillian(fig6_system(gamma=3.0, phi=0.3)))
    assert np.allclose(g.sum(axis=0), 0.0, atol=1e-12)
    off = g[~np.eye(3, dtype=bool)]
    assert np.all(off >= 0)


def test_bath_rates_flux_dependence_at_moderate_coupling():
    g = {phi: T.bath_transition_rates(build_liouvillian(fig6_system(gamma=3.0, phi=phi))) for phi in (0.0, np.pi / 2, np.pi)}
    g12 = [g[p][0, 1] for p in (0.0, np.pi / 2, np.pi)]
    g23 = [g[p][1, 2] for p in (0.0, np.pi / 2, np.pi)]
    assert g12[0] < g12[1] < g12[2]
    assert g23[0] > g23[1] > g23[2]


def test_bath_rate_between_outer_levels_is_small():
    g = T.bath_transition_rates(build_liouvillian(fig6_system(gamma=3.0, phi=np.pi / 2)))
    assert g[0, 2] < min(g[0, 1], g[1, 2])


# --------------------------------------------------------------------------
# figure of merit


def test_field_conversion():
    assert T.field_from_phase(0.5, 1e-12) == pytest.approx(0.5 * 2.0678e-15 / np.pi / 1e-12, rel=1e-3)


def test_figure_of_merit_is_a_derivative():
    phis = np.linspace(-np.pi, np.pi, 201)
    spec = fig2_system(gamma=0.1)
    fom = T.figure_of_merit(spec, 1e-12, 1e4, phis)
    k = 120
    slope = (fom.current_si[k + 1] - fom.current_si[k - 1]) / (fom.field[k + 1] - fom.field[k - 1])
    assert fom.merit[k] == pytest.approx(slope, rel=1e-12)
    assert np.isnan(fom.merit[0]) and np.isnan(fom.merit[-1])


def test_figure_of_merit_rejects_coarse_grid():
    with pytest.raises(T.NumericError):
        T.figure_of_merit(fig2_system(gamma=0.0), 1e-12, 1e4, np.linspace(-np.pi, np.pi, 9))
