import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abtransport import liouvillian as L
from abtransport.bath import BathSpec, LeadSpec
from abtransport.hamiltonian import RingSpec
from abtransport.presets import fig2_system

phis = st.floats(-np.pi, np.pi)
gammas = st.sampled_from([0.0, 0.5, 1.0, 5.0])
modes = st.sampled_from(["secular", "nonsecular"])


def _random_density(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    rho[0, 1:] = rho[1:, 0] = 0
    rho /= np.trace(rho).real
    return L.vectorize(rho[0, 0], rho[1:, 1:])


def test_vectorization_layout_is_column_major():
    block = np.arange(9).reshape(3, 3) + 0j
    vec = L.vectorize(0.5, block)
    assert vec[0] == 0.5 and vec[1 + 1 + 3 * 2] == block[1, 2]
    p0, back = L.unvectorize(vec)
    assert p0 == 0.5 and np.array_equal(back, block)
    assert L.TRACE_COVECTOR @ vec == pytest.approx(0.5 + 0 + 4 + 8)


def test_superoperator_conventions():
    rng = np.random.default_rng(1)
    a, b, x = (rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)) for _ in range(3))
    vec = x.reshape(-1, order="F")
    assert np.allclose(L.spre(a) @ L.spost(b) @ vec, (a @ x @ b).reshape(-1, order="F"))


@pytest.mark.parametrize("gamma", [0.0, 1.0, 5.0])
def test_particle_number_sectors_decouple(gamma):
    spec = fig2_system(gamma=gamma, phi=0.9)
    pm, coherent, bath, leads = L.assemble_full_space(spec)
    total = coherent + bath + sum(t.loss + t.jump_in + t.jump_out for t in leads)
    dropped = np.setdiff1d(np.arange(L.FULL_DIM), L.RETAINED)
    assert np.max(np.abs(total[np.ix_(dropped, L.RETAINED)])) < 1e-12
    assert np.max(np.abs(total[np.ix_(L.RETAINED, dropped)])) < 1e-12


@given(phi=phis, gamma=gammas, mode=modes)
def test_generator_preserves_trace_and_hermiticity(phi, gamma, mode):
    liou = L.build_liouvillian(fig2_system(gamma=gamma, phi=phi), L.Numerics(mode=mode))
    w = liou.full()
    assert np.max(np.abs(L.TRACE_COVECTOR @ w)) < 1e-12
    rho = _random_density(np.random.default_rng(7))
    p0, block = L.unvectorize(w @ rho)
    assert abs(p0.imag) < 1e-12
    assert np.max(np.abs(block - block.conj().T)) < 1e-12


@given(phi=phis, gamma=gammas, chi=st.floats(-3, 3))
def test_counting_field_is_2pi_periodic(phi, gamma, chi):
    liou = L.build_liouvillian(fig2_system(gamma=gamma, phi=phi))
    assert np.allclose(L.liouvillian_at(liou, (chi + 2 * np.pi, 0.0)), L.liouvillian_at(liou, (chi, 0.0)))


@given(phi=phis)
def test_lead_rates_nonnegative_and_detailed_balanced(phi):
    liou = L.build_liouvillian(fig2_system(gamma=1.0, phi=phi))
    assert np.all(liou.rates_in >= 0) and np.all(liou.rates_out >= 0)
    e = liou.model.eigensystem.energies
    for n, lead in enumerate(liou.spec.leads):
        ratio = liou.rates_in[n] / liou.rates_out[n]
        assert np.allclose(ratio, np.exp(-(e - lead.mu) / lead.temperature), rtol=1e-12, atol=0)


def test_weak_bath_limit_reproduces_the_bare_generator():
    bare = L.build_liouvillian(fig2_system(gamma=0.0, phi=0.4))
    assert np.max(np.abs(bare.bath_part)) == 0
    for gamma in (1e-4, 1e-6):
        weak = L.build_liouvillian(fig2_system(gamma=gamma, phi=0.4))
        assert np.max(np.abs(weak.full() - bare.full())) < 50 * gamma


def test_unit_kappa_keeps_the_bare_hamiltonian():
    spec = fig2_system(gamma=1.0, phi=0.4)
    pm = L.polaron_transform(spec, kappa=1.0)
    assert np.array_equal(pm.h_dressed, pm.h_bare)


def test_polaron_dressing_touches_site_three_bonds_only():
    spec = fig2_system(gamma=5.0, phi=0.3)
    pm = L.polaron_transform(spec)
    ratio = np.divide(pm.h_dressed, pm.h_bare, out=np.ones((3, 3), complex), where=pm.h_bare != 0)
    k = pm.kappa
    expect = np.array([[1, 1, k], [1, 1, k], [k, k, 1]])
    assert np.allclose(ratio, expect)


def test_secular_filter_is_idempotent_and_keeps_populations():
    liou = L.build_liouvillian(fig2_system(gamma=1.0, phi=0.5))
    es = liou.model.eigensystem
    once = L.secular_filter(np.array(liou.w0), es)
    assert np.allclose(L.secular_filter(once, es), once, atol=1e-14)
    e = L.to_eigenbasis(np.array(liou.w0), es)
    f = L.to_eigenbasis(once, es)
    pops = [0] + [1 + k + 3 * k for k in range(3)]
    assert np.allclose(e[np.ix_(pops, pops)], f[np.ix_(pops, pops)], atol=1e-14)


def test_detailed_balance_skew_breaks_the_ratio():
    liou = L.build_liouvillian(fig2_system(phi=0.2), L.Numerics(detailed_balance_skew=0.1))
    e = liou.model.eigensystem.energies
    lead = liou.spec.leads[0]
    assert not np.allclose(liou.rates_in[0] / liou.rates_out[0], np.exp(-(e - lead.mu) / lead.temperature), rtol=1e-6)


def test_generator_arrays_are_read_only():
    liou = L.build_liouvillian(fig2_system())
    with pytest.raises(ValueError):
        liou.w0[0, 0] = 1.0


@pytest.mark.parametrize("kw", [dict(mode="bogus"), dict(lead_frequency="middle")])
def test_numerics_validation(kw):
    with pytest.raises(ValueError):
        L.Numerics(**kw)


def test_system_needs_two_leads():
    with pytest.raises(ValueError):
        L.SystemSpec(ring=RingSpec(), leads=(LeadSpec(),), bath=BathSpec())
