import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abtransport import bath as B

BATH = B.BathSpec(gamma=5.0, omega_c=10.0, temperature=5.0)


def test_kappa_reference_value():
    assert B.polaron_kappa(BATH) == pytest.approx(0.557741, abs=1e-6)


def test_kappa_against_arbitrary_precision():
    g, wc, T = BATH.gamma, BATH.omega_c, BATH.temperature
    f = lambda w: g / wc**2 * w * mpmath.coth(w / (2 * T)) * mpmath.exp(-w / wc)
    ref = mpmath.exp(-mpmath.quad(f, [0, wc, mpmath.inf]) / (4 * mpmath.pi))
    assert B.polaron_kappa(BATH) == pytest.approx(float(ref), rel=1e-10)


def test_no_coupling_means_no_dressing():
    assert B.polaron_kappa(B.BathSpec(gamma=0.0)) == 1.0
    assert np.all(B.phi_closed_form(np.linspace(0, 5, 7), B.BathSpec(gamma=0.0)) == 0)


@given(g1=st.floats(0.0, 8.0), g2=st.floats(0.0, 8.0), T=st.floats(0.5, 10.0))
def test_kappa_decreases_with_coupling(g1, g2, T):
    lo, hi = sorted((g1, g2))
    k_lo = B.polaron_kappa(B.BathSpec(gamma=lo, temperature=T))
    k_hi = B.polaron_kappa(B.BathSpec(gamma=hi, temperature=T))
    assert 0 < k_hi <= k_lo + 1e-15 <= 1 + 1e-15


@given(t1=st.floats(0.5, 10.0), t2=st.floats(0.5, 10.0))
def test_kappa_decreases_with_temperature(t1, t2):
    lo, hi = sorted((t1, t2))
    assert B.polaron_kappa(B.BathSpec(gamma=2.0, temperature=hi)) <= B.polaron_kappa(B.BathSpec(gamma=2.0, temperature=lo)) + 1e-15


@pytest.mark.parametrize("t", [0.0, 0.05, 0.3, 1.0, 4.0, 20.0])
@pytest.mark.parametrize("imag_sign", [-1, 1])
def test_phase_function_series_matches_quadrature(t, imag_sign):
    bath = B.BathSpec(gamma=2.0, omega_c=10.0, temperature=3.0, imag_sign=imag_sign)
    closed = complex(B.phi_closed_form(np.array([t]), bath)[0])
    assert closed == pytest.approx(B.phi_correlation(t, bath), rel=1e-8, abs=1e-11)


def test_phase_function_at_origin_is_the_exponent():
    closed = complex(B.phi_closed_form(np.array([0.0]), BATH)[0])
    assert closed.imag == 0
    assert closed.real == pytest.approx(B.polaron_exponent(BATH), rel=1e-10)


@given(x=st.complex_numbers(min_magnitude=0.5, max_magnitude=40).filter(lambda z: z.real > 0.5))
def test_trigamma_against_mpmath(x):
    assert complex(B.trigamma(np.array([x]))[0]) == pytest.approx(complex(mpmath.polygamma(1, x)), rel=1e-12)


def test_half_fourier_of_exponential():
    a = 1.3
    table = B.table_from_function(lambda t, lam: np.exp(-a * t), tau_max=40.0, panel_width=0.02)
    for w in (0.0, 0.7, -2.0, 4.5):
        assert B.half_fourier(table, w) == pytest.approx(1.0 / (a + 1j * w), rel=1e-10)
    many = B.half_fourier_many(table, np.array([[0.7, -2.0]]))
    assert many.shape == (1, 2)
    assert many[0, 1] == pytest.approx(1.0 / (a - 2j), rel=1e-10)


def test_half_fourier_with_algebraic_tail():
    # 1/(1+t)^2 ~ t^-2: the analytic tail must carry what the table misses
    f = lambda t, lam: 1.0 / (1.0 + t) ** 2
    table = B.table_from_function(f, tau_max=200.0, panel_width=0.02, tail_power=2)
    w = 0.8
    ref = complex(mpmath.quadosc(lambda t: mpmath.exp(-1j * w * t) / (1 + t) ** 2, [0, mpmath.inf], omega=w))
    assert B.half_fourier(table, w, coverage_tol=1.0) == pytest.approx(ref, rel=1e-4)


def test_half_fourier_refuses_unresolved_frequency():
    table = B.table_from_function(lambda t, lam: np.exp(-t), tau_max=40.0, panel_width=0.1)
    with pytest.raises(B.CoverageError):
        B.half_fourier(table, 5.0)


def test_half_fourier_refuses_truncated_table():
    table = B.table_from_function(lambda t, lam: np.exp(-0.01 * t), tau_max=10.0, panel_width=0.02)
    with pytest.raises(B.CoverageError, match="tau_max"):
        B.half_fourier(table, 0.5)


def test_bath_table_channels_and_decay():
    table = B.bath_correlation_table(BATH, 5.0)
    kappa2 = B.polaron_kappa(BATH) ** 2
    phi0 = B.polaron_exponent(BATH)
    assert table.c_zero(1) == pytest.approx(kappa2 * math.expm1(phi0))
    assert table.c_zero(-1) == pytest.approx(kappa2 * math.expm1(-phi0))
    for lam in (1, -1):
        assert abs(table.channel(lam)[-1]) < 1e-7 * abs(table.c_zero(lam))


def test_polaron_correlation_reference_values():
    assert B.polaron_correlation(0.3, 0.2, 1, 1, 0.5) == pytest.approx(0.5 * math.expm1(0.5))
    assert B.polaron_correlation(0.3, 0.2, 0, 0, 0.5) == 0


def test_lead_density_reference_points():
    lead = B.LeadSpec(gamma0=0.005, omega0=2.0, omega_c_lead=10.0)
    assert B.lead_spectral_density(2.0, lead) == pytest.approx(0.005)
    assert B.lead_spectral_density(12.0, lead) == pytest.approx(0.0025)
    assert B.lead_spectral_density(3.0, lead) == pytest.approx(0.005 * 100 / 101)


@given(e=st.floats(-20, 20), mu=st.floats(-5, 5), T=st.floats(0.1, 10))
def test_lead_rates_detailed_balance(e, mu, T):
    lead = B.LeadSpec(mu=mu, temperature=T)
    gin, gout = B.lead_rates(e, lead)
    assert gin + gout == pytest.approx(B.lead_spectral_density(e, lead), rel=1e-12)
    if gin > 1e-250 and gout > 1e-250:
        assert math.log(gin / gout) == pytest.approx(-(e - mu) / T, rel=1e-10, abs=1e-10)


def test_lead_half_fourier_halves_the_rate():
    lead = B.LeadSpec(mu=3.5)
    gin, gout = B.lead_rates(3.0, lead)
    assert B.lead_half_fourier(3.0, lead, +1) == pytest.approx(gin / 2)
    assert B.lead_half_fourier(3.0, lead, -1) == pytest.approx(gout / 2)
    shifted = B.lead_half_fourier(3.0, lead, +1, lamb_shift=True)
    assert shifted.real == pytest.approx(gin / 2) and np.isfinite(shifted.imag)


@pytest.mark.parametrize("kw", [dict(gamma=-1), dict(omega_c=0), dict(temperature=0), dict(imag_sign=0)])
def test_bath_spec_validation(kw):
    with pytest.raises(ValueError):
        B.BathSpec(**kw)


@given(t=st.floats(0.0, 50.0), gamma=st.floats(0.1, 8.0), T=st.floats(0.5, 10.0))
def test_correlation_reverses_to_its_conjugate(t, gamma, T):
    bath = B.BathSpec(gamma=gamma, temperature=T)
    ph = B.phi_closed_form(np.array([t, -t]), bath)
    assert ph[1] == pytest.approx(np.conj(ph[0]), rel=1e-12, abs=1e-15)
    k2 = B.polaron_kappa(bath) ** 2
    for lam in (1, -1):
        c = B.polaron_correlation(ph, 0.0, lam, 0, k2)
        assert c[1] == pytest.approx(np.conj(c[0]), rel=1e-12, abs=1e-15)


def test_phase_function_decays():
    assert abs(B.phi_correlation(1e3, BATH)) < 1e-6 * B.polaron_exponent(BATH)
