"""Reservoir and dephasing-bath functions.

The dephasing bath couples to the density on site 3 with the super-Ohmic
spectral density ``gamma * w**3 / wc**2 * exp(-w / wc)``.  After the polaron
transformation it enters through

* the renormalization ``kappa = exp(-phi(0) / 2)``, and
* the correlation functions ``kappa**2 * (exp(+-phi(t)) - 1)`` of the
  displacement operators,

with the phase function

    phi(t) = int_0^inf dw/(2 pi) G(w)/w**2 [cos(w t) coth(w / 2T) + s i sin(w t)]

where ``s = -1`` is the thermal (physical) sign and ``s = +1`` reproduces
the sign printed in the original derivation.  Both are supported through
``BathSpec.imag_sign``.

k_B = hbar = 1; energies, rates and temperatures are in units of J.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

QUAD_UPPER = 40.0  # integrate the bath density up to QUAD_UPPER * omega_c
SMALL_OMEGA = 1e-6


class QuadratureError(RuntimeError):
    """Raised when an adaptive quadrature does not reach its tolerance."""


class CoverageError(ValueError):
    """Raised when a correlation table does not cover the decay of C(t)."""


@dataclass(frozen=True)
class BathSpec:
    gamma: float = 0.1
    omega_c: float = 10.0
    temperature: float = 3.0
    imag_sign: int = -1

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"bath coupling gamma must be >= 0, got {self.gamma}")
        if not self.omega_c > 0:
            raise ValueError(f"bath cutoff must be > 0, got {self.omega_c}")
        if not self.temperature > 0:
            raise ValueError(f"bath temperature must be > 0, got {self.temperature}")
        if self.imag_sign not in (-1, 1):
            raise ValueError("imag_sign must be -1 or +1")


@dataclass(frozen=True)
class LeadSpec:
    """Electronic reservoir with a Lorentzian tunneling density."""

    gamma0: float = 0.005
    omega0: float = 2.0
    omega_c_lead: float = 10.0
    mu: float = 0.0
    temperature: float = 3.0

    def __post_init__(self):
        if not self.gamma0 >= 0:
            raise ValueError(f"lead rate gamma0 must be >= 0, got {self.gamma0}")
        if not self.omega_c_lead > 0:
            raise ValueError(f"lead width must be > 0, got {self.omega_c_lead}")
        if not self.temperature > 0:
            raise ValueError(f"lead temperature must be > 0, got {self.temperature}")


# --------------------------------------------------------------------------
# spectral densities and occupation factors


def bath_spectral_density(omega, bath: BathSpec):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("the bath spectral density is one-sided (omega >= 0)")
    wc = bath.omega_c
    out = bath.gamma * omega**3 / wc**2 * np.exp(-omega / wc)
    return float(out) if out.ndim == 0 else out


def lead_spectral_density(omega, lead: LeadSpec):
    omega = np.asarray(omega, dtype=float)
    wc = lead.omega_c_lead
    out = lead.gamma0 * wc**2 / ((omega - lead.omega0) ** 2 + wc**2)
    return float(out) if out.ndim == 0 else out


def fermi(energy, lead: LeadSpec):
    x = (lead.mu - np.asarray(energy, dtype=float)) / lead.temperature
    out = special.expit(x)
    return float(out) if np.ndim(out) == 0 else out


def lead_rates(energy, lead: LeadSpec):
    """Return ``(Gamma f, Gamma (1 - f))`` at the given energies."""
    gam = lead_spectral_density(energy, lead)
    x = (lead.mu - np.asarray(energy, dtype=float)) / lead.temperature
    return gam * special.expit(x), gam * special.expit(-x)


# --------------------------------------------------------------------------
# polaron renormalization


def _reorg_integrand(omega: float, bath: BathSpec) -> float:
    # G(w)/w**2 * coth(w / 2T) = gamma/wc**2 * w exp(-w/wc) coth(w/2T)
    wc, temp = bath.omega_c, bath.temperature
    if omega < SMALL_OMEGA:
        w_coth = 2.0 * temp + omega**2 / (6.0 * temp)
    else:
        w_coth = omega / math.tanh(omega / (2.0 * temp))
    return bath.gamma / wc**2 * w_coth * math.exp(-omega / wc)


def _quad(func, a, b, *, epsrel=1e-10, epsabs=0.0, what="integral", **kw):
    res = integrate.quad(func, a, b, epsrel=epsrel, epsabs=epsabs, limit=400, full_output=1, **kw)
    value, err = res[0], res[1]
    if len(res) > 3:
        # quad attached a warning; only fail if the error estimate is really off
        tol = max(epsabs, epsrel * abs(value), 1e-13)
        if err > 100 * tol:
            raise QuadratureError(f"{what}: no convergence (value={value:.6e}, error={err:.2e}): {res[3]}")
    return value


def polaron_exponent(bath: BathSpec) -> float:
    """``phi(0) = int dw/(2 pi) G(w)/w**2 coth(w/2T)``, so that kappa = exp(-phi(0)/2)."""
    if bath.gamma == 0:
        return 0.0
    upper = QUAD_UPPER * bath.omega_c
    brk = min(bath.omega_c, upper)
    total = _quad(_reorg_integrand, 0.0, brk, args=(bath,), what="kappa")
    total += _quad(_reorg_integrand, brk, upper, args=(bath,), what="kappa")
    return total / (2.0 * math.pi)


def polaron_kappa(bath: BathSpec) -> float:
    return math.exp(-0.5 * polaron_exponent(bath))


# --------------------------------------------------------------------------
# phase function phi(t)


def phi_correlation(t: float, bath: BathSpec) -> complex:
    """Polaron phase function evaluated by adaptive (Fourier) quadrature."""
    if t < 0:
        raise ValueError("phi_correlation is defined for t >= 0")
    if bath.gamma == 0:
        return 0j
    if t == 0:
        return complex(polaron_exponent(bath))
    wc = bath.omega_c
    upper = QUAD_UPPER * wc
    re = _quad(_reorg_integrand, 0.0, upper, args=(bath,), weight="cos", wvar=t, epsabs=1e-14, what="Re phi")

    def sin_part(w):
        return bath.gamma / wc**2 * w * math.exp(-w / wc)

    im = _quad(sin_part, 0.0, upper, weight="sin", wvar=t, epsabs=1e-14, what="Im phi")
    return complex(re, bath.imag_sign * im) / (2.0 * math.pi)


_BERNOULLI_TAIL = (1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0)


def trigamma(z):
    """Trigamma function for complex arguments with ``Re z > 0``.

    scipy.special.polygamma only accepts real arguments, so the recurrence
    ``psi1(z) = psi1(z + 1) + 1/z**2`` shifts the argument into the region
    where the asymptotic Bernoulli series is accurate to machine precision.
    """
    z = np.asarray(z, dtype=complex)
    acc = np.zeros_like(z)
    w = z.copy()
    shift = 20.0
    while True:
        small = np.abs(w) < shift
        if not small.any():
            break
        acc[small] += 1.0 / w[small] ** 2
        w[small] += 1.0
    inv = 1.0 / w
    inv2 = inv * inv
    series = np.zeros_like(w)
    power = inv * inv2  # 1/w**3
    for b in _BERNOULLI_TAIL:
        series += b * power
        power = power * inv2
    return acc + inv + 0.5 * inv2 + series


def phi_closed_form(t, bath: BathSpec):
    """Vectorized phase function from the exact series for the s=3 density.

    Uses ``coth(x/2T) = 1 + 2 sum_k exp(-k x / T)`` term by term, which sums
    to a trigamma function.  Agrees with ``phi_correlation`` to quadrature
    accuracy and is used for building correlation tables.
    """
    t = np.asarray(t, dtype=float)
    if bath.gamma == 0:
        return np.zeros(t.shape, dtype=complex)
    a = 1.0 / bath.omega_c
    temp = bath.temperature
    pref = bath.gamma / (2.0 * math.pi * bath.omega_c**2)
    base = 1.0 / (a - 1j * t) ** 2
    re = base.real + 2.0 * temp**2 * trigamma(1.0 + temp * (a - 1j * t)).real
    im = base.imag
    return pref * (re + 1j * bath.imag_sign * im)


# --------------------------------------------------------------------------
# displacement-operator correlation functions


def polaron_correlation(phi_m, phi_n, lam_m: int, lam_n: int, kappas: float):
    """``kappas * (exp(lam_m phi_m(t) + lam_n phi_n(t)) - 1)``.

    ``lam_m``, ``lam_n`` are the sign factors ``delta_{m,n'} - delta_{m,m'}``
    of the two sites in the pair; ``phi_m``/``phi_n`` the phase functions of
    those sites at the same time argument.  A site without a polaron cloud
    contributes ``phi = 0``.
    """
    expo = lam_m * np.asarray(phi_m) + lam_n * np.asarray(phi_n)
    if lam_m == 0 and lam_n == 0:
        return np.zeros(np.shape(expo), dtype=complex)
    return kappas * np.expm1(expo)


@dataclass(frozen=True, eq=False)
class CorrelationTable:
    """Correlation functions sampled on Gauss-Legendre panel nodes.

    ``values[lam]`` holds ``C(t)`` for the channel with exponent sign ``lam``
    (``+1`` for ``<e^{S(t)} e^{-S}>``, ``-1`` for ``<e^{S(t)} e^{S}>``).
    ``tail_power`` marks an algebraic tail ``C(t) ~ t**-p`` beyond
    ``tau_max`` that ``half_fourier`` integrates analytically.
    """

    times: np.ndarray
    weights: np.ndarray
    values: dict
    tau_max: float
    panel_width: float
    tail_power: float | None = None

    def channel(self, lam):
        if lam not in self.values:
            raise KeyError(f"channel {lam} not in table (have {sorted(self.values)})")
        return self.values[lam]

    def c_zero(self, lam) -> complex:
        return complex(self.values[lam][0])

    def to_rows(self):
        """Rows ``(tau, re_C, im_C, ...)`` for debugging dumps."""
        chans = sorted(self.values)
        cols = [self.times]
        for lam in chans:
            cols += [self.values[lam].real, self.values[lam].imag]
        header = ["tau"] + [f"{p}_C[{lam:+d}]" for lam in chans for p in ("re", "im")]
        return header, np.column_stack(cols)


def panel_nodes(tau_max: float, panel_width: float, order: int = 8, first: float = 1e-3):
    """Gauss-Legendre nodes on a geometric-then-linear panel partition of [0, tau_max]."""
    edges = [0.0]
    w = min(first, panel_width)
    while edges[-1] + w < panel_width and w < panel_width:
        edges.append(edges[-1] + w)
        w *= 2.0
    n_lin = max(1, int(math.ceil((tau_max - edges[-1]) / panel_width)))
    edges.extend(np.linspace(edges[-1], tau_max, n_lin + 1)[1:].tolist())
    edges = np.asarray(edges)
    x, wx = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x[None, :] + 1.0)).ravel()
    weights = (half * wx[None, :]).ravel()
    # prepend t = 0 with zero weight so C(0) is available for coverage checks
    return np.concatenate([[0.0], nodes]), np.concatenate([[0.0], weights])


def table_from_function(func, tau_max: float, panel_width: float = 0.1, order: int = 8, channels=(0,), tail_power=None):
    """Tabulate ``func(t, lam)`` for test kernels and ad-hoc correlation functions."""
    times, weights = panel_nodes(tau_max, panel_width, order)
    values = {lam: np.asarray(func(times, lam), dtype=complex) for lam in channels}
    return CorrelationTable(times, weights, values, tau_max, panel_width, tail_power)


def _tail_integral(c_end: complex, tau_max: float, omega: float, power: float) -> complex:
    # int_T^inf exp(-i w t) c_end (T/t)**p dt for p = 2, via E_2(z) = e^{-z} - z E_1(z)
    if power != 2:
        raise NotImplementedError("only 1/t**2 tails are supported")
    if omega == 0:
        return c_end * tau_max
    z = 1j * omega * tau_max
    e2 = np.exp(-z) - z * special.exp1(z)
    return c_end * tau_max * e2


def half_fourier(table: CorrelationTable, omega: float, lam=0, coverage_tol: float = 1e-6) -> complex:
    """``int_0^inf exp(-i omega t) C(t) dt`` by panel-wise Gauss-Legendre quadrature."""
    values = table.channel(lam)
    c0 = abs(values[0])
    c_end = values[-1]
    if abs(omega) > 0 and table.panel_width > 0.1 / abs(omega) * (1 + 1e-12):
        raise CoverageError(
            f"panel width {table.panel_width} does not resolve omega={omega}; need <= {0.1 / abs(omega):.3g}"
        )
    if c0 > 0 and abs(c_end) > coverage_tol * c0:
        # required range from the observed decay law
        if table.tail_power:
            need = table.tau_max * (abs(c_end) / (coverage_tol * c0)) ** (1.0 / table.tail_power)
        else:
            need = float("nan")
        raise CoverageError(
            f"correlation table ends at tau_max={table.tau_max} with |C|/|C(0)|={abs(c_end) / c0:.2e}; "
            f"required tau_max ~ {need:.3g}"
        )
    total = np.sum(table.weights * np.exp(-1j * omega * table.times) * values)
    if table.tail_power:
        total += _tail_integral(c_end, table.tau_max, omega, table.tail_power)
    return complex(total)


def half_fourier_many(table: CorrelationTable, omegas, lam=0, coverage_tol: float = 1e-6) -> np.ndarray:
    """Vectorized ``half_fourier`` over an array of frequencies."""
    return half_fourier_channels(table, omegas, (lam,), coverage_tol)[lam]


def half_fourier_channels(table: CorrelationTable, omegas, lams, coverage_tol: float = 1e-6) -> dict:
    """``half_fourier_many`` for several channels sharing one phase matrix."""
    omegas = np.asarray(omegas, dtype=float)
    flat = omegas.ravel()
    uniq, inv = np.unique(np.round(flat, 13), return_inverse=True)
    if uniq.size:
        # validates coverage and resolution once, at the extreme frequency
        for lam in lams:
            half_fourier(table, float(uniq[np.argmax(np.abs(uniq))]), lam, coverage_tol)
    stacked = np.stack([table.weights * table.channel(lam) for lam in lams], axis=1)
    out = np.exp(-1j * np.outer(uniq, table.times)) @ stacked
    result = {}
    for k, lam in enumerate(lams):
        col = out[:, k]
        if table.tail_power:
            end = table.channel(lam)[-1]
            col = col + np.array([_tail_integral(end, table.tau_max, w, table.tail_power) for w in uniq])
        result[lam] = col[inv].reshape(omegas.shape)
    return result


@functools.lru_cache(maxsize=64)
def bath_correlation_table(bath: BathSpec, omega_max: float = 10.0, tol: float = 1e-7, order: int = 8) -> CorrelationTable:
    """Correlation table of the polaron bath for both exponent signs.

    The panel width obeys ``min(0.1, 0.1 / omega_max)`` and the range is
    doubled until ``|C(tau_max)| < tol * |C(0)|``; the remaining algebraic
    ``t**-2`` tail is integrated analytically.
    """
    kappa2 = math.exp(-polaron_exponent(bath))
    width = min(0.1, 0.1 / omega_max) if omega_max > 0 else 0.1
    tau_max = 64.0
    while True:
        t_end = np.array([tau_max])
        phi_end = phi_closed_form(t_end, bath)
        phi0 = phi_closed_form(np.array([0.0]), bath)
        ok = True
        for lam in (1, -1):
            c0 = abs(kappa2 * np.expm1(lam * phi0[0]))
            ce = abs(kappa2 * np.expm1(lam * phi_end[0]))
            if c0 > 0 and ce > tol * c0:
                ok = False
        if ok or tau_max > 1e6:
            break
        tau_max *= 2.0
    times, weights = panel_nodes(tau_max, width, order)
    phi = phi_closed_form(times, bath)
    values = {lam: kappa2 * np.expm1(lam * phi) for lam in (1, -1)}
    for v in values.values():
        v.flags.writeable = False
    return CorrelationTable(times, weights, values, tau_max, width, tail_power=2)


# --------------------------------------------------------------------------
# lead correlation transforms


def _lead_shift(energy: float, lead: LeadSpec, occupied: bool) -> float:
    # principal value int dnu/(2 pi) gamma_sigma(nu) / (E - nu)
    span = 400.0 * lead.omega_c_lead + abs(energy - lead.omega0)
    lo, hi = lead.omega0 - span, lead.omega0 + span

    def dens(nu):
        gam = lead_spectral_density(nu, lead)
        x = (lead.mu - nu) / lead.temperature
        return gam * (special.expit(x) if occupied else special.expit(-x))

    pv = _quad(dens, lo, hi, weight="cauchy", wvar=energy, epsrel=1e-9, epsabs=1e-14, what="lead Lamb shift")
    return -pv / (2.0 * math.pi)


def lead_half_fourier(energy: float, lead: LeadSpec, process: int, lamb_shift: bool = False) -> complex:
    """Half-sided transform of the lead correlation for tunneling in (+1) or out (-1).

    The real part is ``Gamma f / 2`` (in) or ``Gamma (1 - f) / 2`` (out); the
    optional imaginary part is the principal-value level shift.
    """
    gin, gout = lead_rates(energy, lead)
    rate = gin if process > 0 else gout
    val = 0.5 * float(rate)
    if not lamb_shift:
        return complex(val)
    return complex(val, _lead_shift(float(energy), lead, occupied=process > 0))
