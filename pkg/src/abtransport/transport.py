"""Stationary and time-resolved transport observables of the ring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants, integrate, linalg

from .liouvillian import (
    DIM,
    TRACE_COVECTOR,
    Liouvillian,
    Numerics,
    SystemSpec,
    build_liouvillian,
    liouvillian_at,
    to_eigenbasis,
    unvectorize,
)

HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-10
KERNEL_GAP = 1e-10
EXPM_COND_LIMIT = 1e8
NOISE_VARIANTS = ("nojump", "full")

# flux quantum h/2e and the phase-to-field scale hbar/(e A) for A = 1 m^2
FLUX_QUANTUM = constants.h / (2.0 * constants.e)
HBAR_OVER_E = constants.hbar / constants.e


class NumericError(RuntimeError):
    """A linear-algebra step failed or a numerical invariant was violated."""


@dataclass(frozen=True, eq=False)
class SteadyState:
    rho: np.ndarray
    p0: float
    p_lambda: np.ndarray
    coherences: np.ndarray  # single-particle block in the eigenbasis
    residual: float
    hermiticity_error: float = 0.0  # before symmetrization

    @property
    def block(self) -> np.ndarray:
        return unvectorize(self.rho)[1]

    def site_populations(self) -> np.ndarray:
        return np.real(np.diag(self.block))

    def min_eigenvalue(self) -> float:
        return float(min(self.p0, np.linalg.eigvalsh(self.block).min()))


def _kernel_check(w: np.ndarray):
    sv = linalg.svdvals(w)
    smallest = np.sort(sv)[:2]
    scale = max(1.0, float(sv.max()))
    if smallest[1] < KERNEL_GAP * scale:
        raise NumericError(f"generator kernel is not one-dimensional; smallest singular values {smallest[0]:.3e}, {smallest[1]:.3e}")
    return smallest


def steady_state(liou: Liouvillian, check: bool = True) -> SteadyState:
    """Solve ``W rho = 0`` with the trace fixed by an appended row."""
    w = liou.full()
    if check:
        _kernel_check(w)
    aug = np.vstack([w, TRACE_COVECTOR[None, :]])
    rhs = np.zeros(DIM + 1, dtype=complex)
    rhs[-1] = 1.0
    rho, *_ = linalg.lstsq(aug, rhs)
    p0, block = unvectorize(rho)
    hermiticity = float(max(np.max(np.abs(block - block.conj().T)), abs(p0.imag)))
    block = 0.5 * (block + block.conj().T)
    rho = np.concatenate([[p0.real], block.reshape(-1, order="F")])
    residual = float(np.linalg.norm(w @ rho))
    es = liou.model.eigensystem
    eig_block = es.states.conj().T @ block @ es.states
    if check:
        if min(p0.real, float(np.linalg.eigvalsh(block).min())) < -POSITIVITY_TOL:
            raise NumericError("steady state is not positive semidefinite")
    return SteadyState(
        rho=rho,
        p0=float(p0.real),
        p_lambda=np.real(np.diag(eig_block)),
        coherences=eig_block,
        residual=residual,
        hermiticity_error=hermiticity,
    )


def expectation(op: np.ndarray, rho: np.ndarray) -> complex:
    return complex(TRACE_COVECTOR @ (op @ rho))


def stationary_current(liou: Liouvillian, ss: SteadyState, n: int) -> float:
    """Net particle flow from reservoir ``n`` into the ring."""
    op = liou.jump(1, n) - liou.jump(-1, n)
    return float(expectation(op, ss.rho).real)


def transport_current(liou: Liouvillian, ss: SteadyState | None = None) -> float:
    """Current through the ring, positive for flow from reservoir 1 to reservoir 2."""
    if ss is None:
        ss = steady_state(liou)
    return stationary_current(liou, ss, 1)


def current_at(spec: SystemSpec, numerics: Numerics = Numerics()) -> float:
    liou = build_liouvillian(spec, numerics)
    return transport_current(liou)


# --------------------------------------------------------------------------
# noise


@dataclass(frozen=True, eq=False)
class NoiseSpectrum:
    omegas: np.ndarray
    values: np.ndarray
    reservoir: int
    plateau: float
    variant: str


def _solve(a: np.ndarray, b: np.ndarray, what: str) -> np.ndarray:
    try:
        lu = linalg.lu_factor(a, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"{what}: factorization failed ({exc})") from exc
    if np.min(np.abs(np.diag(lu[0]))) == 0.0:
        raise NumericError(f"{what}: singular matrix")
    x = linalg.lu_solve(lu, b)
    cond = np.linalg.cond(a)
    if not np.all(np.isfinite(x)) or cond > 1e14:
        raise NumericError(f"{what}: ill-conditioned (cond = {cond:.3e})")
    return x


def noise_spectrum(liou: Liouvillian, ss: SteadyState, n: int, omegas, variant: str = "nojump") -> NoiseSpectrum:
    """Frequency-resolved current noise of reservoir ``n``.

    With ``J1 = i (W+ - W-)`` and ``J2 = -(W+ + W-)`` the spectrum is

        -S(w) = <J2> + <J1 [R(iw) + R(-iw)] J1>

    where ``R(z) = (z - w0)^-1`` for ``variant="nojump"``.  ``variant="full"``
    uses the full generator with the stationary projector removed,
    ``R(z) = Q (z - W)^-1 Q``, which stays finite at ``w = 0``.
    """
    if variant not in NOISE_VARIANTS:
        raise ValueError(f"variant must be one of {NOISE_VARIANTS}, got {variant!r}")
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    wp, wm = liou.jump(1, n), liou.jump(-1, n)
    j1 = 1j * (wp - wm)
    j2 = -(wp + wm)
    rho = ss.rho
    plateau = float(-expectation(j2, rho).real)
    eye = np.eye(DIM)
    if variant == "nojump":
        gen = np.array(liou.w0)
        reg = np.zeros((DIM, DIM))
        src = j1 @ rho
    else:
        gen = liou.full()
        reg = np.outer(rho, TRACE_COVECTOR)
        src = j1 @ rho
        src = src - rho * (TRACE_COVECTOR @ src)
    values = np.empty(omegas.shape)
    for k, w in enumerate(omegas):
        total = 0.0
        for z in (1j * w, -1j * w):
            x = _solve(z * eye - gen + reg, src, f"resolvent at omega={w:g}")
            total += expectation(j1, x)
        values[k] = -(expectation(j2, rho) + total).real
    return NoiseSpectrum(omegas=omegas, values=values, reservoir=n, plateau=plateau, variant=variant)


def tilted_eigenvalue(liou: Liouvillian, n: int, chi: float) -> complex:
    """Eigenvalue of ``W(chi)`` that tends to zero as ``chi -> 0``."""
    chis = [0.0, 0.0]
    chis[n - 1] = chi
    vals = linalg.eigvals(liouvillian_at(liou, chis))
    return complex(vals[np.argmin(np.abs(vals))])


def zero_frequency_noise_fcs(liou: Liouvillian, n: int, step: float = 1e-3) -> float:
    """Second cumulant rate ``-d^2 lambda / d chi^2`` by a Richardson-extrapolated stencil."""

    def second(h):
        lp = tilted_eigenvalue(liou, n, h)
        lm = tilted_eigenvalue(liou, n, -h)
        l0 = tilted_eigenvalue(liou, n, 0.0)
        return (lp - 2.0 * l0 + lm) / h**2

    d_h, d_2h = second(step), second(2.0 * step)
    return float(-((4.0 * d_h - d_2h) / 3.0).real)


def mean_current_fcs(liou: Liouvillian, n: int, step: float = 1e-4) -> float:
    """First cumulant rate ``-i d lambda / d chi``."""
    d = (tilted_eigenvalue(liou, n, step) - tilted_eigenvalue(liou, n, -step)) / (2.0 * step)
    return float((-1j * d).real)


# --------------------------------------------------------------------------
# time evolution under the no-jump generator


class Propagator:
    """``exp(tau w0)`` via eigendecomposition when well conditioned."""

    def __init__(self, gen: np.ndarray, cond_limit: float = EXPM_COND_LIMIT):
        self.gen = np.asarray(gen, dtype=complex)
        vals, vecs = linalg.eig(self.gen)
        cond = np.linalg.cond(vecs)
        self.diagonalizable = bool(np.isfinite(cond) and cond < cond_limit)
        if self.diagonalizable:
            self.vals = vals
            self.vecs = vecs
            self.inv = linalg.inv(vecs)
        self.cond = float(cond)

    def apply(self, taus, x: np.ndarray) -> np.ndarray:
        """Rows are ``exp(tau_k gen) x``."""
        taus = np.asarray(taus, dtype=float)
        if self.diagonalizable:
            coeff = self.inv @ x
            return (np.exp(np.outer(taus, self.vals)) * coeff) @ self.vecs.T
        return np.array([linalg.expm(t * self.gen) @ x for t in taus])


def default_taus(t_max: float = 20.0, n_log: int = 60, n_lin: int = 400) -> np.ndarray:
    """Log-spaced over [1e-3, 1] then linear to ``t_max``, with tau = 0 in front."""
    early = np.geomspace(1e-3, 1.0, n_log)
    late = np.linspace(1.0, t_max, n_lin)[1:]
    return np.concatenate([[0.0], early, late])


@dataclass(frozen=True, eq=False)
class WaitingTimeGrid:
    taus: np.ndarray
    p: dict  # {(n_in, n_out): array over taus}
    normalization: dict  # {n_in: sum over n_out of the full integral}


def _injected_state(liou: Liouvillian, ss: SteadyState, n_in: int):
    x = liou.jump(1, n_in) @ ss.rho
    norm = float(expectation(np.eye(DIM), x).real)
    if not norm > 0:
        raise NumericError(f"no particles enter from reservoir {n_in} in the steady state")
    return x / norm


def waiting_time(
    liou: Liouvillian,
    ss: SteadyState,
    n_in: int,
    taus,
    n_out=(1, 2),
    norm_tol: float = 1e-6,
) -> WaitingTimeGrid:
    """Delay distribution between an entry from ``n_in`` and the next exit.

    The total probability ``sum_n' int_0^inf P dtau`` is obtained exactly from
    ``-w0^-1`` and must equal one within ``norm_tol``.
    """
    taus = np.asarray(taus, dtype=float)
    if np.any(taus < 0):
        raise ValueError("waiting times must be nonnegative")
    x = _injected_state(liou, ss, n_in)
    evolved = Propagator(liou.w0).apply(taus, x)
    p = {}
    for m in np.atleast_1d(n_out):
        cov = TRACE_COVECTOR @ liou.jump(-1, int(m))
        p[(n_in, int(m))] = np.real(evolved @ cov)
    resident = _solve(-np.array(liou.w0), x, "no-jump generator")
    total = sum(float(np.real(TRACE_COVECTOR @ liou.jump(-1, m) @ resident)) for m in (1, 2))
    if abs(total - 1.0) > norm_tol:
        raise NumericError(f"waiting-time normalization is {total:.12f}, off by more than {norm_tol:g}")
    return WaitingTimeGrid(taus=taus, p=p, normalization={n_in: total})


def integrate_waiting(grid: WaitingTimeGrid, key) -> float:
    """Trapezoid integral of one waiting-time curve over the grid."""
    return float(integrate.trapezoid(grid.p[key], grid.taus))


@dataclass(frozen=True, eq=False)
class TransientOccupations:
    taus: np.ndarray
    sites: np.ndarray  # shape (len(taus), 3)
    total: np.ndarray


def transient_occupations(liou: Liouvillian, ss: SteadyState, n_in: int, taus) -> TransientOccupations:
    """Site occupations after a particle has entered from ``n_in`` at tau = 0."""
    taus = np.asarray(taus, dtype=float)
    x = _injected_state(liou, ss, n_in)
    evolved = Propagator(liou.w0).apply(taus, x)
    diag = [1 + k + 3 * k for k in range(3)]
    sites = np.real(evolved[:, diag])
    return TransientOccupations(taus=taus, sites=sites, total=sites.sum(axis=1))


# --------------------------------------------------------------------------
# diagnostics


def eigen_occupations(liou: Liouvillian, ss: SteadyState | None = None) -> np.ndarray:
    """``(n_0, n_1, n_2, n_3)``: vacuum and eigenstate populations."""
    if ss is None:
        ss = steady_state(liou)
    return np.concatenate([[ss.p0], ss.p_lambda])


def bath_transition_rates(liou: Liouvillian) -> np.ndarray:
    """``g[mu, nu]``: population transfer rate from eigenstate nu to mu due to the bath.

    Diagonal entries hold the total outflow with a negative sign.
    """
    b = to_eigenbasis(liou.bath_part, liou.model.eigensystem)
    idx = [1 + k + 3 * k for k in range(3)]
    return np.real(b[np.ix_(idx, idx)])


# --------------------------------------------------------------------------
# figure of merit


def field_from_phase(phi, area: float):
    """Normal field (tesla) that threads phase ``phi`` through ``area`` (m^2)."""
    return np.asarray(phi) * HBAR_OVER_E / area


@dataclass(frozen=True, eq=False)
class FigureOfMerit:
    phi: np.ndarray
    field: np.ndarray
    current_si: np.ndarray
    merit: np.ndarray  # dI/dB in 1/(s T)
    richardson_error: float


def figure_of_merit(
    spec: SystemSpec,
    area: float,
    gamma0_si: float,
    phi_grid,
    numerics: Numerics = Numerics(),
    tolerance: float = 0.05,
    currents=None,
) -> FigureOfMerit:
    """``dI/dB`` in SI units by central differences on a uniform phase grid.

    The current is rescaled so that the lead rate scale maps to
    ``gamma0_si`` (1/s).  The derivative is cross-checked against the
    stencil on every other grid point; disagreement above ``tolerance``
    of the largest value raises ``NumericError``.
    """
    if area <= 0:
        raise ValueError("area must be positive")
    phi = np.asarray(phi_grid, dtype=float)
    steps = np.diff(phi)
    if phi.size < 5 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValueError("phi_grid must be uniform with at least five points")
    if currents is None:
        currents = np.array([current_at(spec.with_phi(p), numerics) for p in phi])
    scale = gamma0_si / spec.leads[0].gamma0
    i_si = np.asarray(currents) * scale
    h = steps[0]
    d_h = np.full(phi.size, np.nan)
    d_h[1:-1] = (i_si[2:] - i_si[:-2]) / (2 * h)
    d_2h = np.full(phi.size, np.nan)
    d_2h[2:-2] = (i_si[4:] - i_si[:-4]) / (4 * h)
    dphi_db = area / HBAR_OVER_E
    merit = d_h * dphi_db
    inner = slice(2, -2)
    ref = np.nanmax(np.abs(d_h[inner]))
    err = float(np.nanmax(np.abs(d_h[inner] - d_2h[inner])) / ref) if ref > 0 else 0.0
    if err > tolerance:
        raise NumericError(f"phase grid too coarse: stencil disagreement {err:.2%} exceeds {tolerance:.0%}")
    return FigureOfMerit(phi=phi, field=field_from_phase(phi, area), current_si=i_si, merit=merit, richardson_error=err)
