"""Closed-form results for the ring without the bath.

The Green's function ``G(z) = i (z + i H)^-1`` is written as
``G = i g(z) / det(z + i H)`` with ``g`` the adjugate.  All formulas take a
``RingSpec`` holding the (possibly polaron-dressed) parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import lead_rates
from .hamiltonian import DEGENERACY_TOL, RingSpec, build_single_particle_hamiltonian, wrap_phase

GAUGES = ("bond31", "bond12")


class DegenerateSpectrumError(ValueError):
    """Raised when a secular formula meets (near-)degenerate levels."""

    def __init__(self, energies):
        super().__init__(
            f"spectrum {np.round(energies, 12)} is degenerate within {DEGENERACY_TOL:g}; "
            "use the nonsecular numerical engine instead"
        )


class AnalyticMismatch(ArithmeticError):
    pass


def ring_from_hamiltonian(h: np.ndarray) -> RingSpec:
    """Recover site energies, bond moduli and loop phase from a ring Hamiltonian."""
    h = np.asarray(h)
    bonds = (h[0, 1], h[1, 2], h[2, 0])
    loop = bonds[0] * bonds[1] * bonds[2]
    phi = float(np.angle(loop)) if abs(loop) > 0 else 0.0
    return RingSpec(eps=tuple(np.real(np.diag(h))), j0=tuple(abs(b) for b in bonds), phi=phi)


@dataclass(frozen=True, eq=False)
class GreensEval:
    z: complex
    g: np.ndarray
    det: complex

    @property
    def G(self) -> np.ndarray:
        return 1j * self.g / self.det


def greens_matrix(z: complex, ring: RingSpec, gauge: str = "bond31") -> GreensEval:
    """Adjugate ``g(z)`` of ``z + i H`` and its determinant, entry by entry.

    ``gauge="bond31"`` matches the Hamiltonian used everywhere else (flux
    phase on ``H31``).  ``gauge="bond12"`` puts the phase on ``H12``; the two
    differ by the local gauge transformation ``H -> U H U^dag`` with
    ``U = diag(1, e^{-i phi}, e^{-i phi})``.
    """
    if gauge not in GAUGES:
        raise ValueError(f"gauge must be one of {GAUGES}, got {gauge!r}")
    e1, e2, e3 = ring.eps
    j1, j2, j3 = ring.j0
    z = complex(z)
    a1, a2, a3 = z + 1j * e1, z + 1j * e2, z + 1j * e3
    u = np.exp(1j * ring.phi)
    g = np.empty((3, 3), dtype=complex)
    g[0, 0] = a2 * a3 + j2 * j2
    g[1, 1] = a1 * a3 + j3 * j3
    g[2, 2] = a1 * a2 + j1 * j1
    if gauge == "bond12":
        g[1, 0] = -1j * j1 * np.conj(u) * a3 - j2 * j3
        g[2, 0] = -j1 * np.conj(u) * j2 - 1j * j3 * a2
        g[0, 1] = -j2 * j3 - 1j * j1 * u * a3
        g[2, 1] = -1j * a1 * j2 - j1 * u * j3
        g[0, 2] = -j1 * j2 * u - 1j * j3 * a2
        g[1, 2] = -1j * a1 * j2 - j1 * np.conj(u) * j3
    else:
        g[1, 0] = -1j * j1 * a3 - j2 * j3 * u
        g[2, 0] = -j1 * j2 - 1j * j3 * u * a2
        g[0, 1] = -j2 * j3 * np.conj(u) - 1j * j1 * a3
        g[2, 1] = -1j * a1 * j2 - j1 * j3 * u
        g[0, 2] = -j1 * j2 - 1j * j3 * np.conj(u) * a2
        g[1, 2] = -1j * a1 * j2 - j1 * j3 * np.conj(u)
    det = a1 * a2 * a3 - 2j * j1 * j2 * j3 * np.cos(ring.phi) + a2 * j3**2 + j1**2 * a3 + j2**2 * a1
    return GreensEval(z=z, g=g, det=det)


def _check_nondegenerate(energies):
    gaps = np.abs(np.diff(np.sort(energies)))
    if np.any(gaps < DEGENERACY_TOL):
        raise DegenerateSpectrumError(energies)


def residue_projectors(ring: RingSpec, energies=None):
    """``<n|lambda><lambda|m>`` for each level from ``g(-i E) / K``.

    ``K = prod_{lambda' != lambda} (-i)(E_lambda - E_lambda')`` is real for
    three levels.
    """
    if energies is None:
        energies = np.linalg.eigvalsh(build_single_particle_hamiltonian(ring))
    energies = np.sort(np.asarray(energies, dtype=float))
    _check_nondegenerate(energies)
    out = []
    kappas = []
    for k, e in enumerate(energies):
        others = np.delete(energies, k)
        kk = np.prod(-1j * (e - others))
        out.append(greens_matrix(-1j * e, ring).g / kk)
        kappas.append(kk)
    return energies, np.array(out), np.array(kappas)


@dataclass(frozen=True, eq=False)
class SecularCurrent:
    total: float
    per_level: np.ndarray
    p0: float
    p_levels: np.ndarray
    energies: np.ndarray
    k_plus: np.ndarray  # (lead, level)
    k_minus: np.ndarray


def secular_current(ring: RingSpec, leads) -> SecularCurrent:
    """Rate-equation current for bath-free transport through nondegenerate levels.

    ``ring`` carries the dressed parameters; positive for flow from lead 1
    to lead 2.
    """
    energies, proj, _ = residue_projectors(ring)
    weights = np.real(np.array([[p[n, n] for p in proj] for n in range(2)]))
    k_plus = np.empty((2, 3))
    k_minus = np.empty((2, 3))
    for n, lead in enumerate(leads):
        gin, gout = lead_rates(energies, lead)
        k_plus[n] = weights[n] * gin
        k_minus[n] = weights[n] * gout
    kp, km = k_plus.sum(axis=0), k_minus.sum(axis=0)
    p0 = 1.0 / (1.0 + np.sum(kp / km))
    p_levels = p0 * kp / km
    per_level = p0 * (k_plus[0] * k_minus[1] - k_minus[0] * k_plus[1]) / km
    return SecularCurrent(
        total=float(per_level.sum()),
        per_level=per_level,
        p0=float(p0),
        p_levels=p_levels,
        energies=energies,
        k_plus=k_plus,
        k_minus=k_minus,
    )


@dataclass(frozen=True)
class CurrentFactor:
    level: int
    prefactor: float  # N_lambda
    modulus: float  # |J1 (E - eps3) + J2 J3 e^{i phi}|^2
    current: float
    reference: float
    relative_error: float


def approx_current_factor(ring: RingSpec, leads, level: int, rtol: float = 1e-8) -> CurrentFactor:
    """Factorized per-level current ``N_lambda |J1 (E - eps3) + J2 J3 e^{i phi}|^2``.

    ``level`` is one-based.  The value is compared with ``secular_current``
    and ``AnalyticMismatch`` is raised beyond ``rtol``.
    """
    if level not in (1, 2, 3):
        raise ValueError(f"level must be 1, 2 or 3, got {level}")
    energies, _, kappas = residue_projectors(ring)
    k = level - 1
    e = energies[k]
    kk = float(np.real(kappas[k]))
    g = greens_matrix(-1j * e, ring).g
    rates = [lead_rates(e, lead) for lead in leads]
    gam = [float(gin + gout) for gin, gout in rates]
    occ = [rates[n][0] / gam[n] if gam[n] > 0 else 0.0 for n in range(2)]
    ref = secular_current(ring, leads)
    denom = sum(gam[n] * np.real(g[n, n]) * (1.0 - occ[n]) for n in range(2))
    prefactor = ref.p0 * gam[0] * gam[1] * (occ[0] - occ[1]) / (kk * denom)
    j1, j2, j3 = ring.j0
    modulus = abs(j1 * (e - ring.eps[2]) + j2 * j3 * np.exp(1j * ring.phi)) ** 2
    current = prefactor * modulus
    reference = float(ref.per_level[k])
    scale = max(abs(reference), abs(ref.total), 1e-300)
    rel = abs(current - reference) / scale
    if rel > rtol:
        raise AnalyticMismatch(f"factorized current {current:.15e} differs from {reference:.15e} (relative {rel:.2e})")
    return CurrentFactor(level=level, prefactor=float(prefactor), modulus=float(modulus), current=float(current), reference=reference, relative_error=float(rel))


# --------------------------------------------------------------------------
# two-path interference


def _restricted_hamiltonian(phi: float, j: float, eps3: float, path: int) -> np.ndarray:
    hops = (j, 0.0, 0.0) if path == 0 else (0.0, j, j)
    return build_single_particle_hamiltonian(RingSpec(eps=(0.0, 0.0, eps3), j0=hops, phi=phi))


def branch_roots(j: float, eps3: float):
    root = np.sqrt(eps3**2 / 4 + 2 * j**2)
    return -0.5j * eps3 + 1j * root, -0.5j * eps3 - 1j * root


@dataclass(frozen=True, eq=False)
class PathAmplitude:
    t: np.ndarray
    direct: np.ndarray  # via the bond 1-2 only
    detour: np.ndarray  # via site 3 only
    amplitude: np.ndarray
    probability: np.ndarray


def path_interference(t, phi: float, j: float = 1.0, eps3: float = 0.0) -> PathAmplitude:
    """Amplitude to go from site 1 to site 2 as the sum of two restricted paths.

    Site energies of sites 1 and 2 are zero.  The direct path keeps only the
    bond 1-2; the detour keeps only the bonds through site 3.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    if j == 0:
        zero = np.zeros_like(t, dtype=complex)
        return PathAmplitude(t, zero, zero, zero, np.zeros_like(t))
    direct = -1j * np.sin(j * t)
    z1, z2 = branch_roots(j, eps3)
    j2 = j * j
    detour = np.exp(1j * phi) * (
        -j2 / (z1 * z2) - j2 * np.exp(z1 * t) / (z1 * (z1 - z2)) - j2 * np.exp(z2 * t) / (z2 * (z2 - z1))
    )
    amp = direct + detour
    return PathAmplitude(t=t, direct=direct, detour=detour, amplitude=amp, probability=np.abs(amp) ** 2)


def path_probability_closed_form(t, phi: float, j: float = 1.0):
    """``|i e^{i phi} sin(J t) - 1/2 + cos(sqrt(2) J t) / 2|^2`` for ``eps3 = 0``."""
    t = np.asarray(t, dtype=float)
    return np.abs(1j * np.exp(1j * phi) * np.sin(j * t) - 0.5 + 0.5 * np.cos(np.sqrt(2.0) * j * t)) ** 2


def restricted_propagator(t, phi: float, j: float, eps3: float, path: int) -> np.ndarray:
    """``<2| exp(-i H_path t) |1>`` by dense diagonalization of the restricted ring."""
    h = _restricted_hamiltonian(phi, j, eps3, path)
    vals, vecs = np.linalg.eigh(h)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    phases = np.exp(-1j * np.outer(t, vals))
    return phases @ (vecs[1, :] * vecs[0, :].conj())


def exact_transfer_probability(t, phi: float, j: float = 1.0, eps3: float = 0.0) -> np.ndarray:
    h = build_single_particle_hamiltonian(RingSpec(eps=(0.0, 0.0, eps3), j0=(j, j, j), phi=phi))
    vals, vecs = np.linalg.eigh(h)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    amp = np.exp(-1j * np.outer(t, vals)) @ (vecs[1, :] * vecs[0, :].conj())
    return np.abs(amp) ** 2


def dark_state_energy(phi: float, eps3: float, j: float) -> float:
    """Energy of the state without weight on site 2 for ``phi`` in {0, pi}."""
    w = wrap_phase(phi)
    if np.isclose(w, 0.0, atol=1e-12):
        return eps3 - j
    if np.isclose(abs(w), np.pi, atol=1e-12):
        return eps3 + j
    raise ValueError(f"a dark state exists only for phi = 0 or pi, got {phi}")
