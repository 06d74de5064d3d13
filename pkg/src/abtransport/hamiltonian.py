"""Three-site ring: Hamiltonians, eigensystems and dark-state diagnostics.

Energies are in units of the hopping scale J and hbar = 1.  The flux phase is
carried entirely on the bond 3 -> 1, i.e. ``H[2, 0] = J3 * exp(i phi)`` in
zero-based indexing, so the loop product ``H12 H23 H31`` equals
``J1 J2 J3 exp(i phi)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEGENERACY_TOL = 1e-9
HERMITICITY_TOL = 1e-12


def wrap_phase(phi: float) -> float:
    """Reduce an angle into (-pi, pi]."""
    wrapped = np.mod(phi + np.pi, 2.0 * np.pi) - np.pi
    # mod maps +pi onto -pi; keep the closed end at +pi
    if np.isclose(wrapped, -np.pi, rtol=0.0, atol=1e-15):
        wrapped = np.pi
    return float(wrapped)


def gauge_phase(phases) -> float:
    """Gauge-invariant loop phase from the three bond phases.

    ``phases`` are the phases of ``H12``, ``H23`` and ``H31`` (the coefficient
    of a_n^dagger a_m carries phi_{n,m}).  Only their sum survives a local
    gauge transformation ``a_n -> a_n exp(-i theta_n)``.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (3,):
        raise ValueError("expected three bond phases")
    return wrap_phase(float(phases.sum()))


@dataclass(frozen=True)
class RingSpec:
    """Site energies, bond hoppings ``(J1, J2, J3)`` and the loop phase.

    ``J_n`` couples site n to site n+1 (site 4 is site 1).
    """

    eps: tuple = (3.0, 4.0, 3.0)
    j0: tuple = (1.0, 1.0, 1.0)
    phi: float = 0.0

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        j0 = tuple(float(j) for j in self.j0)
        if len(eps) != 3 or len(j0) != 3:
            raise ValueError("RingSpec needs three site energies and three hoppings")
        if any(j < 0 for j in j0):
            raise ValueError(f"hopping magnitudes must be nonnegative, got {j0}")
        if not np.all(np.isfinite(eps + j0)) or not np.isfinite(self.phi):
            raise ValueError("RingSpec entries must be finite")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "j0", j0)
        object.__setattr__(self, "phi", wrap_phase(self.phi))

    def replace(self, **changes) -> "RingSpec":
        data = {"eps": self.eps, "j0": self.j0, "phi": self.phi}
        data.update(changes)
        return RingSpec(**data)


def hamiltonian_from_bonds(eps, hoppings, bond_phases) -> np.ndarray:
    """Single-particle Hamiltonian with an explicit phase on every bond.

    Used to check gauge invariance; ``build_single_particle_hamiltonian``
    is the fixed-gauge version.
    """
    eps = np.asarray(eps, dtype=float)
    h = np.diag(eps).astype(complex)
    for n in range(3):
        m = (n + 1) % 3
        h[n, m] = hoppings[n] * np.exp(1j * bond_phases[n])
        h[m, n] = np.conj(h[n, m])
    return h


def build_single_particle_hamiltonian(spec: RingSpec) -> np.ndarray:
    j1, j2, j3 = spec.j0
    h = np.diag(np.asarray(spec.eps, dtype=complex))
    h[0, 1] = j1
    h[1, 2] = j2
    h[2, 0] = j3 * np.exp(1j * spec.phi)
    h[1, 0] = np.conj(h[0, 1])
    h[2, 1] = np.conj(h[1, 2])
    h[0, 2] = np.conj(h[2, 0])
    return h


@dataclass(frozen=True)
class EigenSystem:
    """Sorted eigenpairs; ``states[:, k]`` is the k-th eigenvector."""

    energies: np.ndarray
    states: np.ndarray
    degenerate: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.energies)

    def projector(self, k: int) -> np.ndarray:
        v = self.states[:, k]
        return np.outer(v, v.conj())

    def transition_frequencies(self) -> np.ndarray:
        """Matrix of ``E_a - E_b``."""
        return self.energies[:, None] - self.energies[None, :]


def _fix_phase(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for k in range(out.shape[1]):
        v = out[:, k]
        # ties between equal moduli are broken by the lowest index
        idx = int(np.argmax(np.round(np.abs(v), 12)))
        out[:, k] = v * (np.abs(v[idx]) / v[idx])
    return out


def eigensystem(h: np.ndarray, degeneracy_tol: float = DEGENERACY_TOL) -> EigenSystem:
    """Diagonalize a Hermitian matrix with a reproducible phase convention.

    Eigenvalues are sorted ascending and each eigenvector is rotated so that
    its largest-magnitude component is real and positive.  Pairs closer than
    ``degeneracy_tol`` are flagged in ``degenerate``.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.max(np.abs(h - h.conj().T)) > HERMITICITY_TOL * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    energies, vectors = np.linalg.eigh(0.5 * (h + h.conj().T))
    order = np.argsort(energies, kind="stable")
    energies = energies[order]
    vectors = _fix_phase(vectors[:, order])
    gaps = np.abs(energies[:, None] - energies[None, :])
    degenerate = (gaps < degeneracy_tol) & ~np.eye(len(energies), dtype=bool)
    return EigenSystem(energies=energies, states=vectors, degenerate=degenerate)


@dataclass(frozen=True)
class DarkStateReport:
    present: bool
    lambda_index: int | None = None
    site: int | None = None
    overlap: float | None = None
    energy: float | None = None


def detect_dark_state(es: EigenSystem, site: int, tol: float = 1e-10) -> DarkStateReport:
    """Find an eigenstate with no weight on ``site`` (one-based).

    Returns the eigenstate with the smallest overlap when several qualify.
    """
    if site not in (1, 2, 3):
        raise ValueError(f"site must be 1, 2 or 3, got {site}")
    overlaps = np.abs(es.states[site - 1, :])
    k = int(np.argmin(overlaps))
    if overlaps[k] >= tol:
        return DarkStateReport(present=False, site=site)
    return DarkStateReport(
        present=True,
        lambda_index=k + 1,
        site=site,
        overlap=float(overlaps[k]),
        energy=float(es.energies[k]),
    )


def fock_embed(h_sp: np.ndarray) -> np.ndarray:
    """Embed a single-particle Hamiltonian into the basis (vac, 1, 2, 3)."""
    h_sp = np.asarray(h_sp, dtype=complex)
    n = h_sp.shape[0]
    h = np.zeros((n + 1, n + 1), dtype=complex)
    h[1:, 1:] = h_sp
    return h


def number_operator(n_sites: int = 3) -> np.ndarray:
    return np.diag([0.0] + [1.0] * n_sites).astype(complex)
