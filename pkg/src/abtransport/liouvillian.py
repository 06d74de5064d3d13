"""Polaron-transformed Redfield generator with counting fields.

State layout (D = 10): index 0 is the vacuum population, indices 1..9 are
the single-particle block of the density matrix in the site basis, stacked
column-major (``rho[i, j]`` sits at ``1 + i + 3 * j``).  Coherences between
the vacuum and the single-particle sector are not represented; they decouple
from the populations by particle-number superselection.

Internally every piece is first assembled on the full 4x4 space
(basis ``vac, 1, 2, 3``; 16-dimensional Liouville space) and then restricted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bath import (
    BathSpec,
    LeadSpec,
    bath_correlation_table,
    half_fourier_channels,
    lead_half_fourier,
    polaron_kappa,
)
from .hamiltonian import (
    DEGENERACY_TOL,
    EigenSystem,
    RingSpec,
    build_single_particle_hamiltonian,
    eigensystem,
)

DIM = 10
FULL_DIM = 16
N_SITES = 3


def _block_index(i: int, j: int) -> int:
    return 1 + i + N_SITES * j


def _full_index(i: int, j: int) -> int:
    return i + (N_SITES + 1) * j


# positions of the 10 retained components inside the 16-dim column-major vector
RETAINED = np.array([_full_index(0, 0)] + [_full_index(1 + i, 1 + j) for j in range(3) for i in range(3)])
TRACE_COVECTOR = np.zeros(DIM)
TRACE_COVECTOR[0] = 1.0
for _k in range(N_SITES):
    TRACE_COVECTOR[_block_index(_k, _k)] = 1.0


def vectorize(p0: float, block: np.ndarray) -> np.ndarray:
    vec = np.empty(DIM, dtype=complex)
    vec[0] = p0
    vec[1:] = np.asarray(block, dtype=complex).reshape(-1, order="F")
    return vec


def unvectorize(vec: np.ndarray):
    vec = np.asarray(vec)
    return vec[0], vec[1:].reshape(N_SITES, N_SITES, order="F")


def spre(a: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(a.shape[0]), a)


def spost(b: np.ndarray) -> np.ndarray:
    return np.kron(b.T, np.eye(b.shape[0]))


def restrict(super_full: np.ndarray) -> np.ndarray:
    return super_full[np.ix_(RETAINED, RETAINED)]


def _embed(block: np.ndarray) -> np.ndarray:
    out = np.zeros((N_SITES + 1, N_SITES + 1), dtype=complex)
    out[1:, 1:] = block
    return out


@dataclass(frozen=True)
class SystemSpec:
    """Ring, the two electronic leads and the dephasing bath on site 3.

    ``ring.eps[2]`` is the already-renormalized site-3 energy.
    """

    ring: RingSpec = field(default_factory=RingSpec)
    leads: tuple = (LeadSpec(mu=3.5), LeadSpec(mu=1.5))
    bath: BathSpec = field(default_factory=BathSpec)

    def __post_init__(self):
        if len(self.leads) != 2:
            raise ValueError("exactly two leads are required")
        object.__setattr__(self, "leads", tuple(self.leads))

    def with_phi(self, phi: float) -> "SystemSpec":
        return replace(self, ring=self.ring.replace(phi=phi))

    def with_gamma(self, gamma: float) -> "SystemSpec":
        return replace(self, bath=replace(self.bath, gamma=gamma))

    def with_temperature(self, temperature: float) -> "SystemSpec":
        leads = tuple(replace(ld, temperature=temperature) for ld in self.leads)
        return replace(self, leads=leads, bath=replace(self.bath, temperature=temperature))


@dataclass(frozen=True)
class Numerics:
    """Approximation switches for the generator.

    mode
        ``"nonsecular"`` keeps the full Redfield tensor, ``"secular"`` drops
        every element coupling components with different Bohr frequencies.
    bath_lamb_shift, lead_lamb_shift
        Keep the imaginary parts of the half-sided correlation transforms.
    lead_frequency
        ``"column"`` evaluates lead factors at the eigenenergy on which the
        operator acts (the plain Redfield result); ``"symmetric"`` uses the
        average over both eigenenergies of a coherence in the loss terms.
    detailed_balance_skew
        Test hook: multiplies every tunneling-out rate by ``1 + skew``.
    """

    mode: str = "nonsecular"
    bath_lamb_shift: bool = True
    lead_lamb_shift: bool = False
    lead_frequency: str = "column"
    detailed_balance_skew: float = 0.0
    degeneracy_tol: float = DEGENERACY_TOL

    def __post_init__(self):
        if self.mode not in ("secular", "nonsecular"):
            raise ValueError(f"mode must be 'secular' or 'nonsecular', got {self.mode!r}")
        if self.lead_frequency not in ("column", "symmetric"):
            raise ValueError(f"lead_frequency must be 'column' or 'symmetric', got {self.lead_frequency!r}")


@dataclass(frozen=True, eq=False)
class PolaronModel:
    kappa: float
    h_dressed: np.ndarray
    eigensystem: EigenSystem
    coupling: np.ndarray  # bare hops into site 3, a_3^dag (J a_1 + J a_2)
    h_bare: np.ndarray


def polaron_transform(spec: SystemSpec, kappa: float | None = None) -> PolaronModel:
    """Dress the bonds touching site 3 by the polaron factor.

    ``kappa`` may be given explicitly to probe limits; otherwise it follows
    from the bath.
    """
    if kappa is None:
        kappa = polaron_kappa(spec.bath)
    if not 0 <= kappa <= 1:
        raise ValueError(f"kappa must lie in [0, 1], got {kappa}")
    h_bare = build_single_particle_hamiltonian(spec.ring)
    h = h_bare.copy()
    for i, j in ((1, 2), (2, 1), (2, 0), (0, 2)):
        h[i, j] *= kappa
    coupling = np.zeros((3, 3), dtype=complex)
    coupling[2, 0] = h_bare[2, 0]
    coupling[2, 1] = h_bare[2, 1]
    return PolaronModel(kappa=kappa, h_dressed=h, eigensystem=eigensystem(h), coupling=coupling, h_bare=h_bare)


# --------------------------------------------------------------------------
# dissipators on the full 16-dim space


def coherent_super(h_sp: np.ndarray) -> np.ndarray:
    h = _embed(h_sp)
    return -1j * (spre(h) - spost(h))


def _omega_bucket(gap: float) -> float:
    return max(5.0, 5.0 * math.ceil(gap / 5.0))


def bath_half_transforms(pm: PolaronModel, bath: BathSpec, lamb_shift: bool = True):
    """Half-sided transforms ``{lam: C~_lam(E_a - E_b)}`` and at ``-(E_a - E_b)``."""
    omega = pm.eigensystem.transition_frequencies()
    table = bath_correlation_table(bath, _omega_bucket(float(np.max(np.abs(omega)))))
    both = half_fourier_channels(table, np.stack([omega, -omega]), (1, -1))
    out = {}
    for lam in (1, -1):
        plus, minus = both[lam]
        if not lamb_shift:
            plus, minus = plus.real.astype(complex), minus.real.astype(complex)
        out[lam] = (plus, minus)
    return out


def assemble_bath_dissipator(pm: PolaronModel, bath: BathSpec, lamb_shift: bool = True) -> np.ndarray:
    """Redfield dissipator of the polaron coupling on the 16-dim space.

    The interaction is ``A (x) B + A^dag (x) B^dag`` with ``A`` the bare hops
    into site 3 and ``B = exp(S) - kappa``.  With ``C_ab(t) = <B_a(t) B_b>``
    the generator is

        d rho/dt = -sum_ab [A_a, L_ab rho - rho L'_ab]

    where ``L_ab = int_0^inf C_ab(t) A_b(-t) dt`` and ``L'_ab`` uses
    ``C_ba(-t) = conj(C_ab(t))``.  ``C_ab`` is the ``lam = +1`` channel when
    ``a != b`` and the ``lam = -1`` channel when ``a == b``.
    """
    if bath.gamma == 0 or pm.kappa == 1.0:
        return np.zeros((FULL_DIM, FULL_DIM), dtype=complex)
    es = pm.eigensystem
    v = es.states
    transforms = bath_half_transforms(pm, bath, lamb_shift)
    ops = [pm.coupling, pm.coupling.conj().T]
    ops_eig = [v.conj().T @ a @ v for a in ops]
    gen = np.zeros((FULL_DIM, FULL_DIM), dtype=complex)
    for ia, a_alpha in enumerate(ops):
        lam_sum = np.zeros((3, 3), dtype=complex)
        lamp_sum = np.zeros((3, 3), dtype=complex)
        for ib, a_beta_e in enumerate(ops_eig):
            lam = 1 if ia != ib else -1
            c_plus, c_minus = transforms[lam]
            lam_sum += a_beta_e * c_plus
            lamp_sum += a_beta_e * np.conj(c_minus)
        big_a = _embed(a_alpha)
        big_l = _embed(v @ lam_sum @ v.conj().T)
        big_lp = _embed(v @ lamp_sum @ v.conj().T)
        gen += -spre(big_a @ big_l) + spre(big_l) @ spost(big_a)
        gen += spre(big_a) @ spost(big_lp) - spost(big_lp @ big_a)
    return gen


@dataclass(frozen=True, eq=False)
class LeadTerms:
    """Full-space pieces of one lead: jumps in/out and the matching losses."""

    jump_in: np.ndarray
    jump_out: np.ndarray
    loss: np.ndarray
    rates_in: np.ndarray  # k+_{n, lambda}
    rates_out: np.ndarray  # k-_{n, lambda}


def _hermitian_part(k: np.ndarray) -> np.ndarray:
    return 0.5 * (k + k.conj().T)


def assemble_lead(pm: PolaronModel, lead: LeadSpec, site: int, numerics: Numerics = Numerics()) -> LeadTerms:
    """Tunneling between the ring site ``site`` (one-based) and one lead.

    Pair form of the Redfield dissipator: for each process with system
    operator ``X`` (``d^dag`` in, ``d`` out) and its convolved partner ``Y``,
    the jump part is ``X rho Y^dag + Y rho X^dag`` and the loss part
    ``-X^dag Y rho - rho Y^dag X``.
    """
    es = pm.eigensystem
    v = es.states
    e = es.energies
    c_in = np.array([lead_half_fourier(x, lead, +1, numerics.lead_lamb_shift) for x in e])
    c_out = np.array([lead_half_fourier(x, lead, -1, numerics.lead_lamb_shift) for x in e])
    c_out = c_out * (1.0 + numerics.detailed_balance_skew)

    ket = np.zeros(N_SITES + 1, dtype=complex)
    ket[site] = 1.0
    vac = np.zeros(N_SITES + 1, dtype=complex)
    vac[0] = 1.0
    d_dag = np.outer(ket, vac)
    d = d_dag.conj().T

    fin = v @ np.diag(c_in) @ v.conj().T
    fout = v @ np.diag(c_out) @ v.conj().T
    y_in = np.zeros((4, 4), dtype=complex)
    y_in[1:, 0] = fin[:, site - 1]
    y_out = np.zeros((4, 4), dtype=complex)
    y_out[0, 1:] = fout[site - 1, :]

    jump_in = spre(d_dag) @ spost(y_in.conj().T) + spre(y_in) @ spost(d)
    jump_out = spre(d) @ spost(y_out.conj().T) + spre(y_out) @ spost(d_dag)
    k_in = d @ y_in
    k_out = d_dag @ y_out
    if numerics.lead_frequency == "symmetric":
        k_in, k_out = _hermitian_part(k_in), _hermitian_part(k_out)
    loss = -spre(k_in) - spost(k_in.conj().T) - spre(k_out) - spost(k_out.conj().T)

    weight = np.abs(v[site - 1, :]) ** 2
    return LeadTerms(
        jump_in=jump_in,
        jump_out=jump_out,
        loss=loss,
        rates_in=weight * 2.0 * c_in.real,
        rates_out=weight * 2.0 * c_out.real,
    )


# --------------------------------------------------------------------------
# eigenbasis transforms and the secular filter


def eigen_transform(es: EigenSystem) -> np.ndarray:
    """Matrix mapping eigenbasis-vectorized states to the site-basis layout."""
    t = np.zeros((DIM, DIM), dtype=complex)
    t[0, 0] = 1.0
    t[1:, 1:] = np.kron(es.states.conj(), es.states)
    return t


def to_eigenbasis(op: np.ndarray, es: EigenSystem) -> np.ndarray:
    t = eigen_transform(es)
    return t.conj().T @ op @ t


def from_eigenbasis(op: np.ndarray, es: EigenSystem) -> np.ndarray:
    t = eigen_transform(es)
    return t @ op @ t.conj().T


def bohr_frequencies(es: EigenSystem) -> np.ndarray:
    freq = np.zeros(DIM)
    w = es.transition_frequencies()
    for j in range(3):
        for i in range(3):
            freq[_block_index(i, j)] = w[i, j]
    return freq


def secular_filter(op: np.ndarray, es: EigenSystem, tol: float = DEGENERACY_TOL) -> np.ndarray:
    freq = bohr_frequencies(es)
    mask = np.abs(freq[:, None] - freq[None, :]) < tol
    return from_eigenbasis(to_eigenbasis(op, es) * mask, es)


# --------------------------------------------------------------------------
# the generator


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """No-jump generator ``w0`` and jump superoperators ``jumps[(sigma, n)]``."""

    w0: np.ndarray
    jumps: dict
    model: PolaronModel
    bath_part: np.ndarray
    coherent_part: np.ndarray
    rates_in: np.ndarray  # shape (2, 3): k+_{n, lambda}
    rates_out: np.ndarray
    spec: SystemSpec
    numerics: Numerics

    @property
    def dim(self) -> int:
        return self.w0.shape[0]

    def jump(self, sigma: int, n: int) -> np.ndarray:
        return self.jumps[(sigma, n)]

    def full(self) -> np.ndarray:
        return liouvillian_at(self, (0.0, 0.0))


def assemble_full_space(spec: SystemSpec, numerics: Numerics = Numerics(), pm: PolaronModel | None = None):
    """All generator pieces on the 16-dim space (no restriction, no filter)."""
    if pm is None:
        pm = polaron_transform(spec)
    coherent = coherent_super(pm.h_dressed)
    bath = assemble_bath_dissipator(pm, spec.bath, numerics.bath_lamb_shift)
    leads = [assemble_lead(pm, lead, n + 1, numerics) for n, lead in enumerate(spec.leads)]
    return pm, coherent, bath, leads


def build_liouvillian(spec: SystemSpec, numerics: Numerics = Numerics(), pm: PolaronModel | None = None) -> Liouvillian:
    pm, coherent, bath, leads = assemble_full_space(spec, numerics, pm)
    es = pm.eigensystem
    coherent_r = restrict(coherent)
    bath_r = restrict(bath)
    w0 = coherent_r + bath_r
    jumps = {}
    for n, terms in enumerate(leads, start=1):
        w0 = w0 + restrict(terms.loss)
        jumps[(1, n)] = restrict(terms.jump_in)
        jumps[(-1, n)] = restrict(terms.jump_out)
    if numerics.mode == "secular":
        tol = numerics.degeneracy_tol
        w0 = secular_filter(w0, es, tol)
        bath_r = secular_filter(bath_r, es, tol)
        jumps = {key: secular_filter(op, es, tol) for key, op in jumps.items()}
    for op in (w0, bath_r, *jumps.values()):
        op.flags.writeable = False
    return Liouvillian(
        w0=w0,
        jumps=jumps,
        model=pm,
        bath_part=bath_r,
        coherent_part=coherent_r,
        rates_in=np.array([t.rates_in for t in leads]),
        rates_out=np.array([t.rates_out for t in leads]),
        spec=spec,
        numerics=numerics,
    )


def assemble_lead_jumps(pm: PolaronModel, leads, numerics: Numerics = Numerics()):
    """Restricted jump superoperators ``{(sigma, n): W}`` and the summed loss part."""
    jumps = {}
    loss = np.zeros((DIM, DIM), dtype=complex)
    for n, lead in enumerate(leads, start=1):
        terms = assemble_lead(pm, lead, n, numerics)
        jumps[(1, n)] = restrict(terms.jump_in)
        jumps[(-1, n)] = restrict(terms.jump_out)
        loss += restrict(terms.loss)
    if numerics.mode == "secular":
        es = pm.eigensystem
        jumps = {key: secular_filter(op, es, numerics.degeneracy_tol) for key, op in jumps.items()}
        loss = secular_filter(loss, es, numerics.degeneracy_tol)
    return jumps, loss


def liouvillian_at(liou: Liouvillian, chi) -> np.ndarray:
    """Tilted generator ``w0 + sum exp(i sigma chi_n) W_sigma^n``."""
    chi = tuple(float(c) for c in chi)
    out = np.array(liou.w0, dtype=complex)
    for (sigma, n), op in liou.jumps.items():
        out = out + np.exp(1j * sigma * chi[n - 1]) * op
    return out
