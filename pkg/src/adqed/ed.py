"""
Exact diagonalization in the few-photon many-body basis.

Pipeline: fold the even cavity modes about the emitter site (odd modes
decouple from a centered emitter), diagonalize the quadratic photon sector,
solve the renormalized matter problem, then assemble

    H = diag(E_alpha) + sum_n hbar Omega_n n_n + sum_l (:Xi^l:/l!) Veff^(l)(Q)

on the product basis {matter level alpha} x {occupations with total <= N_c}.

Internally the squeezed modes are represented in a gauge where the photon
displacement Xi is a real combination -sum_n xi_n (c_n + c_n^dag); every
assembled matrix is then real symmetric.  Normal-ordered operator powers are
built term by term as (creators)^p (annihilators)^q, which is exact under the
total-photon cutoff: annihilation strings only lower the total and creation
strings raise it monotonically, so no intermediate state ever leaves the
retained space spuriously.

A constant (sum_n hbar Omega_n - sum_k hbar omega_k)/2 is carried so that
absolute energies are directly comparable with the Coulomb-gauge Hamiltonian
normal-ordered in the bare modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import LinearOperator, eigsh

from .adframe import (ADParameters, MatterSpectrum, mass_renormalization,
                      solve_matter_eigenstates)
from .bosons import OrthogonalFrame, orthogonal_frame
from .model import (CharacteristicScales, CouplingProfile, EmitterSpec,
                    WaveguideSpec, characteristic_scales, coupling_for_strength,
                    point_coupling)

DENSE_LIMIT = 15000


# ----------------------------------------------------------------------------
# Even-mode folding
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeSet:
    """Photon modes actually entering the ED: frequencies and amplitudes.

    For a centered emitter on a cavity array these are the (L+1)/2 even-parity
    modes with f_p = A M_0p; otherwise the bare waveguide modes.  M maps even
    site operators onto mode operators, a^e_x = sum_p M_xp a_p.
    """

    omega: np.ndarray
    f: np.ndarray
    g: np.ndarray
    M: Optional[np.ndarray] = None
    folded: bool = False

    @property
    def n_modes(self) -> int:
        return self.omega.size


def fold_even_modes(waveguide: WaveguideSpec, coupling: CouplingProfile) -> ModeSet:
    """Fold the cavity array onto even modes about the emitter at site 0.

    The half chain keeps sites x = 0 .. (L-1)/2 with hopping -J/sqrt(2) on the
    first bond, -J/2 elsewhere, and the periodic wrap bond folded into a -J/2
    diagonal shift on the last site; its spectrum is exactly the even-k subset
    of the ring dispersion.  Odd modes carry zero amplitude at the emitter and
    are discarded.
    """
    if waveguide.kind != "cavity-array":
        raise ValueError("even-mode folding is defined for cavity arrays only")
    L = waveguide.L
    n = (L + 1) // 2
    j_freq = (waveguide.J or 0.0) / waveguide.hbar
    H = np.diag(np.full(n, float(waveguide.omega_c)))
    if n > 1:
        H[0, 1] = H[1, 0] = -j_freq / math.sqrt(2.0)
    for i in range(1, n - 1):
        H[i, i + 1] = H[i + 1, i] = -0.5 * j_freq
    if n > 1:
        H[n - 1, n - 1] -= 0.5 * j_freq
    vals, vecs = eigh(H)
    signs = np.where(vecs[0] < 0, -1.0, 1.0)
    vecs = vecs * signs
    f_p = coupling.amplitude * vecs[0]
    g_p = coupling.charge * f_p * np.sqrt(vals / (coupling.mass * waveguide.hbar))
    return ModeSet(omega=vals, f=f_p, g=g_p, M=vecs, folded=True)


def bare_modes(waveguide: WaveguideSpec, coupling: CouplingProfile) -> ModeSet:
    return ModeSet(omega=waveguide.omega.copy(), f=coupling.f.copy(),
                   g=coupling.g_k.copy(), M=None, folded=False)


# ----------------------------------------------------------------------------
# Few-photon basis
# ----------------------------------------------------------------------------

@dataclass
class FewPhotonBasis:
    """Product basis {alpha = 1..alpha_c} x {occupations, total <= N_c}.

    Ordering: ascending total photon number, then lexicographic occupations,
    then alpha; the flat index is i_photon * alpha_c + (alpha - 1).  The
    dimension is alpha_c * C(M + N_c, N_c), the exact multiset count implied
    by the total-photon constraint (Appendix-B-style mode-power sums count
    ordered sequences and omit the vacuum; see README).
    """

    n_modes: int
    n_c: int
    alpha_c: int
    configs: np.ndarray          # (n_photon, n_modes) int
    index: dict = field(repr=False)

    @property
    def n_photon_states(self) -> int:
        return self.configs.shape[0]

    @property
    def dimension(self) -> int:
        return self.n_photon_states * self.alpha_c

    @property
    def totals(self) -> np.ndarray:
        return self.configs.sum(axis=1)

    def states(self):
        """List of (alpha, occupation tuple) in basis order."""
        out = []
        for cfg in self.configs:
            t = tuple(int(x) for x in cfg)
            out.extend((alpha, t) for alpha in range(1, self.alpha_c + 1))
        return out

    def state_index(self, alpha: int, occ) -> int:
        return self.index[tuple(occ)] * self.alpha_c + (alpha - 1)


def enumerate_basis(n_modes: int, n_c: int, alpha_c: int,
                    max_dim: int = 4_000_000) -> FewPhotonBasis:
    """Enumerate the few-photon basis; rejects dimensions above max_dim."""
    if n_modes < 1 or n_c < 0 or alpha_c < 1:
        raise ValueError("need n_modes >= 1, n_c >= 0, alpha_c >= 1")
    dim = alpha_c * math.comb(n_modes + n_c, n_c)
    if dim > max_dim:
        raise ValueError(
            f"basis dimension {dim} = {alpha_c} * C({n_modes + n_c}, {n_c}) exceeds "
            f"the memory budget of {max_dim} states")
    configs = []
    for total in range(n_c + 1):
        block = sorted(_compositions(total, n_modes))
        configs.extend(block)
    arr = np.array(configs, dtype=np.int64).reshape(len(configs), n_modes)
    index = {tuple(c): i for i, c in enumerate(configs)}
    return FewPhotonBasis(n_modes=n_modes, n_c=n_c, alpha_c=alpha_c,
                          configs=arr, index=index)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def annihilators(basis: FewPhotonBasis) -> list[sp.csr_matrix]:
    """Per-mode annihilation operators on the photon factor."""
    n = basis.n_photon_states
    ops = []
    for j in range(basis.n_modes):
        rows, cols, data = [], [], []
        for i, cfg in enumerate(basis.configs):
            occ = cfg[j]
            if occ > 0:
                t = list(cfg)
                t[j] -= 1
                rows.append(basis.index[tuple(t)])
                cols.append(i)
                data.append(math.sqrt(occ))
        ops.append(sp.csr_matrix((data, (rows, cols)), shape=(n, n)))
    return ops


def displacement_operator(basis: FewPhotonBasis, xi: np.ndarray) -> sp.csr_matrix:
    """Photon-side matrix of Xi = -sum_n xi_n (c_n + c_n^dag)."""
    A = sum(x * op for x, op in zip(xi, annihilators(basis)))
    return (-(A + A.T)).tocsr()


def _xi_power_normal(A: sp.csr_matrix, l: int) -> sp.csr_matrix:
    """Wick-ordered :Xi^l: = sum_p C(l,p) Xi_+^p Xi_-^(l-p), Xi_- = -A."""
    creat = [sp.identity(A.shape[0], format="csr")]
    annih = [sp.identity(A.shape[0], format="csr")]
    At = A.T.tocsr()
    for _ in range(l):
        creat.append((creat[-1] @ At).tocsr())
        annih.append((annih[-1] @ A).tocsr())
    out = sp.csr_matrix(A.shape)
    for p in range(l + 1):
        out = out + math.comb(l, p) * (creat[p] @ annih[l - p])
    return ((-1.0) ** l * out).tocsr()


# ----------------------------------------------------------------------------
# Hamiltonian assembly
# ----------------------------------------------------------------------------

@dataclass
class SparseHamiltonian:
    """AD-frame Hamiltonian kept in tensor-factored form.

    H = diag(energies) + sum_l kron(Xi_l, W_l) with photon-side Xi_l sparse
    and matter-side W_l dense (alpha_c x alpha_c); all blocks real symmetric.
    """

    basis: FewPhotonBasis
    diagonal: np.ndarray
    photon_terms: list          # [(csr Xi_l, ndarray W_l)]
    e_zp: float

    @property
    def dimension(self) -> int:
        return self.diagonal.size

    def matvec(self, v: np.ndarray) -> np.ndarray:
        ac = self.basis.alpha_c
        Vm = v.reshape(self.basis.n_photon_states, ac)
        out = self.diagonal * v
        acc = np.zeros_like(Vm)
        for xi_l, w_l in self.photon_terms:
            acc += (xi_l @ Vm) @ w_l
        return out + acc.reshape(-1)

    def matmat(self, V: np.ndarray) -> np.ndarray:
        nph, ac = self.basis.n_photon_states, self.basis.alpha_c
        k = V.shape[1]
        Vm = V.reshape(nph, ac, k)
        out = self.diagonal[:, None] * V
        acc = np.zeros_like(Vm)
        for xi_l, w_l in self.photon_terms:
            y = (xi_l @ Vm.reshape(nph, ac * k)).reshape(nph, ac, k)
            acc += np.einsum("ab,pbk->pak", w_l, y)
        return out + acc.reshape(-1, k)

    def to_linear_operator(self) -> LinearOperator:
        d = self.dimension
        return LinearOperator((d, d), matvec=self.matvec, matmat=self.matmat,
                              dtype=float)

    def to_sparse(self) -> sp.csr_matrix:
        ac = self.basis.alpha_c
        H = sp.diags(self.diagonal).tocsr()
        for xi_l, w_l in self.photon_terms:
            H = H + sp.kron(xi_l, sp.csr_matrix(w_l), format="csr")
        return H

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def hermiticity_residual(self) -> float:
        H = self.to_sparse()
        return float(abs(H - H.T).max())

    def parity_vector(self, matter: MatterSpectrum) -> Optional[np.ndarray]:
        """Diagonal of the total parity operator, or None if V is asymmetric."""
        if np.any(matter.parity == 0):
            return None
        ph = (-1.0) ** self.basis.totals
        return np.repeat(ph, self.basis.alpha_c) * np.tile(
            matter.parity[: self.basis.alpha_c].astype(float),
            self.basis.n_photon_states)


def assemble_hamiltonian(basis: FewPhotonBasis, ad: ADParameters,
                         frame: OrthogonalFrame, matter: MatterSpectrum,
                         include_zero_point: bool = True) -> SparseHamiltonian:
    """Assemble H_U on the few-photon basis.

    The interaction enters as sum_l (:Xi^l:_Wick / l!) Veff^(l)(Q): Wick
    ordering pairs with derivatives of the dressed potential, which reproduces
    V(Q + Xi) exactly; for a quartic well the sum terminates at l = 4.
    """
    if basis.n_modes != frame.L:
        raise ValueError(f"basis has {basis.n_modes} modes but frame has {frame.L}")
    if basis.alpha_c > matter.alpha_c:
        raise ValueError(f"basis wants alpha_c={basis.alpha_c} matter levels, "
                         f"solver provided {matter.alpha_c}")
    if abs(matter.m_eff - float(np.atleast_1d(ad.m_eff)[0])) > 1e-10 * matter.m_eff:
        raise ValueError("matter spectrum was solved with a different m_eff")
    hbar = frame.hbar
    ac = basis.alpha_c
    e_zp = frame.zero_point_shift if include_zero_point else 0.0
    photon_energy = basis.configs @ (hbar * frame.Omega)
    diag = (np.repeat(photon_energy, ac)
            + np.tile(matter.E[:ac], basis.n_photon_states) + e_zp)

    dressed = ad.dressed
    l_max = min(dressed.interaction_order(), 2 * basis.n_c) if basis.n_c > 0 else 0
    terms = []
    if l_max >= 1:
        A = sum(x * op for x, op in zip(frame.xi, annihilators(basis)))
        xi_cache = {}
        for l in range(1, l_max + 1):
            w = matter.matrix_of(np.asarray(dressed.deriv_value(matter.q, l),
                                            dtype=float))[:ac, :ac] / math.factorial(l)
            if np.max(np.abs(w)) == 0.0:
                continue
            xi_l = xi_cache.get(l)
            if xi_l is None:
                xi_l = _xi_power_normal(A.tocsr(), l)
                xi_cache[l] = xi_l
            terms.append((xi_l, 0.5 * (w + w.T)))
    return SparseHamiltonian(basis=basis, diagonal=diag, photon_terms=terms, e_zp=e_zp)


# ----------------------------------------------------------------------------
# Diagonalization
# ----------------------------------------------------------------------------

@dataclass
class EDResult:
    """Eigenpairs with exact total-parity labels and convergence metadata."""

    energies: np.ndarray
    vectors: Optional[np.ndarray]
    parity: Optional[np.ndarray]
    n_c: int
    alpha_c: int
    method: str
    residual: float = 0.0

    @property
    def excitations(self) -> np.ndarray:
        return self.energies - self.energies[0]

    @property
    def n_states(self) -> int:
        return self.energies.size


def diagonalize(h: SparseHamiltonian, n_eigs: Optional[int] = None,
                method: str = "auto", matter: Optional[MatterSpectrum] = None,
                keep_vectors: bool = True, maxiter: int = 100000) -> EDResult:
    """Lowest n_eigs eigenpairs (all of them if n_eigs is None).

    method "dense" uses LAPACK on the materialized matrix, "iterative" runs
    Lanczos on the factored matvec with a deterministic all-ones start vector;
    "auto" picks dense for small dimensions.  Near-degenerate clusters are
    rotated onto exact total-parity eigenstates when the potential is
    symmetric.
    """
    d = h.dimension
    if method == "auto":
        method = "dense" if (n_eigs is None or d <= 3500) else "iterative"
    if n_eigs is None:
        n_eigs = d
    n_eigs = min(n_eigs, d)

    residual = 0.0
    if method == "dense":
        if d > DENSE_LIMIT:
            raise ValueError(f"dense path refused for dimension {d} > {DENSE_LIMIT}")
        vals, vecs = eigh(h.to_dense())
        vals, vecs = vals[:n_eigs], vecs[:, :n_eigs]
    elif method == "iterative":
        if n_eigs >= d - 1:
            raise ValueError("iterative path needs n_eigs < dimension - 1")
        op = h.to_linear_operator()
        v0 = np.full(d, 1.0 / math.sqrt(d))
        try:
            vals, vecs = eigsh(op, k=n_eigs, which="SA", v0=v0,
                               ncv=min(d - 1, max(4 * n_eigs + 20, 60)),
                               maxiter=maxiter, tol=1e-12)
        except Exception as exc:  # noqa: BLE001 - convergence failures carry residuals
            raise ArithmeticError(f"Lanczos failed to converge: {exc}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        residual = float(max(np.linalg.norm(h.matvec(vecs[:, i]) - vals[i] * vecs[:, i])
                             for i in range(n_eigs)))
    else:
        raise ValueError(f"unknown method {method!r}")

    parity = None
    if matter is not None:
        pvec = h.parity_vector(matter)
        if pvec is not None:
            vecs = _purify_parity(vals, vecs, pvec)
            praw = np.einsum("di,d,di->i", vecs, pvec, vecs)
            parity = np.where(praw >= 0, 1, -1).astype(int)
            if np.max(np.abs(np.abs(praw) - 1.0)) > 1e-8:
                parity = None  # mixed beyond repair; report unlabeled
    return EDResult(energies=vals, vectors=vecs if keep_vectors else None,
                    parity=parity, n_c=h.basis.n_c, alpha_c=h.basis.alpha_c,
                    method=method, residual=residual)


def _purify_parity(vals: np.ndarray, vecs: np.ndarray, pvec: np.ndarray,
                   rtol: float = 1e-10) -> np.ndarray:
    """Rotate numerically degenerate clusters onto parity eigenstates."""
    out = vecs.copy()
    i = 0
    n = vals.size
    scale = max(1.0, float(np.max(np.abs(vals))))
    while i < n:
        j = i + 1
        while j < n and vals[j] - vals[i] < rtol * scale:
            j += 1
        if j - i > 1:
            block = out[:, i:j]
            pmat = block.T @ (pvec[:, None] * block)
            _, rot = eigh(pmat)
            out[:, i:j] = block @ rot
        i = j
    return out


# ----------------------------------------------------------------------------
# Expectation helpers
# ----------------------------------------------------------------------------

def occupation_expectation(basis: FewPhotonBasis, vector: np.ndarray) -> float:
    """<sum_n c_n^dag c_n> in the AD frame (diagonal in the Fock basis)."""
    w = vector.reshape(basis.n_photon_states, basis.alpha_c)
    return float(np.sum(basis.totals[:, None] * w**2))

def zero_photon_weight(basis: FewPhotonBasis, vector: np.ndarray) -> float:
    return float(np.sum(vector[: basis.alpha_c] ** 2))


def emitter_level_weights(basis: FewPhotonBasis, vector: np.ndarray) -> np.ndarray:
    w = vector.reshape(basis.n_photon_states, basis.alpha_c)
    return np.sum(w**2, axis=0)


# ----------------------------------------------------------------------------
# Assembled single-emitter system
# ----------------------------------------------------------------------------

@dataclass
class EDSystem:
    """Everything needed to diagonalize and post-process one configuration."""

    waveguide: WaveguideSpec
    emitter: EmitterSpec
    coupling: CouplingProfile
    scales: CharacteristicScales
    modes: ModeSet
    frame: OrthogonalFrame
    ad: ADParameters
    matter: MatterSpectrum
    basis: FewPhotonBasis
    hamiltonian: SparseHamiltonian

    @property
    def hbar(self) -> float:
        return self.waveguide.hbar

    def diagonalize(self, n_eigs: Optional[int] = None, method: str = "auto",
                    keep_vectors: bool = True) -> EDResult:
        return diagonalize(self.hamiltonian, n_eigs=n_eigs, method=method,
                           matter=self.matter, keep_vectors=keep_vectors)


def prepare_system(waveguide: WaveguideSpec, emitter: EmitterSpec,
                   g: Optional[float] = None, *, coupling: Optional[CouplingProfile] = None,
                   n_c: int = 3, alpha_c: int = 10,
                   grid: Optional[tuple[float, int]] = None,
                   fold: Optional[bool] = None,
                   max_dim: int = 4_000_000) -> EDSystem:
    """Build frame, AD parameters, matter spectrum, basis and Hamiltonian.

    Folding is applied automatically for a cavity array with the emitter at
    site 0; other dispersions keep the bare modes.
    """
    if coupling is None:
        if g is None:
            raise ValueError("pass either g or an explicit coupling profile")
        coupling = coupling_for_strength(waveguide, g, charge=emitter.charge,
                                         mass=emitter.mass)
    scales = characteristic_scales(waveguide, coupling, emitter)
    if fold is None:
        fold = waveguide.kind == "cavity-array" and emitter.position == 0
    if fold and emitter.position != 0:
        raise ValueError("even-mode folding requires the emitter at site 0; "
                         "use the multi-emitter (symplectic) path instead")
    modes = fold_even_modes(waveguide, coupling) if fold else bare_modes(waveguide, coupling)
    frame = orthogonal_frame(modes.omega, modes.g, mass=emitter.mass,
                             hbar=waveguide.hbar)
    folded_coupling = CouplingProfile(amplitude=coupling.amplitude,
                                      charge=coupling.charge, mass=coupling.mass,
                                      f=modes.f, g_k=modes.g,
                                      g=float(np.sqrt(np.sum(modes.g**2))))
    ad = mass_renormalization(frame, folded_coupling, waveguide, emitter)
    matter = solve_matter_eigenstates(ad.dressed, float(ad.m_eff), alpha_c,
                                      hbar=waveguide.hbar, grid=grid)
    basis = enumerate_basis(modes.n_modes, n_c, alpha_c, max_dim=max_dim)
    ham = assemble_hamiltonian(basis, ad, frame, matter)
    return EDSystem(waveguide=waveguide, emitter=emitter, coupling=coupling,
                    scales=scales, modes=modes, frame=frame, ad=ad,
                    matter=matter, basis=basis, hamiltonian=ham)


# ----------------------------------------------------------------------------
# Convergence study
# ----------------------------------------------------------------------------

def convergence_study(waveguide: WaveguideSpec, emitter: EmitterSpec,
                      g_list: Sequence[float], n_c_list: Sequence[int],
                      alpha_c_list: Sequence[int], n_levels: int = 5) -> dict:
    """Excitation-energy tables against the cutoffs, with successive changes.

    Returns {"rows": [...], "max_rel_change": {(g, cutoff_kind): ...}} where
    rows carry the lowest n_levels excitation energies per (g, N_c, alpha_c).
    """
    n_c_list = sorted(set(int(x) for x in n_c_list))
    alpha_c_list = sorted(set(int(x) for x in alpha_c_list))
    if len(n_c_list) + len(alpha_c_list) < 3:
        raise ValueError("need at least two values of one cutoff")
    rows = []
    table = {}
    for g in g_list:
        for nc in n_c_list:
            for ac in alpha_c_list:
                system = prepare_system(waveguide, emitter, g, n_c=nc, alpha_c=ac)
                res = system.diagonalize(n_eigs=n_levels + 1, keep_vectors=False)
                exc = res.excitations[1: n_levels + 1]
                table[(g, nc, ac)] = exc
                rows.append({"g": float(g), "n_c": nc, "alpha_c": ac,
                             "excitations": exc})
    changes = {}
    for g in g_list:
        ac = alpha_c_list[-1]
        for a, b in zip(n_c_list[:-1], n_c_list[1:]):
            prev, cur = table[(g, a, ac)], table[(g, b, ac)]
            changes[(float(g), "n_c", a, b)] = float(
                np.max(np.abs(cur - prev) / np.maximum(np.abs(cur), 1e-300)))
        nc = n_c_list[-1]
        for a, b in zip(alpha_c_list[:-1], alpha_c_list[1:]):
            prev, cur = table[(g, nc, a)], table[(g, nc, b)]
            changes[(float(g), "alpha_c", a, b)] = float(
                np.max(np.abs(cur - prev) / np.maximum(np.abs(cur), 1e-300)))
    return {"rows": rows, "max_rel_change": changes}
