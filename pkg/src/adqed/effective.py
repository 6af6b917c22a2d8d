"""
Reduced models: renormalized and bare Jaynes-Cummings, the single-excitation
bound-state equation, and the multi-emitter transverse-field Ising / LMG
reductions.

The AD-frame two-level model keeps the standard JC form but with renormalized
parameters Delta_g = (E2 - E1)/hbar and couplings g_n = (xi_n/hbar)
<psi_1|dV/dQ|psi_2>, all g-dependent through m_eff and V_eff.  The bare
Coulomb-gauge counterpart uses the g = 0 matter spectrum with couplings
(g/sqrt(L)) x_omega_c <psi_1|d/dQ|psi_2>; it is only trustworthy below the
ultrastrong regime and is provided for comparison.  A quantum-Rabi variant
(counter-rotating terms kept) covers the regime Delta_g < max_n g_n where the
rotating-wave form degrades.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.optimize import brentq

from .adframe import ADParameters, MatterSpectrum, solve_matter_eigenstates
from .bosons import OrthogonalFrame, SymplecticFrame
from .ed import annihilators, enumerate_basis
from .model import CouplingProfile, EmitterSpec, WaveguideSpec

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])


# ----------------------------------------------------------------------------
# Jaynes-Cummings models
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class JCModel:
    """Two-level model; frame_tag is "AD" (renormalized) or "Coulomb" (bare)."""

    frame_tag: str
    delta: float                 # qubit frequency
    omegas: np.ndarray           # mode frequencies
    couplings: np.ndarray        # per-mode couplings (frequency units)
    hbar: float = 1.0

    @property
    def rwa_valid(self) -> bool:
        """Paper caveat: the rotating-wave form degrades once Delta < max g_n."""
        return self.delta >= float(np.max(np.abs(self.couplings)))

    def to_json(self) -> str:
        return json.dumps({
            "frame": self.frame_tag,
            "delta": self.delta,
            "omegas": list(map(float, self.omegas)),
            "couplings": list(map(float, self.couplings)),
            "rwa_valid": self.rwa_valid,
        }, sort_keys=True)


def build_jc_ad(ad: ADParameters, matter: MatterSpectrum,
                frame: OrthogonalFrame) -> JCModel:
    """Renormalized JC model in the AD frame (paper-form couplings, bare dV/dQ)."""
    if matter.alpha_c < 2:
        raise ValueError("need at least two matter levels")
    hbar = frame.hbar
    delta_g = (matter.E[1] - matter.E[0]) / hbar
    dv = np.asarray(ad.dressed.base.deriv_value(matter.q, 1), dtype=float)
    dipole = float(matter.matrix_of(dv)[0, 1])
    if abs(dipole) < 1e-14:
        raise ValueError("vanishing dipole matrix element <psi1|dV/dQ|psi2>; "
                         "the two-level model is degenerate")
    couplings = frame.xi * dipole / hbar
    return JCModel(frame_tag="AD", delta=float(delta_g), omegas=frame.Omega.copy(),
                   couplings=couplings, hbar=hbar)


def build_jc_coulomb(waveguide: WaveguideSpec, g: float, emitter: EmitterSpec,
                     alpha_c: int = 4) -> JCModel:
    """Bare-parameter JC model in the Coulomb gauge.

    Valid at weak coupling only; the construction is documented to break down
    beyond the ultrastrong regime and is kept for exactly that comparison.
    """
    hbar = waveguide.hbar
    matter0 = solve_matter_eigenstates(emitter.potential, emitter.mass,
                                       max(2, alpha_c), hbar=hbar)
    delta = (matter0.E[1] - matter0.E[0]) / hbar
    omega_ref = waveguide.omega_c or float(np.mean(waveguide.omega))
    x_ref = math.sqrt(hbar / (emitter.mass * omega_ref))
    dip = float(matter0.ddq_matrix()[0, 1])
    gtil = (g / math.sqrt(waveguide.L)) * x_ref * dip
    return JCModel(frame_tag="Coulomb", delta=float(delta),
                   omegas=waveguide.omega.copy(),
                   couplings=np.full(waveguide.L, gtil), hbar=hbar)


def solve_single_excitation(jc: JCModel, all_branches: bool = False):
    """Roots of E - Delta = sum_n g_n^2/(E - Omega_n) by bracketed bisection.

    The principal root sits below the lowest coupled pole and always exists.
    With all_branches=True the roots on every inter-pole interval are returned
    as well (ascending).  Residuals are below 1e-10.
    """
    g2 = jc.couplings**2
    live = g2 > 1e-30
    if not np.any(live):
        return jc.delta if not all_branches else [jc.delta]
    poles = np.sort(jc.omegas[live])
    g2 = g2[live]
    om = jc.omegas[live]

    def f(e):
        return e - jc.delta - float(np.sum(g2 / (e - om)))

    def root_in(lo, hi):
        return brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)

    pmin = poles[0]
    lo = min(jc.delta, pmin) - 10.0 * (float(np.sqrt(np.sum(g2))) + 1.0)
    hi = pmin - 1e-13 * max(1.0, pmin)
    while f(lo) >= 0:
        lo -= 10.0
    main = root_in(lo, hi)
    if not all_branches:
        return float(main)
    roots = [float(main)]
    uniq = np.unique(poles)
    for a, b in zip(uniq[:-1], uniq[1:]):
        eps = 1e-12 * max(1.0, b - a)
        la, lb = a + eps, b - eps
        if f(la) > 0 and f(lb) < 0:
            roots.append(float(root_in(la, lb)))
    return roots


def rabi_excitation_energy(jc: JCModel, n_c: int = 3) -> float:
    """First excitation of the quantum-Rabi variant (counter-rotating kept).

    Small dense ED on the two-level x few-photon product space; used when
    rwa_valid is False.
    """
    basis = enumerate_basis(jc.omegas.size, n_c, 1)
    nph = basis.n_photon_states
    hbar = jc.hbar
    ph_diag = basis.configs @ (hbar * jc.omegas)
    H = np.kron(np.diag(ph_diag), np.eye(2)) + np.kron(np.eye(nph), 0.5 * hbar * jc.delta * _SZ)
    for gn, C in zip(jc.couplings, annihilators(basis)):
        x_op = (C + C.T).toarray()
        H += hbar * gn * np.kron(x_op, _SX)
    vals = np.linalg.eigvalsh(H)
    return float(vals[1] - vals[0])


# ----------------------------------------------------------------------------
# Ising / LMG reductions
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class IsingModel:
    """Transverse-field Ising reduction of the multi-emitter AD Hamiltonian.

    H = sum_j (hbar Delta_gj/2) sigma^z_j + sum_{i>j} J_ij sigma^x_i sigma^x_j,
    optionally retaining the photon sector (Omega_n, couplings g_nj) for
    few-photon runs.  The boson sector is dropped by default (photon vacuum
    projection).
    """

    delta_g: np.ndarray
    J: np.ndarray
    hbar: float = 1.0
    omegas: Optional[np.ndarray] = None
    boson_couplings: Optional[np.ndarray] = None

    @property
    def n_spins(self) -> int:
        return self.delta_g.size

    def to_json(self) -> str:
        payload = {
            "delta_g": list(map(float, self.delta_g)),
            "J": [list(map(float, row)) for row in self.J],
        }
        if self.omegas is not None:
            payload["omegas"] = list(map(float, self.omegas))
        return json.dumps(payload, sort_keys=True)


@dataclass(frozen=True)
class LMGModel:
    """Zero-separation collective limit: H = (hbar Delta_g/2) S^z + (J'/2)((S^x)^2 - N).

    The (S^x)^2 normalization is fixed so the spectrum matches the Ising model
    with constant couplings J_ij = J' exactly (constant term kept).
    """

    delta_g: float
    J_prime: float
    n_spins: int
    hbar: float = 1.0


def build_ising(waveguide: WaveguideSpec, emitters: Sequence[EmitterSpec],
                coupling: CouplingProfile, frame: SymplecticFrame,
                ad: ADParameters, alpha_c: int = 4,
                include_bosons: bool = False) -> IsingModel:
    """Per-emitter two-level reduction with waveguide-mediated J_ij.

    J_ij = hbar^2 mu_ij <psi_1i|d/dQ|psi_2i><psi_1j|d/dQ|psi_2j>; the fields
    Delta_gj come from each emitter's renormalized spectrum.  Eigenfunction
    signs are fixed at the leftmost antinode, which makes the dipole factors
    real and reproducible.
    """
    emitters = list(emitters)
    n = len(emitters)
    hbar = waveguide.hbar
    m_eff = np.atleast_1d(ad.m_eff)
    dressed_list = ad.dressed if isinstance(ad.dressed, tuple) else (ad.dressed,) * n
    delta = np.empty(n)
    dip = np.empty(n)
    dipv = np.empty(n)
    solved = []   # identical emitters share one solve (ULP-level m_eff noise
    # would otherwise flip the discrete auto-grid policy)
    for j, e in enumerate(emitters):
        base_id = (tuple(dressed_list[j].base.coeffs)
                   if dressed_list[j].base.is_polynomial else id(dressed_list[j].base))
        key = (float(m_eff[j]), float(dressed_list[j].xi), base_id)
        matter = None
        for (mk, xik, bk), cached in solved:
            if bk == base_id and abs(mk - key[0]) <= 1e-12 * mk \
                    and abs(xik - key[1]) <= 1e-12 * (1 + xik):
                matter = cached
                break
        if matter is None:
            matter = solve_matter_eigenstates(dressed_list[j], float(m_eff[j]),
                                              max(2, alpha_c), hbar=hbar)
            solved.append((key, matter))
        delta[j] = (matter.E[1] - matter.E[0]) / hbar
        dip[j] = float(matter.ddq_matrix()[0, 1])
        base = dressed_list[j].base
        dipv[j] = float(matter.matrix_of(
            np.asarray(base.deriv_value(matter.q, 1), dtype=float))[0, 1])
    mu = ad.mu if ad.mu is not None else np.zeros((n, n))
    J = hbar**2 * mu * np.outer(dip, dip)
    np.fill_diagonal(J, 0.0)
    omegas = couplings = None
    if include_bosons:
        omegas = frame.Omega.copy()
        couplings = frame.xi * dipv[None, :] / hbar
    return IsingModel(delta_g=delta, J=J, hbar=hbar, omegas=omegas,
                      boson_couplings=couplings)


def lmg_limit(ising: IsingModel, tol: float = 1e-8) -> LMGModel:
    """Collapse a constant-coupling Ising model onto the LMG form."""
    n = ising.n_spins
    if n < 2:
        raise ValueError("LMG limit needs at least two spins")
    off = ising.J[np.triu_indices(n, 1)]
    if np.max(np.abs(off - off[0])) > tol * max(1.0, abs(off[0])):
        raise ValueError("J_ij is not constant; emitters are not co-located")
    if np.max(np.abs(ising.delta_g - ising.delta_g[0])) > tol * max(1.0, abs(ising.delta_g[0])):
        raise ValueError("transverse fields differ; emitters are not identical")
    return LMGModel(delta_g=float(ising.delta_g[0]), J_prime=float(off[0]),
                    n_spins=n, hbar=ising.hbar)


def _spin_chain_operator(n: int, ops: dict) -> sp.csr_matrix:
    """Kronecker chain with 2x2 blocks at the sites listed in ops."""
    out = sp.identity(1, format="csr")
    for site in range(n):
        blk = sp.csr_matrix(ops.get(site, np.eye(2)))
        out = sp.kron(out, blk, format="csr")
    return out


def spin_hamiltonian(model, bias: float = 0.0) -> sp.csr_matrix:
    """Dense-ready sparse 2^N Hamiltonian of an Ising or LMG model."""
    if isinstance(model, LMGModel):
        n = model.n_spins
        J = np.full((n, n), model.J_prime)
        np.fill_diagonal(J, 0.0)
        delta = np.full(n, model.delta_g)
        hbar = model.hbar
    else:
        n = model.n_spins
        J, delta, hbar = model.J, model.delta_g, model.hbar
    if n > 14:
        raise ValueError(f"spin ED limited to N <= 14 (got {n})")
    H = sp.csr_matrix((2**n, 2**n))
    for j in range(n):
        H = H + 0.5 * hbar * delta[j] * _spin_chain_operator(n, {j: _SZ})
        if bias != 0.0:
            H = H - bias * _spin_chain_operator(n, {j: _SX})
    for i in range(n):
        for j in range(i):
            if J[i, j] != 0.0:
                H = H + J[i, j] * _spin_chain_operator(n, {i: _SX, j: _SX})
    return H.tocsr()


def diagonalize_spins(model, bias: Optional[float] = None) -> dict:
    """Full spectrum of the 2^N spin model plus the biased magnetization.

    bias=None applies an infinitesimal symmetry-breaking field -b sum sigma^x
    with b = 1e-8 x the dominant energy scale before measuring <S^x> in the
    ground state.
    """
    if isinstance(model, LMGModel):
        scale = max(abs(model.delta_g), abs(model.J_prime), 1e-12)
        n = model.n_spins
    else:
        scale = max(float(np.max(np.abs(model.delta_g))),
                    float(np.max(np.abs(model.J))), 1e-12)
        n = model.n_spins
    b = 1e-8 * scale if bias is None else bias
    energies = np.linalg.eigvalsh(spin_hamiltonian(model).toarray())
    vals, vecs = eigh(spin_hamiltonian(model, bias=b).toarray())
    sx_total = sum(_spin_chain_operator(n, {j: _SX}) for j in range(n))
    ground = vecs[:, 0]
    m_x = float(ground @ (sx_total @ ground))
    return {"energies": energies, "magnetization_x": m_x, "bias": b}
