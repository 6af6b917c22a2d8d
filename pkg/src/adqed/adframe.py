"""
Asymptotically decoupled frame: mass renormalization, vacuum-dressed
potentials, and the renormalized single-particle matter problem.

The decoupling unitary exp(-i P Xi / hbar) trades the minimal coupling for a
mass enhancement m_eff = m (1 + 2 Theta) with Theta = sum_k (g_k/omega_k)^2
and a dressing of the potential by the vacuum fluctuations of the photon
displacement Xi,

    V_eff(Q) = V(Q) + sum_{l>=1} xi^(2l)/(2l)!! V^(2l)(Q),  xi^2 = sum_n xi_n^2.

For the quartic double well the series closes: V_eff is again a double well
with barrier v_eff = v (1 - 3 xi^2/d^2)^2 (zero once xi > d/sqrt(3)) and
d_eff = d (v_eff/v)^(1/4), up to an exactly tracked constant.

With several emitters the inverse-mass matrix is [(1+2G)^(-1)]_ij /
sqrt(m_i m_j) with G_ij = sum_k g_ki g_kj cos(k(x_i - x_j))/omega_k^2; its
diagonal gives m_eff,j and its off-diagonal the waveguide-mediated
momentum-momentum couplings mu_ij.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .bosons import (OrthogonalFrame, SymplecticFrame, multi_emitter_couplings,
                     orthogonal_frame)
from .model import (CouplingProfile, DoubleWellPotential, EmitterSpec,
                    PolynomialPotential, WaveguideSpec, _loglog_fit,
                    coupling_for_strength, point_coupling)

_FRAME_IDENTITY_TOL = 1e-8


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


# ----------------------------------------------------------------------------
# Dressed potentials
# ----------------------------------------------------------------------------

class DressedPotential:
    """Vacuum-dressed potential descriptor, evaluable at any Q.

    For polynomial bases the even-derivative series terminates exactly at the
    polynomial degree; for tabulated bases it is truncated once the explicit
    tail bound xi^(2l) max|V^(2l)|/(2l)!! < 1e-10 certifies convergence.
    """

    def __init__(self, base, xi: float, tail_tol: float = 1e-10):
        self.base = base
        self.xi = float(xi)
        self.v_eff = None
        self.d_eff = None
        if isinstance(base, PolynomialPotential):
            coeffs = np.zeros_like(base.coeffs)
            for l in range(0, base.degree // 2 + 1):
                term = (self.xi ** (2 * l) / double_factorial(2 * l)) * np.pad(
                    np.polynomial.polynomial.polyder(base.coeffs, 2 * l) if l else base.coeffs,
                    (0, 2 * l))
                coeffs = coeffs + term[: coeffs.size]
            self._poly = PolynomialPotential(coeffs)
        else:
            max_order = getattr(base, "max_derivative_order", 4)
            probe = np.linspace(base.q_min, base.q_max, 512)
            # first omitted term is l = 3 (needs V^(6)); bound it by a second
            # difference of the available fourth derivative
            dq = probe[1] - probe[0]
            d4 = np.asarray(base.deriv_value(probe, 4), dtype=float)
            d6_est = float(np.max(np.abs(np.diff(d4, 2)))) / dq**2
            tail = self.xi**6 / double_factorial(6) * d6_est
            if tail > tail_tol:
                raise ValueError(
                    f"tabulated potential is not smooth enough: dressing tail bound "
                    f"{tail:.2e} exceeds {tail_tol:.0e} at xi={self.xi:.3g}")
            self._poly = None
            self._n_terms = max_order // 2
        if isinstance(base, DoubleWellPotential):
            ratio = 1.0 - 3.0 * self.xi**2 / base.d**2
            self.v_eff = base.v * ratio**2 if ratio > 0 else 0.0
            self.d_eff = base.d * (self.v_eff / base.v) ** 0.25

    @property
    def is_polynomial(self) -> bool:
        return self._poly is not None

    @property
    def is_symmetric(self) -> bool:
        return self._poly.is_symmetric if self._poly is not None else self.base.is_symmetric

    def interaction_order(self) -> int:
        """Highest derivative order entering the interaction expansion."""
        return self.base.degree if self._poly is not None else self.base.max_derivative_order

    def value(self, q):
        if self._poly is not None:
            return self._poly.value(q)
        out = self.base.value(q)
        for l in range(1, self._n_terms + 1):
            out = out + self.xi ** (2 * l) / double_factorial(2 * l) \
                * self.base.deriv_value(q, 2 * l)
        return out

    def deriv_value(self, q, order: int):
        """order-th derivative of V_eff, i.e. sum_l xi^2l/(2l)!! V^(order+2l)."""
        if self._poly is not None:
            return self._poly.deriv_value(q, order)
        out = self.base.deriv_value(q, order)
        l = 1
        while order + 2 * l <= self.base.max_derivative_order:
            out = out + self.xi ** (2 * l) / double_factorial(2 * l) \
                * self.base.deriv_value(q, order + 2 * l)
            l += 1
        return out

    def confining(self) -> bool:
        return self._poly.confining() if self._poly is not None else self.base.confining()


def dressed_potential(emitter: EmitterSpec, xi_total: float) -> DressedPotential:
    """Dress the emitter potential with vacuum displacement fluctuations."""
    if not (emitter.potential.is_polynomial
            or hasattr(emitter.potential, "max_derivative_order")):
        raise ValueError("potential must be polynomial or 4-times differentiable")
    return DressedPotential(emitter.potential, xi_total)


# ----------------------------------------------------------------------------
# AD parameters
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ADParameters:
    """Renormalized frame quantities; scalars for one emitter, arrays for N."""

    theta: Union[float, np.ndarray]
    m_eff: Union[float, np.ndarray]
    xi_total: Union[float, np.ndarray]
    dressed: Union[DressedPotential, tuple]
    mu: Optional[np.ndarray] = None
    G: Optional[np.ndarray] = None
    theta_divergent: bool = False

    @property
    def n_emitters(self) -> int:
        return 1 if np.isscalar(self.m_eff) else len(np.atleast_1d(self.m_eff))


def mass_renormalization(frame: Union[OrthogonalFrame, SymplecticFrame],
                         coupling: CouplingProfile, waveguide: WaveguideSpec,
                         emitters: Union[EmitterSpec, Sequence[EmitterSpec]]) -> ADParameters:
    """Theta, effective masses and (multi-emitter) mu/G couplings.

    Theta is computed from the bare sum sum_k (g_k/omega_k)^2 and cross-checked
    against the frame identity 1 - sum_n 2 m zeta_n^2/(hbar Omega_n) =
    1/(1+2 Theta) to 1e-8; a violation signals an inconsistent frame.
    """
    divergent = waveguide.kind == "power-law" and (waveguide.exponent or 0) >= 1.0
    hbar = waveguide.hbar
    if isinstance(frame, OrthogonalFrame):
        if coupling.g_k.size != frame.L:
            raise ValueError("coupling and frame live on different mode sets")
        emitter = emitters if isinstance(emitters, EmitterSpec) else emitters[0]
        # frame.omega holds the bare frequencies of the mode set the frame was
        # built on (folded even modes for a centered cavity-array emitter)
        theta = float(np.sum((coupling.g_k / frame.omega) ** 2))
        s = float(np.sum(2.0 * emitter.mass * frame.zeta**2 / (hbar * frame.Omega)))
        theta_frame = s / (2.0 * (1.0 - s))
        if abs(theta - theta_frame) > _FRAME_IDENTITY_TOL * (1.0 + theta):
            raise ArithmeticError(
                f"frame identity violated: Theta(bare)={theta:.12g} vs "
                f"Theta(frame)={theta_frame:.12g}")
        xi_total = frame.xi_total
        return ADParameters(theta=theta, m_eff=emitter.mass * (1.0 + 2.0 * theta),
                            xi_total=xi_total,
                            dressed=dressed_potential(emitter, xi_total),
                            theta_divergent=divergent)

    emitters = list(emitters)
    gc, gs, masses, x = multi_emitter_couplings(waveguide, emitters, coupling)
    inv_w2 = 1.0 / waveguide.omega**2
    # G_ij = sum_k g_ki g_kj cos(k (x_i - x_j)) / omega_k^2 == gc^T gc + gs^T gs weighted
    G = (gc * inv_w2[:, None]).T @ gc + (gs * inv_w2[:, None]).T @ gs
    M = np.linalg.inv(np.eye(len(emitters)) + 2.0 * G)
    m_eff = masses / np.diag(M)
    mu = M / np.sqrt(np.outer(masses, masses))
    np.fill_diagonal(mu, 0.0)

    # frame identity: Re sum_n 2 sqrt(m_i m_j) zeta*_ni zeta_nj/(hbar Omega_n) = (1 - M)_ij
    zsc = frame.zeta * np.sqrt(masses)[None, :]
    T = 2.0 * np.real(np.einsum("ni,nj,n->ij", np.conj(zsc), zsc, 1.0 / (hbar * frame.Omega)))
    if np.max(np.abs(T - (np.eye(len(emitters)) - M))) > _FRAME_IDENTITY_TOL:
        raise ArithmeticError("multi-emitter frame identity violated; "
                              "zeta couplings inconsistent with (1+2G)^-1")

    xi_j = np.sqrt(np.sum(np.abs(frame.xi) ** 2, axis=0).real)
    dressed = tuple(dressed_potential(e, xi) for e, xi in zip(emitters, xi_j))
    return ADParameters(theta=np.diag(G).copy(), m_eff=m_eff, xi_total=xi_j,
                        dressed=dressed, mu=mu, G=G, theta_divergent=divergent)


# ----------------------------------------------------------------------------
# Matter eigenproblem
# ----------------------------------------------------------------------------

@dataclass
class MatterSpectrum:
    """Lowest alpha_c eigenpairs of P^2/(2 m_eff) + V_eff(Q) on a uniform grid."""

    q: np.ndarray
    psi: np.ndarray            # (alpha_c, n_grid), quadrature-normalized
    E: np.ndarray              # ascending
    parity: np.ndarray         # +-1, or 0 when the potential is asymmetric
    m_eff: float
    hbar: float
    v_values: np.ndarray       # V_eff on the grid
    grid_converged: bool = True

    @property
    def dq(self) -> float:
        return float(self.q[1] - self.q[0])

    @property
    def alpha_c(self) -> int:
        return self.E.size

    def matrix_of(self, values: np.ndarray) -> np.ndarray:
        """<psi_a| f(Q) |psi_b> for f sampled on the grid."""
        return (self.psi * values[None, :]) @ self.psi.T * self.dq

    def q_matrix(self) -> np.ndarray:
        return self.matrix_of(self.q)

    def ddq_matrix(self) -> np.ndarray:
        """<psi_a| d/dQ |psi_b>, antisymmetrized central differences."""
        dpsi = np.gradient(self.psi, self.dq, axis=1)
        mat = self.psi @ dpsi.T * self.dq
        return 0.5 * (mat - mat.T)

    def d2dq2_matrix(self) -> np.ndarray:
        """<psi_a| d^2/dQ^2 |psi_b>, exact through psi'' = 2m(V-E)psi/hbar^2."""
        fac = 2.0 * self.m_eff / self.hbar**2
        return fac * (self.matrix_of(self.v_values) - np.diag(self.E))

    def sigma_p(self, alpha: int = 0) -> float:
        """Momentum spread of state alpha (reported, no scaling asserted)."""
        dpsi = np.gradient(self.psi[alpha], self.dq)
        return self.hbar * math.sqrt(float(np.sum(dpsi**2) * self.dq))


def _potential_scales(potential, m_eff: float, hbar: float):
    """Rough minimum location, curvature length and level spacing estimates."""
    if isinstance(potential, DressedPotential) and potential.d_eff:
        span = max(2.0 * potential.d_eff, 1.0)
    elif isinstance(potential, DoubleWellPotential):
        span = max(2.0 * potential.d, 1.0)
    else:
        span = 2.0
    for _ in range(40):
        probe = np.linspace(-span, span, 2001)
        v = potential.value(probe)
        i_min = int(np.argmin(v))
        if v[0] > v[i_min] + 1.0 and v[-1] > v[i_min] + 1.0 and 0 < i_min < 2000:
            break
        span *= 1.6
    q0, v0 = probe[i_min], v[i_min]
    hh = probe[1] - probe[0]
    curv = (v[min(i_min + 1, 2000)] - 2.0 * v[i_min] + v[max(i_min - 1, 0)]) / hh**2
    if curv > 1e-8:
        omega_est = math.sqrt(curv / m_eff)
        ell = math.sqrt(hbar / (m_eff * omega_est))
    else:
        # flat quartic bottom: use the quartic energy scale
        i4 = min(i_min + 20, 2000)
        c4 = max(abs(v[i4] - v0) / (probe[i4] - q0 + 1e-300) ** 4, 1e-12)
        ell = (hbar**2 / (m_eff * c4)) ** (1.0 / 6.0)
        omega_est = hbar / (m_eff * ell**2)
    return q0, v0, omega_est, ell


def solve_matter_eigenstates(potential, m_eff: float, alpha_c: int, hbar: float = 1.0,
                             grid: Optional[tuple[float, int]] = None,
                             boundary_tol: float = 1e-10,
                             energy_rtol: float = 1e-6) -> MatterSpectrum:
    """Finite-difference eigensolve with automatic grid sizing.

    The symmetric grid is extended until every retained eigenfunction has
    boundary amplitude below boundary_tol, then refined until a grid-halving
    (Richardson) check converges all retained energies to energy_rtol.
    Dirichlet boundaries, second-order Laplacian.

    grid=(extent, n_points) bypasses the automatic policy (used when two
    potentials must share one quadrature grid, e.g. quench overlaps).
    """
    if alpha_c < 1:
        raise ValueError("alpha_c must be >= 1")
    if m_eff <= 0:
        raise ValueError("m_eff must be positive")
    if hasattr(potential, "confining") and not potential.confining():
        raise ValueError("potential is not confining; matter spectrum undefined")

    def solve(extent: float, n: int):
        q = np.linspace(-extent, extent, n)
        h = q[1] - q[0]
        v = np.asarray(potential.value(q), dtype=float)
        t = hbar**2 / (2.0 * m_eff * h**2)
        vals, vecs = eigh_tridiagonal(v + 2.0 * t, np.full(n - 1, -t),
                                      select="i", select_range=(0, alpha_c - 1))
        psi = vecs.T / math.sqrt(h)
        return q, psi, vals, v

    if grid is not None:
        extent, n = float(grid[0]), int(grid[1])
        if n % 2 == 0:
            n += 1
        q, psi, vals, v = solve(extent, n)
        converged = True
    else:
        q0, v0, omega_est, ell = _potential_scales(potential, m_eff, hbar)
        extent = max(abs(q0) * 1.5, 1.0) + 8.0 * ell
        n = int(2 * math.ceil(extent / min(ell / 12.0, extent / 200.0)) + 1)
        converged = False
        for _ in range(10):
            q, psi, vals, v = solve(extent, n)
            edge = max(np.max(np.abs(psi[:, 0])), np.max(np.abs(psi[:, -1])))
            if edge * math.sqrt(q[1] - q[0]) > boundary_tol:
                extent *= 1.4
                n = int(n * 1.4) | 1
                continue
            q2, psi2, vals2, v2 = solve(extent, 2 * n - 1)
            scale = np.maximum(np.abs(vals2), 1e-12)
            if np.max(np.abs(vals - vals2) / scale) < energy_rtol:
                q, psi, vals, v = q2, psi2, vals2, v2
                converged = True
                break
            n = 2 * n - 1
            if n > 120001:
                break
        if not converged:
            q, psi, vals, v = solve(extent, n)

    psi = _fix_signs(psi)
    symmetric = getattr(potential, "is_symmetric", False)
    parity, psi = _parity_labels(q, psi, vals, symmetric)
    return MatterSpectrum(q=q, psi=psi, E=vals, parity=parity, m_eff=m_eff,
                          hbar=hbar, v_values=v, grid_converged=converged)


def _fix_signs(psi: np.ndarray) -> np.ndarray:
    out = psi.copy()
    for i, p in enumerate(out):
        idx = np.argmax(np.abs(p) > 0.05 * np.max(np.abs(p)))
        if p[idx] < 0:
            out[i] = -p
    return out


def _parity_labels(q, psi, vals, symmetric: bool):
    if not symmetric:
        return np.zeros(len(psi), dtype=int), psi
    h = q[1] - q[0]
    flipped = psi[:, ::-1]
    s = np.sum(psi * flipped, axis=1) * h
    psi = psi.copy()
    # rotate numerically mixed near-degenerate pairs back onto parity eigenstates
    for i in range(len(psi) - 1):
        if abs(s[i]) < 0.99 and abs(s[i + 1]) < 0.99 \
                and abs(vals[i + 1] - vals[i]) < 1e-9 * max(1.0, abs(vals[i])):
            even = psi[i] + psi[i][::-1] + psi[i + 1] + psi[i + 1][::-1]
            odd = psi[i] - psi[i][::-1] + psi[i + 1] - psi[i + 1][::-1]
            if np.linalg.norm(even) > 1e-6 and np.linalg.norm(odd) > 1e-6:
                psi[i] = even
                psi[i + 1] = odd
                s[i] = 1.0
                s[i + 1] = -1.0
    labels = np.where(s >= 0, 1, -1).astype(int)
    # project out residual solver noise: eigenfunctions of a symmetric
    # potential are exact parity eigenstates
    psi = 0.5 * (psi + labels[:, None] * psi[:, ::-1])
    psi /= np.sqrt(np.sum(psi**2, axis=1) * h)[:, None]
    psi = _fix_signs(psi)
    return labels, psi


# ----------------------------------------------------------------------------
# Collective (co-located) emitters
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class CollectiveMode:
    """Center-of-mass reduction of N identical co-located emitters.

    P_CM = sum_j P_j / sqrt(N), Q_CM likewise; M_eff = m (1 + 2 N Theta).
    """

    n_emitters: int
    M_eff: float
    theta: float


def collective_reduction(emitters: Sequence[EmitterSpec], waveguide: WaveguideSpec,
                         coupling: CouplingProfile):
    """Map N identical co-located emitters onto one collective emitter.

    Replacements g_k -> sqrt(N) g_k, d -> sqrt(N) d, v -> N v (bias
    h -> sqrt(N) h); the collective mass is M_eff = m (1 + 2 N Theta) with the
    single-emitter Theta.  Returns (CollectiveMode, mapped_coupling,
    mapped_emitter); relative-motion dynamics is dropped.
    """
    emitters = list(emitters)
    first = emitters[0]
    for e in emitters[1:]:
        same = (abs(e.position - first.position) < 1e-12
                and abs(e.mass - first.mass) < 1e-12
                and type(e.potential) is type(first.potential))
        if same and isinstance(e.potential, PolynomialPotential):
            same = np.array_equal(e.potential.coeffs, first.potential.coeffs)
        if not same:
            raise ValueError("collective reduction needs identical co-located emitters")
    n = len(emitters)
    theta = float(np.sum((coupling.g_k / waveguide.omega) ** 2))
    mode = CollectiveMode(n_emitters=n, M_eff=first.mass * (1.0 + 2.0 * n * theta),
                          theta=theta)
    mapped_coupling = point_coupling(waveguide, coupling.amplitude * math.sqrt(n),
                                     charge=coupling.charge, mass=coupling.mass)
    pot = first.potential
    if isinstance(pot, DoubleWellPotential):
        mapped_pot = DoubleWellPotential(n * pot.v, math.sqrt(n) * pot.d,
                                         h=math.sqrt(n) * pot.h)
    elif isinstance(pot, PolynomialPotential):
        # N V(Q/sqrt(N)): coefficient j scales by N^(1 - j/2)
        j = np.arange(pot.coeffs.size)
        mapped_pot = PolynomialPotential(pot.coeffs * n ** (1.0 - j / 2.0))
    else:
        raise ValueError("collective reduction supports polynomial potentials only")
    mapped_emitter = EmitterSpec(potential=mapped_pot, mass=first.mass,
                                 charge=first.charge, position=first.position)
    return mode, mapped_coupling, mapped_emitter


# ----------------------------------------------------------------------------
# Scaling table
# ----------------------------------------------------------------------------

def scaling_table(waveguide: WaveguideSpec, emitter: EmitterSpec, g_grid: Sequence[float],
                  n_c: int = 2, alpha_c: int = 10) -> dict:
    """Log-log scaling fits of the renormalized parameters against g.

    Emits per-g rows for Omega_0, the rms of Omega_{n != 0}, xi_0/x_omega, the
    rms of xi_{n != 0}/x_omega, m_eff, the AD-frame and Coulomb-gauge ground
    state photon numbers, and the ground-state momentum spread sigma_P (the
    last is reported without asserting an exponent).  Fit standard errors
    accompany each slope.
    """
    from . import dynamics as _dyn
    from . import ed as _ed
    g_grid = np.asarray(list(g_grid), dtype=float)
    if g_grid.size < 4:
        raise ValueError("scaling fits need at least 4 coupling values")
    if np.max(g_grid) / max(np.min(g_grid), 1e-300) < 4.0 * (1 - 1e-9):
        raise ValueError("g grid should span at least a factor of 4")
    rows = []
    for g in g_grid:
        system = _ed.prepare_system(waveguide, emitter, g, n_c=n_c, alpha_c=alpha_c)
        scales = system.scales
        frame = system.frame
        result = _ed.diagonalize(system.hamiltonian, n_eigs=2)
        ground = result.vectors[:, 0]
        n_ad = float(_ed.occupation_expectation(system.basis, ground))
        n_c_gauge = _dyn.coulomb_photon_number(system, ground)
        rows.append({
            "g": float(g),
            "Omega0": float(frame.Omega[0]),
            "Omega_rest": float(np.sqrt(np.mean(frame.Omega[1:] ** 2))),
            "xi0": float(abs(frame.xi[0]) / scales.x_omega),
            "xi_rest": float(np.sqrt(np.sum(frame.xi[1:] ** 2)) / scales.x_omega),
            "xi_total": float(frame.xi_total / scales.x_omega),
            "m_eff": float(system.ad.m_eff),
            "n_ad": n_ad,
            "n_coulomb": n_c_gauge,
            "sigma_p": system.matter.sigma_p(0),
        })
    fits = {}
    for key in ("Omega0", "Omega_rest", "xi0", "xi_rest", "m_eff", "n_ad",
                "n_coulomb", "sigma_p"):
        y = np.array([r[key] for r in rows])
        if np.all(y > 0):
            slope, err = _loglog_fit(g_grid, y)
            fits[key] = {"slope": slope, "stderr": err}
    return {"rows": rows, "fits": fits}
