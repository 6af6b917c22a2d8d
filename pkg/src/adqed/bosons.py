"""
Diagonalization of the quadratic photon sector including the A^2 term.

Single emitter: the position-quadrature form omega_k^2 d_kk' + 2 g_k g_k' is
symmetric positive definite and an orthogonal transform O suffices,

    O^T (diag(omega^2) + 2 g g^T) O = diag(Omega^2),

with squeezed modes b_n, couplings zeta_n = sqrt(hbar/(m Omega_n)) sum_k g_k O_kn
and displacements xi_n = zeta_n / Omega_n.

Multiple emitters at arbitrary positions generate P-P and X-P cross terms, so
the 2L x 2L quadratic form is brought to Williamson normal form by a
symplectic S with S sigma S^T = sigma and S^T H S = diag(Omega^2) + identity
on the momentum block.  Mode ordering is descending Omega_n everywhere; n = 0
is the dominant mode.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import eigh

from .model import CouplingProfile, EmitterSpec, WaveguideSpec


@dataclass(frozen=True)
class OrthogonalFrame:
    """Squeezed-mode frame for a single emitter (real couplings)."""

    O: np.ndarray          # (L, L), columns ordered by descending Omega
    Omega: np.ndarray      # (L,) renormalized frequencies, descending
    omega: np.ndarray      # (L,) bare frequencies in the original order
    zeta: np.ndarray       # (L,) mode couplings
    xi: np.ndarray         # (L,) displacements zeta/Omega
    mass: float
    hbar: float

    @property
    def L(self) -> int:
        return self.Omega.size

    def squeeze_parameters(self) -> np.ndarray:
        """r_nk with e^{r_nk} = sqrt(Omega_n/omega_k); shape (L modes n, L modes k)."""
        return 0.5 * np.log(self.Omega[:, None] / self.omega[None, :])

    @property
    def xi_total(self) -> float:
        return float(np.sqrt(np.sum(self.xi**2)))

    @property
    def zero_point_shift(self) -> float:
        """(sum_n hbar Omega_n - sum_k hbar omega_k)/2 relative to Eq.-(1) normal ordering."""
        return 0.5 * self.hbar * float(np.sum(self.Omega) - np.sum(self.omega))


@dataclass(frozen=True)
class SymplecticFrame:
    """Williamson frame for N emitters; couplings zeta_nj are complex."""

    S: np.ndarray          # (2L, 2L) symplectic, blocks [[XX, XP], [PX, PP]]
    Omega: np.ndarray      # (L,) descending
    omega: np.ndarray
    zeta: np.ndarray       # (L, N) complex
    xi: np.ndarray         # (L, N) complex, zeta/Omega
    masses: np.ndarray     # (N,)
    positions: np.ndarray  # (N,)
    hbar: float

    @property
    def L(self) -> int:
        return self.Omega.size

    @property
    def n_emitters(self) -> int:
        return self.zeta.shape[1]

    def blocks(self):
        L = self.L
        return (self.S[:L, :L], self.S[:L, L:], self.S[L:, :L], self.S[L:, L:])

    @property
    def zero_point_shift(self) -> float:
        return 0.5 * self.hbar * float(np.sum(self.Omega) - np.sum(self.omega))


def _canonical_columns(vals: np.ndarray, vecs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort eigenpairs by descending eigenvalue with a deterministic tie-break.

    Ties (degenerate frequencies, e.g. flat bands) are ordered by the index of
    each column's largest-magnitude component, then sign-fixed so that this
    component is positive.
    """
    anchor = np.argmax(np.abs(vecs), axis=0)
    order = np.lexsort((anchor, -vals))
    vals, vecs, anchor = vals[order], vecs[:, order], anchor[order]
    signs = np.sign(vecs[anchor, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vals, vecs * signs


def diagonalize_orthogonal(waveguide: WaveguideSpec, coupling: CouplingProfile,
                           emitter: EmitterSpec) -> OrthogonalFrame:
    """Diagonalize diag(omega^2) + 2 g g^T and build the squeezed-mode frame."""
    return orthogonal_frame(waveguide.omega, coupling.g_k, mass=emitter.mass,
                            hbar=waveguide.hbar)


def orthogonal_frame(omega: Sequence[float], g_k: Sequence[float], mass: float = 1.0,
                     hbar: float = 1.0) -> OrthogonalFrame:
    omega = np.asarray(omega, dtype=float)
    g_k = np.asarray(g_k, dtype=float)
    if omega.shape != g_k.shape:
        raise ValueError("omega and g_k must have matching shapes")
    if np.any(omega <= 0):
        raise ValueError("orthogonal frame needs all omega_k > 0; gapless grids "
                         "must carry an infrared cutoff")
    quad = np.diag(omega**2) + 2.0 * np.outer(g_k, g_k)
    vals, vecs = eigh(quad)
    if vals[0] <= 0:
        raise ArithmeticError(
            f"quadratic photon form is not positive definite (min eigenvalue {vals[0]:.3e}); "
            "inputs are corrupted")
    vals, vecs = _canonical_columns(vals, vecs)
    Omega = np.sqrt(vals)
    zeta = np.sqrt(hbar / (mass * Omega)) * (g_k @ vecs)
    xi = zeta / Omega
    return OrthogonalFrame(O=vecs, Omega=Omega, omega=omega, zeta=zeta, xi=xi,
                           mass=mass, hbar=hbar)


# ----------------------------------------------------------------------------
# Symplectic (multi-emitter) frame
# ----------------------------------------------------------------------------

def symplectic_form(L: int) -> np.ndarray:
    sigma = np.zeros((2 * L, 2 * L))
    sigma[:L, L:] = np.eye(L)
    sigma[L:, :L] = -np.eye(L)
    return sigma


def _matrix_power_half(M: np.ndarray, power: float) -> np.ndarray:
    vals, vecs = eigh(M)
    if vals[0] <= 0:
        raise ArithmeticError("quadratic form must be positive definite")
    return (vecs * vals**power) @ vecs.T


def multi_emitter_couplings(waveguide: WaveguideSpec, emitters: Sequence[EmitterSpec],
                            coupling: CouplingProfile):
    """Cos/sin-resolved couplings g^c_kj, g^s_kj for emitters at positions x_j."""
    x = np.array([e.position for e in emitters], dtype=float)
    masses = np.array([e.mass for e in emitters], dtype=float)
    base = coupling.charge * coupling.f[:, None] * np.sqrt(
        waveguide.omega[:, None] / (masses[None, :] * waveguide.hbar))
    phase = waveguide.k[:, None] * x[None, :]
    return base * np.cos(phase), base * np.sin(phase), masses, x


def diagonalize_symplectic(waveguide: WaveguideSpec, emitters: Sequence[EmitterSpec],
                           coupling: CouplingProfile,
                           residual_tol: float = 1e-8) -> SymplecticFrame:
    """Williamson normal form of the multi-emitter quadratic photon sector.

    The quadratic form in (X_k, P_k) is H = H0 + 2 U U^T with
    H0 = diag(omega^2) (+) identity and U the stacked coupling vectors
    (g^c_kj ; -g^s_kj/omega_k).  Eigenvectors of i W, W = H^{1/2} sigma H^{1/2},
    give the orthogonal intertwiner; rescaling by sqrt(Omega) yields S with
    S^T H S = diag(Omega^2) (+) I and S sigma S^T = sigma.
    """
    if len(emitters) < 1:
        raise ValueError("need at least one emitter")
    if np.any(waveguide.omega <= 0):
        raise ValueError("symplectic frame needs all omega_k > 0")
    gc, gs, masses, x = multi_emitter_couplings(waveguide, emitters, coupling)
    L = waveguide.L
    omega = waveguide.omega

    hxx = np.diag(omega**2) + 2.0 * gc @ gc.T
    u_p = -gs / omega[:, None]
    hpp = np.eye(L) + 2.0 * u_p @ u_p.T
    hxp = 2.0 * gc @ u_p.T
    H = np.block([[hxx, hxp], [hxp.T, hpp]])

    sigma = symplectic_form(L)
    H_sqrt = _matrix_power_half(H, 0.5)
    H_isqrt = _matrix_power_half(H, -0.5)
    W = H_sqrt @ sigma @ H_sqrt
    vals, vecs = np.linalg.eigh(1j * W)
    pos = vals > 0
    Omega = vals[pos]
    U = vecs[:, pos]                      # columns u_n with W u = -i Omega u
    a = np.sqrt(2.0) * U.real
    b = np.sqrt(2.0) * U.imag
    Q = np.hstack([a, -b])
    scale = np.concatenate([Omega, np.ones(L)])
    S = H_isqrt @ (Q * scale[None, :])

    # descending Omega with the same deterministic ordering as the orthogonal path
    order = np.argsort(-Omega, kind="stable")
    Omega = Omega[order]
    S = S[:, np.concatenate([order, L + order])]

    sym_res = float(np.max(np.abs(S @ sigma @ S.T - sigma)))
    target = np.diag(np.concatenate([Omega**2, np.ones(L)]))
    diag_res = float(np.max(np.abs(S.T @ H @ S - target)) / np.max(np.abs(H)))
    if sym_res > residual_tol or diag_res > residual_tol:
        raise ArithmeticError(
            f"symplectic diagonalization failed: symplectic residual {sym_res:.3e}, "
            f"off-diagonal residual {diag_res:.3e} exceed {residual_tol:.1e}")

    sxx, sxp, spx, spp = S[:L, :L], S[:L, L:], S[L:, :L], S[L:, L:]
    hbar = waveguide.hbar
    # coupling of mode n to emitter j, from -sum_j P_j (q/m_j) A_{x_j} in the
    # (X~, P~) eigenbasis; the g^s parts enter through P_k/omega_k
    cx = gc.T @ sxx - (gs / omega[:, None]).T @ spx          # (N, L)
    cp = gc.T @ sxp - (gs / omega[:, None]).T @ spp
    zeta = (np.sqrt(hbar / (masses[:, None] * Omega[None, :]))
            * (cx + 1j * Omega[None, :] * cp)).T             # (L, N)
    xi = zeta / Omega[:, None]
    return SymplecticFrame(S=S, Omega=Omega, omega=omega, zeta=zeta, xi=xi,
                           masses=masses, positions=x, hbar=hbar)


# ----------------------------------------------------------------------------
# Debug dumps (plain tabular, no binary)
# ----------------------------------------------------------------------------

def write_frame_csv(frame, out_dir) -> list[Path]:
    """Dump a frame as modes.csv (n, Omega, zeta, xi) plus matrix CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    modes = out / "modes.csv"
    with modes.open("w", newline="") as fh:
        w = csv.writer(fh)
        if isinstance(frame, OrthogonalFrame):
            w.writerow(["n", "Omega", "zeta", "xi"])
            for n in range(frame.L):
                w.writerow([n, repr(frame.Omega[n]), repr(frame.zeta[n]), repr(frame.xi[n])])
        else:
            w.writerow(["n", "Omega"]
                       + [f"re_zeta_{j}" for j in range(frame.n_emitters)]
                       + [f"im_zeta_{j}" for j in range(frame.n_emitters)])
            for n in range(frame.L):
                w.writerow([n, repr(frame.Omega[n])]
                           + [repr(z.real) for z in frame.zeta[n]]
                           + [repr(z.imag) for z in frame.zeta[n]])
    written.append(modes)
    mat = frame.O if isinstance(frame, OrthogonalFrame) else frame.S
    name = out / ("orthogonal_matrix.csv" if isinstance(frame, OrthogonalFrame)
                  else "symplectic_matrix.csv")
    np.savetxt(name, mat, delimiter=",")
    written.append(name)
    return written
