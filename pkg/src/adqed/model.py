"""
Waveguides, couplings and emitters.

Conventions
-----------
Natural units hbar = m = omega_c = 1 are the defaults; every constructor
accepts explicit overrides and all downstream formulas carry hbar and the
emitter mass explicitly.  A waveguide is a finite set of L photon modes with
frequencies omega_k >= 0.  Point coupling at a lattice site corresponds to a
flat vector-potential amplitude f_k = A/sqrt(L), which makes the per-mode
couplings

    g_k = q f_k sqrt(omega_k / (m hbar))

scale as L^(-1/2) and the total coupling g^2 = sum_k g_k^2 independent of L.
For the cavity array g^2 = (q A)^2 omega_c/(m hbar) exactly, because the
symmetric k-grid averages the dispersion to omega_c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import make_interp_spline


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


# ----------------------------------------------------------------------------
# Waveguides
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveguideSpec:
    """Finite photonic mode set with dispersion omega(k).

    kind is one of "cavity-array", "power-law", "tabulated".  For the cavity
    array, omega_k = omega_c - (J/hbar) cos k on the symmetric grid
    k_m = 2 pi m / L with m = -(L-1)/2 .. (L-1)/2 and odd L (required by the
    even/odd mode folding about the emitter site).
    """

    kind: str
    k: np.ndarray
    omega: np.ndarray
    hbar: float = 1.0
    omega_c: Optional[float] = None
    J: Optional[float] = None
    exponent: Optional[float] = None
    omega_max: Optional[float] = None

    @property
    def L(self) -> int:
        return self.omega.size

    @property
    def band_edges(self) -> tuple[float, float]:
        return float(np.min(self.omega)), float(np.max(self.omega))

    @property
    def infrared_cutoff(self) -> float:
        """Smallest mode frequency; the IR scale probed by L scaling."""
        return float(np.min(self.omega))


def build_cavity_array(omega_c: float, J: float, L: int, hbar: float = 1.0) -> WaveguideSpec:
    """Coupled-cavity-array waveguide, hbar*omega_k = hbar*omega_c - J cos k.

    Parameters
    ----------
    omega_c : resonator frequency.
    J : nearest-neighbour hopping energy, 0 <= J < hbar*omega_c (gapped band).
    L : odd number of cavities, L >= 3.
    """
    if L < 3 or L % 2 == 0:
        raise ValueError(
            f"cavity array needs odd L >= 3 (got L={L}); even/odd mode folding "
            "about the emitter site requires an odd chain")
    if omega_c <= 0:
        raise ValueError(f"omega_c must be positive (got {omega_c})")
    if J < 0 or J >= hbar * omega_c:
        raise ValueError(
            f"hopping J={J} violates 0 <= J < hbar*omega_c={hbar * omega_c}; "
            "the band would touch zero frequency")
    m = np.arange(L) - (L - 1) // 2
    k = 2.0 * np.pi * m / L
    omega = omega_c - (J / hbar) * np.cos(k)
    return WaveguideSpec(kind="cavity-array", k=_readonly(k), omega=_readonly(omega),
                         hbar=hbar, omega_c=omega_c, J=J)


def build_powerlaw(l: float, omega_max: float, L: int, hbar: float = 1.0) -> WaveguideSpec:
    """Gapless power-law waveguide omega_k = omega_max (k/k_max)^l.

    The grid is uniform in k > 0 and excludes k = 0, so the smallest frequency
    omega_max/L^l sets the infrared cutoff; the spectral function obeys
    J(omega) ~ omega^(1/l).
    """
    if l <= 0:
        raise ValueError(f"dispersion exponent must be positive (got l={l})")
    if omega_max <= 0 or L < 2:
        raise ValueError("power-law waveguide needs omega_max > 0 and L >= 2")
    i = np.arange(1, L + 1, dtype=float)
    k = np.pi * i / L
    omega = omega_max * (i / L) ** l
    return WaveguideSpec(kind="power-law", k=_readonly(k), omega=_readonly(omega),
                         hbar=hbar, exponent=l, omega_max=omega_max)


def build_tabulated(k: np.ndarray, omega: np.ndarray, hbar: float = 1.0) -> WaveguideSpec:
    """Waveguide from explicit (k, omega_k) tables, k in [-pi, pi)."""
    k = np.asarray(k, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if k.shape != omega.shape or k.ndim != 1:
        raise ValueError("k and omega must be 1d arrays of equal length")
    if np.any(omega < 0):
        raise ValueError("all mode frequencies must be >= 0")
    if np.any(k < -np.pi) or np.any(k >= np.pi):
        raise ValueError("wavevectors must lie in [-pi, pi)")
    return WaveguideSpec(kind="tabulated", k=_readonly(k), omega=_readonly(omega), hbar=hbar)


# ----------------------------------------------------------------------------
# Potentials
# ----------------------------------------------------------------------------

class PolynomialPotential:
    """V(Q) = sum_j c_j Q^j with ascending coefficients c_j."""

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float))
        self.coeffs = _readonly(c)
        self.degree = int(len(c) - 1)

    @property
    def is_polynomial(self) -> bool:
        return True

    @property
    def is_symmetric(self) -> bool:
        return bool(np.all(self.coeffs[1::2] == 0.0))

    def value(self, q):
        return np.polynomial.polynomial.polyval(q, self.coeffs)

    def derivative(self, order: int = 1) -> "PolynomialPotential":
        return PolynomialPotential(np.polynomial.polynomial.polyder(self.coeffs, order)
                                   if order <= self.degree else [0.0])

    def deriv_value(self, q, order: int):
        if order > self.degree:
            return np.zeros_like(np.asarray(q, dtype=float))
        return np.polynomial.polynomial.polyval(
            q, np.polynomial.polynomial.polyder(self.coeffs, order))

    def confining(self) -> bool:
        return self.degree >= 2 and self.degree % 2 == 0 and self.coeffs[-1] > 0


class DoubleWellPotential(PolynomialPotential):
    """Quartic double well V(Q) = v (1 - Q^2/d^2)^2 - h Q.

    v > 0 is the barrier height, +-d the minima positions, h a linear bias.
    """

    def __init__(self, v: float, d: float, h: float = 0.0):
        if v <= 0 or d <= 0:
            raise ValueError(f"double well needs v > 0 and d > 0 (got v={v}, d={d})")
        super().__init__([v, -h, -2.0 * v / d**2, 0.0, v / d**4])
        self.v = float(v)
        self.d = float(d)
        self.h = float(h)


class TabulatedPotential:
    """Potential sampled on a grid, interpolated by a quintic spline.

    A quintic spline keeps four continuous derivatives, which the vacuum
    dressing series consumes; cubic interpolation would make V'''' vanish
    almost everywhere.
    """

    def __init__(self, q_grid, values):
        q = np.asarray(q_grid, dtype=float)
        v = np.asarray(values, dtype=float)
        if q.ndim != 1 or q.shape != v.shape or q.size < 8:
            raise ValueError("tabulated potential needs >= 8 samples on a 1d grid")
        if np.any(np.diff(q) <= 0):
            raise ValueError("tabulated potential grid must be strictly increasing")
        self._spline = make_interp_spline(q, v, k=5)
        self.q_min = float(q[0])
        self.q_max = float(q[-1])
        self.max_derivative_order = 4

    @property
    def is_polynomial(self) -> bool:
        return False

    @property
    def is_symmetric(self) -> bool:
        if abs(self.q_min + self.q_max) > 1e-12 * (self.q_max - self.q_min):
            return False
        probe = np.linspace(0.0, self.q_max, 64)
        return bool(np.allclose(self.value(probe), self.value(-probe),
                                rtol=1e-9, atol=1e-12))

    def value(self, q):
        return self._spline(np.clip(q, self.q_min, self.q_max))

    def deriv_value(self, q, order: int):
        if order > 5:
            raise ValueError("tabulated potential supports derivatives up to order 5")
        return self._spline.derivative(order)(np.clip(q, self.q_min, self.q_max))

    def confining(self) -> bool:
        edge = self.value(np.array([self.q_min, self.q_max]))
        return bool(np.all(edge >= self.value(np.array([0.5 * (self.q_min + self.q_max)]))))


Potential = PolynomialPotential  # the common structural type; Tabulated duck-types it


@dataclass(frozen=True)
class EmitterSpec:
    """Charged particle of mass m and charge q trapped in a potential.

    position is the coupling site (lattice index for cavity arrays).  For the
    double well the potential evaluates to v (1 - Q^2/d^2)^2 - h Q.
    """

    potential: object
    mass: float = 1.0
    charge: float = 1.0
    position: float = 0.0

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError(f"emitter mass must be positive (got {self.mass})")

    @property
    def is_symmetric(self) -> bool:
        return self.potential.is_symmetric


def double_well_emitter(v: float, d: float, h: float = 0.0, mass: float = 1.0,
                        charge: float = 1.0, position: float = 0.0) -> EmitterSpec:
    return EmitterSpec(potential=DoubleWellPotential(v, d, h), mass=mass,
                       charge=charge, position=position)


# ----------------------------------------------------------------------------
# Couplings
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class CouplingProfile:
    """Vector-potential amplitude and the derived per-mode couplings.

    f_k are the electromagnetic amplitudes of A = sum_k f_k (a_k + a_k^dag),
    g_k = q f_k sqrt(omega_k/(m hbar)) and g^2 = sum_k g_k^2.
    """

    amplitude: float
    charge: float
    mass: float
    f: np.ndarray
    g_k: np.ndarray
    g: float

    @property
    def L(self) -> int:
        return self.f.size


def point_coupling(waveguide: WaveguideSpec, amplitude: float, charge: float = 1.0,
                   mass: float = 1.0) -> CouplingProfile:
    """Point coupling at a single site: f_k = amplitude / sqrt(L)."""
    L = waveguide.L
    f = np.full(L, amplitude / math.sqrt(L))
    g_k = charge * f * np.sqrt(waveguide.omega / (mass * waveguide.hbar))
    return CouplingProfile(amplitude=float(amplitude), charge=charge, mass=mass,
                           f=_readonly(f), g_k=_readonly(g_k),
                           g=float(np.sqrt(np.sum(g_k**2))))


def coupling_for_strength(waveguide: WaveguideSpec, g: float, charge: float = 1.0,
                          mass: float = 1.0) -> CouplingProfile:
    """Point coupling whose amplitude realizes a target total strength g.

    For the cavity array, g = q A sqrt(omega_c/(m hbar)) and sum_k g_k^2 = g^2
    hold simultaneously and exactly.  For other dispersions the amplitude is
    solved from the arithmetic mean of omega_k, so sqrt(sum g_k^2) = g still
    holds by construction.
    """
    if g < 0:
        raise ValueError("coupling strength must be >= 0")
    if waveguide.kind == "cavity-array":
        omega_ref = waveguide.omega_c
    else:
        omega_ref = float(np.mean(waveguide.omega))
    amplitude = g * math.sqrt(mass * waveguide.hbar / omega_ref) / charge
    prof = point_coupling(waveguide, amplitude, charge=charge, mass=mass)
    # the mean-frequency normalization is exact for every supported grid
    assert abs(prof.g - g) <= 1e-12 * max(1.0, g)
    return prof


# ----------------------------------------------------------------------------
# Characteristic scales
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class CharacteristicScales:
    """RMS photon frequency, total coupling, bandwidth and oscillator length.

    omega^2 = sum_k omega_k^2 / L,  delta^2 = sum_k (omega_k - omega)^2 / L,
    g^2 = sum_k g_k^2,  x_omega = sqrt(hbar/(m omega)).
    """

    omega: float
    g: float
    delta: float
    x_omega: float


def characteristic_scales(waveguide: WaveguideSpec, coupling: CouplingProfile,
                          emitter: EmitterSpec) -> CharacteristicScales:
    if coupling.L != waveguide.L:
        raise ValueError(f"coupling has {coupling.L} modes, waveguide has {waveguide.L}")
    omega = float(np.sqrt(np.mean(waveguide.omega**2)))
    delta = float(np.sqrt(np.mean((waveguide.omega - omega) ** 2)))
    g = float(np.sqrt(np.sum(coupling.g_k**2)))
    x_omega = float(np.sqrt(waveguide.hbar / (emitter.mass * omega))) if omega > 0 else np.inf
    return CharacteristicScales(omega=omega, g=g, delta=delta, x_omega=x_omega)


def spectral_function_exponent(waveguide: WaveguideSpec, coupling: CouplingProfile,
                               n_bins: int = 20) -> tuple[float, float]:
    """Log-log fit of the spectral function J(omega) = pi sum g_k^2 d(w - w_k).

    Returns (exponent, stderr).  For a power-law dispersion with exponent l
    the fitted slope is 1/l.
    """
    omega = waveguide.omega
    weights = coupling.g_k**2
    lo, hi = np.min(omega), np.max(omega)
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.clip(np.searchsorted(edges, omega, side="right") - 1, 0, n_bins - 1)
    j_w = np.zeros(n_bins)
    np.add.at(j_w, idx, weights)
    j_w *= np.pi / np.diff(edges)
    centers = 0.5 * (edges[1:] + edges[:-1])
    keep = j_w > 0
    slope, err = _loglog_fit(centers[keep], j_w[keep])
    return slope, err


def _loglog_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of log y against log x with its standard error."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    n = lx.size
    if n < 2:
        raise ValueError("log-log fit needs at least two points")
    A = np.vstack([lx, np.ones(n)]).T
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    slope = float(coef[0])
    if n > 2 and res.size:
        sigma2 = float(res[0]) / (n - 2)
        cov = sigma2 * np.linalg.inv(A.T @ A)
        return slope, float(np.sqrt(cov[0, 0]))
    return slope, 0.0
