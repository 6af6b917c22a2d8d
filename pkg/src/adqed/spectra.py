"""
Classification of ED eigenstates and anticrossing scans.

States are labeled from three deterministic measurements: the band position
of the excitation energy, the total parity relative to the single-photon
continuum, and the zero-photon-sector weight (threshold 0.5 separates
emitter-like states, whose weight tends to one at strong coupling, from
scattering states, whose weight tends to zero).  In-band emitter-like states
of parity opposite to the continuum are symmetry-protected BIC; same-parity
ones are quasi-BIC with anticrossing gaps that shrink with coupling.

Anticrossing scans follow an emitter-like branch through a coupling window by
parity, emitter weight and energy continuity.  Opposite-parity encounters are
true crossings and are located by root finding on the signed level
difference; same-parity encounters are avoided and their minimum gap is
refined by golden-section search to a relative g-resolution of 1e-4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .ed import (EDResult, EDSystem, FewPhotonBasis, emitter_level_weights,
                 prepare_system, zero_photon_weight)
from .model import EmitterSpec, WaveguideSpec

LABELS = ("scattering", "bound", "BIC", "quasi-BIC", "multi-photon-continuum")


@dataclass
class StateClassification:
    """Per-state labels and the measurements they were derived from."""

    labels: list
    excitations: np.ndarray
    band: tuple
    zero_photon: Optional[np.ndarray]
    parity: Optional[np.ndarray]
    ladder_index: Optional[np.ndarray]
    band_position_only: bool = False


def classify_excitations(result: EDResult, basis: FewPhotonBasis,
                         waveguide: WaveguideSpec, matter=None,
                         weight_threshold: float = 0.5,
                         band_tol: float = 1e-9) -> StateClassification:
    """Assign one label per eigenstate; labels partition the spectrum."""
    hbar = waveguide.hbar
    lo, hi = waveguide.band_edges
    band = (hbar * lo, hbar * hi)
    exc = result.excitations
    tol = band_tol * max(1.0, band[1])

    if result.vectors is None:
        labels = ["bound" if (e < band[0] - tol or e > band[1] + tol) else "scattering"
                  for e in exc]
        return StateClassification(labels=labels, excitations=exc, band=band,
                                   zero_photon=None, parity=result.parity,
                                   ladder_index=None, band_position_only=True)

    n = result.n_states
    w0 = np.array([zero_photon_weight(basis, result.vectors[:, i]) for i in range(n)])
    aw = np.array([emitter_level_weights(basis, result.vectors[:, i]) for i in range(n)])
    dominant_alpha = np.argmax(aw, axis=1) + 1
    parity = result.parity
    continuum_parity = None
    if parity is not None and matter is not None and matter.parity[0] != 0:
        continuum_parity = -int(matter.parity[0])

    labels = []
    ladder = np.full(n, -1, dtype=int)
    for i in range(n):
        in_band = band[0] - tol <= exc[i] <= band[1] + tol
        emitter_like = w0[i] >= weight_threshold
        if emitter_like:
            if not in_band:
                labels.append("bound")
            elif continuum_parity is not None and parity[i] != continuum_parity:
                labels.append("BIC")
            else:
                labels.append("quasi-BIC")
        else:
            if in_band and dominant_alpha[i] == 1:
                labels.append("scattering")
            else:
                labels.append("multi-photon-continuum")
                ladder[i] = dominant_alpha[i]
    return StateClassification(labels=labels, excitations=exc, band=band,
                               zero_photon=w0, parity=parity, ladder_index=ladder)


# ----------------------------------------------------------------------------
# Branch tracking and anticrossing scans
# ----------------------------------------------------------------------------

@dataclass
class AnticrossingReport:
    kind: str                   # "crossing", "avoided" or "monotone"
    g_star: Optional[float]
    gap: float
    branch_parity: Optional[int]
    window: tuple
    detail: dict


def _snapshot(system: EDSystem, n_eigs: Optional[int]):
    res = system.diagonalize(n_eigs=n_eigs, method="dense")
    n = res.n_states
    w0 = np.array([zero_photon_weight(system.basis, res.vectors[:, i]) for i in range(n)])
    return res, w0


def _pick_branch(exc, w0, parity, branch_parity, window, previous=None,
                 weight_floor: float = 0.35):
    """Index of the tracked emitter-like level, or None."""
    cand = np.nonzero((w0 >= weight_floor)
                      & (exc >= window[0]) & (exc <= window[1]))[0]
    if parity is not None and branch_parity is not None:
        cand = cand[parity[cand] == branch_parity]
    if cand.size == 0:
        return None
    if previous is not None:
        return int(cand[np.argmin(np.abs(exc[cand] - previous))])
    return int(cand[np.argmax(w0[cand])])


def scan_anticrossings(waveguide: WaveguideSpec, emitter: EmitterSpec,
                       g_lo: float, g_hi: float, *, branch_parity: Optional[int] = None,
                       partner: str = "opposite",
                       n_c: int = 2, alpha_c: int = 10, n_eigs: Optional[int] = 40,
                       n_coarse: int = 21, g_rtol: float = 1e-4,
                       search_window: Optional[tuple] = None) -> AnticrossingReport:
    """Minimum spectral gap between an emitter branch and the levels it meets.

    The branch is followed across [g_lo, g_hi] by parity, emitter weight and
    energy continuity.  partner selects which levels it is scanned against:
    "opposite" parity (symmetry-protected crossings, refined by brentq on the
    signed difference, gap at machine zero), "same" parity (quasi-BIC avoided
    crossings, golden-section on the unsigned gap), or "any" (broken
    symmetry).  When the branch meets no partner line inside the window the
    report kind is "monotone" with the endpoint gaps.
    """
    hbar = waveguide.hbar
    lo_band, hi_band = waveguide.band_edges
    if search_window is None:
        width = hbar * (hi_band - lo_band)
        search_window = (hbar * lo_band - 0.5 * width, hbar * hi_band + 0.5 * width)

    def snapshot(g):
        system = prepare_system(waveguide, emitter, g, n_c=n_c, alpha_c=alpha_c)
        res, w0 = _snapshot(system, n_eigs)
        return res, w0

    gs = np.linspace(g_lo, g_hi, n_coarse)
    branch = np.full(n_coarse, np.nan)
    samples = []
    prev = None
    for i, g in enumerate(gs):
        res, w0 = snapshot(g)
        bi = _pick_branch(res.excitations, w0, res.parity, branch_parity,
                          search_window, previous=prev)
        samples.append((res, w0, bi))
        if bi is not None:
            branch[i] = res.excitations[bi]
            prev = branch[i]
    if np.all(np.isnan(branch)):
        raise ValueError("no emitter-like branch of the requested parity found "
                         "inside the search window")

    def branch_minus_partner(g, partner_parity):
        res, w0 = snapshot(g)
        bi = _pick_branch(res.excitations, w0, res.parity, branch_parity,
                          search_window, previous=np.interp(g, gs, branch))
        if bi is None:
            return np.nan, np.nan
        exc = res.excitations
        others = np.nonzero((np.arange(exc.size) != bi) & (w0 < 0.5))[0]
        if res.parity is not None and partner_parity is not None:
            others = others[res.parity[others] == partner_parity]
        if others.size == 0:
            return np.nan, np.nan
        j = others[np.argmin(np.abs(exc[others] - exc[bi]))]
        return exc[bi] - exc[j], exc[bi]

    if partner not in ("opposite", "same", "any"):
        raise ValueError(f"unknown partner selector {partner!r}")
    has_labels = samples[0][0].parity is not None and branch_parity is not None
    partner_parity = None
    if has_labels and partner == "opposite":
        partner_parity = -branch_parity
    elif has_labels and partner == "same":
        partner_parity = branch_parity
    crossing_mode = has_labels and partner == "opposite"

    def partner_lines(i):
        res, w0, bi = samples[i]
        if bi is None:
            return np.array([])
        exc = res.excitations
        others = np.nonzero((np.arange(exc.size) != bi) & (w0 < 0.5))[0]
        if partner_parity is not None:
            others = others[res.parity[others] == partner_parity]
        return np.sort(exc[others])

    # bracket where the branch passes a (nearly g-independent) partner line
    bracket = None
    for i in range(n_coarse - 1):
        if np.isnan(branch[i]) or np.isnan(branch[i + 1]):
            continue
        li, lj = partner_lines(i), partner_lines(i + 1)
        if li.size == 0 or lj.size == 0:
            continue
        for line in li:
            partner_next = lj[np.argmin(np.abs(lj - line))]
            if (branch[i] - line) * (branch[i + 1] - partner_next) < 0:
                bracket = (gs[i], gs[i + 1])
                break
        if bracket:
            break

    if bracket is None:
        gaps = [np.abs(branch[i] - partner_lines(i)).min()
                for i in range(n_coarse)
                if not np.isnan(branch[i]) and partner_lines(i).size]
        return AnticrossingReport(kind="monotone", g_star=None,
                                  gap=float(min(gaps)) if gaps else np.nan,
                                  branch_parity=branch_parity, window=(g_lo, g_hi),
                                  detail={"endpoint_gaps": [gaps[0], gaps[-1]]
                                          if gaps else []})

    if crossing_mode:
        f = lambda g: branch_minus_partner(g, partner_parity)[0]
        g_star = brentq(f, bracket[0], bracket[1],
                        xtol=g_rtol * 1e-6 * max(1.0, g_hi), rtol=1e-14)
        return AnticrossingReport(kind="crossing", g_star=float(g_star),
                                  gap=float(abs(f(g_star))),
                                  branch_parity=branch_parity,
                                  window=(g_lo, g_hi), detail={"bracket": bracket})
    gap_of = lambda g: abs(branch_minus_partner(g, partner_parity)[0])
    g_star, gap = _golden_min(gap_of, bracket[0], bracket[1],
                              xtol=g_rtol * max(abs(bracket[0]), abs(bracket[1])))
    return AnticrossingReport(kind="avoided", g_star=float(g_star), gap=float(gap),
                              branch_parity=branch_parity, window=(g_lo, g_hi),
                              detail={"bracket": bracket})


def _golden_min(f: Callable[[float], float], a: float, b: float, xtol: float):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, min(fc, fd, f(x))


def qbic_decay_estimate(waveguide: WaveguideSpec, g: float, emitter: EmitterSpec,
                        m_eff: float) -> float:
    """Order-of-magnitude quasi-BIC width (J/hbar)^2/(g sqrt(m w_c^3 d^3)) (v^3/m_eff)^(1/4).

    Exponents and monotonicity are contractual; the prefactor is not.
    """
    if waveguide.kind != "cavity-array":
        raise ValueError("the quasi-BIC estimate is stated for cavity arrays")
    J = waveguide.J or 0.0
    if J == 0.0 or g == 0.0:
        return 0.0
    pot = emitter.potential
    v, d = pot.v, pot.d
    m = emitter.mass
    hbar = waveguide.hbar
    wc = waveguide.omega_c
    return ((J / hbar) ** 2 / (g * math.sqrt(m * wc**3 * d**3))
            * (v**3 / m_eff) ** 0.25)


def track_branch(results: Sequence[EDResult], basis: FewPhotonBasis,
                 start_index: int, overlap_floor: float = 0.5):
    """Follow one eigenstate through a parameter sweep by successive overlap.

    Returns (indices, overlaps); tracking stops (index -1) once the maximal
    successive overlap drops below overlap_floor (branch lost).
    """
    idx = [start_index]
    overlaps = [1.0]
    prev = results[0].vectors[:, start_index]
    for res in results[1:]:
        ov = np.abs(res.vectors.T @ prev)
        j = int(np.argmax(ov))
        if ov[j] < overlap_floor:
            idx.append(-1)
            overlaps.append(float(ov[j]))
            break
        idx.append(j)
        overlaps.append(float(ov[j]))
        prev = res.vectors[:, j]
    return idx, overlaps
