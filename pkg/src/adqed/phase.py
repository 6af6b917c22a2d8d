"""
Gapless-dispersion diagnostics: Theta(L) divergence class, WKB tunneling gap,
and finite-size order-parameter scans.

For omega_k ~ k^l the mass-enhancement sum Theta = sum_k (g_k/omega_k)^2 obeys
the trichotomy O(1) (l < 1), ln L (l = 1), L^(l-1) (l > 1); the scans fit all
three candidates and report the best class.  Everything here is finite-size:
the module reports trend indicators (gap shrinking with L, biased displacement
saturating near the well minima) and never a thermodynamic-limit phase
verdict.  The Ohmic point l = 1 is measured but deliberately left without a
phase classification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .adframe import ADParameters
from .dynamics import displacement_expectation
from .ed import prepare_system
from .model import (EmitterSpec, WaveguideSpec, _loglog_fit, build_powerlaw,
                    coupling_for_strength, double_well_emitter)


@dataclass
class ThetaScaling:
    exponent: float
    L_values: np.ndarray
    theta: np.ndarray
    divergence_class: str          # convergent | logarithmic | power | indeterminate
    power: Optional[float]
    power_stderr: Optional[float]
    residuals: dict


def theta_values(l: float, L_values: Sequence[int], g: float = 1.0) -> np.ndarray:
    """Theta(L) for power-law waveguides at fixed total coupling g."""
    out = []
    for L in L_values:
        wg = build_powerlaw(l, 1.0, int(L))
        cp = coupling_for_strength(wg, g)
        out.append(float(np.sum((cp.g_k / wg.omega) ** 2)))
    return np.array(out)


def theta_scaling(l: float, L_values: Sequence[int], g: float = 1.0) -> ThetaScaling:
    """Classify the L-divergence of Theta as convergent, log, or power L^p."""
    L_values = np.asarray(sorted(int(x) for x in L_values))
    if L_values.size < 4 or L_values[-1] / L_values[0] < 100:
        raise ValueError("need >= 4 system sizes spanning >= two decades")
    theta = theta_values(l, L_values, g=g)

    # candidate fits
    logL = np.log(L_values.astype(float))
    p_slope, p_err = _loglog_fit(L_values.astype(float), theta)
    # residual of a pure-power model
    coef = np.polyfit(logL, np.log(theta), 1)
    res_pow = float(np.sqrt(np.mean((np.log(theta) - np.polyval(coef, logL)) ** 2)))
    # residual of theta = a + b ln L
    lin = np.polyfit(logL, theta, 1)
    res_log = float(np.sqrt(np.mean((theta - np.polyval(lin, logL)) ** 2))
                    / np.mean(theta))
    # convergence: relative change over the last decade
    last_decade = L_values >= L_values[-1] / 10
    conv_change = float((theta[-1] - theta[last_decade][0])
                        / theta[-1]) if np.sum(last_decade) > 1 else 1.0
    ratio_log = theta / logL
    log_flatness = float(np.max(np.abs(ratio_log[-3:] / ratio_log[-1] - 1.0)))

    residuals = {"power_slope": p_slope, "power_rms": res_pow,
                 "log_rms": res_log, "last_decade_change": conv_change,
                 "log_ratio_flatness": log_flatness}
    if abs(conv_change) < 0.05:
        cls = "convergent"
    elif p_slope > 0.5 and res_pow < 0.05:
        cls = "power"
    elif log_flatness < 0.05:
        cls = "logarithmic"
    else:
        cls = "indeterminate"
    return ThetaScaling(exponent=l, L_values=L_values, theta=theta,
                        divergence_class=cls,
                        power=p_slope if cls == "power" else None,
                        power_stderr=p_err if cls == "power" else None,
                        residuals=residuals)


def tunneling_gap(ad: ADParameters, hbar: float = 1.0) -> Optional[float]:
    """WKB estimate of the dressed tunneling splitting.

    hbar Delta_g ~ (hbar^2/(m_eff d_eff^2)) exp[-(4/3) sqrt(2 m_eff d_eff^2
    v_eff / hbar^2)].  Order-of-magnitude contract; the exponent is the tested
    part.  Returns None (inapplicable) once the dressed barrier has vanished.
    """
    dressed = ad.dressed if not isinstance(ad.dressed, tuple) else ad.dressed[0]
    v_eff, d_eff = dressed.v_eff, dressed.d_eff
    if v_eff is None:
        raise ValueError("tunneling gap is defined for double-well emitters")
    if v_eff <= 0.0:
        return None
    m_eff = float(np.atleast_1d(ad.m_eff)[0])
    action = (4.0 / 3.0) * math.sqrt(2.0 * m_eff * d_eff**2 * v_eff) / hbar
    return (hbar / (m_eff * d_eff**2)) * math.exp(-action)


def wkb_gap(m_eff: float, v_eff: float, d_eff: float, hbar: float = 1.0) -> float:
    action = (4.0 / 3.0) * math.sqrt(2.0 * m_eff * d_eff**2 * v_eff) / hbar
    return (hbar / (m_eff * d_eff**2)) * math.exp(-action)


# ----------------------------------------------------------------------------
# Order-parameter scan
# ----------------------------------------------------------------------------

@dataclass
class OrderParameterScan:
    exponent: float
    g: float
    rows: list                    # dicts with g, h, L, q_loc, gap
    extrapolated: dict            # L -> linear h->0 extrapolation
    monotone_ok: bool


def order_parameter_scan(l: float, L_values: Sequence[int], h_values: Sequence[float],
                         g: float, v: float, d: float, *, n_c: int = 2,
                         alpha_c: int = 8, omega_max: float = 1.0) -> OrderParameterScan:
    """Biased ground-state displacement <Q + Xi> per (h, L) on gapless grids.

    h_values should be positive and descending toward zero; a linear small-h
    extrapolation is reported per L.  Trend indicators only; no
    thermodynamic-limit claim is made, and l = 1 results are reported without
    classification.
    """
    h_values = sorted(float(h) for h in h_values)
    if any(h <= 0 for h in h_values):
        raise ValueError("bias values must be positive (h -> +0 limit)")
    rows = []
    extrapolated = {}
    monotone_ok = True
    for L in sorted(int(x) for x in L_values):
        wg = build_powerlaw(l, omega_max, L)
        gap = None
        q_of_h = []
        for h in [0.0] + h_values:
            emitter = double_well_emitter(v, d, h=h)
            system = prepare_system(wg, emitter, g, n_c=n_c, alpha_c=alpha_c)
            res = system.diagonalize(method="dense")
            q_loc = displacement_expectation(system, res.vectors[:, 0])
            if h == 0.0:
                gap = float(res.energies[1] - res.energies[0])
            else:
                q_of_h.append(q_loc)
            rows.append({"l": l, "g": g, "h": h, "L": L, "q_loc": q_loc,
                         "gap": float(res.energies[1] - res.energies[0])})
        q_arr = np.array(q_of_h)
        if np.any(np.diff(q_arr) < -1e-9 * max(1.0, np.max(np.abs(q_arr)))):
            monotone_ok = False
        h1, h2 = h_values[0], h_values[1]
        q1, q2 = q_arr[0], q_arr[1]
        extrapolated[L] = {"q_h_to_0": float(q1 - h1 * (q2 - q1) / (h2 - h1)),
                           "gap_h0": gap}
    return OrderParameterScan(exponent=l, g=g, rows=rows,
                              extrapolated=extrapolated, monotone_ok=monotone_ok)
