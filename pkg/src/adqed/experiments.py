"""
Experiment drivers composing the domain modules into artifact tables.

Every driver returns plain row dictionaries plus a summary payload; the CLI
writes them through io.RunWriter.  Sweep points are independent pure calls and
run through a bounded thread pool with results merged by index, so reruns are
bit-identical regardless of scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np

from . import dynamics as dyn
from .adframe import mass_renormalization, scaling_table
from .bosons import diagonalize_symplectic
from .ed import convergence_study, prepare_system
from .effective import build_ising, diagonalize_spins, lmg_limit
from .model import (EmitterSpec, WaveguideSpec, coupling_for_strength,
                    double_well_emitter)
from .phase import order_parameter_scan, theta_scaling, tunneling_gap
from .spectra import classify_excitations


def _parallel(fn: Callable, items: Sequence, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_spectrum(waveguide: WaveguideSpec, emitter: EmitterSpec,
                 g_values: Sequence[float], n_c: int, alpha_c: int,
                 n_eigs: Optional[int] = None, method: str = "auto",
                 threads: int = 1) -> dict:
    """g-sweep of the low-energy spectrum with classification labels."""

    def point(g):
        system = prepare_system(waveguide, emitter, g, n_c=n_c, alpha_c=alpha_c)
        res = system.diagonalize(n_eigs=n_eigs, method=method)
        cls = classify_excitations(res, system.basis, waveguide,
                                   matter=system.matter)
        rows = []
        for i in range(res.n_states):
            rows.append({
                "g": float(g), "level": i,
                "energy": float(res.energies[i]),
                "excitation": float(res.excitations[i]),
                "parity": int(res.parity[i]) if res.parity is not None else 0,
                "label": cls.labels[i],
                "zero_photon_weight": float(cls.zero_photon[i])
                if cls.zero_photon is not None else -1.0,
            })
        return rows

    chunks = _parallel(point, list(g_values), threads)
    rows = [r for chunk in chunks for r in chunk]
    return {"tables": {"spectrum.csv":
                       (["g", "level", "energy", "excitation", "parity",
                         "label", "zero_photon_weight"], rows)},
            "summary": {"n_points": len(list(g_values))}}


def run_scaling(waveguide: WaveguideSpec, emitter: EmitterSpec,
                g_values: Sequence[float], n_c: int = 2, alpha_c: int = 10) -> dict:
    out = scaling_table(waveguide, emitter, g_values, n_c=n_c, alpha_c=alpha_c)
    rows = []
    for r in out["rows"]:
        for key, val in r.items():
            if key != "g":
                rows.append({"g": r["g"], "quantity": key, "value": float(val)})
    return {"tables": {"scaling.csv": (["g", "quantity", "value"], rows)},
            "summary": {"fits": out["fits"]}}


def run_converge(waveguide: WaveguideSpec, emitter: EmitterSpec,
                 g_values: Sequence[float], n_c_values: Sequence[int],
                 alpha_c_values: Sequence[int], n_levels: int = 5) -> dict:
    rep = convergence_study(waveguide, emitter, g_values, n_c_values,
                            alpha_c_values, n_levels=n_levels)
    rows = []
    for r in rep["rows"]:
        for i, e in enumerate(r["excitations"]):
            rows.append({"g": r["g"], "n_c": r["n_c"], "alpha_c": r["alpha_c"],
                         "level": i + 1, "excitation": float(e)})
    changes = {f"g={g} {kind} {a}->{b}": val
               for (g, kind, a, b), val in rep["max_rel_change"].items()}
    return {"tables": {"convergence.csv":
                       (["g", "n_c", "alpha_c", "level", "excitation"], rows)},
            "summary": {"max_rel_change": changes}}


def run_quench(waveguide: WaveguideSpec, g: float, v: float, d_i: float,
               d_f: float, n_c: int = 3, alpha_c: int = 12,
               t_max: Optional[float] = None, n_t: int = 600) -> dict:
    protocol = dyn.QuenchProtocol(waveguide=waveguide,
                                  emitter_initial=double_well_emitter(v, d_i),
                                  emitter_final=double_well_emitter(v, d_f),
                                  g=g, n_c=n_c, alpha_c=alpha_c)
    prepared = dyn.quench_initial_state(protocol)
    post = prepared.system_post
    omega_osc, period = dyn.oscillation_estimate(
        v, d_f, float(post.ad.m_eff), float(post.ad.xi_total), hbar=post.hbar)
    if t_max is None:
        t_max = 5.0 * (period if period else 50.0)
    times = np.linspace(0.0, t_max, n_t)
    result = dyn.evolve_observables(prepared, times)

    heat = [{"t": float(t), "x": int(x), "n_x": float(result.n_xt[i, j])}
            for i, t in enumerate(result.times)
            for j, x in enumerate(result.sites)]
    trace = [{"t": float(t), "n0": float(result.n0[i])}
             for i, t in enumerate(result.times)]
    weights = [{"E": float(e), "abs_c": float(w)}
               for e, w in zip(result.energies, result.weights) if w > 1e-12]
    summary = {
        "omega_osc": omega_osc, "period": period,
        "norm_drift": result.norm_drift, "energy_drift": result.energy_drift,
        "overlap_deficit": result.deficit,
        "dominant_frequency": dyn.dominant_frequency(result.times, result.n0),
    }
    return {"tables": {
                "heatmap.csv": (["t", "x", "n_x"], heat),
                "trace.csv": (["t", "n0"], trace),
                "weights.csv": (["E", "abs_c"], weights)},
            "summary": summary}


def run_two_emitter(waveguide: WaveguideSpec, g_values: Sequence[float],
                    separations: Sequence[int], v: float = 0.5, d: float = 1.0,
                    threads: int = 1) -> dict:
    """Separation scans of m_eff and the waveguide-mediated mu_21."""

    def point(args):
        g, sep = args
        emitters = [double_well_emitter(v, d, position=0.0),
                    double_well_emitter(v, d, position=float(sep))]
        coupling = coupling_for_strength(waveguide, g)
        frame = diagonalize_symplectic(waveguide, emitters, coupling)
        ad = mass_renormalization(frame, coupling, waveguide, emitters)
        return {"g": float(g), "separation": float(sep),
                "m_eff": float(ad.m_eff[0]), "mu_21": float(ad.mu[1, 0]),
                "G_12": float(ad.G[0, 1]), "theta": float(ad.theta[0])}

    items = [(g, s) for g in g_values for s in separations]
    rows = _parallel(point, items, threads)
    return {"tables": {"two_emitter.csv":
                       (["g", "separation", "m_eff", "mu_21", "G_12", "theta"],
                        rows)},
            "summary": {"n_points": len(rows)}}


def run_ising(waveguide: WaveguideSpec, positions: Sequence[float], g: float,
              v: float = 0.5, d: float = 1.0, alpha_c: int = 4,
              spin_spectrum: bool = True) -> dict:
    emitters = [double_well_emitter(v, d, position=float(x)) for x in positions]
    coupling = coupling_for_strength(waveguide, g)
    frame = diagonalize_symplectic(waveguide, emitters, coupling)
    ad = mass_renormalization(frame, coupling, waveguide, emitters)
    model = build_ising(waveguide, emitters, coupling, frame, ad, alpha_c=alpha_c)
    rows = [{"i": i, "j": j, "J_ij": float(model.J[i, j])}
            for i in range(model.n_spins) for j in range(i)]
    fields = [{"j": j, "delta_g": float(model.delta_g[j])}
              for j in range(model.n_spins)]
    tables = {"ising_couplings.csv": (["i", "j", "J_ij"], rows),
              "ising_fields.csv": (["j", "delta_g"], fields)}
    summary = {"model_json": model.to_json()}
    if spin_spectrum and model.n_spins <= 14:
        spec = diagonalize_spins(model)
        tables["spin_spectrum.csv"] = (["level", "energy"],
                                       [{"level": i, "energy": float(e)}
                                        for i, e in enumerate(spec["energies"])])
        summary["magnetization_x"] = spec["magnetization_x"]
        seps = {abs(positions[i] - positions[j]) for i in range(len(positions))
                for j in range(i)}
        if len(seps) == 1 and model.n_spins >= 2:
            summary["lmg_J_prime"] = lmg_limit(model).J_prime
    return {"tables": tables, "summary": summary}


def run_phase(l_values: Sequence[float], L_values: Sequence[int],
              h_values: Sequence[float], g: float, v: float, d: float,
              ed_L_values: Optional[Sequence[int]] = None,
              n_c: int = 2, alpha_c: int = 8) -> dict:
    theta_rows, fits = [], {}
    for l in l_values:
        scan = theta_scaling(l, L_values, g=g)
        for L, th in zip(scan.L_values, scan.theta):
            theta_rows.append({"l": float(l), "L": int(L), "theta": float(th)})
        fits[str(l)] = {"class": scan.divergence_class, "power": scan.power,
                        "residuals": scan.residuals}
    tables = {"theta.csv": (["l", "L", "theta"], theta_rows)}
    summary = {"theta_fits": fits}
    if ed_L_values:
        order_rows, gap_rows = [], []
        for l in l_values:
            scan = order_parameter_scan(l, ed_L_values, h_values, g, v, d,
                                        n_c=n_c, alpha_c=alpha_c)
            for r in scan.rows:
                order_rows.append({"l": r["l"], "g": r["g"], "h": r["h"],
                                   "L": r["L"], "q_loc": r["q_loc"]})
                gap_rows.append({"l": r["l"], "g": r["g"], "h": r["h"],
                                 "L": r["L"], "gap": r["gap"]})
            summary[f"order_l={l}"] = {str(L): v for L, v in scan.extrapolated.items()}
        tables["order_parameter.csv"] = (["l", "g", "h", "L", "q_loc"], order_rows)
        tables["gaps.csv"] = (["l", "g", "h", "L", "gap"], gap_rows)
    return {"tables": tables, "summary": summary}
