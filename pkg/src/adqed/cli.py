"""
Command line interface.

    adqed <experiment> --config <path> --out-dir <path> [--threads N]
                       [--nc N] [--alpha-c N] [--n-eigs N] [--method M]
    adqed validate --config <path>

Experiments: spectrum | quench | scaling | converge | two-emitter | ising |
phase.  Configs are plain `key = value` text files (# comments allowed); the
full key schema is documented in the README.  Exit codes: 0 success, 2
configuration error, 3 numerical failure.  Set ADQED_LOG=debug|info|quiet for
verbosity.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, experiments
from .io import RunWriter
from .model import (WaveguideSpec, build_cavity_array, build_powerlaw,
                    double_well_emitter)

log = logging.getLogger("adqed")


class ConfigError(Exception):
    """Invalid configuration; maps to exit code 2."""


EXPERIMENTS = ("spectrum", "quench", "scaling", "converge", "two-emitter",
               "ising", "phase")

# key -> (parser, default); None default means required when used
_SCHEMA = {
    "waveguide.kind": (str, "cavity-array"),
    "waveguide.L": (int, 19),
    "waveguide.omega_c": (float, 1.0),
    "waveguide.J": (float, 0.2),
    "waveguide.l": (float, 1.0),
    "waveguide.omega_max": (float, 1.0),
    "coupling.g": (float, 1.0),
    "emitter.v": (float, 0.5),
    "emitter.d": (float, 0.87),
    "emitter.h": (float, 0.0),
    "emitter.x": (float, 0.0),
    "emitter.m": (float, 1.0),
    "sweep.parameter": (str, "coupling.g"),
    "sweep.start": (float, 0.1),
    "sweep.stop": (float, 10.0),
    "sweep.count": (int, 20),
    "sweep.log": (lambda s: s.lower() in ("1", "true", "yes"), False),
    "cutoffs.nc": (int, 3),
    "cutoffs.alpha_c": (int, 10),
    "cutoffs.n_eigs": (int, 0),          # 0 = full spectrum
    "cutoffs.method": (str, "auto"),
    "quench.d_i": (float, 2.0),
    "quench.d_f": (float, 2.5),
    "quench.t_max": (float, 0.0),        # 0 = five estimated periods
    "quench.n_t": (int, 600),
    "converge.nc_values": (str, "2,3,4"),
    "converge.alpha_c_values": (str, "10"),
    "converge.n_levels": (int, 5),
    "two_emitter.g_values": (str, "0.3,3"),
    "two_emitter.separations": (str, "0,1,2,3,4,5,6,7,8"),
    "ising.positions": (str, "0,2"),
    "phase.l_values": (str, "0.5,1,2"),
    "phase.L_values": (str, "1000,3162,10000,31623,100000"),
    "phase.h_values": (str, "0.05,0.01,0.002"),
    "phase.ed_L_values": (str, ""),
}


def parse_config(path) -> dict:
    """Parse `key = value` lines; errors cite the line number and key."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    out = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"line {ln}: unknown key '{key}'")
        parser, _ = _SCHEMA[key]
        try:
            out[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"line {ln}: key '{key}': cannot parse {val!r}") from exc
    return out


def _get(cfg: dict, key: str):
    if key in cfg:
        return cfg[key]
    return _SCHEMA[key][1]


def _float_list(cfg, key):
    raw = _get(cfg, key)
    if not raw:
        return []
    try:
        return [float(x) for x in str(raw).split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"key '{key}': cannot parse list {raw!r}") from exc


def _int_list(cfg, key):
    return [int(round(x)) for x in _float_list(cfg, key)]


def build_waveguide(cfg: dict) -> WaveguideSpec:
    kind = _get(cfg, "waveguide.kind")
    L = _get(cfg, "waveguide.L")
    try:
        if kind == "cavity-array":
            return build_cavity_array(_get(cfg, "waveguide.omega_c"),
                                      _get(cfg, "waveguide.J"), L)
        if kind == "power-law":
            return build_powerlaw(_get(cfg, "waveguide.l"),
                                  _get(cfg, "waveguide.omega_max"), L)
    except ValueError as exc:
        raise ConfigError(f"key 'waveguide.kind={kind}': {exc}") from exc
    raise ConfigError(f"key 'waveguide.kind': unsupported value '{kind}' "
                      "(cavity-array | power-law; tabulated is API-only)")


def build_emitter(cfg: dict):
    try:
        return double_well_emitter(_get(cfg, "emitter.v"), _get(cfg, "emitter.d"),
                                   h=_get(cfg, "emitter.h"),
                                   mass=_get(cfg, "emitter.m"),
                                   position=_get(cfg, "emitter.x"))
    except ValueError as exc:
        raise ConfigError(f"emitter keys: {exc}") from exc


def sweep_values(cfg: dict) -> list:
    n = _get(cfg, "sweep.count")
    if n < 1:
        raise ConfigError("key 'sweep.count': sweep axis is empty")
    a, b = _get(cfg, "sweep.start"), _get(cfg, "sweep.stop")
    if _get(cfg, "sweep.log"):
        if a <= 0 or b <= 0:
            raise ConfigError("key 'sweep.start': log sweep needs positive bounds")
        return list(np.geomspace(a, b, n))
    return list(np.linspace(a, b, n))


def estimate_dimensions(cfg: dict) -> dict:
    L = _get(cfg, "waveguide.L")
    kind = _get(cfg, "waveguide.kind")
    modes = (L + 1) // 2 if kind == "cavity-array" else L
    ac = _get(cfg, "cutoffs.alpha_c")
    out = {}
    for nc in range(1, max(_get(cfg, "cutoffs.nc"), 5) + 1):
        dim = ac * math.comb(modes + nc, nc)
        out[f"N_c={nc}"] = {"dimension": dim,
                            "dense_bytes": 8 * dim * dim}
    return out


def run_experiment(name: str, cfg: dict, args) -> dict:
    wg = build_waveguide(cfg)
    em = build_emitter(cfg)
    nc = args.nc if args.nc is not None else _get(cfg, "cutoffs.nc")
    ac = args.alpha_c if args.alpha_c is not None else _get(cfg, "cutoffs.alpha_c")
    n_eigs = args.n_eigs if args.n_eigs is not None else _get(cfg, "cutoffs.n_eigs")
    n_eigs = None if not n_eigs else int(n_eigs)
    method = args.method or _get(cfg, "cutoffs.method")
    threads = args.threads

    if name == "spectrum":
        if _get(cfg, "sweep.parameter") != "coupling.g":
            raise ConfigError("key 'sweep.parameter': only coupling.g sweeps "
                              "are supported")
        return experiments.run_spectrum(wg, em, sweep_values(cfg), nc, ac,
                                        n_eigs=n_eigs, method=method,
                                        threads=threads)
    if name == "scaling":
        return experiments.run_scaling(wg, em, sweep_values(cfg), n_c=min(nc, 2),
                                       alpha_c=ac)
    if name == "converge":
        return experiments.run_converge(wg, em, sweep_values(cfg),
                                        _int_list(cfg, "converge.nc_values"),
                                        _int_list(cfg, "converge.alpha_c_values"),
                                        n_levels=_get(cfg, "converge.n_levels"))
    if name == "quench":
        t_max = _get(cfg, "quench.t_max") or None
        return experiments.run_quench(wg, _get(cfg, "coupling.g"),
                                      _get(cfg, "emitter.v"),
                                      _get(cfg, "quench.d_i"),
                                      _get(cfg, "quench.d_f"),
                                      n_c=nc, alpha_c=ac, t_max=t_max,
                                      n_t=_get(cfg, "quench.n_t"))
    if name == "two-emitter":
        return experiments.run_two_emitter(wg, _float_list(cfg, "two_emitter.g_values"),
                                           _int_list(cfg, "two_emitter.separations"),
                                           v=_get(cfg, "emitter.v"),
                                           d=_get(cfg, "emitter.d"),
                                           threads=threads)
    if name == "ising":
        return experiments.run_ising(wg, _float_list(cfg, "ising.positions"),
                                     _get(cfg, "coupling.g"),
                                     v=_get(cfg, "emitter.v"),
                                     d=_get(cfg, "emitter.d"), alpha_c=ac)
    if name == "phase":
        ed_L = _int_list(cfg, "phase.ed_L_values")
        return experiments.run_phase(_float_list(cfg, "phase.l_values"),
                                     _int_list(cfg, "phase.L_values"),
                                     _float_list(cfg, "phase.h_values"),
                                     _get(cfg, "coupling.g"),
                                     _get(cfg, "emitter.v"), _get(cfg, "emitter.d"),
                                     ed_L_values=ed_L or None, n_c=nc, alpha_c=ac)
    raise ConfigError(f"unknown experiment '{name}'")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="adqed", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("experiment", choices=EXPERIMENTS + ("validate",))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out-dir", default="adqed-out")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--nc", type=int, default=None)
    parser.add_argument("--alpha-c", dest="alpha_c", type=int, default=None)
    parser.add_argument("--n-eigs", dest="n_eigs", type=int, default=None)
    parser.add_argument("--method", choices=("dense", "iterative", "auto"),
                        default=None)
    parser.add_argument("--version", action="version", version=__version__)
    args = parser.parse_args(argv)

    level = {"debug": logging.DEBUG, "quiet": logging.ERROR}.get(
        os.environ.get("ADQED_LOG", "info").lower(), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")

    try:
        cfg = parse_config(args.config)
        if args.experiment == "validate":
            dims = estimate_dimensions(cfg)
            build_waveguide(cfg)
            build_emitter(cfg)
            sweep_values(cfg)
            for k, v in dims.items():
                log.info("%s: dimension %d (%.1f MB dense)", k, v["dimension"],
                         v["dense_bytes"] / 1e6)
            print("config OK")
            return 0
        result = run_experiment(args.experiment, cfg, args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return 3
    except ValueError as exc:
        log.error("config error: %s", exc)
        return 2

    writer = RunWriter(args.out_dir, cfg, __version__)
    for name, (cols, rows) in sorted(result["tables"].items()):
        writer.table(name, cols, rows)
    writer.json_file("summary.json", result["summary"])
    for key, val in result["summary"].items():
        if "drift" in str(key) or "deficit" in str(key):
            writer.flag(key, val)
    manifest = writer.finalize()
    log.info("wrote %s", manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
