"""Command-line entry point: ``qsync sweep | oracle | converge``.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 every sweep
cell failed (or a single evaluation failed).
"""

from __future__ import annotations

import argparse
import inspect
import json
import logging
import sys
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from . import classical, oracles
from .sweep import ConfigError, default_jobs, emit, load_config, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 2, 3

ORACLES = {
    "pl_frequency": classical.pl_frequency,
    "hb_bandwidth": classical.hb_bandwidth,
    "enhancement_factor": classical.enhancement_factor,
    "enhancement_threshold": classical.enhancement_threshold,
    "coupled_sync_boundary": classical.coupled_sync_boundary,
    "locked_solution": classical.locked_solution,
    "amplitude_death_condition": classical.amplitude_death_condition,
    "stability_eigenvalues": classical.stability_eigenvalues,
    "sync_bandwidth": classical.sync_bandwidth,
    "total_bandwidth": classical.total_bandwidth,
    "two_level_steady_state": oracles.two_level_steady_state,
    "two_level_sigma": oracles.two_level_sigma,
    "two_level_ad_threshold": oracles.two_level_ad_threshold,
    "two_level_is_ad": oracles.two_level_is_ad,
    "two_level_eta_star": oracles.two_level_eta_star,
    "reactive_three_level_state": oracles.reactive_three_level_state,
    "reactive_sigma": oracles.reactive_sigma,
}

CONVERGE_MODELS = ("approx_dvdp", "exact_dvdp", "coupled_dissipative", "coupled_reactive",
                   "deep_quantum")


class UsageError(ValueError):
    pass


def _jsonable(v):
    if is_dataclass(v) and not isinstance(v, type):
        return {k: _jsonable(x) for k, x in asdict(v).items()}
    if hasattr(v, "data") and hasattr(v, "space"):
        return {"dims": list(v.space.factors), "real": np.real(v.data).tolist(),
                "imag": np.imag(v.data).tolist()}
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(v.real), "im": float(v.imag)}
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()] if v.dtype.kind == "c" else v.tolist()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, float) and not np.isfinite(v):
        return str(v)
    return v


def _parse_params(tokens: list[str], names: list[str]) -> dict:
    """Accept ``key=value`` pairs or positional values in signature order."""
    out: dict = {}
    positional = [t for t in tokens if "=" not in t]
    keyed = [t for t in tokens if "=" in t]
    if len(positional) > len(names):
        raise UsageError(f"too many positional values; expected at most {names}")
    for name, tok in zip(names, positional):
        out[name] = tok
    for tok in keyed:
        k, v = tok.split("=", 1)
        if k in out:
            raise UsageError(f"parameter {k!r} given twice")
        out[k] = v
    try:
        return {k: float(v) for k, v in out.items()}
    except ValueError as exc:
        raise UsageError(f"parameter values must be numbers: {exc}") from exc


def cmd_oracle(args) -> int:
    fn = ORACLES.get(args.name)
    if fn is None:
        raise UsageError(f"unknown oracle {args.name!r}; choose from {sorted(ORACLES)}")
    names = list(inspect.signature(fn).parameters)
    kw = _parse_params(args.params, names)
    unknown = set(kw) - set(names)
    if unknown:
        raise UsageError(f"unknown parameters {sorted(unknown)} for {args.name}; takes {names}")
    try:
        value = fn(**kw)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc
    except ValueError as exc:
        print(f"qsync oracle: {exc}", file=sys.stderr)
        return EXIT_FAILED
    print(json.dumps({"oracle": args.name, "params": kw, "value": _jsonable(value)}))
    return EXIT_OK


def cmd_converge(args) -> int:
    from .dynamics import TruncationError, converge_truncation
    from .models import (CoupledParams, DeepQuantumParams, DvdpParams, build_approx_dvdp,
                         build_coupled_dissipative, build_coupled_reactive,
                         build_deep_quantum_sl, build_exact_dvdp)

    table = {
        "approx_dvdp": (DvdpParams, build_approx_dvdp),
        "exact_dvdp": (DvdpParams, build_exact_dvdp),
        "coupled_dissipative": (CoupledParams, build_coupled_dissipative),
        "coupled_reactive": (CoupledParams, build_coupled_reactive),
        "deep_quantum": (DeepQuantumParams, build_deep_quantum_sl),
    }
    if args.model not in table:
        raise UsageError(f"unknown model {args.model!r}; choose from {list(CONVERGE_MODELS)}")
    cls, builder = table[args.model]
    names = [n for n in inspect.signature(cls).parameters]
    kw = _parse_params(args.params, names)
    try:
        params = cls(**kw)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    try:
        rep = converge_truncation(builder, params, N_start=args.n_start, N_cap=args.n_cap,
                                  report=True)
    except TruncationError as exc:
        print(f"qsync converge: {exc}", file=sys.stderr)
        return EXIT_FAILED
    print(json.dumps({"model": args.model, "params": kw, "N": rep.N,
                      "history": _jsonable(rep.history)}))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
    for f in formats:
        if f not in ("csv", "json"):
            raise ConfigError(f"unknown output format {f!r}")
    jobs = args.jobs if args.jobs is not None else default_jobs()
    result = run_sweep(cfg, jobs=jobs, seed=args.seed)
    paths = emit(result, args.out, formats, stem=Path(args.config).stem)
    for p in paths:
        print(p)
    total = len(result.cells)
    if result.n_failed:
        print(f"qsync sweep: {result.n_failed}/{total} cells failed", file=sys.stderr)
    return EXIT_FAILED if result.n_failed == total else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsync", description="Synchronization of quantum and "
                                 "classical Duffing-van der Pol oscillators.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("sweep", help="run a parameter sweep from a TOML/JSON config")
    sp.add_argument("config")
    sp.add_argument("--jobs", type=int, default=None, help="worker processes (default: QSYNC_JOBS "
                    "or available CPUs)")
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--format", default="csv,json")
    sp.add_argument("--seed", type=int, default=None)
    sp.set_defaults(func=cmd_sweep)
    op = sub.add_parser("oracle", help="evaluate a closed-form result")
    op.add_argument("name")
    op.add_argument("params", nargs="*", help="values, positional or key=value")
    op.set_defaults(func=cmd_oracle)
    cp = sub.add_parser("converge", help="choose a Fock truncation for a model")
    cp.add_argument("model")
    cp.add_argument("params", nargs="*", help="model parameters, positional or key=value")
    cp.add_argument("--n-start", type=int, default=6)
    cp.add_argument("--n-cap", type=int, default=60)
    cp.set_defaults(func=cmd_converge)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, UsageError, OSError) as exc:
        print(f"qsync {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
