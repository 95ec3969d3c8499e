"""Configuration-driven parameter sweeps with per-cell error isolation.

A sweep is described by a TOML or JSON file::

    model = "classical_hb"
    measure = "bandwidth"

    [[axes]]
    name = "beta_bar"
    min = 0.0
    max = 1.0
    count = 11
    scale = "linear"        # or "log"

    [fixed]
    lambda_bar = 0.5
    F_bar = 0.2

    [solver]
    N = 20
    seed = 0

Cells are evaluated independently (optionally in a process pool) and written
as a CSV with one row per cell plus a JSON sidecar carrying the configuration.
Outputs contain no timings or host data, so identical configs give identical
bytes; ``solver.record_runtime = true`` adds a runtime column.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "Axis",
    "SweepConfig",
    "SweepResult",
    "load_config",
    "run_sweep",
    "emit",
    "MODELS",
    "default_jobs",
]


class ConfigError(ValueError):
    """Invalid sweep configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    count: int
    scale: str = "linear"

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


# parameter names and measures accepted per model
MODELS: dict[str, dict[str, Any]] = {
    "approx_dvdp": {"params": ("lam", "beta", "r", "F", "omega_d"),
                    "measures": ("observed_frequency", "bandwidth", "wigner_peak_margin")},
    "exact_dvdp": {"params": ("lam", "beta", "r", "F", "omega_d"),
                   "measures": ("observed_frequency", "bandwidth", "wigner_peak_margin")},
    "coupled_dissipative": {"params": ("lam", "r", "delta", "eta", "beta"),
                            "measures": ("sigma", "classification", "observed_frequency",
                                         "wigner_peak_margin")},
    "coupled_reactive": {"params": ("lam", "r", "delta", "g"),
                         "measures": ("sigma", "classification", "observed_frequency",
                                      "wigner_peak_margin")},
    "deep_quantum": {"params": ("delta_bar", "eta_bar", "gamma_over_kappa"),
                     "measures": ("sigma", "classification", "wigner_peak_margin")},
    "classical_hb": {"params": ("lambda_bar", "beta_bar", "F_bar"),
                     "measures": ("bandwidth",)},
    "classical_dvdp": {"params": ("lam", "beta", "r", "F", "omega_d"),
                       "measures": ("observed_frequency", "bandwidth")},
    "classical_coupled": {"params": ("lam", "delta", "eta", "beta"),
                          "measures": ("classification",)},
    "classical_reactive": {"params": ("lam", "r", "delta", "g"),
                           "measures": ("sigma",)},
}

DEFAULTS = {
    "lam": 0.1, "beta": 0.0, "r": 1.0, "F": 0.0, "omega_d": 1.0, "delta": 0.0, "eta": 0.0,
    "g": 0.0, "delta_bar": 0.0, "eta_bar": 0.0, "gamma_over_kappa": 100.0,
    "lambda_bar": 0.5, "beta_bar": 0.0, "F_bar": 0.1,
}

SOLVER_DEFAULTS = {
    "N": 16, "N_cap": 60, "tol": 1e-9, "locking_tol": None, "seed": 0, "dt": 0.1,
    "omega_halfwidth": 0.3, "omega_points": 13, "record_runtime": False,
}

CLASS_LABELS = {"unclassified": 0, "frequency_locked": 1, "amplitude_death": 2,
                "drifting": 0, "locked": 1}


@dataclass(frozen=True)
class SweepConfig:
    model: str
    measure: str
    axes: tuple[Axis, ...]
    fixed: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> SweepConfig:
        try:
            axes = tuple(Axis(str(a["name"]), float(a["min"]), float(a["max"]), int(a["count"]),
                              str(a.get("scale", "linear"))) for a in d.get("axes", ()))
            cfg = cls(str(d["model"]), str(d["measure"]), axes, dict(d.get("fixed", {})),
                      {**SOLVER_DEFAULTS, **d.get("solver", {})})
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config: {exc!r}") from exc
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {"model": self.model, "measure": self.measure,
                "axes": [asdict(a) for a in self.axes], "fixed": dict(self.fixed),
                "solver": dict(self.solver)}

    def validate(self) -> None:
        spec = MODELS.get(self.model)
        if spec is None:
            raise ConfigError(f"unknown model {self.model!r}; choose from {sorted(MODELS)}")
        if self.measure not in spec["measures"]:
            raise ConfigError(f"measure {self.measure!r} not available for {self.model}")
        if not 1 <= len(self.axes) <= 2:
            raise ConfigError("a sweep needs one or two axes")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate axis names")
        for a in self.axes:
            if a.name not in spec["params"]:
                raise ConfigError(f"axis {a.name!r} is not a parameter of {self.model}")
            if a.count < 2:
                raise ConfigError(f"axis {a.name!r} needs count >= 2")
            if not (math.isfinite(a.min) and math.isfinite(a.max)):
                raise ConfigError(f"axis {a.name!r} has a non-finite range")
            if a.scale not in ("linear", "log"):
                raise ConfigError(f"axis {a.name!r}: scale must be linear or log")
            if a.scale == "log" and (a.min <= 0 or a.max <= 0):
                raise ConfigError(f"axis {a.name!r}: log scale needs positive bounds")
        for k in self.fixed:
            if k not in spec["params"]:
                raise ConfigError(f"fixed parameter {k!r} is not a parameter of {self.model}")
        for k in self.solver:
            if k not in SOLVER_DEFAULTS:
                raise ConfigError(f"unknown solver option {k!r}")


def load_config(path: str | Path) -> SweepConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        if path.suffix == ".json":
            d = json.loads(raw.decode("utf-8"))
            d = d.get("config", d)
        else:
            d = tomllib.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return SweepConfig.from_dict(d)


@dataclass
class SweepResult:
    config: SweepConfig
    grid: list[np.ndarray]
    cells: list[dict]
    version: str = __version__

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.grid)

    def values(self) -> np.ndarray:
        v = np.array([c["value"] if c["status"] == "ok" else np.nan for c in self.cells], float)
        return v.reshape(self.shape)

    @property
    def n_failed(self) -> int:
        return sum(c["status"] != "ok" for c in self.cells)


# --------------------------------------------------------------------------
# per-cell evaluation


def _quantum_single(model, q, solver):
    from .dynamics import driven_observed_frequency, stationary_spectrum, steady_state
    from .models import DvdpParams, build_approx_dvdp, build_exact_dvdp
    from .observables import is_amplitude_death, quantum_bandwidth_scan, wigner_radial

    builder = build_approx_dvdp if model == "approx_dvdp" else build_exact_dvdp
    p = DvdpParams(lam=q["lam"], beta=q["beta"], r=q["r"], F=q["F"], omega_d=q["omega_d"])
    N = int(solver["N"])
    diag = {"N": N}
    measure = solver["_measure"]
    if measure == "bandwidth":
        # centre on the free-running quantum peak (Kerr shift included)
        w0 = stationary_spectrum(builder(replace(p, F=0.0), N), dt=solver["dt"]).peak_frequency()
        diag["centre"] = w0
        grid = w0 + np.linspace(-solver["omega_halfwidth"], solver["omega_halfwidth"],
                                int(solver["omega_points"]))
        res = quantum_bandwidth_scan(p, grid, N, tol=solver["locking_tol"], builder=builder)
        diag["note"] = res.diagnostic
        return res.bandwidth, diag
    L = builder(p, N)
    if measure == "observed_frequency" and p.F:
        res = driven_observed_frequency(L)
        diag["d_omega"] = res.spectrum.d_omega
        return res.frequency, diag
    rho = steady_state(L, tol=solver["tol"])
    diag["residual"] = _residual(L, rho)
    if measure == "observed_frequency":
        s = stationary_spectrum(L, rho, dt=solver["dt"])
        diag["d_omega"] = s.d_omega
        return s.peak_frequency(), diag
    return is_amplitude_death(wigner_radial(rho))[1], diag


def _residual(L, rho) -> float:
    v = rho.vec()
    return float(np.abs(L.static @ v).max())


def _quantum_pair(model, q, solver):
    from .dynamics import stationary_spectrum, steady_state
    from .fock import partial_trace
    from .models import (CoupledParams, DeepQuantumParams, build_coupled_dissipative,
                         build_coupled_reactive, build_deep_quantum_sl)
    from .observables import (coupled_frequency_locking, is_amplitude_death, pearson_sigma,
                              wigner_radial)

    N = int(solver["N"])
    if model == "deep_quantum":
        L = build_deep_quantum_sl(DeepQuantumParams.from_reduced(
            q["delta_bar"], q["eta_bar"], q["gamma_over_kappa"]), N)
    elif model == "coupled_dissipative":
        L = build_coupled_dissipative(CoupledParams(lam=q["lam"], r=q["r"], delta=q["delta"],
                                                    eta=q["eta"], beta=q["beta"]), N)
    else:
        L = build_coupled_reactive(CoupledParams(lam=q["lam"], r=q["r"], delta=q["delta"],
                                                 g=q["g"]), N)
    rho = steady_state(L, tol=solver["tol"])
    diag = {"N": N, "residual": _residual(L, rho)}
    measure = solver["_measure"]
    if measure == "sigma":
        return pearson_sigma(rho), diag
    if measure == "classification":
        c = coupled_frequency_locking(L, tol=solver["locking_tol"], dt=solver["dt"], rho=rho)
        diag["label"] = c.label
        return CLASS_LABELS[c.label], diag
    if measure == "observed_frequency":
        return stationary_spectrum(L, rho, dt=solver["dt"]).peak_frequency(), diag
    margins = [is_amplitude_death(wigner_radial(partial_trace(rho, k)))[1] for k in (0, 1)]
    return min(margins), diag


def _classical(model, q, solver):
    from . import classical as C
    from .models import CoupledParams, DvdpParams

    seed = int(solver["_cell_seed"])
    measure = solver["_measure"]
    if model == "classical_hb":
        return C.hb_bandwidth(q["lambda_bar"], q["beta_bar"], q["F_bar"]), {}
    if model == "classical_dvdp":
        p = DvdpParams(lam=q["lam"], beta=q["beta"], r=q["r"], F=q["F"], omega_d=q["omega_d"])
        if measure == "bandwidth":
            tol = solver["locking_tol"] or 1e-3
            res = C.classical_bandwidth_scan(p, tol=tol)
            return res.bandwidth, {"note": res.diagnostic}
        t_cut = 50.0 / max(p.lam, 1e-3)
        tr = C.integrate_dvdp(p, (0.0, t_cut + 3000.0), (2 * p.r, 0.0)).after(t_cut)
        return C.classical_observed_frequency(tr), {}
    if model == "classical_coupled":
        res = C.classify_coupled_averaged(q["lam"], q["eta"], q["delta"], beta=q["beta"], seed=seed)
        return int(res["label"]), {"t_end": res["t_end"]}
    p = CoupledParams(lam=q["lam"], r=q["r"], delta=q["delta"], g=q["g"])
    a = C.annulus_initial_conditions(2, seed)
    s0 = (2 * a[0].real, 2 * a[0].imag, 2 * a[1].real, 2 * a[1].imag)
    t_cut = 50.0 / max(p.lam, 1e-3)
    span = t_cut + 10_000 * 2 * np.pi / 7 + 10
    tr = C.integrate_coupled(p, "reactive", (0.0, span), s0)
    return float(C.trajectory_pearson(tr, transient_cut=t_cut)), {}


def _evaluate(model: str, q: dict, solver: dict):
    if model in ("approx_dvdp", "exact_dvdp"):
        return _quantum_single(model, q, solver)
    if model in ("coupled_dissipative", "coupled_reactive", "deep_quantum"):
        return _quantum_pair(model, q, solver)
    return _classical(model, q, solver)


def _run_cell(model: str, q: dict, solver: dict) -> dict:
    t0 = time.perf_counter()
    try:
        value, diag = _evaluate(model, q, solver)
        value = float(value)
        if not math.isfinite(value):
            raise FloatingPointError("non-finite measure")
        cell = {"status": "ok", "value": value, "diag": diag}
    except Exception as exc:  # noqa: BLE001 -- isolation is the point
        cell = {"status": f"error:{type(exc).__name__}", "value": None,
                "diag": {"message": str(exc)}}
    cell["runtime"] = time.perf_counter() - t0
    return cell


def default_jobs() -> int:
    env = os.environ.get("QSYNC_JOBS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"QSYNC_JOBS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigError("QSYNC_JOBS must be >= 1")
        return n
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity")
               else (os.cpu_count() or 1))


def run_sweep(config: SweepConfig, jobs: int | None = None, seed: int | None = None) -> SweepResult:
    """Evaluate ``config.measure`` on every grid cell.

    Each cell gets its own seed spawned from the sweep seed, so results do not
    depend on ``jobs`` or on scheduling order.
    """
    config.validate()
    if seed is not None:
        config = replace(config, solver={**config.solver, "seed": int(seed)})
    solver = {**SOLVER_DEFAULTS, **config.solver}
    jobs = default_jobs() if jobs is None else int(jobs)
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    grid = [a.values() for a in config.axes]
    base = {k: DEFAULTS[k] for k in MODELS[config.model]["params"]}
    base.update({k: float(v) for k, v in config.fixed.items()})
    combos = list(itertools.product(*grid))
    seeds = np.random.SeedSequence(int(solver["seed"])).generate_state(len(combos))
    tasks = []
    for combo, s in zip(combos, seeds):
        q = dict(base)
        q.update({a.name: float(v) for a, v in zip(config.axes, combo)})
        tasks.append((config.model, q, {**solver, "_measure": config.measure,
                                        "_cell_seed": int(s)}))
    if jobs == 1 or len(tasks) == 1:
        cells = [_run_cell(*t) for t in tasks]
    else:
        from joblib import Parallel, delayed
        cells = Parallel(n_jobs=jobs)(delayed(_run_cell)(*t) for t in tasks)
    for cell, combo in zip(cells, combos):
        cell["point"] = [float(v) for v in combo]
    return SweepResult(config, grid, cells)


# --------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def _csv_text(result: SweepResult) -> str:
    record_runtime = bool(result.config.solver.get("record_runtime", False))
    diag_keys = sorted({k for c in result.cells for k in c["diag"]})
    header = [a.name for a in result.config.axes] + [result.config.measure, "status"] + diag_keys
    if record_runtime:
        header.append("runtime")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for c in result.cells:
        row = [_fmt(v) for v in c["point"]] + [_fmt(c["value"]), c["status"]]
        row += [_fmt(c["diag"].get(k)) for k in diag_keys]
        if record_runtime:
            row.append(_fmt(c["runtime"]))
        w.writerow(row)
    return buf.getvalue()


def _json_text(result: SweepResult) -> str:
    doc = {"qsync_version": result.version, "config": result.config.to_dict(),
           "shape": list(result.shape), "grid": [g.tolist() for g in result.grid],
           "failed_cells": result.n_failed}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def emit(result: SweepResult, out_dir: str | Path, formats=("csv", "json"),
         stem: str | None = None) -> list[Path]:
    """Write ``<stem>.csv`` and/or ``<stem>.json`` into ``out_dir``."""
    out = Path(out_dir)
    stem = stem or f"{result.config.model}_{result.config.measure}"
    writers: dict[str, Callable[[SweepResult], str]] = {"csv": _csv_text, "json": _json_text}
    paths = []
    for fmt in formats:
        if fmt not in writers:
            raise ConfigError(f"unknown output format {fmt!r}")
        path = out / f"{stem}.{fmt}"
        try:
            out.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(writers[fmt](result))
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc
        paths.append(path)
    return paths
