"""Benchmark harness: single experiments and named studies with CSV
output and cached reference solutions.

A reference is an independent dense matrix exponential when the full
operator fits the size guard, otherwise a tight-tolerance stabilized run.
References are cached per configuration fingerprint; the fingerprint
covers exactly the fields that affect the true solution, so solver-only
changes reuse the cache.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .domeig import PowerIterConfig
from .errors import IntegrationAbort
from .problems import DgProblem, FdProblem
from .state import StateVector, ToleranceSpec
from .timeloop import (
    ControllerConfig,
    EigPolicy,
    METHOD_NAMES,
    advance_adaptive,
    advance_fixed,
    make_method,
)
from .state import GridLayout

EXPM_GUARD = 4096
N_SAMPLES = 20

CSV_COLUMNS = [
    "study", "method", "problem", "nu", "n_v", "n_x", "rtol_or_h", "norm",
    "eig_mode", "q_lambda", "error_Linf20", "error_maxmax", "runtime_s",
    "steps", "rejected", "failure_rate", "rhs_evals", "stages_total",
    "domeig_iters", "blew_up", "status", "fingerprint",
]


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "fd"
    method: str = "rkl"
    nu: float = 1.0
    n_v: int = 64
    n_x: int = 4
    rtol: tuple = (1e-4,)
    atol: float = 1e-11
    norm: str = "component"
    eig_mode: str = "power"
    q_lambda: float = 1.1
    tau: float = 0.1
    t_f: float = 1.0
    fixed_h: tuple = ()
    seed: int = 0
    out: str = "results.csv"

    def __post_init__(self):
        if self.problem not in ("fd", "dg"):
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.method not in METHOD_NAMES:
            raise ValueError(f"unknown method {self.method!r}")
        if self.method.startswith("dirk") and self.problem != "fd":
            raise ValueError("dirk methods require problem = fd")
        if self.n_v <= 0 or self.n_x <= 0:
            raise ValueError("grid extents must be positive")
        if self.nu <= 0 or self.t_f <= 0:
            raise ValueError("nu and t_f must be positive")
        if not self.rtol and not self.fixed_h:
            raise ValueError("need at least one rtol or fixed_h point")

    def fingerprint(self) -> str:
        key = (f"problem={self.problem};nu={self.nu!r};n_v={self.n_v};"
               f"n_x={self.n_x};t_f={self.t_f!r}")
        return hashlib.sha256(key.encode()).hexdigest()[:16]


def build_problem(cfg: ExperimentConfig):
    if cfg.problem == "fd":
        return FdProblem(GridLayout("fd", cfg.n_v, cfg.n_x), cfg.nu)
    return DgProblem(GridLayout("dg", cfg.n_v, cfg.n_x), cfg.nu)


def sample_times(t_f: float) -> np.ndarray:
    return np.array([k * t_f / N_SAMPLES for k in range(1, N_SAMPLES + 1)])


@dataclass(frozen=True)
class ReferenceSolution:
    times: np.ndarray
    snapshots: np.ndarray
    provenance: str
    fingerprint: str

    def __post_init__(self):
        if len(self.times) != N_SAMPLES:
            raise ValueError(f"expected {N_SAMPLES} sample times")
        if self.snapshots.shape[0] != N_SAMPLES:
            raise ValueError(f"expected {N_SAMPLES} snapshots")


def _expm_reference(problem, times) -> np.ndarray:
    op = problem.assemble_matrix()
    w, V = np.linalg.eigh((op + op.T) / 2.0)
    f0 = problem.initial_condition().values
    coeffs = V.T @ f0
    return np.stack([V @ (np.exp(w * t) * coeffs) for t in times])


def _tight_reference(problem, t_f, times) -> np.ndarray:
    # atol well below the run default so the absolute floor does not cap
    # reference accuracy near 1e-8
    tol = ToleranceSpec(1e-12, atol=1e-14)
    method = make_method("rkl", problem, tol)
    samples, _ = advance_adaptive(
        problem, method, tol, "cell",
        EigPolicy(q_lambda=1.2, refresh="periodic", period=25),
        ControllerConfig(), t_f, list(times))
    return np.stack([s.values for s in samples])


def compute_reference(cfg: ExperimentConfig, cache_dir: str | None = None
                      ) -> ReferenceSolution:
    fp = cfg.fingerprint()
    path = None
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        path = os.path.join(cache_dir, f"ref_{fp}.npz")
        if os.path.exists(path):
            with np.load(path, allow_pickle=False) as dat:
                return ReferenceSolution(dat["times"], dat["snapshots"],
                                         str(dat["provenance"]), fp)
    problem = build_problem(cfg)
    times = sample_times(cfg.t_f)
    if problem.layout.n_dof <= EXPM_GUARD:
        snapshots, provenance = _expm_reference(problem, times), "expm"
    else:
        snapshots = _tight_reference(problem, cfg.t_f, times)
        provenance = "tight"
    if path is not None:
        lay = problem.layout
        np.savez(path, times=times, snapshots=snapshots,
                 provenance=np.str_(provenance), kind=np.str_(lay.kind),
                 n_v=np.int64(lay.n_v), n_x=np.int64(lay.n_x),
                 endianness=np.str_("little"), fingerprint=np.str_(fp))
    return ReferenceSolution(times, snapshots, provenance, fp)


def error_metrics(samples, ref: ReferenceSolution):
    """(relative Linf over the sample times, absolute max-in-time
    max-in-space error)."""
    if len(samples) != len(ref.times):
        raise ValueError(f"expected {len(ref.times)} samples, "
                         f"got {len(samples)}")
    linf20 = 0.0
    maxmax = 0.0
    for k, s in enumerate(samples):
        if s.values.shape != ref.snapshots[k].shape:
            raise ValueError("sample/reference layout mismatch")
        diff = float(np.max(np.abs(s.values - ref.snapshots[k])))
        denom = float(np.max(np.abs(ref.snapshots[k])))
        if denom == 0.0:
            raise ValueError("reference snapshot is identically zero")
        linf20 = max(linf20, diff / denom)
        maxmax = max(maxmax, diff)
    return linf20, maxmax


def _eig_policy(cfg: ExperimentConfig) -> EigPolicy:
    return EigPolicy(mode=cfg.eig_mode, q_lambda=cfg.q_lambda,
                     refresh="periodic", period=25,
                     power=PowerIterConfig(tau=cfg.tau, seed=cfg.seed))


def _base_row(cfg: ExperimentConfig, point, study: str) -> dict:
    return {
        "study": study, "method": cfg.method, "problem": cfg.problem,
        "nu": cfg.nu, "n_v": cfg.n_v, "n_x": cfg.n_x, "rtol_or_h": point,
        "norm": cfg.norm, "eig_mode": cfg.eig_mode, "q_lambda": cfg.q_lambda,
        "error_Linf20": math.nan, "error_maxmax": math.nan,
        "runtime_s": 0.0, "steps": 0, "rejected": 0, "failure_rate": 0.0,
        "rhs_evals": 0, "stages_total": 0, "domeig_iters": 0,
        "blew_up": False, "status": "ok", "fingerprint": cfg.fingerprint(),
    }


def _fill_stats(row: dict, stats):
    row.update(runtime_s=stats.wall_clock, steps=stats.accepted,
               rejected=stats.rejected, failure_rate=stats.failure_rate,
               rhs_evals=stats.rhs_evals, stages_total=stats.stages_total,
               domeig_iters=stats.domeig_iters)


def run_experiment(cfg: ExperimentConfig, cache_dir: str | None = None,
                   study: str = "", write: bool = True):
    """One row per (rtol | fixed_h) point; writes cfg.out unless told
    not to and always returns the rows."""
    ref = compute_reference(cfg, cache_dir)
    problem = build_problem(cfg)
    times = list(sample_times(cfg.t_f))
    eig = _eig_policy(cfg)
    rows = []

    for rtol in cfg.rtol:
        tol = ToleranceSpec(rtol, cfg.atol)
        method = make_method(cfg.method, problem, tol, cfg.norm)
        row = _base_row(cfg, rtol, study)
        try:
            samples, stats = advance_adaptive(problem, method, tol, cfg.norm,
                                              eig, ControllerConfig(),
                                              cfg.t_f, times)
            _fill_stats(row, stats)
            linf20, maxmax = error_metrics(samples, ref)
            row.update(error_Linf20=linf20, error_maxmax=maxmax)
        except IntegrationAbort:
            row["status"] = "abort"
        rows.append(row)

    for h in cfg.fixed_h:
        tol = ToleranceSpec(cfg.rtol[0] if cfg.rtol else 1e-6, cfg.atol)
        method = make_method(cfg.method, problem, tol, cfg.norm)
        row = _base_row(cfg, h, study)
        samples, stats, blew = advance_fixed(problem, method, h, cfg.t_f,
                                             times, tol=tol, eig=eig)
        _fill_stats(row, stats)
        row["blew_up"] = blew
        if not blew:
            linf20, maxmax = error_metrics(samples, ref)
            row.update(error_Linf20=linf20, error_maxmax=maxmax)
        rows.append(row)

    if write:
        write_csv(cfg.out, rows)
    return rows


def _fmt(col: str, val) -> str:
    if col in ("error_Linf20", "error_maxmax"):
        return f"{val:.6e}"
    if col in ("runtime_s", "failure_rate"):
        return f"{val:.6f}"
    if isinstance(val, bool):
        return "true" if val else "false"
    return str(val)


def write_csv(path: str, rows) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(c, row[c]) for c in CSV_COLUMNS])


STUDY_NAMES = ("efficiency", "stability", "eigsafety", "normcompare",
               "eigmode")

RTOL_WIDE = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
NU_GRID = (0.1, 1.0, 10.0)
FIXED_H_GRID = (2e-2, 1e-2, 5e-3, 2.5e-3, 1.25e-3)


def _study_points(name: str, base: ExperimentConfig):
    if name == "efficiency":
        methods = [m for m in METHOD_NAMES
                   if base.problem == "fd" or not m.startswith("dirk")]
        return [replace(base, method=m, nu=nu)
                for m in methods for nu in NU_GRID]
    if name == "stability":
        methods = [m for m in METHOD_NAMES
                   if base.problem == "fd" or not m.startswith("dirk")]
        hs = base.fixed_h if base.fixed_h else FIXED_H_GRID
        return [replace(base, method=m, nu=nu, fixed_h=hs, rtol=())
                for m in methods for nu in NU_GRID]
    if name == "eigsafety":
        return [replace(base, eig_mode="power", q_lambda=q, rtol=RTOL_WIDE)
                for q in (1.0, 1.05, 1.1, 1.2)]
    if name == "normcompare":
        return [replace(base, norm=n, rtol=RTOL_WIDE)
                for n in ("component", "cell")]
    if name == "eigmode":
        return [replace(base, eig_mode=m) for m in ("user", "power")]
    raise ValueError(f"unknown study {name!r}; choose from {STUDY_NAMES}")


def study(name: str, base: ExperimentConfig,
          cache_dir: str | None = None):
    """Expands base into the named sweep, runs every point, writes one
    CSV at base.out, and returns the rows."""
    rows = []
    for cfg in _study_points(name, base):
        rows.extend(run_experiment(cfg, cache_dir, study=name, write=False))
    write_csv(base.out, rows)
    return rows
