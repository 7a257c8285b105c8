"""Adaptive and fixed-step integration drivers.

The adaptive driver accepts a step when the WRMS-measured error estimate
is at most one, controls the step size with an integral controller using
the order-aware exponent 1/(p+1), clamps steps to land exactly on sample
times, and tracks work counters. The fixed driver marches at constant h
and flags blow-up instead of failing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .domeig import (
    EigSafety,
    PowerIterConfig,
    effective_lambda,
    power_iterate,
    warn_if_unsafe,
)
from .errors import IntegrationAbort, StepFailure
from .integrators.dirk import NewtonConfig, dirk_step, dirk_tableau
from .integrators.ssp import ssp_scheme, ssp_step
from .integrators.sts import (
    hermite_error,
    rkc2_coefficients,
    rkl2_coefficients,
    stage_count,
    sts_step,
)
from .state import StateVector, ToleranceSpec, wrms

BLOWUP_FACTOR = 1e10
MAX_CONSECUTIVE_REJECTIONS = 10


@dataclass(frozen=True)
class ControllerConfig:
    safety: float = 0.9
    growth: float = 1.5
    growth_first: float = 20.0
    shrink: float = 0.1
    order: int | None = None
    h0: float | None = None
    h_min: float | None = None

    def __post_init__(self):
        if not 0.0 < self.safety <= 1.0:
            raise ValueError("safety must lie in (0, 1]")
        if not 0.0 < self.shrink < 1.0 < self.growth:
            raise ValueError("need 0 < shrink < 1 < growth")
        if self.growth_first < self.growth:
            raise ValueError("first-step growth cap below the steady cap")


@dataclass
class RunStats:
    attempted: int = 0
    accepted: int = 0
    rejected: int = 0
    rhs_evals: int = 0
    stages_total: int = 0
    domeig_calls: int = 0
    domeig_iters: int = 0
    wall_clock: float = 0.0

    @property
    def failure_rate(self) -> float:
        return self.rejected / self.attempted if self.attempted else 0.0


@dataclass(frozen=True)
class StepRecord:
    t: float
    h: float
    e_norm: float
    accepted: bool
    stages: int
    lam_eff: float

    def format_line(self) -> str:
        flag = "acc" if self.accepted else "rej"
        return (f"t={self.t:.9e} h={self.h:.6e} E={self.e_norm:.6e} "
                f"{flag} s={self.stages} lam={self.lam_eff:.6e}")


@dataclass(frozen=True)
class EigPolicy:
    mode: str = "power"
    q_lambda: float = 1.1
    refresh: str = "periodic"
    period: int = 25
    power: PowerIterConfig = field(default_factory=PowerIterConfig)

    def __post_init__(self):
        if self.mode not in ("power", "user"):
            raise ValueError(f"unknown eig mode {self.mode!r}")
        if self.refresh not in ("once", "periodic", "on_failure"):
            raise ValueError(f"unknown refresh policy {self.refresh!r}")
        if self.period < 1:
            raise ValueError("refresh period must be at least 1")
        if self.q_lambda <= 0:
            raise ValueError("q_lambda must be positive")


def refresh_domeig(problem, rhs, t, f, eig: EigPolicy, tol: ToleranceSpec,
                   stats: RunStats) -> float:
    """Current effective spectral bound q_lambda * |lambda|."""
    if eig.mode == "user":
        return eig.q_lambda * problem.lambda_user()
    est = power_iterate(rhs, t, f, eig.power, tol)
    stats.domeig_calls += 1
    stats.domeig_iters += est.iters
    return effective_lambda(est, EigSafety(eig.q_lambda))


class _StsMethod:
    family = "sts"
    order = 2

    def __init__(self, name: str, sts_family: str):
        self.name = name
        self.sts_family = sts_family
        self._coeffs = {}

    def stages_for(self, h: float, lam_eff: float) -> int:
        return stage_count(h, lam_eff, self.sts_family)

    def step(self, rhs, t, f, h, s):
        coeffs = self._coeffs.get(s)
        if coeffs is None:
            build = (rkl2_coefficients if self.sts_family == "rkl2"
                     else rkc2_coefficients)
            coeffs = self._coeffs[s] = build(s)
        f_next, g_n, g_next = sts_step(rhs, t, f, h, coeffs)
        return f_next, hermite_error(f, f_next, g_n, g_next, h)


class _SspMethod:
    family = "ssp"

    def __init__(self, name: str, order: int):
        self.name = name
        self.scheme = ssp_scheme(order)
        self.order = order

    def stages_for(self, h, lam_eff):
        return self.scheme.s

    def step(self, rhs, t, f, h, s):
        return ssp_step(rhs, t, f, h, self.scheme)


class _DirkMethod:
    family = "dirk"

    def __init__(self, name: str, order: int, precond_diag: StateVector,
                 newton: NewtonConfig, tol: ToleranceSpec, norm_kind: str):
        self.name = name
        self.scheme = dirk_tableau(order)
        self.order = order
        self.precond_diag = precond_diag
        self.newton = newton
        self.tol = tol
        self.norm_kind = norm_kind

    def stages_for(self, h, lam_eff):
        return self.scheme.s

    def step(self, rhs, t, f, h, s):
        return dirk_step(rhs, t, f, h, self.scheme, self.newton,
                         self.precond_diag, self.tol, self.norm_kind)


METHOD_NAMES = ("rkl", "rkc", "ssp2", "ssp3", "ssp4", "dirk2", "dirk3")


def make_method(name: str, problem, tol: ToleranceSpec,
                norm_kind: str = "component",
                newton: NewtonConfig | None = None):
    if name == "rkl":
        return _StsMethod(name, "rkl2")
    if name == "rkc":
        return _StsMethod(name, "rkc2")
    if name in ("ssp2", "ssp3", "ssp4"):
        return _SspMethod(name, int(name[-1]))
    if name in ("dirk2", "dirk3"):
        if problem.layout.kind != "fd":
            raise ValueError("DIRK baselines are wired to the "
                             "finite-difference problem only")
        return _DirkMethod(name, int(name[-1]), problem.jacobian_diagonal(),
                           newton or NewtonConfig(), tol, norm_kind)
    raise ValueError(f"unknown method {name!r}; choose from {METHOD_NAMES}")


class _SampleTracker:
    """Walks sorted sample times, clamping steps to land on each exactly."""

    def __init__(self, sample_times, t_f: float):
        times = list(sample_times)
        if any(times[i] > times[i + 1] for i in range(len(times) - 1)):
            raise ValueError("sample times must be sorted")
        if times and (times[0] < 0.0 or times[-1] > t_f):
            raise ValueError("sample times must lie within [0, t_f]")
        self.times = times
        self.t_f = t_f
        self.idx = 0
        self.samples = []

    def record_initial(self, f: StateVector):
        while self.idx < len(self.times) and self.times[self.idx] <= 0.0:
            self.samples.append(f)
            self.idx += 1

    def next_stop(self, t: float) -> float:
        if self.idx < len(self.times):
            return min(self.times[self.idx], self.t_f)
        return self.t_f

    def record_if_hit(self, t: float, f: StateVector):
        while self.idx < len(self.times) and self.times[self.idx] <= t:
            self.samples.append(f)
            self.idx += 1


class _EigTracker:
    """Applies the refresh policy; lam_eff is None for non-STS methods."""

    def __init__(self, problem, rhs, eig: EigPolicy, tol, stats, active):
        self.problem = problem
        self.rhs = rhs
        self.eig = eig
        self.tol = tol
        self.stats = stats
        self.active = active
        self.lam_eff = None
        self.since_refresh = 0
        if active and eig.mode == "power":
            warn_if_unsafe(EigSafety(eig.q_lambda), eig.power.tau)

    def current(self, t, f) -> float | None:
        if not self.active:
            return None
        if self.lam_eff is None:
            self.lam_eff = refresh_domeig(self.problem, self.rhs, t, f,
                                          self.eig, self.tol, self.stats)
        return self.lam_eff

    def after_accept(self, t, f):
        if not self.active or self.eig.refresh == "once":
            return
        self.since_refresh += 1
        if self.since_refresh >= self.eig.period:
            self.lam_eff = refresh_domeig(self.problem, self.rhs, t, f,
                                          self.eig, self.tol, self.stats)
            self.since_refresh = 0

    def after_reject(self, t, f):
        if self.active and self.eig.refresh == "on_failure":
            self.lam_eff = refresh_domeig(self.problem, self.rhs, t, f,
                                          self.eig, self.tol, self.stats)
            self.since_refresh = 0


def _counted_rhs(problem, stats: RunStats):
    def rhs(t, f):
        stats.rhs_evals += 1
        return problem.rhs(t, f)

    return rhs


def advance_adaptive(problem, method, tol: ToleranceSpec,
                     norm_kind: str = "component",
                     eig: EigPolicy = EigPolicy(),
                     controller: ControllerConfig = ControllerConfig(),
                     t_f: float = 1.0, sample_times=(),
                     step_log=None):
    """Integrate to t_f with error-controlled steps; returns
    (samples, stats)."""
    if t_f <= 0.0:
        raise ValueError("t_f must be positive")
    stats = RunStats()
    start = time.perf_counter()
    rhs = _counted_rhs(problem, stats)
    f = problem.initial_condition()
    tracker = _SampleTracker(sample_times, t_f)
    tracker.record_initial(f)
    eigs = _EigTracker(problem, rhs, eig, tol, stats,
                       active=method.family == "sts")
    p = controller.order if controller.order is not None else method.order
    expo = -1.0 / (p + 1.0)
    h_ctrl = controller.h0 if controller.h0 is not None else 1e-4 * t_f
    h_min = controller.h_min if controller.h_min is not None else 1e-12 * t_f
    t = 0.0
    consecutive_rejects = 0
    first_proposal = True

    while t < t_f * (1.0 - 1e-14) or tracker.idx < len(tracker.times):
        if h_ctrl < h_min:
            raise IntegrationAbort(
                f"step size {h_ctrl:.3e} fell below h_min {h_min:.3e} at "
                f"t={t:.6e} after {stats.attempted} attempts")
        stop = tracker.next_stop(t)
        clamped = h_ctrl >= stop - t
        h_try = min(h_ctrl, stop - t)
        lam_eff = eigs.current(t, f)
        s = method.stages_for(h_try, lam_eff)
        stats.attempted += 1
        stats.stages_total += s
        try:
            f_trial, err = method.step(rhs, t, f, h_try, s)
            e_norm = float(wrms(norm_kind, err, f, tol))
        except StepFailure:
            f_trial, e_norm = None, float("inf")
        accepted = e_norm <= 1.0
        if step_log is not None:
            step_log.append(StepRecord(t, h_try, e_norm, accepted, s,
                                       lam_eff if lam_eff is not None
                                       else 0.0))
        if accepted:
            t = stop if clamped else t + h_try
            f = f_trial
            stats.accepted += 1
            consecutive_rejects = 0
            tracker.record_if_hit(t, f)
            eigs.after_accept(t, f)
            cap = controller.growth_first if first_proposal \
                else controller.growth
            raw = (controller.safety * e_norm**expo if e_norm > 0.0
                   else float("inf"))
            if clamped:
                # the shortened landing step says nothing about growing
                # the working step; only shrink if its error demands it
                h_ctrl = min(h_ctrl,
                             h_try * max(raw, controller.shrink))
            else:
                h_ctrl = h_try * min(max(raw, controller.shrink), cap)
        else:
            stats.rejected += 1
            consecutive_rejects += 1
            if consecutive_rejects >= MAX_CONSECUTIVE_REJECTIONS:
                raise IntegrationAbort(
                    f"{consecutive_rejects} consecutive rejections at "
                    f"t={t:.6e} (h={h_try:.3e}, E={e_norm:.3e})")
            if np.isfinite(e_norm):
                factor = max(controller.shrink,
                             controller.safety * e_norm**expo)
            else:
                factor = controller.shrink
            h_ctrl = h_try * factor
            eigs.after_reject(t, f)
        first_proposal = False

    stats.wall_clock = time.perf_counter() - start
    return tracker.samples, stats


def advance_fixed(problem, method, h: float, t_f: float, sample_times=(),
                  tol: ToleranceSpec = ToleranceSpec(1e-6),
                  eig: EigPolicy = EigPolicy(refresh="once"),
                  step_log=None):
    """March at constant h; returns (samples, stats, blew_up). Blow-up
    (non-finite values or growth past BLOWUP_FACTOR times the initial
    max-norm) stops the run early instead of raising."""
    if h <= 0.0:
        raise ValueError("h must be positive")
    stats = RunStats()
    start = time.perf_counter()
    rhs = _counted_rhs(problem, stats)
    f = problem.initial_condition()
    limit = BLOWUP_FACTOR * float(np.max(np.abs(f.values)))
    tracker = _SampleTracker(sample_times, t_f)
    tracker.record_initial(f)
    eigs = _EigTracker(problem, rhs, eig, tol, stats,
                       active=method.family == "sts")
    t = 0.0
    blew_up = False

    while t < t_f * (1.0 - 1e-14) or tracker.idx < len(tracker.times):
        stop = tracker.next_stop(t)
        clamped = h >= stop - t
        h_try = min(h, stop - t)
        lam_eff = eigs.current(t, f)
        s = method.stages_for(h_try, lam_eff)
        stats.attempted += 1
        stats.stages_total += s
        try:
            f_trial, _ = method.step(rhs, t, f, h_try, s)
        except StepFailure:
            blew_up = True
            break
        if (not np.all(np.isfinite(f_trial.values))
                or np.max(np.abs(f_trial.values)) > limit):
            blew_up = True
            break
        t = stop if clamped else t + h_try
        f = f_trial
        stats.accepted += 1
        tracker.record_if_hit(t, f)
        eigs.after_accept(t, f)
        if step_log is not None:
            step_log.append(StepRecord(t, h_try, 0.0, True, s,
                                       lam_eff if lam_eff is not None
                                       else 0.0))

    stats.wall_clock = time.perf_counter() - start
    return tracker.samples, stats, blew_up
