"""Matrix-free dominant-eigenvalue estimation by power iteration with
difference-quotient products, plus the eigensafety factor policy."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .state import GridLayout, StateVector, ToleranceSpec, wrms


class PowerIterationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PowerIterConfig:
    tau: float = 0.1
    max_iters: int = 100
    seed: int = 0
    norm_kind: str = "component"

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        if self.max_iters < 2:
            raise ValueError("max_iters must be at least 2")


@dataclass(frozen=True)
class DomEigEstimate:
    lambda_approx: float
    iters: int
    converged: bool


@dataclass(frozen=True)
class EigSafety:
    q_lambda: float = 1.1

    def __post_init__(self):
        if not self.q_lambda > 0:
            raise ValueError("eigensafety factor must be positive")


def min_safe_q(tau: float) -> float:
    """Analytic minimum q compensating a converged-but-underestimated
    eigenvalue: q > 1/(1-tau)."""
    return 1.0 / (1.0 - tau)


def warn_if_unsafe(safety: EigSafety, tau: float) -> bool:
    threshold = min_safe_q(tau)
    if safety.q_lambda <= threshold:
        warnings.warn(
            f"eigensafety factor {safety.q_lambda} is at or below "
            f"1/(1-tau) = {threshold:.4f}; eigenvalue underestimation can "
            f"cause step failures", stacklevel=2)
        return True
    return False


def constant_mode(layout: GridLayout) -> np.ndarray:
    """Unit vector along the globally constant function (the operator
    nullspace direction shared by both discretizations)."""
    e = np.zeros(layout.n_dof)
    e.reshape(layout.n_cells, layout.n_b)[:, 0] = 1.0
    return e / np.linalg.norm(e)


def _dq(rhs, t, f: StateVector, v: np.ndarray, tol: ToleranceSpec,
        norm_kind: str, base: np.ndarray) -> np.ndarray:
    nrm = wrms(norm_kind, StateVector(v, f.layout), f, tol)
    if nrm == 0.0:
        raise ValueError("perturbation direction has zero weighted norm")
    sigma = 1.0 / nrm
    pert = StateVector(f.values + sigma * v, f.layout)
    return (rhs(t, pert).values - base) / sigma


def matvec_dq(rhs, t: float, f: StateVector, v: StateVector,
              tol: ToleranceSpec, norm_kind: str = "component") -> StateVector:
    """Difference-quotient Jacobian product (rhs(t, f + sigma v) -
    rhs(t, f)) / sigma with sigma = 1/||v||_WRMS, weights from f."""
    base = rhs(t, f).values
    return StateVector(_dq(rhs, t, f, v.values, tol, norm_kind, base),
                       f.layout)


def _start_vector(layout: GridLayout, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.uniform(-1.0, 1.0, layout.n_dof)
    e0 = constant_mode(layout)
    # deflate the known zero mode; the operator removes it anyway after
    # one product, but a deflated start keeps the degenerate all-null
    # draw out of the loop
    return v - (v @ e0) * e0


def power_iterate(rhs, t: float, f: StateVector, cfg: PowerIterConfig,
                  tol: ToleranceSpec, v0: np.ndarray | None = None,
                  on_iterate=None) -> DomEigEstimate:
    """Power iteration with Euclidean renormalization and a Rayleigh
    quotient that reuses the update product (one rhs call per iteration
    after the base evaluation).

    Stops when the relative Rayleigh change drops below cfg.tau.  v0
    overrides the seeded start vector; on_iterate(k, lam, v) is invoked
    after each product for diagnostics.
    """
    v = _start_vector(f.layout, cfg.seed) if v0 is None else np.array(
        v0, dtype=float)
    base = rhs(t, f).values
    lam = 0.0
    lam_prev = None
    reseeded = False
    k = 0
    while k < cfg.max_iters:
        k += 1
        w = _dq(rhs, t, f, v, tol, cfg.norm_kind, base)
        if not np.all(np.isfinite(w)):
            raise PowerIterationError(
                "non-finite values in power iteration product")
        wnorm = np.linalg.norm(w)
        if wnorm == 0.0:
            if reseeded:
                raise PowerIterationError(
                    "operator annihilated the start vector twice")
            reseeded = True
            v = _start_vector(f.layout, cfg.seed + 1)
            k -= 1
            continue
        lam = float(np.dot(v, w) / np.dot(v, v))
        if on_iterate is not None:
            on_iterate(k, lam, w / wnorm)
        if lam_prev is not None and lam != 0.0 \
                and abs(lam - lam_prev) / abs(lam) < cfg.tau:
            return DomEigEstimate(lam, k, True)
        v = w / wnorm
        lam_prev = lam
    return DomEigEstimate(lam, cfg.max_iters, False)


def effective_lambda(est: DomEigEstimate, safety: EigSafety) -> float:
    """Magnitude fed to stage-count selection: q_lambda * |lambda|."""
    if not est.converged:
        raise ValueError("eigenvalue estimate did not converge")
    if est.lambda_approx > 1e-10 * (1.0 + abs(est.lambda_approx)):
        raise ValueError(
            f"dominant eigenvalue {est.lambda_approx} has positive real "
            f"part; the integrators assume a negative real spectrum")
    return safety.q_lambda * abs(est.lambda_approx)
