"""Piecewise-linear modal DG discretization of variable-coefficient
diffusion along v, interior-penalty form, on a periodic n_v x n_x mesh.

Basis per cell: orthonormal tensor products {1, psi(xi_v), psi(xi_x),
psi(xi_v) psi(xi_x)} with psi(xi) = sqrt(3) xi under the cell-averaged
inner product, so the mass matrix is the identity.  Diffusion acts only
in v: the x-constant family {1, psi_v} and the psi_x family
{psi_x, psi_v psi_x} are hit by identical 1-D operators, one per
(x-cell, x-mode) line.
"""

from __future__ import annotations

import numpy as np

from ..state import GridLayout, StateVector
from .fd import diffusion_coefficient

SQ3 = np.sqrt(3.0)
DENSE_GUARD = 4096
STIFFNESS_QUAD = 2


class DgProblem:
    """Symmetric interior-penalty (SIPG) operator for d/dv(D(v) d/dv).

    Face penalty tau_f = penalty_c * (p+1)^2 * D(v_f) / dv with p = 1.
    penalty_c >= 1 makes the form coercive for linear elements; smaller
    values are accepted so the loss of coercivity can be demonstrated.
    modulation=0 is the uniform-coefficient test fixture.
    """

    def __init__(self, layout: GridLayout, nu: float, penalty_c: float = 2.0,
                 quad_order: int = 8, modulation: float = 0.99):
        if layout.kind != "dg":
            raise ValueError("DgProblem requires a DG layout")
        if penalty_c <= 0:
            raise ValueError("penalty constant must be positive")
        self.layout = layout
        self.nu = nu
        self.penalty_c = penalty_c
        self.quad_order = quad_order
        self.modulation = modulation

        n_v = layout.n_v
        dv = layout.dv
        self.edges = -np.pi + dv * np.arange(n_v + 1)
        # cell integrals of D with a 2-point rule (exact enough for the
        # linear-basis stiffness term; projections use quad_order)
        xq, wq = np.polynomial.legendre.leggauss(STIFFNESS_QUAD)
        centers = 0.5 * (self.edges[:-1] + self.edges[1:])
        vq = centers[:, None] + 0.5 * dv * xq[None, :]
        self.cell_d_integral = 0.5 * dv * np.sum(
            wq * self._d(vq), axis=1)
        self.cell_average_d = self.cell_d_integral / dv
        # face i sits at edges[i+1], between cells i and i+1 (periodic)
        self.face_d = self._d(self.edges[1:])
        self._a1 = self._assemble_line()

    def _d(self, v):
        return diffusion_coefficient(v, self.nu, self.modulation)

    def _assemble_line(self) -> np.ndarray:
        """One-family 1-D SIPG operator on dofs g[2i + b], b in {avg, slope}."""
        n_v = self.layout.n_v
        dv = self.layout.dv
        n = 2 * n_v
        a = np.zeros((n, n))
        tau = self.penalty_c * 4.0 * self.face_d / dv

        for i in range(n_v):
            a[2 * i + 1, 2 * i + 1] += 12.0 / dv**2 * self.cell_d_integral[i]
        for i in range(n_v):
            left, right = i, (i + 1) % n_v
            d = self.face_d[i]
            # traces at the face: u- = g_L0 + sq3 g_L1, u+ = g_R0 - sq3 g_R1
            jump = np.zeros(n)
            jump[2 * left] += 1.0
            jump[2 * left + 1] += SQ3
            jump[2 * right] -= 1.0
            jump[2 * right + 1] += SQ3
            mean = np.zeros(n)
            mean[2 * left + 1] += d * SQ3 / dv
            mean[2 * right + 1] += d * SQ3 / dv
            a -= np.outer(mean, jump) + np.outer(jump, mean)
            a += tau[i] * np.outer(jump, jump)
        return -a / dv

    def line_matrix(self) -> np.ndarray:
        """Dense (2 n_v, 2 n_v) operator of one (x-cell, x-mode) line."""
        return self._a1.copy()

    def rhs(self, t: float, u: StateVector) -> StateVector:
        if u.layout != self.layout:
            raise ValueError("state layout does not match problem layout")
        n_v, n_x = self.layout.n_v, self.layout.n_x
        g = u.values.reshape(n_v, n_x, 2, 2)
        # collect the (i, b) planes of every (k, a) line as matrix rows
        lines = g.transpose(1, 2, 0, 3).reshape(n_x * 2, n_v * 2)
        out = lines @ self._a1.T
        du = out.reshape(n_x, 2, n_v, 2).transpose(2, 0, 1, 3)
        return StateVector(du.reshape(-1), self.layout)

    def initial_condition(self) -> StateVector:
        """L2 projection of the modulated Gaussian onto the v basis;
        x-mode dofs are exactly zero."""
        n_v, n_x = self.layout.n_v, self.layout.n_x
        dv = self.layout.dv
        xq, wq = np.polynomial.legendre.leggauss(self.quad_order)
        centers = 0.5 * (self.edges[:-1] + self.edges[1:])
        vq = centers[:, None] + 0.5 * dv * xq[None, :]
        fq = (1.0 + 0.3 * np.sin(2.0 * vq)) / np.sqrt(5.5 * np.pi) \
            * np.exp(-vq**2 / 5.5)
        g0 = 0.5 * np.sum(wq * fq, axis=1)
        g1 = 0.5 * np.sum(wq * SQ3 * xq * fq, axis=1)
        g = np.zeros((n_v, n_x, 2, 2))
        g[:, :, 0, 0] = g0[:, None]
        g[:, :, 0, 1] = g1[:, None]
        return StateVector(g.reshape(-1), self.layout)

    def jacobian_diagonal(self) -> StateVector:
        """Diagonal of the rhs Jacobian, for Jacobi preconditioning."""
        n_v, n_x = self.layout.n_v, self.layout.n_x
        line_diag = np.diag(self._a1).reshape(n_v, 2)
        g = np.empty((n_v, n_x, 2, 2))
        g[:] = line_diag[:, None, None, :]
        return StateVector(g.reshape(-1), self.layout)

    def lambda_user(self) -> float:
        """A-priori bound on the dominant eigenvalue magnitude.

        (48 penalty_c - 12) is the sharp frozen-coefficient symbol
        maximum of this interior-penalty form for linear elements, so
        the bound is max local diffusivity times that constant over
        dv^2 (the FD analogue has constant 4).
        """
        dmax = max(float(np.max(self.cell_average_d)),
                   float(np.max(self.face_d)))
        return (48.0 * self.penalty_c - 12.0) * dmax / self.layout.dv**2

    def assemble_matrix(self) -> np.ndarray:
        """Dense N x N oracle built column-by-column from rhs."""
        n = self.layout.n_dof
        if n > DENSE_GUARD:
            raise ValueError(
                f"dense assembly limited to N <= {DENSE_GUARD}, got {n}")
        cols = np.empty((n, n))
        e = np.zeros(n)
        for j in range(n):
            e[j] = 1.0
            cols[:, j] = self.rhs(0.0, StateVector(e.copy(), self.layout)).values
            e[j] = 0.0
        return cols
