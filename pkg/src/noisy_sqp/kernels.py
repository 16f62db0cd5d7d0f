"""Dense linear-algebra kernels for the SQP step.

With a scaled-identity Hessian model beta*I the quadratic subproblem

    min_d  0.5*beta*||d||^2 + g'd   s.t.  c + J d = 0

has the closed-form solution d = v + u with a normal component
v = -J'(JJ')^{-1} c restoring linearized feasibility and a tangential
component u = -(1/beta) P g, where P = I - J'(JJ')^{-1} J projects onto
the null space of J.  All solves go through a Cholesky factorization of
the small Gram matrix JJ' (SVD fallback); the n-by-n projector is never
formed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

Vector = np.ndarray
Matrix = np.ndarray

# Relative rank threshold: J counts as rank deficient when
# sigma_min <= RANK_TOL * sigma_max.
RANK_TOL = 1e-10


class SingularJacobianError(RuntimeError):
    """Constraint Jacobian is (numerically) rank deficient."""

    def __init__(self, sigma_min: float):
        super().__init__(f"Jacobian numerically rank deficient (sigma_min={sigma_min:.3e})")
        self.sigma_min = float(sigma_min)


@dataclass(frozen=True)
class StepResult:
    """Step d = v + u, its orthogonal components, and the multiplier estimate."""

    d: Vector
    v: Vector
    u: Vector
    lambda_hat: Vector
    beta: float


def min_singular_value(J: Matrix) -> float:
    """Smallest singular value of J (0 for rank-deficient J)."""
    return float(np.linalg.svd(np.asarray(J, dtype=float), compute_uv=False)[-1])


def _gram_solver(J: Matrix, rank_tol: float) -> Callable[[Vector], Vector]:
    """Return a solver for (JJ')y = b, guarding against rank deficiency."""
    s = np.linalg.svd(J, compute_uv=False)
    if s[-1] <= rank_tol * s[0]:
        raise SingularJacobianError(s[-1])
    gram = J @ J.T
    try:
        cho = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
        return lambda b: scipy.linalg.cho_solve(cho, b, check_finite=False)
    except scipy.linalg.LinAlgError:
        # Should not trigger past the rank gate; kept for numerical safety.
        gram_inv = np.linalg.pinv(gram)
        return lambda b: gram_inv @ b


def least_squares_multiplier(J: Matrix, g: Vector, rank_tol: float = RANK_TOL) -> Vector:
    """Least-squares multiplier estimate (JJ')^{-1} J g.

    Raises SingularJacobianError when J is numerically rank deficient.
    """
    J = np.asarray(J, dtype=float)
    g = np.asarray(g, dtype=float)
    solve = _gram_solver(J, rank_tol)
    return solve(J @ g)


def project_tangent(J: Matrix, w: Vector, rank_tol: float = RANK_TOL) -> Vector:
    """Project w onto the null space of J: w - J'(JJ')^{-1} J w."""
    J = np.asarray(J, dtype=float)
    w = np.asarray(w, dtype=float)
    solve = _gram_solver(J, rank_tol)
    return w - J.T @ solve(J @ w)


def solve_sqp_step(
    J: Matrix, c: Vector, g: Vector, beta: float, rank_tol: float = RANK_TOL
) -> StepResult:
    """Solve the scaled-identity QP subproblem in closed form.

    Parameters
    ----------
    J : array, shape (m, n)
        Constraint Jacobian, full row rank.
    c : array, shape (m,)
        Constraint values; the step satisfies J d = -c.
    g : array, shape (n,)
        Objective gradient.
    beta : float
        Positive curvature of the Hessian model beta*I.

    Returns
    -------
    StepResult with d = v + u, <u, v> = 0, and the multiplier estimate
    lambda_hat = (JJ')^{-1} J g.
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    J = np.asarray(J, dtype=float)
    c = np.asarray(c, dtype=float)
    g = np.asarray(g, dtype=float)
    solve = _gram_solver(J, rank_tol)
    lambda_hat = solve(J @ g)
    v = -J.T @ solve(c)
    u = -(g - J.T @ lambda_hat) / beta
    return StepResult(d=v + u, v=v, u=u, lambda_hat=lambda_hat, beta=float(beta))
