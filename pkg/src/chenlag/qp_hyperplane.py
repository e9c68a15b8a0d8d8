"""
Quadratic forms maximized on the trace hyperplane ``x_1 + ... + x_n = k``.

The forms built here bound, one normal direction ``J e_r`` at a time, the
``h``-dependent part of the Chen invariant written in a frame adapted to a
minimizing 2-plane.  Their variables are the diagonal entries
``h^r_11, ..., h^r_nn``, whose sum is ``k = n H^r``.

The hyperplane is totally geodesic in Euclidean space, so a stationary point
is a global maximum exactly when the form restricted to the direction space
``{x : sum(x) = 0}`` is negative semidefinite.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "QuadraticForm",
    "KKTSolution",
    "Verdict",
    "build_f1",
    "build_fr",
    "maximize_on_hyperplane",
    "closed_form_max",
    "closed_form_coefficient",
    "projected_hessian_spectrum",
    "hyperplane_basis",
    "grid_max_n3",
]

SPECTRUM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """``f(x) = x^T A x`` with ``A`` symmetric."""

    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {A.shape}")
        A = 0.5 * (A + A.T)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,ij,...j->...", x, self.A, x)


class Verdict(str, Enum):
    MAX_ATTAINED = "max-attained"
    UNBOUNDED = "unbounded"
    DEGENERATE_MAX = "degenerate-max"


@dataclass(frozen=True)
class KKTSolution:
    argmax: np.ndarray
    multiplier: float
    value: float
    projectedSpectrum: np.ndarray
    verdict: Verdict
    diagnostic: str = ""


def _check_n(n: int) -> None:
    if n < 3:
        raise ValueError(f"n must be at least 3, got {n}")


def _cross_terms(n: int) -> np.ndarray:
    """Symmetric matrix of ``(x1 + x2) sum_{j>=3} x_j + sum_{3<=i<j} x_i x_j``."""
    A = np.zeros((n, n))
    A[:2, 2:] = A[2:, :2] = 0.5
    tail = np.full((n - 2, n - 2), 0.5)
    np.fill_diagonal(tail, 0.0)
    A[2:, 2:] = tail
    return A


def build_f1(n: int) -> QuadraticForm:
    """Form bounding the ``r = 1`` (and ``r = 2``) normal direction.

    ``f(x) = (x1 + x2) sum_{j>=3} x_j + sum_{3<=i<j} x_i x_j - sum_{j>=3} x_j**2``
    """
    _check_n(n)
    A = _cross_terms(n)
    A[2:, 2:] -= np.eye(n - 2)
    return QuadraticForm(A)


def build_fr(n: int, r: int) -> QuadraticForm:
    """Form for normal direction ``r`` (1-based); ``r`` in {1, 2} gives :func:`build_f1`.

    For ``r >= 3`` the subtracted squares are ``x_1`` and every ``x_j``,
    ``j >= 2``, except ``x_r``.
    """
    _check_n(n)
    if not 1 <= r <= n:
        raise ValueError(f"r must lie in 1..{n}, got {r}")
    if r <= 2:
        return build_f1(n)
    A = _cross_terms(n)
    squares = np.ones(n)
    squares[r - 1] = 0.0
    A -= np.diag(squares)
    return QuadraticForm(A)


def hyperplane_basis(n: int) -> np.ndarray:
    """Orthonormal basis (columns) of ``{x : sum(x) = 0}``, Helmert construction."""
    B = np.zeros((n, n - 1))
    for j in range(1, n):
        B[:j, j - 1] = 1.0
        B[j, j - 1] = -j
        B[:, j - 1] /= np.sqrt(j * (j + 1))
    return B


def projected_hessian_spectrum(Q: QuadraticForm) -> np.ndarray:
    """Ascending eigenvalues of ``A`` restricted to the hyperplane direction space."""
    B = hyperplane_basis(Q.n)
    return np.linalg.eigvalsh(B.T @ Q.A @ B)


def maximize_on_hyperplane(Q: QuadraticForm, k: float) -> KKTSolution:
    """Maximize ``x^T A x`` subject to ``sum(x) = k`` through the KKT system.

    Stationarity ``2 A x = lambda 1`` together with the constraint gives the
    bordered system ``[[2A, -1], [1^T, 0]] [x; lambda] = [0; k]``.  The point is
    a maximum when the restricted spectrum is at most ``1e-10 * max(1, |A|)``.
    A singular but consistent system means a flat direction; the minimum-norm
    solution is returned with verdict ``degenerate-max``.
    """
    n = Q.n
    A = Q.A
    spectrum = projected_hessian_spectrum(Q)
    tol = SPECTRUM_TOL * max(1.0, np.linalg.norm(A, 2))
    K = np.zeros((n + 1, n + 1))
    K[:n, :n] = 2.0 * A
    K[:n, n] = -1.0
    K[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[n] = k
    if spectrum[-1] > tol:
        return KKTSolution(
            np.full(n, np.nan), np.nan, np.inf, spectrum, Verdict.UNBOUNDED,
            f"restricted form has a positive eigenvalue {spectrum[-1]:.3g}",
        )
    singular = np.min(np.abs(spectrum)) <= tol
    if not singular:
        sol = np.linalg.solve(K, rhs)
        x, lam = sol[:n], sol[n]
        return KKTSolution(x, float(lam), float(x @ A @ x), spectrum, Verdict.MAX_ATTAINED)
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    resid = np.linalg.norm(K @ sol - rhs)
    if resid > 1e-9 * max(1.0, abs(k)):
        return KKTSolution(
            np.full(n, np.nan), np.nan, np.inf, spectrum, Verdict.UNBOUNDED,
            f"no stationary point on the hyperplane (KKT residual {resid:.3g})",
        )
    x, lam = sol[:n], sol[n]
    return KKTSolution(x, float(lam), float(x @ A @ x), spectrum, Verdict.DEGENERATE_MAX)


def closed_form_coefficient(n: int, r: int) -> float:
    """``value / k**2`` at the maximum: ``(n-2)/(2(n+1))`` or ``(2n-3)/(2(2n+3))``."""
    _check_n(n)
    if not 1 <= r <= n:
        raise ValueError(f"r must lie in 1..{n}, got {r}")
    if r <= 2:
        return (n - 2) / (2 * (n + 1))
    return (2 * n - 3) / (2 * (2 * n + 3))


def closed_form_max(n: int, r: int, k: float) -> tuple[float, np.ndarray]:
    """Maximum value and maximizer of ``build_fr(n, r)`` on ``sum(x) = k``.

    For ``r <= 2`` only ``x1 + x2`` is determined; ``x1 = x2`` is returned.
    """
    value = closed_form_coefficient(n, r) * k**2
    if r <= 2:
        a = k / (n + 1)
        x = np.full(n, a)
        x[:2] = 1.5 * a
    else:
        a = k / (4 * n + 6)
        x = np.full(n, 4 * a)
        x[:2] = 3 * a
        x[r - 1] = 12 * a
    return value, x


def grid_max_n3(Q: QuadraticForm, k: float, spacing: float = 1e-3, box: float | None = None) -> tuple[float, np.ndarray]:
    """Brute-force maximum over ``sum(x) = k`` for ``n = 3``.

    ``x1`` and ``x3`` range over a square of half-width ``box`` (default
    ``2|k| + 1``); ``x2`` is eliminated.  A grid at 50 times ``spacing`` locates
    the best cell, then a grid at ``spacing`` covers the neighbourhood of
    that cell.  Only valid for forms that are bounded above on the hyperplane.
    """
    if Q.n != 3:
        raise ValueError("grid oracle is defined for n = 3 only")
    if box is None:
        box = 2.0 * abs(k) + 1.0

    def best_on(x1, x3):
        X1, X3 = np.meshgrid(x1, x3, indexing="ij")
        pts = np.stack([X1, k - X1 - X3, X3], axis=-1)
        vals = Q(pts)
        i = np.unravel_index(np.argmax(vals), vals.shape)
        return float(vals[i]), pts[i]

    coarse = 50 * spacing
    g = np.arange(-box, box + coarse / 2, coarse)
    _, p = best_on(g, g)
    half = 5 * coarse
    fine1 = p[0] + np.arange(-half, half + spacing / 2, spacing)
    fine3 = p[2] + np.arange(-half, half + spacing / 2, spacing)
    return best_on(fine1, fine3)
