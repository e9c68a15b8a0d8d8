"""
Intrinsic curvature of a Lagrangian submanifold point from ``(h, c)``.

Every tangent 2-plane of a Lagrangian submanifold is totally real, so the
ambient complex space form contributes ``c/4`` to each sectional curvature
and the Gauss equation gives

    K(u, v) = c/4 + sum_r [h^r(u, u) h^r(v, v) - h^r(u, v)**2]

for orthonormal ``u, v``.  The Chen invariant is ``delta = tau - min K``.

The minimum over the Grassmannian ``G(2, n)`` is found by alternating exact
minimization over the orthonormal pair: with ``v`` fixed, ``K`` is the
quadratic form ``u^T M(v) u`` restricted to the unit sphere of ``v``'s
orthogonal complement, so the best ``u`` is an eigenvector.  Each half-sweep
cannot increase ``K`` and the fixed points are exactly the stationary planes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import null_space
from scipy.stats import norm, qmc

from .tensor_core import OrthonormalFrame, SymmetricCubic, TensorError, rotate

__all__ = [
    "OptimizerConfig",
    "TangentPlane",
    "CurvatureSummary",
    "SectionalMinimum",
    "AdaptedFrameError",
    "sectional",
    "scalar_curvature",
    "min_sectional",
    "min_sectional_oracle",
    "chen_delta",
    "adapted_frame",
    "delta_from_adapted_frame",
    "totally_geodesic_delta",
    "riemann_tensor",
]

PLANE_TOL = 1e-10


class AdaptedFrameError(ValueError):
    """The frame passed as adapted does not reproduce the Chen invariant."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Multi-start settings for the minimal sectional curvature search.

    All coordinate planes are always used as starts in addition to
    ``restarts`` random planes drawn from ``seed``.  Every start gets
    ``warmup`` sweeps; then starts that fell into an already occupied basin
    are dropped and the ``keep`` lowest of the rest (all of them when
    ``keep`` is 0) continue until the gradient norm reaches ``grad_tol``
    (relative to ``max(1, |h|^2)``) or ``max_iter`` sweeps in total.
    """

    restarts: int = 64
    grad_tol: float = 1e-9
    max_iter: int = 500
    seed: int = 0
    warmup: int = 2
    keep: int = 8
    chunk: int = 256

    def __post_init__(self):
        if self.restarts < 0 or self.keep < 0 or self.warmup < 0:
            raise ValueError("restarts, keep and warmup must be non-negative")
        if self.max_iter < 1 or self.chunk < 1:
            raise ValueError("max_iter and chunk must be positive")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")


@dataclass(frozen=True, eq=False)
class TangentPlane:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float).reshape(-1)
        v = np.array(self.v, dtype=float).reshape(-1)
        if u.shape != v.shape:
            raise ValueError("plane vectors must have the same length")
        gram = np.array([[u @ u, u @ v], [u @ v, v @ v]])
        if np.max(np.abs(gram - np.eye(2))) > PLANE_TOL:
            raise ValueError("plane vectors must be orthonormal")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def coordinate(cls, n: int, i: int, j: int) -> "TangentPlane":
        """Plane spanned by ``e_i`` and ``e_j`` (1-based)."""
        eye = np.eye(n)
        return cls(eye[i - 1], eye[j - 1])

    def projector(self) -> np.ndarray:
        return np.outer(self.u, self.u) + np.outer(self.v, self.v)


@dataclass(frozen=True)
class CurvatureSummary:
    tau: float
    minK: float
    argmin: TangentPlane
    delta: float
    converged: bool = True


class SectionalMinimum(NamedTuple):
    value: float
    plane: TangentPlane
    converged: bool
    grad_norm: float


def _plane_values(H: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``sum_r [h^r(u,u) h^r(v,v) - h^r(u,v)**2]`` for stacked ``H`` and planes."""
    Hu = np.einsum("...rij,...j->...ri", H, u)
    Hv = np.einsum("...rij,...j->...ri", H, v)
    uu = np.einsum("...ri,...i->...r", Hu, u)
    vv = np.einsum("...ri,...i->...r", Hv, v)
    uv = np.einsum("...ri,...i->...r", Hu, v)
    return np.sum(uu * vv - uv**2, axis=-1)


def sectional(h: SymmetricCubic, c: float, p: TangentPlane) -> float:
    """Sectional curvature of the plane ``p`` from the Gauss equation."""
    if not isinstance(p, TangentPlane):
        p = TangentPlane(*p)
    if p.u.size != h.n:
        raise ValueError(f"plane dimension {p.u.size} does not match n={h.n}")
    return float(c / 4.0 + _plane_values(h.array, p.u, p.v))


def _scalar_h_part(H: np.ndarray) -> np.ndarray:
    D = np.diagonal(H, axis1=-2, axis2=-1)
    prod = 0.5 * (np.sum(D, axis=-1) ** 2 - np.sum(D**2, axis=-1))
    sq = 0.5 * (np.sum(H**2, axis=(-2, -1)) - np.sum(D**2, axis=-1))
    return np.sum(prod - sq, axis=-1)


def scalar_curvature(h: SymmetricCubic, c: float) -> float:
    n = h.n
    return float(n * (n - 1) / 2 * c / 4 + _scalar_h_part(h.array))


def totally_geodesic_delta(n: int, c: float) -> float:
    """``(n-2)(n+1)/2 * c/4``, the Chen invariant at a point with ``h = 0``."""
    return (n - 2) * (n + 1) / 2 * c / 4


# ---------------------------------------------------------------------------
# multi-start descent on G(2, n)


def _form(H: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``M(w) = sum_r (w^T H_r w) H_r - (H_r w)(H_r w)^T`` for stacked problems."""
    a, n = w.shape
    Hw = (H @ w[:, None, :, None])[..., 0]
    wHw = np.sum(Hw * w[:, None, :], axis=-1)
    first = (wHw[:, None, :] @ H.reshape(a, n, n * n)).reshape(a, n, n)
    return first - np.swapaxes(Hw, 1, 2) @ Hw


def _best_partner(M: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Minimize ``x^T M x`` over unit ``x`` orthogonal to ``w``."""
    n = w.shape[1]
    P = np.eye(n) - w[:, :, None] * w[:, None, :]
    A = P @ M @ P
    shift = np.sqrt(np.sum(M**2, axis=(1, 2))) + 1.0
    A = A + shift[:, None, None] * (w[:, :, None] * w[:, None, :])
    vals, vecs = np.linalg.eigh(A)
    return vecs[:, :, 0], vals[:, 0]


def _horizontal_norm_sq(g, u, v):
    g = g - np.sum(g * u, axis=1, keepdims=True) * u
    g = g - np.sum(g * v, axis=1, keepdims=True) * v
    return np.sum(g**2, axis=1)


def _orthonormalize(u, v):
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)
    v = v - np.sum(u * v, axis=-1, keepdims=True) * u
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return u, v


def _start_planes(n: int, opts: OptimizerConfig) -> tuple[np.ndarray, np.ndarray]:
    eye = np.eye(n)
    iu, ju = np.triu_indices(n, k=1)
    su, sv = eye[iu], eye[ju]
    if opts.restarts:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(opts.seed)))
        ru, rv = _orthonormalize(*rng.standard_normal((2, opts.restarts, n)))
        su, sv = np.vstack([su, ru]), np.vstack([sv, rv])
    return su, sv


def _descend(H, u, v, tol, max_iter):
    """Alternating exact minimization for independent problems ``(H[a], u[a], v[a])``.

    Returns the planes, the Riemannian gradient norms and the sweep count
    used by each problem.  Problems leave the active set once their gradient
    norm drops to ``tol``.
    """
    a = H.shape[0]
    grad = np.full(a, np.inf)
    sweeps = np.zeros(a, dtype=int)
    u, v = u.copy(), v.copy()
    active = np.arange(a)
    Ha = H
    Mv = _form(Ha, v)
    for _ in range(max_iter):
        nu, _ = _best_partner(Mv, v[active])
        Mu = _form(Ha, nu)
        nv, _ = _best_partner(Mu, nu)
        nu, nv = _orthonormalize(nu, nv)
        Mv = _form(Ha, nv)
        gu = (Mv @ nu[:, :, None])[..., 0]
        gv = (Mu @ nv[:, :, None])[..., 0]
        g = 2.0 * np.sqrt(_horizontal_norm_sq(gu, nu, nv) + _horizontal_norm_sq(gv, nu, nv))
        u[active], v[active], grad[active] = nu, nv, g
        sweeps[active] += 1
        keep = g > tol[active]
        if not keep.any():
            break
        active, Ha, Mv = active[keep], Ha[keep], Mv[keep]
    return u, v, grad, sweeps


def _survivors(val, u, v, keep, sep=1e-2):
    """Mask of starts worth continuing, per row of ``val`` (shape ``(k, m)``).

    A start is dropped when a lower-valued start already sits within ``sep``
    (projector distance) of it; of the rest, the ``keep`` lowest survive.
    """
    k, m = val.shape
    P = u[..., :, None] * u[..., None, :] + v[..., :, None] * v[..., None, :]
    P = P.reshape(k, m, -1)
    gram = P @ np.swapaxes(P, 1, 2)
    sq = np.diagonal(gram, axis1=1, axis2=2)
    dist = sq[:, :, None] + sq[:, None, :] - 2.0 * gram
    idx = np.arange(m)
    lower = (val[:, None, :] < val[:, :, None]) | (
        (val[:, None, :] == val[:, :, None]) & (idx[None, :] < idx[:, None])
    )
    dup = np.any(lower & (dist < sep**2), axis=2)
    ranked = np.argsort(np.where(dup, np.inf, val), axis=1, kind="stable")
    out = np.zeros((k, m), dtype=bool)
    top = ranked[:, : keep or m]
    rows = np.arange(k)[:, None]
    out[rows, top] = ~dup[rows, top]
    return out


def _select(values, u, v, done):
    """Index of the best start.

    Values within rounding of the minimum count as ties; among ties a
    converged start wins, then the lexicographically smallest projector.
    """
    best = np.min(values)
    ties = np.flatnonzero(values <= best + 1e-12 * max(1.0, abs(best)))
    if done[ties].any():
        ties = ties[done[ties]]
    if ties.size > 1:
        keys = [tuple(np.round((np.outer(u[t], u[t]) + np.outer(v[t], v[t])).ravel(), 12)) for t in ties]
        return int(ties[min(range(len(ties)), key=keys.__getitem__)])
    return int(ties[0])


def minimize_sectional_batch(H: np.ndarray, c: float, opts: OptimizerConfig | None = None):
    """Minimal sectional curvature for stacked dense tensors ``H`` of shape ``(S, n, n, n)``.

    Returns ``(minK, U, V, converged, grad)`` with one row per tensor.
    """
    opts = opts or OptimizerConfig()
    H = np.asarray(H, dtype=float)
    S, n = H.shape[0], H.shape[-1]
    su, sv = _start_planes(n, opts)
    m = su.shape[0]
    minK = np.empty(S)
    U = np.empty((S, n))
    V = np.empty((S, n))
    grad = np.empty(S)
    scale = np.maximum(1.0, np.sum(H**2, axis=(1, 2, 3)))
    per_chunk = max(1, opts.chunk)
    for lo in range(0, S, per_chunk):
        hi = min(S, lo + per_chunk)
        k = hi - lo
        Hs = np.repeat(H[lo:hi], m, axis=0)
        tol = np.repeat(opts.grad_tol * scale[lo:hi], m)
        warm = min(opts.warmup, opts.max_iter)
        u, v, g, used = _descend(Hs, np.tile(su, (k, 1)), np.tile(sv, (k, 1)), tol, warm)
        val = _plane_values(Hs, u, v)
        # starts that landed in the same basin share one continuation
        rest = _survivors(val.reshape(k, m), u.reshape(k, m, n), v.reshape(k, m, n), opts.keep)
        rest = np.flatnonzero(rest.ravel() & (g > tol))
        if rest.size and opts.max_iter > warm:
            u2, v2, g2, _ = _descend(Hs[rest], u[rest], v[rest], tol[rest], opts.max_iter - warm)
            u[rest], v[rest], g[rest] = u2, v2, g2
            val[rest] = _plane_values(Hs[rest], u2, v2)
        done = (g <= tol).reshape(k, m)
        val, u, v, g = (x.reshape((k, m) + x.shape[1:]) for x in (val, u, v, g))
        for s in range(k):
            b = _select(val[s], u[s], v[s], done[s])
            minK[lo + s], U[lo + s], V[lo + s], grad[lo + s] = val[s, b], u[s, b], v[s, b], g[s, b]
    converged = grad <= opts.grad_tol * scale
    return c / 4.0 + minK, U, V, converged, grad


def min_sectional(h: SymmetricCubic, c: float, opts: OptimizerConfig | None = None) -> SectionalMinimum:
    """Minimal sectional curvature over all tangent 2-planes and a minimizing plane.

    The result is never above any coordinate-plane value because coordinate
    planes are among the starts and descent is monotone.  ``converged`` is
    False when the best start did not reach ``grad_tol`` within ``max_iter``
    sweeps; the best value found is still returned.
    """
    val, U, V, conv, grad = minimize_sectional_batch(h.array[None], c, opts)
    return SectionalMinimum(float(val[0]), TangentPlane(U[0], V[0]), bool(conv[0]), float(grad[0]))


# ---------------------------------------------------------------------------
# brute-force oracle


def riemann_tensor(h: SymmetricCubic, c: float) -> np.ndarray:
    """``R[i, j, a, b] = R(e_i, e_j, e_a, e_b)`` from the Gauss equation.

    Convention: ``R(u, v, u, v)`` is the sectional curvature of orthonormal
    ``u, v``.
    """
    H = h.array
    eye = np.eye(h.n)
    amb = c / 4 * (np.einsum("ia,jb->ijab", eye, eye) - np.einsum("ib,ja->ijab", eye, eye))
    return amb + np.einsum("ria,rjb->ijab", H, H) - np.einsum("rib,rja->ijab", H, H)


_EPS = np.zeros((3, 3, 3))
_EPS[0, 1, 2] = _EPS[1, 2, 0] = _EPS[2, 0, 1] = 1.0
_EPS[0, 2, 1] = _EPS[2, 1, 0] = _EPS[1, 0, 2] = -1.0


def _normal_form(R: np.ndarray) -> np.ndarray:
    """In dimension 3, ``K(plane) = w^T G w`` for the plane's unit normal ``w``."""
    return 0.25 * np.einsum("pij,qab,ijab->pq", _EPS, _EPS, R)


def _sphere_grid(resolution: int) -> np.ndarray:
    t = np.linspace(0.0, np.pi, resolution + 1)
    theta, phi = np.meshgrid(t, t, indexing="ij")
    # phi in [0, pi] covers every normal up to sign
    return np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1
    ).reshape(-1, 3)


def _zoom(G: np.ndarray, w: np.ndarray, radius: float) -> float:
    best_w, best = w, float(w @ G @ w)
    s = np.linspace(-1.0, 1.0, 21)
    while radius > 1e-10:
        basis = null_space(best_w[None, :]).T
        ss, tt = np.meshgrid(radius * s, radius * s, indexing="ij")
        cand = best_w + ss.reshape(-1, 1) * basis[0] + tt.reshape(-1, 1) * basis[1]
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        vals = np.einsum("ap,pq,aq->a", cand, G, cand)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, best_w = float(vals[i]), cand[i]
        radius /= 5.0
    return best


def _quasi_random_planes(n: int, budget: int) -> tuple[np.ndarray, np.ndarray]:
    m = int(np.ceil(np.log2(max(budget, 2))))
    pts = qmc.Sobol(d=2 * n, scramble=True, seed=12345).random_base2(m)
    g = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    return _orthonormalize(g[:, :n], g[:, n:])


def min_sectional_oracle(
    h: SymmetricCubic,
    c: float,
    resolution: int = 400,
    refine: bool = True,
    budget: int = 2**16,
) -> float:
    """Brute-force upper bound on the minimal sectional curvature.

    For ``n == 3`` every plane is the orthogonal complement of a unit normal;
    the normals are gridded at ``resolution`` steps per spherical angle (grids
    for ``R`` and ``2R`` are nested).  With ``refine`` the best grid normal is
    polished by successively shrinking local grids, which keeps the result an
    upper bound while removing the grid discretization error.

    For ``n > 3`` all coordinate planes and ``budget`` scrambled-Sobol planes
    are evaluated.  Curvature comes from the full Riemann tensor, not the
    reduced form used by :func:`min_sectional`.
    """
    R = riemann_tensor(h, c)
    if h.n == 3:
        if resolution < 1:
            raise ValueError("resolution must be positive")
        G = _normal_form(R)
        w = _sphere_grid(resolution)
        vals = np.einsum("ap,pq,aq->a", w, G, w)
        i = int(np.argmin(vals))
        best = float(vals[i])
        if refine:
            best = min(best, _zoom(G, w[i], 2 * np.pi / resolution))
        return best
    n = h.n
    eye = np.eye(n)
    iu, ju = np.triu_indices(n, k=1)
    qu, qv = _quasi_random_planes(n, budget)
    u = np.vstack([eye[iu], qu])
    v = np.vstack([eye[ju], qv])
    vals = np.einsum("ijab,si,sj,sa,sb->s", R, u, v, u, v, optimize=True)
    return float(np.min(vals))


# ---------------------------------------------------------------------------
# Chen invariant


def chen_delta(h: SymmetricCubic, c: float, opts: OptimizerConfig | None = None) -> CurvatureSummary:
    tau = scalar_curvature(h, c)
    res = min_sectional(h, c, opts)
    return CurvatureSummary(tau, res.value, res.plane, tau - res.value, res.converged)


def adapted_frame(plane: TangentPlane) -> OrthonormalFrame:
    """Frame whose first two rows span ``plane``."""
    rest = null_space(np.vstack([plane.u, plane.v])).T
    return OrthonormalFrame(np.vstack([plane.u, plane.v, rest]))


def _adapted_delta(Hp: np.ndarray, c: float) -> np.ndarray:
    """Chen invariant written in a frame whose ``e_1, e_2`` span a minimizing plane."""
    n = Hp.shape[-1]
    D = np.diagonal(Hp, axis1=-2, axis2=-1)
    tail = D[..., 2:]
    mixed = np.sum((D[..., 0] + D[..., 1]) * np.sum(tail, axis=-1), axis=-1)
    pairs = 0.5 * np.sum(np.sum(tail, axis=-1) ** 2 - np.sum(tail**2, axis=-1), axis=-1)
    first_row = np.sum(Hp[..., 0, 2:] ** 2, axis=(-2, -1))
    iu, ju = np.triu_indices(n - 1, k=1)
    upper = np.sum(Hp[..., 1:, 1:][..., iu, ju] ** 2, axis=(-2, -1))
    return totally_geodesic_delta(n, c) + mixed + pairs - first_row - upper


def delta_from_adapted_frame(
    h: SymmetricCubic,
    c: float,
    Q,
    delta: float | None = None,
    tol: float = 1e-8,
) -> float:
    """Chen invariant computed in the frame ``Q`` assumed adapted to a minimizing plane.

    If ``delta`` is given, a mismatch beyond ``tol`` means the first two rows
    of ``Q`` do not span a minimizing plane and raises :class:`AdaptedFrameError`.
    """
    frame = Q if isinstance(Q, OrthonormalFrame) else OrthonormalFrame(Q)
    if frame.n != h.n:
        raise TensorError(f"frame dimension {frame.n} does not match tensor dimension {h.n}")
    out = float(_adapted_delta(rotate(h, frame).array, c))
    if delta is not None and abs(out - delta) > tol * max(1.0, abs(delta)):
        raise AdaptedFrameError(
            f"adapted-frame value {out!r} differs from delta {delta!r} by {abs(out - delta):.3g}"
        )
    return out
