"""
Classic and improved upper bounds on the Chen invariant, and their checks.

For a Lagrangian submanifold of real dimension ``n >= 3`` in a complex space
form of holomorphic sectional curvature ``c``:

    classic   delta <= (n-2)/2 * (n^2/(n-1) |H|^2 + (n+1) c/4)
    improved  delta <= (n-2)(n+1)/2 * c/4 + n^2/2 * (2n-3)/(2n+3) |H|^2

Both bounds share the ``c`` term, so their difference is a positive multiple
of ``|H|^2``; equality in the classic bound therefore forces ``H = 0``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import curvature as _curv
from .curvature import OptimizerConfig, adapted_frame, chen_delta, min_sectional_oracle, totally_geodesic_delta
from .qp_hyperplane import build_fr
from .tensor_core import (
    SymmetricCubic,
    dense_from_free,
    free_count,
    mean_curvature,
    rotate,
    sample_free,
)

__all__ = [
    "BoundReport",
    "BatchSummary",
    "SearchConfig",
    "SearchResult",
    "AuditRecord",
    "ProbeReport",
    "classic_bound",
    "improved_bound",
    "classic_rhs",
    "improved_rhs",
    "gap_coefficient",
    "verify_point",
    "batch_verify",
    "adversarial_search",
    "search_objective",
    "proof_step_audit",
    "audit_batch",
    "minimality_probe",
    "coefficient_comparison",
]

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8


def classic_rhs(n: int, c: float, norm_sq):
    return (n - 2) / 2 * (n**2 / (n - 1) * norm_sq + (n + 1) * c / 4)


def improved_rhs(n: int, c: float, norm_sq):
    return totally_geodesic_delta(n, c) + n**2 / 2 * (2 * n - 3) / (2 * n + 3) * norm_sq


def gap_coefficient(n: int) -> Fraction:
    """Exact ``(classic - improved) / |H|^2 = n^2 (4n - 9) / (2 (n-1)(2n+3))``."""
    return Fraction(n**2, 2) * (Fraction(n - 2, n - 1) - Fraction(2 * n - 3, 2 * n + 3))


def classic_bound(h: SymmetricCubic, c: float) -> float:
    return float(classic_rhs(h.n, c, mean_curvature(h).normSq))


def improved_bound(h: SymmetricCubic, c: float) -> float:
    return float(improved_rhs(h.n, c, mean_curvature(h).normSq))


@dataclass(frozen=True)
class BoundReport:
    n: int
    c: float
    delta: float
    classicRHS: float
    improvedRHS: float
    meanCurvNormSq: float
    classicMargin: float
    improvedMargin: float
    classicPass: bool
    improvedPass: bool
    converged: bool = True
    oracleChecked: bool = False

    @property
    def passed(self) -> tuple[bool, bool]:
        return self.classicPass, self.improvedPass


def _report(n, c, delta, norm_sq, tol, converged=True, oracle=False) -> BoundReport:
    crhs = float(classic_rhs(n, c, norm_sq))
    irhs = float(improved_rhs(n, c, norm_sq))
    cm, im = crhs - float(delta), irhs - float(delta)
    return BoundReport(
        n, float(c), float(delta), crhs, irhs, float(norm_sq), cm, im,
        bool(cm >= -tol), bool(im >= -tol), bool(converged), bool(oracle),
    )


def _oracle_delta(h, c, tau, minK, resolution=400):
    """Lower the minimal curvature with the grid oracle; only ever raises delta."""
    return tau - min(minK, min_sectional_oracle(h, c, resolution))


def verify_point(
    h: SymmetricCubic,
    c: float,
    tol: float = DEFAULT_TOL,
    opts: OptimizerConfig | None = None,
) -> BoundReport:
    """Check both bounds at one point.

    For ``n = 3`` a margin below ``10 * tol`` triggers the sphere-grid oracle,
    whose minimal curvature replaces the optimizer's when lower.
    """
    summary = chen_delta(h, c, opts)
    norm_sq = mean_curvature(h).normSq
    rep = _report(h.n, c, summary.delta, norm_sq, tol, summary.converged)
    if h.n == 3 and rep.improvedMargin < 10 * tol:
        delta = _oracle_delta(h, c, summary.tau, summary.minK)
        rep = _report(h.n, c, delta, norm_sq, tol, summary.converged, oracle=True)
    if not summary.converged:
        log.warning("minimal sectional curvature did not converge; report flagged")
    return rep


@dataclass
class BatchSummary:
    n: int
    c: float
    count: int
    sigma: float
    seed: int
    tol: float
    violations: int
    classicViolations: int
    minMargin: float
    worstIndex: int
    minClassicMargin: float
    nonConverged: int
    histogram: tuple[list[int], list[float]]
    records: list[BoundReport] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        out = asdict(self)
        out.pop("records")
        out["histogram"] = {"counts": self.histogram[0], "edges": self.histogram[1]}
        return out


def _batch_chunk(n, c, seed, sigma, indices, tol, opts):
    H = dense_from_free(sample_free(n, seed, sigma, indices), n)
    tau = n * (n - 1) / 2 * c / 4 + _curv._scalar_h_part(H)
    minK, U, V, conv, _ = _curv.minimize_sectional_batch(H, c, opts)
    delta = tau - minK
    norm_sq = np.sum((np.trace(H, axis1=2, axis2=3) / n) ** 2, axis=1)
    out = []
    for s in range(len(indices)):
        rep = _report(n, c, delta[s], norm_sq[s], tol, conv[s])
        if n == 3 and rep.improvedMargin < 10 * tol:
            h = SymmetricCubic(n, sample_free(n, seed, sigma, [indices[s]])[0])
            d = _oracle_delta(h, c, tau[s], minK[s])
            rep = _report(n, c, d, norm_sq[s], tol, conv[s], oracle=True)
        out.append(rep)
    return out


def batch_verify(
    n: int,
    c: float,
    count: int,
    sigma: float = 1.0,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    opts: OptimizerConfig | None = None,
    workers: int = 1,
    chunk: int = 500,
    keep_records: bool = True,
) -> BatchSummary:
    """Verify both bounds on ``count`` sampled tensors.

    Sample ``i`` comes from its own substream of ``seed``; chunks may be
    processed by several threads and are reassembled in sample order, so
    the summary does not depend on ``workers``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if n < 3:
        raise ValueError("n must be at least 3")
    opts = opts or OptimizerConfig()
    bounds = [(lo, min(count, lo + chunk)) for lo in range(0, count, chunk)]
    jobs = [(n, c, seed, sigma, list(range(lo, hi)), tol, opts) for lo, hi in bounds]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _batch_chunk(*a), jobs))
    else:
        parts = [_batch_chunk(*a) for a in jobs]
    records = [r for part in parts for r in part]
    margins = np.array([r.improvedMargin for r in records])
    cmargins = np.array([r.classicMargin for r in records])
    counts, edges = np.histogram(margins, bins=20)
    return BatchSummary(
        n=n, c=float(c), count=count, sigma=float(sigma), seed=seed, tol=tol,
        violations=int(sum(not r.improvedPass for r in records)),
        classicViolations=int(sum(not r.classicPass for r in records)),
        minMargin=float(margins.min()),
        worstIndex=int(np.argmin(margins)),
        minClassicMargin=float(cmargins.min()),
        nonConverged=int(sum(not r.converged for r in records)),
        histogram=(counts.tolist(), edges.tolist()),
        records=records if keep_records else [],
    )


# ---------------------------------------------------------------------------
# adversarial search and minimality probe


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 100
    steps: int = 20
    stepSize: float = 0.2
    seed: int = 0
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.restarts < 1 or self.steps < 0 or not self.stepSize > 0 or not self.tol > 0:
            raise ValueError("restarts, stepSize and tol must be positive, steps non-negative")


# Inner minimal-curvature solve during search: fewer random starts, same tolerance.
SEARCH_OPTS = OptimizerConfig(restarts=8, keep=4)


def _deltas(F, n, c, opts):
    H = dense_from_free(F, n)
    tau = n * (n - 1) / 2 * c / 4 + _curv._scalar_h_part(H)
    minK = _curv.minimize_sectional_batch(H, c, opts)[0]
    norm_sq = np.sum((np.trace(H, axis1=2, axis2=3) / n) ** 2, axis=1)
    return tau - minK, norm_sq


def search_objective(F, n: int, c: float, opts: OptimizerConfig | None = None) -> np.ndarray:
    """``delta - improvedRHS`` for rows of free entries ``F``; positive means a violation."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    delta, norm_sq = _deltas(F, n, c, opts or SEARCH_OPTS)
    return delta - improved_rhs(n, c, norm_sq)


def _fd_ascent(F, objective, steps, step_size, project):
    """Projected forward-difference ascent, one step size per row.

    A step that does not improve a row's objective is rejected and that
    row's step size halves; accepted steps grow it by 20 percent.
    """
    R, m = F.shape
    F = project(F)
    val = objective(F)
    eta = np.full(R, step_size)
    for _ in range(steps):
        scale = np.maximum(np.linalg.norm(F, axis=1), 1e-12)
        eps = 1e-6 * scale
        probes = F[:, None, :] + eps[:, None, None] * np.eye(m)[None]
        pv = objective(probes.reshape(R * m, m)).reshape(R, m)
        grad = (pv - val[:, None]) / eps[:, None]
        gnorm = np.linalg.norm(grad, axis=1)
        move = np.where(gnorm[:, None] > 0, grad / np.maximum(gnorm, 1e-300)[:, None], 0.0)
        cand = project(F + (eta * scale)[:, None] * move)
        cval = objective(cand)
        better = cval > val
        F[better], val[better] = cand[better], cval[better]
        eta = np.where(better, eta * 1.2, eta * 0.5)
    return F, val


class SearchResult(NamedTuple):
    margin: float
    h: SymmetricCubic
    margins: np.ndarray


def adversarial_search(
    n: int,
    c: float,
    cfg: SearchConfig | None = None,
    opts: OptimizerConfig | None = None,
    starts=None,
) -> SearchResult:
    """Look for tensors where ``delta`` exceeds the improved bound.

    Each restart starts from a Gaussian tensor rescaled by a log-uniform
    factor in ``[1e-2, 10]`` and ascends ``delta - improvedRHS`` on the sphere
    of its initial radius (the objective is quadratic in ``h`` up to the
    constant ``c`` terms, so a fixed radius keeps the search bounded).
    ``starts`` (rows of free entries) replaces the random starts.

    Returns the largest objective value found (expected ``<= cfg.tol``) and
    its tensor.
    """
    cfg = cfg or SearchConfig()
    opts = opts or SEARCH_OPTS
    m = free_count(n)
    if starts is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
        F = rng.standard_normal((cfg.restarts, m))
        F *= 10.0 ** rng.uniform(-2.0, 1.0, size=(cfg.restarts, 1))
    else:
        F = np.atleast_2d(np.asarray(starts, dtype=float)).copy()
    radius = np.linalg.norm(F, axis=1)

    def project(X):
        norms = np.linalg.norm(X, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        return X * np.where(norms > 0, radius / safe, 0.0)[:, None]

    F, val = _fd_ascent(F, lambda X: search_objective(X, n, c, opts), cfg.steps, cfg.stepSize, project)
    best = int(np.argmax(val))
    if val[best] > cfg.tol:
        log.warning("improved bound exceeded by %.3g", val[best])
    return SearchResult(float(val[best]), SymmetricCubic(n, F[best]), val)


@dataclass(frozen=True)
class ProbeReport:
    found: bool
    classicMargin: float
    meanCurvNormSq: float
    h: SymmetricCubic
    marginThreshold: float
    normThreshold: float


def minimality_probe(
    n: int,
    c: float,
    cfg: SearchConfig | None = None,
    opts: OptimizerConfig | None = None,
) -> ProbeReport:
    """Search for equality in the classic bound at a point with ``H != 0``.

    Candidates are kept on the set ``|H|^2 = 10 * normThreshold`` while the
    classic margin is driven down; a tensor with margin at most ``cfg.tol``
    and ``|H|^2 >= 1000 * cfg.tol`` would contradict the minimality corollary.
    """
    cfg = cfg or SearchConfig(restarts=200, steps=20, tol=1e-6)
    opts = opts or SEARCH_OPTS
    norm_thr = 1e3 * cfg.tol
    target = 10.0 * norm_thr
    m = free_count(n)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    F = rng.standard_normal((cfg.restarts, m))
    # trace part of each h is H; traceless directions are left free
    F *= 10.0 ** rng.uniform(-1.0, 1.0, size=(cfg.restarts, 1))

    def project(X):
        H = dense_from_free(X, n)
        ns = np.sum((np.trace(H, axis1=2, axis2=3) / n) ** 2, axis=1)
        return X * np.sqrt(target / np.maximum(ns, 1e-300))[:, None]

    def neg_margin(X):
        delta, ns = _deltas(X, n, c, opts)
        return -(classic_rhs(n, c, ns) - delta)

    F, val = _fd_ascent(F, neg_margin, cfg.steps, cfg.stepSize, project)
    best = int(np.argmax(val))
    h = SymmetricCubic(n, F[best])
    ns = mean_curvature(h).normSq
    margin = float(-val[best])
    found = abs(margin) <= cfg.tol and ns >= norm_thr
    if found:
        log.warning("classic equality with |H|^2 = %.3g found", ns)
    return ProbeReport(bool(found), margin, float(ns), h, cfg.tol, norm_thr)


# ---------------------------------------------------------------------------
# proof-step audit


@dataclass(frozen=True)
class AuditRecord:
    delta: float
    adaptedDelta: float
    majorant: float
    formSum: float
    identityOk: bool
    majorizationOk: bool
    formsOk: bool
    converged: bool = True

    @property
    def ok(self) -> bool:
        return self.identityOk and self.majorizationOk and self.formsOk


def _majorant(Hp: np.ndarray, c: float) -> np.ndarray:
    """Upper bound obtained by keeping only the squares fixed by index symmetry."""
    n = Hp.shape[-1]
    D = np.diagonal(Hp, axis1=-2, axis2=-1)
    tail = D[..., 2:]
    mixed = np.sum((D[..., 0] + D[..., 1]) * np.sum(tail, axis=-1), axis=-1)
    pairs = 0.5 * np.sum(np.sum(tail, axis=-1) ** 2 - np.sum(tail**2, axis=-1), axis=-1)
    j = np.arange(2, n)
    drop = np.sum(Hp[..., 0, 0, j] ** 2, axis=-1) + np.sum(Hp[..., j, 0, j] ** 2, axis=-1)
    iu, ju = np.triu_indices(n, k=1)
    sel = iu >= 1
    iu, ju = iu[sel], ju[sel]
    drop = drop + np.sum(Hp[..., iu, iu, ju] ** 2, axis=-1) + np.sum(Hp[..., ju, iu, ju] ** 2, axis=-1)
    return totally_geodesic_delta(n, c) + mixed + pairs - drop


def _form_sum(Hp: np.ndarray, c: float) -> np.ndarray:
    n = Hp.shape[-1]
    A = np.stack([build_fr(n, r).A for r in range(1, n + 1)])
    D = np.diagonal(Hp, axis1=-2, axis2=-1)
    return totally_geodesic_delta(n, c) + np.einsum("...ri,rij,...rj->...", D, A, D)


def _audit_checks(delta, eq3, eq4, fsum, scale):
    return (
        np.abs(eq3 - delta) <= 1e-8 * np.maximum(1.0, np.abs(delta)),
        eq4 - eq3 >= -1e-10 * scale,
        np.abs(fsum - eq4) <= 1e-10 * scale,
    )


def proof_step_audit(h: SymmetricCubic, c: float, opts: OptimizerConfig | None = None) -> AuditRecord:
    """Recheck the chain delta = adapted-frame identity <= majorant = sum of forms.

    (a) the adapted-frame expression reproduces delta within 1e-8;
    (b) the majorant is not below it (slack >= -1e-10);
    (c) the sum of the per-direction quadratic forms equals the majorant
        within 1e-10.  Tolerances (b), (c) scale with ``max(1, |h|^2)``.
    """
    summary = chen_delta(h, c, opts)
    Hp = rotate(h, adapted_frame(summary.argmin)).array
    eq3 = float(_curv._adapted_delta(Hp, c))
    eq4 = float(_majorant(Hp, c))
    fsum = float(_form_sum(Hp, c))
    a, b, cc = _audit_checks(summary.delta, eq3, eq4, fsum, max(1.0, h.norm_sq()))
    return AuditRecord(summary.delta, eq3, eq4, fsum, bool(a), bool(b), bool(cc), summary.converged)


def audit_batch(n: int, c: float, count: int, sigma: float = 1.0, seed: int = 0,
                opts: OptimizerConfig | None = None, chunk: int = 1000) -> dict:
    """Run the audit on ``count`` sampled tensors; returns worst deviations and failure counts."""
    worst = {"identity": 0.0, "slack": np.inf, "forms": 0.0}
    fails = {"identity": 0, "majorization": 0, "forms": 0}
    for lo in range(0, count, chunk):
        idx = list(range(lo, min(count, lo + chunk)))
        H = dense_from_free(sample_free(n, seed, sigma, idx), n)
        tau = n * (n - 1) / 2 * c / 4 + _curv._scalar_h_part(H)
        minK, U, V, _, _ = _curv.minimize_sectional_batch(H, c, opts)
        delta = tau - minK
        Q = np.stack([adapted_frame(_curv.TangentPlane(U[s], V[s])).Q for s in range(len(idx))])
        Hp = _rotate_batch(H, Q)
        eq3, eq4, fsum = _curv._adapted_delta(Hp, c), _majorant(Hp, c), _form_sum(Hp, c)
        scale = np.maximum(1.0, np.sum(H**2, axis=(1, 2, 3)))
        a, b, cc = _audit_checks(delta, eq3, eq4, fsum, scale)
        worst["identity"] = max(worst["identity"], float(np.max(np.abs(eq3 - delta))))
        worst["slack"] = min(worst["slack"], float(np.min(eq4 - eq3)))
        worst["forms"] = max(worst["forms"], float(np.max(np.abs(fsum - eq4))))
        fails["identity"] += int(np.sum(~a))
        fails["majorization"] += int(np.sum(~b))
        fails["forms"] += int(np.sum(~cc))
    return {"n": n, "c": c, "count": count, "worst": worst, "failures": fails}


def _rotate_batch(H: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return np.einsum("sai,sbj,sck,sijk->sabc", Q, Q, Q, H, optimize=True)


# ---------------------------------------------------------------------------
# exact coefficient orderings


def coefficient_comparison(nMax: int) -> list[dict]:
    """Integer checks, for each ``n`` in ``3..nMax``, of

    ``(n-2)/(n+1) < (2n-3)/(2n+3)``  as  ``(n-2)(2n+3) < (2n-3)(n+1)`` and
    ``(2n-3)/(2n+3) < (n-2)/(n-1)``  as  ``(2n-3)(n-1) < (n-2)(2n+3)``,
    the latter gap being ``4n - 9``.
    """
    if nMax < 3:
        raise ValueError("nMax must be at least 3")
    rows = []
    for n in range(3, nMax + 1):
        a = (n - 2) * (2 * n + 3)
        b = (2 * n - 3) * (n + 1)
        d = (2 * n - 3) * (n - 1)
        rows.append({
            "n": n,
            "f1_vs_fr": [a, b],
            "improved_vs_classic": [d, a],
            "gap": a - d,
            "f1_below_fr": a < b,
            "improved_below_classic": d < a,
            "gap_is_4n_minus_9": a - d == 4 * n - 9 and 4 * n - 9 > 0,
        })
    return rows
