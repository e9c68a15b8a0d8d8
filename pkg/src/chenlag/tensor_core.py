"""
Fully symmetric rank-3 tensors and orthonormal frames.

A :class:`SymmetricCubic` holds the pointwise second fundamental form
``h[r, i, j]`` of a Lagrangian submanifold written in an adapted frame
``{e_i}``, ``{J e_r}``.  In that frame the component array is symmetric in
all three indices, so only the ``n(n+1)(n+2)/6`` entries with sorted index
triples ``i <= j <= k`` are stored.  Indices in the public API are 1-based.

Random tensors are drawn with numpy's ``PCG64`` bit generator seeded through
``SeedSequence``.  Batch sample ``i`` under master seed ``s`` uses the
substream ``SeedSequence(s, spawn_key=(i,))`` so results do not depend on how
a batch is split across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement, permutations
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "TensorError",
    "SymmetricCubic",
    "OrthonormalFrame",
    "MeanCurvature",
    "free_count",
    "free_triples",
    "from_components",
    "from_array",
    "value",
    "rotate",
    "mean_curvature",
    "sample",
    "sample_free",
    "random_rotation",
    "symmetrize",
    "load_tensor",
    "dump_tensor",
    "tensor_from_document",
    "tensor_to_document",
]

CONFLICT_TOL = 1e-12
ORTHO_TOL = 1e-10


class TensorError(ValueError):
    """Invalid tensor input: bad dimension, bad index, or broken symmetry."""


def free_count(n: int) -> int:
    return n * (n + 1) * (n + 2) // 6


@lru_cache(maxsize=None)
def free_triples(n: int) -> tuple[tuple[int, int, int], ...]:
    """Sorted 1-based triples ``(i, j, k)`` with ``i <= j <= k``, lexicographic."""
    return tuple(
        tuple(t) for t in combinations_with_replacement(range(1, n + 1), 3)
    )


@lru_cache(maxsize=None)
def _scatter_index(n: int) -> np.ndarray:
    """Map every dense position (flattened ``n**3``) to its free-entry slot."""
    slot = {t: s for s, t in enumerate(free_triples(n))}
    idx = np.empty(n**3, dtype=np.intp)
    for flat in range(n**3):
        i, rem = divmod(flat, n * n)
        j, k = divmod(rem, n)
        idx[flat] = slot[tuple(sorted((i + 1, j + 1, k + 1)))]
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=None)
def _gather_index(n: int) -> np.ndarray:
    """Flattened dense position of each sorted triple."""
    return np.array(
        [(i - 1) * n * n + (j - 1) * n + (k - 1) for i, j, k in free_triples(n)],
        dtype=np.intp,
    )


def dense_from_free(free: np.ndarray, n: int) -> np.ndarray:
    """Expand free entries ``(..., m)`` to dense arrays ``(..., n, n, n)``."""
    free = np.asarray(free, dtype=float)
    return free[..., _scatter_index(n)].reshape(free.shape[:-1] + (n, n, n))


def free_from_dense(arr: np.ndarray) -> np.ndarray:
    n = arr.shape[-1]
    return arr.reshape(arr.shape[:-3] + (n**3,))[..., _gather_index(n)]


def symmetrize(arr: np.ndarray) -> np.ndarray:
    """Average over the six index permutations of the last three axes."""
    lead = tuple(range(arr.ndim - 3))
    base = arr.ndim - 3
    total = sum(
        np.transpose(arr, lead + tuple(base + p for p in perm))
        for perm in permutations(range(3))
    )
    return total / 6.0


def _check_dim(n) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise TensorError(f"dimension must be an integer, got {n!r}")
    if n < 3:
        raise TensorError(f"dimension must be at least 3, got {n}")
    return int(n)


@dataclass(frozen=True, eq=False)
class SymmetricCubic:
    """Fully symmetric rank-3 tensor stored by sorted index triples.

    Parameters
    ----------
    n : int
        Dimension, at least 3.
    free : ndarray, shape (n(n+1)(n+2)/6,)
        Values at the sorted triples, in the order of :func:`free_triples`.
    """

    n: int
    free: np.ndarray
    _dense: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = _check_dim(self.n)
        free = np.array(self.free, dtype=float).reshape(-1)
        if free.shape != (free_count(n),):
            raise TensorError(
                f"expected {free_count(n)} free entries for n={n}, got {free.size}"
            )
        if not np.all(np.isfinite(free)):
            raise TensorError("tensor entries must be finite")
        free.setflags(write=False)
        dense = dense_from_free(free, n)
        dense.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "free", free)
        object.__setattr__(self, "_dense", dense)

    @classmethod
    def zeros(cls, n: int) -> "SymmetricCubic":
        return cls(n, np.zeros(free_count(_check_dim(n))))

    @property
    def array(self) -> np.ndarray:
        """Dense read-only ``(n, n, n)`` array, 0-based, ``array[r, i, j]``."""
        return self._dense

    @property
    def entries(self) -> dict[tuple[int, int, int], float]:
        """Non-zero entries keyed by sorted 1-based triples."""
        return {
            t: float(x) for t, x in zip(free_triples(self.n), self.free) if x != 0.0
        }

    def components(self, nonzero_only: bool = True) -> list[tuple[tuple[int, int, int], float]]:
        pairs = zip(free_triples(self.n), self.free.tolist())
        return [(t, x) for t, x in pairs if x != 0.0 or not nonzero_only]

    def value(self, r: int, i: int, j: int) -> float:
        return value(self, r, i, j)

    def norm_sq(self) -> float:
        """Sum of squares over all ``n**3`` positions."""
        return float(np.sum(self._dense**2))

    def scaled(self, factor: float) -> "SymmetricCubic":
        return SymmetricCubic(self.n, factor * self.free)

    def __eq__(self, other):
        if not isinstance(other, SymmetricCubic):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.free, other.free)

    def __hash__(self):
        return hash((self.n, self.free.tobytes()))

    def __repr__(self):
        return f"SymmetricCubic(n={self.n}, entries={self.entries})"


@dataclass(frozen=True, eq=False)
class OrthonormalFrame:
    """Orthonormal frame whose rows are the frame vectors."""

    Q: np.ndarray

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise TensorError(f"frame must be a square matrix, got shape {Q.shape}")
        err = np.max(np.abs(Q @ Q.T - np.eye(Q.shape[0])))
        if not err <= ORTHO_TOL:
            raise TensorError(f"frame rows are not orthonormal (error {err:.3g})")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def __matmul__(self, other: "OrthonormalFrame") -> "OrthonormalFrame":
        return OrthonormalFrame(self.Q @ other.Q)


@dataclass(frozen=True)
class MeanCurvature:
    components: np.ndarray
    normSq: float


def _check_index(n: int, idx) -> int:
    if isinstance(idx, bool) or not isinstance(idx, (int, np.integer)):
        raise TensorError(f"index must be an integer, got {idx!r}")
    if not 1 <= idx <= n:
        raise TensorError(f"index {idx} out of range 1..{n}")
    return int(idx)


def from_components(n: int, raw: Iterable[tuple[Sequence[int], float]]) -> SymmetricCubic:
    """Build a tensor from ``((i, j, k), value)`` pairs in any index order.

    Permuted duplicates must agree within 1e-12 and are collapsed; a
    disagreement means the input is not the form of a Lagrangian submanifold.
    """
    n = _check_dim(n)
    slot = {t: s for s, t in enumerate(free_triples(n))}
    free = np.zeros(free_count(n))
    seen: dict[tuple[int, int, int], float] = {}
    for triple, x in raw:
        triple = tuple(triple)
        if len(triple) != 3:
            raise TensorError(f"expected an index triple, got {triple!r}")
        key = tuple(sorted(_check_index(n, i) for i in triple))
        x = float(x)
        if not np.isfinite(x):
            raise TensorError(f"non-finite value at {triple}")
        if key in seen:
            if abs(seen[key] - x) > CONFLICT_TOL:
                raise TensorError(
                    f"conflicting symmetric entries at {key}: {seen[key]} vs {x}"
                )
            continue
        seen[key] = x
        free[slot[key]] = x
    return SymmetricCubic(n, free)


def from_array(arr, tol: float = CONFLICT_TOL) -> SymmetricCubic:
    """Build a tensor from a dense ``(n, n, n)`` array that is symmetric within ``tol``."""
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != 3 or len(set(arr.shape)) != 1:
        raise TensorError(f"expected an (n, n, n) array, got shape {arr.shape}")
    sym = symmetrize(arr)
    if np.max(np.abs(arr - sym), initial=0.0) > tol:
        raise TensorError("array is not symmetric in all three indices")
    return SymmetricCubic(arr.shape[0], free_from_dense(arr))


def value(h: SymmetricCubic, r: int, i: int, j: int) -> float:
    n = h.n
    return float(h.array[_check_index(n, r) - 1, _check_index(n, i) - 1, _check_index(n, j) - 1])


def rotate(h: SymmetricCubic, Q) -> SymmetricCubic:
    """Change frame: ``h'[a,b,c] = sum Q[a,i] Q[b,j] Q[c,k] h[i,j,k]``.

    The normal frame ``J e_i`` co-rotates with the tangent frame, so the
    whole tensor transforms as a cubic form.
    """
    frame = Q if isinstance(Q, OrthonormalFrame) else OrthonormalFrame(Q)
    if frame.n != h.n:
        raise TensorError(f"frame dimension {frame.n} does not match tensor dimension {h.n}")
    out = np.einsum("ai,bj,ck,ijk->abc", frame.Q, frame.Q, frame.Q, h.array, optimize=True)
    return SymmetricCubic(h.n, free_from_dense(symmetrize(out)))


def mean_curvature(h: SymmetricCubic) -> MeanCurvature:
    comps = np.trace(h.array, axis1=1, axis2=2) / h.n
    comps.setflags(write=False)
    return MeanCurvature(comps, float(np.sum(comps**2)))


def _generator(seed: int, index: int | None = None) -> np.random.Generator:
    if index is None:
        ss = np.random.SeedSequence(seed)
    else:
        ss = np.random.SeedSequence(seed, spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def sample_free(n: int, seed: int, sigma: float, indices: Sequence[int]) -> np.ndarray:
    """Free entries of batch samples ``indices`` under master ``seed``, shape ``(len(indices), m)``.

    ``sigma == 0`` is allowed here and yields zero tensors.
    """
    n = _check_dim(n)
    if not sigma >= 0 or not np.isfinite(sigma):
        raise TensorError(f"sigma must be non-negative and finite, got {sigma}")
    m = free_count(n)
    out = np.empty((len(indices), m))
    for row, i in enumerate(indices):
        out[row] = sigma * _generator(seed, i).standard_normal(m)
    return out


def sample(n: int, seed: int, sigma: float, index: int | None = None) -> SymmetricCubic:
    """Tensor with i.i.d. ``N(0, sigma**2)`` free entries.

    Without ``index`` the generator is ``PCG64(SeedSequence(seed))``; with it,
    the batch substream for that sample index is used.
    """
    n = _check_dim(n)
    if not (sigma > 0 and np.isfinite(sigma)):
        raise TensorError(f"sigma must be positive and finite, got {sigma}")
    rng = _generator(seed, index)
    return SymmetricCubic(n, sigma * rng.standard_normal(free_count(n)))


def random_rotation(n: int, seed: int) -> OrthonormalFrame:
    """Haar-distributed orthogonal matrix from a sign-corrected QR factorization."""
    if n < 2:
        raise TensorError(f"dimension must be at least 2, got {n}")
    rng = _generator(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return OrthonormalFrame(q * np.sign(np.diag(r)))


_DOC_KEYS = {"n", "components"}
_COMP_KEYS = {"idx", "value"}


def tensor_from_document(doc) -> SymmetricCubic:
    """Parse ``{"n": 3, "components": [{"idx": [1, 1, 2], "value": 1.0}, ...]}``."""
    if not isinstance(doc, dict):
        raise TensorError("tensor document must be a JSON object")
    extra = set(doc) - _DOC_KEYS
    if extra:
        raise TensorError(f"unknown fields in tensor document: {sorted(extra)}")
    if "n" not in doc:
        raise TensorError("tensor document is missing 'n'")
    comps = doc.get("components", [])
    if not isinstance(comps, list):
        raise TensorError("'components' must be a list")
    raw = []
    for item in comps:
        if not isinstance(item, dict):
            raise TensorError("each component must be an object")
        extra = set(item) - _COMP_KEYS
        missing = _COMP_KEYS - set(item)
        if extra or missing:
            raise TensorError(f"component fields must be exactly idx and value, got {sorted(item)}")
        idx, x = item["idx"], item["value"]
        if not isinstance(idx, list) or len(idx) != 3:
            raise TensorError(f"idx must be a list of three integers, got {idx!r}")
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise TensorError(f"value must be a number, got {x!r}")
        raw.append((idx, x))
    return from_components(doc["n"], raw)


def tensor_to_document(h: SymmetricCubic, nonzero_only: bool = True) -> dict:
    return {
        "n": h.n,
        "components": [
            {"idx": list(t), "value": x} for t, x in h.components(nonzero_only)
        ],
    }


def load_tensor(path) -> SymmetricCubic:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TensorError(f"malformed JSON: {exc}") from None
    return tensor_from_document(doc)


def dump_tensor(h: SymmetricCubic, path) -> None:
    with open(path, "w") as fh:
        json.dump(tensor_to_document(h), fh, indent=2)
        fh.write("\n")
