import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chenlag.tensor_core import (
    OrthonormalFrame,
    SymmetricCubic,
    TensorError,
    dump_tensor,
    free_count,
    free_triples,
    from_array,
    from_components,
    load_tensor,
    mean_curvature,
    random_rotation,
    rotate,
    sample,
    sample_free,
    tensor_from_document,
    tensor_to_document,
    value,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=3, max_value=6)


def test_from_components_symmetry_closure(h112):
    for perm in set(itertools.permutations((1, 1, 2))):
        assert value(h112, *perm) == 1.0
    assert h112.entries == {(1, 1, 2): 1.0}
    assert np.count_nonzero(h112.array) == 3


def test_empty_input_is_zero_tensor():
    h = from_components(3, [])
    assert h.free.shape == (10,)
    assert not h.free.any()


def test_conflicting_permutations_rejected():
    with pytest.raises(TensorError, match="conflicting"):
        from_components(3, [((1, 1, 2), 1.0), ((2, 1, 1), 2.0)])


def test_agreeing_duplicates_collapse():
    h = from_components(3, [((1, 1, 2), 1.0), ((2, 1, 1), 1.0 + 1e-13)])
    assert h.entries == {(1, 1, 2): 1.0}


@pytest.mark.parametrize("n", [0, 1, 2])
def test_small_dimension_rejected(n):
    with pytest.raises(TensorError):
        from_components(n, [])


@pytest.mark.parametrize("triple", [(0, 1, 1), (1, 1, 4), (1, 2)])
def test_bad_indices_rejected(triple):
    with pytest.raises(TensorError):
        from_components(3, [(triple, 1.0)])


def test_non_finite_rejected():
    with pytest.raises(TensorError):
        from_components(3, [((1, 1, 1), np.nan)])


def test_value_examples():
    assert value(SymmetricCubic.zeros(4), 2, 3, 4) == 0.0
    h = from_components(3, [((1, 2, 3), 5.0)])
    assert value(h, 3, 1, 2) == 5.0
    h = from_components(3, [((1, 1, 1), 3.0)])
    assert value(h, 1, 2, 2) == 0.0
    with pytest.raises(TensorError):
        value(h, 1, 2, 4)


def test_free_triples_sorted_and_counted():
    for n in range(3, 8):
        t = free_triples(n)
        assert len(t) == free_count(n) == n * (n + 1) * (n + 2) // 6
        assert all(a <= b <= c for a, b, c in t)
        assert list(t) == sorted(t)


@settings(max_examples=40, deadline=None)
@given(dims, seeds)
def test_permutation_invariance_exact(n, seed):
    H = sample(n, seed, 1.0).array
    for perm in itertools.permutations(range(3)):
        assert np.array_equal(np.transpose(H, perm), H)


@settings(max_examples=40, deadline=None)
@given(dims, seeds)
def test_components_round_trip(n, seed):
    h = sample(n, seed, 1.0)
    again = from_components(n, h.components(nonzero_only=False))
    assert again == h
    raw = [((r, i, j), value(h, r, i, j)) for r, i, j in itertools.product(range(1, n + 1), repeat=3)]
    assert from_components(n, raw) == h


def test_from_array_checks_symmetry():
    a = np.zeros((3, 3, 3))
    a[0, 0, 1] = 1.0
    with pytest.raises(TensorError):
        from_array(a)
    a[0, 1, 0] = a[1, 0, 0] = 1.0
    assert from_array(a).entries == {(1, 1, 2): 1.0}


# ---- frames and rotation


def brute_rotate(H, Q):
    n = H.shape[0]
    out = np.zeros_like(H)
    for a, b, c in itertools.product(range(n), repeat=3):
        s = 0.0
        for i, j, k in itertools.product(range(n), repeat=3):
            s += Q[a, i] * Q[b, j] * Q[c, k] * H[i, j, k]
        out[a, b, c] = s
    return out


def test_rotate_identity():
    h = sample(4, 3, 1.0)
    assert np.allclose(rotate(h, np.eye(4)).free, h.free, atol=1e-15)


def test_rotate_swap_relabels():
    h = from_components(3, [((1, 1, 1), 1.0)])
    P = np.eye(3)[[1, 0, 2]]
    assert rotate(h, P).entries == {(2, 2, 2): 1.0}


@pytest.mark.parametrize("seed", range(5))
def test_rotate_matches_brute_force_and_preserves_norm(seed):
    h = sample(3, seed, 1.0)
    Q = random_rotation(3, 100 + seed).Q
    r = rotate(h, Q)
    assert np.allclose(r.array, brute_rotate(h.array, Q), atol=1e-12)
    assert abs(r.norm_sq() - h.norm_sq()) < 1e-10


@settings(max_examples=25, deadline=None)
@given(dims, seeds, seeds, seeds)
def test_rotation_composition(n, s0, s1, s2):
    h = sample(n, s0, 1.0)
    Q1, Q2 = random_rotation(n, s1), random_rotation(n, s2)
    lhs = rotate(rotate(h, Q1), Q2)
    rhs = rotate(h, Q2.Q @ Q1.Q)
    assert np.allclose(lhs.free, rhs.free, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(dims, seeds, seeds)
def test_mean_curvature_norm_frame_invariant(n, s0, s1):
    h = sample(n, s0, 1.0)
    Q = random_rotation(n, s1)
    assert abs(mean_curvature(rotate(h, Q)).normSq - mean_curvature(h).normSq) < 1e-10


def test_rotate_rejects_bad_frames():
    h = sample(3, 0, 1.0)
    with pytest.raises(TensorError):
        rotate(h, 2 * np.eye(3))
    with pytest.raises(TensorError):
        rotate(h, np.eye(4))


# ---- mean curvature


def test_mean_curvature_examples():
    mc = mean_curvature(SymmetricCubic.zeros(3))
    assert mc.normSq == 0 and not mc.components.any()
    mc = mean_curvature(from_components(3, [((1, 1, 1), 3.0)]))
    assert np.allclose(mc.components, [1, 0, 0]) and mc.normSq == pytest.approx(1.0)
    mc = mean_curvature(from_components(3, [((1, 1, 2), 1.0)]))
    assert np.allclose(mc.components, [0, 1 / 3, 0])
    assert mc.normSq == pytest.approx(1 / 9, abs=1e-15)


# ---- sampling


def test_sample_deterministic_and_counted():
    a, b = sample(3, 42, 0.7), sample(3, 42, 0.7)
    assert a == b
    assert a.free.size == 10 and np.count_nonzero(a.free) == 10
    assert sample(3, 43, 0.7) != a


def test_sample_substreams_match_batch_rows():
    rows = sample_free(4, 9, 2.0, [0, 5, 17])
    for row, i in zip(rows, [0, 5, 17]):
        assert np.array_equal(row, sample(4, 9, 2.0, index=i).free)
    # order of requested indices does not matter
    assert np.array_equal(sample_free(4, 9, 2.0, [17, 0])[0], rows[2])


def test_sample_variance():
    sigma = 1.7
    vals = sample_free(3, 5, sigma, range(10_000)).ravel()
    assert abs(vals.var() / sigma**2 - 1) < 0.05


@pytest.mark.parametrize("sigma", [0.0, -1.0, np.inf])
def test_sample_rejects_bad_sigma(sigma):
    with pytest.raises(TensorError):
        sample(3, 0, sigma)


def test_random_rotation_properties():
    Q = random_rotation(5, 11).Q
    assert np.max(np.abs(Q.T @ Q - np.eye(5))) < 1e-12
    assert np.array_equal(Q, random_rotation(5, 11).Q)


def test_random_rotation_column_means():
    n, N = 3, 10_000
    Qs = np.stack([random_rotation(n, s).Q for s in range(N)])
    means = Qs.mean(axis=0)
    # entries of a Haar orthogonal matrix have variance 1/n
    se = np.sqrt(1.0 / n / N)
    assert np.all(np.abs(means) < 3 * se)


def test_orthonormal_frame_validation():
    with pytest.raises(TensorError):
        OrthonormalFrame(np.ones((3, 3)))


# ---- JSON documents


def test_json_round_trip(tmp_path):
    h = sample(4, 1, 1.0)
    path = tmp_path / "h.json"
    dump_tensor(h, path)
    doc = json.loads(path.read_text())
    assert doc["n"] == 4
    assert all(c["idx"] == sorted(c["idx"]) for c in doc["components"])
    assert load_tensor(path) == h


def test_json_document_example():
    h = tensor_from_document({"n": 3, "components": [{"idx": [1, 1, 2], "value": 1.0}]})
    assert h.entries == {(1, 1, 2): 1.0}
    assert tensor_to_document(h) == {"n": 3, "components": [{"idx": [1, 1, 2], "value": 1.0}]}


@pytest.mark.parametrize(
    "doc",
    [
        {"n": 3, "components": [], "extra": 1},
        {"n": 3, "components": [{"idx": [1, 1, 2], "value": 1.0, "note": "x"}]},
        {"n": 3, "components": [{"idx": [1, 1], "value": 1.0}]},
        {"n": 3, "components": [{"idx": [1, 1, 2], "value": "1"}]},
        {"components": []},
        {"n": 2, "components": []},
        [],
    ],
)
def test_json_document_rejections(doc):
    with pytest.raises(TensorError):
        tensor_from_document(doc)


def test_malformed_json_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(TensorError, match="malformed"):
        load_tensor(path)
