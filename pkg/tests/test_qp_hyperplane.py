import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chenlag.qp_hyperplane import (
    QuadraticForm,
    Verdict,
    build_f1,
    build_fr,
    closed_form_coefficient,
    closed_form_max,
    grid_max_n3,
    hyperplane_basis,
    maximize_on_hyperplane,
    projected_hessian_spectrum,
)

ks = st.floats(-10, 10, allow_nan=False)
nr_pairs = st.integers(3, 8).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n)))


def brute_f1(x):
    x = np.asarray(x, float)
    t = x[2:]
    return (x[0] + x[1]) * t.sum() + 0.5 * (t.sum() ** 2 - (t**2).sum()) - (t**2).sum()


def brute_fr(x, r):
    x = np.asarray(x, float)
    t = x[2:]
    sq = x[0] ** 2 + sum(x[j] ** 2 for j in range(1, len(x)) if j != r - 1)
    return (x[0] + x[1]) * t.sum() + 0.5 * (t.sum() ** 2 - (t**2).sum()) - sq


# ---- forms


def test_f1_examples():
    f = build_f1(3)
    assert f([1, 1, 1]) == 1.0
    assert f([2.0, -5.0, 0.0]) == 0.0
    assert build_f1(6)([3.0, 7.0, 0, 0, 0, 0]) == 0.0
    assert build_f1(4)([0, 0, 1, 1]) == -1.0


def test_fr_examples():
    f = build_fr(3, 3)
    assert f([3, 3, 12]) == 54.0
    for t in (-2.0, 0.5, 9.0):
        assert f([0, 0, t]) == 0.0
    assert build_fr(4, 4)([1, 0, 0, 0]) == -1.0


def test_f2_is_f1():
    for n in range(3, 7):
        assert np.array_equal(build_fr(n, 2).A, build_f1(n).A)
        assert np.array_equal(build_fr(n, 1).A, build_f1(n).A)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_forms_match_loop_definition(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        x = rng.standard_normal(n)
        assert build_f1(n)(x) == pytest.approx(brute_f1(x), abs=1e-12)
        for r in range(3, n + 1):
            assert build_fr(n, r)(x) == pytest.approx(brute_fr(x, r), abs=1e-12)


def test_form_is_symmetric():
    Q = QuadraticForm(np.array([[1.0, 2.0], [0.0, 3.0]]))
    assert np.array_equal(Q.A, Q.A.T)
    assert Q([1.0, 1.0]) == 6.0


@pytest.mark.parametrize("args", [(2,), (3, 0), (3, 4)])
def test_bad_arguments(args):
    with pytest.raises(ValueError):
        build_fr(*args) if len(args) == 2 else build_f1(*args)


# ---- hyperplane basis and spectrum


@pytest.mark.parametrize("n", [3, 5, 9])
def test_hyperplane_basis_orthonormal(n):
    B = hyperplane_basis(n)
    assert np.allclose(B.T @ B, np.eye(n - 1), atol=1e-14)
    assert np.allclose(B.sum(axis=0), 0.0, atol=1e-14)


def test_spectrum_examples():
    assert np.array_equal(projected_hessian_spectrum(QuadraticForm(np.zeros((4, 4)))), np.zeros(3))
    s = projected_hessian_spectrum(build_f1(3))
    assert np.all(s <= 1e-12)
    assert np.allclose(s, [-4 / 3, 0.0], atol=1e-12)
    assert np.all(projected_hessian_spectrum(build_fr(3, 3)) < 0)


@pytest.mark.parametrize("n", range(3, 11))
def test_semidefinite_on_hyperplane(n):
    for r in range(1, n + 1):
        A = build_fr(n, r).A
        s = projected_hessian_spectrum(build_fr(n, r))
        assert s[-1] <= 1e-10 * max(1.0, np.linalg.norm(A, 2))


# ---- KKT solver


def test_kkt_examples():
    sol = maximize_on_hyperplane(build_f1(3), 4.0)
    assert sol.value == pytest.approx(2.0, abs=1e-12)
    assert sol.argmax[0] + sol.argmax[1] == pytest.approx(3.0, abs=1e-10)
    assert sol.argmax[2] == pytest.approx(1.0, abs=1e-10)
    assert sol.verdict is Verdict.DEGENERATE_MAX

    sol = maximize_on_hyperplane(build_fr(3, 3), 18.0)
    assert sol.verdict is Verdict.MAX_ATTAINED
    assert sol.value == pytest.approx(54.0, rel=1e-12)
    assert np.allclose(sol.argmax, [3, 3, 12], atol=1e-10)


def test_kkt_homogeneous_at_zero():
    sol = maximize_on_hyperplane(build_fr(5, 4), 0.0)
    assert sol.value == 0.0 or abs(sol.value) < 1e-15
    assert np.allclose(sol.argmax, 0.0, atol=1e-15)


def test_kkt_unbounded_form():
    sol = maximize_on_hyperplane(QuadraticForm(np.diag([1.0, -1.0, -1.0])), 1.0)
    assert sol.verdict is Verdict.UNBOUNDED
    assert sol.value == np.inf
    assert sol.diagnostic


def test_kkt_flat_without_stationary_point():
    # f = -(x1 - x2)^2 + sum(x) (x1 + x2 - 2 x3): on sum = 1 it grows linearly along d
    u = np.array([1.0, -1.0, 0.0])
    d = np.array([1.0, 1.0, -2.0])
    one = np.ones(3)
    Q = QuadraticForm(-np.outer(u, u) + 0.5 * (np.outer(one, d) + np.outer(d, one)))
    assert abs(projected_hessian_spectrum(Q)[-1]) < 1e-12
    sol = maximize_on_hyperplane(Q, 1.0)
    assert sol.verdict is Verdict.UNBOUNDED
    assert "residual" in sol.diagnostic


@settings(max_examples=60, deadline=None)
@given(nr_pairs, ks)
def test_kkt_matches_closed_form(nr, k):
    n, r = nr
    sol = maximize_on_hyperplane(build_fr(n, r), k)
    value, x = closed_form_max(n, r, k)
    assert sol.verdict is not Verdict.UNBOUNDED
    assert abs(sol.value - value) <= 1e-9 * max(1.0, abs(value))
    assert abs(sol.argmax.sum() - k) <= 1e-10 * max(1.0, abs(k))
    assert abs(build_fr(n, r)(x) - value) <= 1e-9 * max(1.0, abs(value))


@settings(max_examples=40, deadline=None)
@given(nr_pairs, ks, st.floats(-5, 5).filter(lambda t: abs(t) > 1e-3))
def test_homogeneity(nr, k, lam):
    n, r = nr
    Q = build_fr(n, r)
    v1 = maximize_on_hyperplane(Q, lam * k).value
    v0 = maximize_on_hyperplane(Q, k).value
    assert abs(v1 - lam**2 * v0) <= 1e-10 * max(1.0, abs(v1))


@pytest.mark.parametrize("n", range(3, 9))
def test_stationarity_pattern(n):
    k = 2.5
    x = maximize_on_hyperplane(build_f1(n), k).argmax
    assert np.allclose(x[2:], x[2], atol=1e-8)
    assert x[0] + x[1] == pytest.approx(3 * x[2], abs=1e-8)
    a = k / (4 * n + 6)
    for r in range(3, n + 1):
        x = maximize_on_hyperplane(build_fr(n, r), k).argmax
        expect = np.full(n, 4 * a)
        expect[:2] = 3 * a
        expect[r - 1] = 12 * a
        assert np.allclose(x, expect, atol=1e-8)


# ---- closed forms


def test_closed_form_examples():
    assert closed_form_max(3, 1, 4.0)[0] == pytest.approx(2.0)
    v, x = closed_form_max(3, 3, 18.0)
    assert v == pytest.approx(54.0) and np.allclose(x, [3, 3, 12])
    assert closed_form_max(5, 3, 1.0)[0] == pytest.approx(7 / 26, rel=1e-15)
    assert closed_form_max(5, 1, 2.0)[0] == pytest.approx(1.0)
    v, x = closed_form_max(4, 2, 5.0)
    assert np.allclose(x, [1.5, 1.5, 1.0, 1.0])


def test_closed_form_coefficients_ordered():
    for n in range(3, 60):
        assert closed_form_coefficient(n, 1) < closed_form_coefficient(n, 3)


# ---- grid oracle


@pytest.mark.parametrize("r", [1, 2, 3])
@pytest.mark.parametrize("k", [-3.0, 0.7, 4.0])
def test_grid_oracle_agrees_n3(r, k):
    Q = build_fr(3, r)
    g, _ = grid_max_n3(Q, k)
    v = maximize_on_hyperplane(Q, k).value
    assert g <= v + 1e-12
    assert abs(g - v) < 1e-3
    assert abs(g - closed_form_max(3, r, k)[0]) < 1e-3


def test_grid_oracle_rejects_other_dims():
    with pytest.raises(ValueError):
        grid_max_n3(build_f1(4), 1.0)
