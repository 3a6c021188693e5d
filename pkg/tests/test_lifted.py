import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sparsepr.complement import EnumerationCapError, has_k_complement_property
from sparsepr.ensembles import explicit_ensemble, gaussian_ensemble, intensity_measure, random_sparse_signal
from sparsepr.lifted import (
    NoSolutionError,
    Uniqueness,
    l0_recover,
    lifted_design,
    sign_canonical,
    unlift,
    verify_uniqueness,
)
from sparsepr.signal import equivalent_under_invariances

E3 = [[1, 0], [0, 1], [1, 1]]


def same(a, b, tol=1e-7):
    return equivalent_under_invariances(a, b, group="sign", tol=tol * max(1.0, np.max(np.abs(a))))


def test_zero_measurements():
    rep = l0_recover(E3, [0, 0, 0], 2)
    assert rep.sparsity_found == 0 and np.all(rep.solution == 0) and rep.unique


def test_hand_example():
    rep = l0_recover(E3, [1, 4, 9], 2)
    assert rep.unique and rep.sparsity_found == 2
    assert np.allclose(rep.solution, [1, 2], atol=1e-12)
    assert rep.residual <= 1e-8 * np.linalg.norm([1, 4, 9])


def test_sign_canonical():
    assert sign_canonical([1, -3, 2]).tolist() == [-1, 3, -2]
    assert sign_canonical([0, 0]).tolist() == [0, 0]


def test_gaussian_round_trip():
    for seed in range(20):
        phi = gaussian_ensemble(8, 7, seed)
        x0 = random_sparse_signal(8, 2, seed, stream=99)
        y = intensity_measure(phi, x0)
        rep = l0_recover(phi, y, 2, check_certificate=True)
        assert rep.unique and same(x0, rep.solution)
        assert rep.certificate_checked is True
        assert rep.residual <= 1e-8 * np.linalg.norm(y)


def test_errors():
    with pytest.raises(NoSolutionError):
        l0_recover(E3, [1, 4, 8.5], 2)
    with pytest.raises(NoSolutionError):
        l0_recover(E3, [1, 4, 9], 1)
    with pytest.raises(EnumerationCapError):
        l0_recover(gaussian_ensemble(30, 5, 0), np.ones(5), 6)
    with pytest.raises(ValueError):
        l0_recover(np.array([[1j, 0]]), [1.0], 1)
    with pytest.raises(ValueError):
        l0_recover(E3, [1, 4], 2)


def test_underdetermined_is_flagged_and_complete():
    # two measurements of a 2-sparse signal: the lifted system has 3 unknowns
    phi = [[1, 1], [1, -1]]
    rep = l0_recover(phi, [9, 1], 2)
    assert "unverified-underdetermined" in rep.flags
    sols = [rep.solution] + rep.alternates
    assert any(same(z, [2, 1]) for z in sols) and any(same(z, [1, 2]) for z in sols)
    # one measurement on a 2-sparse support: a whole circle of solutions
    rep = l0_recover([[1, 1, 0]], [4], 3)
    assert rep.sparsity_found == 1 and len(rep.alternates) == 1


def test_sparsest_solutions_are_isolated():
    # an affine family of solutions on a support always meets a coordinate
    # hyperplane, so it cannot survive at the sparsest level
    rng = np.random.default_rng(5)
    for _ in range(300):
        m = int(rng.integers(2, 5))
        phi = rng.integers(-1, 2, size=(int(rng.integers(1, 5)), m)).astype(float)
        x0 = rng.integers(-2, 3, size=m).astype(float)
        rep = l0_recover(phi, intensity_measure(phi, x0), m)
        assert "continuum" not in rep.flags and not rep.details["continuum_supports"]


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=5), st.integers(1, 9), st.integers(0, 2 ** 32))
def test_lifted_solve_is_exact(vals, n, seed):
    x = np.array(vals, dtype=float)
    rng = np.random.default_rng(seed)
    rows = rng.integers(-3, 4, size=(n, len(x))).astype(float)
    X = np.outer(x, x)
    iu = np.triu_indices(len(x))
    # integer data: everything is exact in double precision
    assert np.array_equal(lifted_design(rows) @ X[iu], (rows @ x) ** 2)
    assert np.array_equal(unlift(X[iu], len(x)), X)
    g = rng.normal(size=(n, len(x)))
    xf = rng.normal(size=len(x))
    Xf = np.outer(xf, xf)
    assert np.max(np.abs(lifted_design(g) @ Xf[iu] - (g @ xf) ** 2)) <= 1e-10 * max(1.0, np.max((g @ xf) ** 2))


def test_verify_uniqueness_examples():
    for seed in range(100):
        phi = gaussian_ensemble(6, 7, seed)
        x0 = random_sparse_signal(6, 2, seed)
        assert verify_uniqueness(phi, x0).status is Uniqueness.GUARANTEED
    v = verify_uniqueness([[1, 0], [0, 1]], [0.5, 0.5])
    assert v.status is Uniqueness.AMBIGUOUS
    assert np.allclose(v.witness[0], [0.5, 0.5]) and same(v.witness[1], [-0.5, 0.5])
    assert verify_uniqueness(E3, [0, 0]).status is Uniqueness.GUARANTEED


def test_verify_uniqueness_empirical():
    # 5 Gaussian vectors in R^4 lack the 4-complement property, yet a given
    # 2-sparse signal is typically still pinned down
    statuses = set()
    for seed in range(20):
        phi = gaussian_ensemble(4, 5, seed)
        x0 = random_sparse_signal(4, 2, seed)
        v = verify_uniqueness(phi, x0)
        statuses.add(v.status)
        if v.status is not Uniqueness.AMBIGUOUS:
            rep = l0_recover(phi, intensity_measure(phi, x0), 2)
            assert same(rep.solution, x0)
        else:
            z = v.witness[1]
            assert np.allclose(intensity_measure(phi, z), intensity_measure(phi, x0), atol=1e-8)
            assert not same(z, x0)
    assert Uniqueness.EMPIRICAL in statuses


def test_round_trip_when_not_ambiguous():
    rng = np.random.default_rng(7)
    for _ in range(300):
        m = int(rng.integers(2, 5))
        n = int(rng.integers(1, 8))
        phi = rng.integers(-2, 3, size=(n, m)).astype(float)
        x0 = rng.integers(-2, 3, size=m).astype(float)
        v = verify_uniqueness(phi, x0)
        if v.status is Uniqueness.AMBIGUOUS:
            continue
        rep = l0_recover(phi, intensity_measure(phi, x0), int(np.count_nonzero(x0)))
        assert same(rep.solution, x0) and not rep.alternates


def test_soundness_many_trials():
    """Whenever the 2k-complement property holds, no support yields a
    second solution: checked on 10^4 (ensemble, signal) pairs."""
    rng = np.random.default_rng(2023)
    trials = 0
    while trials < 10_000:
        m = int(rng.integers(3, 6))
        k = int(rng.integers(1, 3))
        n = int(rng.integers(2 * min(2 * k, m) - 1, 2 * min(2 * k, m) + 2))
        phi = rng.integers(-2, 3, size=(n, m)).astype(float) if rng.random() < 0.5 else rng.normal(size=(n, m))
        if not has_k_complement_property(phi, min(2 * k, m))[0]:
            continue
        for _ in range(25):
            x0 = np.zeros(m)
            supp = rng.choice(m, size=k, replace=False)
            x0[supp] = rng.integers(1, 4, size=k) * rng.choice([-1, 1], size=k)
            rep = l0_recover(phi, intensity_measure(phi, x0), k)
            assert not rep.alternates, (phi, x0)
            assert same(rep.solution, x0), (phi, x0)
            trials += 1
    assert trials >= 10_000


def test_agrees_with_grid_search_m4():
    rng = np.random.default_rng(11)
    for _ in range(60):
        m = 4
        n = int(rng.integers(1, 8))
        phi = rng.integers(-1, 2, size=(n, m))
        x0 = rng.integers(-2, 3, size=m)
        y = (phi @ x0) ** 2
        sols, sp = oracles.grid_l0(phi, y, 2)
        rep = l0_recover(phi.astype(float), y.astype(float), m)
        found = [rep.solution] + rep.alternates
        assert rep.sparsity_found <= sp.min()
        for z in found:
            assert np.allclose((phi @ z) ** 2, y, atol=1e-7)
        for g in sols[sp == rep.sparsity_found]:
            assert any(same(g, z, 1e-6) for z in found), (phi, x0, g)
