import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sparsepr.ensembles import fourier_rows, intensity_measure, random_collision_free_signal
from sparsepr.fmm import (
    Verdict,
    all_signals_from_autocorrelation,
    autocorrelation_sparsity_bound,
    check_fmm_conditions,
    default_freqs,
    fmm_recover,
    next_valid_N,
    recover_autocorrelation,
    signal_from_autocorrelation,
)
from sparsepr.lifted import NoSolutionError
from sparsepr.signal import InvarianceAction, autocorrelation, equivalent_under_invariances, padded_arrangement

GOLOMB6 = [0, 1, 4, 10, 12, 17]  # a 6-mark ruler with all differences distinct


def same_T(a, b, tol=1e-6):
    return equivalent_under_invariances(a, b, group="full", circular=False,
                                        tol=tol * max(1.0, np.max(np.abs(a))))


def measure(x, freqs):
    return intensity_measure(fourier_rows(len(x), freqs), x)


# ---------------------------------------------------------------- conditions

def test_next_valid_N_examples():
    assert [next_valid_N(k) for k in (1, 2, 3)] == [3, 7, 17]
    assert autocorrelation_sparsity_bound(3) == 14
    with pytest.raises(ValueError):
        next_valid_N(-1)


@pytest.mark.parametrize("k", range(0, 25))
def test_prime_gate(k):
    n = next_valid_N(k)
    bound = 2 * (k * k - k + 1)
    assert oracles.is_prime(n) and n > bound
    assert all(not oracles.is_prime(j) for j in range(bound + 1, n))


def test_condition_examples():
    r = check_fmm_conditions([1, 0, 2, 0], 7)
    assert r.n_is_prime and r.bound_ok and r.collision_free and r.verdict is Verdict.UNIQUE
    r = check_fmm_conditions([1, 2, 0, 0, 3], 13)
    assert not r.bound_ok and r.verdict is Verdict.NOT_GUARANTEED and r.reasons == ["bound"]
    x = np.zeros(18)
    x[GOLOMB6] = 2.0
    r = check_fmm_conditions(x, 67)
    assert r.k6_case == "k6_all_equal" and r.verdict is Verdict.UNIQUE_ALMOST_SURELY
    x[GOLOMB6[0]] = 3.0
    r = check_fmm_conditions(x, 67)
    assert r.k6_case == "k6_distinct_values" and r.verdict is Verdict.UNIQUE


def test_condition_reasons():
    r = check_fmm_conditions([1, 1, 0, 1, 1], 29)  # support {0,1,3,4}: 1-0 == 4-3
    assert r.reasons == ["collision"]
    r = check_fmm_conditions([1, 0, 1], 8)
    assert r.reasons == ["n_not_prime"]
    # equality with the bound: rejected when strict, accepted otherwise
    assert not check_fmm_conditions([1, 0], 2).bound_ok
    assert check_fmm_conditions([1, 0], 2, strict=False).bound_ok


def test_verdict_invariants():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = int(rng.integers(1, 20))
        x = np.where(rng.random(m) < 0.3, rng.integers(1, 3, size=m), 0).astype(float)
        r = check_fmm_conditions(x, int(rng.integers(1, 80)))
        good = r.n_is_prime and r.bound_ok and r.collision_free
        assert (r.verdict is Verdict.UNIQUE) == (good and r.k6_case != "k6_all_equal")
        assert (r.verdict is Verdict.UNIQUE_ALMOST_SURELY) == (good and r.k6_case == "k6_all_equal")


# ---------------------------------------------------------------- stage 1

def test_recover_autocorrelation_examples():
    r = recover_autocorrelation(np.zeros(7), range(7), 4)
    assert np.all(r.q == 0) and r.unique
    x = [1, 0, 2, 0]
    r = recover_autocorrelation(measure(x, range(7)), range(7), 4, k=2)
    assert np.allclose(r.q, [5, 0, 2, 0, 0, 0, 2, 0], atol=1e-9)
    assert r.unique and r.centro_symmetric and not r.flags


def test_aliasing_below_bound():
    # two measurements (N = 2 <= 6) cannot pin down a 3-sparse arrangement;
    # [4, -3, 3, 0, 0, 0] is an integer alias of q([1, 0, 1]) found by
    # brute-force search
    y = measure([1, 0, 1], [0, 1])
    alias = np.array([4, -3, 3, 0, 0, 0.0])
    j = np.arange(6)
    assert np.allclose([np.sum(np.exp(2j * np.pi * j * k / 6) * alias) for k in (0, 1)], y)
    r = recover_autocorrelation(y, [0, 1], 3, s_max=3)
    assert not r.unique and "non-unique" in r.flags and "hypothesis-violated" in r.flags
    assert any(np.allclose(q, alias) for q in r.solutions)
    assert any(np.allclose(q, padded_arrangement(autocorrelation([1, 0, 1]))) for q in r.solutions)


def test_aliasing_composite_N():
    # N = 8 > 6 but composite: the even frequencies of a length-16 DFT only
    # see q folded modulo 8, so the lag-2 entry can move to index 10
    x = np.zeros(8)
    x[[0, 2]] = 1
    freqs = range(0, 16, 2)
    y = measure(x, freqs)
    q2 = padded_arrangement(autocorrelation(x))
    q2[10], q2[2] = q2[2], 0
    assert np.allclose(np.fft.fft(q2)[list(freqs)], y)
    r = recover_autocorrelation(y, freqs, 8, k=2)
    assert not r.unique and "hypothesis-violated" in r.flags
    rep = fmm_recover(y, freqs, 8, 2)
    assert "signal:multiple" in rep.flags and "condition:n_not_prime" in rep.flags
    assert any(same_T(x, z) for z in [rep.solution] + rep.alternates)


@given(st.integers(0, 2 ** 32), st.integers(2, 4))
def test_symmetric_mode_agrees(seed, k):
    m = 12
    x = random_collision_free_signal(m, k, seed)
    n = next_valid_N(k)
    if n > 2 * m:
        return
    y = measure(x, range(n))
    a = recover_autocorrelation(y, range(n), m, k=k)
    b = recover_autocorrelation(y, range(n), m, k=k, exploit_symmetry=True)
    assert np.allclose(a.q, b.q, atol=1e-8) and a.unique and b.unique


def test_infeasible():
    with pytest.raises(NoSolutionError):
        recover_autocorrelation(measure([1, 2, 3, 4], range(7)), range(7), 4, s_max=2)


# ---------------------------------------------------------------- stage 2

def test_signal_from_autocorrelation_examples():
    x, multiple = signal_from_autocorrelation(autocorrelation([1, 0, 2, 0]), 2)
    assert same_T(x, [1, 0, 2, 0]) and not multiple
    assert np.allclose(autocorrelation(x), autocorrelation([1, 0, 2, 0]))
    with pytest.raises(ValueError):
        signal_from_autocorrelation([1, -1, 1], 1)
    with pytest.raises(NoSolutionError):
        signal_from_autocorrelation(autocorrelation([1, 2, 3]), 2)
    assert np.all(signal_from_autocorrelation(np.zeros(5), 0)[0] == 0)


def test_signal_from_autocorrelation_k3():
    for seed in range(100):
        x0 = random_collision_free_signal(12, 3, seed)
        x, multiple = signal_from_autocorrelation(autocorrelation(x0), 3)
        assert same_T(x, x0) and not multiple


@pytest.mark.parametrize("k", [4, 5])
def test_signal_from_autocorrelation_larger_k(k):
    for seed in range(10):
        x0 = random_collision_free_signal(16, k, seed)
        x, multiple = signal_from_autocorrelation(autocorrelation(x0), k)
        assert same_T(x, x0) and not multiple


def test_k6_warns():
    x0 = np.zeros(18)
    x0[GOLOMB6] = [1, 2, 1, 3, 1, 2]
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        x, _ = signal_from_autocorrelation(autocorrelation(x0), 6)
    assert w and same_T(x, x0)
    with pytest.raises(ValueError):
        all_signals_from_autocorrelation(autocorrelation(x0), 7)


def test_non_collision_free_may_be_ambiguous():
    # {0,1,2,4} and its relatives: classic homometric pair [1,1,0,1,0,0,1] / [1,0,1,1,0,0,...]
    a = np.array([1, 1, 0, 0, 1, 0, 1.0])
    b = np.array([1, 0, 1, 1, 0, 0, 1.0])
    sols = all_signals_from_autocorrelation(autocorrelation(a), 4)
    for z in sols:
        assert np.allclose(autocorrelation(z), autocorrelation(a))
    if np.allclose(autocorrelation(a), autocorrelation(b)) and not same_T(a, b):
        assert len(sols) >= 2


# ---------------------------------------------------------------- pipeline

def test_pipeline_examples():
    x0 = np.array([0, 3, 0, 0, -1.0])
    rep = fmm_recover(measure(x0, range(7)), range(7), 5, 2)
    assert same_T(rep.solution, x0) and rep.unique and not rep.flags
    assert rep.details["conditions"].verdict is Verdict.UNIQUE
    rep = fmm_recover(measure(x0, range(6)), range(6), 5, 2)
    assert same_T(rep.solution, x0)
    assert "autocorrelation:hypothesis-violated" in rep.flags and "condition:n_not_prime" in rep.flags


def test_pipeline_m9_k3():
    for seed in range(100):
        x0 = random_collision_free_signal(9, 3, seed)
        rep = fmm_recover(measure(x0, range(17)), range(17), 9, 3)
        assert same_T(rep.solution, x0) and rep.unique


@given(st.integers(0, 2 ** 32), st.integers(1, 3), st.integers(-6, 6), st.booleans(), st.sampled_from([1, -1]))
def test_pipeline_invariance(seed, k, shift, mirror, sign):
    m = 10
    x0 = random_collision_free_signal(m, k, seed)
    try:
        gx = InvarianceAction(sign, mirror, shift).apply(x0, circular=False)
    except ValueError:
        return
    n = next_valid_N(k)
    a = fmm_recover(measure(x0, range(n)), range(n), m, k)
    b = fmm_recover(measure(gx, range(n)), range(n), m, k)
    assert np.allclose(a.solution, b.solution, atol=1e-8)


@given(st.integers(0, 2 ** 32), st.integers(1, 4))
def test_round_trip_when_unique(seed, k):
    m = 16
    x0 = random_collision_free_signal(m, k, seed)
    n = next_valid_N(k)
    assert check_fmm_conditions(x0, n).verdict is Verdict.UNIQUE
    rep = fmm_recover(measure(x0, range(n)), range(n), m, k)
    assert same_T(rep.solution, x0) and rep.unique


def test_random_frequency_subsets_usually_work():
    ok = 0
    for seed in range(40):
        x0 = random_collision_free_signal(9, 3, seed)
        freqs = default_freqs(17, 9, seed=seed)
        rep = fmm_recover(measure(x0, freqs), freqs, 9, 3)
        assert any(same_T(x0, z) for z in [rep.solution] + rep.alternates)
        ok += rep.unique
    assert ok >= 35


def test_prime_N_alone_does_not_protect_arbitrary_frequencies():
    # N = 7 > 6 is prime and x0 is collision free, yet on these frequencies
    # a lag-1 and a lag-15 signal share every measurement: at odd k the
    # two cosines agree, at the even k used here both vanish
    m, freqs = 16, (8, 9, 11, 15, 17, 24, 25)
    x0 = np.zeros(m)
    x0[[8, 9]] = [-4, -1]
    x1 = np.zeros(m)
    x1[[0, 15]] = [-4, 1]
    assert check_fmm_conditions(x0, 7).verdict is Verdict.UNIQUE
    assert np.allclose(oracles.dft_power(x0, freqs), oracles.dft_power(x1, freqs))
    assert not same_T(x0, x1)
    rep = fmm_recover(measure(x0, freqs), freqs, m, 2)
    assert "autocorrelation:non-unique" in rep.flags and "signal:multiple" in rep.flags
    found = [rep.solution] + rep.alternates
    assert any(same_T(x0, z) for z in found) and any(same_T(x1, z) for z in found)


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=12), st.data())
def test_wiener_khinchin_end_to_end(vals, data):
    x = np.array(vals, dtype=float)
    m = len(x)
    k = data.draw(st.integers(0, 2 * m - 1))
    lhs = oracles.dft_power(x, [k])[0]
    rhs = np.conj(fourier_rows(m, [k]).vectors[0]) @ padded_arrangement(autocorrelation(x))
    assert abs(lhs - rhs) <= 1e-8 * max(1.0, np.sum(np.abs(x)) ** 2)


@given(st.integers(0, 2 ** 32), st.integers(1, 5))
def test_arrangement_sparsity(seed, k):
    x = random_collision_free_signal(20, k, seed)
    assert np.count_nonzero(padded_arrangement(autocorrelation(x))) == k * k - k + 1  # half the stage-1 bound


def test_default_freqs():
    assert default_freqs(5, 4) == (0, 1, 2, 3, 4)
    f = default_freqs(5, 8, seed=3)
    assert len(set(f)) == 5 and all(0 <= i < 16 for i in f) and f == default_freqs(5, 8, seed=3)
    with pytest.raises(ValueError):
        default_freqs(9, 4)
