"""Recovery of sparse real signals from Fourier magnitude measurements.

The pipeline has two exact stages:

1. The measurements are linear in the zero-padded autocorrelation
   arrangement ``q`` (length 2M, ``q[M] = 0``)::

       y_n = <phi_n, q> = sum_j exp(+2 pi i j k_n / 2M) q[j]

   and the sparsest real ``q`` is found by support enumeration.
2. The signal is rebuilt from its autocorrelation: candidate supports come
   from the set of nonzero lags (turnpike reconstruction), and the values
   on each support from the bilinear lag equations.

Everything is determined only up to sign, mirroring and shifts.
"""
from __future__ import annotations

import enum
import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from sympy import isprime, nextprime

from .complement import EnumerationCapError
from .ensembles import fourier_rows, intensity_measure
from .lifted import NoSolutionError, RecoveryReport
from .signal import (
    _as_vector,
    canonicalize,
    equivalent_under_invariances,
    is_collision_free,
    sparsity,
)

LIN_RTOL = 1e-8
DEFAULT_MAX_SUPPORTS = 2_000_000


def autocorrelation_sparsity_bound(k: int) -> int:
    """``2 (k^2 - k + 1)``, twice the nonzero-lag count of a collision-free
    k-sparse signal."""
    return 2 * (k * k - k + 1)


def next_valid_N(k: int) -> int:
    """Smallest prime strictly greater than ``2 (k^2 - k + 1)``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return int(nextprime(autocorrelation_sparsity_bound(k)))


class Verdict(enum.Enum):
    UNIQUE = "Unique"
    UNIQUE_ALMOST_SURELY = "UniqueAlmostSurely"
    NOT_GUARANTEED = "NotGuaranteed"


@dataclass
class FmmConditionReport:
    k: int
    N: int
    n_is_prime: bool
    bound_ok: bool
    collision_free: bool
    k6_case: str
    verdict: Verdict
    reasons: list = field(default_factory=list)


def check_fmm_conditions(x0, N: int, strict: bool = True) -> FmmConditionReport:
    """Evaluate the hypotheses under which N Fourier magnitudes pin down `x0`.

    The sparsity bound is ``N > 2 (k^2 - k + 1)``, or ``>=`` with
    ``strict=False``. Collisions are tested in the strict sense (every
    ordered pair of support indices has its own difference).
    """
    x0 = _as_vector(x0)
    k = sparsity(x0)
    bound = autocorrelation_sparsity_bound(k)
    n_is_prime = bool(isprime(int(N)))
    bound_ok = N > bound if strict else N >= bound
    collision_free = is_collision_free(x0, mode="strict")[0]
    if k != 6:
        k6_case = "not_k6"
    else:
        vals = x0[x0 != 0]
        k6_case = "k6_all_equal" if np.all(vals == vals[0]) else "k6_distinct_values"

    reasons = []
    if not n_is_prime:
        reasons.append("n_not_prime")
    if not bound_ok:
        reasons.append("bound")
    if not collision_free:
        reasons.append("collision")
    if reasons:
        verdict = Verdict.NOT_GUARANTEED
    elif k6_case == "k6_all_equal":
        verdict = Verdict.UNIQUE_ALMOST_SURELY
    else:
        verdict = Verdict.UNIQUE
    return FmmConditionReport(k, int(N), n_is_prime, bound_ok, collision_free, k6_case,
                              verdict, reasons)


# --------------------------------------------------------------------------
# stage 1: sparse autocorrelation from partial Fourier magnitudes

@dataclass
class AutocorrRecovery:
    """Sparsest arrangement(s) ``q`` consistent with the measurements.

    `q` is the first solution; `solutions` lists all solutions of the
    minimal sparsity. `flags` may contain ``"non-unique"``,
    ``"hypothesis-violated"`` (N not prime or ``2 ||q||_0 > N``) and
    ``"not-centro-symmetric"``.
    """

    q: np.ndarray
    solutions: list
    sparsity: int
    unique: bool
    centro_symmetric: bool
    residual: float
    flags: list = field(default_factory=list)


def _is_centro(q, m: int) -> bool:
    return bool(np.all(np.abs(q[1:m] - q[2 * m - 1:m:-1]) <= 1e-8 * max(np.max(np.abs(q)), 1e-300)))


def fourier_system(m: int, freqs) -> np.ndarray:
    """Real form of ``y_n = <phi_n, q>`` for real q: real-part rows, then
    imaginary-part rows (whose right-hand side is 0)."""
    phi = fourier_rows(m, freqs).vectors
    rows = np.conj(phi)
    return np.vstack([rows.real, rows.imag])


def _batched_fits(A: np.ndarray, b: np.ndarray, supports: np.ndarray, chunk: int = 20000):
    """Least-squares fits of ``A[:, T] c = b`` for every row T of `supports`."""
    for start in range(0, len(supports), chunk):
        T = supports[start:start + chunk]
        sub = np.transpose(A[:, T], (1, 0, 2))  # (c, R, s)
        coef = np.linalg.pinv(sub) @ b
        res = np.linalg.norm(np.einsum("crs,cs->cr", sub, coef) - b, axis=1)
        yield T, coef, res


def recover_autocorrelation(y, freqs, m: int, s_max: int | None = None, k: int | None = None,
                            exploit_symmetry: bool = False,
                            max_supports: int = DEFAULT_MAX_SUPPORTS) -> AutocorrRecovery:
    """Sparsest ``q`` (with ``q[M] = 0``) satisfying ``y_n = <phi_n, q>``.

    Parameters
    ----------
    y : array_like, shape (N,)
        Fourier magnitude measurements.
    freqs : sequence of int
        Frequency indices ``k_n`` in ``[0, 2M)``.
    m : int
        Signal length M.
    s_max : int, optional
        Largest ``||q||_0`` to search; defaults to ``k^2 - k + 1`` when the
        signal sparsity `k` is given, otherwise ``2M - 1``.
    exploit_symmetry : bool
        Impose ``q[j] = q[2M - j]`` and solve for ``q[0..M-1]`` only.

    Raises
    ------
    NoSolutionError
        No ``q`` with at most `s_max` nonzeros fits.
    """
    y = np.asarray(y, dtype=float)
    freqs = tuple(int(f) for f in freqs)
    if y.shape != (len(freqs),):
        raise ValueError("need one measurement per frequency")
    if s_max is None:
        s_max = k * k - k + 1 if k is not None else 2 * m - 1
    A = fourier_system(m, freqs)
    b = np.concatenate([y, np.zeros(len(freqs))])
    tol = LIN_RTOL * max(np.linalg.norm(y), 1e-300)
    ztol = 1e-9 * max(np.max(np.abs(y), initial=0.0), 1e-300)

    if exploit_symmetry:
        cols = [A[:, 0]] + [A[:, j] + A[:, 2 * m - j] for j in range(1, m)]
        B = np.column_stack(cols)
        weights = np.array([1] + [2] * (m - 1))
    else:
        keep = [j for j in range(2 * m) if j != m]
        B = A[:, keep]
        weights = np.ones(len(keep), dtype=int)

    def expand(coef_full):
        q = np.zeros(2 * m)
        if exploit_symmetry:
            q[:m] = coef_full
            q[m + 1:] = coef_full[1:][::-1]
        else:
            q[keep] = coef_full
        return q

    n_unknowns = B.shape[1]
    solutions = []
    if np.linalg.matrix_rank(B) == n_unknowns:
        # unique solution overall, so it is also the sparsest one
        coef = np.linalg.lstsq(B, b, rcond=None)[0]
        if np.linalg.norm(B @ coef - b) <= tol:
            coef[np.abs(coef) <= ztol] = 0.0
            if int(weights[coef != 0].sum()) <= s_max:
                solutions.append(expand(coef))
    else:
        solutions = _enumerate_sparsest(B, b, weights, s_max, tol, ztol, max_supports, expand)

    if not solutions:
        raise NoSolutionError(f"no arrangement with at most {s_max} nonzeros fits the measurements")
    q = solutions[0]
    sp = int(np.count_nonzero(q))
    flags = []
    unique = len(solutions) == 1
    if not unique:
        flags.append("non-unique")
    if not isprime(len(freqs)) or 2 * sp > len(freqs):
        flags.append("hypothesis-violated")
    sym = _is_centro(q, m)
    if not sym:
        flags.append("not-centro-symmetric")
    residual = float(np.linalg.norm(A @ q - b))
    return AutocorrRecovery(q, solutions, sp, unique, sym, residual, flags)


def _enumerate_sparsest(B, b, weights, s_max, tol, ztol, max_supports, expand):
    ncols = B.shape[1]
    visited = 0
    for w in range(0, s_max + 1):
        found = []
        if w == 0:
            if np.linalg.norm(b) <= tol:
                return [expand(np.zeros(ncols))]
            continue
        for supports in _supports_of_weight(weights, w):
            visited += len(supports)
            if visited > max_supports:
                raise EnumerationCapError(f"more than {max_supports} supports needed")
            for T, coef, res in _batched_fits(B, b, supports):
                ok = (res <= tol) & np.all(np.abs(coef) > ztol, axis=1)
                for t, c in zip(T[ok], coef[ok]):
                    full = np.zeros(ncols)
                    full[t] = c
                    q = expand(full)
                    if not any(np.allclose(q, z, atol=1e-7 * max(1.0, np.max(np.abs(z)))) for z in found):
                        found.append(q)
        if found:
            return found
    return []


def _supports_of_weight(weights, w):
    """Index arrays of column subsets whose weights sum to `w`."""
    ones = [j for j, wt in enumerate(weights) if wt == 1]
    twos = [j for j, wt in enumerate(weights) if wt == 2]
    for n1 in range(min(len(ones), w) + 1):
        if (w - n1) % 2 or (w - n1) // 2 > len(twos):
            continue
        n2 = (w - n1) // 2
        combos = [a + b for a in itertools.combinations(ones, n1)
                  for b in itertools.combinations(twos, n2)]
        if combos:
            yield np.array([sorted(c) for c in combos], dtype=np.int64)


# --------------------------------------------------------------------------
# stage 2: signal from its autocorrelation

def _turnpike(lags: set, k: int):
    """Point sets {0 = p_0 < ... < p_{k-1}} whose pairwise differences are
    exactly the distinct values in `lags` (classic backtracking)."""
    span = max(lags)
    results = []

    def place(points, remaining):
        if len(points) == k:
            if not remaining:
                results.append(sorted(points))
            return
        if not remaining:
            return
        d = max(remaining)
        for p in {d, span - d}:
            if p in points:
                continue
            diffs = {abs(p - q) for q in points}
            if len(diffs) == len(points) and diffs <= remaining:
                place(points | {p}, remaining - diffs)

    place({0, span}, lags - {span})
    unique = []
    for r in results:
        if r not in unique:
            unique.append(r)
    return unique


def _general_supports(lags: set, k: int, span: int, limit: int):
    """All supports {0, ..., span} of size k whose difference set covers
    `lags` (allows lags that cancel to zero)."""
    count = 0
    for inner in itertools.combinations(range(1, span), k - 2):
        count += 1
        if count > limit:
            raise EnumerationCapError(f"more than {limit} candidate supports")
        pts = (0,) + inner + (span,)
        diffs = {b - a for a, b in itertools.combinations(pts, 2)}
        if lags <= diffs:
            yield list(pts)


def _fit_values(points, pos_lags: np.ndarray, tol: float, ztol: float):
    """Signals on `points` whose autocorrelation matches `pos_lags`
    (nonnegative lags), one per consistent sign pattern."""
    k = len(points)
    span = points[-1]
    by_lag = {l: [] for l in range(span + 1)}
    for i in range(k):
        for j in range(i + 1):
            by_lag[points[i] - points[j]].append((i, j))
    target = pos_lags[: span + 1]
    if np.any(np.abs(pos_lags[span + 1:]) > ztol):
        return []
    ii = np.array([i for l in range(span + 1) for i, _ in by_lag[l]], dtype=np.int64)
    jj = np.array([j for l in range(span + 1) for _, j in by_lag[l]], dtype=np.int64)
    owner = np.array([l for l in range(span + 1) for _ in by_lag[l]], dtype=np.int64)

    def fun(v):
        return np.bincount(owner, weights=v[ii] * v[jj], minlength=span + 1) - target

    def jac(v):
        J = np.zeros((span + 1, k))
        np.add.at(J, (owner, ii), v[jj])
        np.add.at(J, (owner, jj), v[ii])
        return J

    # log-magnitudes from lags produced by a single pair
    rows, rhs = [], []
    for l in range(1, span + 1):
        if len(by_lag[l]) == 1 and abs(target[l]) > ztol:
            i, j = by_lag[l][0]
            r = np.zeros(k)
            r[i] += 1
            r[j] += 1
            rows.append(r)
            rhs.append(math.log(abs(target[l])))
    mags = np.full(k, math.sqrt(max(target[0], 0.0) / k))
    if rows:
        sol, _, rank, _ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
        if rank == k:
            mags = np.exp(sol)

    found = []
    if k == 2:
        # closed form; equal magnitudes are a double root that slows the solver
        p = target[span]
        plus, minus = target[0] + 2 * p, target[0] - 2 * p
        # a discriminant within the linear tolerance is a double root
        s = math.sqrt(plus) if plus > tol else 0.0
        d = math.sqrt(minus) if minus > tol else 0.0
        v = np.array([(s + d) / 2, (s - d) / 2])
        if np.linalg.norm(fun(v)) <= tol and np.all(np.abs(v) > ztol):
            found.append(v)
        return found
    for pattern in itertools.product((1.0, -1.0), repeat=k - 1):
        v0 = mags * np.array((1.0,) + pattern)
        if np.linalg.norm(fun(v0)) > tol:
            v0 = least_squares(fun, v0, jac=jac, method="lm" if span + 1 >= k else "trf",
                               xtol=1e-15, ftol=1e-15, gtol=1e-15).x
        if np.linalg.norm(fun(v0)) <= tol and np.all(np.abs(v0) > ztol):
            found.append(v0)
    return found


def all_signals_from_autocorrelation(a, k: int, k_cap: int = 5, tol: float | None = None,
                                     max_supports: int = DEFAULT_MAX_SUPPORTS) -> list:
    """Every k-sparse signal (up to sign, mirror and shift) with
    autocorrelation `a`, each left-justified and canonicalized."""
    a = np.asarray(a, dtype=float)
    if len(a) % 2 != 1:
        raise ValueError("autocorrelation must have odd length 2M-1")
    m = (len(a) + 1) // 2
    if k > max(k_cap, 6):
        raise ValueError(f"k = {k} exceeds the supported cap {k_cap}")
    if k == 6:
        warnings.warn("k = 6: equal-valued signals are only determined almost surely",
                      stacklevel=2)
    if not 0 <= k <= m:
        raise ValueError(f"k must lie in [0, {m}]")
    pos = a[m - 1:]
    if pos[0] < 0:
        raise ValueError("a(0) < 0: no real signal has this autocorrelation")
    if tol is None:
        tol = LIN_RTOL * max(np.linalg.norm(a), 1e-300)
    ztol = 1e-9 * max(pos[0], 1e-300)

    if k == 0:
        if np.all(np.abs(pos) <= tol):
            return [np.zeros(m)]
        raise NoSolutionError("nonzero autocorrelation cannot come from the zero signal")
    lags = {l for l in range(1, m) if abs(pos[l]) > ztol}
    if k == 1:
        if lags:
            raise NoSolutionError("a 1-sparse signal has no nonzero lags")
        x = np.zeros(m)
        x[0] = math.sqrt(pos[0])
        return [x]
    if not lags:
        raise NoSolutionError(f"no nonzero lags, so no {k}-sparse signal fits")
    if len(lags) > k * (k - 1) // 2:
        raise NoSolutionError(f"{len(lags)} nonzero lags exceed what a {k}-sparse signal has")

    if len(lags) == k * (k - 1) // 2:
        supports = _turnpike(lags, k)
    else:
        supports = list(_general_supports(lags, k, max(lags), max_supports))

    signals = []
    for pts in supports:
        for vals in _fit_values(pts, pos, tol, ztol):
            x = np.zeros(m)
            x[pts] = vals
            x = canonicalize(x, circular=False)[0]
            if not any(equivalent_under_invariances(x, z, circular=False,
                                                    tol=1e-7 * max(1.0, np.max(np.abs(z))))
                       for z in signals):
                signals.append(x)
    if not signals:
        raise NoSolutionError(f"no {k}-sparse signal has this autocorrelation")
    return signals


def signal_from_autocorrelation(a, k: int, **kwargs):
    """A k-sparse signal with autocorrelation `a`, in canonical form.

    Returns
    -------
    x : ndarray
        Left-justified canonical representative; ``autocorrelation(x)``
        matches `a`.
    multiple : bool
        True when signals not related by sign, mirror or shift share `a`.
    """
    signals = all_signals_from_autocorrelation(a, k, **kwargs)
    return signals[0], len(signals) > 1


# --------------------------------------------------------------------------
# full pipeline

def default_freqs(n: int, m: int, seed: int | None = None) -> tuple:
    """``{0, ..., N-1}``, or a seeded random N-subset of ``[0, 2M)``."""
    if n > 2 * m:
        raise ValueError(f"N = {n} frequencies exceed the 2M = {2 * m} available")
    if seed is None:
        return tuple(range(n))
    from .ensembles import keyed_uniforms

    u = keyed_uniforms(seed, 0, 2 * m)
    return tuple(sorted(int(i) for i in np.argsort(u, kind="stable")[:n]))


def fmm_recover(y, freqs, m: int, k: int, exploit_symmetry: bool = False,
                **kwargs) -> RecoveryReport:
    """Recover a k-sparse signal from Fourier magnitudes (up to sign, mirror
    and shift).

    The report's `flags` collect warnings from both stages; the condition
    report for the recovered signal is stored under ``details["conditions"]``.
    """
    y = np.asarray(y, dtype=float)
    freqs = tuple(int(f) for f in freqs)
    stage1 = recover_autocorrelation(y, freqs, m, k=k, exploit_symmetry=exploit_symmetry)
    flags = [f"autocorrelation:{f}" for f in stage1.flags]
    # only a centro-symmetric arrangement can come from a real signal
    candidates = [q for q in stage1.solutions if _is_centro(q, m)] or [stage1.q]
    signals, failure = [], None
    for q in candidates:
        a = np.concatenate([q[1:m][::-1], q[:m]])
        try:
            found = all_signals_from_autocorrelation(a, k, **kwargs)
        except NoSolutionError as exc:
            failure = exc
            continue
        for x in found:
            if not any(equivalent_under_invariances(x, z, circular=False,
                                                    tol=1e-7 * max(1.0, np.max(np.abs(z))))
                       for z in signals):
                signals.append(x)
    if not signals:
        raise failure
    x_hat = signals[0]
    if len(signals) > 1:
        flags.append("signal:multiple")
    cond = check_fmm_conditions(x_hat, len(freqs))
    flags += [f"condition:{r}" for r in cond.reasons]
    residual = float(np.linalg.norm(intensity_measure(fourier_rows(m, freqs), x_hat) - y))
    return RecoveryReport(x_hat, sparsity(x_hat), alternates=signals[1:], residual=residual,
                          flags=flags, details={"conditions": cond, "autocorrelation": stage1})
