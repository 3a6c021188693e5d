"""Exact l0 phase retrieval for real ensembles by support enumeration.

On a candidate support ``K`` the measurements are linear in the lifted
matrix ``X = x_K x_K^T``::

    y_n = phi_{n,K}^T X phi_{n,K}

so each support costs one small least-squares solve over symmetric
matrices followed by a rank-one test. Supports are visited by increasing
size, and every support at the first feasible size is solved, so the
returned alternates are complete at that size.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .complement import EnumerationCapError, has_k_complement_property
from .ensembles import as_ensemble, intensity_measure, keyed_normals
from .signal import _as_vector, equivalent_under_invariances, sparsity

RES_RTOL = 1e-8
PSD_RTOL = 1e-8
RANK1_RTOL = 1e-6
DEFAULT_MAX_SUPPORTS = 200_000
MAX_SIGN_ROWS = 16
ZERO_RTOL = 1e-13


class NoSolutionError(RuntimeError):
    """No signal with at most `k_max` nonzeros reproduces the measurements."""


@dataclass
class RecoveryReport:
    """Outcome of an exact recovery.

    `solution` is the first solution in support order, with its
    largest-magnitude entry positive; `alternates` holds the other solutions
    of the same sparsity that are not equal to ``+-solution``. When a
    support carries a whole affine family of solutions ("continuum" flag),
    only one representative per family is listed and the support is named
    in ``details["continuum_supports"]``.
    """

    solution: np.ndarray | None
    sparsity_found: int
    alternates: list = field(default_factory=list)
    certificate_checked: bool | None = None
    residual: float = 0.0
    flags: list = field(default_factory=list)
    details: dict = field(default_factory=dict, repr=False)

    @property
    def unique(self) -> bool:
        return self.solution is not None and not self.alternates


def sign_canonical(x) -> np.ndarray:
    """Representative of ``{x, -x}`` whose largest-magnitude entry is positive."""
    x = _as_vector(x)
    if not np.any(x):
        return x + 0.0
    i = int(np.argmax(np.abs(x)))
    return (x if x[i] > 0 else -x) + 0.0


def lifted_design(rows: np.ndarray) -> np.ndarray:
    """Design matrix of ``y_n = r_n^T X r_n`` in the upper-triangle unknowns.

    Column order follows ``np.triu_indices(s)``; off-diagonal columns carry
    the factor 2.
    """
    rows = np.atleast_2d(rows)
    s = rows.shape[1]
    iu, ju = np.triu_indices(s)
    return rows[:, iu] * rows[:, ju] * np.where(iu == ju, 1.0, 2.0)


def unlift(theta: np.ndarray, s: int) -> np.ndarray:
    X = np.zeros((s, s))
    iu, ju = np.triu_indices(s)
    X[iu, ju] = theta
    X[ju, iu] = theta
    return X


def _rank_one_factor(X: np.ndarray):
    """``sqrt(l1) * e1`` when X is PSD and numerically rank one, else None."""
    w, V = np.linalg.eigh(X)
    l1 = w[-1]
    if l1 <= 0:
        return None
    if w[0] < -PSD_RTOL * l1:
        return None
    if len(w) > 1 and w[-2] > RANK1_RTOL * l1:
        return None
    return np.sqrt(l1) * V[:, -1]


def _multistart(rows: np.ndarray, y: np.ndarray, tol: float, key: int) -> list:
    """Rank-one solutions on an underdetermined support by Gauss-Newton.

    Starts are every sign pattern (first entry +) at a common scale plus a
    few keyed random points; converged points are kept when they reproduce
    `y` within `tol`.
    """
    s = rows.shape[1]
    scale = math.sqrt(max(np.mean(y), 1e-300) / max(np.mean(np.sum(rows, axis=1) ** 2), 1e-300))
    starts = [scale * np.array((1.0,) + p) for p in itertools.product((1.0, -1.0), repeat=s - 1)]
    starts += [scale * keyed_normals(key, t, s) for t in range(4)]

    def fun(x):
        return (rows @ x) ** 2 - y

    def jac(x):
        return 2.0 * (rows @ x)[:, None] * rows

    method = "lm" if len(y) >= s else "trf"
    found = []
    for x0 in starts:
        x = least_squares(fun, x0, jac=jac, method=method, xtol=1e-15, ftol=1e-15, gtol=1e-15).x
        if np.linalg.norm(fun(x)) <= tol:
            found.append(x)
    return found


def _null_basis(rows: np.ndarray, s: int) -> np.ndarray:
    if len(rows) == 0:
        return np.eye(s)
    _, sv, vh = np.linalg.svd(rows)
    rank = int(np.sum(sv > 1e-10 * max(sv[0], 1e-300)))
    return vh[rank:].T


def _sign_patterns(rows: np.ndarray, y: np.ndarray, tol: float):
    """All solutions of ``(rows @ z)**2 = y`` (every y_n > 0) by sign
    enumeration: each pattern ``sigma`` turns the system into the linear one
    ``rows @ z = sigma * sqrt(y)``. The first sign is fixed to +1, which
    picks one of ``+-z``.

    Yields ``(z, null)`` where `null` spans the directions along which `z`
    may move (empty when the solution is isolated).
    """
    n, r = rows.shape
    root = np.sqrt(y)
    signs = np.array([(1.0,) + p for p in itertools.product((1.0, -1.0), repeat=n - 1)]).T
    rhs = root[:, None] * signs  # (n, P)
    u, sv, vh = np.linalg.svd(rows, full_matrices=False)
    rank = int(np.sum(sv > 1e-10 * max(sv[0], 1e-300)))
    pinv = (vh[:rank].T / sv[:rank]) @ u[:, :rank].T
    Z = pinv @ rhs
    lin_res = np.linalg.norm(rows @ Z - rhs, axis=0)
    null = vh[rank:].T
    for j in np.flatnonzero(lin_res <= 1e-9 * max(np.linalg.norm(root), 1e-300)):
        z = Z[:, j]
        if np.linalg.norm((rows @ z) ** 2 - y) <= tol:
            yield z, null


def _lifted_candidates(rows: np.ndarray, y: np.ndarray, tol: float, key: int):
    """Rank-one PSD solutions on one support.

    Returns ``(solutions, kind)`` with kind ``None`` for a determined lifted
    system, ``"underdetermined"`` when the lifted system is rank deficient
    (solved by sign enumeration instead), or ``"continuum"`` when some
    solutions are not isolated and only a representative is returned.

    Zero measurements are linear constraints ``<phi_n, x> = 0``; they are
    eliminated first, which also removes the double roots they cause. Only
    zeros at round-off level count: a small but genuine intensity below the
    residual tolerance must stay quadratic.
    """
    s = rows.shape[1]
    zero = np.abs(y) <= ZERO_RTOL * np.max(np.abs(y))
    Z = _null_basis(rows[zero], s)
    if Z.shape[1] == 0:
        return [], None
    rows, y = rows[~zero] @ Z, y[~zero]
    r = Z.shape[1]
    D = lifted_design(rows)
    theta, _, rank, _ = np.linalg.lstsq(D, y, rcond=None)
    if rank < D.shape[1]:
        if len(y) > MAX_SIGN_ROWS:
            return [Z @ z for z in _multistart(rows, y, tol, key)], "continuum"
        sols, kind = [], "underdetermined"
        for z, null in _sign_patterns(rows, y, tol):
            sols.append(Z @ z)
            if null.shape[1]:
                kind = "continuum"
        return sols, kind
    if np.linalg.norm(D @ theta - y) > tol:
        return [], None
    f = _rank_one_factor(unlift(theta, r))
    return ([] if f is None else [Z @ f]), None


def l0_recover(phi, y, k_max: int, max_supports: int = DEFAULT_MAX_SUPPORTS,
               check_certificate: bool = False) -> RecoveryReport:
    """Sparsest real signal(s) ``x`` with ``|<phi_n, x>|^2 = y_n``.

    Parameters
    ----------
    phi : MeasurementEnsemble or array_like, shape (N, M)
        Real measurement vectors.
    y : array_like, shape (N,)
        Intensity measurements.
    k_max : int
        Largest sparsity to try.
    max_supports : int
        Cap on the number of supports enumerated.
    check_certificate : bool
        Also test the ``2s``-complement property (``s`` = sparsity found,
        capped at M), which certifies uniqueness of the result.

    Raises
    ------
    NoSolutionError
        If nothing with at most `k_max` nonzeros fits.
    EnumerationCapError
        If more than `max_supports` supports would be needed.
    """
    phi = as_ensemble(phi)
    if phi.is_complex:
        raise ValueError("l0_recover needs a real ensemble")
    A = np.asarray(phi.vectors, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = A.shape
    if y.shape != (n,):
        raise ValueError(f"expected {n} measurements, got shape {y.shape}")
    if not 0 <= k_max <= m:
        raise ValueError(f"k_max must lie in [0, {m}]")
    total = sum(math.comb(m, s) for s in range(k_max + 1))
    if total > max_supports:
        raise EnumerationCapError(f"{total} supports exceed max_supports = {max_supports}")

    tol = RES_RTOL * np.linalg.norm(y)
    if np.linalg.norm(y) <= tol:
        report = RecoveryReport(np.zeros(m), 0, residual=float(np.linalg.norm(y)),
                                details={"continuum_supports": []})
        if check_certificate:
            report.certificate_checked = True
        return report

    flags, continua = [], []
    for s in range(1, k_max + 1):
        sols = []
        for K in itertools.combinations(range(m), s):
            rows = A[:, K]
            cands, kind = _lifted_candidates(rows, y, tol, key=sum(1 << i for i in K))
            if kind is not None and "unverified-underdetermined" not in flags:
                flags.append("unverified-underdetermined")
            if kind == "continuum":
                continua.append(K)
                if "continuum" not in flags:
                    flags.append("continuum")
            for xk in cands:
                x = np.zeros(m)
                x[list(K)] = xk
                if sparsity(np.where(np.abs(x) > 1e-9 * np.max(np.abs(x)), x, 0.0)) < s:
                    continue
                if np.linalg.norm(intensity_measure(A, x) - y) > tol:
                    continue
                x = sign_canonical(x)
                if any(equivalent_under_invariances(x, z, group="sign") for z in sols):
                    continue
                sols.append(x)
        if sols:
            report = RecoveryReport(sols[0], s, alternates=sols[1:], flags=flags,
                                    residual=float(np.linalg.norm(intensity_measure(A, sols[0]) - y)),
                                    details={"continuum_supports": [k for k in continua if len(k) == s]})
            if check_certificate:
                report.certificate_checked = has_k_complement_property(phi, min(2 * s, m))[0]
            return report
    raise NoSolutionError(f"no signal with at most {k_max} nonzeros fits the measurements")


class Uniqueness(enum.Enum):
    GUARANTEED = "GuaranteedUnique"
    EMPIRICAL = "EmpiricallyUnique"
    AMBIGUOUS = "Ambiguous"


@dataclass
class UniquenessVerdict:
    status: Uniqueness
    witness: tuple | None = None
    report: RecoveryReport | None = None


def verify_uniqueness(phi, x0, **kwargs) -> UniquenessVerdict:
    """Classify whether `x0` is the only signal of its sparsity fitting
    ``A(x0)``.

    Guaranteed when the ensemble has the ``2||x0||_0``-complement property
    (``M``-complement when ``2||x0||_0 > M``). Otherwise the exact search
    decides: a sparser or non-equivalent solution is returned as a witness
    pair ``(x0, other)``.
    """
    phi = as_ensemble(phi)
    x0 = _as_vector(x0)
    k = sparsity(x0)
    if has_k_complement_property(phi, min(2 * k, phi.length))[0]:
        return UniquenessVerdict(Uniqueness.GUARANTEED)
    report = l0_recover(phi, intensity_measure(phi, x0), k, **kwargs)
    for z in [report.solution] + report.alternates:
        if not equivalent_under_invariances(x0, z, group="sign", tol=1e-7 * max(1.0, np.max(np.abs(x0)))):
            return UniquenessVerdict(Uniqueness.AMBIGUOUS, (x0, z), report)
    return UniquenessVerdict(Uniqueness.EMPIRICAL, None, report)
