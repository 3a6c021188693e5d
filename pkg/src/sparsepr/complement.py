"""Exhaustive complement-property and k-complement-property checks.

A set of rows "spans" when its smallest singular value exceeds
``rtol * sigma_max`` of the full (restricted) ensemble matrix. Rows of the
ensemble are split into ``S`` and its complement; only splits with the last
row in the complement are visited, since ``S`` and ``S^c`` play symmetric
roles.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .ensembles import as_ensemble

DEFAULT_MAX_N = 24
DEFAULT_MAX_K_CHOOSE = 5000
RANK_RTOL = 1e-8


class EnumerationCapError(ValueError):
    """Raised when an exhaustive check would exceed its enumeration cap."""


@dataclass(frozen=True, eq=False)
class ViolationCertificate:
    """Witness that the (k-)complement property fails.

    ``S`` and ``K`` are sorted index tuples. `u` is a unit vector in R^|K|
    (or C^|K|) orthogonal to every restricted row in ``S``; `v` likewise for
    the complement of ``S``.
    """

    S: tuple
    K: tuple
    u: np.ndarray
    v: np.ndarray
    n: int

    @property
    def S_complement(self) -> tuple:
        return tuple(i for i in range(self.n) if i not in self.S)

    def check(self, phi, atol: float = 1e-8) -> bool:
        """Verify the certificate's orthogonality claims against `phi`."""
        rows = np.asarray(as_ensemble(phi).vectors)[:, list(self.K)]
        ok_u = np.all(np.abs(np.conj(rows[list(self.S)]) @ self.u) <= atol)
        ok_v = np.all(np.abs(np.conj(rows[list(self.S_complement)]) @ self.v) <= atol)
        unit = np.isclose(np.linalg.norm(self.u), 1.0) and np.isclose(np.linalg.norm(self.v), 1.0)
        return bool(ok_u and ok_v and unit)


def _sign_normalize(u: np.ndarray) -> np.ndarray:
    """Scale `u` so its first clearly nonzero entry is real and positive."""
    idx = np.flatnonzero(np.abs(u) > 1e-12 * np.max(np.abs(u)))
    if len(idx) == 0:
        return u
    first = u[idx[0]]
    return u * (np.conj(first) / abs(first)) + 0.0


def _null_vector(rows: np.ndarray, dim: int, avoid: np.ndarray | None = None) -> np.ndarray:
    """Unit vector orthogonal (in the conj inner product) to every row.

    When `avoid` is given, a null vector that is not parallel to it is
    preferred.
    """
    a = np.conj(rows) if len(rows) else np.zeros((1, dim))
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    smax = s[0] if len(s) and s[0] > 0 else 1.0
    rank = int(np.sum(s > RANK_RTOL * smax)) if len(rows) else 0
    basis = np.conj(vh[rank:])  # rows of vh span the row space then the null space
    if len(basis) == 0:
        basis = np.conj(vh[-1:])
    u = basis[-1]
    if avoid is not None and len(basis) > 1:
        # stay inside the null space but drop the direction closest to
        # `avoid`, so the pair is independent
        p = basis.T @ (np.conj(basis) @ avoid)  # projection of `avoid` onto the null space
        if np.linalg.norm(p) > 1e-12:
            p = p / np.linalg.norm(p)
            for b in basis[::-1]:
                w = b - p * np.vdot(p, b)
                if np.linalg.norm(w) > 1e-6:
                    u = w
                    break
    return _sign_normalize(u / np.linalg.norm(u))


@functools.lru_cache(maxsize=64)
def _subsets(n: int, s: int):
    """All size-s subsets of range(n) as an index array and their bit masks."""
    idx = np.array(list(itertools.combinations(range(n), s)), dtype=np.int64).reshape(-1, s)
    masks = (np.int64(1) << idx).sum(axis=1) if s else np.zeros(1, dtype=np.int64)
    return idx, masks


def _deficient(blocks: np.ndarray, thresholds: np.ndarray, chunk: int = 100_000) -> np.ndarray:
    """Rank-deficiency flag of every row subset, for a stack of matrices.

    `blocks` has shape (B, N, dim); the result has shape (B, 2**N) and is
    indexed by subset bit mask. Subsets with fewer than `dim` rows are
    deficient without computing anything.
    """
    nb, n, dim = blocks.shape
    out = np.ones((nb, 1 << n), dtype=bool)
    step = max(1, chunk // nb)
    for s in range(dim, n + 1):
        idx, masks = _subsets(n, s)
        for start in range(0, len(masks), step):
            sl = slice(start, start + step)
            sv = np.linalg.svd(blocks[:, idx[sl]], compute_uv=False)  # (B, c, dim)
            out[:, masks[sl]] = sv[..., -1] <= thresholds[:, None]
    return out


def _check_restrictions(vectors: np.ndarray, supports, rtol: float):
    """Search all row splits for each coordinate restriction in `supports`.

    Returns None when every restriction has the complement property,
    otherwise ``(K, S)`` for the first violation, restrictions taken in the
    given order and splits in increasing bit-mask order of ``S``.
    """
    n = vectors.shape[0]
    full = (1 << n) - 1
    half = np.arange(1 << (n - 1), dtype=np.int64)  # S never holds the last row
    batch = max(1, (1 << 14) >> n)
    for start in range(0, len(supports), batch):
        ks = supports[start:start + batch]
        blocks = np.stack([vectors[:, list(k)] for k in ks])
        smax = np.array([np.linalg.norm(b, 2) for b in blocks])
        thresholds = rtol * np.where(smax > 0, smax, 1.0)
        defic = _deficient(blocks, thresholds)
        bad = defic[:, half] & defic[:, full ^ half]
        hits = np.argwhere(bad)
        if len(hits):
            b, j = hits[0]
            S = tuple(i for i in range(n) if (int(half[j]) >> i) & 1)
            return ks[b], S
    return None


def _certificate(vectors: np.ndarray, K: tuple, S: tuple) -> ViolationCertificate:
    n = vectors.shape[0]
    rows = vectors[:, list(K)]
    Sc = [i for i in range(n) if i not in S]
    dim = len(K)
    if np.linalg.matrix_rank(rows, tol=RANK_RTOL * max(np.linalg.norm(rows, 2), 1e-300)) < dim:
        # the rows do not span at all: S = {} fails, and u is unconstrained
        v = _null_vector(rows, dim)
        u = _null_vector(np.zeros((0, dim)), dim, avoid=v)
        return ViolationCertificate((), tuple(K), u, v, n)
    v = _null_vector(rows[Sc], dim)
    u = _null_vector(rows[list(S)], dim, avoid=v)
    return ViolationCertificate(tuple(S), tuple(K), u, v, n)


def _prepass_certificate(vectors: np.ndarray, K: tuple) -> ViolationCertificate:
    """Certificate for N < 2k - 1: S = first k-1 rows, both sides too small."""
    k = len(K)
    return _certificate(vectors, K, tuple(range(min(k - 1, vectors.shape[0]))))


def has_complement_property(phi, max_n: int = DEFAULT_MAX_N, rtol: float = RANK_RTOL,
                            prepass: bool = True):
    """Check whether every row split leaves one side spanning the space.

    Works for real and complex ensembles (spanning over the matching field).
    With fewer than ``2M - 1`` vectors the property always fails; `prepass`
    answers that case without enumerating (set it to False to search anyway).

    Returns
    -------
    ok : bool
    certificate : ViolationCertificate or None
    """
    phi = as_ensemble(phi)
    vectors = np.asarray(phi.vectors)
    dim = vectors.shape[1]
    return _check(vectors, [tuple(range(dim))], max_n, rtol, prepass)


def has_k_complement_property(phi, k: int, max_n: int = DEFAULT_MAX_N,
                              max_k_choose: int = DEFAULT_MAX_K_CHOOSE, rtol: float = RANK_RTOL,
                              prepass: bool = True):
    """Complement property for every restriction to k coordinates.

    ``k == M`` reduces to `has_complement_property`; ``k == 0`` holds
    vacuously.
    """
    phi = as_ensemble(phi)
    vectors = np.asarray(phi.vectors)
    m = vectors.shape[1]
    if not 0 <= k <= m:
        raise ValueError(f"k must lie in [0, {m}], got {k}")
    if k == 0:
        return True, None
    count = math.comb(m, k)
    if count > max_k_choose:
        raise EnumerationCapError(f"C({m}, {k}) = {count} exceeds max_k_choose = {max_k_choose}")
    return _check(vectors, itertools.combinations(range(m), k), max_n, rtol, prepass)


def _check(vectors, supports, max_n, rtol, prepass=True):
    n = vectors.shape[0]
    supports = list(supports)
    dim = len(supports[0])
    if prepass and n < 2 * dim - 1:
        return False, _prepass_certificate(vectors, supports[0])
    if n > max_n:
        raise EnumerationCapError(f"N = {n} exceeds max_n = {max_n}")
    hit = _check_restrictions(vectors, supports, rtol)
    if hit is None:
        return True, None
    K, S = hit
    return False, _certificate(vectors, K, S)


def ambiguity_from_violation(phi, cert: ViolationCertificate):
    """Two signals with identical intensity measurements, built from `cert`.

    With ``u`` and ``v`` embedded on the coordinates ``K``, the signals
    ``x1 = (u + v) / 2`` and ``x2 = (u - v) / 2`` satisfy
    ``|<phi_n, x1>|^2 - |<phi_n, x2>|^2 = <phi_n, u> <phi_n, v> = 0``.
    """
    phi = as_ensemble(phi)
    if phi.is_complex:
        raise ValueError("ambiguity construction needs a real ensemble")
    u = np.asarray(cert.u)
    v = np.asarray(cert.v)
    if np.iscomplexobj(u) or np.iscomplexobj(v):
        if np.max(np.abs(np.imag(u)), initial=0) > 1e-12 or np.max(np.abs(np.imag(v)), initial=0) > 1e-12:
            raise ValueError("certificate vectors must be real")
        u, v = u.real, v.real
    if np.linalg.matrix_rank(np.vstack([u, v]), tol=1e-9) < 2:
        raise ValueError("degenerate certificate: u and v are parallel")
    m = phi.length
    x1 = np.zeros(m)
    x2 = np.zeros(m)
    K = list(cert.K)
    x1[K] = (u + v) / 2
    x2[K] = (u - v) / 2
    return x1, x2
