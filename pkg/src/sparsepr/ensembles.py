"""Measurement ensembles and the intensity map ``y_n = |<phi_n, x>|^2``.

Gaussian ensembles are reproducible row by row: row ``n`` of
``gaussian_ensemble(M, N, seed)`` depends only on ``(seed, n)``. Each row is
drawn from a Philox counter-based generator keyed by the pair
``(seed, n)``; ``2 * ceil(M / 2)`` uniform doubles ``u`` in ``[0, 1)`` are
mapped to normals with the Box-Muller transform

    z1 = sqrt(-2 log(1 - u1)) cos(2 pi u2)
    z2 = sqrt(-2 log(1 - u1)) sin(2 pi u2)

taking consecutive ``(u1, u2)`` pairs and truncating to ``M`` values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import _as_vector

UINT64_MASK = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class MeasurementEnsemble:
    """An ordered set of N measurement vectors of common length L.

    ``vectors`` has shape ``(N, L)``. For the ``"fourier"`` kind the signal
    length `m` is ``L // 2`` (signals are zero padded before measuring);
    otherwise ``m == L``.
    """

    vectors: np.ndarray
    kind: str = "explicit"
    m: int = 0
    seed: int | None = None
    freqs: tuple | None = None

    def __post_init__(self):
        v = np.array(self.vectors)
        if v.ndim != 2:
            raise ValueError(f"ensemble must be a 2-D array, got shape {v.shape}")
        if not np.iscomplexobj(v):
            v = v.astype(float)
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        if not self.m:
            object.__setattr__(self, "m", v.shape[1] // 2 if self.kind == "fourier" else v.shape[1])

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def length(self) -> int:
        return self.vectors.shape[1]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.vectors)

    def __len__(self):
        return self.n

    def __array__(self, dtype=None, copy=None):
        return self.vectors if dtype is None else self.vectors.astype(dtype)

    def __eq__(self, other):
        return (isinstance(other, MeasurementEnsemble) and self.kind == other.kind
                and self.m == other.m and self.seed == other.seed and self.freqs == other.freqs
                and np.array_equal(self.vectors, other.vectors))


def as_ensemble(phi) -> MeasurementEnsemble:
    if isinstance(phi, MeasurementEnsemble):
        return phi
    return MeasurementEnsemble(np.asarray(phi))


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= UINT64_MASK:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def keyed_uniforms(seed: int, stream: int, size: int) -> np.ndarray:
    """`size` uniform doubles from Philox keyed by ``(seed, stream)``."""
    key = np.array([_check_seed(seed), _check_seed(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).random(size)


def keyed_normals(seed: int, stream: int, size: int) -> np.ndarray:
    """Standard normals via Box-Muller on `keyed_uniforms`."""
    half = (size + 1) // 2
    u = keyed_uniforms(seed, stream, 2 * half).reshape(half, 2)
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    theta = 2.0 * np.pi * u[:, 1]
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)]).ravel()[:size]


def gaussian_ensemble(m: int, n: int, seed: int) -> MeasurementEnsemble:
    """N i.i.d. standard normal vectors in R^M, reproducible from `seed`."""
    if m < 1 or n < 1:
        raise ValueError("need M >= 1 and N >= 1")
    seed = _check_seed(seed)
    rows = np.array([keyed_normals(seed, i, m) for i in range(n)])
    return MeasurementEnsemble(rows, kind="gaussian", m=m, seed=seed)


def fourier_rows(m: int, freqs) -> MeasurementEnsemble:
    """Rows of the length-2M DFT matrix, ``phi_n[j] = exp(-2 pi i j k_n / 2M)``."""
    freqs = tuple(int(k) for k in freqs)
    if m < 1:
        raise ValueError("need M >= 1")
    bad = [k for k in freqs if not 0 <= k < 2 * m]
    if bad:
        raise ValueError(f"frequencies out of range [0, {2 * m - 1}]: {bad}")
    if len(set(freqs)) != len(freqs):
        raise ValueError("frequencies must be distinct")
    # reduce j*k mod 2M in integers so e.g. the k_n = M row is exactly +-1
    phase = np.mod(np.outer(np.array(freqs, dtype=np.int64), np.arange(2 * m)), 2 * m)
    rows = np.exp(-2j * np.pi * phase / (2 * m))
    rows[phase == 0] = 1.0
    rows[2 * phase == 2 * m] = -1.0
    return MeasurementEnsemble(rows, kind="fourier", m=m, freqs=freqs)


def explicit_ensemble(vectors) -> MeasurementEnsemble:
    return MeasurementEnsemble(np.asarray(vectors), kind="explicit")


def measure_inner(phi, x) -> np.ndarray:
    """The inner products ``<phi_n, x> = sum_j conj(phi_n[j]) x[j]``.

    Fourier ensembles zero pad `x` from length M to 2M first.
    """
    phi = as_ensemble(phi)
    x = _as_vector(x)
    if phi.kind == "fourier":
        if len(x) != phi.m:
            raise ValueError(f"signal length {len(x)} != M = {phi.m} for a Fourier ensemble")
        x = np.concatenate([x, np.zeros(phi.m)])
    elif len(x) != phi.length:
        raise ValueError(f"signal length {len(x)} != ensemble vector length {phi.length}")
    return np.conj(phi.vectors) @ x


def intensity_measure(phi, x) -> np.ndarray:
    """Intensity measurements ``|<phi_n, x>|^2`` (length N, nonnegative)."""
    z = measure_inner(phi, x)
    return (z.real ** 2 + z.imag ** 2) if np.iscomplexobj(z) else z ** 2


def random_sparse_signal(m: int, k: int, seed: int, stream: int = 0,
                         integer: bool = False, low: int = 1, high: int = 5) -> np.ndarray:
    """A k-sparse length-M signal with a uniformly random support.

    Values are standard normal, or integers in ``+-[low, high]`` when
    `integer` is set.
    """
    if not 0 <= k <= m:
        raise ValueError("need 0 <= k <= M")
    u = keyed_uniforms(seed, stream, m + 2 * k)
    supp = np.sort(np.argsort(u[:m], kind="stable")[:k])
    x = np.zeros(m)
    if integer:
        mags = low + np.floor(u[m:m + k] * (high - low + 1))
        signs = np.where(u[m + k:] < 0.5, -1.0, 1.0)
        x[supp] = signs * mags
    else:
        x[supp] = keyed_normals(seed, stream ^ (1 << 63), k)
    return x


def random_collision_free_signal(m: int, k: int, seed: int, stream: int = 0, low: int = 1,
                                 high: int = 5, mode: str = "strict",
                                 max_tries: int = 10_000) -> np.ndarray:
    """Integer-valued k-sparse signal whose support is collision free.

    Draws `random_sparse_signal` on streams ``stream, stream + 1, ...`` until
    the support passes `is_collision_free` in the given `mode`.
    """
    from .signal import is_collision_free

    for t in range(max_tries):
        x = random_sparse_signal(m, k, seed, (stream + t) & UINT64_MASK, integer=True,
                                 low=low, high=high)
        if is_collision_free(x, mode=mode)[0]:
            return x
    raise ValueError(f"no collision-free {k}-sparse support of length {m} found "
                     f"in {max_tries} draws")
