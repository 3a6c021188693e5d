"""Real sparse signals: support bookkeeping, autocorrelation, collisions and
canonical forms under the Fourier-magnitude invariance group.

Signals are plain 1-D numpy arrays everywhere in the package; `RealSignal`
is a small convenience wrapper that caches the support.

Autocorrelations are stored as length ``2M - 1`` arrays ordered by lag
``l = -(M-1), ..., M-1``, so lag ``l`` lives at index ``l + M - 1``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


def _as_vector(x) -> np.ndarray:
    x = np.asarray(getattr(x, "values", x), dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D signal, got shape {x.shape}")
    return x


def support(x) -> np.ndarray:
    """Indices of the exactly-nonzero entries of `x` (0-based, ascending)."""
    return np.flatnonzero(_as_vector(x) != 0)


def sparsity(x) -> int:
    """Number of nonzero entries, ``||x||_0``."""
    return int(np.count_nonzero(_as_vector(x)))


@dataclass(frozen=True)
class RealSignal:
    """A length-M real vector with its cached support."""

    values: np.ndarray
    support: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = _as_vector(self.values).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "support", support(v))

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __eq__(self, other):
        return isinstance(other, RealSignal) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def sparsity(self) -> int:
        return len(self.support)


# --------------------------------------------------------------------------
# autocorrelation

def autocorrelation(x) -> np.ndarray:
    """Autocorrelation ``a(l) = sum_s x(s) x(s+l)`` for ``|l| <= M-1``.

    Only the nonnegative lags are computed; the negative half is a mirror
    copy, so the result is exactly centro-symmetric.
    """
    x = _as_vector(x)
    m = len(x)
    if m == 0:
        raise ValueError("empty signal")
    pos = np.array([np.dot(x[: m - l], x[l:]) for l in range(m)])
    return np.concatenate([pos[:0:-1], pos])


def lag(a, l: int) -> float:
    """Value of the stored autocorrelation `a` at signed lag `l`."""
    a = np.asarray(a)
    m = (len(a) + 1) // 2
    if abs(l) > m - 1:
        raise IndexError(f"lag {l} outside [-{m - 1}, {m - 1}]")
    return a[l + m - 1]


def padded_arrangement(a) -> np.ndarray:
    """Length-2M arrangement ``[a(0), ..., a(M-1), 0, a(M-1), ..., a(1)]``.

    This is the circular (length 2M) layout of the autocorrelation whose DFT
    gives the zero-padded power spectrum.
    """
    a = np.asarray(a, dtype=float)
    if len(a) % 2 != 1:
        raise ValueError("autocorrelation must have odd length 2M-1")
    m = (len(a) + 1) // 2
    pos = a[m - 1:]
    return np.concatenate([pos, [0.0], pos[:0:-1]])


def autocorrelation_from_arrangement(q) -> np.ndarray:
    """Inverse of `padded_arrangement`, reading the nonnegative lags only."""
    q = np.asarray(q, dtype=float)
    if len(q) % 2 != 0:
        raise ValueError("arrangement must have even length 2M")
    m = len(q) // 2
    pos = q[:m]
    return np.concatenate([pos[:0:-1], pos])


def is_centro_symmetric(a, atol: float = 0.0) -> bool:
    a = np.asarray(a)
    return bool(np.all(np.abs(a - a[::-1]) <= atol))


# --------------------------------------------------------------------------
# collisions

def is_collision_free(x, mode: str = "index"):
    """Test whether `x` is collision free.

    Parameters
    ----------
    x : array_like
        Real signal.
    mode : {"index", "strict", "value"}
        ``"index"`` looks for four distinct support indices with
        ``i - j == k - l``. ``"strict"`` additionally rejects collisions that
        share an index (``i - j == j - l``), i.e. it demands that every
        ordered pair of support indices has its own difference. Only the
        strict form guarantees ``k^2 - k + 1`` nonzero autocorrelation lags.
        ``"value"`` applies the difference test to the signal values
        ``x(i) - x(j)`` instead of the indices.

    Returns
    -------
    ok : bool
    witness : tuple of int or None
        A colliding quadruple ``(i, j, k, l)`` with ``i > j``, ``k > l`` and
        ``(i, j) != (k, l)``; the lexicographically first one is reported.
    """
    x = _as_vector(x)
    supp = [int(i) for i in support(x)]
    if mode == "index":
        key, distinct = (lambda i: i), True
    elif mode == "strict":
        key, distinct = (lambda i: i), False
    elif mode == "value":
        key, distinct = (lambda i: x[i]), True
    else:
        raise ValueError(f"unknown collision mode {mode!r}")

    if distinct:
        candidates = itertools.permutations(supp, 4)
    else:
        pairs = [(i, j) for i in supp for j in supp if i > j]
        candidates = ((i, j, k, l) for (i, j), (k, l) in itertools.product(pairs, pairs)
                      if (i, j) < (k, l))
    for i, j, k, l in candidates:
        if i > j and k > l and key(i) - key(j) == key(k) - key(l):
            return False, (i, j, k, l)
    return True, None


# --------------------------------------------------------------------------
# invariance group

@dataclass(frozen=True)
class InvarianceAction:
    """Element of the group generated by sign flip, mirroring and shifts.

    Acting on a signal ``x``: mirror first (if set), then shift by `shift`,
    then multiply by `sign`.
    """

    sign: int = 1
    mirror: bool = False
    shift: int = 0

    def apply(self, x, circular: bool = True) -> np.ndarray:
        x = _as_vector(x)
        y = x[::-1] if self.mirror else x
        if circular:
            y = np.roll(y, self.shift)
        else:
            y = linear_shift(y, self.shift)
        return self.sign * y + 0.0

    def compose(self, other: "InvarianceAction", m: int) -> "InvarianceAction":
        """The action ``self . other`` (apply `other` first) for length `m`."""
        shift = self.shift - other.shift if self.mirror else self.shift + other.shift
        return InvarianceAction(self.sign * other.sign, self.mirror != other.mirror,
                                shift % m if m else 0)

    def inverse(self, m: int) -> "InvarianceAction":
        shift = self.shift if self.mirror else -self.shift
        return InvarianceAction(self.sign, self.mirror, shift % m if m else 0)


IDENTITY = InvarianceAction()


def linear_shift(x, shift: int) -> np.ndarray:
    """Shift `x` by `shift` positions with zero fill.

    Raises ValueError when a nonzero entry would leave the window.
    """
    x = _as_vector(x)
    out = np.zeros_like(x)
    m = len(x)
    if abs(shift) >= m:
        if np.any(x != 0):
            raise ValueError("linear shift moves support outside the window")
        return out
    if shift >= 0:
        if np.any(x[m - shift:] != 0) and shift > 0:
            raise ValueError("linear shift moves support outside the window")
        out[shift:] = x[: m - shift]
    else:
        if np.any(x[:-shift] != 0):
            raise ValueError("linear shift moves support outside the window")
        out[:shift] = x[-shift:]
    return out


def _orbit(x, group: str, circular: bool):
    m = len(x)
    signs = (1, -1)
    mirrors = (False, True) if group == "full" else (False,)
    for mirror in mirrors:
        for sign in signs:
            if group != "full":
                yield InvarianceAction(sign, mirror, 0)
            elif circular:
                for s in range(m):
                    yield InvarianceAction(sign, mirror, s)
            else:
                y = x[::-1] if mirror else x
                supp = support(y)
                yield InvarianceAction(sign, mirror, -int(supp[0]) if len(supp) else 0)


def canonicalize(x, group: str = "full", circular: bool = True):
    """Lexicographically smallest element of the orbit of `x`.

    Parameters
    ----------
    group : {"full", "sign"}
        ``"full"`` uses sign, mirror and shifts; ``"sign"`` only ``{+1, -1}``.
    circular : bool
        Circular (mod M) shifts when True; otherwise shifts are linear and
        the canonical form is left-justified (first support index at 0).

    Returns
    -------
    canonical : ndarray
    action : InvarianceAction
        The action mapping `x` to `canonical`.
    """
    x = _as_vector(x)
    actions = list(_orbit(x, group, circular))
    images = np.array([g.apply(x, circular=circular) for g in actions])
    # lexsort keys are given last-to-first
    best = np.lexsort(images.T[::-1])[0]
    return images[best], actions[best]


def equivalent_under_invariances(x1, x2, group: str = "full", circular: bool = True,
                                 tol: float | None = None) -> bool:
    """True when `x2` lies in the orbit of `x1` up to ``tol`` in max-norm.

    The default tolerance is ``1e-9 * max(1, ||x||_inf)``. Comparing against
    every orbit element avoids tie-breaking jitter between nearly equal
    canonical candidates in floating point.
    """
    x1, x2 = _as_vector(x1), _as_vector(x2)
    if x1.shape != x2.shape:
        raise ValueError("signals must have the same length")
    if tol is None:
        scale = max(1.0, float(np.max(np.abs(x1), initial=0.0)), float(np.max(np.abs(x2), initial=0.0)))
        tol = 1e-9 * scale
    for g in _orbit(x1, group, circular):
        try:
            image = g.apply(x1, circular=circular)
        except ValueError:
            continue
        if circular or group != "full":
            if np.max(np.abs(image - x2), initial=0.0) <= tol:
                return True
        else:
            # linear mode: x2 may sit anywhere in the window
            supp = support(np.where(np.abs(x2) > tol, x2, 0.0))
            offset = int(supp[0]) if len(supp) else 0
            try:
                moved = linear_shift(image, offset)
            except ValueError:
                continue
            if np.max(np.abs(moved - x2), initial=0.0) <= tol:
                return True
    return False
