"""Right-hand sides for the linear flow Y' = A(x) Y and its induced flows.

``A_fn`` arguments are callables ``x -> (n, n)`` array.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .errors import CapExceeded, DimensionMismatch

COMPOUND_CAP = 64


@dataclass
class BlockSplit:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def assemble(self, patch):
        p, q = patch.rows, patch.co_rows
        n = patch.n
        A = np.empty((n, n), dtype=np.result_type(self.a, self.b, self.c, self.d))
        A[np.ix_(p, p)] = self.a
        A[np.ix_(p, q)] = self.b
        A[np.ix_(q, p)] = self.c
        A[np.ix_(q, q)] = self.d
        return A


def split_blocks(A, patch):
    """Blocks of A over (patch rows, complement rows)."""
    A = np.asarray(A)
    p, q = patch.rows, patch.co_rows
    return BlockSplit(A[np.ix_(p, p)], A[np.ix_(p, q)], A[np.ix_(q, p)], A[np.ix_(q, q)])


def riccati_rhs(x, yhat, A_fn, patch):
    """Chart velocity ``c + d yhat - yhat a - yhat b yhat``."""
    s = split_blocks(A_fn(x), patch)
    return s.c + s.d @ yhat - yhat @ (s.a + s.b @ yhat)


def stiefel_rhs(x, Y, A_fn):
    return A_fn(x) @ Y


def drury_oja_rhs(x, Q, A_fn):
    """``(I - Q Q^H) A Q``: keeps an orthonormal frame orthonormal."""
    AQ = A_fn(x) @ Q
    return AQ - Q @ (Q.conj().T @ AQ)


def logdetR_rhs(x, Q, A_fn, Q0, A_inf):
    """Rate of ``log det R`` for Y = QR, less the constant far-field rate.

    Subtracting ``Tr(Q0^H A_inf Q0)`` (the sum of the selected far-field
    eigenvalues) keeps the integrated log-determinant bounded.
    """
    grow = np.trace(Q.conj().T @ A_fn(x) @ Q)
    if A_inf is None:
        return complex(grow)
    return complex(grow - np.trace(Q0.conj().T @ A_inf @ Q0))


@lru_cache(maxsize=None)
def k_subsets(n, k):
    """Sorted k-subsets of range(n) in colexicographic order."""
    return tuple(sorted(combinations(range(n), k), key=lambda s: s[::-1]))


@lru_cache(maxsize=None)
def _compound_pattern(n, k):
    subsets = k_subsets(n, k)
    where = {s: t for t, s in enumerate(subsets)}
    diag = []
    off = []  # (row I, col J, i, j, sign)
    for t, I in enumerate(subsets):
        diag.append(I)
        members = set(I)
        for i in I:
            for j in range(n):
                if j in members:
                    continue
                J = tuple(sorted((members - {i}) | {j}))
                between = sum(1 for r in I if r != i and min(i, j) < r < max(i, j))
                off.append((t, where[J], i, j, -1 if between % 2 else 1))
    return subsets, diag, off


def additive_compound(A, k, cap=COMPOUND_CAP):
    """k-th additive compound: the generator of the k x k minors of Y' = A Y.

    Rows and columns are indexed by sorted k-subsets in colexicographic
    order (see :func:`k_subsets`); ``plucker`` uses the same order.
    """
    A = np.asarray(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatch(f"additive_compound needs a square matrix, got {A.shape}")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    size = comb(n, k)
    if size > cap:
        raise CapExceeded(f"C({n},{k}) = {size} exceeds the compound cap", size=size, cap=cap)
    subsets, diag, off = _compound_pattern(n, k)
    C = np.zeros((size, size), dtype=np.result_type(A, complex))
    dA = np.diag(A)
    for t, I in enumerate(diag):
        C[t, t] = dA[list(I)].sum()
    for t, u, i, j, sign in off:
        C[t, u] = sign * A[i, j]
    return C


def plucker(Y):
    """All k x k minors of an n x k frame, colexicographic order."""
    Y = np.asarray(Y)
    n, k = Y.shape
    return np.array([np.linalg.det(Y[list(s)]) for s in k_subsets(n, k)])
