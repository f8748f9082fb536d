"""Coordinate patches of the Grassmannian Gr(n, k) and moves between them.

A k-plane in C^n is stored either as a frame (any full-rank n x k matrix) or
as a chart: the unique frame whose rows ``patch.indices`` form the identity.
The remaining rows, in ascending order, are the chart coordinates ``yhat``.

Row indices are 0-based throughout the Python API.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DenominatorSingular, DimensionMismatch, PatchSingular, RankDeficient

#: Relative pivot floor for quasi-optimal elimination.
RANK_FLOOR = 1e-13
#: Relative determinant floor for fixed-patch projection.
PATCH_FLOOR = 1e-13
#: Condition number above which the Mobius denominator counts as singular.
MOBIUS_COND_LIMIT = 1e14


@dataclass(frozen=True)
class PatchIndex:
    indices: tuple
    n: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        k = len(idx)
        if not 1 <= k < self.n:
            raise ValueError(f"patch size must satisfy 1 <= k < n, got k={k}, n={self.n}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"patch indices must be strictly increasing: {idx}")
        if idx[0] < 0 or idx[-1] >= self.n:
            raise ValueError(f"patch indices out of range 0..{self.n - 1}: {idx}")

    @classmethod
    def leading(cls, n, k):
        return cls(tuple(range(k)), n)

    @classmethod
    def trailing(cls, n, k):
        return cls(tuple(range(n - k, n)), n)

    @property
    def k(self):
        return len(self.indices)

    @cached_property
    def complement(self):
        chosen = set(self.indices)
        return tuple(i for i in range(self.n) if i not in chosen)

    # cached fancy-index arrays; these sit in the inner stepping loops
    @cached_property
    def rows(self):
        return np.array(self.indices, dtype=np.intp)

    @cached_property
    def co_rows(self):
        return np.array(self.complement, dtype=np.intp)

    def one_based(self):
        return tuple(i + 1 for i in self.indices)


@dataclass
class ChartRep:
    """Chart matrix in ``patch``; rows ``patch.indices`` are forced to I_k."""

    patch: PatchIndex
    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=complex)
        if M.shape != (self.patch.n, self.patch.k):
            raise DimensionMismatch(
                f"chart for patch {self.patch.indices} must be {self.patch.n}x{self.patch.k}, got {M.shape}")
        M[self.patch.rows] = np.eye(self.patch.k)
        if not np.all(np.isfinite(M)):
            raise ValueError("chart coordinates must be finite")
        self.matrix = M

    @property
    def yhat(self):
        return self.matrix[self.patch.co_rows]


@dataclass
class StiefelFrame:
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.ndim != 2 or self.matrix.shape[1] > self.matrix.shape[0]:
            raise DimensionMismatch(f"a k-frame needs shape (n, k) with k <= n, got {self.matrix.shape}")

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def k(self):
        return self.matrix.shape[1]

    def is_full_rank(self, floor=1e-12):
        s = np.linalg.svd(self.matrix, compute_uv=False)
        return bool(s[-1] > floor * max(s[0], np.finfo(float).tiny))


@dataclass
class QogeResult:
    chart: ChartRep
    det_u: complex
    pivots: list = field(default_factory=list)
    swap_parity: int = 1


def _as_array(Y):
    return Y.matrix if isinstance(Y, (StiefelFrame, ChartRep)) else np.asarray(Y)


def _permutation_parity(perm):
    perm = list(perm)
    parity = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        j, length = start, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            parity = -parity
    return parity


def qoge(Y, rank_floor=RANK_FLOOR):
    """Quasi-optimal Gaussian elimination of an n x k frame.

    At each stage the largest-magnitude entry of the not-yet-pivoted rows and
    columns is chosen as pivot (ties: smallest row, then smallest column),
    the pivot column is scaled to put a one there, and the other unpivoted
    columns are cleared in the pivot row. A final unit-triangular clean-up
    and column permutation bring the pivot rows, sorted, to the identity.

    Returns the chart together with ``det_u = swap_parity * prod(pivots)``,
    the determinant of ``U`` in ``Y = chart.matrix @ U``.
    """
    W = np.array(_as_array(Y), dtype=complex)
    n, k = W.shape
    if k > n:
        raise DimensionMismatch(f"frame has more columns than rows: {W.shape}")
    scale = np.abs(W).max()
    if not np.isfinite(scale):
        raise RankDeficient("frame has non-finite entries")
    row_free = np.ones(n, dtype=bool)
    col_free = np.ones(k, dtype=bool)
    pivots = []
    prod = 1.0 + 0j
    for stage in range(k):
        rows = np.flatnonzero(row_free)
        cols = np.flatnonzero(col_free)
        sub = np.abs(W[np.ix_(rows, cols)])
        flat = int(np.argmax(sub))  # row-major: first hit is smallest row, then column
        i, j = rows[flat // len(cols)], cols[flat % len(cols)]
        p = W[i, j]
        if not abs(p) > rank_floor * scale:
            raise RankDeficient("frame is numerically rank deficient",
                                stage=stage, pivot=abs(p), scale=scale)
        pivots.append((int(i), int(j), complex(p)))
        prod *= p
        W[:, j] /= p
        col_free[j] = False
        others = np.flatnonzero(col_free)
        if others.size:
            W[:, others] -= np.outer(W[:, j], W[i, others])
            W[i, others] = 0.0
        row_free[i] = False

    # unit lower-triangular clean-up in pivot order, last pivot first
    for l in range(k - 1, 0, -1):
        i_l, j_l, _ = pivots[l]
        earlier = [pivots[m][1] for m in range(l)]
        W[:, earlier] -= np.outer(W[:, j_l], W[i_l, earlier])
        W[i_l, earlier] = 0.0

    sorted_rows = sorted(p[0] for p in pivots)
    rank = {r: s for s, r in enumerate(sorted_rows)}
    # destination column of each original column
    dest = [0] * k
    for i, j, _ in pivots:
        dest[j] = rank[i]
    out = np.empty_like(W)
    out[:, dest] = W
    parity = _permutation_parity(dest)
    chart = ChartRep(PatchIndex(tuple(sorted_rows), n), out)
    return QogeResult(chart, parity * prod, pivots, parity)


def project_fixed_patch(Y, patch, floor=PATCH_FLOOR):
    """Chart of ``Y`` in the prescribed ``patch`` and ``det`` of its patch rows."""
    Y = np.asarray(_as_array(Y), dtype=complex)
    sub = Y[patch.rows]
    det_u = complex(np.linalg.det(sub))
    scale = np.abs(Y).max()
    if not abs(det_u) > floor * scale ** patch.k:
        raise PatchSingular("patch rows of the frame are singular",
                            patch=str(patch.one_based()), det=abs(det_u))
    chart = np.linalg.solve(sub.T, Y.T).T
    return ChartRep(patch, chart), det_u


def chart_embed(yhat, patch):
    yhat = np.asarray(yhat, dtype=complex)
    if yhat.shape != (patch.n - patch.k, patch.k):
        raise DimensionMismatch(
            f"yhat must be {(patch.n - patch.k, patch.k)} for this patch, got {yhat.shape}")
    M = np.empty((patch.n, patch.k), dtype=complex)
    M[patch.co_rows] = yhat
    return ChartRep(patch, M)


def chart_extract(chart):
    return chart.yhat.copy()


def mobius_action(S, yhat0, patch):
    """Chart coordinates of ``S @ chart_embed(yhat0, patch)`` in the same patch.

    Computed as ``(S[o,i] + S[o,o] yhat0) @ inv(S[i,i] + S[i,o] yhat0)`` with
    ``i`` the patch rows and ``o`` the complementary rows. Note the numerator
    is the complement block: that is the only ordering for which the result
    has the (n-k) x k shape of a chart.
    """
    S = np.asarray(S)
    p, q = patch.rows, patch.co_rows
    num = S[np.ix_(q, p)] + S[np.ix_(q, q)] @ yhat0
    den = S[np.ix_(p, p)] + S[np.ix_(p, q)] @ yhat0
    cond = np.linalg.cond(den)
    if not cond < MOBIUS_COND_LIMIT:
        raise DenominatorSingular("Mobius denominator is singular", condition=float(cond))
    return np.linalg.solve(den.T, num.T).T
