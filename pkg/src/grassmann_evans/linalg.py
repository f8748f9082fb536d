"""Dense complex kernels for small systems (n <= 20).

Thin, deterministic wrappers around LAPACK (via numpy/scipy) with the
ordering and normalisation conventions the shooting code relies on.
"""

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonConvergence, OverflowRisk

#: ``expm`` refuses matrices whose 1-norm exceeds this; steppers keep
#: ``||sigma|| ~ h ||A||`` far below it.
EXPM_NORM_BOUND = 600.0


class EigenDecomposition:
    """Eigenvalues sorted by descending real part (ties: descending imaginary
    part) with unit eigenvectors in matching columns.

    ``semisimple`` is False when the eigenvector matrix is numerically
    singular (defective or nearly defective input).
    """

    def __init__(self, values, vectors, semisimple=True):
        self.values = values
        self.vectors = vectors
        self.semisimple = semisimple

    def __iter__(self):
        return iter((self.values, self.vectors))

    def __repr__(self):
        return f"EigenDecomposition(values={self.values!r}, semisimple={self.semisimple})"


def _square(M):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    return M


def lu_det(M):
    """Determinant by LU with partial pivoting (0 for exactly singular M)."""
    M = _square(M)
    return complex(np.linalg.det(M.astype(complex)))


def eig_small(M, defect_cond=1e10):
    M = _square(M).astype(complex)
    if M.shape[0] > 20:
        raise DimensionMismatch(f"eig_small is sized for n <= 20, got n={M.shape[0]}")
    try:
        w, V = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence("eigenvalue iteration did not converge", n=M.shape[0]) from exc
    # real parts equal up to rounding count as ties
    tol = 1e-12 * max(1.0, float(np.abs(w).max()))
    order = np.lexsort((-w.imag, -np.round(w.real / tol)))
    w = w[order]
    V = V[:, order]
    V = V / np.linalg.norm(V, axis=0)
    for j in range(V.shape[1]):
        v = V[:, j]
        mags = np.abs(v)
        i = int(np.argmax(mags > 0.5 * mags.max()))
        V[:, j] = v * (np.conj(v[i]) / mags[i])
    semisimple = bool(np.linalg.cond(V) < defect_cond)
    return EigenDecomposition(w, V, semisimple)


def expm(M, max_norm=EXPM_NORM_BOUND):
    """Matrix exponential (degree-13 Pade with scaling and squaring).

    Accepts a stack ``(..., n, n)``; the norm guard applies to every member.
    """
    M = np.asarray(M)
    norm = np.abs(M).sum(axis=-2).max() if M.size else 0.0
    if norm > max_norm:
        raise OverflowRisk("matrix too large for a single exponential step",
                           norm=float(norm), bound=max_norm)
    return scipy.linalg.expm(M)


def commutator(A, B):
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape or A.shape[-1] != A.shape[-2]:
        raise DimensionMismatch(f"commutator needs equal square shapes, got {A.shape} and {B.shape}")
    return A @ B - B @ A
