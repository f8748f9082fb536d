"""Linearisation of the 'good' Boussinesq equation about its solitary wave."""

import numpy as np

from ..evans import SpectralProblem


def _sech2(z):
    # overflow-free sech^2
    e = np.exp(-2.0 * np.abs(z))
    return 4.0 * e / (1.0 + e) ** 2


class Boussinesq(SpectralProblem):
    """Solitary wave ``u = (3/2)(1-c^2) sech^2(sqrt(1-c^2) x / 2)`` of speed ``c``.

    The eigenvalue problem is the fourth-order ODE written in companion form,
    so ``A`` has ones on the superdiagonal and the coefficients in its last
    row.
    """

    name = "boussinesq"

    def __init__(self, c, ell=8.0):
        c = float(c)
        if not abs(c) < 1:
            raise ValueError(f"wave speed must satisfy |c| < 1, got {c}")
        self.c = c
        self.amplitude = 1.5 * (1 - c * c)
        self.width = 0.5 * np.sqrt(1 - c * c)
        super().__init__(4, 2, ell_minus=-ell, ell_plus=ell, real_data=True)

    def profile(self, x):
        """``(u, u', u'')`` of the solitary wave."""
        z = self.width * np.asarray(x, dtype=float)
        s2 = _sech2(z)
        t = np.tanh(z)
        u = self.amplitude * s2
        du = -2.0 * self.width * u * t
        d2u = 2.0 * self.width ** 2 * u * (3.0 * t * t - 1.0)
        return u, du, d2u

    def _last_row(self, u, du, d2u, lam):
        c = self.c
        return (-lam * lam - 2.0 * d2u, 2.0 * lam * c - 4.0 * du, (1.0 - c * c) - 2.0 * u)

    def _assemble(self, u, du, d2u, lam):
        u = np.atleast_1d(u)
        A = np.zeros(u.shape + (4, 4), dtype=complex)
        A[:, 0, 1] = A[:, 1, 2] = A[:, 2, 3] = 1.0
        r0, r1, r2 = self._last_row(u, np.atleast_1d(du), np.atleast_1d(d2u), lam)
        A[:, 3, 0] = r0
        A[:, 3, 1] = r1
        A[:, 3, 2] = r2
        return A

    def A(self, x, lam):
        out = self._assemble(*self.profile(x), complex(lam))
        return out[0] if np.ndim(x) == 0 else out

    def A_minus_inf(self, lam):
        return self._assemble(0.0, 0.0, 0.0, complex(lam))[0]

    A_plus_inf = A_minus_inf

    def decay_bound(self, lam):
        """Bound on ``||A(+-ell) - A(+-inf)||`` (entrywise max)."""
        return 10.0 * self.amplitude * _sech2(self.width * self.ell_plus)

    def __reduce__(self):
        return (type(self), (self.c, self.ell_plus))


def boussinesq_problem(c=0.4, ell=8.0):
    return Boussinesq(c, ell)
