"""Linear stability of the Ekman boundary layer over a rigid wall.

Unknowns are stacked as six first-order components in the wall-normal
coordinate ``z``; the horizontal wavenumber is given in polar form
``(gamma, eps)`` and Reynolds and Rossby numbers coincide.
"""

from dataclasses import dataclass

import numpy as np

from ..evans import EvansValue, Method, SpectralProblem, _log, shoot

#: rows of the state constrained by the rigid-wall condition (0-based)
WALL_ROWS = (0, 1, 4)


@dataclass(frozen=True)
class EkmanParams:
    Re: float = 140.0
    eps: float = 0.014156
    gamma: float = 0.70575

    def __post_init__(self):
        if not self.Re > 0:
            raise ValueError(f"Reynolds number must be positive, got {self.Re}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")


def base_flow(z, eps):
    """``(V, V_z, W, W_zz)``: the two velocity components of the boundary layer
    and the derivatives that enter the linearisation."""
    z = np.asarray(z, dtype=float)
    e = np.exp(-z)
    V = np.cos(eps) * (1 - e * np.cos(z)) + np.sin(eps) * e * np.sin(z)
    Vz = e * (np.sin(z + eps) + np.cos(z + eps))
    W = -np.sin(eps) * (1 - e * np.cos(z)) + np.cos(eps) * e * np.sin(z)
    Wzz = -2 * e * np.cos(z + eps)
    return V, Vz, W, Wzz


def coefficients(W, Wzz, lam, p):
    g, Re = p.gamma, p.Re
    a = g ** 4 + 1j * Re * g * g * (g * W - 1j * lam) + 1j * g * Re * Wzz
    b = 2 * g * g + Re * (1j * g * W + lam)
    return a, b


class Ekman(SpectralProblem):
    """Six-dimensional system on ``[0, ell]``; rigid wall at ``z = 0``.

    Three solutions decay as ``z -> inf``; the wall imposes that components
    1, 2 and 5 vanish, expressed here through the selector ``wall``.
    """

    name = "ekman"

    def __init__(self, params, ell=10.0):
        self.params = params
        wall = np.zeros((3, 6))
        wall[np.arange(3), WALL_ROWS] = 1.0
        super().__init__(6, 3, ell_minus=0.0, ell_plus=ell, patch_plus=(0, 1, 2), wall=wall,
                         real_data=params.gamma == 0)

    def _assemble(self, V, Vz, W, Wzz, lam):
        p = self.params
        Vz = np.atleast_1d(Vz)
        a, b = coefficients(np.atleast_1d(W), np.atleast_1d(Wzz), lam, p)
        A = np.zeros(Vz.shape + (6, 6), dtype=complex)
        A[:, 0, 1] = A[:, 1, 2] = A[:, 2, 3] = A[:, 4, 5] = 1.0
        A[:, 3, 0] = -a
        A[:, 3, 2] = b
        A[:, 3, 5] = -2.0
        A[:, 5, 0] = 1j * p.gamma * p.Re * Vz
        A[:, 5, 1] = 2.0
        A[:, 5, 4] = b - p.gamma ** 2
        return A

    def A(self, x, lam):
        out = self._assemble(*base_flow(x, self.params.eps), complex(lam))
        return out[0] if np.ndim(x) == 0 else out

    def A_plus_inf(self, lam):
        eps = self.params.eps
        return self._assemble(np.cos(eps), 0.0, -np.sin(eps), 0.0, complex(lam))[0]

    def A_minus_inf(self, lam):
        return self.A_plus_inf(lam)

    def decay_bound(self, lam):
        """Bound on ``||A(ell) - A(+inf)||`` (entrywise max); base-flow transients are below ``2 e^-z``."""
        g, Re = self.params.gamma, self.params.Re
        return 2 * np.exp(-self.ell_plus) * Re * (g ** 3 + 2 * g + 1)

    def __reduce__(self):
        return (type(self), (self.params, self.ell_plus))


def ekman_problem(params=None, ell=10.0):
    return Ekman(params or EkmanParams(), ell)


def evans_eval_ekman(problem, lam, config):
    """Evans function for the rigid wall from a single shot ``ell -> 0``.

    With a fixed-patch method in the patch {1,2,3} the value is the chart
    entry ``yhat[1, 2]`` (row 5, last column of the frame), which equals the
    wall determinant ``det(wall @ [I; yhat])``. Patch-swapping methods return
    ``det(wall @ frame) * exp(log_factor)`` instead.
    """
    lam = complex(lam)
    state = shoot(problem, lam, "+", config)
    if config.method.fixed_patch:
        q = list(state.patch.complement)
        yhat = state.matrix[q]
        value = yhat[q.index(WALL_ROWS[2]), 2] if state.patch.indices == (0, 1, 2) else \
            np.linalg.det(problem.wall @ state.matrix)
        log_value = _log(value)
    else:
        log_value = _log(np.linalg.det(problem.wall @ state.matrix)) + state.log_factor
    return EvansValue(lam, log_value, Method(config.method), config.x_star,
                      {"plus": state.diagnostics, "pole_suspected": state.diagnostics.get("pole_suspected", False)})
