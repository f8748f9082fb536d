"""Fixed-step integrators and the step/project driver loop."""

from dataclasses import dataclass

import numpy as np

from .errors import EvansError, StepDiverged
from .linalg import commutator

_GL_OFFSET = np.sqrt(3.0) / 6.0
#: Gauss-Legendre nodes on [0, 1] used by the fourth-order Magnus step
GL_NODES = (0.5 - _GL_OFFSET, 0.5 + _GL_OFFSET)


@dataclass(frozen=True)
class Mesh:
    """Equidistant mesh from ``a`` to ``b``; ``b < a`` integrates backwards."""

    a: float
    b: float
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"mesh needs N >= 1 steps, got {self.N}")

    @property
    def h(self):
        return (self.b - self.a) / self.N

    @property
    def nodes(self):
        return self.a + np.arange(self.N + 1) * self.h


def rk4_step(f, x, state, h):
    k1 = f(x, state)
    k2 = f(x + h / 2, state + (h / 2) * k1)
    k3 = f(x + h / 2, state + (h / 2) * k2)
    k4 = f(x + h, state + h * k3)
    out = state + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise StepDiverged("RK4 step produced non-finite values", x=x)
    return out


def magnus4_step(A_fn, x, h):
    """Fourth-order Magnus exponent over [x, x+h] from two Gauss-Legendre samples."""
    A1 = A_fn(x + GL_NODES[0] * h)
    A2 = A_fn(x + GL_NODES[1] * h)
    return (h / 2) * (A1 + A2) - (np.sqrt(3.0) / 12) * h * h * commutator(A1, A2)


def magnus4_exponents(A1, A2, h):
    """Vectorised :func:`magnus4_step` over stacks of node samples."""
    return (h / 2) * (A1 + A2) - (np.sqrt(3.0) / 12) * h * h * (A1 @ A2 - A2 @ A1)


@dataclass
class DriveResult:
    state: object
    log_factor: complex
    steps: int


def drive(mesh, step, state0, hook=None):
    """Advance ``state0`` across ``mesh``.

    Per node: ``state = step(m, x, state, h)``, then, if given,
    ``state, factor = hook(m, x_next, state)``. Non-None factors are
    accumulated as ``log|factor|`` plus a phase summed from principal
    arguments, so the running product never over/underflows. Errors raised
    inside the loop are re-raised with the failing node index attached.
    """
    h = mesh.h
    state = state0
    log_abs = 0.0
    phase = 0.0
    for m in range(mesh.N):
        x = mesh.a + m * h
        try:
            state = step(m, x, state, h)
            if hook is not None:
                state, factor = hook(m, mesh.a + (m + 1) * h, state)
                if factor is not None:
                    log_abs += np.log(abs(factor))
                    phase += np.angle(factor)
        except EvansError as exc:
            exc.context.setdefault("node", m)
            exc.context.setdefault("x", x)
            raise
    return DriveResult(state, complex(log_abs, phase), mesh.N)
