"""Minimal-speed travelling fronts of cubic-type autocatalysis and their
linearised eigenvalue problem.

Fronts connect ``(u, v) = (0, 1)`` at ``x = -inf`` to ``(1, 0)`` at
``x = +inf`` and solve

    delta u'' + c u' - u v^m = 0,     v'' + c v' + u v^m = 0.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from ..errors import NoConnection, Stiff
from ..evans import SpectralProblem

CACHE_ENV = "EVANS_PROFILE_CACHE"
CACHE_VERSION = 1
#: profile integrator tolerance
PROFILE_RTOL = 1e-12
#: how far past launch a shot is followed before it is judged connecting
SHOT_LENGTH = 300.0


def profile_rhs(state, c, delta, m):
    u, v, du, dv = state
    r = u * v ** m
    return np.array([du, dv, (r - c * du) / delta, -r - c * dv])


@dataclass
class TravellingWave:
    """Sampled front with a cubic Hermite interpolant for off-mesh queries."""

    c: float
    delta: float
    m: int
    mesh: np.ndarray
    values: np.ndarray  # rows: u, v, u', v'
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mesh = np.asarray(self.mesh, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        second = profile_rhs(self.values, self.c, self.delta, self.m)[2:]
        self._spline = CubicHermiteSpline(self.mesh, self.values.T,
                                          np.vstack([self.values[2:], second]).T)

    @property
    def domain(self):
        return float(self.mesh[0]), float(self.mesh[-1])

    def __call__(self, x):
        """``(u, v, u', v')`` at ``x``; shape ``(4,) + shape(x)``."""
        return np.moveaxis(self._spline(x), -1, 0)

    def boundary_residuals(self):
        left = np.abs(self.values[:2, 0] - (0.0, 1.0)).max()
        right = np.abs(self.values[:2, -1] - (1.0, 0.0)).max()
        return float(left), float(right)

    def ode_residual(self):
        """Max residual of the profile ODE at mesh midpoints, via the interpolant."""
        mid = 0.5 * (self.mesh[1:] + self.mesh[:-1])
        s = self(mid)
        d = self._spline(mid, 1).T
        return float(np.abs(d - profile_rhs(s, self.c, self.delta, self.m)).max())

    def to_record(self):
        data = {"version": CACHE_VERSION, "c": self.c, "delta": self.delta, "m": self.m,
                "mesh": self.mesh.tolist(), "values": self.values.tolist(), "meta": self.meta}
        data["checksum"] = _checksum(data)
        return data

    @classmethod
    def from_record(cls, data):
        if data.get("checksum") != _checksum(data):
            raise ValueError("travelling-wave record failed its checksum")
        return cls(data["c"], data["delta"], data["m"], np.array(data["mesh"]),
                   np.array(data["values"]), data.get("meta", {}))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_record()))

    @classmethod
    def load(cls, path):
        return cls.from_record(json.loads(Path(path).read_text()))


def _checksum(data):
    body = {k: v for k, v in data.items() if k != "checksum"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


def _launch(c, delta, amplitude):
    """Rate, base state and launch offset on the linearised unstable manifold of (0, 1)."""
    mu = (-c + np.sqrt(c * c + 4 * delta)) / (2 * delta)
    w = mu * mu + c * mu
    return mu, np.array([0.0, 1.0, 0.0, 0.0]), np.array([1.0, -1.0 / w, mu, -mu / w]) * amplitude


def _shoot(c, delta, m, amplitude, length, dense=False):
    mu, base, dev = _launch(c, delta, amplitude)
    s0 = base + dev

    def overshoot(x, s):
        return s[0] - 1.0

    def negative(x, s):
        return s[1]

    overshoot.terminal = negative.terminal = True
    sol = solve_ivp(lambda x, s: profile_rhs(s, c, delta, m), (0.0, length), s0,
                    method="DOP853", rtol=PROFILE_RTOL, atol=PROFILE_RTOL * 1e-2,
                    events=None if dense else [overshoot, negative], dense_output=dense)
    if sol.status < 0:
        raise Stiff(f"profile integration failed: {sol.message}", c=c, delta=delta, m=m)
    crossed = (not dense) and (sol.t_events[0].size > 0 or sol.t_events[1].size > 0)
    return sol, crossed, mu


def minimal_speed(delta, m, bracket=(0.05, 2.0), tol=1e-12, amplitude=1e-6, length=SHOT_LENGTH):
    """Minimal front speed by bisection.

    Below ``c_min`` the orbit leaving (0, 1) overshoots ``u = 1`` (or drives
    ``v`` negative); at or above it the orbit stays in the physical box.
    """
    lo, hi = map(float, bracket)
    if not _shoot(lo, delta, m, amplitude, length)[1]:
        raise NoConnection("lower speed already connects; widen the bracket", c=lo)
    if _shoot(hi, delta, m, amplitude, length)[1]:
        raise NoConnection("upper speed does not connect; widen the bracket", c=hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _shoot(mid, delta, m, amplitude, length)[1]:
            lo = mid
        else:
            hi = mid
    return hi


def autocat_profile(delta=0.1, m=9, domain=(-10.0, 10.0), tol=1e-12, N=20000, anchor=-7.0,
                    amplitude=1e-6, bracket=(0.05, 2.0), cache_dir=None):
    """Minimal-speed front sampled on ``N + 1`` equidistant nodes of ``domain``.

    The translate is fixed by putting ``u = 1/2`` at ``x = anchor``. Results
    are cached as JSON when ``cache_dir`` (or the ``EVANS_PROFILE_CACHE``
    environment variable) names a directory.
    """
    if not delta > 0 or m < 1:
        raise ValueError("need delta > 0 and m >= 1")
    params = {"delta": float(delta), "m": int(m), "domain": [float(d) for d in domain],
              "tol": tol, "N": int(N), "anchor": float(anchor), "amplitude": amplitude,
              "bracket": [float(b) for b in bracket], "version": CACHE_VERSION}
    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    path = None
    if cache_dir:
        key = hashlib.sha256(json.dumps(params, sort_keys=True).encode()).hexdigest()[:16]
        path = Path(cache_dir) / f"autocat_d{delta:g}_m{m}_{key}.json"
        if path.exists():
            try:
                wave = TravellingWave.load(path)
                if wave.meta.get("params") == params:
                    return wave
            except (ValueError, KeyError, json.JSONDecodeError):
                pass
    c = minimal_speed(delta, m, bracket, tol, amplitude)
    wave = _sample_front(c, delta, m, domain, N, anchor, amplitude)
    wave.meta["params"] = params
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        wave.save(path)
    return wave


def _sample_front(c, delta, m, domain, N, anchor, amplitude):
    a, b = domain
    mu, base, dev = _launch(c, delta, amplitude)
    # orbit time from launch to the half-way point, then enough to cover the domain
    probe, _, _ = _shoot(c, delta, m, amplitude, 200.0, dense=True)
    grid = np.linspace(0.0, 200.0, 200001)
    u = probe.sol(grid)[0]
    i = int(np.argmax(u >= 0.5))
    if u[i] < 0.5:
        raise NoConnection("front never reaches u = 1/2", c=c)
    lo, hi = grid[i - 1], grid[i]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if probe.sol(mid)[0] < 0.5 else (lo, mid)
    half = 0.5 * (lo + hi)
    x = a + np.arange(N + 1) * ((b - a) / N)
    s = x - anchor + half
    values = np.empty((4, N + 1))
    inside = s >= 0
    if s[inside].max() > probe.t[-1]:
        raise Stiff("domain extends past the integrated orbit", c=c)
    values[:, inside] = probe.sol(s[inside])
    values[:, ~inside] = base[:, None] + dev[:, None] * np.exp(mu * s[~inside])
    return TravellingWave(c, delta, m, x, values,
                          {"half_point": float(half), "anchor": float(anchor)})


class Autocatalysis(SpectralProblem):
    """Eigenvalue problem for a front: state ``(p, q, p', q')``, n=4, k=2."""

    name = "autocatalysis"

    def __init__(self, wave, ell=10.0):
        self.wave = wave
        self.delta = wave.delta
        self.m = wave.m
        self.c = wave.c
        lo, hi = wave.domain
        if -ell < lo - 1e-12 or ell > hi + 1e-12:
            raise ValueError("truncated domain exceeds the sampled profile")
        super().__init__(4, 2, ell_minus=-ell, ell_plus=ell, real_data=True)

    def _assemble(self, u, v, lam):
        d, m, c = self.delta, self.m, self.c
        u = np.atleast_1d(u)
        v = np.atleast_1d(v)
        vm = v ** m
        cross = m * u * v ** (m - 1)
        A = np.zeros(u.shape + (4, 4), dtype=complex)
        A[:, 0, 2] = A[:, 1, 3] = 1.0
        A[:, 2, 0] = lam / d + vm / d
        A[:, 2, 1] = cross / d
        A[:, 2, 2] = -c / d
        A[:, 3, 0] = -vm
        A[:, 3, 1] = lam - cross
        A[:, 3, 3] = -c
        return A

    def A(self, x, lam):
        s = self.wave(x)
        out = self._assemble(s[0], s[1], complex(lam))
        return out[0] if np.ndim(x) == 0 else out

    def A_minus_inf(self, lam):
        return self._assemble(0.0, 1.0, complex(lam))[0]

    def decay_bound(self, lam):
        """Bound on ``||A(+-ell) - A(+-inf)||`` (entrywise max) from the end-state residuals."""
        left, right = self.wave.boundary_residuals()
        res = max(left, right)
        return (1 + self.m) * max(res, res ** (self.m - 1) if self.m > 1 else res) / self.delta

    def A_plus_inf(self, lam):
        return self._assemble(1.0, 0.0, complex(lam))[0]


def autocat_problem(delta=0.1, m=9, wave=None, ell=10.0, cache_dir=None):
    if wave is None:
        wave = autocat_profile(delta, m, cache_dir=cache_dir)
    return Autocatalysis(wave, ell)
