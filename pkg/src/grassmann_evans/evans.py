"""Evans-function evaluation by shooting on the Grassmannian.

Six shooting strategies are available (see :class:`Method`). All of them
produce, per side, a frame at the matching point together with a complex
log-factor so that ``det[Y- Y+] = det[frame- frame+] * exp(L- + L+)``.
"""

import cmath
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from math import comb

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .errors import (CapExceeded, ConfigError, Defective, Diverged, EvansError, MaxIterations,
                     NonIntegerWinding, PatchSingular, RankDeficient, StepDiverged,
                     WrongDichotomy)
from .flows import additive_compound, drury_oja_rhs, k_subsets, logdetR_rhs, plucker, riccati_rhs, stiefel_rhs
from .integrate import GL_NODES, Mesh, drive, magnus4_exponents, rk4_step
from .linalg import eig_small, expm
from .manifold import PatchIndex, StiefelFrame, project_fixed_patch, qoge

BLOWUP = 1e8
#: eigenvalues closer than this to the imaginary axis count as non-hyperbolic
AXIS_TOL = 1e-10


class Method(str, Enum):
    RICCATI_RK = "riccati-rk"
    MOBIUS_MAGNUS = "mobius-magnus"
    GGEM_RK = "ggem-rk"
    GGEM_LG = "ggem-lg"
    RICCATI_QOGE = "riccati-qoge"
    CO_RK = "co-rk"

    @property
    def fixed_patch(self):
        return self in (Method.RICCATI_RK, Method.MOBIUS_MAGNUS)

    @property
    def uses_magnus(self):
        return self in (Method.MOBIUS_MAGNUS, Method.GGEM_LG, Method.RICCATI_QOGE)


class SpectralProblem:
    """Linear spectral problem ``Y' = A(x; lam) Y`` on ``[ell_minus, ell_plus]``.

    Subclasses override :meth:`A`, :meth:`A_minus_inf` and :meth:`A_plus_inf`;
    ad-hoc problems may instead pass callables. ``A`` must accept either a
    scalar ``x`` (returning ``(n, n)``) or a 1-d array (returning
    ``(len(x), n, n)``).

    ``k`` is the Morse index: the dimension of the unstable subspace of
    ``A_minus_inf``, equal to that of ``A_plus_inf``. One-sided problems set
    ``wall`` to a ``k x n`` boundary matrix standing in for the left frame.
    """

    name = "custom"

    def __init__(self, n, k, A_fn=None, A_minus_inf=None, A_plus_inf=None,
                 ell_minus=-8.0, ell_plus=8.0, patch_minus=None, patch_plus=None,
                 wall=None, real_data=False):
        if not 1 <= k < n:
            raise ValueError(f"Morse index must satisfy 1 <= k < n, got k={k}, n={n}")
        if not ell_minus <= ell_plus:
            raise ValueError("need ell_minus <= ell_plus")
        self.n = n
        self.k = k
        self._A_fn = A_fn
        self._A_minus = A_minus_inf
        self._A_plus = A_plus_inf
        self.ell_minus = float(ell_minus)
        self.ell_plus = float(ell_plus)
        self.patch_minus = PatchIndex(tuple(patch_minus) if patch_minus else tuple(range(k)), n)
        self.patch_plus = PatchIndex(tuple(patch_plus) if patch_plus else tuple(range(k, n)), n)
        self.wall = None if wall is None else np.asarray(wall, dtype=complex)
        self.real_data = real_data

    def A(self, x, lam):
        if np.ndim(x) == 0:
            return np.asarray(self._A_fn(float(x), lam), dtype=complex)
        return np.stack([np.asarray(self._A_fn(float(xi), lam), dtype=complex) for xi in x])

    def A_minus_inf(self, lam):
        return np.asarray(self._A_minus(lam), dtype=complex)

    def A_plus_inf(self, lam):
        return np.asarray(self._A_plus(lam), dtype=complex)

    @property
    def one_sided(self):
        return self.wall is not None

    def default_patch(self, side):
        return self.patch_minus if side == "-" else self.patch_plus

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, k={self.k}, ell=({self.ell_minus}, {self.ell_plus}))"


@dataclass
class MethodConfig:
    method: Method = Method.GGEM_LG
    N_minus: int = 256
    N_plus: int = 256
    x_star: float = 0.0
    patch_minus: PatchIndex = None
    patch_plus: PatchIndex = None
    swap_tol: float = 2.0
    scaling: bool = True
    blowup: float = BLOWUP

    def __post_init__(self):
        self.method = Method(self.method)
        if not self.swap_tol > 0:
            raise ConfigError("swap_tol must be positive", swap_tol=self.swap_tol)
        if self.N_minus < 1 or self.N_plus < 1:
            raise ConfigError("step counts must be >= 1", N_minus=self.N_minus, N_plus=self.N_plus)

    @classmethod
    def split(cls, method, N, problem, x_star=0.0, **kw):
        """Config with ``N`` equidistant steps shared over the whole domain.

        Each side gets a share of ``N`` proportional to its length (at least
        one step, a zero-length side taking a single zero step).
        """
        if problem.one_sided:
            return cls(method=method, N_minus=1, N_plus=N, x_star=x_star, **kw)
        length = problem.ell_plus - problem.ell_minus
        n_minus = int(round(N * (x_star - problem.ell_minus) / length))
        n_minus = min(max(n_minus, 1), N - 1) if N > 1 else 1
        return cls(method=method, N_minus=n_minus, N_plus=max(N - n_minus, 1), x_star=x_star, **kw)

    def patch(self, problem, side):
        p = self.patch_minus if side == "-" else self.patch_plus
        return p if p is not None else problem.default_patch(side)


@dataclass
class ShotState:
    side: str
    matrix: np.ndarray
    patch: PatchIndex
    log_factor: complex
    rate_sum: complex
    diagnostics: dict = field(default_factory=dict)


@dataclass
class EvansValue:
    lam: complex
    log_value: complex
    method: Method
    x_star: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def value(self):
        if self.log_value.real == -math.inf:
            return 0j
        with np.errstate(over="ignore"):
            return complex(np.exp(self.log_value))

    @property
    def phase(self):
        return self.log_value.imag


def _log(z):
    z = complex(z)
    if z == 0:
        return complex(-math.inf, 0.0)
    return cmath.log(z)


def _side_matrix(problem, lam, side):
    if side == "-":
        if problem.one_sided:
            raise ConfigError("one-sided problem has no left far field")
        return problem.A_minus_inf(lam)
    return problem.A_plus_inf(lam)


def init_subspace(problem, lam, side):
    """Analytic basis of the far-field subspace that the shot starts from.

    ``side='-'``: unstable subspace of ``A(-inf)`` (dimension k);
    ``side='+'``: stable subspace of ``A(+inf)`` (dimension n-k).

    The frame is ``P(lam) E``: the spectral projector onto that subspace
    applied to fixed coordinate columns ``E`` (the default patch columns).
    ``P`` is analytic in ``lam`` and does not depend on any ordering of the
    eigenvectors, so the resulting Evans function is analytic across
    eigenvalue crossings. Returns the frame and the sum of the selected
    eigenvalues, computed as ``trace(P A)``.
    """
    M = _side_matrix(problem, lam, side)
    n, k = problem.n, problem.k
    want = k if side == "-" else n - k
    w = eig_small(M).values
    if np.any(np.abs(w.real) < AXIS_TOL * max(1.0, np.abs(w).max())):
        raise WrongDichotomy("far-field matrix has an eigenvalue on the imaginary axis",
                             side=side, lam=complex(lam))
    chosen = w.real > 0 if side == "-" else w.real < 0
    if chosen.sum() != want:
        raise WrongDichotomy(f"expected {want} {'unstable' if side == '-' else 'stable'} "
                             f"far-field eigenvalues, found {int(chosen.sum())}",
                             side=side, lam=complex(lam))
    sel, other = ("rhp", "lhp") if side == "-" else ("lhp", "rhp")
    _, Z1, d1 = scipy.linalg.schur(M, output="complex", sort=sel)
    _, Z2, d2 = scipy.linalg.schur(M, output="complex", sort=other)
    B = np.hstack([Z1[:, :d1], Z2[:, :d2]])
    if np.linalg.cond(B) > 1e12:
        raise Defective("far-field invariant subspaces nearly coincide", side=side, lam=complex(lam))
    P = Z1[:, :d1] @ np.linalg.solve(B, np.eye(n))[:d1]
    cols = problem.default_patch(side).rows
    frame = StiefelFrame(P[:, cols])
    if not frame.is_full_rank(1e-10):
        raise RankDeficient("projected coordinate columns do not span the far-field subspace",
                            side=side, lam=complex(lam))
    return frame, complex(np.trace(P @ M))


class _Coefficients:
    """``A(x; lam)`` precomputed at every abscissa a mesh sweep will touch.

    Lookups are keyed by the exact float abscissa, computed the same way the
    steppers compute it; anything else falls back to direct evaluation.
    """

    def __init__(self, problem, lam, xs):
        self.problem = problem
        self.lam = lam
        xs = np.unique(np.concatenate(xs))
        mats = problem.A(xs, lam)
        self.table = dict(zip(xs.tolist(), mats))

    def __call__(self, x):
        try:
            return self.table[x]
        except KeyError:
            return self.problem.A(x, self.lam)


def _rk4_abscissae(mesh):
    x = mesh.a + np.arange(mesh.N) * mesh.h
    return [x, x + mesh.h / 2, x + mesh.h]


def _magnus_maps(problem, lam, mesh):
    x = mesh.a + np.arange(mesh.N) * mesh.h
    A1 = problem.A(x + GL_NODES[0] * mesh.h, lam)
    A2 = problem.A(x + GL_NODES[1] * mesh.h, lam)
    return expm(magnus4_exponents(A1, A2, mesh.h))


def _inf_norm(y):
    return float(np.abs(y).sum(axis=1).max()) if y.size else 0.0


def shoot(problem, lam, side, config):
    """Carry the far-field subspace of one side to the matching point."""
    x_star = float(config.x_star)
    if not problem.ell_minus <= x_star <= problem.ell_plus:
        raise ConfigError("matching point outside the domain", x_star=x_star,
                          ell_minus=problem.ell_minus, ell_plus=problem.ell_plus)
    frame, rate = init_subspace(problem, lam, side)
    start = problem.ell_minus if side == "-" else problem.ell_plus
    N = config.N_minus if side == "-" else config.N_plus
    mesh = Mesh(start, x_star, N)
    method = config.method
    patch = config.patch(problem, side)
    if patch.k != frame.k:
        raise ConfigError("patch size does not match the frame", side=side,
                          patch=str(patch.one_based()), frame_columns=frame.k)
    diag = {"patch_changes": 0, "steps": N, "method": method.value}
    trivial = mesh.a == mesh.b

    if method.fixed_patch:
        chart, det0 = project_fixed_patch(frame.matrix, patch)
        yhat = chart.yhat
        q = patch.co_rows
        if not trivial:
            if method is Method.RICCATI_RK:
                coef = _Coefficients(problem, lam, _rk4_abscissae(mesh))
                track = {"max": _inf_norm(yhat), "x": mesh.a}

                def step(m, x, y, h):
                    return rk4_step(lambda s, z: riccati_rhs(s, z, coef, patch), x, y, h)

                def hook(m, x, y):
                    nrm = _inf_norm(y)
                    if nrm > track["max"]:
                        track["max"], track["x"] = nrm, x
                    if nrm > config.blowup:
                        raise StepDiverged("Riccati chart blew up at a representation singularity",
                                           kind="representation_singularity", side=side,
                                           singularity_x=x, norm=nrm)
                    return y, None
            else:
                from .manifold import mobius_action
                S = _magnus_maps(problem, lam, mesh)

                def step(m, x, y, h):
                    return mobius_action(S[m], y, patch)

                hook = None
            yhat = drive(mesh, step, yhat, hook).state
        matrix = np.empty((problem.n, patch.k), dtype=complex)
        matrix[patch.rows] = np.eye(patch.k)
        matrix[q] = yhat
        norm = _inf_norm(yhat)
        diag["yhat_norm"] = norm
        diag["pole_suspected"] = norm > config.blowup
        return ShotState(side, matrix, patch, _log(det0), rate, diag)

    if method is Method.CO_RK:
        Q0, R0 = np.linalg.qr(frame.matrix)
        L0 = sum(_log(r) for r in np.diag(R0))
        n, kk = Q0.shape
        A_inf = _side_matrix(problem, lam, side) if config.scaling else None
        state = np.concatenate([Q0.ravel(), [L0]])
        if not trivial:
            coef = _Coefficients(problem, lam, _rk4_abscissae(mesh))

            def f(x, s):
                Q = s[:-1].reshape(n, kk)
                dQ = drury_oja_rhs(x, Q, coef)
                return np.concatenate([dQ.ravel(), [logdetR_rhs(x, Q, coef, Q0, A_inf)]])

            state = drive(mesh, lambda m, x, s, h: rk4_step(f, x, s, h), state).state
        Q = state[:-1].reshape(n, kk)
        diag["orthonormality_defect"] = float(np.abs(Q.conj().T @ Q - np.eye(kk)).max())
        return ShotState(side, Q, None, complex(state[-1]), rate, diag)

    # patch-swapping methods: GGEM-RK, GGEM-LG, Riccati-QOGE
    if method is Method.RICCATI_QOGE:
        try:
            chart, det0 = project_fixed_patch(frame.matrix, patch)
        except PatchSingular:
            res = qoge(frame.matrix)
            chart, det0 = res.chart, res.det_u
    else:
        res = qoge(frame.matrix)
        chart, det0 = res.chart, res.det_u
    current = {"patch": chart.patch, "pending": False, "qoge_calls": 0}
    Y = chart.matrix
    log_factor = _log(det0)
    if not trivial:
        if method is Method.GGEM_RK:
            coef = _Coefficients(problem, lam, _rk4_abscissae(mesh))

            def step(m, x, y, h):
                return rk4_step(lambda s, z: stiefel_rhs(s, z, coef), x, y, h)
        else:
            S = _magnus_maps(problem, lam, mesh)

            def step(m, x, y, h):
                return S[m] @ y

        def reduce(y):
            current["qoge_calls"] += 1
            r = qoge(y)
            return r.chart, r.det_u

        def hook(m, x, y):
            if method is Method.RICCATI_QOGE and not current["pending"]:
                try:
                    ch, det_u = project_fixed_patch(y, current["patch"])
                except PatchSingular:
                    ch, det_u = reduce(y)
            else:
                ch, det_u = reduce(y)
            if ch.patch != current["patch"]:
                diag["patch_changes"] += 1
                current["patch"] = ch.patch
            if method is Method.RICCATI_QOGE:
                current["pending"] = _inf_norm(ch.yhat) > config.swap_tol
            return ch.matrix, det_u

        result = drive(mesh, step, Y, hook)
        Y = result.state
        log_factor += result.log_factor
        if config.scaling:
            # per-step division by exp(rate * h), summed over the mesh
            log_factor -= rate * (mesh.b - mesh.a)
    diag["qoge_calls"] = current["qoge_calls"]
    return ShotState(side, Y, current["patch"], log_factor, rate, diag)


def _match(problem, left, right):
    if problem.one_sided:
        core = np.linalg.det(problem.wall @ right.matrix)
        return _log(core), right.log_factor
    core = np.linalg.det(np.hstack([left.matrix, right.matrix]))
    return _log(core), left.log_factor + right.log_factor


def evans_eval(problem, lam, config):
    """Evans function at ``lam``, reported as ``log D`` plus diagnostics.

    Two-sided problems: ``D = det[frame- frame+] * exp(L- + L+)``; one-sided
    problems replace the left frame by the boundary matrix ``wall``. The
    constant exponential-trace prefactor is omitted (it has no zeros).
    """
    lam = complex(lam)
    right = shoot(problem, lam, "+", config)
    left = None if problem.one_sided else shoot(problem, lam, "-", config)
    log_core, log_factor = _match(problem, left, right)
    diag = {"plus": right.diagnostics}
    if left is not None:
        diag["minus"] = left.diagnostics
    diag["pole_suspected"] = any(d.get("pole_suspected", False) for d in
                                 (right.diagnostics, left.diagnostics if left else {}))
    return EvansValue(lam, log_core + log_factor, config.method, config.x_star, diag)


# ---------------------------------------------------------------- contours


@dataclass
class WindingResult:
    winding: int
    residual: float
    total: float
    evaluations: int
    unresolved: int


def _wrap(d):
    return (d + math.pi) % (2 * math.pi) - math.pi


def contour_winding(phase_fn, vertices, per_edge=16, max_depth=12, map_fn=map, tol=0.1):
    """Winding number of a function along a closed polygon.

    ``phase_fn(lam)`` returns ``arg f(lam)`` (any branch). Edges are sampled
    uniformly and bisected wherever consecutive phases differ by more than
    ``pi/2``.
    """
    verts = [complex(v) for v in vertices]
    if verts[0] != verts[-1]:
        verts.append(verts[0])
    pts = []
    for a, b in zip(verts[:-1], verts[1:]):
        pts.extend(a + (b - a) * t for t in np.arange(per_edge) / per_edge)
    pts.append(verts[0])
    phases = list(map_fn(phase_fn, pts))
    evaluations = len(pts)
    total = 0.0
    unresolved = 0
    # work list of (lam_a, phase_a, lam_b, phase_b, depth)
    stack = [(pts[i], phases[i], pts[i + 1], phases[i + 1], 0) for i in range(len(pts) - 1)]
    stack.reverse()
    while stack:
        batch = []
        while stack:
            a, pa, b, pb, depth = stack.pop()
            d = _wrap(pb - pa)
            if abs(d) <= math.pi / 2:
                total += d
            elif depth >= max_depth:
                total += d
                unresolved += 1
            else:
                batch.append((a, pa, b, pb, depth))
        if batch:
            mids = [(a + b) / 2 for a, _, b, _, _ in batch]
            pm = list(map_fn(phase_fn, mids))
            evaluations += len(mids)
            for (a, pa, b, pb, depth), mid, ph in zip(batch, mids, pm):
                stack.append((mid, ph, b, pb, depth + 1))
                stack.append((a, pa, mid, ph, depth + 1))
    turns = total / (2 * math.pi)
    winding = int(round(turns))
    residual = abs(turns - winding)
    # wrapped increments always telescope to a multiple of 2 pi on a closed
    # loop, so segments left unresolved at the refinement cap are the real
    # warning sign of a zero or pole on or near the contour
    if residual > tol or unresolved:
        raise NonIntegerWinding("argument change is not resolved to a multiple of 2 pi",
                                turns=turns, residual=residual, unresolved=unresolved)
    return WindingResult(winding, residual, turns, evaluations, unresolved)


class _PhaseOf:
    """Picklable ``lam -> arg D(lam)`` for process pools."""

    def __init__(self, problem, config):
        self.problem = problem
        self.config = config

    def __call__(self, lam):
        return evans_eval(self.problem, lam, self.config).phase


def square_contour(center, half_width):
    c = complex(center)
    r = float(half_width)
    return [c + complex(-r, -r), c + complex(r, -r), c + complex(r, r), c + complex(-r, r)]


def winding_number(problem, contour, config, per_edge=16, max_depth=12, map_fn=map):
    """Number of Evans-function zeros (minus poles) inside a closed polygon."""
    return contour_winding(_PhaseOf(problem, config), contour, per_edge, max_depth, map_fn)


# ---------------------------------------------------------------- roots


@dataclass
class RootResult:
    root: complex
    trace: list
    iterations: int


def secant_root(log_fn, lam0, lam1=None, tol=1e-10, max_iter=60, box=None):
    """Complex secant iteration on ``f`` given ``log_fn = log f``.

    Working with logarithms keeps the update ``(l1 - l0) / (1 - f0/f1)``
    free of overflow when ``|f|`` is huge or tiny.
    """
    lam0 = complex(lam0)
    if lam1 is None:
        lam1 = lam0 + 1e-3 * max(abs(lam0), 1e-2)
    lam1 = complex(lam1)
    g0, g1 = log_fn(lam0), log_fn(lam1)
    trace = [lam0, lam1]
    for it in range(1, max_iter + 1):
        if g1.real == -math.inf:
            return RootResult(lam1, trace, it)
        ratio = cmath.exp(g0 - g1) if (g0 - g1).real < 700 else complex(math.inf)
        denom = 1 - ratio
        if denom == 0 or not cmath.isfinite(denom):
            step = 0j if not cmath.isfinite(denom) else None
            if step is None:
                raise Diverged("secant update is singular (equal function values)", lam=lam1)
        else:
            step = (lam1 - lam0) / denom
        lam2 = lam1 - step
        trace.append(lam2)
        if box is not None:
            lo, hi = box
            if not (lo.real <= lam2.real <= hi.real and lo.imag <= lam2.imag <= hi.imag):
                raise Diverged("secant iterate left the search box", lam=lam2)
        if abs(lam2 - lam1) < tol:
            return RootResult(lam2, trace, it)
        lam0, g0 = lam1, g1
        lam1, g1 = lam2, log_fn(lam2)
    raise MaxIterations("secant iteration did not converge", iterations=max_iter, lam=lam1)


def find_root(problem, lam0, config, tol=1e-10, max_iter=60, lam1=None, box=None):
    """Zero of the Evans function near ``lam0`` by complex secant iteration."""
    return secant_root(lambda lam: evans_eval(problem, lam, config).log_value,
                       lam0, lam1, tol, max_iter, box)


# ---------------------------------------------------------------- oracle


def _complement_sign(I, n):
    k = len(I)
    return -1 if (sum(I) - k * (k - 1) // 2) % 2 else 1


def _integrate_compound(problem, lam, w0, kk, rate, a, b, rtol):
    if a == b:
        return w0

    def rhs(x, w):
        return additive_compound(problem.A(x, lam), kk) @ w - rate * w

    sol = solve_ivp(rhs, (a, b), w0, method="DOP853", rtol=rtol, atol=rtol * 1e-3 * np.abs(w0).max())
    if not sol.success:
        raise EvansError(f"compound integration failed: {sol.message}")
    return sol.y[:, -1]


def compound_oracle_evans(problem, lam, x_star=0.0, rtol=1e-11, cap=64):
    """Evans function from the minors (Pluecker coordinates) of both frames.

    Each side's minors obey the linear additive-compound system; they are
    integrated with an adaptive Dormand-Prince scheme, scaled by the
    far-field rate so that the result is directly comparable with the
    scaled patch-swapping methods, and paired by Laplace expansion:
    ``det[Y- Y+] = sum_I sign(I) w-_I w+_(complement of I)``.
    """
    lam = complex(lam)
    n, k = problem.n, problem.k
    for size in (comb(n, k), comb(n, n - k)):
        if size > cap:
            raise CapExceeded(f"{size} Pluecker coordinates exceed the cap", size=size, cap=cap)
    frame_p, rate_p = init_subspace(problem, lam, "+")
    wp = _integrate_compound(problem, lam, plucker(frame_p.matrix), n - k, rate_p,
                             problem.ell_plus, x_star, rtol)
    plus_sets = {s: i for i, s in enumerate(k_subsets(n, n - k))}
    if problem.one_sided:
        W = problem.wall
        return complex(sum(np.linalg.det(W[:, list(J)]) * wp[i] for J, i in plus_sets.items()))
    frame_m, rate_m = init_subspace(problem, lam, "-")
    wm = _integrate_compound(problem, lam, plucker(frame_m.matrix), k, rate_m,
                             problem.ell_minus, x_star, rtol)
    total = 0j
    for i, I in enumerate(k_subsets(n, k)):
        Ic = tuple(j for j in range(n) if j not in I)
        total += _complement_sign(I, n) * wm[i] * wp[plus_sets[Ic]]
    return complex(total)
