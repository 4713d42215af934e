"""Bifurcation from a trivial branch detected by spectral flow.

A :class:`FunctionalFamily` is a smooth family ``f_x`` of functionals on a
Galerkin space, parameterized by a circle or a torus, with a branch
``sigma(x)`` of critical points. Nonzero spectral flow of the Hessians
``h_x`` along a parameter loop certifies a bifurcation point on that loop;
this module turns the certificate into a bracket, a nontrivial witness
and, on tori, a grid picture of the bifurcation set.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .core import KERNEL_REL_TOL
from .errors import DegenerateInputError, InputError, PreconditionError, ResolutionError
from .paths import ClutchedLoop, OperatorPath, Param, twisted_diagonal
from .sflow import Convention, Method, SpectralFlowResult, spectral_flow_loop

DEFAULT_BRANCH_TOL = 1e-10
HESSIAN_STEP = 1e-5
LOCATE_TOL = 1e-8
ENDPOINT_NUDGE = 1e-7
NEWTON_TOL = 1e-10
NEWTON_STEP_FLOOR = 1e-8
TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Circle:
    start: float
    stop: float

    @property
    def period(self) -> float:
        return self.stop - self.start


@dataclass(frozen=True)
class TorusGrid:
    shape: tuple[int, int]
    t_range: tuple[float, float]
    phi_range: tuple[float, float] = (0.0, TWO_PI)


@dataclass(frozen=True)
class ParameterLoop:
    """``s -> x(s)`` on ``[start, stop]``, closed up by ``clutch`` (identity if None)."""

    point: Callable[[float], Any]
    start: float = 0.0
    stop: float = 1.0
    clutch: np.ndarray | None = None
    window: float | None = None
    label: str = "loop"


@dataclass
class FunctionalFamily:
    parameter_space: Circle | TorusGrid
    state_dim: int
    value: Callable
    gradient: Callable
    hessian: Callable | None = None
    branch: Callable | None = None
    clutch: np.ndarray | None = None  # identifies the ends of the first circle factor
    window: float | None = None
    name: str = "family"

    def sigma(self, x) -> np.ndarray:
        if self.branch is None:
            return np.zeros(self.state_dim)
        return np.asarray(self.branch(x), dtype=float)

    def hess(self, x, u) -> np.ndarray:
        if self.hessian is not None:
            H = np.asarray(self.hessian(x, u), dtype=float)
        else:
            H = fd_hessian(self.gradient, x, u)
        return 0.5 * (H + H.T)

    def generator_loop(self, phi: float = 0.0) -> ParameterLoop:
        """The loop around the first (clutched) circle factor."""
        ps = self.parameter_space
        if isinstance(ps, Circle):
            return ParameterLoop(lambda s: s, ps.start, ps.stop, self.clutch, self.window, "circle")
        a, b = ps.t_range
        return ParameterLoop(lambda s: (s, phi), a, b, self.clutch, self.window, f"t-loop(phi={phi:.6g})")

    def line_loop(self, phi0: float, turns: int) -> ParameterLoop:
        """Torus loop ``(t, phi0 + turns * 2 pi (t - a)/(b - a))`` over ``t`` in ``[a, b]``."""
        ps = self.parameter_space
        if not isinstance(ps, TorusGrid):
            raise InputError("line loops need a torus parameter space")
        a, b = ps.t_range
        p0, p1 = ps.phi_range
        rate = turns * (p1 - p0) / (b - a)
        return ParameterLoop(lambda s: (s, phi0 + rate * (s - a)), a, b, self.clutch, self.window,
                             f"line(phi0={phi0:.6g}, turns={turns})")

    def phi_loop(self, t: float) -> ParameterLoop:
        ps = self.parameter_space
        if not isinstance(ps, TorusGrid):
            raise InputError("phi loops need a torus parameter space")
        p0, p1 = ps.phi_range
        return ParameterLoop(lambda s: (t, s), p0, p1, None, self.window, f"phi-loop(t={t:.6g})")


def fd_hessian(gradient: Callable, x, u, h: float = HESSIAN_STEP) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    n = len(u)
    H = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        H[:, j] = (np.asarray(gradient(x, u + e)) - np.asarray(gradient(x, u - e))) / (2 * h)
    return 0.5 * (H + H.T)


def _sample_parameters(ps, n: int):
    if isinstance(ps, Circle):
        return list(np.linspace(ps.start, ps.stop, n))
    k = max(2, math.isqrt(n - 1) + 1)
    ts = np.linspace(*ps.t_range, k)
    phis = np.linspace(*ps.phi_range, k, endpoint=False)
    return [(t, p) for t in ts for p in phis]


@dataclass
class BranchReport:
    max_residual: float
    passed: bool
    branch_tol: float


def verify_trivial_branch(family: FunctionalFamily, n_samples: int = 64,
                          branch_tol: float = DEFAULT_BRANCH_TOL) -> BranchReport:
    worst = 0.0
    for x in _sample_parameters(family.parameter_space, n_samples):
        g = np.asarray(family.gradient(x, family.sigma(x)))
        worst = max(worst, float(np.linalg.norm(g)))
    return BranchReport(worst, worst <= branch_tol, branch_tol)


@dataclass
class HessianPath:
    path: OperatorPath
    loop: ClutchedLoop
    degenerate: bool  # Hessian singular at the base point


def hessian_family(family: FunctionalFamily, loop: ParameterLoop | None = None) -> HessianPath:
    """Hessians along ``loop`` at the trivial branch, as a path and a clutched loop."""
    loop = family.generator_loop() if loop is None else loop

    def evaluate(s):
        x = loop.point(s)
        return family.hess(x, family.sigma(x))

    path = OperatorPath(loop.start, loop.stop, evaluate)
    H0 = path(loop.start)
    w = np.linalg.eigvalsh(H0)
    scale = float(np.max(np.abs(w)))
    degenerate = bool(np.min(np.abs(w)) <= KERNEL_REL_TOL * (1.0 + scale))
    U = np.eye(family.state_dim) if loop.clutch is None else loop.clutch
    window = loop.window if loop.window is not None else 2.0 * scale + 1.0
    return HessianPath(path, ClutchedLoop(path, U, window), degenerate)


def sf_along_loop(family: FunctionalFamily, loop: ParameterLoop | None = None,
                  method=Method.CROSSING_FORM) -> SpectralFlowResult:
    """Windowed spectral flow of the Hessian family along ``loop``.

    Runs the real loop and its complexification; ``result.by_convention``
    records the complexified flow counted in complex and in real dimensions.
    """
    hp = hessian_family(family, loop)
    res = spectral_flow_loop(hp.loop, method)
    cpath = hp.path.complexified()
    cres = spectral_flow_loop(ClutchedLoop(cpath, hp.loop.clutch, hp.loop.window), method,
                              Convention.COMPLEX_DIM)
    res.by_convention = {"RealDim": 2 * cres.value, "ComplexDim": cres.value}
    return res


@dataclass
class Bracket:
    lo: float
    hi: float
    sf: int  # spectral flow over [lo, hi]
    loop_sf: int

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _morse_index(H: np.ndarray, tol: float) -> int | None:
    w = np.linalg.eigvalsh(H)
    if np.min(np.abs(w)) <= tol:
        return None
    return int(np.sum(w < 0))


def locate_bifurcation(family: FunctionalFamily, loop: ParameterLoop | None = None,
                       locate_tol: float = LOCATE_TOL, endpoint_nudge: float = ENDPOINT_NUDGE,
                       max_nudges: int = 20) -> Bracket:
    """Shrink the loop to an arc of relative width ``locate_tol`` carrying nonzero spectral flow.

    In finite dimensions the flow over an arc with invertible end Hessians
    is the drop of the Morse index between its ends, so bisection only needs
    Hessians at arc ends. Ends that land on a singular Hessian are nudged
    by at most ``endpoint_nudge`` of the loop length (and never more than
    1/16 of the current arc).
    """
    loop = family.generator_loop() if loop is None else loop
    total = sf_along_loop(family, loop).value
    if total == 0:
        raise PreconditionError("spectral flow along the loop is zero; no bifurcation certificate")
    hp = hessian_family(family, loop)
    path = hp.path
    length = path.length
    scale = 1.0 + float(np.linalg.norm(path(path.start), 2))
    tol = 1e3 * np.finfo(float).eps * scale

    def index_at(s):
        return _morse_index(path(s), tol)

    lo, hi = path.start, path.stop
    m_lo, m_hi = index_at(lo), index_at(hi)
    if m_lo is None or m_hi is None:
        raise DegenerateInputError("Hessian singular at the loop base point")
    while hi - lo > locate_tol * length:
        mid = 0.5 * (lo + hi)
        m_mid = index_at(mid)
        step = min(endpoint_nudge * length, (hi - lo) / 16)
        j = 0
        while m_mid is None:
            j += 1
            if j > max_nudges:
                raise DegenerateInputError(f"no invertible Hessian near s={mid:.12g} after {max_nudges} nudges")
            cand = mid + (-1) ** j * ((j + 1) // 2) * step / max_nudges * 2
            m_mid = index_at(cand)
            if m_mid is not None:
                mid = cand
        if m_lo - m_mid != 0:
            hi, m_hi = mid, m_mid
        else:
            lo, m_lo = mid, m_mid
    return Bracket(float(lo), float(hi), int(m_lo - m_hi), int(total))


@dataclass
class BranchPoint:
    s: float
    x: Any
    u: np.ndarray
    residual: float
    offset: float

    @property
    def amplitude(self) -> float:
        return float(np.linalg.norm(self.u))


@dataclass
class BranchResult:
    points: list[BranchPoint]
    failures: list[float]  # offsets where no nontrivial critical point was found
    side: int
    exponent: float | None
    kernel_vector: np.ndarray = field(repr=False, default=None)

    @property
    def found(self) -> bool:
        return bool(self.points)


def deflated_newton(family: FunctionalFamily, x, u0: np.ndarray, max_iter: int = 50,
                    tol: float = NEWTON_TOL, power: float = 2.0, shift: float = 1.0) -> tuple[np.ndarray, float, bool]:
    """Newton on ``grad f_x`` deflated away from the trivial branch.

    The residual is multiplied by ``||u - sigma||^-power + shift`` so that
    ``sigma(x)`` stops attracting the iteration; the deflated step is the
    plain Newton step rescaled by ``1 / (1 - d log m . step)``.
    """
    sigma = family.sigma(x)
    u = np.array(u0, dtype=float)
    for _ in range(max_iter):
        F = np.asarray(family.gradient(x, u))
        res = float(np.linalg.norm(F))
        r = u - sigma
        rn = float(np.linalg.norm(r))
        if res <= tol and rn >= 10 * NEWTON_STEP_FLOOR:
            return u, res, True
        try:
            step = -np.linalg.solve(family.hess(x, u), F)
        except np.linalg.LinAlgError:
            return u, res, False
        if rn < NEWTON_STEP_FLOOR:
            return u, res, False
        m = rn ** -power + shift
        grad_m = -power * rn ** (-power - 2) * r
        beta = float(grad_m @ step) / m
        if abs(1.0 - beta) < 1e-12:
            return u, res, False
        u = u + step / (1.0 - beta)
        if not np.all(np.isfinite(u)):
            return u, res, False
    F = np.asarray(family.gradient(x, u))
    res = float(np.linalg.norm(F))
    ok = res <= tol and float(np.linalg.norm(u - family.sigma(x))) >= 10 * NEWTON_STEP_FLOOR
    return u, res, ok


def continue_branch(family: FunctionalFamily, bracket: Bracket, loop: ParameterLoop | None = None,
                    n_steps: int = 7, offsets=None, delta: float = 1e-3, side: int | str = "auto",
                    max_iter: int = 50) -> BranchResult:
    """Nontrivial critical points at parameters stepping away from the bracket.

    Each point is found by deflated Newton seeded at ``sigma(x) + delta * e``
    where ``e`` spans the Hessian kernel at the bracket center. ``side`` is
    +1/-1 or ``"auto"``, which picks the side where ``<h_x e, e>`` is
    negative. The amplitude exponent is the least-squares slope of
    ``log ||u - sigma||`` against ``log`` of the parameter offset.
    """
    loop = family.generator_loop() if loop is None else loop
    length = loop.stop - loop.start
    if offsets is None:
        offsets = np.logspace(-1, -4, n_steps) * length
    sc = bracket.center
    xc = loop.point(sc)
    w, V = np.linalg.eigh(family.hess(xc, family.sigma(xc)))
    e = V[:, int(np.argmin(np.abs(w)))]

    if side == "auto":
        probe = float(np.min(offsets))

        def rayleigh(sign):
            x = loop.point(sc + sign * probe)
            return float(e @ family.hess(x, family.sigma(x)) @ e)

        side = -1 if rayleigh(-1) < rayleigh(1) else 1
    side = int(side)

    points, failures = [], []
    for d in offsets:
        s = sc + side * d
        x = loop.point(s)
        sigma = family.sigma(x)
        u, res, ok = deflated_newton(family, x, sigma + delta * e, max_iter=max_iter)
        if ok:
            points.append(BranchPoint(float(s), x, u - sigma, res, float(d)))
        else:
            failures.append(float(d))

    exponent = None
    if len(points) >= 2:
        logs_d = np.log([p.offset for p in points])
        logs_a = np.log([p.amplitude for p in points])
        exponent = float(np.polyfit(logs_d, logs_a, 1)[0])
    return BranchResult(points, failures, side, exponent, e)


@dataclass
class BifurcationCertificate:
    loop: str
    sf: int
    bracket: Bracket
    witness: BranchPoint
    branch: BranchResult = field(repr=False)


def certify(family: FunctionalFamily, loop: ParameterLoop | None = None, **locate_kwargs) -> BifurcationCertificate:
    """Spectral flow, bracket and nontrivial witness for one loop."""
    loop = family.generator_loop() if loop is None else loop
    bracket = locate_bifurcation(family, loop, **locate_kwargs)
    branch = continue_branch(family, bracket, loop)
    if not branch.found:
        raise DegenerateInputError("no nontrivial critical point found near the bracket")
    witness = min(branch.points, key=lambda p: p.offset)
    return BifurcationCertificate(loop.label, bracket.loop_sf, bracket, witness, branch)


# --------------------------------------------------------------------------
# torus scans


@dataclass
class BifSetScan:
    t_nodes: np.ndarray  # n1 + 1 instants, the last one is the clutched end
    phi_nodes: np.ndarray
    flagged: np.ndarray  # (n1, n2) cells
    certified: np.ndarray  # cells with an edge carrying nonzero spectral flow
    candidate_only: np.ndarray  # degenerate corner without an edge jump
    box_dimension: float | None
    box_counts: list[tuple[int, int]]
    wraps_generator: tuple[bool, bool]  # (t-generator, phi-generator)
    complement_connected: bool
    loops: list[dict] = field(default_factory=list)
    t_edge_flow: np.ndarray | None = field(default=None, repr=False)  # (n1, n2)
    phi_edge_flow: np.ndarray | None = field(default=None, repr=False)  # (n1 + 1, n2)

    def cells_on_loop(self, loop: ParameterLoop, samples: int | None = None) -> set[tuple[int, int]]:
        n1, n2 = self.flagged.shape
        a, b = self.t_nodes[0], self.t_nodes[-1]
        p0 = self.phi_nodes[0]
        dphi = self.phi_nodes[1] - self.phi_nodes[0]
        samples = samples or 16 * (n1 + n2)
        cells = set()
        for s in np.linspace(loop.start, loop.stop, samples):
            t, phi = loop.point(s)
            i = min(int((t - a) / (b - a) * n1), n1 - 1)
            j = int(math.floor((phi - p0) / dphi)) % n2
            cells.add((i, j))
        return cells


def box_counting_dimension(mask: np.ndarray, levels: int = 5) -> tuple[float | None, list[tuple[int, int]]]:
    """Least-squares slope of ``log N(s)`` vs ``log(1/s)`` over boxes of side ``2^0..2^(levels-1)`` cells."""
    counts = []
    for lev in range(levels):
        s = 2**lev
        n1, n2 = mask.shape
        p1, p2 = -(-n1 // s) * s, -(-n2 // s) * s
        padded = np.zeros((p1, p2), dtype=bool)
        padded[:n1, :n2] = mask
        blocks = padded.reshape(p1 // s, s, p2 // s, s).any(axis=(1, 3))
        counts.append((s, int(blocks.sum())))
    if counts[0][1] == 0:
        return None, counts
    x = np.log([1.0 / s for s, _ in counts])
    y = np.log([max(c, 1) for _, c in counts])
    return float(np.polyfit(x, y, 1)[0]), counts


def torus_wrapping(mask: np.ndarray) -> tuple[bool, bool]:
    """Whether some 4-connected component of ``mask`` on the torus wraps each generator.

    Breadth-first search on the universal cover: reaching a cell twice with
    different lifts means the component contains a non-contractible cycle.
    """
    n1, n2 = mask.shape
    lift = {}
    wraps = [False, False]
    for start in zip(*np.nonzero(mask)):
        start = (int(start[0]), int(start[1]))
        if start in lift:
            continue
        lift[start] = (0, 0)
        queue = deque([start])
        while queue:
            i, j = queue.popleft()
            li, lj = lift[(i, j)]
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ni, nj = i + di, j + dj
                wi, wj = li + (ni // n1), lj + (nj // n2)
                ni, nj = ni % n1, nj % n2
                if not mask[ni, nj]:
                    continue
                if (ni, nj) not in lift:
                    lift[(ni, nj)] = (wi, wj)
                    queue.append((ni, nj))
                else:
                    oi, oj = lift[(ni, nj)]
                    wraps[0] |= oi != wi
                    wraps[1] |= oj != wj
    return wraps[0], wraps[1]


def torus_components(mask: np.ndarray) -> int:
    """Number of 4-connected components of ``mask`` on the torus."""
    n1, n2 = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    count = 0
    for i0, j0 in zip(*np.nonzero(mask)):
        if seen[i0, j0]:
            continue
        count += 1
        seen[i0, j0] = True
        queue = deque([(i0, j0)])
        while queue:
            i, j = queue.popleft()
            for ni, nj in (((i + 1) % n1, j), ((i - 1) % n1, j), (i, (j + 1) % n2), (i, (j - 1) % n2)):
                if mask[ni, nj] and not seen[ni, nj]:
                    seen[ni, nj] = True
                    queue.append((ni, nj))
    return count


def bif_set_scan(family: FunctionalFamily, kernel_tol: float | None = None,
                 loop_phis=None, loop_turns=(0, 1, -1, 2)) -> BifSetScan:
    """Flag grid cells of a torus family that meet the bifurcation set.

    A cell is certified when one of its four edges carries nonzero
    spectral flow (the Morse index differs between the edge's ends) and a
    candidate when a corner Hessian is singular without such an edge.
    Straight loops ``line_loop(phi0, turns)`` are sampled independently
    with the full spectral flow engine and checked against the flags.
    """
    ps = family.parameter_space
    if not isinstance(ps, TorusGrid):
        raise InputError("bif_set_scan needs a torus parameter space")
    n1, n2 = ps.shape
    if n1 < 32 or n2 < 32:
        raise InputError("torus grid must be at least 32 x 32")
    a, b = ps.t_range
    p0, p1 = ps.phi_range
    ts = a + (b - a) * np.arange(n1 + 1) / n1
    phis = p0 + (p1 - p0) * np.arange(n2) / n2

    H = np.empty((n1 + 1, n2, family.state_dim, family.state_dim))
    for i, t in enumerate(ts):
        for j, phi in enumerate(phis):
            x = (float(t), float(phi))
            H[i, j] = family.hess(x, family.sigma(x))
    w = np.linalg.eigvalsh(H)
    absmin = np.min(np.abs(w), axis=-1)
    if kernel_tol is None:
        kernel_tol = KERNEL_REL_TOL * (1.0 + float(np.max(np.abs(w))))
    n_neg = np.sum(w < 0, axis=-1)
    singular = absmin <= kernel_tol

    t_flow = n_neg[:-1, :] - n_neg[1:, :]  # edge (i -> i+1) at phi_j
    phi_flow = n_neg - np.roll(n_neg, -1, axis=1)  # edge (j -> j+1) at t_i, i = 0..n1
    # an edge touching a singular corner has no defined flow
    t_ok = ~(singular[:-1, :] | singular[1:, :])
    phi_ok = ~(singular | np.roll(singular, -1, axis=1))
    t_jump = (t_flow != 0) & t_ok
    phi_jump = (phi_flow != 0) & phi_ok

    certified = (t_jump | np.roll(t_jump, -1, axis=1) | phi_jump[:-1, :] | phi_jump[1:, :])
    corner_sing = (singular[:-1, :] | singular[1:, :]
                   | np.roll(singular[:-1, :], -1, axis=1) | np.roll(singular[1:, :], -1, axis=1))
    candidate = corner_sing & ~certified
    flagged = certified | candidate

    dim, counts = box_counting_dimension(flagged)
    wraps = torus_wrapping(flagged)
    unflagged = ~flagged
    complement_connected = torus_components(unflagged) <= 1

    scan = BifSetScan(ts, phis, flagged, certified, candidate, dim, counts, wraps,
                      complement_connected, [], t_flow, phi_flow)

    if loop_phis is None:
        loop_phis = [p0 + (p1 - p0) * f for f in (0.0, 0.3183098861837907, 0.7071067811865476)]
    any_nonzero = False
    for phi0 in loop_phis:
        for turns in loop_turns:
            loop = family.line_loop(phi0, turns)
            sf = sf_along_loop(family, loop).value
            hit = bool(any(flagged[c] for c in scan.cells_on_loop(loop)))
            any_nonzero |= sf != 0
            scan.loops.append({"loop": loop.label, "sf": int(sf), "intersects": hit})
    if any_nonzero and not flagged.any():
        raise ResolutionError("a sampled loop has nonzero spectral flow but no cell is flagged; refine the grid")
    return scan


# --------------------------------------------------------------------------
# built-in scenarios


def _pitchfork_parts(A_of: Callable):
    def value(x, u):
        return 0.5 * float(u @ A_of(x) @ u) + 0.25 * float(u @ u) ** 2

    def gradient(x, u):
        return A_of(x) @ u + float(u @ u) * u

    def hessian(x, u):
        return A_of(x) + float(u @ u) * np.eye(len(u)) + 2.0 * np.outer(u, u)

    return value, gradient, hessian


def pitchfork_family(N: int = 16, twist: int = 1, modes: int = 1, window: float | None = None) -> FunctionalFamily:
    """``f_t(u) = 1/2 <A(t) u, u> + 1/4 |u|^4`` with the twisted diagonal ``A(t)``."""
    evaluate, _, U = twisted_diagonal(N, twist, modes)
    value, gradient, hessian = _pitchfork_parts(evaluate)
    return FunctionalFamily(Circle(0.5, 1.5), modes * (2 * N + 1), value, gradient, hessian,
                            clutch=U, window=N / 2 if window is None else window,
                            name="pitchfork-twisted")


def _smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    f = lambda y: np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)  # noqa: E731
    return f(x) / (f(x) + f(1.0 - x))


def perturbed_torus_family(N: int = 16, eps: float = 0.3, grid: int = 128,
                           window: float | None = None) -> FunctionalFamily:
    """Pitchfork over the torus ``(t, phi)`` with ``A = diag(n + t) + eps cos(phi) b(t) E``.

    ``E`` projects onto ``e_{-1}`` and ``b`` is a smooth bump equal to 1
    for ``|t - 1| <= 0.35`` and 0 for ``|t - 1| >= 0.45``, so the kernel
    locus is exactly ``t = 1 - eps cos(phi)`` for ``eps < 0.35`` and the
    shift clutch stays exact.
    """
    if not abs(eps) < 0.35:
        raise InputError("eps must satisfy |eps| < 0.35")
    evaluate, _, U = twisted_diagonal(N, 1)
    P = np.zeros((2 * N + 1, 2 * N + 1))
    P[N - 1, N - 1] = 1.0

    def A_of(x):
        t, phi = x
        bump = float(_smooth_step((0.45 - abs(t - 1.0)) / 0.1))
        return evaluate(t) + eps * math.cos(phi) * bump * P

    value, gradient, hessian = _pitchfork_parts(A_of)
    return FunctionalFamily(TorusGrid((grid, grid), (0.5, 1.5)), 2 * N + 1, value, gradient, hessian,
                            clutch=U, window=N / 2 if window is None else window,
                            name="pitchfork-perturbed-torus")


def quadratic_invertible_family(N: int = 4, seed: int = 0, strength: float = 0.2) -> FunctionalFamily:
    """``f_t(u) = 1/2 <A(t) u, u>`` on ``[0, 1]`` with ``A(t)`` invertible for every ``t``."""
    rng = np.random.default_rng(seed)
    n = 2 * N + 1
    D = np.diag(np.arange(-N, N + 1) + 0.5)
    S = []
    for _ in range(2):
        B = rng.standard_normal((n, n))
        B = B + B.T
        S.append(B / np.linalg.norm(B, 2))

    def A_of(t):
        return D + strength * (math.cos(TWO_PI * t) * S[0] + math.sin(TWO_PI * t) * S[1])

    def value(x, u):
        return 0.5 * float(u @ A_of(x) @ u)

    def gradient(x, u):
        return A_of(x) @ u

    def hessian(x, u):
        return A_of(x)

    return FunctionalFamily(Circle(0.0, 1.0), n, value, gradient, hessian, clutch=np.eye(n),
                            window=N / 2, name="quadratic-invertible")


SCENARIOS: dict[str, tuple[str, dict[str, Param], Callable]] = {
    "pitchfork-twisted": (
        "1/2 <A(t)u,u> + 1/4 |u|^4, A(t) = diag(n + 1/2 + k(t - 1/2)), shift clutch",
        {
            "N": Param(int, 16, "truncation, dimension 2N+1 per mode"),
            "twist": Param(int, 1, "twist k"),
            "window": Param(float, 0.0, "spectral window, 0 means N/2"),
            "modes": Param(int, 1, "number of identical copies"),
        },
        lambda p, seed: pitchfork_family(p["N"], p["twist"], p["modes"], p["window"] or None),
    ),
    "pitchfork-perturbed-torus": (
        "pitchfork over the torus, A = diag(n + t) + eps cos(phi) b(t) E_{-1}",
        {
            "N": Param(int, 16, "truncation"),
            "eps": Param(float, 0.3, "perturbation strength, |eps| < 0.35"),
            "grid": Param(int, 128, "cells per torus direction"),
        },
        lambda p, seed: perturbed_torus_family(p["N"], p["eps"], p["grid"]),
    ),
    "quadratic-invertible": (
        "1/2 <A(t)u,u> with A(t) invertible on the whole circle",
        {
            "N": Param(int, 4, "truncation"),
            "seed": Param(int, None, "perturbation seed, defaults to the run seed"),
        },
        lambda p, seed: quadratic_invertible_family(p["N"], seed if p["seed"] is None else p["seed"]),
    ),
    "two-crossing": (
        "twist-2 pitchfork: crossings with signature +1 at t = 0.75 and t = 1.25",
        {
            "N": Param(int, 16, "truncation"),
        },
        lambda p, seed: pitchfork_family(p["N"], 2),
    ),
}
