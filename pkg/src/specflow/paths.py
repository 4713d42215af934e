"""One-parameter families of self-adjoint matrices.

An :class:`OperatorPath` is an evaluator ``t -> A(t)`` on ``[start, stop]``.
A :class:`ClutchedLoop` closes a path into a family over the circle by a
unitary ``U`` that identifies the end fiber with the start fiber; since a
Galerkin truncation can only intertwine the endpoints approximately, the
identification is demanded only on the spectral window ``|lambda| <= window``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .core import KERNEL_REL_TOL, hermitize
from .errors import ClutchError, InputError, ResolutionError

UNITARY_TOL = 1e-10
FRAME_TOL = 1e-8
DEFAULT_CLUTCH_TOL = 1e-8
DEFAULT_MAX_POINTS = 200_000


class ScalarField(str, enum.Enum):
    REAL = "Real"
    COMPLEX = "Complex"


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.conj().T)


@dataclass(frozen=True)
class OperatorPath:
    start: float
    stop: float
    evaluate: Callable[[float], Any]
    derivative: Callable[[float], Any] | None = None
    scalar_field: ScalarField = ScalarField.REAL
    lipschitz: float | None = None  # known bound on eigenvalue speed, if any

    def __post_init__(self):
        if not self.stop > self.start:
            raise InputError(f"empty interval [{self.start}, {self.stop}]")

    def __call__(self, t: float) -> np.ndarray:
        A = np.asarray(self.evaluate(float(t)))
        if self.scalar_field is ScalarField.COMPLEX:
            A = A.astype(complex, copy=False)
        return _sym(A)

    @property
    def interval(self) -> tuple[float, float]:
        return (self.start, self.stop)

    @property
    def length(self) -> float:
        return self.stop - self.start

    @property
    def dim(self) -> int:
        return self(self.start).shape[0]

    def restrict(self, lo: float, hi: float) -> "OperatorPath":
        return OperatorPath(lo, hi, self.evaluate, self.derivative, self.scalar_field, self.lipschitz)

    def reversed(self) -> "OperatorPath":
        a, b = self.start, self.stop
        deriv = None
        if self.derivative is not None:
            d = self.derivative
            deriv = lambda t: -np.asarray(d(a + b - t))  # noqa: E731
        return OperatorPath(a, b, lambda t: self.evaluate(a + b - t), deriv, self.scalar_field, self.lipschitz)

    def complexified(self) -> "OperatorPath":
        if self.scalar_field is ScalarField.COMPLEX:
            return self
        return OperatorPath(self.start, self.stop, self.evaluate, self.derivative, ScalarField.COMPLEX, self.lipschitz)


@dataclass(frozen=True)
class ClutchedLoop:
    path: OperatorPath
    clutch: np.ndarray
    window: float
    clutch_tol: float = DEFAULT_CLUTCH_TOL

    def __post_init__(self):
        U = np.asarray(self.clutch)
        n = self.path.dim
        if U.shape != (n, n):
            raise InputError(f"clutch has shape {U.shape}, expected {(n, n)}")
        if np.linalg.norm(U.conj().T @ U - np.eye(n)) > UNITARY_TOL * n:
            raise InputError("clutch is not unitary")
        if not self.window > 0:
            raise InputError("spectral window must be positive")


@dataclass
class PathSampling:
    grid: np.ndarray  # strictly increasing instants
    eigenvalues: np.ndarray  # (len(grid), dim), ascending per row
    eigenvectors: np.ndarray  # (len(grid), dim, dim)
    lipschitz: float
    kernel_tol: float
    resolution: float  # refinement stops below this spacing

    def __len__(self) -> int:
        return len(self.grid)


def _spectra(path: OperatorPath, ts) -> tuple[np.ndarray, np.ndarray]:
    mats = np.stack([path(t) for t in ts])
    return np.linalg.eigh(mats)


def path_derivative(path: OperatorPath, t: float, h: float | None = None) -> np.ndarray:
    """Derivative of the path at ``t``.

    Uses the analytic derivative when the path carries one; otherwise a
    central difference (one-sided within ``h`` of an endpoint) with one
    Richardson step.
    """
    if path.derivative is not None:
        D = np.asarray(path.derivative(float(t)))
        if path.scalar_field is ScalarField.COMPLEX:
            D = D.astype(complex, copy=False)
        return _sym(D)
    h = 1e-5 * path.length if h is None else h
    if t - h >= path.start and t + h <= path.stop:
        def diff(s):
            return (path(t + s) - path(t - s)) / (2 * s)

        return (4 * diff(h / 2) - diff(h)) / 3
    sign = 1.0 if t - h < path.start else -1.0
    A0 = path(t)

    def one_sided(s):
        return (path(t + sign * s) - A0) / (sign * s)

    return 2 * one_sided(h / 2) - one_sided(h)


def estimate_lipschitz(path: OperatorPath, points: int = 9) -> float:
    """Bound on eigenvalue speed, from the path's own bound or ``1.5 max ||A'||``."""
    if path.lipschitz is not None:
        return float(path.lipschitz)
    ts = np.linspace(path.start, path.stop, points)
    speed = max(float(np.linalg.norm(path_derivative(path, t), 2)) for t in ts)
    return 1.5 * speed


def sample_path(
    path: OperatorPath,
    initial_points: int = 33,
    lipschitz_bound: float | None = None,
    kernel_tol: float | None = None,
    max_points: int = DEFAULT_MAX_POINTS,
) -> PathSampling:
    """Adaptively sample the spectrum along ``path``.

    An interval ``[t_i, t_{i+1}]`` is bisected while some eigenvalue at one
    of its ends satisfies ``|lambda| < M (t_{i+1} - t_i)``, i.e. while a
    branch moving at speed ``M`` could reach zero inside it. Bisection stops
    at spacing ``kernel_tol / M``, below which any zero passage shows up as
    a sample with ``|lambda| <= kernel_tol``.
    """
    if initial_points < 2:
        raise InputError("initial_points must be at least 2")
    grid = np.linspace(path.start, path.stop, initial_points)
    w, V = _spectra(path, grid)
    if kernel_tol is None:
        kernel_tol = KERNEL_REL_TOL * (1.0 + float(np.max(np.abs(w))))
    M = estimate_lipschitz(path) if lipschitz_bound is None else float(lipschitz_bound)
    M = max(M, 1e-300)
    resolution = max(kernel_tol / M, 1e-14 * path.length)

    while True:
        h = np.diff(grid)
        near = np.minimum(np.abs(w[:-1]), np.abs(w[1:])) < M * h[:, None]
        need = near.any(axis=1) & (h > 2 * resolution)
        if not need.any():
            break
        idx = np.flatnonzero(need)
        if len(grid) + len(idx) > max_points:
            i = int(idx[0])
            raise ResolutionError(
                f"sampling exceeded {max_points} points near [{grid[i]:.12g}, {grid[i + 1]:.12g}]",
                interval=(float(grid[i]), float(grid[i + 1])),
            )
        mids = 0.5 * (grid[idx] + grid[idx + 1])
        wm, Vm = _spectra(path, mids)
        grid = np.insert(grid, idx + 1, mids)
        w = np.insert(w, idx + 1, wm, axis=0)
        V = np.insert(V, idx + 1, Vm, axis=0)

    return PathSampling(grid, w, V, M, float(kernel_tol), resolution)


def cogredience_transform(path: OperatorPath, frame: Callable[[float], Any],
                          frame_derivative: Callable[[float], Any] | None = None) -> OperatorPath:
    """The path ``t -> F(t)^* A(t) F(t)`` for a unitary frame ``F``.

    The frame is checked for unitarity at every evaluation. An analytic
    derivative is provided when both the path and the frame have one.
    """

    def F_at(t):
        F = np.asarray(frame(t))
        n = F.shape[0]
        if np.linalg.norm(F.conj().T @ F - np.eye(n)) > FRAME_TOL:
            raise InputError(f"frame is not unitary at t={t}")
        return F

    def evaluate(t):
        F = F_at(t)
        return F.conj().T @ path(t) @ F

    deriv = None
    if path.derivative is not None and frame_derivative is not None:
        def deriv(t):
            F = F_at(t)
            dF = np.asarray(frame_derivative(t))
            A = path(t)
            return dF.conj().T @ A @ F + F.conj().T @ path_derivative(path, t) @ F + F.conj().T @ A @ dF

    field_ = path.scalar_field
    probe = np.asarray(frame(path.start))
    if np.iscomplexobj(probe) and np.any(probe.imag != 0):
        field_ = ScalarField.COMPLEX
    return OperatorPath(path.start, path.stop, evaluate, deriv, field_, path.lipschitz)


@dataclass
class ClutchReport:
    passed: bool
    max_defect: float
    pairs: list[tuple[float, float]]  # (eigenvalue of A(a), ||A(b) U v - lambda U v||)
    clutch_tol: float


def validate_clutch(loop: ClutchedLoop) -> ClutchReport:
    """Check ``A(b) U v = lambda U v`` for every windowed eigenpair of ``A(a)``."""
    p = loop.path
    w, V = np.linalg.eigh(p(p.start))
    Ab = p(p.stop)
    U = np.asarray(loop.clutch)
    pairs = []
    for lam, v in zip(w, V.T):
        if abs(lam) > loop.window:
            continue
        Uv = U @ v
        pairs.append((float(lam), float(np.linalg.norm(Ab @ Uv - lam * Uv))))
    worst = max((d for _, d in pairs), default=0.0)
    return ClutchReport(worst <= loop.clutch_tol, worst, pairs, loop.clutch_tol)


def require_clutch(loop: ClutchedLoop) -> ClutchReport:
    report = validate_clutch(loop)
    if not report.passed:
        raise ClutchError(
            f"clutch does not intertwine the windowed endpoint spectra "
            f"(max defect {report.max_defect:.3e} > {report.clutch_tol:.1e})"
        )
    return report


# --------------------------------------------------------------------------
# built-in families


def shift_matrix(dim: int, shift: int) -> np.ndarray:
    """Cyclic permutation ``e_p -> e_{p - shift}``."""
    U = np.zeros((dim, dim))
    for p in range(dim):
        U[(p - shift) % dim, p] = 1.0
    return U


def twisted_diagonal(N: int, twist: int, modes: int = 1) -> tuple[Callable, Callable, np.ndarray]:
    """Evaluator, derivative and clutch of ``diag(n + 1/2 + k (t - 1/2))``.

    ``n`` runs over ``-N..N`` and ``t`` over ``[1/2, 3/2]``. Branch ``n``
    at ``t = 3/2`` equals branch ``n + k`` at ``t = 1/2``, so the shift
    ``e_n -> e_{n-k}`` intertwines the endpoints away from the band edge.
    ``modes`` stacks identical copies.
    """
    n = np.arange(-N, N + 1, dtype=float)
    base = np.tile(n + 0.5, modes)
    slope = np.full(base.shape, float(twist))
    block = 2 * N + 1
    U = np.kron(np.eye(modes), shift_matrix(block, twist))

    def evaluate(t):
        return np.diag(base + twist * (t - 0.5))

    def derivative(t):
        return np.diag(slope)

    return evaluate, derivative, U


def twisted_fourier_loop(N: int = 16, twist: int = 1, window: float | None = None,
                         modes: int = 1) -> ClutchedLoop:
    evaluate, derivative, U = twisted_diagonal(N, twist, modes)
    path = OperatorPath(0.5, 1.5, evaluate, derivative, lipschitz=abs(twist))
    return ClutchedLoop(path, U, N / 2 if window is None else window)


def planted_path(dim: int, n_crossings: int, seed: int, rotate: bool = True,
                 signs: list[int] | None = None) -> tuple[OperatorPath, list[tuple[float, int]]]:
    """Path on ``[-1, 1]`` with known regular crossings.

    ``A(t) = Q(t) D(t) Q(t)^T`` where ``Q(t) = Q0 expm(t S)`` rotates the
    eigenbasis and ``D`` holds ``n_crossings`` linear branches
    ``s_i (t - c_i)`` plus wobbling branches bounded away from zero.
    Returns the path and the planted ``(c_i, sign s_i)`` list.
    """
    if not 0 <= n_crossings <= dim:
        raise InputError("need 0 <= n_crossings <= dim")
    rng = np.random.default_rng(seed)
    cs: list[float] = []
    while len(cs) < n_crossings:
        c = float(rng.uniform(-0.85, 0.85))
        if all(abs(c - d) > 0.05 for d in cs):
            cs.append(c)
    cs.sort()
    if signs is None:
        signs = [int(s) for s in rng.choice([-1, 1], size=n_crossings)]
    slopes = np.array([s * rng.uniform(0.5, 2.0) for s in signs])
    m = dim - n_crossings
    offsets = rng.choice([-1.0, 1.0], size=m) * rng.uniform(0.5, 2.0, size=m)
    freqs = rng.uniform(0.5, 3.0, size=m)
    phases = rng.uniform(0, 2 * np.pi, size=m)
    cs_arr = np.array(cs)

    Q0, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    S = rng.standard_normal((dim, dim)) * (0.3 if rotate else 0.0)
    S = S - S.T
    # expm(t S) through the spectral decomposition of the skew matrix S
    theta, W = np.linalg.eigh(-1j * S)
    Q0W = Q0 @ W
    Wh = W.conj().T

    def diag_part(t):
        return np.concatenate([slopes * (t - cs_arr), offsets + 0.2 * np.sin(freqs * t + phases)])

    def diag_rate(t):
        return np.concatenate([slopes, 0.2 * freqs * np.cos(freqs * t + phases)])

    def Q(t):
        return ((Q0W * np.exp(1j * theta * t)) @ Wh).real

    def evaluate(t):
        Qt = Q(t)
        return (Qt * diag_part(t)) @ Qt.T

    def derivative(t):
        Qt = Q(t)
        dQ = Qt @ S
        D = np.diag(diag_part(t))
        return dQ @ D @ Qt.T + (Qt * diag_rate(t)) @ Qt.T + Qt @ D @ dQ.T

    # the eigenvalues are exactly the diagonal branches
    speed = float(np.max(np.abs(np.concatenate([slopes, 0.2 * freqs, [0.0]]))))
    path = OperatorPath(-1.0, 1.0, evaluate, derivative, lipschitz=speed)
    return path, list(zip(cs, signs))


def random_matrix_loop(dim: int, seed: int) -> ClutchedLoop:
    """Genuine loop ``A0 + cos(2 pi t) A1 + sin(2 pi t) A2`` on ``[0, 1]`` with ``U = I``.

    ``A0`` is shifted so that ``A(0)`` sits mid-gap, away from singular.
    The window covers the whole spectrum.
    """
    rng = np.random.default_rng(seed)

    def sym(scale):
        B = rng.standard_normal((dim, dim)) * scale
        return 0.5 * (B + B.T)

    A0, A1, A2 = sym(1.0), sym(0.5), sym(0.5)
    w = np.linalg.eigvalsh(A0 + A1)
    mids = 0.5 * (w[:-1] + w[1:]) if dim > 1 else w + 1.0
    A0 = A0 - mids[np.argmin(np.abs(mids))] * np.eye(dim)
    tau = 2 * np.pi

    def evaluate(t):
        return A0 + np.cos(tau * t) * A1 + np.sin(tau * t) * A2

    def derivative(t):
        return tau * (-np.sin(tau * t) * A1 + np.cos(tau * t) * A2)

    bound = sum(np.linalg.norm(B, 2) for B in (A0, A1, A2))
    path = OperatorPath(0.0, 1.0, evaluate, derivative)
    return ClutchedLoop(path, np.eye(dim), 1.1 * bound)


# --------------------------------------------------------------------------
# registry consumed by the CLI


@dataclass(frozen=True)
class Param:
    kind: type
    default: Any
    doc: str

    def parse(self, raw: Any) -> Any:
        if self.kind is list:
            if isinstance(raw, str):
                return [float(x) for x in raw.split(",") if x.strip()]
            return [float(x) for x in raw]
        if self.kind is bool and isinstance(raw, str):
            if raw.lower() in ("1", "true", "yes"):
                return True
            if raw.lower() in ("0", "false", "no"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if self.kind is int and isinstance(raw, float) and not raw.is_integer():
            raise ValueError(f"not an integer: {raw!r}")
        return self.kind(raw)


@dataclass
class BuiltFamily:
    key: str
    path: OperatorPath
    loop: ClutchedLoop | None = None
    planted: dict[str, Any] = field(default_factory=dict)


def _build_diag_linear(p, seed):
    cs = p["c"]
    signs = p["signs"] or [1.0] * len(cs)
    if len(signs) != len(cs):
        raise InputError("signs and c must have the same length")
    cs_arr, sg = np.array(cs), np.array(signs)

    path = OperatorPath(p["start"], p["stop"], lambda t: np.diag(sg * (t - cs_arr)),
                        lambda t: np.diag(sg), lipschitz=float(np.max(np.abs(sg))) if len(sg) else 0.0)
    expected = int(sum(np.sign(s) for c, s in zip(cs, signs) if p["start"] < c < p["stop"]))
    return BuiltFamily("diag-linear", path, planted={"sf": expected})


def _build_twisted(p, seed):
    loop = twisted_fourier_loop(p["N"], p["twist"], p["window"] or None, p["modes"])
    return BuiltFamily("twisted-fourier", loop.path, loop, {"sf": p["twist"] * p["modes"]})


def _build_planted(p, seed):
    path, planted = planted_path(p["dim"], p["crossings"], seed if p["seed"] is None else p["seed"])
    return BuiltFamily("planted-crossings", path,
                       planted={"sf": int(sum(s for _, s in planted)), "instants": [c for c, _ in planted]})


def _build_random_smooth(p, seed):
    loop = random_matrix_loop(p["dim"], seed if p["seed"] is None else p["seed"])
    return BuiltFamily("random-smooth", loop.path, loop, {"sf": 0})


FAMILIES: dict[str, tuple[str, dict[str, Param], Callable]] = {
    "diag-linear": (
        "diag(s_i (t - c_i)) on [start, stop]",
        {
            "c": Param(list, [-0.4, 0.3], "comma-separated crossing instants"),
            "signs": Param(list, [], "comma-separated slopes, default all +1"),
            "start": Param(float, -1.0, "interval start"),
            "stop": Param(float, 1.0, "interval end"),
        },
        _build_diag_linear,
    ),
    "twisted-fourier": (
        "truncated twisted family diag(n + 1/2 + k(t - 1/2)), n = -N..N, shift clutch",
        {
            "N": Param(int, 16, "truncation, dimension 2N+1 per mode"),
            "twist": Param(int, 1, "twist k"),
            "window": Param(float, 0.0, "spectral window, 0 means N/2"),
            "modes": Param(int, 1, "number of identical copies"),
        },
        _build_twisted,
    ),
    "planted-crossings": (
        "rotating-eigenbasis path on [-1, 1] with planted regular crossings",
        {
            "dim": Param(int, 8, "matrix dimension"),
            "crossings": Param(int, 3, "number of planted crossings"),
            "seed": Param(int, None, "planting seed, defaults to the run seed"),
        },
        _build_planted,
    ),
    "random-smooth": (
        "genuine matrix loop A0 + cos(2 pi t) A1 + sin(2 pi t) A2, U = I",
        {
            "dim": Param(int, 6, "matrix dimension"),
            "seed": Param(int, None, "matrix seed, defaults to the run seed"),
        },
        _build_random_smooth,
    ),
}
