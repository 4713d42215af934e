"""Computable stand-ins for the index bundle and its odd Chern number.

Over the circle the odd first Chern number of a self-adjoint loop is an
integer. Here it is computed as the winding of ``det cayley(A(t))`` where
``A(t)`` is compressed to its spectral window, an algorithm that shares
nothing with the crossing-form machinery it is compared against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import KERNEL_REL_TOL, cayley, hermitize
from .errors import (
    DegenerateInputError,
    EndpointSingularError,
    NonFredholmError,
    PrecisionError,
    ResolutionError,
    TransversalityError,
    UnderResolvedError,
    WindowError,
)
from .paths import ClutchedLoop, require_clutch

DEFAULT_WINDING_TOL = 0.2
TRANSVERSALITY_REL_TOL = 1e-6
MAX_PHASE_STEP = np.pi / 2


@dataclass(frozen=True)
class AlphaPath:
    source: np.ndarray
    grid: np.ndarray
    samples: np.ndarray  # (len(grid), n, n)

    def min_singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.samples, compute_uv=False)[:, -1]

    def singular_instants(self, tol: float | None = None) -> np.ndarray:
        if tol is None:
            tol = KERNEL_REL_TOL * (1.0 + float(np.linalg.norm(self.source, 2)))
        return self.grid[self.min_singular_values() <= tol]

    def closed_samples(self) -> np.ndarray:
        """Append the continuation ``Id exp(i pi t)``, ``t`` in ``(1, 2]``."""
        n = self.source.shape[0]
        tail = self.grid[1:] + 1.0
        rest = np.exp(1j * np.pi * tail)[:, None, None] * np.eye(n)
        return np.concatenate([self.samples, rest])


def alpha_path(A, n_samples: int = 201) -> AlphaPath:
    """Sample ``Id cos(pi t) + i A sin(pi t)`` on ``[0, 1]``, a path from ``Id`` to ``-Id``."""
    if n_samples < 3:
        raise ValueError("n_samples must be at least 3")
    A = hermitize(A).astype(complex)
    t = np.linspace(0.0, 1.0, n_samples)
    eye = np.eye(A.shape[0])
    samples = np.cos(np.pi * t)[:, None, None] * eye + 1j * np.sin(np.pi * t)[:, None, None] * A
    return AlphaPath(A, t, samples)


def _default_tol(mats) -> float:
    return TRANSVERSALITY_REL_TOL * (1.0 + max(float(np.linalg.norm(L, 2)) for L in mats))


def _cokernel_directions(L: np.ndarray, tol: float) -> np.ndarray:
    U, s, _ = np.linalg.svd(L, full_matrices=True)
    s_ext = np.zeros(U.shape[0])
    s_ext[: len(s)] = s
    return U[:, s_ext <= tol]


def transverse_subspace(family: Callable, grid: Sequence, tol: float | None = None) -> np.ndarray:
    """Greedy finite-dimensional ``V`` with ``Im L_x + V`` the whole codomain at every grid point.

    Walks the grid, appending the part of each near-cokernel (left singular
    vectors with singular value ``<= tol``) not already in ``V``. Returns
    orthonormal columns, possibly zero of them.
    """
    mats = [np.asarray(family(x)) for x in grid]
    m = mats[0].shape[0]
    if any(L.shape[0] != m for L in mats):
        raise TransversalityError("family matrices do not share a codomain dimension")
    tol = _default_tol(mats) if tol is None else tol
    dtype = np.result_type(*mats, float)
    V = np.zeros((m, 0), dtype=dtype)
    for L in mats:
        C = _cokernel_directions(L, tol)
        if C.shape[1] == 0:
            continue
        C = C - V @ (V.conj().T @ C)
        u, s, _ = np.linalg.svd(C, full_matrices=False)
        new = u[:, s > 1e-8]
        if new.shape[1]:
            V = np.hstack([V, new])
        if V.shape[1] > m:
            raise TransversalityError(f"transverse subspace grew to {V.shape[1]} > codomain dim {m}")
    check_transversal(mats, V, tol)
    return V


def check_transversal(mats, V: np.ndarray, tol: float) -> float:
    """Smallest over the grid of the ``m``-th singular value of ``[L_x | V]``."""
    worst = np.inf
    for i, L in enumerate(mats):
        aug = np.hstack([L, V.astype(np.result_type(L, V))])
        m = L.shape[0]
        s = np.linalg.svd(aug, compute_uv=False)
        smin = s[m - 1] if len(s) >= m else 0.0
        if smin <= tol:
            raise TransversalityError(f"Im L + V misses the codomain at grid point {i} (sigma={smin:.3e})")
        worst = min(worst, smin)
    return float(worst)


@dataclass(frozen=True)
class IndexBundleData:
    grid: np.ndarray
    V: np.ndarray
    fiber_ranks: np.ndarray  # dim L_x^{-1}(V) per grid point
    virtual_rank: int
    classical_index: np.ndarray  # dim ker L_x - dim coker L_x per grid point

    @property
    def fiber_rank(self) -> int:
        return int(self.fiber_ranks[0])


def index_bundle_data(family: Callable, grid: Sequence, V: np.ndarray, tol: float | None = None) -> IndexBundleData:
    """Ranks of ``Y_x = L_x^{-1}(V)`` over the grid and the virtual rank ``[Y] - [V]``."""
    mats = [np.asarray(family(x)) for x in grid]
    tol = _default_tol(mats) if tol is None else tol
    V = np.asarray(V)
    check_transversal(mats, V, tol)
    m = mats[0].shape[0]
    P = np.eye(m) - V @ V.conj().T
    ranks, index = [], []
    for L in mats:
        n = L.shape[1]
        s_proj = np.linalg.svd(P @ L, compute_uv=False)
        ranks.append(n - int(np.sum(s_proj > tol)))
        s = np.linalg.svd(L, compute_uv=False)
        r = int(np.sum(s > tol))
        index.append((n - r) - (m - r))
    ranks = np.array(ranks)
    if np.any(ranks != ranks[0]):
        raise NonFredholmError(f"fiber rank jumps across the grid: {sorted(set(ranks.tolist()))}")
    return IndexBundleData(np.asarray(grid), V, ranks, int(ranks[0]) - V.shape[1], np.array(index))


@dataclass(frozen=True)
class WindingResult:
    value: int
    raw_phase: float
    closure_defect: float


def winding_number(samples, closed: bool = False) -> WindingResult:
    """Winding of a sampled curve in ``C \\ {0}``.

    Adjacent samples must differ in phase by less than ``pi/2``. With
    ``closed=True`` the step from the last sample back to the first is
    included, which makes the raw phase an exact multiple of ``2 pi``.
    """
    z = np.asarray(samples, dtype=complex).ravel()
    if np.any(np.abs(z) == 0):
        raise DegenerateInputError("winding number of a curve through zero")
    if closed:
        z = np.append(z, z[0])
    steps = np.angle(z[1:] / z[:-1])
    if steps.size and np.max(np.abs(steps)) >= MAX_PHASE_STEP:
        i = int(np.argmax(np.abs(steps)))
        raise UnderResolvedError(f"phase step {steps[i]:.3f} rad at sample {i} is not below pi/2")
    raw = float(np.sum(steps))
    value = int(round(raw / (2 * np.pi)))
    return WindingResult(value, raw, abs(raw - 2 * np.pi * value))


def _windowed_cayley_det(A: np.ndarray, window: float) -> complex:
    w, V = np.linalg.eigh(A)
    Q = V[:, np.abs(w) <= window]
    if Q.shape[1] == 0:
        return 1.0 + 0j
    C = Q.conj().T @ A @ Q
    return complex(np.linalg.det(cayley(0.5 * (C + C.conj().T))))


def chern_winding(loop: ClutchedLoop, initial_points: int = 65, max_points: int = 20_000,
                  winding_tol: float = DEFAULT_WINDING_TOL, kernel_tol: float | None = None) -> WindingResult:
    """Winding of ``det cayley`` of the window compression along the loop.

    Intervals are bisected while the determinant phase moves by ``pi/4`` or
    more. A phase jump that survives refinement down to ``1e-9`` of the
    loop length comes from eigenvalues entering or leaving a window that
    is too narrow and is reported as a WindowError.
    """
    require_clutch(loop)
    path = loop.path
    for t in (path.start, path.stop):
        w = np.linalg.eigvalsh(path(t))
        w = w[np.abs(w) <= loop.window]
        tol = KERNEL_REL_TOL * (1.0 + float(np.max(np.abs(np.linalg.eigvalsh(path(t)))))) if kernel_tol is None else kernel_tol
        if w.size and np.min(np.abs(w)) <= tol:
            raise EndpointSingularError(f"windowed spectrum singular at t={t}")

    floor = 1e-9 * path.length
    grid = np.linspace(path.start, path.stop, initial_points)
    dets = np.array([_windowed_cayley_det(path(t), loop.window) for t in grid])
    while True:
        steps = np.abs(np.angle(dets[1:] / dets[:-1]))
        need = (steps >= np.pi / 4) & (np.diff(grid) > floor)
        if not need.any():
            break
        idx = np.flatnonzero(need)
        if len(grid) + len(idx) > max_points:
            i = int(idx[0])
            raise ResolutionError("determinant phase refinement exhausted", (float(grid[i]), float(grid[i + 1])))
        mids = 0.5 * (grid[idx] + grid[idx + 1])
        grid = np.insert(grid, idx + 1, mids)
        dets = np.insert(dets, idx + 1, [_windowed_cayley_det(path(t), loop.window) for t in mids])

    try:
        result = winding_number(dets, closed=False)
    except UnderResolvedError as exc:
        raise WindowError(f"window {loop.window:.4g} too narrow: {exc}") from exc
    if result.closure_defect > winding_tol:
        raise PrecisionError(
            f"winding closure defect {result.closure_defect:.3e} exceeds {winding_tol}"
        )
    return result


def chern_number_selfadjoint_loop(loop: ClutchedLoop, **kwargs) -> int:
    return chern_winding(loop, **kwargs).value
