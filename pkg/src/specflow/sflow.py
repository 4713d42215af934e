"""Spectral flow of paths and clutched loops.

Two independent routes are provided. :func:`spectral_flow_crossing` sums
signatures of crossing forms (restrictions of the derivative to the kernel
at each crossing instant). :func:`spectral_flow_counting` never looks at
derivatives or eigenvectors and counts signed zero transits of the sorted
eigenvalue branches over the adaptive sampling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import EndpointSingularError, InputError, IrregularCrossingError, ResolutionError, WindowError
from .paths import (
    ClutchedLoop,
    OperatorPath,
    PathSampling,
    ScalarField,
    path_derivative,
    require_clutch,
    sample_path,
)

REGULARITY_REL_TOL = 1e-6
DEFAULT_MAX_CLUSTER = 8


class Convention(str, enum.Enum):
    REAL_DIM = "RealDim"
    COMPLEX_DIM = "ComplexDim"


class Method(str, enum.Enum):
    CROSSING_FORM = "CrossingForm"
    EIGENVALUE_TRACKING = "EigenvalueTracking"


@dataclass
class CrossingRecord:
    t: float
    kernel_basis: np.ndarray
    crossing_form: np.ndarray | None = None
    signature: int | None = None
    regular: bool | None = None
    branches: tuple[int, ...] = ()

    @property
    def kernel_dim(self) -> int:
        return int(self.kernel_basis.shape[1])

    def to_json(self) -> dict:
        return {"t": float(self.t), "kernel_dim": self.kernel_dim,
                "signature": self.signature, "regular": self.regular}


@dataclass
class SpectralFlowResult:
    value: int
    convention: Convention
    crossings: list[CrossingRecord] = field(default_factory=list)
    method: Method = Method.CROSSING_FORM
    sampling: PathSampling | None = field(default=None, repr=False)
    by_convention: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "value": int(self.value),
            "convention": self.convention.value,
            "method": self.method.value,
            "crossings": [c.to_json() for c in self.crossings],
        }
        if self.by_convention:
            out["by_convention"] = dict(self.by_convention)
        return out


def _convention(path: OperatorPath, convention) -> tuple[Convention, int]:
    if convention is None:
        convention = Convention.COMPLEX_DIM if path.scalar_field is ScalarField.COMPLEX else Convention.REAL_DIM
    convention = Convention(convention)
    # a complex kernel of complex dimension d has real dimension 2d
    factor = 2 if (path.scalar_field is ScalarField.COMPLEX and convention is Convention.REAL_DIM) else 1
    return convention, factor


def _check_endpoints(s: PathSampling, window: float | None = None) -> None:
    for label, w in (("start", s.eigenvalues[0]), ("end", s.eigenvalues[-1])):
        if window is not None:
            w = w[np.abs(w) <= window]
        if w.size and np.min(np.abs(w)) <= s.kernel_tol:
            raise EndpointSingularError(
                f"operator at the path {label} is singular (min |lambda| = {np.min(np.abs(w)):.3e})"
            )


def _branch(path: OperatorPath, k: int):
    return lambda t: float(np.linalg.eigvalsh(path(t))[k])


def find_crossings(path: OperatorPath, sampling: PathSampling | None = None,
                   kernel_tol: float | None = None,
                   max_cluster: int = DEFAULT_MAX_CLUSTER) -> list[CrossingRecord]:
    """Locate crossing instants and their kernels, without crossing forms.

    Sign changes of a sorted eigenvalue branch are bracketed with Brent's
    method; samples with ``|lambda| <= kernel_tol`` are refined by bounded
    minimization of ``|lambda|`` so that touches are caught too. Events
    closer than the sampling resolution merge into one crossing whose
    kernel is the span of all involved branches.
    """
    s = sample_path(path, kernel_tol=kernel_tol) if sampling is None else sampling
    _check_endpoints(s)
    g, w, tol = s.grid, s.eigenvalues, s.kernel_tol
    xtol = 1e-10 * path.length

    events: list[tuple[float, int]] = []
    sign_change = w[:-1] * w[1:] < 0
    for i, k in np.argwhere(sign_change):
        f = _branch(path, int(k))
        fa, fb = f(g[i]), f(g[i + 1])
        if fa * fb < 0:
            t = brentq(f, g[i], g[i + 1], xtol=xtol)
        else:
            # a sample sits on the zero and re-evaluation flipped its rounding-level sign
            t = g[i] if abs(fa) <= abs(fb) else g[i + 1]
        events.append((float(t), int(k)))

    # runs of near-zero samples on one branch; runs next to a sign change are
    # already covered by the bracketed root
    small = np.abs(w) <= tol
    for k in np.flatnonzero(small.any(axis=0)):
        col = small[:, k]
        i = 0
        while i < len(col):
            if not col[i]:
                i += 1
                continue
            j = i
            while j + 1 < len(col) and col[j + 1]:
                j += 1
            lo, hi = max(i - 1, 0), min(j + 1, len(col) - 1)
            if not sign_change[lo:hi, k].any():
                f = _branch(path, int(k))
                res = minimize_scalar(lambda t: abs(f(t)), bounds=(g[lo], g[hi]), method="bounded",
                                      options={"xatol": xtol})
                events.append((float(res.x), int(k)))
            i = j + 1

    if not events:
        return []
    events.sort()
    radius = max(2 * s.resolution, 1e-9 * path.length)
    clusters: list[list[tuple[float, int]]] = [[events[0]]]
    for ev in events[1:]:
        if ev[0] - clusters[-1][-1][0] <= radius:
            clusters[-1].append(ev)
        else:
            clusters.append([ev])

    records = []
    for cl in clusters:
        t = float(np.mean([e[0] for e in cl]))
        branches = sorted({e[1] for e in cl})
        if len(branches) > max_cluster:
            raise ResolutionError(f"{len(branches)} branches cross near t={t:.12g}",
                                  interval=(cl[0][0], cl[-1][0]))
        lam, V = np.linalg.eigh(path(t))
        idx = sorted(set(branches) | set(np.flatnonzero(np.abs(lam) <= tol).tolist()))
        records.append(CrossingRecord(t, V[:, idx], branches=tuple(idx)))
    return records


def crossing_form(path: OperatorPath, record: CrossingRecord,
                  regularity_tol: float | None = None) -> CrossingRecord:
    """Fill in the crossing form ``<A'(t) v_j, v_i>`` on the kernel, its signature and regularity."""
    V = record.kernel_basis
    if V.shape[1] == 0:
        raise InputError("crossing record has an empty kernel basis")
    D = path_derivative(path, record.t)
    G = V.conj().T @ D @ V
    G = 0.5 * (G + G.conj().T)
    ev = np.linalg.eigvalsh(G)
    tol = REGULARITY_REL_TOL * (1.0 + float(np.linalg.norm(D, 2))) if regularity_tol is None else regularity_tol
    record.crossing_form = G
    record.signature = int(np.sum(ev > 0) - np.sum(ev < 0))
    record.regular = bool(np.min(np.abs(ev)) > tol)
    return record


def spectral_flow_crossing(path: OperatorPath, convention=None, kernel_tol: float | None = None,
                           sampling: PathSampling | None = None,
                           regularity_tol: float | None = None) -> SpectralFlowResult:
    """Spectral flow as the sum of crossing-form signatures.

    Every crossing must be regular; otherwise IrregularCrossingError names
    the instant and the caller should fall back to the counting method.
    """
    conv, factor = _convention(path, convention)
    s = sample_path(path, kernel_tol=kernel_tol) if sampling is None else sampling
    records = [crossing_form(path, r, regularity_tol) for r in find_crossings(path, s)]
    for r in records:
        if not r.regular:
            raise IrregularCrossingError(f"irregular crossing at t={r.t:.12g}", r.t)
    value = factor * sum(r.signature for r in records)
    return SpectralFlowResult(value, conv, records, Method.CROSSING_FORM, s)


def spectral_flow_counting(path: OperatorPath, convention=None, kernel_tol: float | None = None,
                           sampling: PathSampling | None = None) -> SpectralFlowResult:
    """Spectral flow from signed zero transits of the sorted eigenvalue branches.

    Each record sits at the midpoint of a sampling interval in which the
    number of negative eigenvalues changes; its signature is the net
    number of upward transits and its kernel basis is empty.
    """
    conv, factor = _convention(path, convention)
    s = sample_path(path, kernel_tol=kernel_tol) if sampling is None else sampling
    _check_endpoints(s)
    n_neg = np.sum(s.eigenvalues < 0, axis=1)
    jumps = n_neg[:-1] - n_neg[1:]
    dim = s.eigenvalues.shape[1]
    records = []
    for i in np.flatnonzero(jumps):
        t = 0.5 * (s.grid[i] + s.grid[i + 1])
        records.append(CrossingRecord(float(t), np.zeros((dim, 0)), signature=int(jumps[i])))
    value = factor * int(np.sum(jumps))
    return SpectralFlowResult(value, conv, records, Method.EIGENVALUE_TRACKING, s)


def spectral_flow_loop(loop: ClutchedLoop, method=Method.CROSSING_FORM, convention=None,
                       kernel_tol: float | None = None) -> SpectralFlowResult:
    """Windowed spectral flow of a clutched loop.

    The clutch must intertwine the windowed endpoint spectra; the flow is
    then that of the underlying path, which a trivializing frame with
    ``F(a) = I`` and ``F(b) = U`` leaves unchanged. Any eigenvalue branch
    that passes through zero must stay inside the window along the whole
    path.
    """
    require_clutch(loop)
    s = sample_path(loop.path, kernel_tol=kernel_tol)
    _check_endpoints(s, loop.window)
    w = s.eigenvalues
    crossing_branches = np.flatnonzero(
        ((w < 0).any(axis=0) & (w > 0).any(axis=0)) | (np.abs(w) <= s.kernel_tol).any(axis=0)
    )
    for k in crossing_branches:
        peak = float(np.max(np.abs(w[:, k])))
        if peak > loop.window:
            raise WindowError(f"branch {k} crosses zero but reaches |lambda| = {peak:.4g} "
                              f"outside the window {loop.window:.4g}")
    if Method(method) is Method.CROSSING_FORM:
        return spectral_flow_crossing(loop.path, convention, sampling=s)
    return spectral_flow_counting(loop.path, convention, sampling=s)


def doubling_pair(path: OperatorPath, kernel_tol: float | None = None) -> tuple[int, int, int]:
    """``(sf_R(L), sf_C(L^C) counted in real dimensions, sf_C(L^C) in complex dimensions)``."""
    if path.scalar_field is not ScalarField.REAL:
        raise InputError("doubling_pair expects a real path")
    sf_r = spectral_flow_crossing(path, kernel_tol=kernel_tol).value
    cpath = path.complexified()
    res = spectral_flow_crossing(cpath, Convention.COMPLEX_DIM, kernel_tol=kernel_tol)
    realdim = 2 * sum(r.signature for r in res.crossings)
    return sf_r, realdim, res.value
