"""Dense self-adjoint linear algebra used by everything else.

Matrices are plain numpy arrays. Real symmetric arrays stand in for
real Fredholm forms, complex Hermitian arrays for their complex
counterparts; Fredholmness is automatic in finite dimensions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateInputError, InconsistencyError, InputError

SYMMETRY_TOL = 1e-12
KERNEL_REL_TOL = 1e-8


@dataclass(frozen=True)
class Eigendecomposition:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns, orthonormal

    def kernel(self, kernel_tol: float) -> np.ndarray:
        """Columns spanning the eigenspace with ``|lambda| <= kernel_tol``."""
        return self.eigenvectors[:, np.abs(self.eigenvalues) <= kernel_tol]


class Component(enum.Enum):
    ESSENTIALLY_POSITIVE = "EssentiallyPositive"
    ESSENTIALLY_NEGATIVE = "EssentiallyNegative"
    INDEFINITE = "Indefinite"


@dataclass(frozen=True)
class QuadraticForm:
    dim: int
    evaluate: Callable[[np.ndarray], float]

    def __call__(self, u) -> float:
        return float(self.evaluate(np.asarray(u, dtype=float)))

    @classmethod
    def from_matrix(cls, B) -> "QuadraticForm":
        B = np.asarray(B, dtype=float)
        return cls(B.shape[0], lambda u: float(u @ B @ u))

    def polar(self, u, v) -> float:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return 0.25 * (self(u + v) - self(u - v))


def operator_norm(A) -> float:
    return float(np.linalg.norm(A, 2)) if np.size(A) else 0.0


def default_kernel_tol(A) -> float:
    return KERNEL_REL_TOL * (1.0 + operator_norm(A))


def hermitize(A) -> np.ndarray:
    """Return ``(A + A^H) / 2`` after checking ``A`` is self-adjoint.

    Raises InputError for non-square input or an asymmetry larger than
    ``1e-12 * ||A||``.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InputError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix has non-finite entries")
    scale = max(float(np.linalg.norm(A)), 1e-300)
    defect = float(np.linalg.norm(A - A.conj().T))
    if defect > SYMMETRY_TOL * scale:
        raise InputError(f"matrix is not self-adjoint (defect {defect:.3e}, norm {scale:.3e})")
    return 0.5 * (A + A.conj().T)


def eig_sym(A) -> Eigendecomposition:
    """Full spectrum of a symmetric or Hermitian matrix, eigenvalues ascending."""
    w, V = np.linalg.eigh(hermitize(A))
    return Eigendecomposition(w, V)


def form_to_operator(q: QuadraticForm, check_samples: int = 8, tol: float = 1e-8) -> np.ndarray:
    """Recover the symmetric matrix ``A`` with ``<Au, u> = q(u)``.

    Entries come from polarization on pairs of standard basis vectors.
    Homogeneity and bilinearity of the polarization are spot-checked on
    random vectors; a failure means ``q`` is not a quadratic form.
    """
    n = q.dim
    eye = np.eye(n)
    A = np.empty((n, n))
    for i in range(n):
        A[i, i] = q(eye[i])
        for j in range(i + 1, n):
            A[i, j] = A[j, i] = q.polar(eye[i], eye[j])

    rng = np.random.default_rng(0)
    for _ in range(check_samples):
        u, v, w = rng.standard_normal((3, n))
        lam = rng.uniform(-3.0, 3.0)
        scale = 1.0 + abs(q(u)) + abs(q(v)) + abs(q(w))
        if abs(q(lam * u) - lam**2 * q(u)) > tol * scale * (1 + lam**2):
            raise InconsistencyError("evaluator is not homogeneous of degree 2")
        lhs = q.polar(lam * u + v, w)
        rhs = lam * q.polar(u, w) + q.polar(v, w)
        if abs(lhs - rhs) > tol * scale * (1 + abs(lam)):
            raise InconsistencyError("polarization of evaluator is not bilinear")
        if abs(q.polar(u, w) - q.polar(w, u)) > tol * scale:
            raise InconsistencyError("polarization of evaluator is not symmetric")
    return A


def complexify(A) -> np.ndarray:
    """View a real symmetric matrix as a Hermitian operator on C^n."""
    A = np.asarray(A)
    if np.iscomplexobj(A):
        if np.any(A.imag != 0):
            raise InputError("complexify expects a real matrix")
        A = A.real
    return hermitize(A).astype(complex)


def kernel_dimensions(A, kernel_tol: float | None = None) -> tuple[int, int]:
    """Kernel dimension as ``(dim over the scalar field, dim over R)``.

    For complex matrices the real dimension is twice the complex one,
    which is the bookkeeping behind ``ker L^C = ker L + i ker L``.
    """
    A = np.asarray(A)
    tol = default_kernel_tol(A) if kernel_tol is None else kernel_tol
    k = int(np.sum(np.abs(np.linalg.eigvalsh(hermitize(A))) <= tol))
    return k, (2 * k if np.iscomplexobj(A) else k)


def cayley(A) -> np.ndarray:
    """Unitary ``(A - iI)(A + iI)^-1``; zero eigenvalues map to -1."""
    A = hermitize(A).astype(complex)
    eye = np.eye(A.shape[0])
    # the two factors commute, so solve() gives the same product
    return np.linalg.solve(A + 1j * eye, A - 1j * eye)


def classify_component(A, essential_rank: int | None = None, kernel_tol: float | None = None) -> Component:
    """Place ``A`` in one of the three components of self-adjoint operators.

    ``essential_rank`` plays the role of "finite codimension": at most that
    many eigenvalues of the wrong sign are tolerated. Default is ``dim // 4``.
    """
    w = eig_sym(A).eigenvalues
    n = len(w)
    m = n // 4 if essential_rank is None else essential_rank
    if not 0 <= m < n:
        raise InputError(f"essential_rank must lie in [0, {n}), got {m}")
    tol = KERNEL_REL_TOL * (1.0 + float(np.max(np.abs(w)))) if kernel_tol is None else kernel_tol
    n_pos = int(np.sum(w > tol))
    n_neg = int(np.sum(w < -tol))
    if n_neg <= m < n_pos:
        return Component.ESSENTIALLY_POSITIVE
    if n_pos <= m < n_neg:
        return Component.ESSENTIALLY_NEGATIVE
    if n_pos > m and n_neg > m:
        return Component.INDEFINITE
    raise DegenerateInputError(
        f"cannot classify: {n_pos} positive, {n_neg} negative of {n} eigenvalues with m={m}"
    )
