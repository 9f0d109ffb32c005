"""Dense complex operator algebra used by every solver module.

All operators are plain square ``numpy`` arrays.  Norms follow the
package-wide convention: Frobenius everywhere by default, spectral
(largest singular value) available on request.
"""

from __future__ import annotations

import enum
import warnings

import numpy as np
import scipy.linalg

from .errors import DimensionError, SolveError

# Package-wide numerical tolerances (double precision headroom).
TOL_HERM = 1e-12
TOL_SOLVE = 1e-12
COND_MAX = 1e12
FLOOR_NORM = 1e-300


class Role(str, enum.Enum):
    """What a stored operator represents; some roles carry structure checks."""

    V = "V"
    T = "T"
    K = "K"
    G0 = "G0"
    G1 = "G1"
    G2 = "G2"
    H0 = "H0"
    PAIR_T = "PairT"
    PAIR_K = "PairK"
    OTHER = "Other"


def as_operator(a) -> np.ndarray:
    """Validate a as a finite square matrix and return it as complex ndarray."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("operator contains non-finite entries")
    return a.astype(np.complex128, copy=False)


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(a, "fro"))


def operator_norm(a, kind: str = "frobenius") -> float:
    """Frobenius or spectral (largest singular value) norm of a matrix."""
    a = as_operator(a)
    if kind == "frobenius":
        return frobenius_norm(a)
    if kind == "spectral":
        return float(np.linalg.norm(a, 2))
    raise ValueError(f"unknown norm kind {kind!r}")


def hermitian_split(a) -> tuple[np.ndarray, np.ndarray]:
    """Split a into (anti-Hermitian, Hermitian) parts that sum back to a.

    Returns ``(0.5*(a - a^H), 0.5*(a + a^H))``.  The anti-Hermitian part is
    exactly anti-Hermitian in floating point; the Hermitian part is taken as
    the remainder so the reassembly loses at most one rounding.
    """
    a = as_operator(a)
    anti = 0.5 * (a - a.conj().T)
    herm = a - anti
    return anti, herm


def is_hermitian(a, tol: float = TOL_HERM) -> bool:
    a = as_operator(a)
    scale = max(frobenius_norm(a), FLOOR_NORM)
    return frobenius_norm(a - a.conj().T) <= tol * scale


def is_anti_hermitian(a, tol: float = TOL_HERM) -> bool:
    a = as_operator(a)
    scale = max(frobenius_norm(a), FLOOR_NORM)
    return frobenius_norm(a + a.conj().T) <= tol * scale


def check_role(a: np.ndarray, role: Role, tol: float = TOL_HERM) -> None:
    """Enforce the structural invariant attached to a role tag."""
    a = as_operator(a)
    if role is Role.H0:
        off = a - np.diag(np.diagonal(a))
        if frobenius_norm(off) > tol * max(frobenius_norm(a), FLOOR_NORM):
            raise ValueError("H0 must be diagonal")
        diag = np.diagonal(a)
        if np.max(np.abs(diag.imag)) > tol * max(np.max(np.abs(diag.real)), FLOOR_NORM):
            raise ValueError("H0 must be real")
    elif role is Role.G1:
        if not is_anti_hermitian(a, tol):
            raise ValueError("G1 must be anti-Hermitian")
    elif role in (Role.G2, Role.K):
        if not is_hermitian(a, tol):
            raise ValueError(f"{role.value} must be Hermitian")


def solve_resolvent_system(m, b) -> np.ndarray:
    """Solve (1 - m) x = b by direct LU factorization.

    The accepted solution satisfies ``||(1-m)x - b||_F <= TOL_SOLVE * ||b||_F``;
    one step of iterative refinement is applied if the first solve misses
    that.  Singular or too ill-conditioned systems raise SolveError carrying
    a condition estimate.
    """
    m = as_operator(m)
    b = np.asarray(b, dtype=np.complex128)
    if b.shape[0] != m.shape[0]:
        raise DimensionError(
            f"right-hand side rows {b.shape[0]} do not match system dim {m.shape[0]}"
        )
    a = np.eye(m.shape[0], dtype=np.complex128) - m
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a)
        x = scipy.linalg.lu_solve((lu, piv), b)
        b_norm = np.linalg.norm(b)
        if np.isfinite(x).all():
            resid = np.linalg.norm(a @ x - b)
            if resid > TOL_SOLVE * b_norm:
                x = scipy.linalg.lu_solve((lu, piv), b - a @ x) + x
                resid = np.linalg.norm(a @ x - b)
        else:
            resid = np.inf
    if not np.isfinite(resid) or resid > TOL_SOLVE * b_norm:
        cond = float(np.linalg.cond(a))
        raise SolveError(
            f"resolvent solve failed the residual check "
            f"(residual {resid:.3e}, rhs norm {b_norm:.3e}, cond {cond:.3e})",
            condition=cond,
        )
    return x


def unitarity_defect(t, g1) -> float:
    """Relative size of ``t - t^H - 2 t^H g1 t``, zero for exactly unitary t.

    g1 must be anti-Hermitian; the result is normalized by ||t||_F with an
    underflow floor so t = 0 gives 0.
    """
    t = as_operator(t)
    g1 = as_operator(g1)
    if t.shape != g1.shape:
        raise DimensionError(f"shape mismatch {t.shape} vs {g1.shape}")
    if not is_anti_hermitian(g1):
        raise ValueError("g1 must be anti-Hermitian within TOL_HERM")
    th = t.conj().T
    defect = t - th - 2.0 * (th @ (g1 @ t))
    return frobenius_norm(defect) / max(frobenius_norm(t), FLOOR_NORM)
