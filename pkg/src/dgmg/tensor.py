"""Small dense linear algebra and sum-factorized tensor-product kernels.

Dense matrices are plain 2D ``numpy`` arrays. Kronecker products are never
formed; they are applied as successive 1D contractions along the axes of a
coefficient block.
"""
from dataclasses import dataclass

import numpy as np

from dgmg.errors import DimensionError, SolverError

__all__ = [
    "EigenPair1D",
    "apply_along",
    "kron3_apply",
    "sym_generalized_eig",
    "dense_solve",
]


@dataclass(frozen=True)
class EigenPair1D:
    """Generalized eigenpairs ``L S = M S diag(lam)`` with ``S^T M S = I``."""

    S: np.ndarray
    lam: np.ndarray


def apply_along(A, u, axis):
    """Contract the columns of ``A`` with ``axis`` of ``u``.

    The result has ``A.shape[0]`` entries along ``axis``; all other axes are
    left untouched.
    """
    A = np.asarray(A)
    if A.shape[1] != u.shape[axis]:
        raise DimensionError(
            f"matrix with {A.shape[1]} columns cannot act on axis {axis} "
            f"of length {u.shape[axis]}"
        )
    axis = axis % u.ndim
    if axis == u.ndim - 1:
        return u @ A.T
    if axis == u.ndim - 2:
        return A @ u
    return np.moveaxis(np.tensordot(A, u, axes=([1], [axis])), 0, axis)


def kron3_apply(Az, Ay, Ax, v):
    """Return ``(Az kron Ay kron Ax) v`` for a block ``v`` of shape (nz, ny, nx).

    Leading batch axes are allowed; the last three axes of ``v`` are the z, y
    and x indices. The x direction is contracted first.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim < 3:
        raise DimensionError("coefficient block needs at least three axes")
    for A, ax in ((Ax, -1), (Ay, -2), (Az, -3)):
        v = apply_along(A, v, ax)
    return v


def sym_generalized_eig(L, m, rtol=1e-12):
    """Solve ``L s = lam M s`` for symmetric ``L`` and diagonal ``M = diag(m)``.

    The problem is reduced to the standard symmetric eigenproblem for
    ``M^{-1/2} L M^{-1/2}``; eigenvectors are scaled so that ``S^T M S = I``.
    Eigenvalues are returned in ascending order.
    """
    L = np.asarray(L, dtype=float)
    m = np.asarray(m, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] != m.size:
        raise DimensionError(f"incompatible shapes {L.shape} and {m.shape}")
    if not np.all(np.isfinite(L)):
        raise ValueError("stiffness matrix has non-finite entries")
    scale = max(np.abs(L).max(), 1.0)
    if np.abs(L - L.T).max() > rtol * scale:
        raise ValueError("stiffness matrix is not symmetric")
    if np.any(m <= 0.0):
        raise ValueError("mass entries must be strictly positive")

    r = 1.0 / np.sqrt(m)
    Lhat = r[:, None] * L * r[None, :]
    lam, V = np.linalg.eigh(0.5 * (Lhat + Lhat.T))
    return EigenPair1D(S=r[:, None] * V, lam=lam)


def dense_solve(A, b, rcond=1e-14):
    """Solve the square system ``A x = b`` by LU factorization."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise DimensionError(f"incompatible shapes {A.shape} and {b.shape}")
    if np.linalg.cond(A) * rcond > 1.0:
        raise SolverError("matrix is singular to working precision")
    return np.linalg.solve(A, b)
