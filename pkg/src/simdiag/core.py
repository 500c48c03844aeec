"""Dense matrix-set primitives used by every solver.

All elementary transforms act in place on a :class:`MatrixSet` as congruences
``M <- B^T M B`` and touch only the affected rows and columns; the explicit
three-matrix product is never formed here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ShapeError

SYMMETRY_RTOL = 1e-10


@dataclass
class MatrixSet:
    """A stack of ``count`` real matrices of identical shape.

    ``matrices`` has shape ``(count, rows, cols)`` and is owned by the set;
    in-place operations mutate it.
    """

    matrices: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        m = np.array(self.matrices, dtype=np.float64, copy=True)
        if m.ndim == 2:
            m = m[None, :, :]
        if m.ndim != 3 or m.shape[0] < 1 or m.shape[1] < 1 or m.shape[2] < 1:
            raise ShapeError(f"expected a non-empty (L, rows, cols) stack, got shape {m.shape}")
        self.matrices = np.ascontiguousarray(m)
        if self.symmetric:
            if m.shape[1] != m.shape[2]:
                raise ShapeError("symmetric set must be square")
            for l, a in enumerate(m):
                scale = max(1.0, float(np.linalg.norm(a)))
                if np.linalg.norm(a - a.T) > SYMMETRY_RTOL * scale:
                    raise ShapeError(f"matrix {l} is not symmetric")

    @classmethod
    def from_matrices(cls, matrices: Sequence[np.ndarray], symmetric: Optional[bool] = None) -> "MatrixSet":
        """Build a set, detecting symmetry when ``symmetric`` is None."""
        m = np.array(matrices, dtype=np.float64)
        if m.ndim == 2:
            m = m[None]
        if symmetric is None:
            symmetric = m.shape[1] == m.shape[2] and all(
                np.linalg.norm(a - a.T) <= SYMMETRY_RTOL * max(1.0, float(np.linalg.norm(a))) for a in m
            )
        return cls(m, symmetric=symmetric)

    @property
    def count(self) -> int:
        return self.matrices.shape[0]

    @property
    def rows(self) -> int:
        return self.matrices.shape[1]

    @property
    def cols(self) -> int:
        return self.matrices.shape[2]

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def copy(self) -> "MatrixSet":
        return MatrixSet(self.matrices.copy(), symmetric=self.symmetric)

    def diagonals(self) -> np.ndarray:
        """``(count, d)`` array holding the diagonal of each matrix."""
        return np.diagonal(self.matrices, axis1=1, axis2=2).copy()

    def __len__(self):
        return self.count

    def __iter__(self):
        return iter(self.matrices)


@dataclass
class GroundTruth:
    """Planted factors of a synthetic problem.

    ``lambdas`` is ``(L, k)``: row ``l`` holds the diagonal weights of matrix ``l``.
    Columns of ``U`` (and ``V``) are unit norm by construction.
    """

    U: np.ndarray
    lambdas: np.ndarray
    eps: float = 0.0
    V: Optional[np.ndarray] = None
    noises: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    def clean_matrices(self) -> np.ndarray:
        """Noise-free ``U diag(lambda_l) V^T`` stack (``V = U`` when symmetric)."""
        right = self.U if self.V is None else self.V
        return np.einsum("ik,lk,jk->lij", self.U, self.lambdas, right)

    def matrices(self, eps: Optional[float] = None) -> np.ndarray:
        """Planted stack plus ``eps`` times the stored noise."""
        eps = self.eps if eps is None else eps
        m = self.clean_matrices()
        if self.V is None:
            m = 0.5 * (m + np.swapaxes(m, 1, 2))
        if eps and self.noises is not None:
            m = m + eps * self.noises
        return m


def _require_square(mset: MatrixSet):
    if not mset.is_square:
        raise ShapeError(f"operation requires square matrices, got {mset.rows}x{mset.cols}")


def _check_index(mset: MatrixSet, *idx):
    d = mset.rows
    for i in idx:
        if not 0 <= i < d:
            raise IndexError(f"index {i} out of range for dimension {d}")


def off_objective(mset: MatrixSet) -> float:
    """Sum of squared off-diagonal entries over all matrices in the set."""
    _require_square(mset)
    # zero the diagonal rather than subtracting its mass: the difference
    # would lose all precision near convergence
    off = mset.matrices.copy()
    idx = np.arange(mset.rows)
    off[:, idx, idx] = 0.0
    return float(np.einsum("lij,lij->", off, off))


def off_norm(mset: MatrixSet) -> float:
    """Frobenius norm of the off-diagonal entries, ``sqrt(off_objective)``."""
    return math.sqrt(off_objective(mset))


def apply_givens(mset: MatrixSet, i: int, j: int, c: float, s: float) -> None:
    """Apply ``M <- G^T M G`` in place with the plane rotation on axes ``i < j``.

    ``G`` is the identity except ``G[i,i] = G[j,j] = c``, ``G[j,i] = s`` and
    ``G[i,j] = -s``, so column ``i`` becomes ``c*col_i + s*col_j``.
    """
    _require_square(mset)
    _check_index(mset, i, j)
    if not i < j:
        raise ValueError(f"givens rotation requires i < j, got ({i}, {j})")
    if abs(c * c + s * s - 1.0) > 1e-12:
        raise ValueError(f"(c, s) = ({c}, {s}) is not a unit vector")
    _givens_unchecked(mset.matrices, i, j, c, s, mset.symmetric)


def _givens_unchecked(m: np.ndarray, i: int, j: int, c: float, s: float, symmetric: bool) -> None:
    ri = m[:, i, :].copy()
    rj = m[:, j, :]
    m[:, i, :] = c * ri + s * rj
    m[:, j, :] = c * rj - s * ri
    ci = m[:, :, i].copy()
    cj = m[:, :, j]
    m[:, :, i] = c * ci + s * cj
    m[:, :, j] = c * cj - s * ci
    if symmetric:
        m[:, j, i] = m[:, i, j]


def rotate_columns(acc: np.ndarray, i: int, j: int, c: float, s: float) -> None:
    """Right-multiply ``acc`` by the rotation used in :func:`apply_givens`."""
    ci = acc[:, i].copy()
    acc[:, i] = c * ci + s * acc[:, j]
    acc[:, j] = c * acc[:, j] - s * ci


def apply_shear(mset: MatrixSet, i: int, j: int, a: float) -> None:
    """Apply ``M <- T^T M T`` in place with ``T = I + a e_j e_i^T``.

    Row ``i`` gains ``a`` times row ``j`` and then column ``i`` gains ``a``
    times column ``j``; nothing outside row/column ``i`` changes.
    """
    _require_square(mset)
    _check_index(mset, i, j)
    if i == j:
        raise ValueError("shear requires distinct indices")
    _shear_unchecked(mset.matrices, i, j, a)


def _shear_unchecked(m: np.ndarray, i: int, j: int, a: float) -> None:
    m[:, i, :] += a * m[:, j, :]
    m[:, :, i] += a * m[:, :, j]


def shear_columns(acc: np.ndarray, i: int, j: int, a: float) -> None:
    """Right-multiply ``acc`` by the shear used in :func:`apply_shear`."""
    acc[:, i] += a * acc[:, j]


def swap_components(mset: MatrixSet, accumulator: Optional[np.ndarray], i: int, j: int) -> None:
    """Exchange components ``i`` and ``j``: rows and columns of every matrix
    and columns of the accumulated transform."""
    _require_square(mset)
    _check_index(mset, i, j)
    if i == j:
        return
    m = mset.matrices
    m[:, [i, j], :] = m[:, [j, i], :]
    m[:, :, [i, j]] = m[:, :, [j, i]]
    if accumulator is not None:
        accumulator[:, [i, j]] = accumulator[:, [j, i]]


def diag_mass(mset: MatrixSet, p: int) -> float:
    """Sort key of component ``p``: sum over matrices of ``|M[p, p]|``."""
    return float(np.abs(mset.matrices[:, p, p]).sum())


def stationarity_residual(mset: MatrixSet) -> float:
    """First-order optimality gap ``||S - S^T||_F`` on the transformed set.

    ``S = sum_l (O_l M_l^T - M_l^T O_l)`` where ``O_l`` is the off-diagonal
    part of ``M_l``; ``S`` is symmetric at every critical point of the
    off-diagonal objective under orthogonal transforms.
    """
    _require_square(mset)
    m = mset.matrices
    off = m.copy()
    idx = np.arange(mset.rows)
    off[:, idx, idx] = 0.0
    mt = np.swapaxes(m, 1, 2)
    s = np.einsum("lij,ljk->ik", off, mt) - np.einsum("lij,ljk->ik", mt, off)
    return float(np.linalg.norm(s - s.T))
