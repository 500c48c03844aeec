"""Orthogonal joint diagonalization by Givens sweeps.

The full-rank method is the ``k = d, sort = False`` configuration of the
sorted low-rank sweep: rotations are only taken for pairs ``(i, j)`` with
``i < k`` and after each rotation the pair is swapped when component ``j``
carries more diagonal mass than component ``i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from . import rng
from .core import (
    MatrixSet,
    _givens_unchecked,
    diag_mass,
    off_objective,
    rotate_columns,
    swap_components,
)
from .errors import OptionError, ShapeError

METHODS = ("jacobi", "qrj1d")
INITS = ("identity", "single_matrix", "random_projection")
SHEAR_DIRECTIONS = ("upper_then_lower", "upper_only")

# callback(kind, i, j, mset) after every elementary transform or swap
StepCallback = Callable[[str, int, int, MatrixSet], None]


@dataclass(frozen=True)
class SolverOptions:
    method: str = "jacobi"
    rank: Optional[int] = None
    tol: float = 1e-12
    max_sweeps: int = 200
    sort: Optional[bool] = None
    init: str = "identity"
    seed: int = 0
    shear_directions: str = "upper_then_lower"

    def resolve(self, d: int) -> "SolverOptions":
        """Fill in dimension-dependent defaults and validate against ``d``."""
        k = d if self.rank is None else int(self.rank)
        if self.method not in METHODS:
            raise OptionError(f"unknown method {self.method!r}")
        if self.init not in INITS:
            raise OptionError(f"unknown init {self.init!r}")
        if self.shear_directions not in SHEAR_DIRECTIONS:
            raise OptionError(f"unknown shear direction mode {self.shear_directions!r}")
        if not 1 <= k <= d:
            raise OptionError(f"rank {k} must lie in [1, {d}]")
        if not self.tol > 0:
            raise OptionError("tol must be positive")
        if self.max_sweeps < 1:
            raise OptionError("max_sweeps must be at least 1")
        sort = (k < d) if self.sort is None else bool(self.sort)
        return replace(self, rank=k, sort=sort)


@dataclass
class JointDiagResult:
    """Outcome of a joint diagonalization.

    ``W`` is the left transform: the transformed matrices are
    ``W @ M_l @ W.T``. ``accumulated`` is ``W.T``, the product of all
    right-applied elementary transforms.
    """

    W: np.ndarray
    U_est: np.ndarray
    weights: np.ndarray
    diagonals: np.ndarray
    objective_trace: List[float]
    sweeps: int
    converged: bool
    rotations: int
    transformed: np.ndarray
    method: str = "jacobi"
    cond: float = 1.0
    options: Optional[SolverOptions] = None

    @property
    def accumulated(self) -> np.ndarray:
        return self.W.T

    @property
    def final_objective(self) -> float:
        return self.objective_trace[-1]

    @property
    def transformed_set(self) -> MatrixSet:
        return MatrixSet(self.transformed, symmetric=True)


def canonical_signs(X: np.ndarray) -> np.ndarray:
    """Flip columns so that each column's largest-magnitude entry is positive."""
    X = np.array(X, dtype=np.float64, copy=True)
    if X.size == 0:
        return X
    rows = np.argmax(np.abs(X), axis=0)
    signs = np.where(X[rows, np.arange(X.shape[1])] < 0, -1.0, 1.0)
    return X * signs


def normalize_columns(X: np.ndarray):
    """Unit-norm columns and the original norms (zero columns left as zero)."""
    norms = np.linalg.norm(X, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    return X / safe, norms


def optimal_givens_angle(mset: MatrixSet, i: int, j: int):
    """Closed-form ``(cos, sin)`` minimizing the off-diagonal objective over
    rotations in the ``(i, j)`` plane.

    With ``h_l = (M_ii - M_jj, M_ij + M_ji)`` the optimum is the half-angle of
    the principal eigenvector of ``sum_l h_l h_l^T``.
    """
    return _givens_angle(mset.matrices, i, j)


def _givens_angle(m: np.ndarray, i: int, j: int):
    a = m[:, i, i] - m[:, j, j]
    b = m[:, i, j] + m[:, j, i]
    aa = float(a @ a)
    bb = float(b @ b)
    ab = float(a @ b)
    if aa + bb < 1e-300:
        return 1.0, 0.0
    # principal eigenvector (x, y) of [[aa, ab], [ab, bb]] with x >= 0
    phi = 0.5 * math.atan2(2.0 * ab, aa - bb)
    x = math.cos(phi)
    y = math.sin(phi)
    r = math.hypot(x, y)
    if x + r < 1e-300:
        return 1.0, 0.0
    c = math.sqrt((x + r) / (2.0 * r))
    s = y / math.sqrt(2.0 * r * (x + r))
    return c, s


def _sort_pair(mset: MatrixSet, acc: np.ndarray, i: int, j: int, callback: Optional[StepCallback]):
    if diag_mass(mset, j) > diag_mass(mset, i):
        swap_components(mset, acc, i, j)
        if callback is not None:
            callback("swap", i, j, mset)


def jacobi_sweep(
    mset: MatrixSet,
    accumulator: np.ndarray,
    k: int,
    sort: bool,
    callback: Optional[StepCallback] = None,
) -> int:
    """One pass of Givens rotations over ``i < k``, ``i < j < d``.

    Returns the number of rotations, ``k*d - k*(k+1)/2``.
    """
    d = mset.rows
    if accumulator.shape != (d, d):
        raise ShapeError(f"accumulator must be {d}x{d}, got {accumulator.shape}")
    m = mset.matrices
    count = 0
    for i in range(min(k, d)):
        for j in range(i + 1, d):
            c, s = _givens_angle(m, i, j)
            if s != 0.0:
                _givens_unchecked(m, i, j, c, s, mset.symmetric)
                rotate_columns(accumulator, i, j, c, s)
            count += 1
            if callback is not None:
                callback("rotation", i, j, mset)
            if sort:
                _sort_pair(mset, accumulator, i, j, callback)
    return count


def _require_symmetric(mset: MatrixSet):
    if not mset.is_square:
        raise ShapeError("joint diagonalization requires square matrices")
    if not mset.symmetric:
        raise ShapeError("joint diagonalization requires a symmetric matrix set")


def _eigenvectors(m: np.ndarray, seed: int) -> np.ndarray:
    """Orthogonal eigenvector matrix of one symmetric matrix via the L = 1 solver."""
    single = MatrixSet(m[None], symmetric=True)
    res = jacobi_solve(single, SolverOptions(method="jacobi", sort=False, seed=seed))
    return res.accumulated.copy()


def init_transform(mset: MatrixSet, opts: SolverOptions) -> np.ndarray:
    """Starting transform for a solve: identity, eigenvectors of the first
    matrix, or eigenvectors of a random unit-sphere combination."""
    _require_symmetric(mset)
    d = mset.rows
    if opts.init == "identity":
        return np.eye(d)
    if opts.init == "single_matrix":
        return _eigenvectors(mset.matrices[0], opts.seed)
    if opts.init == "random_projection":
        w = rng.stream(opts.seed, 0x1417).standard_normal(mset.count)
        w /= np.linalg.norm(w)
        combo = np.einsum("l,lij->ij", w, mset.matrices)
        combo = 0.5 * (combo + combo.T)
        return _eigenvectors(combo, opts.seed)
    raise OptionError(f"unknown init {opts.init!r}")


def _start(mset: MatrixSet, opts: SolverOptions):
    work = mset.copy()
    acc = init_transform(mset, opts)
    if opts.init != "identity":
        t = acc.T @ work.matrices @ acc
        work.matrices = np.ascontiguousarray(0.5 * (t + np.swapaxes(t, 1, 2)))
    return work, acc


def _run_sweeps(work: MatrixSet, acc: np.ndarray, opts: SolverOptions, sweep_fn, check=None):
    trace = [off_objective(work)]
    converged = False
    count = 0
    sweeps = 0
    for sweeps in range(1, opts.max_sweeps + 1):
        count += sweep_fn(work, acc)
        trace.append(off_objective(work))
        if check is not None:
            check(sweeps, acc)
        if abs(trace[-2] - trace[-1]) < opts.tol:
            converged = True
            break
    return trace, converged, count, sweeps


def jacobi_solve(
    mset: MatrixSet,
    opts: Optional[SolverOptions] = None,
    callback: Optional[StepCallback] = None,
) -> JointDiagResult:
    """Orthogonal joint diagonalization of a symmetric set.

    Sweeps until the objective drops by less than ``opts.tol`` over a sweep or
    ``opts.max_sweeps`` is reached. The input set is not modified.
    """
    _require_symmetric(mset)
    opts = (opts or SolverOptions()).resolve(mset.rows)
    if opts.method != "jacobi":
        opts = replace(opts, method="jacobi")
    k = opts.rank
    work, acc = _start(mset, opts)
    trace, converged, count, sweeps = _run_sweeps(
        work, acc, opts, lambda w, a: jacobi_sweep(w, a, k, opts.sort, callback)
    )
    U_est, norms = normalize_columns(acc[:, :k])
    diagonals = work.diagonals()
    return JointDiagResult(
        W=acc.T.copy(),
        U_est=canonical_signs(U_est),
        weights=diagonals[:, :k] * norms**2,
        diagonals=diagonals,
        objective_trace=trace,
        sweeps=sweeps,
        converged=converged,
        rotations=count,
        transformed=work.matrices,
        method="jacobi",
        cond=1.0,
        options=opts,
    )
