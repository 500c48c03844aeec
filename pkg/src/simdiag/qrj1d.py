"""Non-orthogonal joint diagonalization: rotation phase plus unit-triangular
shear phase per sweep, with the same sorted low-rank restriction as the
Jacobi solver."""
from __future__ import annotations

import math
import warnings
from dataclasses import replace
from typing import Optional

import numpy as np

from .core import MatrixSet, _givens_unchecked, _shear_unchecked, rotate_columns, shear_columns
from .errors import IllConditionedError, ShapeError
from .jacobi import (
    JointDiagResult,
    SolverOptions,
    StepCallback,
    _givens_angle,
    _require_symmetric,
    _run_sweeps,
    _sort_pair,
    _start,
    canonical_signs,
    normalize_columns,
)

COND_LIMIT = 1e12


def optimal_shear(mset: MatrixSet, i: int, j: int) -> float:
    """Exact minimizer ``a`` of the off-diagonal objective over the shear
    ``row_i += a row_j, col_i += a col_j``; 0 when row ``j`` is empty."""
    if i == j:
        raise ValueError("shear requires distinct indices")
    return _shear_param(mset.matrices, i, j)


def _shear_param(m: np.ndarray, i: int, j: int) -> float:
    ri = m[:, i, :]
    rj = m[:, j, :]
    num = float(np.einsum("lq,lq->", ri, rj)) - float(ri[:, i] @ rj[:, i])
    den = float(np.einsum("lq,lq->", rj, rj)) - float(rj[:, i] @ rj[:, i])
    if den <= 0.0 or not math.isfinite(den):
        return 0.0
    return -num / den


def qrj1d_sweep(
    mset: MatrixSet,
    accumulator: np.ndarray,
    k: int,
    sort: bool,
    directions: str = "upper_then_lower",
    callback: Optional[StepCallback] = None,
) -> int:
    """Rotation phase followed by shear phase over ``i < k``, ``i < j < d``.

    Returns the number of elementary transforms visited (rotations plus shears).
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

    both = directions == "upper_then_lower"
    for i in range(min(k, d)):
        for j in range(i + 1, d):
            # upper shear I + a e_i e_j^T updates component j from component i;
            # the lower one updates i from j and is kept inside the leading
            # block, where row j is not (numerically) empty at a low-rank optimum
            targets = ((j, i), (i, j)) if both and j < k else ((j, i),)
            for p, q in targets:
                a = _shear_param(m, p, q)
                if a != 0.0:
                    _shear_unchecked(m, p, q, a)
                    shear_columns(accumulator, p, q, a)
                count += 1
                if callback is not None:
                    callback("shear", p, q, mset)
            if sort:
                _sort_pair(mset, accumulator, i, j, callback)
    return count


def singular_values(A: np.ndarray, tol: float = 1e-10, max_sweeps: int = 60) -> np.ndarray:
    """Singular values of a small dense matrix by one-sided Jacobi iteration,
    in decreasing order."""
    X = np.array(A, dtype=np.float64, copy=True)
    n = X.shape[1]
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                xp = X[:, p]
                xq = X[:, q]
                alpha = float(xp @ xp)
                beta = float(xq @ xq)
                gamma = float(xp @ xq)
                if gamma == 0.0 or abs(gamma) <= tol * math.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                new_p = c * xp - s * xq
                X[:, q] = s * xp + c * xq
                X[:, p] = new_p
        if not rotated:
            break
    return np.sort(np.linalg.norm(X, axis=0))[::-1]


def condition_number(A: np.ndarray) -> float:
    """Ratio of extreme singular values; ``inf`` for a singular matrix."""
    sv = singular_values(A, tol=1e-8)
    if sv[-1] == 0.0 or not np.all(np.isfinite(sv)):
        return math.inf
    return float(sv[0] / sv[-1])


def qrj1d_solve(
    mset: MatrixSet,
    opts: Optional[SolverOptions] = None,
    callback: Optional[StepCallback] = None,
    cond_limit: float = COND_LIMIT,
) -> JointDiagResult:
    """Non-orthogonal joint diagonalization of a symmetric set.

    The factor estimate is read from the inverse transpose of the accumulated
    transform, since ``M_l = A^{-T} (A^T M_l A) A^{-1}``.
    """
    _require_symmetric(mset)
    opts = (opts or SolverOptions(method="qrj1d")).resolve(mset.rows)
    if opts.method != "qrj1d":
        opts = replace(opts, method="qrj1d")
    if mset.count < 2:
        warnings.warn("non-orthogonal factors are not identifiable from a single matrix", stacklevel=2)
    k = opts.rank
    work, acc = _start(mset, opts)
    last_cond = [1.0]

    def check(sweep, a):
        cond = condition_number(a)
        last_cond[0] = cond
        if not cond <= cond_limit:
            raise IllConditionedError(sweep, cond)

    trace, converged, count, sweeps = _run_sweeps(
        work,
        acc,
        opts,
        lambda w, a: qrj1d_sweep(w, a, k, opts.sort, opts.shear_directions, callback),
        check,
    )
    inv_t = np.linalg.inv(acc).T
    U_est, norms = normalize_columns(inv_t[:, :k])
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
        method="qrj1d",
        cond=last_cond[0],
        options=opts,
    )


def reconstruct(result: JointDiagResult) -> np.ndarray:
    """``A^{-T} diag(M~_l) A^{-1}`` for every transformed matrix."""
    inv = np.linalg.inv(result.accumulated)
    return np.einsum("ki,li,ij->lkj", inv.T, result.diagonals, inv)
