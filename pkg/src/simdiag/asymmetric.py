"""Asymmetric joint diagonalization ``M_l = U diag(lambda_l) V^T`` by reduction
to a symmetric problem.

Each ``M_l`` (``d1 x d2``) is embedded as ``N_l = [[0, M_l^T], [M_l, 0]]``,
which factors as ``W diag(lambda_l, -lambda_l) W^T`` with
``W = [[V, V], [U, -U]] / sqrt(2)``. Every planted component therefore shows
up twice in the embedded solution, with weight profiles ``+lambda`` and
``-lambda``; pairing the two recovers ``u`` and ``v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from .core import MatrixSet
from .errors import PairingError, RankError
from .jacobi import JointDiagResult, SolverOptions, jacobi_solve
from .qrj1d import qrj1d_solve

PAIR_TOL = 0.01
TIE_TOL = 1e-8


@dataclass
class AsymResult:
    U_est: np.ndarray
    V_est: np.ndarray
    lambdas: np.ndarray
    embedded: JointDiagResult
    pairing: List[Tuple[int, int]]

    def reconstruct(self) -> np.ndarray:
        """``U_est diag(lambdas_l) V_est^T`` for every matrix."""
        return np.einsum("ik,lk,jk->lij", self.U_est, self.lambdas, self.V_est)


def embed(mset: MatrixSet) -> MatrixSet:
    """Symmetric ``(d2 + d1)``-square embedding ``[[0, M^T], [M, 0]]``."""
    m = mset.matrices
    L, d1, d2 = m.shape
    n = np.zeros((L, d2 + d1, d2 + d1))
    n[:, :d2, d2:] = np.swapaxes(m, 1, 2)
    n[:, d2:, :d2] = m
    return MatrixSet(n, symmetric=True)


def gram_reduce(mset: MatrixSet) -> MatrixSet:
    """``{M_l^T M_l}``; shares the right factors ``V`` only when ``U`` is orthogonal."""
    m = mset.matrices
    g = np.swapaxes(m, 1, 2) @ m
    return MatrixSet(0.5 * (g + np.swapaxes(g, 1, 2)), symmetric=True)


def _first_sign(w: np.ndarray) -> float:
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    for x in w:
        if abs(x) > 1e-12 * scale:
            return 1.0 if x > 0 else -1.0
    return 1.0


def _default_tol(embedded: JointDiagResult) -> float:
    total = float(np.sum(embedded.transformed**2))
    if total <= 0:
        return PAIR_TOL
    return PAIR_TOL + 10.0 * math.sqrt(max(embedded.final_objective, 0.0) / total)


def pair_components(weights: np.ndarray, tol: float = PAIR_TOL) -> List[Tuple[int, int]]:
    """Greedily pair components whose weight profiles are anti-parallel.

    ``weights`` is ``(L, n)``. A pair qualifies when its cosine is at most
    ``-1 + tol``; the most anti-parallel pairs are taken first.
    """
    n = weights.shape[1]
    norms = np.linalg.norm(weights, axis=0)
    for p in range(n):
        if norms[p] == 0:
            raise PairingError(f"component {p} has zero weight in every matrix")
    cos = (weights.T @ weights) / np.outer(norms, norms)
    np.fill_diagonal(cos, np.inf)
    candidates = sorted(
        (float(cos[p, q]), p, q) for p in range(n) for q in range(p + 1, n) if cos[p, q] <= -1.0 + tol
    )
    paired = {}
    pairs = []
    for c, p, q in candidates:
        if p in paired or q in paired:
            continue
        for a in (p, q):
            rivals = sorted(cos[a, b] for b in range(n) if b not in (p, q) and b not in paired)
            if rivals and rivals[0] - c < TIE_TOL:
                raise PairingError(f"component {a} has ambiguous partners (identical weight profiles)")
        paired[p] = q
        paired[q] = p
        pairs.append((p, q))
    unpaired = [p for p in range(n) if p not in paired]
    if unpaired:
        raise PairingError(f"component {unpaired[0]} has no anti-parallel partner within tolerance {tol}")
    return sorted(pairs)


def recover_factors(
    embedded: JointDiagResult,
    d1: int,
    d2: int,
    k: int,
    tol: Optional[float] = None,
) -> AsymResult:
    """Assemble ``U``, ``V`` and weights from a rank-``2k`` embedded solution."""
    comps = embedded.U_est
    if comps.shape[0] != d1 + d2:
        raise ValueError(f"embedded dimension {comps.shape[0]} != d1 + d2 = {d1 + d2}")
    weights = embedded.weights
    if weights.shape[1] < 2 * k:
        raise RankError(f"embedded solution has {weights.shape[1]} components, need {2 * k}")
    weights = weights[:, : 2 * k]
    pairs = pair_components(weights, PAIR_TOL if tol is None else tol)
    if len(pairs) < k:
        raise RankError(f"only {len(pairs)} component pairs recovered, need {k}")

    U = np.empty((d1, k))
    V = np.empty((d2, k))
    lam = np.empty((weights.shape[0], k))
    pairing = []
    for col, (p, q) in enumerate(pairs[:k]):
        pos = p if _first_sign(weights[:, p]) > 0 else q
        pairing.append((p, q) if pos == p else (q, p))
        w = comps[:, pos]
        v = math.sqrt(2.0) * w[:d2]
        u = math.sqrt(2.0) * w[d2:]
        nu = np.linalg.norm(u)
        nv = np.linalg.norm(v)
        if nu == 0 or nv == 0:
            raise PairingError(f"component {pos} vanishes on one side of the embedding")
        U[:, col] = u / nu
        V[:, col] = v / nv
        lam[:, col] = weights[:, pos] * nu * nv
    # flip u and v together so the product is unchanged
    rows = np.argmax(np.abs(U), axis=0)
    signs = np.where(U[rows, np.arange(k)] < 0, -1.0, 1.0)
    return AsymResult(U_est=U * signs, V_est=V * signs, lambdas=lam, embedded=embedded, pairing=pairing)


def asym_solve(mset: MatrixSet, opts: Optional[SolverOptions] = None) -> AsymResult:
    """Embed, solve at rank ``2k`` with sorting on, and recover ``U``, ``V``."""
    opts = opts or SolverOptions()
    L, d1, d2 = mset.matrices.shape
    k = min(d1, d2) if opts.rank is None else int(opts.rank)
    if not 1 <= k <= min(d1, d2):
        raise RankError(f"rank {k} must lie in [1, {min(d1, d2)}]")
    inner = replace(opts, rank=2 * k, sort=True)
    emb = embed(mset)
    if opts.method == "qrj1d":
        res = qrj1d_solve(emb, inner)
    else:
        res = jacobi_solve(emb, inner)
    return recover_factors(res, d1, d2, k, tol=_default_tol(res))
