"""First-order perturbation of joint diagonalizers.

For ``M_l = U diag(lambda_l) U^T + eps R_l`` the estimated factors satisfy
``U~ = Ubar (I - eps E) + o(eps)`` where ``Ubar`` extends ``U`` to a basis.
``E`` is computed either by the orthogonal (pairwise least squares on the
rotation angle) formula or by the non-orthogonal 2x2 system, and bounded
entrywise via the modulus of uniqueness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from .core import GroundTruth, MatrixSet
from .errors import AlignmentError, SimDiagError, UnidentifiablePairError
from .jacobi import SolverOptions, jacobi_solve
from .metrics import align_factors
from .qrj1d import qrj1d_solve

KINDS = ("cardoso", "afsari_exact", "afsari_bound")
RHO_DEGENERATE = 1e-12
# the solver must resolve the optimum far below eps**2 for first-order checks
BOUND_SOLVE_TOL = 1e-6


@dataclass
class PerturbationReport:
    E: np.ndarray
    column_bounds: np.ndarray
    rho: np.ndarray
    kind: str
    eps: float
    T: Optional[np.ndarray] = None

    def bounds_at(self, eps: float) -> np.ndarray:
        """Column bounds ``eps * ||E[:, j]||`` at another noise level."""
        return eps * np.linalg.norm(self.E, axis=0)


def extend_basis(U: np.ndarray) -> np.ndarray:
    """``[U, Q]`` with ``Q`` an orthonormal basis of the complement of ``span(U)``."""
    d, k = U.shape
    if k == d:
        return np.array(U, dtype=np.float64, copy=True)
    q, _ = np.linalg.qr(U, mode="complete")
    return np.hstack([U, q[:, k:]])


def modulus_of_uniqueness(lambdas: np.ndarray) -> np.ndarray:
    """Pairwise cosines between the weight columns of an ``(L, k)`` array."""
    lambdas = np.asarray(lambdas, dtype=np.float64)
    norms = np.linalg.norm(lambdas, axis=0)
    for i, n in enumerate(norms):
        if n == 0:
            raise UnidentifiablePairError(i, i, "component has zero weight in every matrix")
    rho = (lambdas.T @ lambdas) / np.outer(norms, norms)
    rho = np.clip(0.5 * (rho + rho.T), -1.0, 1.0)
    np.fill_diagonal(rho, 1.0)
    return rho


def _padded_weights(truth: GroundTruth) -> np.ndarray:
    L, k = truth.lambdas.shape
    d = truth.U.shape[0]
    lam = np.zeros((L, d))
    lam[:, :k] = truth.lambdas
    return lam


def _require_noise(truth: GroundTruth) -> np.ndarray:
    if truth.noises is None:
        raise SimDiagError("perturbation bounds need the noise matrices")
    return np.asarray(truth.noises, dtype=np.float64)


def _report(E, truth, kind, T=None) -> PerturbationReport:
    return PerturbationReport(
        E=E,
        column_bounds=truth.eps * np.linalg.norm(E, axis=0),
        rho=modulus_of_uniqueness(truth.lambdas),
        kind=kind,
        eps=truth.eps,
        T=T,
    )


def cardoso_E(truth: GroundTruth) -> PerturbationReport:
    """Orthogonal-case coefficients
    ``E_ij = sum_l (l_il - l_jl) u_j^T R_l u_i / sum_l (l_il - l_jl)^2``."""
    R = _require_noise(truth)
    Ub = extend_basis(truth.U)
    d, k = truth.U.shape
    lam = _padded_weights(truth)
    Rt = np.einsum("ai,lab,bj->lij", Ub, R, Ub)
    E = np.zeros((d, k))
    for j in range(k):
        for i in range(d):
            if i == j:
                continue
            diff = lam[:, i] - lam[:, j]
            den = float(diff @ diff)
            if den == 0.0:
                raise UnidentifiablePairError(i, j, "identical weight profiles")
            E[i, j] = float(diff @ Rt[:, j, i]) / den
    return _report(E, truth, "cardoso")


def _noise_T(truth: GroundTruth):
    R = _require_noise(truth)
    Vb = np.linalg.inv(extend_basis(truth.U))
    lam = _padded_weights(truth)
    Rp = np.einsum("ia,lab,jb->lij", Vb, R, Vb)
    T = np.einsum("lij,lj->ij", Rp, lam)
    np.fill_diagonal(T, 0.0)
    return T, lam


def _pair_terms(lam, i, j):
    ni = float(np.linalg.norm(lam[:, i]))
    nj = float(np.linalg.norm(lam[:, j]))
    if ni == 0.0:
        return ni, nj, None
    rho = float(lam[:, i] @ lam[:, j]) / (ni * nj)
    if abs(rho) >= 1.0 - RHO_DEGENERATE:
        raise UnidentifiablePairError(i, j, f"modulus of uniqueness {rho:.12f}")
    return ni, nj, rho


def afsari_E(truth: GroundTruth) -> PerturbationReport:
    """Non-orthogonal coefficients from the per-pair 2x2 system in
    ``(E_ij, E_ji)`` driven by ``T_ij = sum_l v_i^T R_l v_j l_jl``."""
    T, lam = _noise_T(truth)
    d, k = truth.U.shape
    E = np.zeros((d, k))
    for j in range(k):
        for i in range(d):
            if i == j:
                continue
            ni, nj, rho = _pair_terms(lam, i, j)
            if rho is None:
                # ||lambda_i|| = 0: only the equation for E_ij survives
                E[i, j] = -T[i, j] / nj**2
                continue
            gamma = ni * nj
            eta = ni / nj
            E[i, j] = -(eta * T[i, j] - rho * T[j, i]) / (gamma * (1.0 - rho * rho))
    return _report(E, truth, "afsari_exact", T=T)


def afsari_simple_bound(truth: GroundTruth) -> PerturbationReport:
    """Entrywise bound ``|E_ij| <= (1/(1-rho^2)) (1/|l_i|^2 + 1/|l_j|^2) (|T_ij| + |T_ji|)``."""
    T, lam = _noise_T(truth)
    d, k = truth.U.shape
    B = np.zeros((d, k))
    for j in range(k):
        for i in range(d):
            if i == j:
                continue
            ni, nj, rho = _pair_terms(lam, i, j)
            if rho is None:
                B[i, j] = abs(T[i, j]) / nj**2
                continue
            B[i, j] = (1.0 / (1.0 - rho * rho)) * (1.0 / ni**2 + 1.0 / nj**2) * (abs(T[i, j]) + abs(T[j, i]))
    return _report(B, truth, "afsari_bound", T=T)


def lemma_report(truth: GroundTruth, kind: str) -> PerturbationReport:
    if kind == "cardoso":
        return cardoso_E(truth)
    if kind == "afsari_exact":
        return afsari_E(truth)
    if kind == "afsari_bound":
        return afsari_simple_bound(truth)
    raise ValueError(f"unknown bound kind {kind!r}")


def empirical_bound_check(
    truth: GroundTruth,
    opts: Optional[SolverOptions] = None,
    eps_list: Sequence[float] = (1e-6,),
    kind: Optional[str] = None,
) -> List[dict]:
    """Solve ``U diag(l) U^T + eps R`` for each ``eps`` and compare the aligned
    column errors with the first-order bound.

    ``kind`` defaults to ``cardoso`` for the Jacobi solver and ``afsari_exact``
    for QRJ1D. Rows carry ``eps, component, error, bound, ratio, kind, exact``;
    at ``eps = 0`` the ratio is ``None`` and ``exact`` is True.
    """
    d, k = truth.U.shape
    opts = opts or SolverOptions(rank=k)
    if opts.rank is None:
        opts = replace(opts, rank=k)
    if kind is None:
        kind = "cardoso" if opts.method == "jacobi" else "afsari_exact"
    mode = "sign" if opts.method == "jacobi" else "scale"
    report = lemma_report(truth, kind)
    solve = jacobi_solve if opts.method == "jacobi" else qrj1d_solve
    rows = []
    for eps in eps_list:
        eps = float(eps)
        run_opts = opts if eps == 0 else replace(opts, tol=min(opts.tol, BOUND_SOLVE_TOL * eps * eps))
        mset = MatrixSet(truth.matrices(eps), symmetric=True)
        result = solve(mset, run_opts)
        try:
            aligned = align_factors(result.U_est, truth.U, mode=mode)
        except AlignmentError:
            raise
        bounds = report.bounds_at(eps)
        for j in range(k):
            err = float(aligned.column_errors[j])
            bound = float(bounds[j])
            if eps == 0:
                ratio = None
            else:
                ratio = err / bound if bound > 0 else math.inf
            rows.append(
                {
                    "eps": eps,
                    "component": j,
                    "error": err,
                    "bound": bound,
                    "ratio": ratio,
                    "kind": kind,
                    "exact": eps == 0,
                    "converged": result.converged,
                }
            )
    return rows
