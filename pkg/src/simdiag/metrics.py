"""Matching estimated factor columns to reference columns."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError


@dataclass
class AlignmentReport:
    permutation: np.ndarray  # permutation[j] = estimated column matched to truth column j
    signs_or_scales: np.ndarray
    column_errors: np.ndarray
    max_error: float
    mean_error: float


def cosine_matrix(estimated: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """``C[p, j]`` = cosine between estimated column ``p`` and truth column ``j``.
    Zero columns get cosine 0."""
    en = np.linalg.norm(estimated, axis=0)
    tn = np.linalg.norm(truth, axis=0)
    e = estimated / np.where(en > 0, en, 1.0)
    t = truth / np.where(tn > 0, tn, 1.0)
    return e.T @ t


def greedy_matching(cos: np.ndarray) -> np.ndarray:
    """Take candidate pairs in decreasing ``|cos|`` order, skipping any that
    reuse a row or column. Returns ``perm`` with ``perm[j]`` the row matched
    to column ``j``."""
    n_est, k = cos.shape
    if n_est < k:
        raise AlignmentError(f"{n_est} estimated columns cannot cover {k} reference columns")
    order = np.argsort(-np.abs(cos), axis=None, kind="stable")
    perm = np.full(k, -1, dtype=int)
    used = np.zeros(n_est, dtype=bool)
    for flat in order:
        p, j = divmod(int(flat), k)
        if used[p] or perm[j] >= 0:
            continue
        perm[j] = p
        used[p] = True
    return perm


def align_factors(estimated: np.ndarray, truth: np.ndarray, mode: str = "sign") -> AlignmentReport:
    """Match columns of ``estimated`` to ``truth`` up to permutation and sign
    (``mode="sign"``) or least-squares scale (``mode="scale"``)."""
    estimated = np.asarray(estimated, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if estimated.shape[0] != truth.shape[0]:
        raise AlignmentError(f"row mismatch: {estimated.shape} vs {truth.shape}")
    if mode not in ("sign", "scale"):
        raise ValueError(f"unknown alignment mode {mode!r}")
    cos = cosine_matrix(estimated, truth)
    perm = greedy_matching(cos)
    k = truth.shape[1]
    factors = np.empty(k)
    errors = np.empty(k)
    for j in range(k):
        p = perm[j]
        if cos[p, j] == 0.0:
            raise AlignmentError(f"no estimated column correlates with reference column {j}")
        u_hat = estimated[:, p]
        u = truth[:, j]
        if mode == "sign":
            f = 1.0 if cos[p, j] > 0 else -1.0
        else:
            f = float(u @ u_hat) / float(u_hat @ u_hat)
        factors[j] = f
        errors[j] = np.linalg.norm(f * u_hat - u)
    return AlignmentReport(
        permutation=perm,
        signs_or_scales=factors,
        column_errors=errors,
        max_error=float(errors.max()) if k else 0.0,
        mean_error=float(errors.mean()) if k else 0.0,
    )
