"""Seeded planted problems ``M_l = U diag(lambda_l) V^T + eps R_l``.

Factors, weights and noise come from separate sub-streams of the seed, so the
same seed yields the same factors and noise directions for every ``eps``.
Noise matrices have unit Frobenius norm.
"""
from __future__ import annotations

from typing import Tuple

import numpy as np

from . import rng
from .core import GroundTruth, MatrixSet

WEIGHT_RANGE = (0.5, 1.5)
RHO_LIMIT = 0.999
MAX_WEIGHT_DRAWS = 100
COND_REFINE_STEPS = 200

_FACTORS, _WEIGHTS, _NOISE, _FACTORS_V = 1, 2, 3, 4


def _check(d, k, L, eps, cond=1.0):
    if d < 1 or L < 1:
        raise ValueError("dimension and matrix count must be positive")
    if not 1 <= k <= d:
        raise ValueError(f"rank {k} must lie in [1, {d}]")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if cond < 1:
        raise ValueError("cond must be >= 1")


def haar_orthogonal(gen: np.random.Generator, d: int) -> np.ndarray:
    """Uniformly distributed orthogonal matrix (QR of a Gaussian, sign fixed)."""
    q, r = np.linalg.qr(gen.standard_normal((d, d)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def conditioned_factor(gen: np.random.Generator, d: int, k: int, cond: float) -> np.ndarray:
    """``Q1 diag(s) Q2^T`` with log-spaced ``s`` from 1 to ``1/cond``, first
    ``k`` columns, normalized to unit length.

    Normalizing columns distorts the spectrum, so the singular values are
    re-imposed and the columns renormalized until the measured condition
    number is within 1% of ``cond`` (at most ``COND_REFINE_STEPS`` rounds).
    """
    q1 = haar_orthogonal(gen, d)
    q2 = haar_orthogonal(gen, d)
    s = np.logspace(0.0, -np.log10(cond), d)
    full = (q1 * s) @ q2.T
    u = full[:, :k]
    u = u / np.linalg.norm(u, axis=0)
    if k < 2 or cond == 1:
        return u
    target = np.logspace(0.0, -np.log10(cond), k)
    for _ in range(COND_REFINE_STEPS):
        p, sv, qt = np.linalg.svd(u, full_matrices=False)
        if abs(sv[0] / sv[-1] / cond - 1.0) <= 0.01:
            break
        u = (p * target) @ qt
        u = u / np.linalg.norm(u, axis=0)
    return u


def _max_abs_rho(lambdas: np.ndarray) -> float:
    norms = np.linalg.norm(lambdas, axis=0)
    g = (lambdas.T @ lambdas) / np.outer(norms, norms)
    np.fill_diagonal(g, 0.0)
    return float(np.max(np.abs(g))) if g.size else 0.0


def random_weights(gen: np.random.Generator, L: int, k: int) -> np.ndarray:
    """``(L, k)`` weights with magnitudes uniform in ``WEIGHT_RANGE`` and random signs.

    For ``L >= 2`` draws whose weight columns are nearly collinear
    (``|rho| > RHO_LIMIT``) are redrawn.
    """
    lo, hi = WEIGHT_RANGE
    for _ in range(MAX_WEIGHT_DRAWS):
        mag = gen.uniform(lo, hi, size=(L, k))
        sign = np.where(gen.random((L, k)) < 0.5, -1.0, 1.0)
        lam = mag * sign
        if L < 2 or k < 2 or _max_abs_rho(lam) <= RHO_LIMIT:
            return lam
    raise RuntimeError(f"could not draw identifiable weights in {MAX_WEIGHT_DRAWS} attempts")


def symmetric_noise(gen: np.random.Generator, L: int, d: int) -> np.ndarray:
    g = gen.standard_normal((L, d, d))
    r = 0.5 * (g + np.swapaxes(g, 1, 2))
    return r / np.linalg.norm(r, axis=(1, 2))[:, None, None]


def general_noise(gen: np.random.Generator, L: int, d1: int, d2: int) -> np.ndarray:
    g = gen.standard_normal((L, d1, d2))
    return g / np.linalg.norm(g, axis=(1, 2))[:, None, None]


def _symmetric_problem(d, k, L, eps, cond, seed, kind) -> Tuple[MatrixSet, GroundTruth]:
    if kind == "orthogonal":
        U = haar_orthogonal(rng.stream(seed, _FACTORS), d)[:, :k]
    else:
        U = conditioned_factor(rng.stream(seed, _FACTORS), d, k, cond)
    lambdas = random_weights(rng.stream(seed, _WEIGHTS), L, k)
    noises = symmetric_noise(rng.stream(seed, _NOISE), L, d)
    truth = GroundTruth(
        U=U,
        lambdas=lambdas,
        eps=float(eps),
        noises=noises,
        meta={"kind": kind, "cond": float(cond), "seed": int(seed), "noise_norm": "frobenius"},
    )
    return MatrixSet(truth.matrices(), symmetric=True), truth


def random_orthogonal_problem(d: int, k: int, L: int, eps: float, seed: int):
    """Planted symmetric problem with orthonormal factors."""
    _check(d, k, L, eps)
    return _symmetric_problem(d, k, L, eps, 1.0, seed, "orthogonal")


def random_nonorthogonal_problem(d: int, k: int, L: int, eps: float, cond: float, seed: int):
    """Planted symmetric problem with unit-norm factors of condition ~``cond``."""
    _check(d, k, L, eps, cond)
    return _symmetric_problem(d, k, L, eps, cond, seed, "nonorthogonal")


def random_asymmetric_problem(d1: int, d2: int, k: int, L: int, eps: float, cond: float, seed: int):
    """Planted ``M_l = U diag(lambda_l) V^T + eps R_l`` with ``U`` in
    ``R^{d1 x k}`` and ``V`` in ``R^{d2 x k}``; ``cond = 1`` gives orthonormal
    factors."""
    _check(min(d1, d2), k, L, eps, cond)
    gu = rng.stream(seed, _FACTORS)
    gv = rng.stream(seed, _FACTORS_V)
    if cond == 1:
        U = haar_orthogonal(gu, d1)[:, :k]
        V = haar_orthogonal(gv, d2)[:, :k]
    else:
        U = conditioned_factor(gu, d1, k, cond)
        V = conditioned_factor(gv, d2, k, cond)
    lambdas = random_weights(rng.stream(seed, _WEIGHTS), L, k)
    noises = general_noise(rng.stream(seed, _NOISE), L, d1, d2)
    truth = GroundTruth(
        U=U,
        V=V,
        lambdas=lambdas,
        eps=float(eps),
        noises=noises,
        meta={"kind": "asymmetric", "cond": float(cond), "seed": int(seed), "noise_norm": "frobenius"},
    )
    return MatrixSet(truth.matrices(), symmetric=False), truth


def make_problem(kind: str, d: int, k: int, L: int, eps: float, seed: int, cond: float = 1.0, d2=None):
    """Dispatch on ``kind`` in {orthogonal, nonorthogonal, asymmetric}."""
    if kind == "orthogonal":
        return random_orthogonal_problem(d, k, L, eps, seed)
    if kind == "nonorthogonal":
        return random_nonorthogonal_problem(d, k, L, eps, cond, seed)
    if kind == "asymmetric":
        return random_asymmetric_problem(d, d if d2 is None else d2, k, L, eps, cond, seed)
    raise ValueError(f"unknown problem kind {kind!r}")
