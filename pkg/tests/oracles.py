"""Independent reference implementations used only by tests.

Everything here is written with explicit loops or full matrix products so it
shares no code path with the library.
"""
import itertools
import math

import numpy as np


def off_objective_loops(mats):
    total = 0.0
    for m in mats:
        n = len(m)
        for i in range(n):
            for j in range(n):
                if i != j:
                    total += float(m[i][j]) ** 2
    return total


def givens_matrix(d, i, j, c, s):
    g = np.eye(d)
    g[i, i] = c
    g[j, j] = c
    g[j, i] = s
    g[i, j] = -s
    return g


def shear_matrix(d, i, j, a):
    t = np.eye(d)
    t[j, i] = a
    return t


def congruence(mats, T):
    return np.array([T.T @ m @ T for m in mats])


def restricted_givens_objective(mats, i, j, theta):
    d = mats.shape[1]
    return off_objective_loops(congruence(mats, givens_matrix(d, i, j, math.cos(theta), math.sin(theta))))


def restricted_shear_objective(mats, i, j, a):
    d = mats.shape[1]
    return off_objective_loops(congruence(mats, shear_matrix(d, i, j, a)))


def grid(lo, hi, step):
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def vectorized_givens_objective(mats, i, j, thetas):
    """Restricted objective on a grid of angles by explicit products, batched."""
    d = mats.shape[1]
    out = np.empty(len(thetas))
    mask = ~np.eye(d, dtype=bool)
    for n, t in enumerate(thetas):
        g = givens_matrix(d, i, j, math.cos(t), math.sin(t))
        out[n] = np.sum((g.T @ mats @ g)[:, mask] ** 2)
    return out


def vectorized_shear_objective(mats, i, j, values):
    d = mats.shape[1]
    out = np.empty(len(values))
    mask = ~np.eye(d, dtype=bool)
    for n, a in enumerate(values):
        t = shear_matrix(d, i, j, a)
        out[n] = np.sum((t.T @ mats @ t)[:, mask] ** 2)
    return out


def best_permutation(estimated, truth):
    """Exhaustive assignment maximizing the summed |cosine|."""
    e = estimated / np.linalg.norm(estimated, axis=0)
    t = truth / np.linalg.norm(truth, axis=0)
    cos = np.abs(e.T @ t)
    k = truth.shape[1]
    best, best_perm = -1.0, None
    for perm in itertools.permutations(range(estimated.shape[1]), k):
        score = sum(cos[perm[j], j] for j in range(k))
        if score > best:
            best, best_perm = score, perm
    return np.array(best_perm)


def random_symmetric_set(gen, L, d):
    g = gen.standard_normal((L, d, d))
    return 0.5 * (g + np.swapaxes(g, 1, 2))
