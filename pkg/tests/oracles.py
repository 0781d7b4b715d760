"""Independent brute-force oracles used by the unit and acceptance suites.

These deliberately avoid the library's own code paths: plain loops, explicit
formulas, and dense enumeration, so an agreement check means two independent
routes computed the same quantity.
"""

import itertools
import math

import numpy as np


def brute_ranks(values):
    """Average ranks via explicit tie groups."""
    v = list(values)
    out = [0.0] * len(v)
    for i, x in enumerate(v):
        less = sum(1 for y in v if y < x)
        equal = sum(1 for y in v if y == x)
        out[i] = less + (equal + 1) / 2.0
    return np.array(out)


def brute_spearman_rho(x, y):
    rx = brute_ranks(x)
    ry = brute_ranks(y)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = math.sqrt((rx**2).sum() * (ry**2).sum())
    if denom == 0:
        return 0.0
    return float((rx * ry).sum() / denom)


def brute_ols_coefficients(X, y):
    """Normal-equations solve with an explicit inverse."""
    D = np.column_stack([np.ones(len(y)), X])
    return np.linalg.inv(D.T @ D) @ (D.T @ y)


def brute_pca(X, k):
    """Covariance eigendecomposition route (vs the SVD implementation)."""
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    C = np.cov(X - mean, rowvar=False, ddof=1)
    C = np.atleast_2d(C)
    eigvals, eigvecs = np.linalg.eigh(C)
    order = np.argsort(eigvals)[::-1]
    comps = eigvecs[:, order[:k]].T
    for row in range(comps.shape[0]):
        j = np.argmax(np.abs(comps[row]))
        if comps[row, j] < 0:
            comps[row] *= -1
    return mean, comps, eigvals[order[:k]]


def brute_pattern_distance(rho):
    rho = np.nan_to_num(np.asarray(rho, dtype=float))
    n = rho.shape[1]
    out = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            out[a, b] = math.sqrt(sum((rho[s, a] - rho[s, b]) ** 2
                                      for s in range(rho.shape[0])))
    return out


def brute_pair_orientation_entropy(theta, bins=24):
    """Exhaustive double loop over unordered pairs."""
    theta = np.asarray(theta, dtype=float)
    hist = np.zeros(bins)
    width = (math.pi / 2) / bins
    for i in range(len(theta)):
        for j in range(i + 1, len(theta)):
            d = abs(theta[i] - theta[j])
            d = min(d, math.pi - d)
            idx = min(int(d / width), bins - 1)
            hist[idx] += 1
    p = hist[hist > 0] / hist.sum()
    return float(-(p * np.log2(p)).sum())


def brute_conv_relu(img, weights, biases, stride):
    """Nested-loop valid convolution + bias + ReLU."""
    F, C, kh, kw = weights.shape
    H, W, _ = img.shape
    oh = (H - kh) // stride + 1
    ow = (W - kw) // stride + 1
    out = np.zeros((F, oh, ow))
    for f in range(F):
        for i in range(oh):
            for j in range(ow):
                acc = biases[f]
                for c in range(C):
                    for u in range(kh):
                        for v in range(kw):
                            acc += img[i * stride + u, j * stride + v, c] * weights[f, c, u, v]
                out[f, i, j] = max(acc, 0.0)
    return out


def brute_max_pool(resp, edges_y, edges_x):
    F = resp.shape[0]
    gy = len(edges_y) - 1
    gx = len(edges_x) - 1
    out = np.zeros((F, gy, gx))
    for f in range(F):
        for i in range(gy):
            for j in range(gx):
                best = -np.inf
                for r in range(edges_y[i], edges_y[i + 1]):
                    for c in range(edges_x[j], edges_x[j + 1]):
                        best = max(best, resp[f, r, c])
                out[f, i, j] = best
    return out


def best_subset_by_cv(X, y, scheme, score_fn, max_p=None):
    """Exhaustive best-subset search under a shared CV scorer."""
    p = X.shape[1]
    max_p = p if max_p is None else max_p
    best_cols, best_score = (), -np.inf
    for size in range(0, max_p + 1):
        for cols in itertools.combinations(range(p), size):
            s = score_fn(list(cols))
            if s > best_score:
                best_score, best_cols = s, cols
    return set(best_cols), best_score
