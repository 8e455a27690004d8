"""Brute-force reference implementations used as test oracles.

Plain Python loops with 1-based indexing mirroring the defining formulas;
deliberately independent of the library's vectorized code paths.
"""

import numpy as np

from latcorr.estimators import PAIRS


def _series(y1, y2, alpha):
    return y1 if alpha == 1 else y2


def _d(y, k):
    # increment of the tilde series at index k (k = 2..b_n); y is 0-based
    return y[k - 1] - y[k - 2]


def prod(y1, y2, pair, k):
    a, b = pair
    return _d(_series(y1, y2, a), k) * _d(_series(y1, y2, b), k)


def brute_S(y1, y2):
    bn = len(y1)
    return {
        pair: sum(prod(y1, y2, pair, k) for k in range(2, bn + 1))
        for pair in PAIRS
    }


def brute_gamma_v1(y1, y2, T):
    bn = len(y1)
    g = np.empty((3, 3))
    for i, p in enumerate(PAIRS):
        for j, q in enumerate(PAIRS):
            main = sum(prod(y1, y2, p, k) * prod(y1, y2, q, k) for k in range(2, bn + 1))
            cross = sum(
                prod(y1, y2, p, k) * prod(y1, y2, q, k + 2)
                + prod(y1, y2, p, k + 2) * prod(y1, y2, q, k)
                for k in range(2, bn - 1)
            )
            g[i, j] = 9.0 / 8.0 * (main - 0.5 * cross) * bn / T
    return g


def brute_gamma_v2(y1, y2, T):
    bn = len(y1)
    g = np.empty((3, 3))
    for i, p in enumerate(PAIRS):
        for j, q in enumerate(PAIRS):
            total = sum(
                (prod(y1, y2, p, k + 2) - prod(y1, y2, p, k))
                * (prod(y1, y2, q, k + 2) - prod(y1, y2, q, k))
                for k in range(2, bn - 1)
            )
            g[i, j] = 9.0 / 8.0 * 0.5 * total * bn / T
    return g


def brute_partial(y1, y2, a, b, k, n_h, h):
    lo = max(k - n_h + 1, 2)
    return sum(prod(y1, y2, (a, b), l) for l in range(lo, k + 1)) / h


def brute_gamma_kernel(y1, y2, T, h, n_h):
    bn = len(y1)
    g = np.empty((3, 3))
    for i, (a1, b1) in enumerate(PAIRS):
        for j, (a2, b2) in enumerate(PAIRS):
            total = sum(
                brute_partial(y1, y2, a1, a2, k, n_h, h) * brute_partial(y1, y2, b1, b2, k, n_h, h)
                + brute_partial(y1, y2, a1, b2, k, n_h, h) * brute_partial(y1, y2, b1, a2, k, n_h, h)
                for k in range(2, bn + 1)
            )
            g[i, j] = 9.0 / 8.0 * total * T / bn
    return g


def matrix_close(a, b, rtol=1e-10):
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    return np.max(np.abs(a - b)) <= rtol * scale
