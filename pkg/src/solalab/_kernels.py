"""Compiled inner loops for ball scans and the fractional double sum.

Every kernel writes one partial result per outer index; callers reduce
the partials with numpy's pairwise summation, so the result does not
depend on the number of threads.
"""

import numba
import numpy as np

# the bundled TBB is too old for numba; skip it to avoid a warning per process
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@numba.njit(cache=True, parallel=True)
def ball_sums(vals, centers, offsets):
    out = np.empty(centers.size)
    for c in numba.prange(centers.size):
        base = centers[c]
        acc = 0.0
        for k in range(offsets.size):
            acc += vals[base + offsets[k]]
        out[c] = acc
    return out


@numba.njit(cache=True, parallel=True)
def ball_mean_oscillation(vals, centers, offsets):
    out = np.empty(centers.size)
    m = offsets.size
    for c in numba.prange(centers.size):
        base = centers[c]
        mean = 0.0
        for k in range(m):
            mean += vals[base + offsets[k]]
        mean /= m
        acc = 0.0
        for k in range(m):
            acc += abs(vals[base + offsets[k]] - mean)
        out[c] = acc / m
    return out


@numba.njit(cache=True)
def weak_sup_sorted(desc, t, min_count):
    """max over j >= min_count of desc[j-1]**t * j (desc sorted decreasingly)."""
    best = 0.0
    for j in range(min_count, desc.size + 1):
        v = desc[j - 1]
        if v <= 0.0:
            break
        cand = v**t * j
        if cand > best:
            best = cand
    return best


@numba.njit(cache=True, parallel=True)
def ball_weak_sup(vals, centers, offsets, t, min_count):
    out = np.empty(centers.size)
    m = offsets.size
    for c in numba.prange(centers.size):
        base = centers[c]
        buf = np.empty(m)
        for k in range(m):
            buf[k] = vals[base + offsets[k]]
        buf = np.sort(buf)[::-1]
        out[c] = weak_sup_sorted(buf, t, min_count)
    return out


@numba.njit(cache=True, parallel=True)
def gagliardo_partials(idx, vals, weights, q):
    """Per-node sums over j > i of |v_i - v_j|^q * weights[|x_i - x_j|^2]."""
    n = idx.shape[0]
    dim = idx.shape[1]
    ncomp = vals.shape[1]
    out = np.zeros(n)
    for i in numba.prange(n):
        acc = 0.0
        for j in range(i + 1, n):
            d2 = 0
            for a in range(dim):
                d = idx[i, a] - idx[j, a]
                d2 += d * d
            diff2 = 0.0
            for c in range(ncomp):
                e = vals[i, c] - vals[j, c]
                diff2 += e * e
            if diff2 == 0.0:
                continue
            if q == 1.0:
                acc += np.sqrt(diff2) * weights[d2]
            elif q == 2.0:
                acc += diff2 * weights[d2]
            else:
                acc += diff2 ** (0.5 * q) * weights[d2]
        out[i] = acc
    return out
