# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the GMM background model and block matching.

Semantics are mirrored line for line by ``_fallback.py``; keep them in sync.
"""
import numpy as np

from libc.math cimport sqrt, fabs, exp, M_PI

cdef enum:
    MAX_K = 64


def gmm_update(double[:, :, ::1] w, double[:, :, ::1] mu, double[:, :, ::1] var,
               const double[:, ::1] x, unsigned char[:, ::1] fg,
               double alpha, double threshold, double match_sigma,
               double initial_variance, double variance_floor, bint density_rho):
    cdef Py_ssize_t m1 = x.shape[0], m2 = x.shape[1], K = w.shape[2]
    cdef Py_ssize_t i, j, k, r, a, match, low
    cdef double xv, d, e, rho, total, prefix, kw, km, kv, kk
    cdef double key[MAX_K]
    if K > MAX_K:
        raise ValueError("at most %d mixture components are supported" % MAX_K)

    for i in range(m1):
        for j in range(m2):
            xv = x[i, j]
            match = -1
            for k in range(K):
                if w[i, j, k] > 0.0 and fabs(xv - mu[i, j, k]) <= match_sigma * sqrt(var[i, j, k]):
                    match = k
                    break

            if match >= 0:
                for k in range(K):
                    w[i, j, k] = (1.0 - alpha) * w[i, j, k]
                w[i, j, match] = w[i, j, match] + alpha
                d = xv - mu[i, j, match]
                if density_rho:
                    rho = alpha * exp(-0.5 * d * d / var[i, j, match]) / sqrt(2.0 * M_PI * var[i, j, match])
                    if rho > 1.0:
                        rho = 1.0
                else:
                    rho = alpha / w[i, j, match]
                    if rho < alpha:
                        rho = alpha
                    if rho > 1.0:
                        rho = 1.0
                mu[i, j, match] = (1.0 - rho) * mu[i, j, match] + rho * xv
                e = xv - mu[i, j, match]
                var[i, j, match] = (1.0 - rho) * var[i, j, match] + rho * e * e
                if var[i, j, match] < variance_floor:
                    var[i, j, match] = variance_floor
            else:
                low = 0
                for k in range(1, K):
                    if w[i, j, k] <= w[i, j, low]:
                        low = k
                w[i, j, low] = alpha
                mu[i, j, low] = xv
                var[i, j, low] = initial_variance

            total = 0.0
            for k in range(K):
                total = total + w[i, j, k]
            for k in range(K):
                w[i, j, k] = w[i, j, k] / total

            # stable insertion sort by weight/sigma, descending
            for k in range(K):
                key[k] = w[i, j, k] / sqrt(var[i, j, k])
            for k in range(1, K):
                kk = key[k]
                r = k
                while r > 0 and key[r - 1] < kk:
                    r -= 1
                if r == k:
                    continue
                kw = w[i, j, k]
                km = mu[i, j, k]
                kv = var[i, j, k]
                for a in range(k, r, -1):
                    key[a] = key[a - 1]
                    w[i, j, a] = w[i, j, a - 1]
                    mu[i, j, a] = mu[i, j, a - 1]
                    var[i, j, a] = var[i, j, a - 1]
                key[r] = kk
                w[i, j, r] = kw
                mu[i, j, r] = km
                var[i, j, r] = kv
                if match == k:
                    match = r
                elif r <= match < k:
                    match += 1

            if match < 0:
                fg[i, j] = 1
            else:
                prefix = 0.0
                for k in range(match):
                    prefix = prefix + w[i, j, k]
                fg[i, j] = 1 if prefix >= threshold else 0


def block_match(const double[:, ::1] prev, const double[:, ::1] nxt, Py_ssize_t block,
                const long long[:, ::1] candidates):
    cdef Py_ssize_t m1 = prev.shape[0], m2 = prev.shape[1]
    cdef Py_ssize_t nb1 = m1 // block, nb2 = m2 // block, nc = candidates.shape[0]
    cdef Py_ssize_t b1, b2, c, p1, p2, q1, q2, a, b
    cdef long long d1, d2
    cdef double best, s
    cdef double inf = np.inf

    disp_arr = np.zeros((nb1, nb2, 2), dtype=np.int64)
    sad_arr = np.full((nb1, nb2), np.inf)
    cdef long long[:, :, ::1] disp = disp_arr
    cdef double[:, ::1] sad = sad_arr

    for b1 in range(nb1):
        p1 = b1 * block
        for b2 in range(nb2):
            p2 = b2 * block
            best = inf
            for c in range(nc):
                d1 = candidates[c, 0]
                d2 = candidates[c, 1]
                q1 = p1 + d1
                q2 = p2 + d2
                if q1 < 0 or q2 < 0 or q1 + block > m1 or q2 + block > m2:
                    continue
                s = 0.0
                for a in range(block):
                    for b in range(block):
                        s = s + fabs(prev[p1 + a, p2 + b] - nxt[q1 + a, q2 + b])
                    if s >= best:
                        break
                if s < best:
                    best = s
                    disp[b1, b2, 0] = d1
                    disp[b1, b2, 1] = d2
            sad[b1, b2] = best
    return disp_arr, sad_arr
