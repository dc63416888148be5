"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``.

Vectorized over pixels (GMM) or blocks (block matching); the per-element
arithmetic follows the compiled loops so both backends agree to rounding.
"""
import numpy as np


def _seq_sum(a):
    # left-to-right over the component axis, matching the compiled loop
    total = a[..., 0].copy()
    for k in range(1, a.shape[-1]):
        total += a[..., k]
    return total


def gmm_update(w, mu, var, x, fg, alpha, threshold, match_sigma,
               initial_variance, variance_floor, density_rho):
    K = w.shape[-1]
    flat_w = w.reshape(-1, K)
    flat_mu = mu.reshape(-1, K)
    flat_var = var.reshape(-1, K)
    xv = np.asarray(x, dtype=np.float64).reshape(-1)
    rows = np.arange(xv.size)

    ok = (flat_w > 0.0) & (np.abs(xv[:, None] - flat_mu) <= match_sigma * np.sqrt(flat_var))
    matched = ok.any(axis=1)
    match = np.where(matched, ok.argmax(axis=1), -1)

    m = rows[matched]
    jm = match[matched]
    if m.size:
        flat_w[m] = (1.0 - alpha) * flat_w[m]
        flat_w[m, jm] = flat_w[m, jm] + alpha
        mu_old = flat_mu[m, jm]
        var_old = flat_var[m, jm]
        d = xv[m] - mu_old
        if density_rho:
            rho = alpha * np.exp(-0.5 * d * d / var_old) / np.sqrt(2.0 * np.pi * var_old)
            rho = np.minimum(rho, 1.0)
        else:
            rho = np.minimum(np.maximum(alpha / flat_w[m, jm], alpha), 1.0)
        mu_new = (1.0 - rho) * mu_old + rho * xv[m]
        e = xv[m] - mu_new
        var_new = (1.0 - rho) * var_old + rho * e * e
        flat_mu[m, jm] = mu_new
        flat_var[m, jm] = np.maximum(var_new, variance_floor)

    u = rows[~matched]
    if u.size:
        # lowest weight, ties resolved towards the last component
        low = K - 1 - np.argmin(flat_w[u, ::-1], axis=1)
        flat_w[u, low] = alpha
        flat_mu[u, low] = xv[u]
        flat_var[u, low] = initial_variance

    flat_w /= _seq_sum(flat_w)[:, None]

    key = flat_w / np.sqrt(flat_var)
    order = np.argsort(-key, axis=1, kind="stable")
    flat_w[:] = np.take_along_axis(flat_w, order, axis=1)
    flat_mu[:] = np.take_along_axis(flat_mu, order, axis=1)
    flat_var[:] = np.take_along_axis(flat_var, order, axis=1)

    # new rank of the matched component
    rank = np.argmax(order == match[:, None], axis=1)
    prefix = np.zeros(xv.size)
    for k in range(K - 1):
        prefix += np.where(rank > k, flat_w[:, k], 0.0)
    out = np.where(matched, prefix >= threshold, True)
    fg.reshape(-1)[:] = out.astype(np.uint8)


def block_match(prev, nxt, block, candidates):
    m1, m2 = prev.shape
    nb1, nb2 = m1 // block, m2 // block
    h, w = nb1 * block, nb2 * block
    ref = prev[:h, :w]
    best = np.full((nb1, nb2), np.inf)
    disp = np.zeros((nb1, nb2, 2), dtype=np.int64)
    starts1 = np.arange(nb1) * block
    starts2 = np.arange(nb2) * block
    for d1, d2 in np.asarray(candidates):
        valid = ((starts1 + d1 >= 0) & (starts1 + d1 + block <= m1))[:, None] & \
                ((starts2 + d2 >= 0) & (starts2 + d2 + block <= m2))[None, :]
        if not valid.any():
            continue
        # shifted view of the next frame, NaN outside the frame
        shifted = np.full((h, w), np.nan)
        r0, r1 = max(0, -d1), min(h, m1 - d1)
        c0, c1 = max(0, -d2), min(w, m2 - d2)
        if r0 < r1 and c0 < c1:
            shifted[r0:r1, c0:c1] = nxt[r0 + d1:r1 + d1, c0 + d2:c1 + d2]
        sad = np.abs(ref - shifted).reshape(nb1, block, nb2, block).sum(axis=(1, 3))
        better = valid & (sad < best)
        best = np.where(better, sad, best)
        disp[better] = (d1, d2)
    return disp, best
