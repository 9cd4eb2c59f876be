"""Compiled inner loops of the collaborative denoiser.

Group data is handled as flat float64 buffers in ``(m, bx, by, bt)`` order.
Per-reference work runs under ``prange`` and writes to private output slots;
aggregation is a separate sequential pass in reference order, so results do
not depend on the thread count.
"""

import numpy as np
from numba import njit, prange

HARD = 0
WIENER = 1


@njit(cache=True)
def match_into(guide, x0, y0, t0, bx, by, bt, rx, ry, rt, thr, max_group, coords, dists):
    """Fill ``coords``/``dists`` with the group for reference (x0, y0, t0).

    Candidates are visited in lexicographic origin order; ties in distance
    keep that order. The reference is always member 0. Returns the group
    size (a power of two).
    """
    nx, ny, nt = guide.shape
    n = bx * by * bt
    coords[0, 0] = x0
    coords[0, 1] = y0
    coords[0, 2] = t0
    dists[0] = 0.0
    cap = max_group - 1
    if cap == 0:
        return 1
    filled = 0
    accepted = 0
    xlo = max(0, x0 - rx)
    xhi = min(nx - bx, x0 + rx)
    ylo = max(0, y0 - ry)
    yhi = min(ny - by, y0 + ry)
    tlo = max(0, t0 - rt)
    thi = min(nt - bt, t0 + rt)
    nct = thi - tlo + 1
    acc = np.empty(nct, dtype=np.float64)
    for cx in range(xlo, xhi + 1):
        for cy in range(ylo, yhi + 1):
            # all t-candidates of this column at once; each accumulates in (i, j, k) order
            acc[:] = 0.0
            full = filled == cap
            alive = True
            for i in range(bx):
                for j in range(by):
                    for k in range(bt):
                        r = guide[x0 + i, y0 + j, t0 + k]
                        row = guide[cx + i, cy + j, tlo + k: tlo + k + nct]
                        for c in range(nct):
                            diff = r - row[c]
                            acc[c] += diff * diff
                    # partial sums only grow, so stop once no candidate can still be admitted
                    alive = False
                    for c in range(nct):
                        d = acc[c] / n
                        if (d < dists[cap]) if full else (d <= thr):
                            alive = True
                            break
                    if not alive:
                        break
                if not alive:
                    break
            if not alive:
                continue
            for c in range(nct):
                ct = tlo + c
                if cx == x0 and cy == y0 and ct == t0:
                    continue
                d = acc[c] / n
                if filled == cap:
                    # a full buffer only admits candidates strictly closer than its worst
                    if not d < dists[cap]:
                        continue
                elif d <= thr:
                    accepted += 1
                    filled += 1
                else:
                    continue
                pos = filled
                while pos > 1 and dists[pos - 1] > d:
                    dists[pos] = dists[pos - 1]
                    coords[pos, 0] = coords[pos - 1, 0]
                    coords[pos, 1] = coords[pos - 1, 1]
                    coords[pos, 2] = coords[pos - 1, 2]
                    pos -= 1
                dists[pos] = d
                coords[pos, 0] = cx
                coords[pos, 1] = cy
                coords[pos, 2] = ct
    total = accepted + 1
    if total > max_group:
        total = max_group
    m = 1
    while m * 2 <= total:
        m *= 2
    return m


INV_SQRT2 = 0.7071067811865476


@njit(cache=True)
def _axis_apply(src, dst, mat, pre, length, post):
    # dst[a, k, c] = sum_l mat[k, l] * src[a, l, c]
    for a in range(pre):
        base = a * length * post
        for k in range(length):
            o = base + k * post
            for c in range(post):
                dst[o + c] = 0.0
            for l in range(length):
                coef = mat[k, l]
                s = base + l * post
                for c in range(post):
                    dst[o + c] += coef * src[s + c]


@njit(cache=True)
def _rows_apply(src, dst, mat_t, rows, length):
    # dst[a, k] = sum_l mat[k, l] * src[a, l] for contiguous rows; takes mat.T
    for a in range(rows):
        b = a * length
        for k in range(length):
            dst[b + k] = 0.0
        for l in range(length):
            x = src[b + l]
            for k in range(length):
                dst[b + k] += mat_t[l, k] * x


@njit(cache=True)
def haar_groups_forward(buf, tmp, m, n):
    """Multi-level Haar across ``m`` consecutive rows of length ``n``."""
    length = m
    while length > 1:
        half = length // 2
        for i in range(half):
            a = 2 * i * n
            b = a + n
            lo = i * n
            hi = (half + i) * n
            for c in range(n):
                tmp[lo + c] = (buf[a + c] + buf[b + c]) * INV_SQRT2
                tmp[hi + c] = (buf[a + c] - buf[b + c]) * INV_SQRT2
        buf[: length * n] = tmp[: length * n]
        length = half


@njit(cache=True)
def haar_groups_inverse(buf, tmp, m, n):
    length = 1
    while length < m:
        for i in range(length):
            s = i * n
            d = (length + i) * n
            o = 2 * i * n
            for c in range(n):
                tmp[o + c] = (buf[s + c] + buf[d + c]) * INV_SQRT2
                tmp[o + n + c] = (buf[s + c] - buf[d + c]) * INV_SQRT2
        buf[: 2 * length * n] = tmp[: 2 * length * n]
        length *= 2


@njit(cache=True)
def forward_4d(buf, tmp, m, bx, by, bt, cx, cy, ctt):
    """In-place separable forward transform of ``buf[:m*bx*by*bt]``.

    ``cx``, ``cy`` are DCT matrices; ``ctt`` is the transposed t-axis matrix.
    """
    _rows_apply(buf, tmp, ctt, m * bx * by, bt)
    _axis_apply(tmp, buf, cy, m * bx, by, bt)
    _axis_apply(buf, tmp, cx, m, bx, by * bt)
    n = bx * by * bt
    buf[: m * n] = tmp[: m * n]
    haar_groups_forward(buf, tmp, m, n)


@njit(cache=True)
def inverse_4d(buf, tmp, m, bx, by, bt, cxt, cyt, ct):
    n = bx * by * bt
    haar_groups_inverse(buf, tmp, m, n)
    _axis_apply(buf, tmp, cxt, m, bx, by * bt)
    _axis_apply(tmp, buf, cyt, m * bx, by, bt)
    _rows_apply(buf, tmp, ct, m * bx * by, bt)
    buf[: m * n] = tmp[: m * n]


@njit(cache=True)
def _gather(vol, coords, m, bx, by, bt, buf):
    idx = 0
    for g in range(m):
        x0 = coords[g, 0]
        y0 = coords[g, 1]
        t0 = coords[g, 2]
        for i in range(bx):
            for j in range(by):
                for k in range(bt):
                    buf[idx] = vol[x0 + i, y0 + j, t0 + k]
                    idx += 1


@njit(parallel=True, cache=True)
def filter_chunk(mode, noisy, guide, refs, r0, r1, bx, by, bt, rx, ry, rt, match_thr, max_group,
                 sigma, lambda_hard, cx, cy, ct, cxt, cyt, ctt, out_blocks, out_coords, out_m, out_w):
    """Match, transform, shrink and invert the groups for ``refs[r0:r1]``.

    ``mode`` is HARD (hard thresholding of ``noisy``) or WIENER (empirical
    Wiener shrinkage of ``noisy`` with ``guide`` as pilot). Matching always
    runs on ``guide``. ``cx, cy, ct`` are the per-axis DCT matrices and
    ``cxt, cyt, ctt`` their transposes, all C-contiguous.
    """
    n = bx * by * bt
    var = sigma * sigma
    for q in prange(r1 - r0):
        r = r0 + q
        coords = np.empty((max_group, 3), dtype=np.int64)
        dists = np.empty(max_group, dtype=np.float64)
        m = match_into(guide, refs[r, 0], refs[r, 1], refs[r, 2], bx, by, bt, rx, ry, rt,
                       match_thr, max_group, coords, dists)
        size = m * n
        buf = np.empty(size, dtype=np.float64)
        tmp = np.empty(size, dtype=np.float64)
        _gather(noisy, coords, m, bx, by, bt, buf)
        w = 1.0
        if sigma > 0.0:
            forward_4d(buf, tmp, m, bx, by, bt, cx, cy, ctt)
            if mode == HARD:
                thr = lambda_hard * sigma
                kept = 1  # global DC is always retained
                for i in range(1, size):
                    if abs(buf[i]) < thr:
                        buf[i] = 0.0
                    else:
                        kept += 1
                w = 1.0 / (var * max(kept, 1))
            else:
                pilot = np.empty(size, dtype=np.float64)
                _gather(guide, coords, m, bx, by, bt, pilot)
                forward_4d(pilot, tmp, m, bx, by, bt, cx, cy, ctt)
                sum_w2 = 1.0  # DC gain fixed at 1
                for i in range(1, size):
                    b2 = pilot[i] * pilot[i]
                    gain = b2 / (b2 + var)
                    buf[i] *= gain
                    sum_w2 += gain * gain
                w = 1.0 / (var * max(sum_w2, 1e-12))
            inverse_4d(buf, tmp, m, bx, by, bt, cxt, cyt, ct)
        out_blocks[q, :size] = buf
        out_coords[q, :m, :] = coords[:m, :]
        out_m[q] = m
        out_w[q] = w


@njit(cache=True)
def aggregate_chunk(num, den, out_blocks, out_coords, out_m, out_w, count, bx, by, bt):
    for q in range(count):
        w = out_w[q]
        idx = 0
        for g in range(out_m[q]):
            x0 = out_coords[q, g, 0]
            y0 = out_coords[q, g, 1]
            t0 = out_coords[q, g, 2]
            for i in range(bx):
                for j in range(by):
                    for k in range(bt):
                        num[x0 + i, y0 + j, t0 + k] += w * out_blocks[q, idx]
                        den[x0 + i, y0 + j, t0 + k] += w
                        idx += 1
