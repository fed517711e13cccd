"""Hot loops for user-user Pearson similarity.

Two interchangeable backends compute one similarity row (target user against
every user of a CSR matrix):

* ``pcc_row_numba`` - merge-join over sorted CSR rows, compiled with numba.
* ``pcc_row_numpy`` - vectorized over a dense NaN-free copy plus a mask.

Set ``TONEREC_DISABLE_NUMBA=1`` (or run without numba installed) to force the
numpy path. Undefined correlations come back as NaN.
"""

from __future__ import annotations

import os

import numpy as np

# Deviation mass below this fraction of the raw second moment counts as zero
# variance; guards constant rows whose float mean is off by an ulp.
ZERO_VARIANCE_RTOL = 1e-12

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

DISABLED = os.environ.get("TONEREC_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")
USE_NUMBA = HAVE_NUMBA and not DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"


def _pcc_row_py(indptr, indices, data, means, target, co_rated):
    n_users = indptr.shape[0] - 1
    values = np.full(n_users, np.nan)
    overlap = np.zeros(n_users, dtype=np.int64)
    t0 = indptr[target]
    t1 = indptr[target + 1]
    nt = t1 - t0
    buf_a = np.empty(nt, dtype=np.float64)
    buf_b = np.empty(nt, dtype=np.float64)
    for v in range(n_users):
        if v == target:
            continue
        v0 = indptr[v]
        v1 = indptr[v + 1]
        i = t0
        j = v0
        n = 0
        while i < t1 and j < v1:
            ci = indices[i]
            cj = indices[j]
            if ci == cj:
                buf_a[n] = data[i]
                buf_b[n] = data[j]
                n += 1
                i += 1
                j += 1
            elif ci < cj:
                i += 1
            else:
                j += 1
        overlap[v] = n
        if n == 0:
            continue
        if co_rated:
            sa = 0.0
            sb = 0.0
            for q in range(n):
                sa += buf_a[q]
                sb += buf_b[q]
            ma = sa / n
            mb = sb / n
        else:
            ma = means[target]
            mb = means[v]
        num = 0.0
        va = 0.0
        vb = 0.0
        ra = 0.0
        rb = 0.0
        for q in range(n):
            da = buf_a[q] - ma
            db = buf_b[q] - mb
            num += da * db
            va += da * da
            vb += db * db
            ra += buf_a[q] * buf_a[q]
            rb += buf_b[q] * buf_b[q]
        if va <= ZERO_VARIANCE_RTOL * ra or vb <= ZERO_VARIANCE_RTOL * rb:
            continue
        r = num / (np.sqrt(va) * np.sqrt(vb))
        if r > 1.0:
            r = 1.0
        elif r < -1.0:
            r = -1.0
        values[v] = r
    return values, overlap


if HAVE_NUMBA:
    pcc_row_numba = numba.njit(cache=True, nogil=True)(_pcc_row_py)
else:  # pragma: no cover
    pcc_row_numba = _pcc_row_py


def pcc_row_numpy(dense, mask, means, target, co_rated):
    """Vectorized similarity row over a dense (users x columns) layout.

    ``dense`` holds 0.0 in unrated cells and ``mask`` marks rated cells.
    """
    co = mask & mask[target]
    overlap = co.sum(axis=1).astype(np.int64)
    xt = np.where(co, dense[target], 0.0)
    xv = np.where(co, dense, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        if co_rated:
            safe = np.maximum(overlap, 1)
            ma = xt.sum(axis=1) / safe
            mb = xv.sum(axis=1) / safe
        else:
            ma = np.full(dense.shape[0], means[target])
            mb = np.asarray(means, dtype=np.float64)
        da = np.where(co, xt - ma[:, None], 0.0)
        db = np.where(co, xv - mb[:, None], 0.0)
        num = (da * db).sum(axis=1)
        va = (da * da).sum(axis=1)
        vb = (db * db).sum(axis=1)
        ra = (xt * xt).sum(axis=1)
        rb = (xv * xv).sum(axis=1)
        values = num / (np.sqrt(va) * np.sqrt(vb))
    undefined = (overlap == 0) | (va <= ZERO_VARIANCE_RTOL * ra) | (vb <= ZERO_VARIANCE_RTOL * rb)
    values = np.clip(values, -1.0, 1.0)
    values[undefined] = np.nan
    values[target] = np.nan
    overlap[target] = 0
    return values, overlap
