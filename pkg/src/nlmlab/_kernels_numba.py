"""Numba-jitted per-pixel engine kernel.

One generic kernel covers denoising and the diagnostic weighted sums: for
every pixel x in the processing domain it builds the selected window, the
normalized weight row, and accumulates sum_y w(x,y) * g(y) for each field
g in `fields`. Pixels outside the domain pass their own field values
through (equivalent to the weight row {x: 1}).

Floating-point layout is fixed: patch distances accumulate over the patch
footprint in row-major order, weight rows normalize by the sum of kept
affinities, and per-pixel sums run in row-major window order, so results
are independent of the number of worker threads.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from ._kernels_common import SEL_THRESH, SEL_TOPK, SELF_MAX_OTHER


@njit(parallel=True, cache=True)
def run_cells(v_pad, sel_pad, sel_is_v, fields, out, kw, poi, poj,
              offs_i, offs_j, self_idx, h2t, sel_mode, sel_k, sel_tau,
              self_mode, pr, lo, hi_i, hi_j):
    n_off = offs_i.shape[0]
    plen = kw.shape[0]
    n_fields = fields.shape[0]
    height = fields.shape[1]
    width = fields.shape[2]

    for i in prange(height):
        dsel = np.empty(n_off, dtype=np.float64)
        aff = np.empty(n_off, dtype=np.float64)
        keep = np.empty(n_off, dtype=np.bool_)
        for j in range(width):
            if i < lo or i >= hi_i or j < lo or j >= hi_j:
                for c in range(n_fields):
                    out[c, i, j] = fields[c, i, j]
                continue

            # Selection distances over the window, row-major offset order.
            n_valid = 0
            for t in range(n_off):
                yi = i + offs_i[t]
                yj = j + offs_j[t]
                if lo <= yi < hi_i and lo <= yj < hi_j:
                    acc = 0.0
                    bi = i + pr
                    bj = j + pr
                    ci = yi + pr
                    cj = yj + pr
                    for p in range(plen):
                        da = sel_pad[bi + poi[p], bj + poj[p]] - sel_pad[ci + poi[p], cj + poj[p]]
                        acc += kw[p] * da * da
                    dsel[t] = acc
                    keep[t] = True
                    n_valid += 1
                else:
                    dsel[t] = np.inf
                    keep[t] = False

            if sel_mode == SEL_TOPK and sel_k < n_valid:
                order = np.argsort(dsel, kind="mergesort")
                for t in range(n_off):
                    keep[t] = False
                for r in range(sel_k):
                    keep[order[r]] = True
            elif sel_mode == SEL_THRESH:
                for t in range(n_off):
                    if keep[t] and not (math.exp(-dsel[t] / h2t) >= sel_tau):
                        keep[t] = False

            # Weight affinities always come from the noisy image.
            for t in range(n_off):
                if keep[t]:
                    if sel_is_v:
                        dw = dsel[t]
                    else:
                        yi = i + offs_i[t]
                        yj = j + offs_j[t]
                        dw = 0.0
                        bi = i + pr
                        bj = j + pr
                        ci = yi + pr
                        cj = yj + pr
                        for p in range(plen):
                            da = v_pad[bi + poi[p], bj + poj[p]] - v_pad[ci + poi[p], cj + poj[p]]
                            dw += kw[p] * da * da
                    aff[t] = math.exp(-dw / h2t)
                else:
                    aff[t] = 0.0

            if self_mode == SELF_MAX_OTHER and keep[self_idx]:
                mx = -1.0
                for t in range(n_off):
                    if keep[t] and t != self_idx and aff[t] > mx:
                        mx = aff[t]
                if mx > 0.0:
                    aff[self_idx] = mx

            z = 0.0
            for t in range(n_off):
                if keep[t]:
                    z += aff[t]
            if z <= 0.0:
                # All affinities underflowed; degenerate row {x: 1}.
                for c in range(n_fields):
                    out[c, i, j] = fields[c, i, j]
                continue
            for t in range(n_off):
                if keep[t]:
                    aff[t] = aff[t] / z

            for c in range(n_fields):
                s = 0.0
                for t in range(n_off):
                    if keep[t]:
                        s += aff[t] * fields[c, i + offs_i[t], j + offs_j[t]]
                out[c, i, j] = s
