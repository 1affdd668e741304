"""Pure-numpy engine fallback.

Vectorizes over pixels in horizontal bands while looping over window
offsets, mirroring the jitted kernel's arithmetic: distances accumulate
over patch offsets in row-major order and weight rows normalize over the
kept affinities, so the two backends agree to rounding noise (1e-10 is
asserted in tests). Band size is chosen to bound peak memory.
"""

from __future__ import annotations

import numpy as np

from ._kernels_common import SEL_THRESH, SEL_TOPK, SELF_MAX_OTHER

_BAND_ELEMS = 1_500_000  # per offset-stack elements per band


def _band_height(n_off: int, width: int, height: int) -> int:
    return max(1, min(height, _BAND_ELEMS // max(1, n_off * width)))


def run_cells(v_pad, sel_pad, sel_is_v, fields, out, kw, poi, poj,
              offs_i, offs_j, self_idx, h2t, sel_mode, sel_k, sel_tau,
              self_mode, pr, lo, hi_i, hi_j):
    n_off = offs_i.shape[0]
    plen = kw.shape[0]
    n_fields, height, width = fields.shape
    big = int(np.max(np.abs(offs_i))) if n_off else 0
    big = max(big, int(np.max(np.abs(offs_j))) if n_off else 0)

    # Extend pads so every (offset, patch-offset) shift is a plain slice.
    # The zero-filled margin only feeds masked-out candidates.
    sel_ext = np.pad(sel_pad, big, mode="constant")
    v_ext = sel_ext if sel_is_v else np.pad(v_pad, big, mode="constant")
    f_ext = np.pad(fields, ((0, 0), (big, big), (big, big)), mode="constant")

    dom = np.zeros((height, width), dtype=bool)
    dom[lo:hi_i, lo:hi_j] = True
    dom_ext = np.pad(dom, big, mode="constant")

    band = _band_height(n_off, width, height)
    for r0 in range(0, height, band):
        bh = min(band, height - r0)
        shp = (n_off, bh, width)
        dist_sel = np.empty(shp)
        valid = np.empty(shp, dtype=bool)

        def shifted(ext, di, dj, extra=0):
            i0 = r0 + big + extra + di
            j0 = big + extra + dj
            return ext[i0 : i0 + bh, j0 : j0 + width]

        for t in range(n_off):
            oi, oj = int(offs_i[t]), int(offs_j[t])
            valid[t] = shifted(dom_ext, oi, oj)
            acc = np.zeros((bh, width))
            for p in range(plen):
                a = shifted(sel_ext, int(poi[p]), int(poj[p]), extra=pr)
                b = shifted(sel_ext, oi + int(poi[p]), oj + int(poj[p]), extra=pr)
                d = a - b
                acc += kw[p] * d * d
            dist_sel[t] = acc
        dist_sel[~valid] = np.inf

        if sel_mode == SEL_TOPK:
            order = np.argsort(dist_sel, axis=0, kind="stable")
            ranks = np.empty(shp, dtype=np.int64)
            np.put_along_axis(ranks, order, np.arange(n_off, dtype=np.int64)[:, None, None], axis=0)
            k_eff = np.minimum(sel_k, valid.sum(axis=0))
            keep = valid & (ranks < k_eff[None, :, :])
        elif sel_mode == SEL_THRESH:
            with np.errstate(invalid="ignore"):
                keep = valid & (np.exp(-dist_sel / h2t) >= sel_tau)
        else:
            keep = valid

        if sel_is_v:
            dist_w = dist_sel
        else:
            dist_w = np.empty(shp)
            for t in range(n_off):
                oi, oj = int(offs_i[t]), int(offs_j[t])
                acc = np.zeros((bh, width))
                for p in range(plen):
                    a = shifted(v_ext, int(poi[p]), int(poj[p]), extra=pr)
                    b = shifted(v_ext, oi + int(poi[p]), oj + int(poj[p]), extra=pr)
                    d = a - b
                    acc += kw[p] * d * d
                dist_w[t] = acc
        with np.errstate(invalid="ignore", over="ignore"):
            aff = np.where(keep, np.exp(-dist_w / h2t), 0.0)

        if self_mode == SELF_MAX_OTHER and n_off > 1:
            self_aff = aff[self_idx].copy()
            self_keep = keep[self_idx].copy()
            aff[self_idx] = -1.0
            mx = aff.max(axis=0)
            aff[self_idx] = np.where(self_keep & (mx > 0.0), mx, self_aff)

        z = np.zeros((bh, width))
        for t in range(n_off):
            z += aff[t]
        dead = z <= 0.0
        z[dead] = 1.0
        aff /= z

        for c in range(n_fields):
            num = np.zeros((bh, width))
            for t in range(n_off):
                num += aff[t] * shifted(f_ext[c], int(offs_i[t]), int(offs_j[t]))
            band_dom = dom[r0 : r0 + bh]
            live = band_dom & ~dead
            out[c, r0 : r0 + bh][live] = num[live]
            out[c, r0 : r0 + bh][~live] = fields[c, r0 : r0 + bh][~live]
