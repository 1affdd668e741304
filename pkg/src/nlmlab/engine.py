"""Weight computation, patch selection, and the denoising estimator.

Two implementations live here:

* granular per-pixel operations (`search_window`, `select_similar`,
  `weight_row`) and `naive_reference_denoise`, the direct reference used
  as the testing oracle;
* `denoise` / `weighted_field_sums`, the optimized engine dispatching to
  the numba kernel or the pure-numpy fallback (see `backend`).

The estimator: for each pixel x, out(x) = sum_{y in selected} w(x,y) v(y)
with w the normalized exponential patch affinities. Weight distances are
always measured on the noisy image; only selection may use the clean one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import backend
from ._kernels_common import (SEL_ALL, SEL_THRESH, SEL_TOPK, SELF_LITERAL,
                              SELF_MAX_OTHER)
from .config import (DenoiseConfig, DistanceSource, SelectAll,
                     SelectThreshold, SelectTopK, SelfWeightPolicy)
from .image import (BorderPolicy, PatchKernel, as_gray_image, domain_mask,
                    gather_patch, gaussian_patch_kernel, in_processing_domain,
                    patch_offsets, reflect_indices)


@dataclass(frozen=True, eq=False)
class WeightRow:
    """Normalized weights of one pixel over its selected window coordinates.

    `selected` is (m, 2) int64 in row-major order; `weights` aligns with it,
    all positive, summing to 1.
    """

    center: tuple[int, int]
    selected: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=32)
def _kernel_for(radius: int, a: float) -> PatchKernel:
    return gaussian_patch_kernel(radius, a)


def disc_offsets(d: float) -> np.ndarray:
    """Integer offsets (di, dj) with di^2 + dj^2 <= d^2, row-major order."""
    if d < 0:
        raise ValueError(f"window radius must be >= 0, got {d}")
    r = int(math.floor(d))
    rng = np.arange(-r, r + 1, dtype=np.int64)
    ii, jj = np.meshgrid(rng, rng, indexing="ij")
    mask = ii * ii + jj * jj <= d * d
    return np.stack([ii[mask], jj[mask]], axis=1)


def search_window(x: tuple[int, int], d: float, bounds: tuple[int, int]) -> np.ndarray:
    """All in-bounds pixels within Euclidean distance d of x (x included),
    as an (n, 2) array in row-major order."""
    h, w = bounds
    i, j = x
    if not (0 <= i < h and 0 <= j < w):
        raise ValueError(f"pixel {x} outside image bounds {bounds}")
    window = disc_offsets(d) + np.array([i, j], dtype=np.int64)
    ok = (window[:, 0] >= 0) & (window[:, 0] < h) & (window[:, 1] >= 0) & (window[:, 1] < w)
    return window[ok]


def raw_affinity(dist_sq: float, h: float) -> float:
    """exp(-dist_sq / (2 h^2)); 1 at zero distance, decreasing in dist_sq."""
    if dist_sq < 0:
        raise ValueError(f"squared distance must be >= 0, got {dist_sq}")
    return math.exp(-dist_sq / (2.0 * (h * h)))


def _window_distances(img: np.ndarray, x: tuple[int, int], window: np.ndarray,
                      kernel: PatchKernel, exclude_center: bool,
                      border: BorderPolicy) -> np.ndarray:
    """Squared kernel-weighted patch distances from x to every window pixel."""
    if window.shape[0] == 0:
        return np.empty(0)
    kw = kernel.flat_weights(exclude_center)
    poi, poj = patch_offsets(kernel.radius)
    rows = window[:, 0:1] + poi[None, :]
    cols = window[:, 1:2] + poj[None, :]
    if border is BorderPolicy.MIRROR:
        rows = reflect_indices(rows, img.shape[0])
        cols = reflect_indices(cols, img.shape[1])
    elif (rows < 0).any() or (rows >= img.shape[0]).any() \
            or (cols < 0).any() or (cols >= img.shape[1]).any():
        raise ValueError("window coordinate outside the crop processing domain")
    patches = img[rows, cols]
    ref = gather_patch(img, x, kernel.radius, border)
    diff = patches - ref[None, :]
    return (diff * diff) @ kw


def _domain_window(x: tuple[int, int], cfg: DenoiseConfig, shape: tuple[int, int]) -> np.ndarray:
    """Search window restricted to the processing domain."""
    window = search_window(x, cfg.d, shape)
    if cfg.border is BorderPolicy.CROP:
        h, w = shape
        r = cfg.patch_radius
        ok = ((window[:, 0] >= r) & (window[:, 0] < h - r)
              & (window[:, 1] >= r) & (window[:, 1] < w - r))
        window = window[ok]
    return window


def select_similar(x: tuple[int, int], window: np.ndarray, selection_img: np.ndarray,
                   cfg: DenoiseConfig) -> np.ndarray:
    """Restrict the window to the similar patches per cfg.selection.

    Distances are measured on `selection_img` (the noisy image, or the
    clean one for oracle selection) with cfg.center applied. Output keeps
    row-major order.
    """
    rule = cfg.selection
    if isinstance(rule, SelectAll):
        return window
    selection_img = np.asarray(selection_img, dtype=np.float64)
    kernel = _kernel_for(cfg.patch_radius, cfg.kernel_a)
    dist = _window_distances(selection_img, x, window, kernel, cfg.exclude_center, cfg.border)
    if isinstance(rule, SelectTopK):
        if rule.k >= window.shape[0]:
            return window
        order = np.argsort(dist, kind="stable")
        keep = np.sort(order[: rule.k])
        return window[keep]
    aff = np.exp(-dist / (2.0 * (cfg.bandwidth * cfg.bandwidth)))
    return window[aff >= rule.tau]


def weight_row(x: tuple[int, int], v: np.ndarray, cfg: DenoiseConfig,
               u: np.ndarray | None = None) -> WeightRow:
    """Selected coordinates and normalized weights for one pixel.

    Selection runs on v or u per cfg.source; the weights themselves are
    always exponential affinities of patch distances on v.
    """
    v = as_gray_image(v)
    if not in_processing_domain(v.shape, x, cfg.patch_radius, cfg.border):
        raise ValueError(f"pixel {x} is outside the processing domain")
    sel_img = _selection_image(v, cfg, u)
    window = _domain_window(x, cfg, v.shape)
    selected = select_similar(x, window, sel_img, cfg)
    kernel = _kernel_for(cfg.patch_radius, cfg.kernel_a)
    dist = _window_distances(v, x, selected, kernel, cfg.exclude_center, cfg.border)
    bw = cfg.bandwidth
    aff = np.exp(-dist / (2.0 * (bw * bw)))

    if cfg.self_weight is SelfWeightPolicy.MAX_OTHER and selected.shape[0] > 1:
        at_self = np.nonzero((selected[:, 0] == x[0]) & (selected[:, 1] == x[1]))[0]
        if at_self.size:
            others = np.delete(aff, at_self[0])
            mx = float(others.max())
            if mx > 0.0:
                aff[at_self[0]] = mx

    z = float(aff.sum())
    if z <= 0.0:
        # Affinity underflow across the row; degenerate to the identity row.
        return WeightRow(center=x, selected=np.array([x], dtype=np.int64),
                         weights=np.ones(1))
    return WeightRow(center=x, selected=selected, weights=aff / z)


def _selection_image(v: np.ndarray, cfg: DenoiseConfig, u: np.ndarray | None) -> np.ndarray:
    if cfg.source is DistanceSource.ORACLE:
        if u is None:
            raise ValueError("oracle selection requires the clean image u")
        u = as_gray_image(u)
        if u.shape != v.shape:
            raise ValueError(f"dimension mismatch: clean {u.shape} vs noisy {v.shape}")
        return u
    return v


def naive_reference_denoise(v: np.ndarray, cfg: DenoiseConfig,
                            u: np.ndarray | None = None) -> np.ndarray:
    """Direct per-pixel reference estimator; the testing oracle for `denoise`.

    Evaluates the weight row and the weighted sum pixel by pixel with no
    shared precomputation. Pixels outside the processing domain keep their
    input value.
    """
    v = as_gray_image(v)
    _selection_image(v, cfg, u)  # validate oracle inputs up front
    out = v.copy()
    dom = domain_mask(v.shape, cfg.patch_radius, cfg.border)
    for i, j in np.argwhere(dom):
        row = weight_row((int(i), int(j)), v, cfg, u)
        vals = v[row.selected[:, 0], row.selected[:, 1]]
        out[i, j] = float(row.weights @ vals)
    return out


# ---------------------------------------------------------------------------
# Optimized engine


def _reflect_pad(img: np.ndarray, width: int) -> np.ndarray:
    if width == 0:
        return img.copy()
    mode = "reflect" if min(img.shape) > 1 else "edge"
    return np.pad(img, width, mode=mode)


def weighted_field_sums(v: np.ndarray, cfg: DenoiseConfig, fields: np.ndarray,
                        u: np.ndarray | None = None,
                        engine: str | None = None) -> np.ndarray:
    """For each field g, compute sum_y w(x,y) g(y) with the denoising
    weight rows; fields is (C, H, W), result matches.

    Out-of-domain pixels pass their own field values through. This is the
    single engine entry point: `denoise` is the one-field case and the
    diagnostics feed (u, b, ...) stacks through it.
    """
    v = as_gray_image(v)
    fields = np.ascontiguousarray(fields, dtype=np.float64)
    if fields.ndim != 3 or fields.shape[1:] != v.shape:
        raise ValueError(f"fields must be (C, {v.shape[0]}, {v.shape[1]}), got {fields.shape}")
    sel_img = _selection_image(v, cfg, u)
    eng = backend.resolve_engine(engine)

    pr = cfg.patch_radius
    kernel = _kernel_for(pr, cfg.kernel_a)
    kw = kernel.flat_weights(cfg.exclude_center)
    poi, poj = patch_offsets(pr)
    offs = disc_offsets(cfg.d)
    offs_i = np.ascontiguousarray(offs[:, 0])
    offs_j = np.ascontiguousarray(offs[:, 1])
    self_idx = int(np.nonzero((offs_i == 0) & (offs_j == 0))[0][0])

    v_pad = _reflect_pad(v, pr)
    sel_is_v = sel_img is v
    sel_pad = v_pad if sel_is_v else _reflect_pad(sel_img, pr)

    bw = cfg.bandwidth
    h2t = 2.0 * (bw * bw)
    rule = cfg.selection
    if isinstance(rule, SelectTopK):
        sel_mode, sel_k, sel_tau = SEL_TOPK, rule.k, 0.0
    elif isinstance(rule, SelectThreshold):
        sel_mode, sel_k, sel_tau = SEL_THRESH, 0, rule.tau
    else:
        sel_mode, sel_k, sel_tau = SEL_ALL, 0, 0.0
    self_mode = SELF_MAX_OTHER if cfg.self_weight is SelfWeightPolicy.MAX_OTHER else SELF_LITERAL

    height, width = v.shape
    if cfg.border is BorderPolicy.CROP:
        lo, hi_i, hi_j = pr, height - pr, width - pr
    else:
        lo, hi_i, hi_j = 0, height, width

    out = np.empty_like(fields)
    if eng == "numba":
        from . import _kernels_numba as kern
    else:
        from . import _kernels_numpy as kern
    kern.run_cells(v_pad, sel_pad, sel_is_v, fields, out, kw, poi, poj,
                   offs_i, offs_j, self_idx, h2t, sel_mode, sel_k, sel_tau,
                   self_mode, pr, lo, hi_i, hi_j)
    return out


def denoise(v: np.ndarray, cfg: DenoiseConfig, u: np.ndarray | None = None,
            engine: str | None = None) -> np.ndarray:
    """Denoise v: each pixel becomes the weighted average of its selected
    window values. Output has the same shape; under crop borders the
    unprocessed margin keeps the input values."""
    v = as_gray_image(v)
    return weighted_field_sums(v, cfg, v[np.newaxis], u=u, engine=engine)[0]
