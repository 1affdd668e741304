"""Analysis instruments for the estimator: exact error decomposition,
noise-offset expectation checks, and the non-local regularity statistic.

The squared-error decomposition splits the per-pixel estimator error into
a clean-signal term and a noise term through the weight rows actually used
for denoising: with s_delta(x) = sum_y w(x,y) (u(y) - u(x)) and
s_noise(x) = sum_y w(x,y) b(y),

    mean((uhat - u)^2) = mean(s_delta^2) + mean(s_noise^2)
                         + mean(2 s_noise s_delta)

whenever each weight row sums to 1. The left side is measured from the
denoiser output itself, so the identity is a genuine cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import (CenterPolicy, DenoiseConfig, DistanceSource, SelectTopK,
                     Variant)
from .engine import denoise, weighted_field_sums
from .image import (BorderPolicy, as_gray_image, domain_mask, gather_patch,
                    gaussian_patch_kernel, in_processing_domain, reflect_indices)


@dataclass(frozen=True)
class DecompositionReport:
    """Squared-error split for one configuration, averaged over the domain."""

    bias: float
    variance: float
    covariance: float
    eqm: float
    d: float
    variant_label: str

    def identity_gap(self) -> float:
        """Relative gap between eqm and bias + variance + covariance."""
        total = self.bias + self.variance + self.covariance
        scale = max(abs(self.eqm), 1e-300)
        return abs(self.eqm - total) / scale


@dataclass(frozen=True)
class RegularityPoint:
    """Mean squared center deviation of the best clean-similar patches."""

    d: float
    r: float


def _label_for(cfg: DenoiseConfig) -> str:
    return Variant(cfg.source, cfg.center, cfg.selection).label


def decompose_eqm(u: np.ndarray, b: np.ndarray, cfg: DenoiseConfig,
                  engine: str | None = None) -> DecompositionReport:
    """Decompose the mean squared error of denoising v = u + b.

    Averages run over the processing domain (full image under mirror
    borders). The eqm field is computed from the denoiser output, not from
    the three terms.
    """
    u = as_gray_image(u)
    b = as_gray_image(b)
    if u.shape != b.shape:
        raise ValueError(f"dimension mismatch: clean {u.shape} vs noise {b.shape}")
    v = u + b
    oracle = u if cfg.source is DistanceSource.ORACLE else None

    sums = weighted_field_sums(v, cfg, np.stack([u, b]), u=oracle, engine=engine)
    dom = domain_mask(u.shape, cfg.patch_radius, cfg.border)
    s_delta = sums[0][dom] - u[dom]
    s_noise = sums[1][dom]

    bias = float(np.mean(s_delta ** 2))
    variance = float(np.mean(s_noise ** 2))
    covariance = float(np.mean(2.0 * s_noise * s_delta))

    uhat = denoise(v, cfg, u=oracle, engine=engine)
    eqm = float(np.mean((uhat[dom] - u[dom]) ** 2))
    return DecompositionReport(bias=bias, variance=variance, covariance=covariance,
                               eqm=eqm, d=cfg.d, variant_label=_label_for(cfg))


def regularity_curve(u: np.ndarray, d_values, k: int = 80, patch_radius: int = 3,
                     kernel_a: float = 2.0, border: BorderPolicy = BorderPolicy.MIRROR,
                     engine: str | None = None) -> list[RegularityPoint]:
    """Mean squared deviation between each pixel and the centers of its k
    most similar clean patches (center-excluded distances on u), per d.

    Decreasing values with d mean the clean image stays centrally regular
    at long range.
    """
    u = as_gray_image(u)
    pts = []
    for d in d_values:
        cfg = DenoiseConfig(d=d, h=math.inf, patch_radius=patch_radius,
                            kernel_a=kernel_a, selection=SelectTopK(k),
                            source=DistanceSource.ORACLE, center=CenterPolicy.EXCLUDE,
                            border=border)
        # h = inf makes every kept affinity 1, so the engine's weight rows
        # are uniform over the selected set; feeding fields (u, u^2) gives
        # the selection-set moments needed for the mean squared deviation.
        sums = weighted_field_sums(u, cfg, np.stack([u, u * u]), u=u, engine=engine)
        dom = domain_mask(u.shape, patch_radius, border)
        m1 = sums[0][dom]
        m2 = sums[1][dom]
        uc = u[dom]
        r = float(np.mean(m2 - 2.0 * uc * m1 + uc * uc))
        pts.append(RegularityPoint(d=float(d), r=r))
    return pts


def expected_distance_check(u: np.ndarray, x: tuple[int, int], y: tuple[int, int],
                            sigma: float, trials: int = 2000, seed: int = 0,
                            patch_radius: int = 3, kernel_a: float = 2.0,
                            border: BorderPolicy = BorderPolicy.MIRROR,
                            chunk: int = 256) -> tuple[float, float]:
    """Monte-Carlo estimate of how additive noise offsets squared patch
    distances: returns (mean of ||V(x)-V(y)||^2 - ||U(x)-U(y)||^2 over the
    noise draws, standard error). The offset concentrates near 2 sigma^2
    for any distinct x, y. Center pixels are always included.
    """
    u = as_gray_image(u)
    if x == y:
        raise ValueError("x and y must be distinct pixels")
    if trials < 100:
        raise ValueError(f"need at least 100 trials for a usable standard error, got {trials}")
    kernel = gaussian_patch_kernel(patch_radius, kernel_a)
    kw = kernel.flat_weights()
    ix = _patch_flat_indices(u.shape, x, patch_radius, border)
    iy = _patch_flat_indices(u.shape, y, patch_radius, border)
    du = u.ravel()[ix] - u.ravel()[iy]
    du_sq = du * du

    rng = np.random.default_rng(seed)
    offsets = np.empty(trials)
    done = 0
    npix = u.size
    while done < trials:
        m = min(chunk, trials - done)
        noise = rng.standard_normal((m, npix)) * sigma
        db = noise[:, ix] - noise[:, iy]
        dv = du[None, :] + db
        # single weighted sum of (dv^2 - du^2): zero noise gives exactly 0
        offsets[done : done + m] = (dv * dv - du_sq[None, :]) @ kw
        done += m
    mean = float(np.mean(offsets))
    std_err = float(np.std(offsets, ddof=1) / math.sqrt(trials))
    return mean, std_err


def _patch_flat_indices(shape: tuple[int, int], x: tuple[int, int], radius: int,
                        border: BorderPolicy) -> np.ndarray:
    """Flat image indices of the patch pixels around x (reflected under
    mirror borders), row-major over the footprint."""
    if not in_processing_domain(shape, x, radius, border):
        raise ValueError(f"pixel {x} is outside the processing domain")
    rows = np.arange(x[0] - radius, x[0] + radius + 1)
    cols = np.arange(x[1] - radius, x[1] + radius + 1)
    if border is BorderPolicy.MIRROR:
        rows = reflect_indices(rows, shape[0])
        cols = reflect_indices(cols, shape[1])
    return (rows[:, None] * shape[1] + cols[None, :]).ravel()


def distance_perturbation_terms(u: np.ndarray, b: np.ndarray, x: tuple[int, int],
                                y: tuple[int, int], patch_radius: int = 3,
                                kernel_a: float = 2.0,
                                border: BorderPolicy = BorderPolicy.MIRROR) -> tuple[float, float]:
    """Split the noisy patch distance into its perturbation terms.

    Returns (noise_term, cross_term) where
    noise_term = ||B(x)-B(y)||^2 and cross_term = 2 <B(x)-B(y), U(x)-U(y)>,
    both under the kernel-weighted norm; adding ||U(x)-U(y)||^2 recovers
    ||V(x)-V(y)||^2 for v = u + b.
    """
    u = as_gray_image(u)
    b = as_gray_image(b)
    if u.shape != b.shape:
        raise ValueError(f"dimension mismatch: clean {u.shape} vs noise {b.shape}")
    kernel = gaussian_patch_kernel(patch_radius, kernel_a)
    kw = kernel.flat_weights()
    du = gather_patch(u, x, patch_radius, border) - gather_patch(u, y, patch_radius, border)
    db = gather_patch(b, x, patch_radius, border) - gather_patch(b, y, patch_radius, border)
    noise_term = float((db * db) @ kw)
    cross_term = float(2.0 * ((db * du) @ kw))
    return noise_term, cross_term
