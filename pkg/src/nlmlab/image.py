"""Grayscale image core: representation, I/O, noise synthesis, patch geometry, metrics.

Images are plain 2D float64 arrays of shape (height, width), row-major,
with nominal intensity range 0-255. Values are never clamped in memory;
clamping and rounding happen only when writing to disk. Coordinates are
(row, col) tuples.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PEAK = 255.0
LUMA = (0.299, 0.587, 0.114)


class BorderPolicy(enum.Enum):
    """How patches behave near image edges.

    MIRROR reflects indices across the edge without repeating the edge
    pixel, so every pixel can be processed. CROP restricts processing to
    pixels whose full patch fits inside the image.
    """

    MIRROR = "mirror"
    CROP = "crop"


def as_gray_image(data) -> np.ndarray:
    """Coerce to a 2D float64 image array, validating the invariants."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a 2D grayscale image, got shape {img.shape}")
    if img.size == 0:
        raise ValueError("image is empty")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    return img


# ---------------------------------------------------------------------------
# Patch kernel


@dataclass(frozen=True, eq=False)
class PatchKernel:
    """Normalized Gaussian weighting over a (2*radius+1)^2 patch footprint.

    `a` is the Gaussian std in pixels; `a = inf` gives uniform weights.
    Weights sum to 1.
    """

    radius: int
    a: float
    weights: np.ndarray  # (2r+1, 2r+1), unit sum

    def __post_init__(self):
        self.weights.setflags(write=False)

    @property
    def side(self) -> int:
        return 2 * self.radius + 1

    @property
    def center_weight(self) -> float:
        return float(self.weights[self.radius, self.radius])

    def flat_weights(self, exclude_center: bool = False) -> np.ndarray:
        """Flattened row-major weights; optionally drop the center weight
        and renormalize the rest to unit sum (center entry becomes 0)."""
        w = self.weights.ravel().copy()
        if exclude_center:
            c = (self.side * self.side) // 2
            w[c] = 0.0
            s = w.sum()
            if s <= 0.0:
                raise ValueError("cannot exclude center of a single-pixel kernel")
            w /= s
        return w


def gaussian_patch_kernel(radius: int = 3, a: float = 2.0) -> PatchKernel:
    """Build the patch similarity kernel: weight(i,j) ~ exp(-(i^2+j^2)/(2a^2))."""
    if radius < 1:
        raise ValueError(f"patch radius must be >= 1, got {radius}")
    if not (a > 0.0):
        raise ValueError(f"kernel std must be positive (or inf for uniform), got {a}")
    side = 2 * radius + 1
    if math.isinf(a):
        w = np.full((side, side), 1.0 / (side * side))
    else:
        ii, jj = np.meshgrid(
            np.arange(-radius, radius + 1),
            np.arange(-radius, radius + 1),
            indexing="ij",
        )
        w = np.exp(-(ii.astype(np.float64) ** 2 + jj.astype(np.float64) ** 2) / (2.0 * a * a))
        w /= w.sum()
    return PatchKernel(radius=radius, a=float(a), weights=w)


def patch_offsets(radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-major (di, dj) offset arrays covering the patch footprint."""
    rng = np.arange(-radius, radius + 1, dtype=np.int64)
    ii, jj = np.meshgrid(rng, rng, indexing="ij")
    return ii.ravel(), jj.ravel()


# ---------------------------------------------------------------------------
# Noise synthesis


@dataclass(frozen=True)
class NoiseSpec:
    """Additive white Gaussian noise parameters.

    The generator is numpy's PCG64 (`np.random.default_rng(seed)`) with the
    ziggurat standard-normal transform, scaled by sigma. Identical
    (seed, shape) pairs produce bit-identical noise.
    """

    sigma: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


def add_gaussian_noise(img: np.ndarray, spec: NoiseSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return (noisy, noise) with noisy = img + noise, noise ~ N(0, sigma^2) i.i.d.

    No clamping is applied; the output may leave [0, 255].
    """
    img = as_gray_image(img)
    rng = np.random.default_rng(spec.seed)
    noise = rng.standard_normal(img.shape) * spec.sigma
    return img + noise, noise


# ---------------------------------------------------------------------------
# Image I/O: binary PGM (P5, maxval 255) read/write, PNG (8-bit) read


def _parse_pgm(raw: bytes, path: Path) -> np.ndarray:
    # Tokenize the header: magic, width, height, maxval. '#' starts a
    # comment running to end of line; tokens are whitespace-separated.
    tokens = []
    pos = 0
    n = len(raw)
    while len(tokens) < 4 and pos < n:
        c = raw[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            eol = raw.find(b"\n", pos)
            pos = n if eol < 0 else eol + 1
        else:
            end = pos
            while end < n and not raw[end : end + 1].isspace() and raw[end : end + 1] != b"#":
                end += 1
            tokens.append(raw[pos:end])
            pos = end
    if len(tokens) < 4:
        raise ValueError(f"{path}: truncated PGM header")
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: unsupported PNM magic {tokens[0]!r} (only binary P5)")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise ValueError(f"{path}: malformed PGM header") from None
    if maxval != 255:
        raise ValueError(f"{path}: unsupported PGM maxval {maxval} (only 255)")
    if width <= 0 or height <= 0:
        raise ValueError(f"{path}: bad PGM dimensions {width}x{height}")
    pos += 1  # single whitespace byte after maxval
    expected = width * height
    body = raw[pos : pos + expected]
    if len(body) < expected:
        raise ValueError(f"{path}: PGM raster truncated ({len(body)} of {expected} bytes)")
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width).astype(np.float64)


def _load_png(path: Path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        im.load()
        if im.mode == "L":
            return np.asarray(im, dtype=np.float64)
        if im.mode == "RGB":
            rgb = np.asarray(im, dtype=np.float64)
            return LUMA[0] * rgb[..., 0] + LUMA[1] * rgb[..., 1] + LUMA[2] * rgb[..., 2]
        raise ValueError(
            f"{path}: unsupported PNG mode {im.mode!r} (only 8-bit grayscale or RGB)"
        )


def load_image(path) -> np.ndarray:
    """Load a binary PGM (P5, maxval 255) or an 8-bit PNG as a float image.

    PGM values map directly; RGB PNGs convert via luma
    0.299 R + 0.587 G + 0.114 B.
    """
    path = Path(path)
    try:
        with open(path, "rb") as f:
            magic = f.read(8)
    except OSError as e:
        raise OSError(f"cannot read {path}: {e}") from e
    if magic.startswith(b"P5"):
        return _parse_pgm(path.read_bytes(), path)
    if magic.startswith(b"\x89PNG"):
        return _load_png(path)
    raise ValueError(f"{path}: unsupported image format (expected binary PGM P5 or PNG)")


def save_image(img: np.ndarray, path) -> None:
    """Write a binary PGM (P5, maxval 255).

    Values are rounded half-away-from-zero and clamped to [0, 255] for the
    file only; the in-memory array is untouched.
    """
    img = as_gray_image(img)
    rounded = np.sign(img) * np.floor(np.abs(img) + 0.5)
    data = np.clip(rounded, 0.0, 255.0).astype(np.uint8)
    height, width = img.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(data.tobytes())


# ---------------------------------------------------------------------------
# Patch geometry


def reflect_indices(idx: np.ndarray, n: int) -> np.ndarray:
    """Reflect out-of-range indices across the edges without repeating the
    edge sample (period 2n-2), e.g. n=4: -2 -> 2, 4 -> 2, 5 -> 1."""
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n - 2
    m = np.mod(idx, period)
    return np.where(m >= n, period - m, m)


def in_processing_domain(shape: tuple[int, int], x: tuple[int, int],
                         radius: int, border: BorderPolicy) -> bool:
    """Whether pixel x may be processed under the given border policy."""
    h, w = shape
    i, j = x
    if border is BorderPolicy.CROP:
        return radius <= i < h - radius and radius <= j < w - radius
    return 0 <= i < h and 0 <= j < w


def domain_mask(shape: tuple[int, int], radius: int, border: BorderPolicy) -> np.ndarray:
    """Boolean mask of processable pixels."""
    mask = np.zeros(shape, dtype=bool)
    if border is BorderPolicy.CROP:
        h, w = shape
        if h > 2 * radius and w > 2 * radius:
            mask[radius : h - radius, radius : w - radius] = True
    else:
        mask[:] = True
    return mask


def gather_patch(img: np.ndarray, x: tuple[int, int], radius: int,
                 border: BorderPolicy = BorderPolicy.MIRROR) -> np.ndarray:
    """Extract the (2r+1)^2 patch around x as a flat row-major vector."""
    if not in_processing_domain(img.shape, x, radius, border):
        raise ValueError(f"pixel {x} is outside the processing domain for {border.value} borders")
    i, j = x
    rows = np.arange(i - radius, i + radius + 1)
    cols = np.arange(j - radius, j + radius + 1)
    if border is BorderPolicy.MIRROR:
        rows = reflect_indices(rows, img.shape[0])
        cols = reflect_indices(cols, img.shape[1])
    return img[np.ix_(rows, cols)].ravel()


def patch_distance_sq(img: np.ndarray, x: tuple[int, int], y: tuple[int, int],
                      kernel: PatchKernel, exclude_center: bool = False,
                      border: BorderPolicy = BorderPolicy.MIRROR) -> float:
    """Kernel-weighted squared patch distance between pixels x and y.

    Under `exclude_center` the central offset is dropped and the remaining
    weights renormalized to unit sum, so distances stay comparable.
    """
    img = np.asarray(img, dtype=np.float64)
    kw = kernel.flat_weights(exclude_center)
    px = gather_patch(img, x, kernel.radius, border)
    py = gather_patch(img, y, kernel.radius, border)
    return float((px - py) ** 2 @ kw)


# ---------------------------------------------------------------------------
# Fidelity metrics


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared difference over all pixels."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB with peak 255; +inf for identical images."""
    m = mse(a, b)
    if m == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / m)
