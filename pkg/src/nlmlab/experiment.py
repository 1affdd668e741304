"""Experiment harness: corpus ingestion, PSNR/decomposition/regularity
sweeps over the window radius, and deterministic CSV emission.

One noise realization is drawn per corpus image (seeded seed_base + image
index in alphabetical order) and shared across every (variant, d) cell of
a sweep, so curve differences come from the estimator alone. All sweep
results are bit-reproducible for a fixed spec.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import DistanceSource, Variant, canonical_variants
from .diagnostics import DecompositionReport, RegularityPoint, decompose_eqm, regularity_curve
from .engine import denoise
from .image import NoiseSpec, add_gaussian_noise, load_image, psnr

log = logging.getLogger("nlmlab")


@dataclass(frozen=True)
class SweepSpec:
    """Parameters of one sweep run."""

    corpus_dir: Path | str
    d_values: tuple[float, ...] = tuple(float(d) for d in range(1, 16))
    variants: tuple[Variant, ...] = canonical_variants()
    sigma: float = 20.0
    h: float | None = None  # None: h equals sigma
    seed_base: int = 0
    output_path: Path | str | None = None
    crop: int | None = 128
    patch_radius: int = 3
    kernel_a: float = 2.0

    def __post_init__(self):
        if not self.d_values:
            raise ValueError("d_values must be non-empty")
        if any(b <= a for a, b in zip(self.d_values, self.d_values[1:])):
            raise ValueError(f"d_values must be strictly increasing, got {self.d_values}")
        if not self.variants:
            raise ValueError("variants must be non-empty")


@dataclass(frozen=True)
class CurveRow:
    """Aggregated PSNR for one (variant, d) cell."""

    variant_label: str
    d: float
    psnr_mean: float
    psnr_std: float
    n_images: int


@dataclass(frozen=True)
class ExpectationRow:
    """Result of one noise-offset expectation check."""

    x_row: int
    x_col: int
    y_row: int
    y_col: int
    sigma: float
    trials: int
    empirical_offset: float
    std_error: float
    expected_offset: float


def center_crop(img: np.ndarray, size: int) -> np.ndarray:
    """Centered crop to at most size x size."""
    if size < 1:
        raise ValueError(f"crop size must be >= 1, got {size}")
    h, w = img.shape
    ch, cw = min(size, h), min(size, w)
    r0, c0 = (h - ch) // 2, (w - cw) // 2
    return img[r0 : r0 + ch, c0 : c0 + cw].copy()


def ingest_corpus(directory: Path | str, crop: int | None = None) -> list[tuple[str, np.ndarray]]:
    """Load every readable image in a directory, alphabetically by name.

    Unreadable files are skipped with a logged warning. Raises if nothing
    loads.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ValueError(f"corpus directory not found: {directory}")
    images = []
    for path in sorted(p for p in directory.iterdir() if p.is_file()):
        try:
            img = load_image(path)
        except Exception as e:
            log.warning("skipping %s: %s", path.name, e)
            continue
        if crop is not None:
            img = center_crop(img, crop)
        images.append((path.name, img))
    if not images:
        raise ValueError(f"no supported images in {directory}")
    return images


def _noisy_corpus(spec: SweepSpec) -> list[tuple[str, np.ndarray, np.ndarray, np.ndarray]]:
    """(name, clean, noisy, noise) per image, seeded seed_base + index."""
    out = []
    for idx, (name, img) in enumerate(ingest_corpus(spec.corpus_dir, spec.crop)):
        noisy, noise = add_gaussian_noise(img, NoiseSpec(spec.sigma, spec.seed_base + idx))
        out.append((name, img, noisy, noise))
    return out


def run_sweep(spec: SweepSpec, engine: str | None = None) -> list[CurveRow]:
    """PSNR(clean, denoised) per (variant, d), aggregated over the corpus.

    Writes the CSV as a side effect when spec.output_path is set.
    """
    corpus = _noisy_corpus(spec)
    rows = []
    for variant in spec.variants:
        oracle_needed = variant.source is DistanceSource.ORACLE
        for d in spec.d_values:
            cfg = variant.config(d=d, sigma=spec.sigma, h=spec.h,
                                 patch_radius=spec.patch_radius, kernel_a=spec.kernel_a)
            values = []
            for _, clean, noisy, _ in corpus:
                uhat = denoise(noisy, cfg, u=clean if oracle_needed else None, engine=engine)
                values.append(psnr(clean, uhat))
            arr = np.asarray(values)
            rows.append(CurveRow(variant_label=variant.label, d=float(d),
                                 psnr_mean=float(arr.mean()), psnr_std=float(arr.std()),
                                 n_images=len(values)))
    if spec.output_path is not None:
        emit_csv(rows, spec.output_path, CurveRow)
    return rows


def run_decomposition_sweep(spec: SweepSpec, engine: str | None = None) -> list[DecompositionReport]:
    """Error decomposition per (variant, d), averaged over the corpus."""
    corpus = _noisy_corpus(spec)
    rows = []
    for variant in spec.variants:
        for d in spec.d_values:
            cfg = variant.config(d=d, sigma=spec.sigma, h=spec.h,
                                 patch_radius=spec.patch_radius, kernel_a=spec.kernel_a)
            reps = [decompose_eqm(clean, noise, cfg, engine=engine)
                    for _, clean, _, noise in corpus]
            rows.append(DecompositionReport(
                bias=float(np.mean([r.bias for r in reps])),
                variance=float(np.mean([r.variance for r in reps])),
                covariance=float(np.mean([r.covariance for r in reps])),
                eqm=float(np.mean([r.eqm for r in reps])),
                d=float(d), variant_label=variant.label,
            ))
    if spec.output_path is not None:
        emit_csv(rows, spec.output_path, DecompositionReport)
    return rows


def run_regularity(spec: SweepSpec, k: int = 80, engine: str | None = None) -> list[RegularityPoint]:
    """Clean-image regularity statistic per d, averaged over the corpus."""
    images = ingest_corpus(spec.corpus_dir, spec.crop)
    per_image = [regularity_curve(img, spec.d_values, k=k, patch_radius=spec.patch_radius,
                                  kernel_a=spec.kernel_a, engine=engine)
                 for _, img in images]
    rows = []
    for col, d in enumerate(spec.d_values):
        rows.append(RegularityPoint(d=float(d),
                                    r=float(np.mean([pts[col].r for pts in per_image]))))
    if spec.output_path is not None:
        emit_csv(rows, spec.output_path, RegularityPoint)
    return rows


# ---------------------------------------------------------------------------
# CSV emission: comma-separated, '.' decimal separator, 12 significant
# digits, one header line. Column names and order are a stable contract.

_SCHEMAS: dict[type, tuple[str, ...]] = {
    CurveRow: ("variant", "d", "psnr_mean", "psnr_std", "n_images"),
    DecompositionReport: ("variant", "d", "bias", "variance", "covariance", "eqm"),
    RegularityPoint: ("d", "r"),
    ExpectationRow: ("x_row", "x_col", "y_row", "y_col", "sigma", "trials",
                     "empirical_offset", "std_error", "expected_offset"),
}

_FIELD_ALIASES = {"variant": "variant_label"}


def _format_cell(value) -> str:
    if isinstance(value, bool):
        raise TypeError("no boolean CSV cells")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return "%.12g" % value
    return str(value)


def csv_text(rows, kind: type | None = None) -> str:
    """Render rows of one report type; `kind` is required when empty."""
    if kind is None:
        if not rows:
            raise ValueError("kind is required for an empty row list")
        kind = type(rows[0])
    if kind not in _SCHEMAS:
        raise TypeError(f"no CSV schema for {kind!r}")
    columns = _SCHEMAS[kind]
    lines = [",".join(columns)]
    for row in rows:
        if type(row) is not kind:
            raise TypeError(f"mixed row types: expected {kind.__name__}, got {type(row).__name__}")
        cells = [_format_cell(getattr(row, _FIELD_ALIASES.get(col, col))) for col in columns]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def emit_csv(rows, path: Path | str, kind: type | None = None) -> None:
    """Write the CSV for one sweep kind (byte-deterministic)."""
    text = csv_text(rows, kind)
    with open(path, "w", newline="\n") as f:
        f.write(text)
