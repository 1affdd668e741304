"""Patch-based non-local means denoising, selection variants, and the
window-radius experiment toolkit."""

from .backend import default_engine, numba_available, set_thread_count
from .config import (CenterPolicy, DenoiseConfig, DistanceSource, SelectAll,
                     SelectionRule, SelectThreshold, SelectTopK,
                     SelfWeightPolicy, Variant, canonical_variants,
                     parse_selection, parse_variant)
from .diagnostics import (DecompositionReport, RegularityPoint, decompose_eqm,
                          distance_perturbation_terms, expected_distance_check,
                          regularity_curve)
from .engine import (WeightRow, denoise, disc_offsets, naive_reference_denoise,
                     raw_affinity, search_window, select_similar, weight_row,
                     weighted_field_sums)
from .experiment import (CurveRow, ExpectationRow, SweepSpec, center_crop,
                         csv_text, emit_csv, ingest_corpus,
                         run_decomposition_sweep, run_regularity, run_sweep)
from .image import (BorderPolicy, NoiseSpec, PatchKernel, add_gaussian_noise,
                    as_gray_image, gaussian_patch_kernel, load_image, mse,
                    patch_distance_sq, psnr, save_image)

__version__ = "0.1.0"

__all__ = [
    "BorderPolicy", "CenterPolicy", "CurveRow", "DecompositionReport",
    "DenoiseConfig", "DistanceSource", "ExpectationRow", "NoiseSpec",
    "PatchKernel", "RegularityPoint", "SelectAll", "SelectThreshold",
    "SelectTopK", "SelectionRule", "SelfWeightPolicy", "SweepSpec", "Variant",
    "WeightRow", "add_gaussian_noise", "as_gray_image", "canonical_variants",
    "center_crop", "csv_text", "decompose_eqm", "default_engine", "denoise",
    "disc_offsets", "distance_perturbation_terms", "emit_csv",
    "expected_distance_check", "gaussian_patch_kernel", "ingest_corpus",
    "load_image", "mse", "naive_reference_denoise", "numba_available",
    "parse_selection", "parse_variant", "patch_distance_sq", "psnr",
    "raw_affinity", "regularity_curve", "run_decomposition_sweep",
    "run_regularity", "run_sweep", "save_image", "search_window",
    "select_similar", "set_thread_count", "weight_row", "weighted_field_sums",
]
