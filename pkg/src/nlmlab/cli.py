"""Command-line interface.

Subcommands: denoise, sweep, decompose, regularity, check-expectation.
Every flag can instead come from a plain-text config file of
``key = value`` lines (--config); explicit flags win over the file.
Numeric results are emitted as CSV (12 significant digits) to --out, or
stdout when --out is omitted.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import backend
from .config import (BorderPolicy, CenterPolicy, DenoiseConfig, DistanceSource,
                     SelfWeightPolicy, parse_selection, parse_variant)
from .diagnostics import expected_distance_check
from .engine import denoise
from .experiment import (CurveRow, DecompositionReport, ExpectationRow,
                         RegularityPoint, SweepSpec, csv_text, emit_csv,
                         run_decomposition_sweep, run_regularity, run_sweep)
from .image import NoiseSpec, add_gaussian_noise, load_image, psnr, save_image

log = logging.getLogger("nlmlab")


# config-file keys are the flag names; two flags have different dests
_CONFIG_ALIASES = {"in": "input", "self": "self_weight"}


def _load_config_file(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment, blanks ignored."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        values[_CONFIG_ALIASES.get(key, key)] = value.strip()
    return values


class _Settings:
    """Flag values merged with the config file (flags win)."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        config = self._args.get("config")
        self._file = _load_config_file(config) if config else {}

    def get(self, key: str, default=None, cast=str):
        flag = self._args.get(key)
        if flag is not None:
            if isinstance(flag, str) and cast is not None and cast is not str:
                return cast(flag)
            return flag
        if key in self._file:
            raw = self._file[key]
            return cast(raw) if cast is not None else raw
        return default

    def require(self, key: str, cast=str):
        value = self.get(key, None, cast)
        if value is None:
            raise ValueError(f"missing required setting --{key.replace('_', '-')}")
        return value


def _parse_d_values(text: str) -> tuple[float, ...]:
    """'1..15' or comma list '0,2,4.5'."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        return tuple(float(d) for d in range(int(lo), int(hi) + 1))
    return tuple(float(t) for t in text.split(","))


def _parse_coord(text: str) -> tuple[int, int]:
    r, _, c = text.partition(",")
    return int(r), int(c)


def _int_or_none(text: str):
    text = text.strip().lower()
    if text in ("none", "full", "0"):
        return None
    return int(text)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="plain-text key = value file supplying defaults for any flag")
    p.add_argument("--engine", choices=["auto", "numba", "numpy"],
                   help="kernel backend (default auto: numba when available)")
    p.add_argument("--threads", type=int, help="worker thread cap for the numba backend")


def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma", type=float, help="noise standard deviation (default 20)")
    p.add_argument("--h", type=float, help="filtering parameter (default: sigma)")
    p.add_argument("--patch-radius", type=int, dest="patch_radius", help="patch radius (default 3)")
    p.add_argument("--a", type=float, help="patch kernel std in pixels, inf for uniform (default 2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlmlab",
        description="Patch-based non-local means denoising and its window-radius experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="denoise a single image")
    p.add_argument("--in", dest="input", help="input image (PGM P5 or PNG)")
    p.add_argument("--out", help="output PGM path")
    p.add_argument("--oracle-image", dest="oracle_image", help="clean image for oracle selection / PSNR")
    p.add_argument("--d", type=float, help="search window radius")
    p.add_argument("--select", help="selection rule: all | topk:K | thresh:T (default all)")
    p.add_argument("--source", choices=["noisy", "oracle"], help="selection distance source (default noisy)")
    p.add_argument("--center", choices=["include", "exclude"], help="patch center policy (default include)")
    p.add_argument("--self", dest="self_weight", choices=["literal", "max-other"],
                   help="self-weight policy (default literal)")
    p.add_argument("--border", choices=["mirror", "crop"], help="border policy (default mirror)")
    p.add_argument("--seed", type=int,
                   help="when given, treat --in as clean, add noise (sigma, seed) before denoising")
    _add_estimator_flags(p)
    _add_common(p)

    for name, help_text in (("sweep", "PSNR vs window radius over a corpus"),
                            ("decompose", "error decomposition vs window radius"),
                            ("regularity", "clean-image regularity statistic vs window radius")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--corpus", help="directory of input images")
        p.add_argument("--out", help="output CSV path (default stdout)")
        p.add_argument("--d-values", dest="d_values", help="radii: '1..15' or comma list")
        if name != "regularity":
            p.add_argument("--variants", help="comma list of w,w_v,w_v0,w_u,w_u0")
            p.add_argument("--seed-base", dest="seed_base", type=int, help="noise seed for image 0 (default 0)")
        p.add_argument("--topk", type=int, help="selection size for top-k variants (default 80)")
        p.add_argument("--crop", help="center-crop size, or 'none' for full images (default 128)")
        _add_estimator_flags(p)
        _add_common(p)

    p = sub.add_parser("check-expectation", help="Monte-Carlo check of the noise offset on patch distances")
    p.add_argument("--image", help="clean image")
    p.add_argument("--x", help="first pixel as row,col")
    p.add_argument("--y", help="second pixel as row,col")
    p.add_argument("--trials", type=int, help="noise draws (default 2000)")
    p.add_argument("--seed", type=int, help="noise seed (default 0)")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument("--crop", help="center-crop size applied to the image (default none)")
    _add_estimator_flags(p)
    _add_common(p)

    return parser


def _emit(rows, kind, out_path) -> None:
    if out_path:
        emit_csv(rows, out_path, kind)
    else:
        sys.stdout.write(csv_text(rows, kind))


def _cmd_denoise(s: _Settings) -> None:
    in_path = s.require("input")
    out_path = s.require("out")
    sigma = s.get("sigma", 20.0, float)
    seed = s.get("seed", None, int)
    source = DistanceSource(s.get("source", "noisy"))

    loaded = load_image(in_path)
    clean = None
    if seed is not None:
        clean = loaded
        noisy, _ = add_gaussian_noise(clean, NoiseSpec(sigma=sigma, seed=seed))
    else:
        noisy = loaded
    oracle_path = s.get("oracle_image")
    if oracle_path:
        clean = load_image(oracle_path)

    cfg = DenoiseConfig(
        d=s.require("d", float),
        sigma=sigma,
        h=s.get("h", None, float),
        patch_radius=s.get("patch_radius", 3, int),
        kernel_a=s.get("a", 2.0, float),
        selection=parse_selection(s.get("select", "all")),
        source=source,
        center=CenterPolicy(s.get("center", "include")),
        self_weight=SelfWeightPolicy(s.get("self_weight", "literal")),
        border=BorderPolicy(s.get("border", "mirror")),
    )
    oracle = clean if source is DistanceSource.ORACLE else None
    if source is DistanceSource.ORACLE and oracle is None:
        raise ValueError("--source oracle needs --oracle-image (or --seed with a clean --in)")

    uhat = denoise(noisy, cfg, u=oracle, engine=s.get("engine", None))
    save_image(uhat, out_path)
    if clean is not None:
        sys.stdout.write("metric,value\n")
        sys.stdout.write("psnr_noisy,%.12g\n" % psnr(clean, noisy))
        sys.stdout.write("psnr_denoised,%.12g\n" % psnr(clean, uhat))


def _sweep_spec(s: _Settings, default_variants: str) -> SweepSpec:
    k = s.get("topk", 80, int)
    labels = [t.strip() for t in s.get("variants", default_variants).split(",") if t.strip()]
    return SweepSpec(
        corpus_dir=s.require("corpus"),
        d_values=_parse_d_values(s.get("d_values", "1..15")),
        variants=tuple(parse_variant(lbl, k) for lbl in labels),
        sigma=s.get("sigma", 20.0, float),
        h=s.get("h", None, float),
        seed_base=s.get("seed_base", 0, int),
        output_path=s.get("out"),
        crop=s.get("crop", 128, _int_or_none),
        patch_radius=s.get("patch_radius", 3, int),
        kernel_a=s.get("a", 2.0, float),
    )


def _cmd_sweep(s: _Settings) -> None:
    spec = _sweep_spec(s, "w,w_v,w_v0,w_u,w_u0")
    rows = run_sweep(spec, engine=s.get("engine", None))
    if spec.output_path is None:
        _emit(rows, CurveRow, None)


def _cmd_decompose(s: _Settings) -> None:
    spec = _sweep_spec(s, "w_v0,w_u0")
    rows = run_decomposition_sweep(spec, engine=s.get("engine", None))
    if spec.output_path is None:
        _emit(rows, DecompositionReport, None)


def _cmd_regularity(s: _Settings) -> None:
    spec = _sweep_spec(s, "w_u0")
    rows = run_regularity(spec, k=s.get("topk", 80, int), engine=s.get("engine", None))
    if spec.output_path is None:
        _emit(rows, RegularityPoint, None)


def _cmd_check_expectation(s: _Settings) -> None:
    from .experiment import center_crop

    img = load_image(s.require("image"))
    crop = s.get("crop", None, _int_or_none)
    if crop is not None:
        img = center_crop(img, crop)
    x = _parse_coord(s.require("x"))
    y = _parse_coord(s.require("y"))
    sigma = s.get("sigma", 20.0, float)
    trials = s.get("trials", 2000, int)
    offset, std_err = expected_distance_check(
        img, x, y, sigma=sigma, trials=trials, seed=s.get("seed", 0, int),
        patch_radius=s.get("patch_radius", 3, int), kernel_a=s.get("a", 2.0, float),
    )
    row = ExpectationRow(x_row=x[0], x_col=x[1], y_row=y[0], y_col=y[1],
                         sigma=sigma, trials=trials, empirical_offset=offset,
                         std_error=std_err, expected_offset=2.0 * sigma * sigma)
    _emit([row], ExpectationRow, s.get("out"))


_COMMANDS = {
    "denoise": _cmd_denoise,
    "sweep": _cmd_sweep,
    "decompose": _cmd_decompose,
    "regularity": _cmd_regularity,
    "check-expectation": _cmd_check_expectation,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = _Settings(args)
        engine = settings.get("engine", None)
        if engine == "auto":
            engine = None
        backend.resolve_engine(engine)  # fail fast on a bad request
        backend.set_thread_count(settings.get("threads", None, int))
        _COMMANDS[args.command](settings)
    except Exception as e:  # CLI boundary: report and exit nonzero
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
