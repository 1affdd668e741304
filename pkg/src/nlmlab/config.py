"""Estimator configuration: selection rules, variant axes, and DenoiseConfig."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .image import BorderPolicy


class DistanceSource(enum.Enum):
    """Which image drives patch selection: the noisy input or the clean
    original (oracle selection, an analysis device)."""

    NOISY = "noisy"
    ORACLE = "oracle"


class CenterPolicy(enum.Enum):
    """Whether patch distances use the central pixel of each patch."""

    INCLUDE = "include"
    EXCLUDE = "exclude"


class SelfWeightPolicy(enum.Enum):
    """Weight given to the pixel's own patch: its literal affinity (1, the
    maximum) or the largest affinity among the other selected patches."""

    LITERAL = "literal"
    MAX_OTHER = "max-other"


@dataclass(frozen=True)
class SelectAll:
    """Keep the whole search window."""


@dataclass(frozen=True)
class SelectTopK:
    """Keep the k window coordinates with the smallest patch distances
    (ties broken by row-major order)."""

    k: int = 80

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"top-k size must be >= 1, got {self.k}")


@dataclass(frozen=True)
class SelectThreshold:
    """Keep window coordinates whose raw affinity is >= tau."""

    tau: float

    def __post_init__(self):
        if not (0.0 < self.tau <= 1.0):
            raise ValueError(f"threshold tau must be in (0, 1], got {self.tau}")


SelectionRule = SelectAll | SelectTopK | SelectThreshold


def parse_selection(text: str) -> SelectionRule:
    """Parse 'all', 'topk:K', or 'thresh:T'."""
    text = text.strip().lower()
    if text == "all":
        return SelectAll()
    if text.startswith("topk"):
        _, _, arg = text.partition(":")
        return SelectTopK(int(arg)) if arg else SelectTopK()
    if text.startswith("thresh"):
        _, _, arg = text.partition(":")
        if not arg:
            raise ValueError("thresh selection needs a value, e.g. thresh:0.5")
        return SelectThreshold(float(arg))
    raise ValueError(f"unknown selection rule {text!r} (use all | topk:K | thresh:T)")


def selection_text(rule: SelectionRule) -> str:
    if isinstance(rule, SelectAll):
        return "all"
    if isinstance(rule, SelectTopK):
        return f"topk:{rule.k}"
    return f"thresh:{rule.tau:g}"


@dataclass(frozen=True)
class DenoiseConfig:
    """All estimator parameters for one denoising run.

    `h` defaults to `sigma` when left unset. `d` is the search window
    radius; the window is the closed disc of Euclidean radius d.
    """

    d: float
    sigma: float = 20.0
    h: float | None = None
    patch_radius: int = 3
    kernel_a: float = 2.0
    selection: SelectionRule = field(default_factory=SelectAll)
    source: DistanceSource = DistanceSource.NOISY
    center: CenterPolicy = CenterPolicy.INCLUDE
    self_weight: SelfWeightPolicy = SelfWeightPolicy.LITERAL
    border: BorderPolicy = BorderPolicy.MIRROR

    def __post_init__(self):
        if self.d < 0:
            raise ValueError(f"window radius d must be >= 0, got {self.d}")
        if self.patch_radius < 1:
            raise ValueError(f"patch radius must be >= 1, got {self.patch_radius}")
        if not (self.kernel_a > 0.0):
            raise ValueError(f"kernel std a must be positive or inf, got {self.kernel_a}")
        if not (self.bandwidth > 0.0):
            raise ValueError(f"filtering parameter h must be > 0, got {self.bandwidth}")

    @property
    def bandwidth(self) -> float:
        """Effective filtering parameter: h if set, else sigma."""
        return self.sigma if self.h is None else self.h

    @property
    def exclude_center(self) -> bool:
        return self.center is CenterPolicy.EXCLUDE

    def with_d(self, d: float) -> "DenoiseConfig":
        return replace(self, d=d)


# ---------------------------------------------------------------------------
# Canonical variants: the five (source, center, selection) combinations used
# throughout the experiments, with their fixed CSV labels.


@dataclass(frozen=True)
class Variant:
    """One point on the variant lattice, with its fixed label."""

    source: DistanceSource
    center: CenterPolicy
    selection: SelectionRule

    @property
    def label(self) -> str:
        if isinstance(self.selection, SelectAll):
            base = "w"
            if self.source is DistanceSource.ORACLE or self.center is CenterPolicy.EXCLUDE:
                base = f"w[{self.source.value},{self.center.value},all]"
            return base
        src = "v" if self.source is DistanceSource.NOISY else "u"
        tail = "0" if self.center is CenterPolicy.EXCLUDE else ""
        if isinstance(self.selection, SelectTopK):
            return f"w_{src}{tail}"
        return f"w_{src}{tail}[{selection_text(self.selection)}]"

    def config(self, d: float, sigma: float = 20.0, h: float | None = None,
               patch_radius: int = 3, kernel_a: float = 2.0,
               self_weight: SelfWeightPolicy = SelfWeightPolicy.LITERAL,
               border: BorderPolicy = BorderPolicy.MIRROR) -> DenoiseConfig:
        return DenoiseConfig(
            d=d, sigma=sigma, h=h, patch_radius=patch_radius, kernel_a=kernel_a,
            selection=self.selection, source=self.source, center=self.center,
            self_weight=self_weight, border=border,
        )


def parse_variant(label: str, k: int = 80) -> Variant:
    """Map a label to its variant: w, w_v, w_v0, w_u, w_u0 (top-k size k)."""
    table = {
        "w": Variant(DistanceSource.NOISY, CenterPolicy.INCLUDE, SelectAll()),
        "w_v": Variant(DistanceSource.NOISY, CenterPolicy.INCLUDE, SelectTopK(k)),
        "w_v0": Variant(DistanceSource.NOISY, CenterPolicy.EXCLUDE, SelectTopK(k)),
        "w_u": Variant(DistanceSource.ORACLE, CenterPolicy.INCLUDE, SelectTopK(k)),
        "w_u0": Variant(DistanceSource.ORACLE, CenterPolicy.EXCLUDE, SelectTopK(k)),
    }
    key = label.strip()
    if key not in table:
        raise ValueError(f"unknown variant label {label!r} (expected one of {sorted(table)})")
    return table[key]


def canonical_variants(k: int = 80) -> tuple[Variant, ...]:
    """The five standard variants in sweep order."""
    return tuple(parse_variant(lbl, k) for lbl in ("w", "w_v", "w_v0", "w_u", "w_u0"))
