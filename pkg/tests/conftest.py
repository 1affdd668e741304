import numpy as np
import pytest

from nlmlab import save_image

try:
    import skimage.data as _skd
except ImportError:  # pragma: no cover
    _skd = None

# Desk-scale natural photographs used by the trend tests: central 128x128
# crops of the scikit-image sample set, written as PGM so everything flows
# through the package's own I/O.
DESK_NAMES = ("astronaut", "camera", "cat", "coffee", "coins", "moon")


def _luma(rgb: np.ndarray) -> np.ndarray:
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def desk_image(name: str, size: int = 128) -> np.ndarray:
    if _skd is None:
        pytest.skip("scikit-image sample images unavailable")
    raw = getattr(_skd, name)().astype(np.float64)
    if raw.ndim == 3:
        raw = _luma(raw)
    h, w = raw.shape
    r0, c0 = (h - size) // 2, (w - size) // 2
    return raw[r0 : r0 + size, c0 : c0 + size].copy()


@pytest.fixture(scope="session")
def desk_corpus_dir(tmp_path_factory):
    """Directory of the six desk images as 128x128 PGMs."""
    root = tmp_path_factory.mktemp("desk_corpus")
    for name in DESK_NAMES:
        save_image(desk_image(name), root / f"{name}.pgm")
    return root


@pytest.fixture(scope="session")
def moon128():
    return desk_image("moon")


@pytest.fixture(scope="session")
def camera128():
    return desk_image("camera")
