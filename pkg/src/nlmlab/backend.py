"""Engine backend selection: numba-jitted kernels with a pure-numpy fallback.

Set ``NLMLAB_NO_NUMBA=1`` to force the numpy path; it is also used
automatically when numba cannot be imported. Both backends implement the
same per-pixel contract and are cross-checked in the test suite.
"""

from __future__ import annotations

import os

DISABLE_ENV = "NLMLAB_NO_NUMBA"

_numba_ok: bool | None = None


def numba_available() -> bool:
    global _numba_ok
    if _numba_ok is None:
        try:
            import numba  # noqa: F401

            _numba_ok = True
        except ImportError:
            _numba_ok = False
    return _numba_ok


def default_engine() -> str:
    """'numba' unless disabled by env flag or unavailable, else 'numpy'."""
    if os.environ.get(DISABLE_ENV, "").strip() not in ("", "0"):
        return "numpy"
    return "numba" if numba_available() else "numpy"


def resolve_engine(engine: str | None) -> str:
    """Normalize an engine request ('numba' | 'numpy' | 'auto' | None)."""
    if engine is None or engine == "auto":
        return default_engine()
    if engine not in ("numba", "numpy"):
        raise ValueError(f"unknown engine {engine!r} (use numba | numpy | auto)")
    if engine == "numba" and not numba_available():
        raise RuntimeError("numba engine requested but numba is not importable")
    return engine


def set_thread_count(n: int | None) -> None:
    """Cap numba's worker threads; no-op for the numpy backend."""
    if n is None:
        return
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    if numba_available():
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
