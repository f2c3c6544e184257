"""Delay-embedding (HAVOK) modeling toolkit for clustered time-series datasets."""

__version__ = "0.1.0"

from havokts._backend import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
