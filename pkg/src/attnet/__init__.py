"""Media and public attention networks between countries.

Stitching of windowed search volumes, multiplex network construction,
backbone extraction, motif and community analysis, Granger tests and the
small statistics kernel they share.
"""
from __future__ import annotations

from .errors import AttnetError

__version__ = "0.1.0"

__all__ = ["AttnetError", "__version__"]
