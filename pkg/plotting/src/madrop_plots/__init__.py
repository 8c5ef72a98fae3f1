"""Figure rendering for madrop sweep/validate CSV output."""

from .figures import FIGURE_KINDS, render
from .io import SchemaError, SweepRow, read_sweep

__all__ = ["FIGURE_KINDS", "SchemaError", "SweepRow", "read_sweep", "render"]
__version__ = "0.1.0"
