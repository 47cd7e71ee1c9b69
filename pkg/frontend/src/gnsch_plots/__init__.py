"""Figure generation for gnsch simulation outputs."""

from .figures import (KINDS, FigureSpec, PlotInputError, build_figure, plot,
                      read_csv)

__version__ = "0.1.0"

__all__ = ["KINDS", "FigureSpec", "PlotInputError", "build_figure", "plot", "read_csv"]
