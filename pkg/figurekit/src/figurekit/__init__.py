"""Figure regeneration for forkbound scenario CSVs."""

from .render import EmptyPlotError, MissingColumnError, RenderError, render
from .spec import FigureSpec, FigureSpecError, load_spec

__version__ = "0.1.0"
