"""Paper-style figure rendering for risklqg trajectory artifacts."""

from .render import (
    MissingColumn,
    PlotSpec,
    RenderError,
    SchemaMismatch,
    Trajectory,
    load_trajectory,
    render,
    spec_from_run,
)

__version__ = "0.1.0"
__all__ = [
    "MissingColumn",
    "PlotSpec",
    "RenderError",
    "SchemaMismatch",
    "Trajectory",
    "load_trajectory",
    "render",
    "spec_from_run",
]
