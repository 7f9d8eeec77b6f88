"""Numerical toolkit for rough differential equations on discrete grids."""

from .rough_core import (
    ControlledGridPath,
    GridPath,
    LevyIncrements,
    RoughPathGrid,
    Tolerances,
    chen_extend,
    chen_residual,
    chen_table,
    reverse_rough_path,
)

__version__ = "0.1.0"

__all__ = [
    "ControlledGridPath",
    "GridPath",
    "LevyIncrements",
    "RoughPathGrid",
    "Tolerances",
    "chen_extend",
    "chen_residual",
    "chen_table",
    "reverse_rough_path",
]
