"""Expression DSL, symbolic partials, vertical prolongations and frame changes."""

from .calculus import (
    diff,
    gradient,
    hessian,
    split_H1_H2,
    to_deviation_coords,
    vertical_prolong,
    vertical_prolong2,
)
from .expr import SYMBOLIC_TOL, Coord, Expr, Func, Param, atom_from_name, const, coord, symbols
from .parser import ParseError, parse
from .system import (
    FrameChange,
    FrameError,
    HamiltonianSystem,
    compile_matrix,
    compile_scalar,
    compile_vector,
    frame_transform,
    load_system,
    parse_system,
)

__all__ = [
    "Coord",
    "Expr",
    "FrameChange",
    "FrameError",
    "Func",
    "HamiltonianSystem",
    "Param",
    "ParseError",
    "SYMBOLIC_TOL",
    "atom_from_name",
    "compile_matrix",
    "compile_scalar",
    "compile_vector",
    "const",
    "coord",
    "diff",
    "frame_transform",
    "gradient",
    "hessian",
    "load_system",
    "parse",
    "parse_system",
    "split_H1_H2",
    "symbols",
    "to_deviation_coords",
    "vertical_prolong",
    "vertical_prolong2",
]
