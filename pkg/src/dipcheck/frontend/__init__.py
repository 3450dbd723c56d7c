"""Program text frontend: parsing, desugaring, static checks, spaces."""

from .ast import (
    Program,
    Diagnostic,
    AdjacencySpec,
    ScoreTable,
    ChooseDef,
    SpaceTooLarge,
    enumerate_valuations,
    adjacent_pairs,
    BOOL,
    DOM,
    INT,
    REAL,
)
from .parser import parse_program, parse_raw, desugar, ParseError, RawProgram
from .checks import static_check
from .pretty import pretty

__all__ = [
    "Program",
    "Diagnostic",
    "AdjacencySpec",
    "ScoreTable",
    "ChooseDef",
    "SpaceTooLarge",
    "enumerate_valuations",
    "adjacent_pairs",
    "BOOL",
    "DOM",
    "INT",
    "REAL",
    "parse_program",
    "parse_raw",
    "desugar",
    "ParseError",
    "RawProgram",
    "static_check",
    "pretty",
]
