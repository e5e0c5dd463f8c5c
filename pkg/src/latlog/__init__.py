"""Clause solving over finite lattices.

Parse stratified clause programs whose relations carry values from a
pluggable complete lattice, compute their unique least model with a
continuation-passing engine that only re-evaluates consequences of new
information, and cross-check against slow reference semantics.  Ships
sign and interval analyses generated from program graphs.
"""

from .ast import (Apply, Assert, ClauseAnd, Const, ExistsX, ExistsY, Fact,
                  FnApp, ForallX, ForallY, Imply, LitConst, NegQuery, PreAnd,
                  PreOr, Program, Query, Repr, TrueClause, Var, YVar,
                  check_well_formed, compute_ranks, reorder_preconditions,
                  validate)
from .errors import (LatlogError, LatticeError, MonotonicityError,
                     OracleSizeError, ParseError, RegistryError,
                     SolverInvariantError, StratificationError,
                     UnsupportedInstanceError, ValidationError)
from .lattices import (EMPTY_INTERVAL, FULL_INTERVAL, FunctionRegistry,
                       IntervalValue, Lattice, interval, interval_arithmetic,
                       interval_join, interval_lattice, interval_leq,
                       interval_meet, interval_inf, interval_sup,
                       powerset_lattice, sign_lattice, sign_transfer,
                       standard_registry)
from .parser import parse_clauses, parse_fact, pretty
from .solver import Env, SolveResult, solve, unify, unify_lattice, unify_tuple
from .randgen import random_program

__version__ = "0.1.0"

__all__ = [
    "Apply", "Assert", "ClauseAnd", "Const", "ExistsX", "ExistsY", "Fact",
    "FnApp", "ForallX", "ForallY", "Imply", "LitConst", "NegQuery", "PreAnd",
    "PreOr", "Program", "Query", "Repr", "TrueClause", "Var", "YVar",
    "check_well_formed", "compute_ranks", "reorder_preconditions", "validate",
    "LatlogError", "LatticeError", "MonotonicityError", "OracleSizeError",
    "ParseError", "RegistryError", "SolverInvariantError",
    "StratificationError", "UnsupportedInstanceError", "ValidationError",
    "EMPTY_INTERVAL", "FULL_INTERVAL", "FunctionRegistry", "IntervalValue",
    "Lattice", "interval", "interval_arithmetic", "interval_join",
    "interval_lattice", "interval_leq", "interval_meet", "interval_inf",
    "interval_sup", "powerset_lattice", "sign_lattice", "sign_transfer",
    "standard_registry",
    "parse_clauses", "parse_fact", "pretty",
    "Env", "SolveResult", "solve", "unify", "unify_lattice", "unify_tuple",
    "random_program",
]
