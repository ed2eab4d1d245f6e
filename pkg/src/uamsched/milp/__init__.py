"""Integer linear model IR, LP emission and external solver backends."""
from .backend import (BACKEND_ERROR, INFEASIBLE, OPTIMAL, TIMEOUT, BackendConfig,
                      BackendError, SolveOutcome, default_backend, preset, solve)
from .linear import (BINARY, EQ, GE, INTEGER, LE, LinearModel, LinExpr, ModelError,
                     add_abs_diff_lower_bound, add_abs_value_var, lsum)
from .lpformat import write_lp

__all__ = [
    "BACKEND_ERROR", "INFEASIBLE", "OPTIMAL", "TIMEOUT", "BackendConfig", "BackendError",
    "SolveOutcome", "default_backend", "preset", "solve", "BINARY", "EQ", "GE", "INTEGER",
    "LE", "LinearModel", "LinExpr", "ModelError", "add_abs_diff_lower_bound",
    "add_abs_value_var", "lsum", "write_lp",
]
