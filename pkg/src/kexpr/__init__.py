"""Gene expression programming for symbolic regression.

Evolves Karva-encoded multigene chromosomes against tabular data, either
with a plain single-objective engine or with a Pareto engine (NSGA-II or
SPEA2) that trades prediction error against expressed model size.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, ExprParseError, KexprError

__all__ = [
    "__version__",
    "KexprError",
    "ConfigError",
    "DataError",
    "ExprParseError",
]
