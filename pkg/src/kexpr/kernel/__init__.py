"""Program evaluation backends.

The compiled extension is preferred; the NumPy fallback is selected when it
is missing.  KEXPR_BACKEND overrides the choice: 'compiled' demands the
extension (import fails loudly without it), 'python' forces the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import ConfigError
from .compile import Program, compile_chromosome, compile_tree

__all__ = [
    "BACKEND",
    "Program",
    "compile_chromosome",
    "compile_tree",
    "program_error",
    "run_program",
]


def _pick_backend():
    requested = os.environ.get("KEXPR_BACKEND", "auto").strip().lower()
    if requested in ("python", "fallback"):
        from . import pyfallback

        return pyfallback, "python"
    if requested in ("auto", "", "compiled"):
        try:
            from . import _speedups

            return _speedups, "compiled"
        except ImportError:
            if requested == "compiled":
                raise
            from . import pyfallback

            return pyfallback, "python"
    raise ConfigError(
        f"KEXPR_BACKEND={requested!r} not recognized (use 'auto', 'compiled' or 'python')"
    )


_impl, BACKEND = _pick_backend()


def run_program(program: Program, X: np.ndarray, out: np.ndarray | None = None):
    """Evaluate a program over the rows of X.

    Returns (predictions, n_invalid); invalid rows hold nan.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if out is None:
        out = np.empty(X.shape[0], dtype=np.float64)
    n_invalid = _impl.run_program(program.code, program.consts, X, program.max_stack, out)
    return out, n_invalid


def program_error(program: Program, X: np.ndarray, y: np.ndarray, denom: float):
    """RRSE of a program against y, with the target's squared deviation sum
    passed in as `denom`.  Returns (error, valid).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return _impl.program_error(program.code, program.consts, X, y, denom, program.max_stack)
