"""NumPy evaluators used when the compiled kernel is unavailable.

Semantics mirror the compiled kernel: every function application is followed
by a finiteness check (IEEE inf/nan propagate instead of raising), a single
non-finite intermediate anywhere in the dataset poisons the whole error, and
the squared-error accumulator runs left to right over rows so both backends
produce the same bits for the same predictions.
"""

from __future__ import annotations

import math

import numpy as np

from .opcodes import (
    OP_ADD,
    OP_CONST,
    OP_DIV,
    OP_EXP,
    OP_LN,
    OP_MUL,
    OP_POW,
    OP_SIN,
    OP_COS,
    OP_SQRT,
    OP_SUB,
    OP_TAN,
    OP_VAR,
)

_BINARY = {
    OP_ADD: np.add,
    OP_SUB: np.subtract,
    OP_MUL: np.multiply,
    OP_DIV: np.divide,
    OP_POW: np.power,
}

_UNARY = {
    OP_EXP: np.exp,
    OP_LN: np.log,
    OP_SIN: np.sin,
    OP_COS: np.cos,
    OP_TAN: np.tan,
    OP_SQRT: np.sqrt,
}


def _run(code, consts, X, max_stack):
    """Evaluate every row at once; returns (final values, finite-row mask)."""
    n = X.shape[0]
    stack = np.empty((max_stack, n), dtype=np.float64)
    mask = np.ones(n, dtype=bool)
    finite = np.empty(n, dtype=bool)
    sp = 0
    with np.errstate(all="ignore"):
        for op, arg in code.tolist():
            if op == OP_VAR:
                np.copyto(stack[sp], X[:, arg])
                sp += 1
            elif op == OP_CONST:
                stack[sp] = consts[arg]
                sp += 1
            elif op in _BINARY:
                sp -= 1
                _BINARY[op](stack[sp - 1], stack[sp], out=stack[sp - 1])
                np.isfinite(stack[sp - 1], out=finite)
                mask &= finite
            else:
                _UNARY[op](stack[sp - 1], out=stack[sp - 1])
                np.isfinite(stack[sp - 1], out=finite)
                mask &= finite
    return stack[0], mask


def run_program(code, consts, X, max_stack, out):
    """Fill `out` with per-row predictions; invalid rows get nan.

    Returns the number of invalid rows.
    """
    values, mask = _run(code, consts, X, max_stack)
    np.copyto(out, values)
    out[~mask] = math.nan
    return int(np.count_nonzero(~mask))


def program_error(code, consts, X, y, denom, max_stack):
    """Root relative squared error of the program against target `y`.

    `denom` is the precomputed sum of squared deviations of `y` from its
    mean.  Returns (error, valid); any non-finite intermediate on any row
    yields (inf, False).
    """
    values, mask = _run(code, consts, X, max_stack)
    if not mask.all():
        return math.inf, False
    sse = 0.0
    for r in (values - y).tolist():
        sse += r * r
    err = math.sqrt(sse / denom) if denom > 0.0 else math.inf
    if not math.isfinite(err):
        return math.inf, False
    return err, True
