# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stack-machine evaluators for postfix programs.

Opcode numbers are duplicated from opcodes.py as C constants below; the two
files must stay in sync.  Each function application is followed by an
isfinite check so domain errors and overflow poison the result instead of
propagating garbage.  The squared-error accumulator runs strictly left to
right over rows, matching the fallback evaluator bit for bit.
"""

from libc.math cimport INFINITY, NAN, cos, exp, isfinite, log, pow, sin, sqrt, tan
from libc.stdlib cimport free, malloc

cdef enum:
    OP_VAR = 0
    OP_CONST = 1
    OP_ADD = 2
    OP_SUB = 3
    OP_MUL = 4
    OP_DIV = 5
    OP_POW = 6
    OP_EXP = 7
    OP_LN = 8
    OP_SIN = 9
    OP_COS = 10
    OP_TAN = 11
    OP_SQRT = 12


cdef inline double _apply1(int op, double a) noexcept nogil:
    if op == OP_EXP:
        return exp(a)
    if op == OP_LN:
        return log(a)
    if op == OP_SIN:
        return sin(a)
    if op == OP_COS:
        return cos(a)
    if op == OP_TAN:
        return tan(a)
    return sqrt(a)


cdef inline double _apply2(int op, double a, double b) noexcept nogil:
    if op == OP_ADD:
        return a + b
    if op == OP_SUB:
        return a - b
    if op == OP_MUL:
        return a * b
    if op == OP_DIV:
        return a / b
    return pow(a, b)


cdef inline int _eval_row(const int[:, ::1] code, const double[::1] consts,
                          const double[:, ::1] X, Py_ssize_t row,
                          double* stack, double* result) noexcept nogil:
    """Evaluate one row; returns 1 and stores the value, or 0 if invalid."""
    cdef Py_ssize_t k, sp = 0
    cdef int op
    cdef double v
    for k in range(code.shape[0]):
        op = code[k, 0]
        if op == OP_VAR:
            stack[sp] = X[row, code[k, 1]]
            sp += 1
        elif op == OP_CONST:
            stack[sp] = consts[code[k, 1]]
            sp += 1
        elif op <= OP_POW:
            sp -= 1
            v = _apply2(op, stack[sp - 1], stack[sp])
            if not isfinite(v):
                return 0
            stack[sp - 1] = v
        else:
            v = _apply1(op, stack[sp - 1])
            if not isfinite(v):
                return 0
            stack[sp - 1] = v
    result[0] = stack[0]
    return 1


def run_program(const int[:, ::1] code, const double[::1] consts,
                const double[:, ::1] X, int max_stack, double[::1] out):
    """Fill `out` with per-row predictions; invalid rows get nan.

    Returns the number of invalid rows.
    """
    cdef Py_ssize_t i, n = X.shape[0]
    cdef int n_invalid = 0
    cdef double value
    cdef double* stack = <double*> malloc(max_stack * sizeof(double))
    if stack == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                if _eval_row(code, consts, X, i, stack, &value):
                    out[i] = value
                else:
                    out[i] = NAN
                    n_invalid += 1
    finally:
        free(stack)
    return n_invalid


def program_error(const int[:, ::1] code, const double[::1] consts,
                  const double[:, ::1] X, const double[::1] y,
                  double denom, int max_stack):
    """Root relative squared error against `y`; returns (error, valid).

    `denom` is the precomputed sum of squared deviations of `y` from its
    mean.  Any non-finite intermediate on any row yields (inf, False).
    """
    cdef Py_ssize_t i, n = X.shape[0]
    cdef int ok = 1
    cdef double value, r, sse = 0.0, err
    cdef double* stack = <double*> malloc(max_stack * sizeof(double))
    if stack == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                if not _eval_row(code, consts, X, i, stack, &value):
                    ok = 0
                    break
                r = value - y[i]
                sse += r * r
    finally:
        free(stack)
    if not ok or denom <= 0.0:
        return INFINITY, False
    err = sqrt(sse / denom)
    if not isfinite(err):
        return INFINITY, False
    return err, True
