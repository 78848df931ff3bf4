"""Opcode numbering shared by the program compiler and both evaluators.

The compiled evaluator duplicates these values as C literals, so the
numbering here is frozen; append new ops, never renumber.
"""

OP_VAR = 0    # push X[row, operand]
OP_CONST = 1  # push consts[operand]
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

BINARY_OPS = (OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW)
UNARY_OPS = (OP_EXP, OP_LN, OP_SIN, OP_COS, OP_TAN, OP_SQRT)

OP_OF_FUNCTION = {
    "add": OP_ADD,
    "sub": OP_SUB,
    "mul": OP_MUL,
    "div": OP_DIV,
    "pow": OP_POW,
    "exp": OP_EXP,
    "ln": OP_LN,
    "sin": OP_SIN,
    "cos": OP_COS,
    "tan": OP_TAN,
    "sqrt": OP_SQRT,
}
