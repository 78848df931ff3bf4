"""Flatten expression trees into postfix programs for the stack evaluators.

A program is a pair of arrays: an (L, 2) int32 code array of (opcode,
operand) rows and a float64 constant pool.  Postorder emission means a
simple push/pop stack machine evaluates it; the maximum stack depth is
recorded so evaluators can allocate once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..genome import Chromosome, Const, Expr, SymbolSet, Var, decoded_trees
from .opcodes import OP_CONST, OP_OF_FUNCTION, OP_VAR

__all__ = ["Program", "compile_tree", "compile_chromosome"]


@dataclass(frozen=True)
class Program:
    """A postfix program over named input columns."""

    code: np.ndarray       # int32, shape (L, 2): opcode, operand
    consts: np.ndarray     # float64 constant pool
    max_stack: int
    variables: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.code)


def _emit(tree: Expr, var_index: dict[str, int], code: list[tuple[int, int]],
          consts: list[float]) -> int:
    """Append postfix rows for `tree`; returns the stack depth it needs."""
    if isinstance(tree, Var):
        try:
            code.append((OP_VAR, var_index[tree.name]))
        except KeyError:
            raise ConfigError(f"unknown variable {tree.name!r}") from None
        return 1
    if isinstance(tree, Const):
        code.append((OP_CONST, len(consts)))
        consts.append(float(tree.value))
        return 1
    op = OP_OF_FUNCTION[tree.fn]
    if len(tree.args) == 1:
        depth = _emit(tree.args[0], var_index, code, consts)
        code.append((op, 0))
        return depth
    left, right = tree.args
    dl = _emit(left, var_index, code, consts)
    # right subtree evaluates on top of the left result already on the stack
    dr = _emit(right, var_index, code, consts) + 1
    code.append((op, 0))
    return max(dl, dr)


def _finish(code: list[tuple[int, int]], consts: list[float], depth: int,
            variables: tuple[str, ...]) -> Program:
    code_arr = np.asarray(code, dtype=np.int32).reshape(len(code), 2)
    const_arr = np.asarray(consts, dtype=np.float64)
    return Program(code=code_arr, consts=const_arr, max_stack=depth, variables=variables)


def compile_tree(tree: Expr, variables: tuple[str, ...]) -> Program:
    """Compile a single expression tree against an ordered variable list."""
    var_index = {name: i for i, name in enumerate(variables)}
    code: list[tuple[int, int]] = []
    consts: list[float] = []
    depth = _emit(tree, var_index, code, consts)
    return _finish(code, consts, depth, variables)


def compile_chromosome(chrom: Chromosome, symbol_set: SymbolSet) -> Program:
    """Compile a whole chromosome: gene programs chained by the linking op.

    Genes are linked left to right, so gene k's value lands on a stack that
    already holds the running link result; one extra stack slot covers that.
    """
    variables = symbol_set.variables
    var_index = {name: i for i, name in enumerate(variables)}
    link_op = OP_OF_FUNCTION[chrom.linking.name]
    code: list[tuple[int, int]] = []
    consts: list[float] = []
    depth = 0
    for k, tree in enumerate(decoded_trees(chrom, symbol_set)):
        d = _emit(tree, var_index, code, consts)
        depth = max(depth, d + (1 if k > 0 else 0))
        if k > 0:
            code.append((link_op, 0))
    return _finish(code, consts, depth, variables)
