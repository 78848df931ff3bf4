"""Datasets and fitness machinery.

Covers CSV-backed and synthetic datasets, protected tree evaluation, the
RRSE error measure, objective computation for chromosomes, ordered
train/test splitting, and an infix parser so models can be read back from
text.
"""

from __future__ import annotations

import csv
import math
import random
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DataError, ExprParseError
from .genome import (
    FUNCTIONS,
    Call,
    Chromosome,
    Const,
    Expr,
    SymbolSet,
    Var,
    chromosome_size,
)
from .kernel import compile_chromosome, program_error

__all__ = [
    "Dataset",
    "ObjectiveVector",
    "load_csv",
    "rrse",
    "eval_tree",
    "objectives",
    "synth_dataset",
    "split",
    "parse_infix",
]


@dataclass(eq=False)
class Dataset:
    """A numeric table: named input columns plus one target column.

    Arrays are copied, validated (finite, consistent shapes, non-constant
    target) and frozen read-only on construction.  The target mean and its
    squared-deviation sum are fixed left-to-right folds so every error
    computed against this dataset is reproducible bit for bit.
    """

    variable_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    target_name: str = "y"
    target_mean: float = field(init=False)
    target_denom: float = field(init=False)

    def __post_init__(self):
        self.variable_names = tuple(str(n) for n in self.variable_names)
        names = self.variable_names + (self.target_name,)
        if len(set(names)) != len(names):
            raise DataError(f"duplicate column names: {', '.join(names)}")
        X = np.array(self.X, dtype=np.float64, order="C", ndmin=2)
        y = np.array(self.y, dtype=np.float64)
        if y.ndim != 1:
            raise DataError("target must be a single column")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} input rows vs {y.shape[0]} target rows")
        if X.shape[0] < 2:
            raise DataError("dataset needs at least 2 rows")
        if X.shape[1] != len(self.variable_names):
            raise DataError(
                f"{len(self.variable_names)} variable names but {X.shape[1]} columns"
            )
        if not np.isfinite(X).all() or not np.isfinite(y).all():
            raise DataError("dataset contains non-finite values")
        X.flags.writeable = False
        y.flags.writeable = False
        self.X = X
        self.y = y

        total = 0.0
        for v in y.tolist():
            total += v
        mean = total / y.shape[0]
        denom = 0.0
        for v in y.tolist():
            d = mean - v
            denom += d * d
        if denom <= 0.0:
            raise DataError(f"target {self.target_name!r} is constant")
        self.target_mean = mean
        self.target_denom = denom

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def matrix_for(self, names: Sequence[str]) -> np.ndarray:
        """Input matrix with columns reordered to match `names`."""
        missing = [n for n in names if n not in self.variable_names]
        if missing:
            raise ConfigError(f"dataset lacks variable(s): {', '.join(missing)}")
        if tuple(names) == self.variable_names:
            return self.X
        idx = [self.variable_names.index(n) for n in names]
        return np.ascontiguousarray(self.X[:, idx])


@dataclass(frozen=True)
class ObjectiveVector:
    """Both objectives are minimized; invalid individuals carry an infinite error."""

    error: float
    size: int
    valid: bool = True


def load_csv(path, target_name: str | None = None) -> Dataset:
    """Read a numeric CSV (header line, '.' decimals) into a Dataset.

    The target is the named column, or the last column when no name is given.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise DataError(f"{path}: need a header line and at least one data row")
    header = [cell.strip() for cell in rows[0]]
    if target_name is None:
        target_name = header[-1]
    if target_name not in header:
        raise DataError(f"{path}: no column named {target_name!r} in header")
    t_idx = header.index(target_name)
    variable_names = tuple(n for i, n in enumerate(header) if i != t_idx)

    X_rows: list[list[float]] = []
    y_vals: list[float] = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: line {line_no}: {len(row)} cells, header has {len(header)}")
        try:
            values = [float(cell) for cell in row]
        except ValueError as exc:
            raise DataError(f"{path}: line {line_no}: {exc}") from None
        y_vals.append(values.pop(t_idx))
        X_rows.append(values)
    return Dataset(
        variable_names=variable_names,
        X=np.asarray(X_rows, dtype=np.float64),
        y=np.asarray(y_vals, dtype=np.float64),
        target_name=target_name,
    )


def rrse(predictions: Sequence[float], targets: Sequence[float]) -> float:
    """Root relative squared error: sqrt(sum((p-y)^2) / sum((mean(y)-y)^2)).

    0 means a perfect fit; 1 means no better than predicting the target mean.
    """
    p = [float(v) for v in predictions]
    y = [float(v) for v in targets]
    if len(p) != len(y):
        raise DataError(f"length mismatch: {len(p)} predictions vs {len(y)} targets")
    if len(y) < 2:
        raise DataError("need at least 2 values")
    total = 0.0
    for v in y:
        total += v
    mean = total / len(y)
    denom = 0.0
    for v in y:
        d = mean - v
        denom += d * d
    if denom <= 0.0:
        raise DataError("targets are constant")
    num = 0.0
    for pi, yi in zip(p, y):
        r = pi - yi
        num += r * r
    return math.sqrt(num / denom)


# --- protected reference evaluation --------------------------------------

def _p_div(a: float, b: float) -> float:
    return a / b


def _p_pow(a: float, b: float) -> float:
    return math.pow(a, b)


_EVAL_FN: dict[str, Callable[..., float]] = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": _p_div,
    "pow": _p_pow,
    "exp": math.exp,
    "ln": math.log,
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "sqrt": math.sqrt,
}


def eval_tree(tree: Expr, row: Sequence[float], variable_names: Sequence[str]) -> float | None:
    """Evaluate one tree on one row; None when any intermediate is non-finite.

    This is the slow reference evaluator; the compiled program path must
    agree with it.  Domain errors (ln of non-positives, sqrt of negatives,
    division by zero, overflow) all count as invalid rather than raising.
    """
    env = dict(zip(variable_names, (float(v) for v in row)))

    def go(node: Expr) -> float | None:
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Var):
            try:
                return env[node.name]
            except KeyError:
                raise ConfigError(f"unknown variable {node.name!r}") from None
        args = []
        for a in node.args:
            v = go(a)
            if v is None:
                return None
            args.append(v)
        try:
            out = _EVAL_FN[node.fn](*args)
        except (ValueError, OverflowError, ZeroDivisionError):
            return None
        return out if math.isfinite(out) else None

    return go(tree)


def objectives(chrom: Chromosome, symbol_set: SymbolSet, data: Dataset) -> ObjectiveVector:
    """Error and expressed size of a chromosome on a dataset.

    A single invalid row poisons the whole individual: error becomes the
    infinite sentinel and valid drops to False.
    """
    program = compile_chromosome(chrom, symbol_set)
    X = data.matrix_for(symbol_set.variables)
    error, valid = program_error(program, X, data.y, data.target_denom)
    return ObjectiveVector(error=error, size=chromosome_size(chrom, symbol_set), valid=valid)


# --- synthetic problems ---------------------------------------------------

def _tp1_target(a, b, c, d, e):
    return math.cos(math.sqrt(math.sin(c))) * math.cos(b) * math.sin(a) + math.tan(d - e)


def _tp2_target(a, b, c, d, e):
    return math.sin(a) * (math.cos(b) / math.sqrt(10.0 ** c) + math.tan(d - a))


def synth_dataset(problem: str, n_rows: int, seed: int) -> Dataset:
    """Generate one of the stock synthetic problems.

    tp1/tp2 draw five inputs a..e uniformly from [0,1], which keeps every
    tan, sqrt and division away from singularities.  dew draws temperature
    in [0,35] degC and relative humidity in [50,100] % and computes the dew
    point with the linear rule Td = T - (100-RH)/5, the standard
    approximation for moist air.
    """
    if n_rows < 2:
        raise DataError("need at least 2 rows")
    rng = random.Random(seed)
    if problem in ("tp1", "tp2"):
        target = _tp1_target if problem == "tp1" else _tp2_target
        X_rows = []
        y_vals = []
        for _ in range(n_rows):
            row = [rng.random() for _ in range(5)]
            X_rows.append(row)
            y_vals.append(target(*row))
        return Dataset(("a", "b", "c", "d", "e"), np.asarray(X_rows), np.asarray(y_vals), "y")
    if problem == "dew":
        X_rows = []
        y_vals = []
        for _ in range(n_rows):
            t = rng.uniform(0.0, 35.0)
            rh = rng.uniform(50.0, 100.0)
            X_rows.append([t, rh])
            y_vals.append(t - (100.0 - rh) / 5.0)
        return Dataset(("d0", "d1"), np.asarray(X_rows), np.asarray(y_vals), "dv")
    raise ConfigError(f"unknown problem {problem!r} (use tp1, tp2 or dew)")


def split(data: Dataset, train_fraction: float) -> tuple[Dataset, Dataset]:
    """Order-preserving prefix/suffix split; train gets floor(fraction * n) rows."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train fraction must be in (0, 1), got {train_fraction}")
    k = math.floor(train_fraction * data.n_rows)
    if k < 2 or data.n_rows - k < 2:
        raise DataError(
            f"split {k}/{data.n_rows - k} leaves a part with fewer than 2 rows"
        )
    train = Dataset(data.variable_names, data.X[:k], data.y[:k], data.target_name)
    test = Dataset(data.variable_names, data.X[k:], data.y[k:], data.target_name)
    return train, test


# --- infix parsing --------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(), pos))
        pos = m.end()
    return tokens


class _Parser:
    """Recursive-descent parser: + - below * /, then right-associative ^,
    then unary minus (numbers only) and function calls."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ExprParseError("unexpected end of expression", len(self.text))
        self.i += 1
        return tok

    def expect(self, op: str):
        tok = self.next()
        if tok[0] != "op" or tok[1] != op:
            raise ExprParseError(f"expected {op!r}, found {tok[1]!r}", tok[2])

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[0] == "op" and tok[1] in ops

    def parse(self) -> Expr:
        tree = self.sum_()
        if self.peek() is not None:
            tok = self.peek()
            raise ExprParseError(f"unexpected {tok[1]!r} after expression", tok[2])
        return tree

    def sum_(self) -> Expr:
        node = self.product()
        while self.at_op("+", "-"):
            op = self.next()[1]
            rhs = self.product()
            node = Call("add" if op == "+" else "sub", (node, rhs))
        return node

    def product(self) -> Expr:
        node = self.power()
        while self.at_op("*", "/"):
            op = self.next()[1]
            rhs = self.power()
            node = Call("mul" if op == "*" else "div", (node, rhs))
        return node

    def power(self) -> Expr:
        node = self.atom()
        if self.at_op("^"):
            self.next()
            return Call("pow", (node, self.power()))
        return node

    def atom(self) -> Expr:
        tok = self.next()
        kind, text, pos = tok
        if kind == "op" and text == "-":
            inner = self.atom()
            if not isinstance(inner, Const):
                raise ExprParseError("unary minus is only supported on numbers", pos)
            return Const(-inner.value)
        if kind == "op" and text == "(":
            node = self.sum_()
            self.expect(")")
            return node
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if self.at_op("("):
                return self.call(text, pos)
            return Var(text)
        raise ExprParseError(f"unexpected {text!r}", pos)

    def call(self, name: str, pos: int) -> Expr:
        fn = FUNCTIONS.get(name.lower())
        if fn is None:
            raise ExprParseError(f"unknown function {name!r}", pos)
        self.expect("(")
        args = [self.sum_()]
        while self.at_op(","):
            self.next()
            args.append(self.sum_())
        self.expect(")")
        if len(args) != fn.arity:
            raise ExprParseError(
                f"{fn.name} takes {fn.arity} argument(s), got {len(args)}", pos
            )
        return Call(fn.name, tuple(args))


def parse_infix(text: str) -> Expr:
    """Parse expression text into a tree.

    Standard precedence: function calls and parentheses bind tightest, then
    '^' (right-associative), then '*' and '/', then '+' and '-'.  Function
    names match case-insensitively; variables keep their spelling.
    """
    if not text or not text.strip():
        raise ExprParseError("empty expression", 0)
    return _Parser(text).parse()
