"""Karva-notation genomes: gene layout, chromosomes, decoding and printing.

A gene is a fixed-length string of symbols split into a head (functions and
terminals) and a tail (terminals only).  With head length h and maximum
function arity a, a tail of length t = h*(a-1) + 1 guarantees that the
breadth-first decode below always closes before running off the end, no
matter what the head contains.  Only the prefix consumed by the decode (the
open reading frame) is expressed; trailing symbols are silent carriers of
genetic material.

Constant terminals C0..C{m-1} resolve to per-gene real values.  When random
numerical constants are enabled, genes also carry a Dc array of constant-slot
indices that the Dc-domain operators permute.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Union

from .errors import ConfigError

__all__ = [
    "FunctionSymbol",
    "SymbolSet",
    "GeneLayout",
    "Gene",
    "Chromosome",
    "Call",
    "Var",
    "Const",
    "Expr",
    "FUNCTIONS",
    "FUNCTION_SETS",
    "function_set",
    "layout_of",
    "decode",
    "expressed_length",
    "tree_size",
    "chromosome_size",
    "render",
    "render_tree_infix",
    "validate_gene",
    "validate_chromosome",
]


@dataclass(frozen=True)
class FunctionSymbol:
    """A named function with a fixed arity, a printout symbol and a sampling weight."""

    name: str
    arity: int
    symbol: str
    weight: int = 1

    def __post_init__(self):
        if self.arity < 1:
            raise ConfigError(f"function {self.name!r}: arity must be >= 1")
        if self.weight < 1:
            raise ConfigError(f"function {self.name!r}: weight must be >= 1")


FUNCTIONS: dict[str, FunctionSymbol] = {
    f.name: f
    for f in (
        FunctionSymbol("add", 2, "+"),
        FunctionSymbol("sub", 2, "-"),
        FunctionSymbol("mul", 2, "*"),
        FunctionSymbol("div", 2, "/"),
        FunctionSymbol("pow", 2, "^"),
        FunctionSymbol("exp", 1, "exp"),
        FunctionSymbol("ln", 1, "ln"),
        FunctionSymbol("sin", 1, "sin"),
        FunctionSymbol("cos", 1, "cos"),
        FunctionSymbol("tan", 1, "tan"),
        FunctionSymbol("sqrt", 1, "sqrt"),
    )
}

# The two stock sets: the 9-function set used on the synthetic test problems
# and the 5-function weighted set used for dew-point modelling.
FUNCTION_SETS: dict[str, tuple[FunctionSymbol, ...]] = {
    "tp": tuple(
        FUNCTIONS[n] for n in ("add", "mul", "sub", "div", "exp", "sin", "cos", "tan", "sqrt")
    ),
    "dew": tuple(
        replace(FUNCTIONS[n], weight=3) for n in ("add", "mul", "ln", "div", "exp")
    ),
}


def function_set(set_id: str) -> tuple[FunctionSymbol, ...]:
    """Look up a stock function set by id ('tp' or 'dew')."""
    try:
        return FUNCTION_SETS[set_id]
    except KeyError:
        known = ", ".join(sorted(FUNCTION_SETS))
        raise ConfigError(f"unknown function set {set_id!r} (known: {known})") from None


@dataclass(frozen=True)
class SymbolSet:
    """The alphabet a gene draws from: functions, variables and constant terminals.

    Symbols are encoded as small integers: function codes first (in declared
    order), then variable codes, then constant-terminal codes C0..C{m-1}.
    """

    functions: tuple[FunctionSymbol, ...]
    variables: tuple[str, ...]
    n_constants: int = 2
    constant_range: tuple[float, float] = (-10.0, 10.0)

    def __post_init__(self):
        if not self.variables:
            raise ConfigError("symbol set needs at least one variable")
        names = [f.name for f in self.functions]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate function names in symbol set")
        if self.n_constants < 0:
            raise ConfigError("n_constants must be >= 0")
        lo, hi = self.constant_range
        if not lo < hi:
            raise ConfigError(f"constant range must satisfy lower < upper, got ({lo}, {hi})")

    # --- code layout ---------------------------------------------------

    @property
    def n_functions(self) -> int:
        return len(self.functions)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_codes(self) -> int:
        return self.n_functions + self.n_variables + self.n_constants

    @cached_property
    def max_arity(self) -> int:
        if not self.functions:
            raise ConfigError("symbol set has no functions")
        return max(f.arity for f in self.functions)

    @cached_property
    def terminal_codes(self) -> tuple[int, ...]:
        return tuple(range(self.n_functions, self.n_codes))

    def is_function(self, code: int) -> bool:
        return 0 <= code < self.n_functions

    def is_variable(self, code: int) -> bool:
        return self.n_functions <= code < self.n_functions + self.n_variables

    def is_constant(self, code: int) -> bool:
        return self.n_functions + self.n_variables <= code < self.n_codes

    def function_at(self, code: int) -> FunctionSymbol:
        return self.functions[code]

    def arity_of(self, code: int) -> int:
        return self.functions[code].arity if code < self.n_functions else 0

    def variable_name(self, code: int) -> str:
        return self.variables[code - self.n_functions]

    def constant_slot(self, code: int) -> int:
        return code - self.n_functions - self.n_variables

    def label(self, code: int) -> str:
        """Printout label for a symbol code: '+', 'ln', 'd0', 'C1', ..."""
        if self.is_function(code):
            return self.functions[code].symbol
        if self.is_variable(code):
            return self.variable_name(code)
        return f"C{self.constant_slot(code)}"


@dataclass(frozen=True)
class GeneLayout:
    """Structural parameters of a gene; tail and Dc lengths are derived."""

    head_len: int
    max_arity: int
    rnc_enabled: bool = True

    def __post_init__(self):
        if self.head_len < 1:
            raise ConfigError("head length must be >= 1")
        if self.max_arity < 1:
            raise ConfigError("max arity must be >= 1")

    @property
    def tail_len(self) -> int:
        return self.head_len * (self.max_arity - 1) + 1

    @property
    def dc_len(self) -> int:
        return self.tail_len if self.rnc_enabled else 0

    @property
    def n_symbols(self) -> int:
        return self.head_len + self.tail_len


def layout_of(head_len: int, symbol_set: SymbolSet, rnc_enabled: bool = True) -> GeneLayout:
    """Build the gene layout implied by a head length and a symbol set."""
    if not symbol_set.functions:
        raise ConfigError("cannot lay out genes over an empty function set")
    return GeneLayout(head_len=head_len, max_arity=symbol_set.max_arity, rnc_enabled=rnc_enabled)


@dataclass(frozen=True)
class Gene:
    """One gene: symbol codes, Dc indices and the constant values they select."""

    symbols: tuple[int, ...]
    dc: tuple[int, ...]
    constants: tuple[float, ...]


@dataclass(frozen=True)
class Chromosome:
    """A multigene genome; gene trees are joined by the linking function."""

    genes: tuple[Gene, ...]
    linking: FunctionSymbol = FUNCTIONS["add"]

    def __post_init__(self):
        if not self.genes:
            raise ConfigError("chromosome needs at least one gene")
        if self.linking.arity != 2:
            raise ConfigError("linking function must be binary")

    @property
    def n_genes(self) -> int:
        return len(self.genes)


# --- expression trees ---------------------------------------------------


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: float


Expr = Union[Call, Var, Const]


def tree_size(tree: Expr) -> int:
    """Number of nodes in an expression tree."""
    count = 0
    stack = [tree]
    while stack:
        node = stack.pop()
        count += 1
        if isinstance(node, Call):
            stack.extend(node.args)
    return count


def validate_gene(gene: Gene, layout: GeneLayout, symbol_set: SymbolSet) -> None:
    """Raise ConfigError unless the gene is structurally valid under the layout."""
    if len(gene.symbols) != layout.n_symbols:
        raise ConfigError(
            f"gene has {len(gene.symbols)} symbols, layout wants {layout.n_symbols}"
        )
    if len(gene.dc) != layout.dc_len:
        raise ConfigError(f"gene has {len(gene.dc)} Dc entries, layout wants {layout.dc_len}")
    if len(gene.constants) != symbol_set.n_constants:
        raise ConfigError(
            f"gene has {len(gene.constants)} constants, symbol set wants {symbol_set.n_constants}"
        )
    for i, code in enumerate(gene.symbols):
        if not 0 <= code < symbol_set.n_codes:
            raise ConfigError(f"symbol code {code} at position {i} out of range")
        if i >= layout.head_len and symbol_set.is_function(code):
            raise ConfigError(f"function symbol in tail position {i}")
    for k in gene.dc:
        if not 0 <= k < symbol_set.n_constants:
            raise ConfigError(f"Dc entry {k} does not index a constant slot")


def validate_chromosome(chrom: Chromosome, layout: GeneLayout, symbol_set: SymbolSet) -> None:
    for gene in chrom.genes:
        validate_gene(gene, layout, symbol_set)


def expressed_length(gene: Gene, symbol_set: SymbolSet) -> int:
    """Length of the open reading frame, i.e. node count of the decoded tree.

    Level-order reading: each symbol fills one open slot and a function opens
    arity new ones; the frame closes when no slots remain.
    """
    open_slots = 1
    i = 0
    while open_slots > 0:
        open_slots += symbol_set.arity_of(gene.symbols[i]) - 1
        i += 1
    return i


def decode(gene: Gene, symbol_set: SymbolSet) -> Expr:
    """Expand a gene breadth-first into its expression tree.

    Symbols are read left to right; each function node takes the next
    unconsumed symbols as children in queue order.  Constant terminals Ck
    resolve to the gene's k-th constant value.
    """

    def make(code: int) -> tuple[Expr, int]:
        if symbol_set.is_function(code):
            return Call(symbol_set.function_at(code).name, ()), symbol_set.arity_of(code)
        if symbol_set.is_variable(code):
            return Var(symbol_set.variable_name(code)), 0
        return Const(gene.constants[symbol_set.constant_slot(code)]), 0

    # children are collected in mutable lists, then frozen bottom-up
    pos = 0
    root_code = gene.symbols[pos]
    pos += 1
    root, arity = make(root_code)
    if arity == 0:
        return root

    queue: list[tuple[Call, int, list[Expr]]] = [(root, arity, [])]
    head = 0
    while head < len(queue):
        node, need, kids = queue[head]
        head += 1
        for _ in range(need):
            child, child_arity = make(gene.symbols[pos])
            pos += 1
            kids.append(child)
            if child_arity:
                queue.append((child, child_arity, []))

    # rebuild immutable Call nodes bottom-up, replacing placeholders
    rebuilt: dict[int, Expr] = {}
    for node, _, kids in reversed(queue):
        args = tuple(rebuilt.pop(id(k), k) for k in kids)
        rebuilt[id(node)] = Call(node.fn, args)
    return rebuilt[id(root)]


def decoded_trees(chrom: Chromosome, symbol_set: SymbolSet) -> list[Expr]:
    return [decode(g, symbol_set) for g in chrom.genes]


def linked_tree(chrom: Chromosome, symbol_set: SymbolSet) -> Expr:
    """Single tree for the whole chromosome: gene trees joined left to right."""
    trees = decoded_trees(chrom, symbol_set)
    out = trees[0]
    for t in trees[1:]:
        out = Call(chrom.linking.name, (out, t))
    return out


def chromosome_size(chrom: Chromosome, symbol_set: SymbolSet) -> int:
    """Expressed node count summed over genes; linking nodes are not counted."""
    return sum(expressed_length(g, symbol_set) for g in chrom.genes)


# --- rendering ----------------------------------------------------------

_INFIX_OPS = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def render_tree_infix(tree: Expr) -> str:
    """Fully parenthesized infix form; unary functions print as name(arg)."""
    if isinstance(tree, Var):
        return tree.name
    if isinstance(tree, Const):
        return repr(tree.value)
    op = _INFIX_OPS.get(tree.fn)
    if op is not None:
        left, right = tree.args
        return f"({render_tree_infix(left)}{op}{render_tree_infix(right)})"
    inner = ",".join(render_tree_infix(a) for a in tree.args)
    return f"{tree.fn}({inner})"


def _render_karva(chrom: Chromosome, symbol_set: SymbolSet) -> str:
    lines: list[str] = []
    for i, gene in enumerate(chrom.genes):
        lines.append(f"Gene {i}")
        lines.append(".".join(symbol_set.label(c) for c in gene.symbols))
        for k, value in enumerate(gene.constants):
            lines.append(f"C{k}: {value!r}")
    return "\n".join(lines)


def _render_infix(chrom: Chromosome, symbol_set: SymbolSet) -> str:
    parts = [f"({render_tree_infix(t)})" for t in decoded_trees(chrom, symbol_set)]
    return chrom.linking.symbol.join(parts)


def render(chrom: Chromosome, symbol_set: SymbolSet, style: str = "infix") -> str:
    """Render a chromosome either as per-gene Karva printouts or as one infix expression."""
    if style == "karva":
        return _render_karva(chrom, symbol_set)
    if style == "infix":
        return _render_infix(chrom, symbol_set)
    raise ConfigError(f"unknown render style {style!r} (use 'karva' or 'infix')")
