"""Population initialization, genetic operators and tournament selection.

Every operator maps structurally valid chromosomes to structurally valid
chromosomes: functions never enter tails, Dc entries always index constant
slots, gene counts and lengths never change.  All randomness flows through
the supplied random.Random so runs replay exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, fields
from functools import lru_cache
from typing import Callable, Sequence, TypeVar

from .errors import ConfigError
from .genome import Chromosome, Gene, GeneLayout, SymbolSet

__all__ = [
    "OperatorRates",
    "POINT_OP_KINDS",
    "RECOMB_KINDS",
    "init_population",
    "point_ops",
    "recombine",
    "tournament_select",
    "mutation_position_prob",
]

T = TypeVar("T")

# Maximum length of inverted/transposed segments; small segments are the
# common practice and keep heads from churning wholesale.
_MAX_SEGMENT = 3


@dataclass(frozen=True)
class OperatorRates:
    """Application probabilities for the twelve variation operators."""

    inversion: float = 0.1
    mutation: float = 0.044
    is_transposition: float = 0.1
    ris_transposition: float = 0.1
    one_point_recomb: float = 0.3
    two_point_recomb: float = 0.3
    gene_recomb: float = 0.1
    gene_transposition: float = 0.1
    rnc_mutation: float = 0.01
    dc_mutation: float = 0.044
    dc_inversion: float = 0.1
    dc_is_transposition: float = 0.1

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"rate {f.name} = {v} outside [0, 1]")


POINT_OP_KINDS = (
    "mutation",
    "inversion",
    "is_transposition",
    "ris_transposition",
    "gene_transposition",
    "rnc_mutation",
    "dc_mutation",
    "dc_inversion",
    "dc_is_transposition",
)

RECOMB_KINDS = ("one_point", "two_point", "gene")


def mutation_position_prob(rate: float) -> float:
    """Per-position rewrite probability for point mutation.

    The configured rate applies to each position independently, following
    the usual GEP reading where a rate around 2/L yields about two point
    mutations per chromosome of L symbols.
    """
    return min(1.0, float(rate))


@lru_cache(maxsize=None)
def _head_sampling(symbol_set: SymbolSet) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Symbol codes and cumulative weights for head positions.

    Functions are weighted by their declared weight; every terminal
    (variables and constant slots) has weight 1.
    """
    codes = tuple(range(symbol_set.n_codes))
    acc = 0.0
    cum = []
    for code in codes:
        acc += symbol_set.functions[code].weight if symbol_set.is_function(code) else 1.0
        cum.append(acc)
    return codes, tuple(cum)


def _draw_head_symbol(symbol_set: SymbolSet, rng: random.Random) -> int:
    codes, cum = _head_sampling(symbol_set)
    return rng.choices(codes, cum_weights=cum, k=1)[0]


def _draw_tail_symbol(symbol_set: SymbolSet, rng: random.Random) -> int:
    terms = symbol_set.terminal_codes
    return terms[rng.randrange(len(terms))]


def _random_gene(layout: GeneLayout, symbol_set: SymbolSet, rng: random.Random) -> Gene:
    h, t = layout.head_len, layout.tail_len
    symbols = [_draw_head_symbol(symbol_set, rng) for _ in range(h)]
    symbols += [_draw_tail_symbol(symbol_set, rng) for _ in range(t)]
    dc = tuple(rng.randrange(symbol_set.n_constants) for _ in range(layout.dc_len))
    lo, hi = symbol_set.constant_range
    constants = tuple(rng.uniform(lo, hi) for _ in range(symbol_set.n_constants))
    return Gene(symbols=tuple(symbols), dc=dc, constants=constants)


def init_population(
    size: int,
    n_genes: int,
    layout: GeneLayout,
    symbol_set: SymbolSet,
    rng: random.Random,
    linking=None,
) -> list[Chromosome]:
    """Sample `size` random chromosomes of `n_genes` genes each."""
    if size < 2:
        raise ConfigError("population size must be at least 2")
    if n_genes < 1:
        raise ConfigError("need at least one gene per chromosome")
    kwargs = {} if linking is None else {"linking": linking}
    return [
        Chromosome(
            genes=tuple(_random_gene(layout, symbol_set, rng) for _ in range(n_genes)),
            **kwargs,
        )
        for _ in range(size)
    ]


# --- point operators ------------------------------------------------------

def _segment(rng: random.Random, region_len: int) -> tuple[int, int]:
    """Random (start, length) with length uniform in [1, 3] capped by the region."""
    length = rng.randint(1, min(_MAX_SEGMENT, region_len))
    start = rng.randrange(region_len - length + 1)
    return start, length


def _with_gene(chrom: Chromosome, idx: int, gene: Gene) -> Chromosome:
    genes = list(chrom.genes)
    genes[idx] = gene
    return Chromosome(genes=tuple(genes), linking=chrom.linking)


def _mutation(chrom, layout, symbol_set, rate, rng):
    h = layout.head_len
    p = mutation_position_prob(rate)
    if p <= 0.0:
        return chrom
    genes = []
    any_changed = False
    for gene in chrom.genes:
        symbols = list(gene.symbols)
        changed = False
        for i in range(len(symbols)):
            if rng.random() < p:
                symbols[i] = (
                    _draw_head_symbol(symbol_set, rng)
                    if i < h
                    else _draw_tail_symbol(symbol_set, rng)
                )
                changed = True
        genes.append(
            Gene(tuple(symbols), gene.dc, gene.constants) if changed else gene
        )
        any_changed = any_changed or changed
    if not any_changed:
        return chrom
    return Chromosome(genes=tuple(genes), linking=chrom.linking)


def _inversion(chrom, layout, symbol_set, rate, rng):
    if rate <= 0.0 or rng.random() >= rate:
        return chrom
    g = rng.randrange(chrom.n_genes)
    gene = chrom.genes[g]
    start, length = _segment(rng, layout.head_len)
    symbols = list(gene.symbols)
    symbols[start : start + length] = reversed(symbols[start : start + length])
    return _with_gene(chrom, g, Gene(tuple(symbols), gene.dc, gene.constants))


def _is_transposition(chrom, layout, symbol_set, rate, rng):
    """Copy a random segment into a random head position past the root."""
    h = layout.head_len
    if h < 2 or rate <= 0.0 or rng.random() >= rate:
        return chrom
    src = chrom.genes[rng.randrange(chrom.n_genes)]
    start, length = _segment(rng, layout.n_symbols)
    seg = src.symbols[start : start + length]
    d = rng.randrange(chrom.n_genes)
    dest = chrom.genes[d]
    pos = rng.randrange(1, h)
    head = list(dest.symbols[:h])
    head[pos:pos] = seg
    symbols = tuple(head[:h]) + dest.symbols[h:]
    return _with_gene(chrom, d, Gene(symbols, dest.dc, dest.constants))


def _ris_transposition(chrom, layout, symbol_set, rate, rng):
    """Copy a function-rooted segment to the start of its gene's head.

    A gene whose head holds no function cannot supply a root segment, so
    the chromosome passes through unchanged.
    """
    if rate <= 0.0 or rng.random() >= rate:
        return chrom
    g = rng.randrange(chrom.n_genes)
    gene = chrom.genes[g]
    h = layout.head_len
    fn_positions = [i for i in range(h) if symbol_set.is_function(gene.symbols[i])]
    if not fn_positions:
        return chrom
    start = fn_positions[rng.randrange(len(fn_positions))]
    length = rng.randint(1, min(_MAX_SEGMENT, h))
    seg = gene.symbols[start : start + length]
    head = seg + gene.symbols[:h]
    symbols = head[:h] + gene.symbols[h:]
    return _with_gene(chrom, g, Gene(symbols, gene.dc, gene.constants))


def _gene_transposition(chrom, layout, symbol_set, rate, rng):
    if chrom.n_genes < 2 or rate <= 0.0 or rng.random() >= rate:
        return chrom
    i = rng.randrange(1, chrom.n_genes)
    genes = list(chrom.genes)
    moved = genes.pop(i)
    genes.insert(0, moved)
    return Chromosome(genes=tuple(genes), linking=chrom.linking)


def _rnc_mutation(chrom, layout, symbol_set, rate, rng):
    if symbol_set.n_constants == 0 or rate <= 0.0 or rng.random() >= rate:
        return chrom
    g = rng.randrange(chrom.n_genes)
    gene = chrom.genes[g]
    slot = rng.randrange(symbol_set.n_constants)
    lo, hi = symbol_set.constant_range
    constants = list(gene.constants)
    constants[slot] = rng.uniform(lo, hi)
    return _with_gene(chrom, g, Gene(gene.symbols, gene.dc, tuple(constants)))


def _dc_mutation(chrom, layout, symbol_set, rate, rng):
    if layout.dc_len == 0:
        return chrom
    p = mutation_position_prob(rate)
    if p <= 0.0:
        return chrom
    genes = []
    any_changed = False
    for gene in chrom.genes:
        dc = list(gene.dc)
        changed = False
        for i in range(len(dc)):
            if rng.random() < p:
                dc[i] = rng.randrange(symbol_set.n_constants)
                changed = True
        genes.append(Gene(gene.symbols, tuple(dc), gene.constants) if changed else gene)
        any_changed = any_changed or changed
    if not any_changed:
        return chrom
    return Chromosome(genes=tuple(genes), linking=chrom.linking)


def _dc_inversion(chrom, layout, symbol_set, rate, rng):
    if layout.dc_len == 0 or rate <= 0.0 or rng.random() >= rate:
        return chrom
    g = rng.randrange(chrom.n_genes)
    gene = chrom.genes[g]
    start, length = _segment(rng, layout.dc_len)
    dc = list(gene.dc)
    dc[start : start + length] = reversed(dc[start : start + length])
    return _with_gene(chrom, g, Gene(gene.symbols, tuple(dc), gene.constants))


def _dc_is_transposition(chrom, layout, symbol_set, rate, rng):
    if layout.dc_len < 2 or rate <= 0.0 or rng.random() >= rate:
        return chrom
    src = chrom.genes[rng.randrange(chrom.n_genes)]
    start, length = _segment(rng, layout.dc_len)
    seg = src.dc[start : start + length]
    d = rng.randrange(chrom.n_genes)
    dest = chrom.genes[d]
    pos = rng.randrange(1, layout.dc_len)
    dc = list(dest.dc)
    dc[pos:pos] = seg
    return _with_gene(chrom, d, Gene(dest.symbols, tuple(dc[: layout.dc_len]), dest.constants))


_POINT_OPS = {
    "mutation": _mutation,
    "inversion": _inversion,
    "is_transposition": _is_transposition,
    "ris_transposition": _ris_transposition,
    "gene_transposition": _gene_transposition,
    "rnc_mutation": _rnc_mutation,
    "dc_mutation": _dc_mutation,
    "dc_inversion": _dc_inversion,
    "dc_is_transposition": _dc_is_transposition,
}


def point_ops(
    kind: str,
    chrom: Chromosome,
    layout: GeneLayout,
    symbol_set: SymbolSet,
    rates: OperatorRates,
    rng: random.Random,
) -> Chromosome:
    """Apply one unary operator, gated by its configured rate.

    Mutation kinds rewrite positions at a per-position probability derived
    from the rate; the rest fire whole with probability rate.
    """
    try:
        op = _POINT_OPS[kind]
    except KeyError:
        raise ConfigError(f"unknown operator kind {kind!r}") from None
    return op(chrom, layout, symbol_set, getattr(rates, kind), rng)


# --- recombination --------------------------------------------------------

def _serialize(chrom: Chromosome) -> list:
    out: list = []
    for gene in chrom.genes:
        out.extend(gene.symbols)
        out.extend(gene.dc)
        out.extend(gene.constants)
    return out


def _deserialize(values: list, template: Chromosome, layout: GeneLayout,
                 n_constants: int) -> Chromosome:
    genes = []
    i = 0
    for _ in template.genes:
        symbols = tuple(values[i : i + layout.n_symbols])
        i += layout.n_symbols
        dc = tuple(values[i : i + layout.dc_len])
        i += layout.dc_len
        constants = tuple(values[i : i + n_constants])
        i += n_constants
        genes.append(Gene(symbols, dc, constants))
    return Chromosome(genes=tuple(genes), linking=template.linking)


def recombine(
    kind: str,
    parents: tuple[Chromosome, Chromosome],
    layout: GeneLayout,
    symbol_set: SymbolSet,
    rng: random.Random,
) -> tuple[Chromosome, Chromosome]:
    """Exchange genetic material between two same-shaped parents.

    one_point swaps everything after one cut in the linear serialization
    (symbols, Dc entries and constants, gene by gene); two_point swaps the
    window between two cuts; gene swaps one whole gene.
    """
    p1, p2 = parents
    if p1.n_genes != p2.n_genes:
        raise ConfigError(f"parents have {p1.n_genes} vs {p2.n_genes} genes")
    if kind == "gene":
        i = rng.randrange(p1.n_genes)
        return _with_gene(p1, i, p2.genes[i]), _with_gene(p2, i, p1.genes[i])

    a = _serialize(p1)
    b = _serialize(p2)
    if len(a) != len(b):
        raise ConfigError("parents have different genome lengths")
    m = symbol_set.n_constants
    if kind == "one_point":
        cut = rng.randrange(len(a))
        c1 = a[:cut] + b[cut:]
        c2 = b[:cut] + a[cut:]
    elif kind == "two_point":
        lo, hi = sorted((rng.randrange(len(a) + 1), rng.randrange(len(a) + 1)))
        c1 = a[:lo] + b[lo:hi] + a[hi:]
        c2 = b[:lo] + a[lo:hi] + b[hi:]
    else:
        raise ConfigError(f"unknown recombination kind {kind!r}")
    return (
        _deserialize(c1, p1, layout, m),
        _deserialize(c2, p2, layout, m),
    )


def tournament_select(
    pool: Sequence[T],
    k: int,
    better: Callable[[T, T], bool],
    rng: random.Random,
) -> T:
    """Draw k entrants with replacement; the first-drawn best wins.

    `better(a, b)` must return True when a strictly beats b, so ties go to
    the earlier draw and the result is deterministic for a given stream.
    """
    if not pool:
        raise ConfigError("cannot select from an empty pool")
    best = pool[rng.randrange(len(pool))]
    for _ in range(k - 1):
        challenger = pool[rng.randrange(len(pool))]
        if better(challenger, best):
            best = challenger
    return best
