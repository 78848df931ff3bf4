"""Generational loops: plain GEP and the two Pareto engines.

Every run is a deterministic function of (config, dataset, seed): a single
random.Random drives initialization and variation, objective evaluation is
pure, and all selection tie-breaks are index-stable.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .evalkit import Dataset, ObjectiveVector, objectives, rrse
from .genome import (
    FUNCTIONS,
    Chromosome,
    Expr,
    GeneLayout,
    SymbolSet,
    function_set,
    layout_of,
    linked_tree,
)
from .kernel import compile_tree, run_program
from .moea import (
    Nsga2Info,
    ObjectiveBounds,
    crowded_better,
    crowding_distance,
    fast_nondominated_sort,
    knee_point,
    nondominated,
    nsga2_environmental,
    spea2_assign,
    spea2_environmental,
)
from .operators import OperatorRates, init_population, point_ops, recombine, tournament_select

__all__ = [
    "ALGORITHMS",
    "RunConfig",
    "Individual",
    "StatsRow",
    "RunResult",
    "PredictResult",
    "run",
    "run_gep",
    "run_mogep",
    "predict",
    "vary_pair",
]

ALGORITHMS = ("gep", "nsga2", "spea2")

# Unary operators in their configured order; recombination happens between
# the transposition block and the gene/Dc block.
_PRE_RECOMB_OPS = ("inversion", "mutation", "is_transposition", "ris_transposition")
_POST_RECOMB_OPS = (
    "gene_transposition",
    "rnc_mutation",
    "dc_mutation",
    "dc_inversion",
    "dc_is_transposition",
)


@dataclass
class RunConfig:
    """Everything a run needs besides the dataset itself."""

    algorithm: str = "gep"
    generations: int = 1000
    pop_size: int = 100
    n_genes: int = 3
    head_len: int = 8
    function_set_id: str = "tp"
    rates: OperatorRates = field(default_factory=OperatorRates)
    tournament_k: int = 2
    archive_capacity: int = 50
    elite_count: int = 10
    bounds: ObjectiveBounds = field(default_factory=ObjectiveBounds)
    n_constants: int = 2
    constant_range: tuple[float, float] = (-10.0, 10.0)
    rnc_enabled: bool = True
    linking: str = "add"
    seed: int = 0
    target: str | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(
                f"unknown algorithm {self.algorithm!r} (use {', '.join(ALGORITHMS)})"
            )
        if self.generations < 0:
            raise ConfigError("generations must be >= 0")
        if self.pop_size < 2:
            raise ConfigError("population size must be >= 2")
        if self.n_genes < 1:
            raise ConfigError("need at least one gene")
        if self.head_len < 1:
            raise ConfigError("head length must be >= 1")
        if self.tournament_k < 1:
            raise ConfigError("tournament size must be >= 1")
        if self.archive_capacity < 2:
            raise ConfigError("archive capacity must be >= 2")
        if self.elite_count < 0:
            raise ConfigError("elite count must be >= 0")
        if self.n_constants < 0:
            raise ConfigError("constants per gene must be >= 0")
        if self.linking not in FUNCTIONS or FUNCTIONS[self.linking].arity != 2:
            raise ConfigError(f"linking function {self.linking!r} must be a known binary function")

    def symbol_set_for(self, data: Dataset) -> SymbolSet:
        return SymbolSet(
            functions=function_set(self.function_set_id),
            variables=data.variable_names,
            n_constants=self.n_constants,
            constant_range=self.constant_range,
        )


@dataclass(frozen=True)
class Individual:
    chrom: Chromosome
    objectives: ObjectiveVector


@dataclass(frozen=True)
class StatsRow:
    """One per-generation summary line.

    Error aggregates cover valid individuals only; a population with no
    valid member reports infinities and a zero best size.  front_size and
    archive_size stay None where the algorithm has no such notion.
    """

    gen: int
    best_err: float
    mean_err: float
    worst_err: float
    best_size: int
    front_size: int | None = None
    archive_size: int | None = None


@dataclass
class RunResult:
    config: RunConfig
    seed: int
    best: Individual
    front: list[Individual] | None
    knee: Individual | None
    stats: list[StatsRow]
    duration: float


@dataclass
class PredictResult:
    predictions: np.ndarray
    residuals: np.ndarray
    valid: np.ndarray
    n_invalid: int
    error: float


class _Evaluator:
    """Objective computation with memoization on chromosome identity.

    Offspring frequently pass through the variation pipeline untouched, so
    caching by value avoids recompiling and re-running their programs.
    """

    def __init__(self, symbol_set: SymbolSet, data: Dataset):
        self.symbol_set = symbol_set
        self.data = data
        self.cache: dict[Chromosome, ObjectiveVector] = {}

    def __call__(self, chrom: Chromosome) -> Individual:
        obj = self.cache.get(chrom)
        if obj is None:
            obj = objectives(chrom, self.symbol_set, self.data)
            self.cache[chrom] = obj
        return Individual(chrom=chrom, objectives=obj)


def _err_key(ind: Individual) -> float:
    return ind.objectives.error if ind.objectives.valid else math.inf


def _error_stats(pop: Sequence[Individual]) -> tuple[float, float, float, int]:
    valid = [ind for ind in pop if ind.objectives.valid]
    if not valid:
        return math.inf, math.inf, math.inf, 0
    best = min(valid, key=lambda ind: (ind.objectives.error, ind.objectives.size))
    total = 0.0
    worst = valid[0].objectives.error
    for ind in valid:
        total += ind.objectives.error
        if ind.objectives.error > worst:
            worst = ind.objectives.error
    return best.objectives.error, total / len(valid), worst, best.objectives.size


def vary_pair(
    a: Chromosome,
    b: Chromosome,
    layout: GeneLayout,
    symbol_set: SymbolSet,
    rates: OperatorRates,
    rng: random.Random,
) -> tuple[Chromosome, Chromosome]:
    """Push a parent pair through the full operator pipeline, in rate-table order."""
    for kind in _PRE_RECOMB_OPS:
        a = point_ops(kind, a, layout, symbol_set, rates, rng)
        b = point_ops(kind, b, layout, symbol_set, rates, rng)
    for kind, rate in (
        ("one_point", rates.one_point_recomb),
        ("two_point", rates.two_point_recomb),
        ("gene", rates.gene_recomb),
    ):
        if rate > 0.0 and rng.random() < rate:
            a, b = recombine(kind, (a, b), layout, symbol_set, rng)
    for kind in _POST_RECOMB_OPS:
        a = point_ops(kind, a, layout, symbol_set, rates, rng)
        b = point_ops(kind, b, layout, symbol_set, rates, rng)
    return a, b


def _spawn(
    count: int,
    layout: GeneLayout,
    symbol_set: SymbolSet,
    rates: OperatorRates,
    rng: random.Random,
    pick,
) -> list[Chromosome]:
    """Create `count` offspring chromosomes; `pick()` supplies one parent."""
    out: list[Chromosome] = []
    while len(out) < count:
        a, b = vary_pair(pick(), pick(), layout, symbol_set, rates, rng)
        out.append(a)
        if len(out) < count:
            out.append(b)
    return out


def run(config: RunConfig, train: Dataset) -> RunResult:
    """Dispatch on the configured algorithm."""
    if config.algorithm == "gep":
        return run_gep(config, train)
    return run_mogep(config, train)


def run_gep(config: RunConfig, train: Dataset) -> RunResult:
    """Single-objective loop: tournament on error, one elite, best-ever tracking."""
    if config.algorithm != "gep":
        raise ConfigError(f"run_gep called with algorithm {config.algorithm!r}")
    started = time.perf_counter()
    rng = random.Random(config.seed)
    symbol_set = config.symbol_set_for(train)
    layout = layout_of(config.head_len, symbol_set, config.rnc_enabled)
    evaluate = _Evaluator(symbol_set, train)

    chroms = init_population(
        config.pop_size, config.n_genes, layout, symbol_set, rng, FUNCTIONS[config.linking]
    )
    pop = [evaluate(c) for c in chroms]
    best_ever = min(pop, key=lambda ind: (_err_key(ind), ind.objectives.size))

    stats: list[StatsRow] = []
    for gen in range(1, config.generations + 1):
        elite = min(pop, key=_err_key)

        def pick() -> Chromosome:
            chosen = tournament_select(
                pop, config.tournament_k, lambda x, y: _err_key(x) < _err_key(y), rng
            )
            return chosen.chrom

        offspring = _spawn(
            config.pop_size - 1, layout, symbol_set, config.rates, rng, pick
        )
        pop = [elite] + [evaluate(c) for c in offspring]
        challenger = min(pop, key=lambda ind: (_err_key(ind), ind.objectives.size))
        if (_err_key(challenger), challenger.objectives.size) < (
            _err_key(best_ever),
            best_ever.objectives.size,
        ):
            best_ever = challenger
        b, m, w, bs = _error_stats(pop)
        stats.append(StatsRow(gen=gen, best_err=b, mean_err=m, worst_err=w, best_size=bs))

    return RunResult(
        config=config,
        seed=config.seed,
        best=best_ever,
        front=None,
        knee=None,
        stats=stats,
        duration=time.perf_counter() - started,
    )


def _final_front(members: list[Individual]) -> list[Individual]:
    keep = nondominated([ind.objectives for ind in members])
    front = [members[i] for i in keep]
    front.sort(key=lambda ind: (ind.objectives.error, ind.objectives.size))
    return front


def run_mogep(config: RunConfig, train: Dataset) -> RunResult:
    """Two-objective loop under NSGA-II or SPEA2.

    NSGA-II: offspring bred from crowded-tournament parents, then
    rank/crowding survivor selection over the parent+offspring union.
    SPEA2: fitness assigned over population+archive, archive refreshed by
    environmental selection, elites carried over, parents drawn from the
    archive by final fitness.  The reported front is the non-dominated set
    of the last population together with the archive.
    """
    if config.algorithm not in ("nsga2", "spea2"):
        raise ConfigError(f"run_mogep called with algorithm {config.algorithm!r}")
    started = time.perf_counter()
    rng = random.Random(config.seed)
    symbol_set = config.symbol_set_for(train)
    layout = layout_of(config.head_len, symbol_set, config.rnc_enabled)
    evaluate = _Evaluator(symbol_set, train)

    chroms = init_population(
        config.pop_size, config.n_genes, layout, symbol_set, rng, FUNCTIONS[config.linking]
    )
    pop = [evaluate(c) for c in chroms]
    stats: list[StatsRow] = []

    if config.algorithm == "nsga2":
        fronts, info = fast_nondominated_sort([ind.objectives for ind in pop])
        ranked: list[Nsga2Info] = list(info)
        for front in fronts:
            crowd = crowding_distance([ind.objectives for ind in pop], front, config.bounds)
            for m in front:
                ranked[m] = replace(info[m], crowding=crowd[m])
        for gen in range(1, config.generations + 1):
            indices = list(range(len(pop)))

            def pick() -> Chromosome:
                i = tournament_select(
                    indices,
                    config.tournament_k,
                    lambda x, y: crowded_better(ranked[x], ranked[y]),
                    rng,
                )
                return pop[i].chrom

            offspring_chroms = _spawn(
                config.pop_size, layout, symbol_set, config.rates, rng, pick
            )
            union = pop + [evaluate(c) for c in offspring_chroms]
            sel, sel_info = nsga2_environmental(
                [ind.objectives for ind in union], config.pop_size, config.bounds
            )
            pop = [union[i] for i in sel]
            ranked = sel_info
            b, m, w, bs = _error_stats(pop)
            stats.append(
                StatsRow(
                    gen=gen, best_err=b, mean_err=m, worst_err=w, best_size=bs,
                    front_size=sum(1 for r in ranked if r.rank == 0),
                )
            )
        final_members = list(pop)
    else:
        archive: list[Individual] = []
        for gen in range(1, config.generations + 1):
            union = pop + archive
            union_objs = [ind.objectives for ind in union]
            info = spea2_assign(union_objs, config.bounds)
            selected = spea2_environmental(
                union_objs, config.archive_capacity, config.bounds, info
            )
            archive = [union[i] for i in selected.members]
            arch_fit = [info[i].fitness for i in selected.members]

            order = sorted(range(len(archive)), key=lambda i: (arch_fit[i], i))
            n_elite = min(config.elite_count, config.pop_size, len(archive))
            elites = [archive[i] for i in order[:n_elite]]
            arch_indices = list(range(len(archive)))

            def pick() -> Chromosome:
                i = tournament_select(
                    arch_indices,
                    config.tournament_k,
                    lambda x, y: arch_fit[x] < arch_fit[y],
                    rng,
                )
                return archive[i].chrom

            offspring_chroms = _spawn(
                config.pop_size - len(elites), layout, symbol_set, config.rates, rng, pick
            )
            pop = elites + [evaluate(c) for c in offspring_chroms]
            b, m, w, bs = _error_stats(pop)
            front_size = sum(1 for r in info if r.fitness < 1.0)
            stats.append(
                StatsRow(
                    gen=gen, best_err=b, mean_err=m, worst_err=w, best_size=bs,
                    front_size=front_size, archive_size=len(archive),
                )
            )
        final_members = pop + archive

    front = _final_front(final_members)
    knee = front[knee_point([ind.objectives for ind in front], config.bounds)]
    best = min(front, key=lambda ind: (_err_key(ind), ind.objectives.size))
    return RunResult(
        config=config,
        seed=config.seed,
        best=best,
        front=front,
        knee=knee,
        stats=stats,
        duration=time.perf_counter() - started,
    )


def predict(model: Expr | Chromosome, data: Dataset, symbol_set: SymbolSet | None = None) -> PredictResult:
    """Evaluate a model over a dataset, row by row.

    Rows with any non-finite intermediate come back as nan predictions and
    are excluded from the reported error, which is the RRSE over the
    remaining rows (inf when fewer than two rows survive or the surviving
    targets are constant).
    """
    if isinstance(model, Chromosome):
        if symbol_set is None:
            raise ConfigError("chromosome models need their symbol set for decoding")
        tree = linked_tree(model, symbol_set)
    else:
        tree = model
    program = compile_tree(tree, data.variable_names)
    predictions, n_invalid = run_program(program, data.X)
    residuals = predictions - data.y
    valid = np.isfinite(predictions)
    if int(valid.sum()) >= 2:
        try:
            error = rrse(predictions[valid].tolist(), data.y[valid].tolist())
        except DataError:
            error = math.inf
    else:
        error = math.inf
    return PredictResult(
        predictions=predictions,
        residuals=residuals,
        valid=valid,
        n_invalid=n_invalid,
        error=error,
    )
