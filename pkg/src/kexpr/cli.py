"""Command-line front end: config parsing, dataset generation, runs, prediction.

The config dialect is the classic dotted key=value parameter-file style, so
parameter tables from the GEP literature can be pasted in nearly verbatim.
Engine switches that have no classic key live under an "x." prefix.
"""

from __future__ import annotations

import argparse
import csv
import difflib
import json
import os
import re
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

from .engine import ALGORITHMS, RunConfig, RunResult, predict, run
from .errors import ConfigError, DataError, ExprParseError, KexprError
from .evalkit import Dataset, ObjectiveVector, load_csv, parse_infix, split, synth_dataset
from .genome import FUNCTION_SETS, FUNCTIONS, Call, Const, Expr, render
from .moea import ObjectiveBounds, merge_fronts
from .operators import OperatorRates

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

STATS_HEADER = "gen,best_err,mean_err,worst_err,best_size,front_size,archive_size"
FRONT_FIELDS = ("error", "size", "infix", "karva", "run", "seed")

PROBLEMS = ("tp1", "tp2", "dew")


@dataclass(frozen=True)
class ParamFile:
    """An ordered key=value listing; '#' starts a comment, later keys win."""

    entries: tuple[tuple[str, str], ...]

    @classmethod
    def parse(cls, text: str) -> "ParamFile":
        return cls(tuple((key, value) for _, key, value in _param_lines(text)))

    def serialize(self) -> str:
        return "".join(f"{key} = {value}\n" for key, value in self.entries)


@dataclass(frozen=True)
class FrontRecord:
    """One front member as written to front.csv / merged_front.csv."""

    error: float
    size: int
    infix: str
    karva: str
    run: int
    seed: int


def _param_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: missing key before '='")
        yield lineno, key, value


def _as_int(key: str, value: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects an integer, got {value!r}") from None


def _as_float(key: str, value: str, lineno: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects a number, got {value!r}") from None


def _as_rate(key: str, value: str, lineno: int) -> float:
    rate = _as_float(key, value, lineno)
    if not 0.0 <= rate <= 1.0:
        raise ConfigError(f"line {lineno}: {key} must be in [0, 1], got {value}")
    return rate


def _as_bool(key: str, value: str, lineno: int) -> bool:
    low = value.lower()
    if low not in ("true", "false"):
        raise ConfigError(f"line {lineno}: {key} expects true or false, got {value!r}")
    return low == "true"


def _algo_hint(value: str) -> str | None:
    low = value.lower()
    if "nsga2" in low:
        return "nsga2"
    if "spea2" in low:
        return "spea2"
    return None


# Dotted rate keys and the OperatorRates field each one feeds.
_RATE_KEYS = {
    "gep.species.inversion-prob": "inversion",
    "gep.species.mutation-prob": "mutation",
    "gep.species.istransposition-prob": "is_transposition",
    "gep.species.ristransposition-prob": "ris_transposition",
    "gep.species.onepointrecomb-prob": "one_point_recomb",
    "gep.species.twopointrecomb-prob": "two_point_recomb",
    "gep.species.generecomb-prob": "gene_recomb",
    "gep.species.genetransposition-prob": "gene_transposition",
    "gep.species.rnc-mutation-prob": "rnc_mutation",
    "gep.species.dc-mutation-prob": "dc_mutation",
    "gep.species.dc-inversion-prob": "dc_inversion",
    "gep.species.dc-istransposition-prob": "dc_is_transposition",
}

_INT_KEYS = {
    "gep.species.numgenes": "n_genes",
    "gep.species.gene-headsize": "head_len",
    "pop.subpop.0.size": "pop_size",
    "select.tournament.size": "tournament_k",
    "pop.subpop.0.archive-size": "archive_capacity",
    "breed.elite.0": "elite_count",
    "generations": "generations",
    "x.seed": "seed",
    "x.constants-per-gene": "n_constants",
}

_BOUND_KEYS = {
    "multi.fitness.min.0": "error_min",
    "multi.fitness.max.0": "error_max",
    "multi.fitness.min.1": "size_min",
    "multi.fitness.max.1": "size_max",
}

_FUNCTION_KEY = re.compile(r"gep\.species\.symbolset\.function\.(\d+)$")

_OTHER_KEYS = (
    "pop.subpop.0.species.fitness",
    "pop.subpop.0.species.fitness.maximize",
    "pop.subpop.0.species.pipe.source.0.source.0",
    "multi.fitness.num-objectives",
    "parent.0",
    "target",
    "x.algorithm",
    "x.function-set",
    "x.constant-min",
    "x.constant-max",
    "x.rnc",
    "x.linking",
)

_KNOWN_KEYS = sorted(
    list(_RATE_KEYS) + list(_INT_KEYS) + list(_BOUND_KEYS) + list(_OTHER_KEYS)
    + ["gep.species.symbolset.function.0"]
)


def _unknown_key(key: str, lineno: int) -> ConfigError:
    hint = ""
    close = difflib.get_close_matches(key, _KNOWN_KEYS, n=1)
    if close:
        hint = f" (did you mean {close[0]!r}?)"
    return ConfigError(f"line {lineno}: unknown key {key!r}{hint}")


def _resolve_function_set(functions: dict[int, str]) -> str:
    names = frozenset(functions.values())
    for set_id, members in FUNCTION_SETS.items():
        if names == frozenset(fn.name for fn in members):
            return set_id
    raise ConfigError(
        f"function set {sorted(names)} matches no registered set"
        f" (registered: {', '.join(sorted(FUNCTION_SETS))})"
    )


def _config_from_text(text: str) -> RunConfig:
    kwargs: dict = {}
    rates: dict[str, float] = {}
    bounds: dict[str, float] = {}
    functions: dict[int, str] = {}
    constant_range: dict[str, float] = {}

    for lineno, key, value in _param_lines(text):
        if key in _RATE_KEYS:
            rates[_RATE_KEYS[key]] = _as_rate(key, value, lineno)
        elif key in _INT_KEYS:
            kwargs[_INT_KEYS[key]] = _as_int(key, value, lineno)
        elif key in _BOUND_KEYS:
            bounds[_BOUND_KEYS[key]] = _as_float(key, value, lineno)
        elif match := _FUNCTION_KEY.match(key):
            low = value.lower()
            if low not in FUNCTIONS:
                raise ConfigError(f"line {lineno}: unknown function name {value!r}")
            functions[int(match.group(1))] = FUNCTIONS[low].name
        elif key == "pop.subpop.0.species.fitness":
            algo = _algo_hint(value)
            if algo is None:
                raise ConfigError(
                    f"line {lineno}: {key} value {value!r} names no supported"
                    " fitness (expected a name mentioning nsga2 or spea2)"
                )
            kwargs["algorithm"] = algo
        elif key == "pop.subpop.0.species.fitness.maximize":
            if _as_bool(key, value, lineno):
                raise ConfigError(f"line {lineno}: only minimization is supported")
        elif key == "pop.subpop.0.species.pipe.source.0.source.0":
            # selection class name; useful only as an algorithm hint
            algo = _algo_hint(value)
            if algo is not None:
                kwargs["algorithm"] = algo
        elif key == "multi.fitness.num-objectives":
            if _as_int(key, value, lineno) != 2:
                raise ConfigError(f"line {lineno}: exactly 2 objectives are supported")
        elif key == "parent.0":
            algo = _algo_hint(value)
            if algo is None:
                raise ConfigError(
                    f"line {lineno}: cannot infer an algorithm from parent.0 value {value!r}"
                )
            kwargs["algorithm"] = algo
        elif key == "target":
            kwargs["target"] = value
        elif key == "x.algorithm":
            if value not in ALGORITHMS:
                raise ConfigError(
                    f"line {lineno}: unknown algorithm {value!r} (use {', '.join(ALGORITHMS)})"
                )
            kwargs["algorithm"] = value
        elif key == "x.function-set":
            if value not in FUNCTION_SETS:
                raise ConfigError(
                    f"line {lineno}: unknown function set {value!r}"
                    f" (registered: {', '.join(sorted(FUNCTION_SETS))})"
                )
            kwargs["function_set_id"] = value
        elif key == "x.constant-min":
            constant_range["lo"] = _as_float(key, value, lineno)
        elif key == "x.constant-max":
            constant_range["hi"] = _as_float(key, value, lineno)
        elif key == "x.rnc":
            kwargs["rnc_enabled"] = _as_bool(key, value, lineno)
        elif key == "x.linking":
            kwargs["linking"] = value
        else:
            raise _unknown_key(key, lineno)

    if functions:
        kwargs["function_set_id"] = _resolve_function_set(functions)
    if constant_range:
        kwargs["constant_range"] = (
            constant_range.get("lo", -10.0),
            constant_range.get("hi", 10.0),
        )
    if rates:
        kwargs["rates"] = OperatorRates(**rates)
    if bounds:
        kwargs["bounds"] = ObjectiveBounds(**bounds)
    if "seed" not in kwargs:
        env = os.environ.get("KEXPR_SEED")
        if env is not None:
            try:
                kwargs["seed"] = int(env)
            except ValueError:
                raise ConfigError(
                    f"KEXPR_SEED must be an integer, got {env!r}"
                ) from None
    return RunConfig(**kwargs)


def parse_config(path: str | Path) -> RunConfig:
    """Read a dotted key=value parameter file into a RunConfig."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        return _config_from_text(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _resolve_seed(cli_seed: int | None) -> int:
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get("KEXPR_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"KEXPR_SEED must be an integer, got {env!r}") from None
    return 0


def _write_dataset(path: Path, data: Dataset) -> None:
    lines = [",".join(data.variable_names + (data.target_name,))]
    for i in range(len(data.y)):
        cells = [repr(float(v)) for v in data.X[i]]
        cells.append(repr(float(data.y[i])))
        lines.append(",".join(cells))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_gen(args: argparse.Namespace) -> int:
    data = synth_dataset(args.problem, args.rows, _resolve_seed(args.seed))
    _write_dataset(Path(args.out), data)
    print(f"wrote {len(data.y)} rows to {args.out}")
    return EXIT_OK


def _write_stats(path: Path, rows) -> None:
    lines = [STATS_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                [
                    str(row.gen),
                    repr(row.best_err),
                    repr(row.mean_err),
                    repr(row.worst_err),
                    str(row.best_size),
                    "" if row.front_size is None else str(row.front_size),
                    "" if row.archive_size is None else str(row.archive_size),
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_front_records(path: Path, records: Sequence[FrontRecord]) -> None:
    # csv handles the quoting: karva text spans several lines
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(FRONT_FIELDS)
        for rec in records:
            writer.writerow(
                [repr(rec.error), rec.size, rec.infix, rec.karva, rec.run, rec.seed]
            )


def _write_best(path: Path, result: RunResult, symbol_set) -> None:
    ind = result.best
    text = (
        f"error = {ind.objectives.error!r}\n"
        f"size = {ind.objectives.size}\n"
        f"valid = {str(ind.objectives.valid).lower()}\n"
        "\n[infix]\n"
        + render(ind.chrom, symbol_set, "infix")
        + "\n\n[karva]\n"
        + render(ind.chrom, symbol_set, "karva")
        + "\n"
    )
    path.write_text(text, encoding="utf-8")


def _write_meta(path: Path, config: RunConfig, result: RunResult) -> None:
    meta = {
        "algorithm": config.algorithm,
        "seed": result.seed,
        "duration_seconds": result.duration,
        "config": asdict(config),
    }
    path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def _front_records(result: RunResult, symbol_set, run_idx: int) -> list[FrontRecord]:
    records = []
    for ind in result.front:
        records.append(
            FrontRecord(
                error=ind.objectives.error,
                size=ind.objectives.size,
                infix=render(ind.chrom, symbol_set, "infix"),
                karva=render(ind.chrom, symbol_set, "karva"),
                run=run_idx,
                seed=result.seed,
            )
        )
    return records


def _write_scatter(path: Path, groups: Sequence[Sequence[FrontRecord]]) -> None:
    lines = ["error,size,run,seed"]
    for group in groups:
        for rec in group:
            lines.append(f"{rec.error!r},{rec.size},{rec.run},{rec.seed}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_evolve(args: argparse.Namespace) -> int:
    config = parse_config(args.config)
    if args.algorithm is not None:
        config = replace(config, algorithm=args.algorithm)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")

    data = load_csv(args.data, config.target)
    out_dir = Path(args.out)
    if out_dir.exists() and any(out_dir.iterdir()) and not args.force:
        raise ConfigError(
            f"output directory {out_dir} is not empty; pass --force to write into it"
        )
    out_dir.mkdir(parents=True, exist_ok=True)

    symbol_set = config.symbol_set_for(data)
    groups: list[list[FrontRecord]] = []
    for run_idx in range(args.runs):
        cfg = replace(config, seed=config.seed + run_idx)
        result = run(cfg, data)
        run_dir = out_dir / f"run_{run_idx:02d}"
        run_dir.mkdir(exist_ok=True)
        _write_stats(run_dir / "stats.csv", result.stats)
        if result.front is None:
            _write_best(run_dir / "best.txt", result, symbol_set)
        else:
            records = _front_records(result, symbol_set, run_idx)
            groups.append(records)
            _write_front_records(run_dir / "front.csv", records)
        _write_meta(run_dir / "run_meta.json", cfg, result)
        best = result.best.objectives
        print(
            f"run {run_idx:02d}: seed={cfg.seed} best_err={best.error!r}"
            f" size={best.size} ({result.duration:.2f}s)"
        )

    if groups:
        _write_scatter(out_dir / "scatter.csv", groups)
        merged = merge_fronts(
            groups,
            objective_of=lambda rec: ObjectiveVector(rec.error, rec.size),
            expr_of=lambda rec: rec.infix,
        )
        _write_front_records(out_dir / "merged_front.csv", merged)
        print(f"merged front: {len(merged)} members from {len(groups)} runs")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    try:
        model_text = Path(args.model).read_text(encoding="utf-8").strip()
    except OSError as exc:
        raise ConfigError(f"cannot read model {args.model}: {exc}") from None
    if not model_text:
        raise ConfigError(f"model file {args.model} is empty")
    expr = parse_infix(model_text)

    data = load_csv(args.data)
    train, test = split(data, args.split)
    result = predict(expr, test)

    lines = ["row,target,prediction,residual,valid"]
    offset = len(train.y)
    for i in range(len(test.y)):
        lines.append(
            ",".join(
                [
                    str(offset + i),
                    repr(float(test.y[i])),
                    repr(float(result.predictions[i])),
                    repr(float(result.residuals[i])),
                    "true" if result.valid[i] else "false",
                ]
            )
        )
    lines.append(f"# test_rrse = {result.error!r}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(
        f"test RRSE {result.error!r} over {len(test.y)} rows"
        f" ({result.n_invalid} invalid)"
    )
    return EXIT_OK


def _display_size(expr: Expr) -> int:
    """Node count as printed; a radical over a bare literal reads as one constant."""
    stack = [expr]
    count = 0
    while stack:
        node = stack.pop()
        count += 1
        if isinstance(node, Call):
            if node.fn == "sqrt" and isinstance(node.args[0], Const):
                continue
            stack.extend(node.args)
    return count


def _add_chain(expr: Expr) -> list[Expr]:
    if isinstance(expr, Call) and expr.fn == "add":
        return _add_chain(expr.args[0]) + _add_chain(expr.args[1])
    return [expr]


def cmd_size(args: argparse.Namespace) -> int:
    expr = parse_infix(args.expression)
    count = _display_size(expr)
    if args.genes is not None:
        if args.genes < 1:
            raise ConfigError("--genes must be >= 1")
        segments = _add_chain(expr)
        if len(segments) != args.genes:
            raise ConfigError(
                f"expression splits into {len(segments)} top-level '+' segments,"
                f" not {args.genes}"
            )
        count -= args.genes - 1
    print(count)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kexpr",
        description="Symbolic regression by gene expression programming.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a synthetic benchmark dataset")
    gen.add_argument("problem", choices=PROBLEMS)
    gen.add_argument("--rows", type=int, default=100)
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", required=True)
    gen.set_defaults(handler=cmd_gen)

    evolve = sub.add_parser("evolve", help="run the engine on a CSV dataset")
    evolve.add_argument("--config", required=True)
    evolve.add_argument("--data", required=True)
    evolve.add_argument("--out", required=True)
    evolve.add_argument("--seed", type=int, default=None)
    evolve.add_argument("--runs", type=int, default=1)
    evolve.add_argument("--algorithm", choices=ALGORITHMS, default=None)
    evolve.add_argument("--force", action="store_true")
    evolve.set_defaults(handler=cmd_evolve)

    pred = sub.add_parser("predict", help="evaluate a saved model on held-out rows")
    pred.add_argument("model", help="text file holding one infix expression")
    pred.add_argument("--data", required=True)
    pred.add_argument("--out", required=True)
    pred.add_argument("--split", type=float, default=0.75)
    pred.set_defaults(handler=cmd_predict)

    size = sub.add_parser("size", help="count the nodes of an infix expression")
    size.add_argument("expression")
    size.add_argument("--genes", type=int, default=None)
    size.set_defaults(handler=cmd_size)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, ExprParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (KexprError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
