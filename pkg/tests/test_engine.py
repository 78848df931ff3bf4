"""Run orchestration for the three algorithms, plus prediction."""

import math
import random

import numpy as np
import pytest

from kexpr.engine import Individual, RunConfig, predict, run, vary_pair
from kexpr.errors import ConfigError
from kexpr.evalkit import parse_infix, synth_dataset
from kexpr.genome import layout_of, validate_chromosome
from kexpr.moea import dominates
from kexpr.operators import OperatorRates

DATA = synth_dataset("tp1", 50, seed=1)


def tiny(algorithm, **kw):
    base = dict(algorithm=algorithm, generations=8, pop_size=24, seed=5)
    base.update(kw)
    return RunConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(pop_size=1)
    with pytest.raises(ConfigError):
        RunConfig(algorithm="cmaes")
    with pytest.raises(ConfigError):
        RunConfig(tournament_k=0)
    with pytest.raises(ConfigError):
        RunConfig(head_len=0)
    with pytest.raises(ConfigError):
        RunConfig(n_genes=0)
    with pytest.raises(ConfigError):
        RunConfig(archive_capacity=1)
    with pytest.raises(ConfigError):
        RunConfig(rates=OperatorRates(mutation=2.0))


def test_symbol_set_reflects_data():
    cfg = tiny("gep")
    ss = cfg.symbol_set_for(DATA)
    assert ss.variables == ("a", "b", "c", "d", "e")
    assert ss.n_constants == cfg.n_constants


@pytest.mark.parametrize("algorithm", ["gep", "nsga2", "spea2"])
def test_run_is_deterministic(algorithm):
    r1 = run(tiny(algorithm), DATA)
    r2 = run(tiny(algorithm), DATA)
    assert r1.best.chrom == r2.best.chrom
    assert r1.stats == r2.stats
    if r1.front is not None:
        assert [i.chrom for i in r1.front] == [i.chrom for i in r2.front]


def test_different_seeds_differ():
    r1 = run(tiny("gep"), DATA)
    r2 = run(tiny("gep", seed=6), DATA)
    assert r1.stats != r2.stats


def test_stats_rows_numbered_from_one():
    res = run(tiny("gep", generations=7), DATA)
    assert [row.gen for row in res.stats] == list(range(1, 8))


def test_gep_best_error_never_regresses():
    """The elite survives every generation, so the best can only improve."""
    res = run(tiny("gep", generations=40), DATA)
    errs = [row.best_err for row in res.stats]
    assert all(b <= a + 1e-15 for a, b in zip(errs, errs[1:]))
    assert res.front is None
    assert res.knee is None
    assert all(row.front_size is None and row.archive_size is None
               for row in res.stats)


def test_gep_best_matches_final_stat():
    res = run(tiny("gep", generations=30), DATA)
    assert res.best.objectives.error == pytest.approx(res.stats[-1].best_err)
    assert res.best.objectives.valid


@pytest.mark.parametrize("algorithm", ["nsga2", "spea2"])
def test_mo_front_is_mutually_nondominated(algorithm):
    res = run(tiny(algorithm, generations=15), DATA)
    assert res.front
    objs = [i.objectives for i in res.front]
    for x in objs:
        assert x.valid
        for y in objs:
            if x is not y:
                assert not dominates(x, y) or (x.error, x.size) == (y.error, y.size)
    keys = [(o.error, o.size) for o in objs]
    assert keys == sorted(keys)
    assert res.knee is not None
    assert res.knee in res.front


def test_mo_stats_report_front_and_archive():
    res = run(tiny("nsga2"), DATA)
    assert all(row.front_size >= 1 for row in res.stats)
    assert all(row.archive_size is None for row in res.stats)

    res = run(tiny("spea2"), DATA)
    assert all(row.archive_size >= 1 for row in res.stats)
    cap = tiny("spea2").archive_capacity
    assert all(row.archive_size <= cap for row in res.stats)


def test_spea2_archive_capacity_respected():
    res = run(tiny("spea2", generations=20, archive_capacity=8), DATA)
    assert all(row.archive_size <= 8 for row in res.stats)


def test_result_echoes_config_and_seed():
    cfg = tiny("gep")
    res = run(cfg, DATA)
    assert res.config == cfg
    assert res.seed == cfg.seed
    assert res.duration >= 0.0


def test_run_with_rnc_disabled():
    res = run(tiny("gep", rnc_enabled=False), DATA)
    assert res.best.objectives.valid
    for gene in res.best.chrom.genes:
        assert gene.dc == ()


def test_vary_pair_produces_legal_children():
    cfg = tiny("gep")
    ss = cfg.symbol_set_for(DATA)
    layout = layout_of(cfg.head_len, ss, cfg.rnc_enabled)
    rng = random.Random(9)
    from kexpr.operators import init_population

    pop = init_population(10, cfg.n_genes, layout, ss, rng)
    for i in range(0, 10, 2):
        c1, c2 = vary_pair(pop[i], pop[i + 1], layout, ss, cfg.rates, rng)
        validate_chromosome(c1, layout, ss)
        validate_chromosome(c2, layout, ss)


# --- predict -----------------------------------------------------------------

def test_predict_expression_model():
    pr = predict(parse_infix("tan(d - e)"), DATA)
    assert len(pr.predictions) == DATA.n_rows
    assert pr.n_invalid == 0
    assert all(pr.valid)
    want = np.tan(DATA.X[:, 3] - DATA.X[:, 4])
    assert np.allclose(pr.predictions, want, atol=1e-12)
    assert np.allclose(pr.residuals, want - DATA.y, atol=1e-12)
    assert 0.0 < pr.error < 1.0


def test_predict_perfect_model_scores_zero():
    pr = predict(parse_infix("cos(sqrt(sin(c))) * cos(b) * sin(a) + tan(d - e)"), DATA)
    assert pr.error == pytest.approx(0.0, abs=1e-12)


def test_predict_skips_invalid_rows():
    pr = predict(parse_infix("ln(a - b)"), DATA)
    assert 0 < pr.n_invalid < DATA.n_rows
    for p, ok in zip(pr.predictions, pr.valid):
        assert ok != math.isnan(p)
    assert math.isfinite(pr.error)


def test_predict_all_invalid_gives_infinite_error():
    pr = predict(parse_infix("ln(0 - exp(a))"), DATA)
    assert pr.n_invalid == DATA.n_rows
    assert pr.error == math.inf


def test_predict_frozen_regression_value():
    """Pin one full parse → evaluate → score path to a frozen constant.

    The value was computed twice from scratch (stdlib-random data stream plus
    a straight numpy evaluation, no package code) and both paths agreed to
    2e-16, so any drift here means the pipeline changed behavior.
    """
    data = synth_dataset("tp1", 100, seed=0)
    pr = predict(parse_infix("cos(sin(c) * sqrt(cos(e)))"), data)
    assert pr.n_invalid == 0
    assert pr.error == pytest.approx(1.5018889264104822, abs=1e-12)


def test_predict_chromosome_needs_symbol_set():
    res = run(tiny("gep", generations=2), DATA)
    with pytest.raises(ConfigError):
        predict(res.best.chrom, DATA)
    ss = tiny("gep").symbol_set_for(DATA)
    pr = predict(res.best.chrom, DATA, symbol_set=ss)
    assert pr.error == pytest.approx(res.best.objectives.error, rel=1e-9)


def test_best_individual_is_well_formed():
    res = run(tiny("spea2"), DATA)
    assert isinstance(res.best, Individual)
    cfg = tiny("spea2")
    ss = cfg.symbol_set_for(DATA)
    layout = layout_of(cfg.head_len, ss, cfg.rnc_enabled)
    validate_chromosome(res.best.chrom, layout, ss)
