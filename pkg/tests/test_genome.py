"""Gene layout, Karva decoding and rendering."""

import random

import pytest

from kexpr.errors import ConfigError
from kexpr.genome import (
    Call,
    Chromosome,
    Const,
    FUNCTION_SETS,
    Gene,
    GeneLayout,
    SymbolSet,
    Var,
    chromosome_size,
    decode,
    decoded_trees,
    expressed_length,
    function_set,
    layout_of,
    linked_tree,
    render,
    tree_size,
    validate_chromosome,
    validate_gene,
)

TP_SET = SymbolSet(
    functions=FUNCTION_SETS["tp"],
    variables=("a", "b", "c", "d", "e"),
    n_constants=2,
    constant_range=(-10.0, 10.0),
)

DEW_SET = SymbolSet(
    functions=FUNCTION_SETS["dew"],
    variables=("d0", "d1"),
    n_constants=2,
    constant_range=(-10.0, 10.0),
)


def code_of(symbol_set, label):
    for c in range(symbol_set.n_codes):
        if symbol_set.label(c) == label:
            return c
    raise AssertionError(f"no code for {label!r}")


def gene_from_labels(symbol_set, labels, dc, constants):
    return Gene(
        symbols=tuple(code_of(symbol_set, s) for s in labels),
        dc=tuple(dc),
        constants=tuple(constants),
    )


def test_tail_length_formula():
    lay = layout_of(8, TP_SET)
    assert lay.head_len == 8
    assert lay.max_arity == 2
    assert lay.tail_len == 9
    assert lay.dc_len == 9
    assert lay.n_symbols == 17


def test_layout_without_rnc_has_no_dc():
    lay = layout_of(8, TP_SET, rnc_enabled=False)
    assert lay.dc_len == 0
    assert lay.n_symbols == 17


def test_layout_head_4():
    lay = layout_of(4, DEW_SET)
    assert (lay.tail_len, lay.dc_len, lay.n_symbols) == (5, 5, 9)


def test_layout_rejects_nonpositive_head():
    with pytest.raises(ConfigError):
        layout_of(0, TP_SET)


def test_symbol_set_code_ranges():
    # layout: functions first, then variables, constants at the end
    n_fn = len(TP_SET.functions)
    assert all(TP_SET.is_function(c) for c in range(n_fn))
    assert all(TP_SET.is_variable(c) for c in range(n_fn, n_fn + 5))
    assert all(TP_SET.is_constant(c) for c in range(n_fn + 5, TP_SET.n_codes))
    assert TP_SET.n_codes == n_fn + 5 + 2


def test_function_set_lookup():
    names = [f.name for f in function_set("dew")]
    assert names == ["add", "mul", "ln", "div", "exp"]
    with pytest.raises(ConfigError):
        function_set("nope")


def test_decode_single_terminal():
    g = gene_from_labels(DEW_SET, ["d0"] + ["d1"] * 8, [0] * 5, [1.0, 2.0])
    assert decode(g, DEW_SET) == Var("d0")
    assert expressed_length(g, DEW_SET) == 1


def test_decode_breadth_first():
    # +.*.d0.d1.d1.d0... reads level by level: add(mul(d1, d1), d0)
    g = gene_from_labels(
        DEW_SET,
        ["+", "*", "d0", "d1", "d1", "d0", "d0", "d0", "d0"],
        [0] * 5,
        [1.0, 2.0],
    )
    tree = decode(g, DEW_SET)
    assert tree == Call("add", (Call("mul", (Var("d1"), Var("d1"))), Var("d0")))
    assert expressed_length(g, DEW_SET) == 5


def test_decode_binds_constant_values():
    """A constant symbol decodes to the value stored in its own slot."""
    g = gene_from_labels(
        DEW_SET,
        ["*", "ln", "C1", "d0", "C0", "C1", "d1", "d1", "C1"],
        [0, 1, 0, 1, 0],
        [-1.0538681881248397, -9.381786492548889],
    )
    tree = decode(g, DEW_SET)
    assert tree == Call(
        "mul",
        (Call("ln", (Var("d0"),)), Const(-9.381786492548889)),
    )
    assert expressed_length(g, DEW_SET) == 4


def test_expressed_region_ignores_tail_noise():
    """Two genes identical in the expressed prefix decode identically."""
    base = ["+", "d0", "d1"]
    g1 = gene_from_labels(DEW_SET, base + ["d0"] * 6, [0] * 5, [1.0, 2.0])
    g2 = gene_from_labels(DEW_SET, base + ["C1"] * 6, [1] * 5, [1.0, 2.0])
    assert decode(g1, DEW_SET) == decode(g2, DEW_SET)


def test_unary_function_consumes_one_slot():
    g = gene_from_labels(
        DEW_SET, ["ln", "exp", "d1", "d0", "d0", "d0", "d0", "d0", "d0"],
        [0] * 5, [1.0, 2.0],
    )
    assert decode(g, DEW_SET) == Call("ln", (Call("exp", (Var("d1"),)),))
    assert expressed_length(g, DEW_SET) == 3


def test_tree_size_counts_every_node():
    tree = Call("add", (Call("mul", (Var("x"), Const(2.0))), Var("y")))
    assert tree_size(tree) == 5
    assert tree_size(Var("x")) == 1


def test_chromosome_size_sums_expressed_lengths():
    g_small = gene_from_labels(DEW_SET, ["d0"] + ["d1"] * 8, [0] * 5, [1.0, 2.0])
    g_five = gene_from_labels(
        DEW_SET,
        ["+", "*", "d0", "d1", "d1", "d0", "d0", "d0", "d0"],
        [0] * 5,
        [1.0, 2.0],
    )
    ch = Chromosome(genes=(g_small, g_five))
    assert chromosome_size(ch, DEW_SET) == 6


def test_linked_tree_joins_with_linking_function():
    g = gene_from_labels(DEW_SET, ["d0"] + ["d1"] * 8, [0] * 5, [1.0, 2.0])
    ch = Chromosome(genes=(g, g, g))
    tree = linked_tree(ch, DEW_SET)
    assert tree == Call("add", (Call("add", (Var("d0"), Var("d0"))), Var("d0")))
    assert decoded_trees(ch, DEW_SET) == [Var("d0")] * 3


def test_single_gene_chromosome_has_no_link():
    g = gene_from_labels(DEW_SET, ["d0"] + ["d1"] * 8, [0] * 5, [1.0, 2.0])
    ch = Chromosome(genes=(g,))
    assert linked_tree(ch, DEW_SET) == Var("d0")


def test_chromosome_needs_a_gene():
    with pytest.raises(ConfigError):
        Chromosome(genes=())


def test_render_karva_layout():
    g2 = gene_from_labels(
        DEW_SET,
        ["*", "ln", "C1", "d0", "C0", "C1", "d1", "d1", "C1"],
        [0, 1, 0, 1, 0],
        [-1.0538681881248397, -9.381786492548889],
    )
    g0 = gene_from_labels(DEW_SET, ["d0"] * 9, [0] * 5, [1.5, 2.5])
    ch = Chromosome(genes=(g0, g2))
    text = render(ch, DEW_SET, style="karva")
    lines = text.splitlines()
    assert lines[0] == "Gene 0"
    assert lines[1] == "d0.d0.d0.d0.d0.d0.d0.d0.d0"
    assert lines[4] == "Gene 1"
    assert lines[5] == "*.ln.C1.d0.C0.C1.d1.d1.C1"
    assert lines[6] == "C0: -1.0538681881248397"
    assert lines[7] == "C1: -9.381786492548889"


def test_render_infix():
    g2 = gene_from_labels(
        DEW_SET,
        ["*", "ln", "C1", "d0", "C0", "C1", "d1", "d1", "C1"],
        [0, 1, 0, 1, 0],
        [-1.0538681881248397, -9.381786492548889],
    )
    g0 = gene_from_labels(DEW_SET, ["d0"] * 9, [0] * 5, [1.5, 2.5])
    ch = Chromosome(genes=(g0, g2))
    assert render(ch, DEW_SET) == "(d0)+((ln(d0)*-9.381786492548889))"


def test_render_rejects_unknown_style():
    g = gene_from_labels(DEW_SET, ["d0"] * 9, [0] * 5, [1.0, 2.0])
    with pytest.raises(ConfigError):
        render(Chromosome(genes=(g,)), DEW_SET, style="latex")


def test_validate_gene_checks_lengths():
    lay = layout_of(4, DEW_SET)
    good = gene_from_labels(DEW_SET, ["d0"] * 9, [0] * 5, [1.0, 2.0])
    validate_gene(good, lay, DEW_SET)

    with pytest.raises(ConfigError):
        validate_gene(
            gene_from_labels(DEW_SET, ["d0"] * 8, [0] * 5, [1.0, 2.0]),
            lay, DEW_SET,
        )
    with pytest.raises(ConfigError):
        validate_gene(
            gene_from_labels(DEW_SET, ["d0"] * 9, [0] * 4, [1.0, 2.0]),
            lay, DEW_SET,
        )
    with pytest.raises(ConfigError):
        validate_gene(
            gene_from_labels(DEW_SET, ["d0"] * 9, [0] * 5, [1.0]),
            lay, DEW_SET,
        )


def test_validate_gene_rejects_function_in_tail():
    lay = layout_of(4, DEW_SET)
    bad = gene_from_labels(
        DEW_SET, ["d0", "d0", "d0", "d0", "+", "d0", "d0", "d0", "d0"],
        [0] * 5, [1.0, 2.0],
    )
    with pytest.raises(ConfigError):
        validate_gene(bad, lay, DEW_SET)


def test_validate_gene_rejects_bad_codes():
    lay = layout_of(4, DEW_SET)
    bad_sym = Gene(symbols=(99,) * 9, dc=(0,) * 5, constants=(1.0, 2.0))
    with pytest.raises(ConfigError):
        validate_gene(bad_sym, lay, DEW_SET)
    bad_dc = gene_from_labels(DEW_SET, ["d0"] * 9, [7] * 5, [1.0, 2.0])
    with pytest.raises(ConfigError):
        validate_gene(bad_dc, lay, DEW_SET)


def test_validate_chromosome_covers_all_genes():
    lay = layout_of(4, DEW_SET)
    good = gene_from_labels(DEW_SET, ["d0"] * 9, [0] * 5, [1.0, 2.0])
    bad = gene_from_labels(DEW_SET, ["d0"] * 8, [0] * 5, [1.0, 2.0])
    validate_chromosome(Chromosome(genes=(good, good)), lay, DEW_SET)
    with pytest.raises(ConfigError):
        validate_chromosome(Chromosome(genes=(good, bad)), lay, DEW_SET)


def test_decode_random_genes_always_closes():
    """Any head/tail-legal gene decodes without running off the end."""
    rng = random.Random(7)
    lay = layout_of(8, TP_SET)
    n_fn = len(TP_SET.functions)
    for _ in range(300):
        head = [rng.randrange(TP_SET.n_codes) for _ in range(lay.head_len)]
        tail = [n_fn + rng.randrange(TP_SET.n_codes - n_fn) for _ in range(lay.tail_len)]
        g = Gene(
            symbols=tuple(head + tail),
            dc=tuple(rng.randrange(2) for _ in range(lay.dc_len)),
            constants=(rng.uniform(-10, 10), rng.uniform(-10, 10)),
        )
        validate_gene(g, lay, TP_SET)
        tree = decode(g, TP_SET)
        assert tree_size(tree) == expressed_length(g, TP_SET)
