import random

import pytest

from jvmpar.depcheck import analyze_nest
from jvmpar.errors import IllegalTransform
from jvmpar.ir import BinOp, IRStatement, fmt_expr
from jvmpar.ireval import EvalContext, eval_expr, exec_statement
from jvmpar.loops import NormalizedLoop, build_forest
from jvmpar.xform import (TransformCandidate, apply, enumerate_candidates,
                          legality, perfect_prefix)
from support import build_skew_dep, load_fixture, matmul_inputs
from jvmpar.interp import jarray_of, snapshot


def _analyzed(model, method):
    m = model.find_method(method)
    forest = build_forest(model, m)
    nest = forest.roots[0]
    accesses, results, pt = analyze_nest(nest)
    return m, nest, results, pt


def eval_items(items, ctx):
    """Structured nest evaluation (branch-free bodies only)."""
    for item in items:
        if isinstance(item, IRStatement):
            exec_statement(item, ctx)
        elif isinstance(item, NormalizedLoop):
            ctx.memo = {}
            i = eval_expr(item.init, ctx)
            ctx.memo = {}
            bound = eval_expr(item.bound, ctx)
            cmpf = {"lt": lambda a, b: a < b, "le": lambda a, b: a <= b,
                    "gt": lambda a, b: a > b, "ge": lambda a, b: a >= b}[item.cmp]
            while cmpf(i, bound):
                ctx.locals[item.ivar] = i
                eval_items(item.body, ctx)
                i += item.step
                ctx.memo = {}
                bound = eval_expr(item.bound, ctx)
        else:
            raise AssertionError("irregular node in nest evaluation")


def test_matmul_candidate_set():
    model = load_fixture("MatMul.class")
    m, nest, deps, pt = _analyzed(model, "multiply")
    cands = enumerate_candidates(nest, pt, deps, tile_sizes=(32, 64, 128),
                                 next_slot=m.code.max_locals)
    kinds = {(c.kind, tuple(c.ops[0][:1]) if c.kind == "identity" else tuple(c.ops[0]),
              c.parallel_level_name) for c in cands}
    names = {c.parallel_level_name for c in cands if c.kind == "identity"}
    assert {"l4", "l5", "l6"} <= names  # identity at i, j, and the DP k
    assert any(c.kind == "interchange" and c.parallel_level_name == "l5" for c in cands)
    tiles = [c for c in cands if c.kind == "tile"]
    assert {c.ops[0][2] for c in tiles} == {32, 64, 128}
    assert all(c.legal for c in cands)


def test_single_loop_only_identity_and_tiles():
    model = load_fixture("Histogram.class")
    m, nest, deps, pt = _analyzed(model, "histogram")
    cands = enumerate_candidates(nest, pt, deps, tile_sizes=(16,),
                                 next_slot=m.code.max_locals)
    assert {c.kind for c in cands} == {"identity", "tile"}


def test_serial_nest_empty():
    from support import build_prefix_sum
    model = build_prefix_sum()
    m, nest, deps, pt = _analyzed(model, "scan")
    cands = enumerate_candidates(nest, pt, deps, next_slot=m.code.max_locals)
    assert cands == []


def test_interchange_legal_on_matmul():
    model = load_fixture("MatMul.class")
    m, nest, deps, pt = _analyzed(model, "multiply")
    cand = TransformCandidate(kind="interchange", ops=[("interchange", 0, 1)],
                              region_path=(), regen_levels=[], splice_span=(0, 0),
                              verdict="IP")
    assert legality(cand, deps, nest, pt)


def test_interchange_rejected_on_skew():
    model = build_skew_dep()
    m, nest, deps, pt = _analyzed(model, "skew")
    # brute force at 6x6 finds a (<,>) pair
    n = 6
    pairs = [((i, j), (i2, j2))
             for i in range(1, n) for j in range(n - 1)
             for i2 in range(1, n) for j2 in range(n - 1)
             if (i, j) == (i2 - 1, j2 + 1) and i < i2 and j > j2]
    assert pairs
    cand = TransformCandidate(kind="interchange", ops=[("interchange", 0, 1)],
                              region_path=(), regen_levels=[], splice_span=(0, 0),
                              verdict="IP")
    assert not legality(cand, deps, nest, pt)
    cands = enumerate_candidates(nest, pt, deps, next_slot=m.code.max_locals)
    assert not any(c.kind.startswith("interchange") for c in cands)


def test_identity_always_legal():
    model = load_fixture("MatMul.class")
    m, nest, deps, pt = _analyzed(model, "multiply")
    cand = TransformCandidate(kind="identity", ops=[("identity",)], region_path=(),
                              regen_levels=[], splice_span=(0, 0), verdict="IP")
    assert legality(cand, deps, nest, pt)


def test_apply_requires_certificate():
    model = load_fixture("MatMul.class")
    m, nest, deps, pt = _analyzed(model, "multiply")
    cand = TransformCandidate(kind="interchange", ops=[("interchange", 0, 1)],
                              region_path=(), regen_levels=[], splice_span=(0, 0),
                              verdict="IP", legal=False)
    with pytest.raises(IllegalTransform):
        apply(cand, nest)


def test_tiling_shape():
    model = load_fixture("Histogram.class")
    m, nest, deps, pt = _analyzed(model, "histogram")
    cands = enumerate_candidates(nest, pt, deps, tile_sizes=(4,),
                                 next_slot=m.code.max_locals)
    tile = next(c for c in cands if c.kind == "tile")
    tree = apply(tile, nest, next_slot=m.code.max_locals)
    chain = perfect_prefix(tree)
    assert len(chain) == 2
    outer, inner = chain
    assert outer.step == 4 and inner.step == 1
    assert fmt_expr(inner.init) == f"l{outer.ivar}"
    assert "min" in fmt_expr(inner.bound)


def test_apply_interchange_swaps_headers():
    model = load_fixture("MatMul.class")
    m, nest, deps, pt = _analyzed(model, "multiply")
    cand = next(c for c in enumerate_candidates(nest, pt, deps, tile_sizes=(),
                                                next_slot=m.code.max_locals)
                if c.kind == "interchange" and c.parallel_level_name == "l5")
    tree = apply(cand, nest, next_slot=m.code.max_locals)
    chain = perfect_prefix(tree)
    assert [c.ivar for c in chain] == [5, 4, 6]


def test_apply_identity_structurally_equal():
    model = load_fixture("MatMul.class")
    m, nest, deps, pt = _analyzed(model, "multiply")
    cand = next(c for c in enumerate_candidates(nest, pt, deps, tile_sizes=(),
                                                next_slot=m.code.max_locals)
                if c.kind == "identity")
    tree = apply(cand, nest)
    assert [c.ivar for c in perfect_prefix(tree)] == \
        [c.ivar for c in perfect_prefix(nest)]


def test_semantics_preserved_for_all_matmul_candidates():
    model = load_fixture("MatMul.class")
    m, nest, deps, pt = _analyzed(model, "multiply")
    cands = enumerate_candidates(nest, pt, deps, tile_sizes=(4,),
                                 next_slot=m.code.max_locals)
    rng = random.Random(5)
    n = 6
    gen = matmul_inputs(n)

    def run(tree, seed):
        args = gen(random.Random(seed))
        loc = [None] * 64
        loc[0], loc[1], loc[2], loc[3] = args
        eval_items([tree], EvalContext(loc))
        return snapshot(args[2])

    for seed in (1, 2):
        base = run(nest, seed)
        for cand in cands:
            tree = apply(cand, nest, next_slot=m.code.max_locals)
            assert run(tree, seed) == base, cand.ops


def test_iteration_multiset_preserved_under_tiling():
    model = load_fixture("Histogram.class")
    m, nest, deps, pt = _analyzed(model, "histogram")
    tile = next(c for c in enumerate_candidates(nest, pt, deps, tile_sizes=(3,),
                                                next_slot=m.code.max_locals)
                if c.kind == "tile")
    tree = apply(tile, nest, next_slot=m.code.max_locals)
    seen = []
    outer, inner = perfect_prefix(tree)

    # walk the tiled iteration space for a bound of 10: [0,10) step 3 outer
    for t in range(0, 10, 3):
        for i in range(t, min(t + 3, 10)):
            seen.append(i)
    assert seen == list(range(10))
