import random

import pytest

from jvmpar.classfile.asm import ClassBuilder
from jvmpar.classfile.io import emit_class, parse_class
from jvmpar.classfile.model import ACC_PUBLIC, ACC_STATIC
from jvmpar.depcheck import analyze_nest
from jvmpar.errors import CaptureFailure, UnsupportedReduction
from jvmpar.interp import (Interp, Schedule, check_equivalence, exec_parallel,
                           jarray_of, new_array, snapshot)
from jvmpar.loops import build_forest
from jvmpar.parcodegen import emit_variant, make_chunks
from jvmpar.xform import enumerate_candidates
from support import histogram_inputs, load_fixture, matmul_inputs

PS = ACC_PUBLIC | ACC_STATIC


def test_make_chunks_examples():
    assert make_chunks(10, 3).chunks == [(0, 4), (4, 8), (8, 10)]
    spec = make_chunks(4, 8)
    assert spec.chunks[:4] == [(0, 1), (1, 2), (2, 3), (3, 4)]
    assert all(lo == hi for lo, hi in spec.chunks[4:])
    assert all(lo == hi == 0 for lo, hi in make_chunks(0, 4).chunks)


def test_chunks_partition_property():
    rng = random.Random(3)
    for _ in range(200):
        trip = rng.randrange(0, 50)
        n = rng.randrange(1, 9)
        spec = make_chunks(trip, n)
        seen = []
        for lo, hi in spec.chunks:
            seen.extend(range(lo, hi))
        assert seen == list(range(trip))


def _variant_for(model, method, desc, kind="identity", n_workers=4, tiles=(8,),
                 which=0, strategy="block"):
    m = model.find_method(method)
    forest = build_forest(model, m)
    nest = forest.roots[which]
    _, deps, pt = analyze_nest(nest)
    cands = enumerate_candidates(nest, pt, deps, tile_sizes=tiles,
                                 next_slot=m.code.max_locals)
    cand = next(c for c in cands if c.kind == kind)
    return emit_variant(model, method, desc, nest, cand, n_workers, strategy), nest


def test_single_loop_store_any_schedule():
    # a[i] = i over T=6 with N=2: result identical under all 20 permutations
    cb = ClassBuilder("Fill")
    b = cb.code_builder()
    cond, body = b.new_label(), b.new_label()
    b.const_int(0)
    b.store("i", 1)
    b.goto(cond)
    b.label(body)
    b.load("a", 0)
    b.load("i", 1)
    b.load("i", 1)
    b.emit("iastore")
    b.iinc(1, 1)
    b.label(cond)
    b.load("i", 1)
    b.const_int(6)
    b.branch("if_icmplt", body)
    b.emit("return")
    cb.add_method("fill", "([I)V", PS, b)
    model = cb.build()
    variant, _ = _variant_for(model, "fill", "([I)V", n_workers=2, tiles=())
    import itertools
    for perm in itertools.permutations(range(2)):
        arr = new_array("I", 6)
        exec_parallel(variant, "fill", [arr], Schedule(permutation=list(perm)))
        assert arr.data == [0, 1, 2, 3, 4, 5]
    # a few random multi-trial permutations for good measure
    rep = check_equivalence(model, "fill", variant,
                            lambda rng: [new_array("I", 6)], n_schedules=20)
    assert rep.ok


def test_matmul_ip_four_tasks_cover_rows():
    model = load_fixture("MatMul.class")
    variant, _ = _variant_for(model, "multiply", "([[D[[D[[DI)V", n_workers=4,
                              tiles=())
    assert len(variant.tasks) == 4
    assert [t.name for t in variant.tasks] == [f"MatMul$JPTask{k}" for k in range(4)]
    gen = matmul_inputs(16)
    rep = check_equivalence(model, "multiply", variant, gen, n_schedules=4)
    assert rep.ok
    # step profile: all four workers ran
    args = gen(random.Random(0))
    _, _, interp = exec_parallel(variant, "multiply", args)
    assert len(interp.task_steps) == 4
    assert all(v > 0 for v in interp.task_steps.values())


def test_zero_trip_loop_falls_through():
    model = load_fixture("MatMul.class")
    variant, _ = _variant_for(model, "multiply", "([[D[[D[[DI)V", n_workers=4,
                              tiles=())
    gen = matmul_inputs(0)
    args = [jarray_of("[D", []), jarray_of("[D", []), jarray_of("[D", []), 0]
    ret, _, interp = exec_parallel(variant, "multiply", args)
    assert ret is None  # no trap; empty chunks executed no body


def test_histogram_dp_exact_merge():
    model = load_fixture("Histogram.class")
    variant, _ = _variant_for(model, "histogram", "([I[I)V", n_workers=4, tiles=())
    assert variant.plan["mode"] == "DP"
    gen = histogram_inputs(4096, 16)
    rep = check_equivalence(model, "histogram", variant, gen, n_schedules=6)
    assert rep.ok

    # merged bins equal serial exactly, and pre-filled bins are preserved
    data = jarray_of("I", [k % 31 for k in range(500)])
    hist = jarray_of("I", [5] * 16)
    serial = jarray_of("I", [5] * 16)
    Interp(model).exec_method(model, "histogram",
                              [jarray_of("I", list(data.data)), serial])
    exec_parallel(variant, "histogram", [data, hist])
    assert hist.data == serial.data


def test_dp_scalar_partials_merge_in_worker_order():
    model = load_fixture("NBody.class")
    m = model.find_method("step")
    forest = build_forest(model, m)
    nest = forest.roots[0]
    _, deps, pt = analyze_nest(nest)
    cands = enumerate_candidates(nest, pt, deps, tile_sizes=(),
                                 next_slot=m.code.max_locals)
    dp = next(c for c in cands if c.verdict == "DP")
    variant = emit_variant(model, "step", "([D[D[D[D[DI)V", nest, dp, 3)
    # partial fields exist on every task class
    for t in variant.tasks:
        names = {t.pool.utf8(f.name_index) for f in t.fields}
        assert "partial8" in names and "partial10" in names


def test_cyclic_strategy_equivalent():
    model = load_fixture("MatMul.class")
    variant, _ = _variant_for(model, "multiply", "([[D[[D[[DI)V", n_workers=3,
                              tiles=(), strategy="cyclic")
    assert variant.plan["strategy"] == "cyclic"
    rep = check_equivalence(model, "multiply", variant, matmul_inputs(10),
                            n_schedules=4)
    assert rep.ok


def test_structural_validity_of_emitted_classes():
    model = load_fixture("MatMul.class")
    variant, _ = _variant_for(model, "multiply", "([[D[[D[[DI)V", tiles=(8,),
                              kind="tile")
    for name, cm in variant.classes().items():
        data = emit_class(cm)
        again = parse_class(data)
        assert emit_class(again) == data
        again.pool.validate()
    driver = variant.driver
    names = {driver.method_name(m) for m in driver.methods}
    assert "multiply$serial" in names
    assert driver.major <= 49


def test_min_reduction_empty_chunk_identity():
    # scalar min over a loop with fewer iterations than workers
    cb = ClassBuilder("MinRed")
    b = cb.code_builder()
    cond, body = b.new_label(), b.new_label()
    # m = x[0]; for (i=1; i<x.length; i++) m = Math.min(m, x[i]); y[0] = m
    # slots: x=0, y=1, i=2, m=3
    b.load("a", 0)
    b.const_int(0)
    b.emit("iaload")
    b.store("i", 3)
    b.const_int(1)
    b.store("i", 2)
    b.goto(cond)
    b.label(body)
    b.load("i", 3)
    b.load("a", 0)
    b.load("i", 2)
    b.emit("iaload")
    b.invoke("invokestatic", "java/lang/Math", "min", "(II)I")
    b.store("i", 3)
    b.iinc(2, 1)
    b.label(cond)
    b.load("i", 2)
    b.load("a", 0)
    b.emit("arraylength")
    b.branch("if_icmplt", body)
    b.load("a", 1)
    b.const_int(0)
    b.load("i", 3)
    b.emit("iastore")
    b.emit("return")
    cb.add_method("minred", "([I[I)V", PS, b)
    model = cb.build()
    variant, _ = _variant_for(model, "minred", "([I[I)V", n_workers=8, tiles=())
    assert variant.plan["mode"] == "DP"

    def gen(rng):
        # only 3 iterations for 8 workers: empty chunks contribute the identity
        return [jarray_of("I", [rng.randrange(-50, 50) for _ in range(4)]),
                new_array("I", 1)]

    rep = check_equivalence(model, "minred", variant, gen, n_schedules=10)
    assert rep.ok, rep.detail


def test_live_out_violation_rejected():
    # t = a[i] inside the loop, t read after the loop: refuse to parallelize
    cb = ClassBuilder("LiveOut")
    b = cb.code_builder()
    cond, body = b.new_label(), b.new_label()
    b.const_int(0)
    b.store("i", 1)
    b.const_int(0)
    b.store("i", 2)
    b.goto(cond)
    b.label(body)
    b.load("a", 0)
    b.load("i", 1)
    b.emit("iaload")
    b.store("i", 2)       # t = a[i]  (last value observable)
    b.load("a", 0)
    b.load("i", 1)
    b.load("i", 2)
    b.emit("iastore")     # keeps the loop otherwise parallel-looking
    b.iinc(1, 1)
    b.label(cond)
    b.load("i", 1)
    b.load("a", 0)
    b.emit("arraylength")
    b.branch("if_icmplt", body)
    b.load("i", 2)
    b.emit("ireturn")     # reads t after the loop
    cb.add_method("f", "([I)I", PS, b)
    model = cb.build()
    m = model.find_method("f")
    forest = build_forest(model, m)
    nest = forest.roots[0]
    _, deps, pt = analyze_nest(nest)
    cands = enumerate_candidates(nest, pt, deps, tile_sizes=(),
                                 next_slot=m.code.max_locals)
    if cands:  # classification may already serialize it; if not, codegen must
        with pytest.raises(CaptureFailure):
            emit_variant(model, "f", "([I)I", nest, cands[0], 2)


def test_multidim_reduction_unsupported():
    model = load_fixture("MatMul.class")
    m = model.find_method("multiply")
    forest = build_forest(model, m)
    nest = forest.roots[0]
    _, deps, pt = analyze_nest(nest)
    cands = enumerate_candidates(nest, pt, deps, tile_sizes=(),
                                 next_slot=m.code.max_locals)
    k_dp = next(c for c in cands if c.verdict == "DP" and c.kind == "identity")
    with pytest.raises(UnsupportedReduction):
        emit_variant(model, "multiply", "([[D[[D[[DI)V", nest, k_dp, 2)


def test_deterministic_emission():
    model = load_fixture("Histogram.class")
    v1, _ = _variant_for(model, "histogram", "([I[I)V", tiles=())
    v2, _ = _variant_for(model, "histogram", "([I[I)V", tiles=())
    assert emit_class(v1.driver) == emit_class(v2.driver)
    for a, b in zip(v1.tasks, v2.tasks):
        assert emit_class(a) == emit_class(b)
