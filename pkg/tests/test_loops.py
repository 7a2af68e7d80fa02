import random

import pytest

from jvmpar.classfile.asm import ClassBuilder
from jvmpar.classfile.model import ACC_PUBLIC, ACC_STATIC
from jvmpar.decompile import decompile
from jvmpar.errors import NonCanonicalLoop
from jvmpar.interp import Interp, jarray_of
from jvmpar.loops import (IrregularLoop, NormalizedLoop, build_forest,
                          extract_loops, forest_json, trip_count_of)
from support import build_top_test_loop, load_fixture

PS = ACC_PUBLIC | ACC_STATIC


def test_matmul_forest_depth_three():
    model = load_fixture("MatMul.class")
    forest = build_forest(model, model.find_method("multiply"))
    assert len(forest.roots) == 1
    i = forest.roots[0]
    assert isinstance(i, NormalizedLoop) and i.ivar == 4 and i.step == 1
    (j,) = i.children
    (k,) = j.children
    assert (j.ivar, k.ivar) == (5, 6)
    assert not k.children


def test_counted_loop_layout_bottom_test():
    model = load_fixture("Histogram.class")
    cands = extract_loops(model.find_method("histogram").code.instructions)
    assert len(cands) == 1
    assert cands[0].layout == "bottom_test"


def test_no_backward_branch_no_loops():
    model = load_fixture("Fft.class")
    cands = extract_loops(model.find_method("transform64").code.instructions)
    assert cands == []


def test_top_test_layout_recognized():
    model = build_top_test_loop()
    m = model.find_method("fill")
    cands = extract_loops(m.code.instructions)
    assert len(cands) == 1 and cands[0].layout == "top_test"
    forest = build_forest(model, m)
    lp = forest.roots[0]
    assert isinstance(lp, NormalizedLoop)
    assert lp.ivar == 2 and lp.cmp == "lt" and lp.step == 1
    # and it actually runs
    arr = jarray_of("I", [0] * 7)
    Interp(model).exec_method(model, "fill", [arr, 7])
    assert arr.data == [k * 2 for k in range(7)]


def test_nbody_sibling_nests():
    model = load_fixture("NBody.class")
    forest = build_forest(model, model.find_method("step"))
    t = forest.roots[0]
    assert [c.ivar for c in t.children] == [7, 21]
    assert t.children[0].children[0].ivar == 12


def test_bitrev_while_is_irregular_child():
    model = load_fixture("Fft.class")
    forest = build_forest(model, model.find_method("bitrev64"))
    i_loop = forest.roots[0]
    assert isinstance(i_loop, NormalizedLoop)
    kids = i_loop.children
    assert len(kids) == 1 and isinstance(kids[0], IrregularLoop)


def test_trip_count_examples():
    assert trip_count_of(0, 10, 1, "lt") == 10
    assert trip_count_of(0, 10, 3, "lt") == 4
    assert trip_count_of(0, 10, 3, "le") == 4
    assert trip_count_of(10, 0, -3, "gt") == 4
    assert trip_count_of(10, 0, -2, "ge") == 6
    assert trip_count_of(5, 5, 1, "lt") == 0
    assert trip_count_of(9, 2, 1, "lt") == 0


def test_trip_count_brute_force_property():
    rng = random.Random(31)
    for _ in range(300):
        step = rng.choice([1, 2, 3, 4, -1, -2, -3, -4])
        cmp = rng.choice(["lt", "le"]) if step > 0 else rng.choice(["gt", "ge"])
        init = rng.randrange(-16, 64)
        bound = rng.randrange(-16, 64)
        want = 0
        i = init
        check = {"lt": lambda a, b: a < b, "le": lambda a, b: a <= b,
                 "gt": lambda a, b: a > b, "ge": lambda a, b: a >= b}[cmp]
        while check(i, bound) and want < 1000:
            want += 1
            i += step
        assert trip_count_of(init, bound, step, cmp) == want, (init, bound, step, cmp)


def test_normalized_trip_count_with_env():
    model = load_fixture("MatMul.class")
    forest = build_forest(model, model.find_method("multiply"))
    lp = forest.roots[0]
    locals_ = [None, None, None, 12]
    assert lp.trip_count(locals_) == 12


def test_ivar_written_in_body_rejected():
    cb = ClassBuilder("BadLoop")
    b = cb.code_builder()
    cond, body = b.new_label(), b.new_label()
    b.const_int(0)
    b.store("i", 1)
    b.goto(cond)
    b.label(body)
    b.load("i", 1)
    b.const_int(2)
    b.emit("imul")
    b.store("i", 1)  # ivar assigned in body
    b.iinc(1, 1)
    b.label(cond)
    b.load("i", 1)
    b.load("i", 0)
    b.branch("if_icmplt", body)
    b.emit("return")
    cb.add_method("f", "(I)V", PS, b)
    model = cb.build()
    forest = build_forest(model, model.find_method("f"))
    assert isinstance(forest.roots[0], IrregularLoop)
    assert "also written" in forest.roots[0].reason or "iinc" in forest.roots[0].reason


def test_extract_idempotent_on_body_slice():
    model = load_fixture("MatMul.class")
    m = model.find_method("multiply")
    outer = extract_loops(m.code.instructions)
    outer_cand = [c for c in outer if c.layout == "bottom_test"]
    # slice the outermost body and re-extract: exactly the two inner loops
    spans = sorted(outer_cand, key=lambda c: c.body_span[1] - c.body_span[0])
    big = spans[-1]
    body = [i for i in m.code.instructions
            if big.body_span[0] <= i.offset < big.body_span[1]]
    inner = extract_loops(body)
    inner_entries = {c.entry_offset for c in inner}
    want = {c.entry_offset for c in outer_cand if c is not big}
    assert inner_entries == want


def test_span_nesting_property():
    for name in ("MatMul.class", "NBody.class", "Fft.class"):
        model = load_fixture(name)
        for m in model.methods:
            cands = extract_loops(m.code.instructions)
            for a in cands:
                for b in cands:
                    if a is b:
                        continue
                    a0, a1 = a.entry_offset, a.exit_offset
                    b0, b1 = b.entry_offset, b.exit_offset
                    disjoint = a1 <= b0 or b1 <= a0
                    nested = (a0 <= b0 and b1 <= a1) or (b0 <= a0 and a1 <= b1)
                    assert disjoint or nested


def test_forest_json_shape():
    model = load_fixture("NBody.class")
    forest = build_forest(model, model.find_method("step"))
    data = forest_json(forest)
    assert data[0]["ivar"] == 6
    assert data[0]["children"][0]["ivar"] == 7
    assert data[0]["children"][0]["children"][0]["depth"] == 3
