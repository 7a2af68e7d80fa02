import random

import pytest

from jvmpar.classfile import io
from jvmpar.classfile.asm import ClassBuilder, compute_limits
from jvmpar.classfile.code import decode, encode, layout
from jvmpar.classfile.model import ACC_PUBLIC, ACC_STATIC
from jvmpar.classfile.pool import TAG_CLASS, TAG_METHODREF, TAG_UTF8
from jvmpar.errors import (AbstractMethod, InconsistentModel, MalformedClassfile,
                           NoSuchMethod, UnsupportedVersion)
from support import FIXTURES, fixture_bytes, load_fixture, random_straightline

ALL_FIXTURES = sorted(p.name for p in FIXTURES.glob("*.class"))


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_round_trip_fixture(name):
    data = fixture_bytes(name)
    model = io.parse_class(data)
    assert io.emit_class(model) == data


def test_matmul_has_multiply():
    model = load_fixture("MatMul.class")
    m = model.find_method("multiply", "([[D[[D[[DI)V")
    assert model.method_desc(m) == "([[D[[D[[DI)V"


def test_truncated_magic_rejected():
    with pytest.raises(MalformedClassfile):
        io.parse_class(bytes.fromhex("CAFEBABE"))


def test_wrong_magic_rejected():
    with pytest.raises(MalformedClassfile):
        io.parse_class(b"\x00\x01\x02\x03" + b"\x00" * 16)


def test_unsupported_version():
    data = bytearray(fixture_bytes("MatMul.class"))
    data[6:8] = (90).to_bytes(2, "big")  # absurd major
    with pytest.raises(UnsupportedVersion):
        io.parse_class(bytes(data))


def test_get_code_offsets_monotonic_and_tiling():
    model = load_fixture("NBody.class")
    code = model.get_code("step")
    pos = 0
    for ins in code:
        assert ins.offset == pos
        pos += ins.size()


def test_multiply_starts_with_loop_init():
    code = load_fixture("MatMul.class").get_code("multiply")
    assert code[0].mnemonic == "iconst_0"
    assert code[1].mnemonic.startswith("istore")


def test_empty_method_single_return():
    cb = ClassBuilder("Tiny")
    b = cb.code_builder()
    b.emit("return")
    cb.add_method("f", "()V", ACC_PUBLIC | ACC_STATIC, b)
    model = io.parse_class(io.emit_class(cb.build()))
    assert [i.mnemonic for i in model.get_code("f")] == ["return"]


def test_abstract_method_error():
    cb = ClassBuilder("HasAbstract")
    b = cb.code_builder()
    b.emit("return")
    cb.add_method("f", "()V", ACC_PUBLIC | ACC_STATIC, b)
    model = cb.build()
    m = model.methods[0]
    m.code = None
    with pytest.raises(AbstractMethod):
        model.get_code("f")
    with pytest.raises(NoSuchMethod):
        model.get_code("missing")


def test_branch_to_non_boundary_rejected_on_emit():
    model = load_fixture("Histogram.class")
    code = model.find_method("histogram").code
    branch = next(i for i in code.instructions if i.mnemonic.startswith("if"))
    branch.args = (branch.offset + 1,)  # middle of the 3-byte branch itself
    with pytest.raises(InconsistentModel):
        io.emit_class(model)


def test_pool_index_perturbation_rejected():
    rng = random.Random(9)
    data = bytearray(fixture_bytes("Fft.class"))
    model = io.parse_class(bytes(data))
    hits = 0
    for _ in range(40):
        broken = model.clone()
        pool = broken.pool
        idx = rng.randrange(1, len(pool.entries))
        e = pool.entries[idx]
        if e is None or e.tag not in (TAG_CLASS, TAG_METHODREF):
            continue
        e.a = len(pool.entries) + 5  # dangling
        with pytest.raises((MalformedClassfile, InconsistentModel)):
            io.emit_class(broken)
            io.parse_class(io.emit_class(broken))
        hits += 1
    assert hits > 0


def test_emit_reparse_shows_added_methodref():
    model = load_fixture("MatMul.class")
    idx = model.pool.add_methodref("MatMul$JPTask0", "run", "()V")
    data = io.emit_class(model)
    again = io.parse_class(data)
    assert again.pool.member_ref(idx) == ("MatMul$JPTask0", "run", "()V")


def test_generated_small_classes_round_trip():
    rng = random.Random(4242)
    for k in range(20):
        model, _ = random_straightline(rng, name=f"Rand{k}")
        data = io.emit_class(model)
        assert io.emit_class(io.parse_class(data)) == data


def test_wide_iinc_and_wide_load_round_trip():
    cb = ClassBuilder("Wide")
    b = cb.code_builder()
    b.const_int(7)
    b.emit("istore", 300, wide=True)
    b.emit("iinc", 300, 1000, wide=True)
    b.emit("iload", 300, wide=True)
    b.emit("ireturn")
    cb.add_method("f", "()I", ACC_PUBLIC | ACC_STATIC, b)
    data = io.emit_class(cb.build())
    model = io.parse_class(data)
    assert io.emit_class(model) == data
    wides = [i for i in model.get_code("f") if i.wide]
    assert len(wides) == 3


def test_compute_limits_matches_known_values():
    model = load_fixture("MatMul.class")
    m = model.find_method("multiply")
    ms, ml = compute_limits(m.code.instructions, model.pool, "([[D[[D[[DI)V", True)
    assert ms == m.code.max_stack
    assert ml == m.code.max_locals


def test_decode_encode_identity_on_all_fixture_methods():
    for name in ALL_FIXTURES:
        model = load_fixture(name)
        for m in model.methods:
            raw = encode(m.code.instructions)
            assert decode(raw) == m.code.instructions
