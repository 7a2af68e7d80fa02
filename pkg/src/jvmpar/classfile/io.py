"""Classfile reader/writer (big-endian, magic 0xCAFEBABE).

parse_class/emit_class round-trip byte-identically on unmodified models:
unknown attributes are kept as opaque blobs, pool entries keep raw payloads,
and the code codec preserves exact instruction forms.
"""

from __future__ import annotations

import struct

from ..errors import InconsistentModel, MalformedClassfile, UnsupportedVersion
from . import code as codec
from .model import AttributeEntry, ClassModel, CodeAttr, FieldEntry, MethodEntry
from .pool import (ConstantPool, CpEntry, TAG_CLASS, TAG_DOUBLE, TAG_DYNAMIC,
                   TAG_FIELDREF, TAG_FLOAT, TAG_IFACEMETHODREF, TAG_INTEGER,
                   TAG_INVOKEDYNAMIC, TAG_LONG, TAG_METHODHANDLE,
                   TAG_METHODREF, TAG_METHODTYPE, TAG_MODULE, TAG_NAMEANDTYPE,
                   TAG_PACKAGE, TAG_STRING, TAG_UTF8)

MAGIC = 0xCAFEBABE
MIN_MAJOR = 45
MAX_MAJOR = 65
EMIT_MAJOR = 49  # generated classes: no StackMapTable required


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedClassfile(
                f"truncated classfile: need {n} bytes at {self.pos}, have {len(self.data) - self.pos}")
        b = self.data[self.pos:self.pos + n]
        self.pos += n
        return b

    def u1(self) -> int:
        return self._take(1)[0]

    def u2(self) -> int:
        return struct.unpack(">H", self._take(2))[0]

    def u4(self) -> int:
        return struct.unpack(">I", self._take(4))[0]

    def raw(self, n: int) -> bytes:
        return self._take(n)


def _read_pool(r: _Reader) -> ConstantPool:
    pool = ConstantPool()
    count = r.u2()
    i = 1
    while i < count:
        tag = r.u1()
        if tag == TAG_UTF8:
            length = r.u2()
            e = CpEntry(tag, raw=r.raw(length))
        elif tag in (TAG_INTEGER, TAG_FLOAT):
            e = CpEntry(tag, raw=r.raw(4))
        elif tag in (TAG_LONG, TAG_DOUBLE):
            e = CpEntry(tag, raw=r.raw(8))
        elif tag in (TAG_CLASS, TAG_STRING, TAG_METHODTYPE, TAG_MODULE, TAG_PACKAGE):
            e = CpEntry(tag, a=r.u2())
        elif tag in (TAG_FIELDREF, TAG_METHODREF, TAG_IFACEMETHODREF,
                     TAG_NAMEANDTYPE, TAG_DYNAMIC, TAG_INVOKEDYNAMIC):
            e = CpEntry(tag, a=r.u2(), b=r.u2())
        elif tag == TAG_METHODHANDLE:
            e = CpEntry(tag, a=r.u1(), b=r.u2())
        else:
            raise MalformedClassfile(f"unknown constant pool tag {tag} at entry {i}")
        pool.entries.append(e)
        i += 1
        if e.is_wide():
            pool.entries.append(None)
            i += 1
    return pool


def _read_attributes(r: _Reader) -> list[AttributeEntry]:
    count = r.u2()
    out = []
    for _ in range(count):
        name_index = r.u2()
        length = r.u4()
        out.append(AttributeEntry(name_index, r.raw(length)))
    return out


def _parse_code_attr(data: bytes) -> CodeAttr:
    r = _Reader(data)
    max_stack = r.u2()
    max_locals = r.u2()
    code_len = r.u4()
    code_bytes = r.raw(code_len)
    instrs = codec.decode(code_bytes)
    codec.validate_targets(instrs)
    exc_count = r.u2()
    exc = [(r.u2(), r.u2(), r.u2(), r.u2()) for _ in range(exc_count)]
    attrs = _read_attributes(r)
    return CodeAttr(max_stack, max_locals, instrs, exc, attrs)


def parse_class(data: bytes) -> ClassModel:
    r = _Reader(data)
    magic = r.u4()
    if magic != MAGIC:
        raise MalformedClassfile(f"bad magic 0x{magic:08X}")
    minor = r.u2()
    major = r.u2()
    if not MIN_MAJOR <= major <= MAX_MAJOR:
        raise UnsupportedVersion(f"class major version {major} outside {MIN_MAJOR}..{MAX_MAJOR}")
    pool = _read_pool(r)
    access_flags = r.u2()
    this_class = r.u2()
    super_class = r.u2()
    interfaces = [r.u2() for _ in range(r.u2())]
    fields = []
    for _ in range(r.u2()):
        af, ni, di = r.u2(), r.u2(), r.u2()
        fields.append(FieldEntry(af, ni, di, _read_attributes(r)))
    methods = []
    for _ in range(r.u2()):
        af, ni, di = r.u2(), r.u2(), r.u2()
        attrs = _read_attributes(r)
        code = None
        code_pos = 0
        rest = []
        for a in attrs:
            if pool.utf8(a.name_index) == "Code" and code is None:
                code = _parse_code_attr(a.data)
                code_pos = len(rest)
            else:
                rest.append(a)
        methods.append(MethodEntry(af, ni, di, code, rest, code_pos))
    attributes = _read_attributes(r)
    if r.pos != len(data):
        raise MalformedClassfile(f"{len(data) - r.pos} trailing bytes after class structure")
    model = ClassModel(magic, minor, major, pool, access_flags, this_class,
                       super_class, interfaces, fields, methods, attributes)
    pool.validate()
    pool.class_name(this_class)
    if super_class:
        pool.class_name(super_class)
    for m in methods:
        pool.utf8(m.name_index)
        pool.utf8(m.descriptor_index)
    for f in fields:
        pool.utf8(f.name_index)
        pool.utf8(f.descriptor_index)
    return model


def _emit_pool(pool: ConstantPool, w: bytearray) -> None:
    w += struct.pack(">H", len(pool.entries))
    for e in pool.entries[1:]:
        if e is None:
            continue
        w.append(e.tag)
        if e.tag == TAG_UTF8:
            w += struct.pack(">H", len(e.raw))
            w += e.raw
        elif e.tag in (TAG_INTEGER, TAG_FLOAT, TAG_LONG, TAG_DOUBLE):
            w += e.raw
        elif e.tag in (TAG_CLASS, TAG_STRING, TAG_METHODTYPE, TAG_MODULE, TAG_PACKAGE):
            w += struct.pack(">H", e.a)
        elif e.tag == TAG_METHODHANDLE:
            w += struct.pack(">BH", e.a, e.b)
        else:
            w += struct.pack(">HH", e.a, e.b)


def _emit_attributes(attrs: list[AttributeEntry], w: bytearray) -> None:
    w += struct.pack(">H", len(attrs))
    for a in attrs:
        w += struct.pack(">HI", a.name_index, len(a.data))
        w += a.data


def _emit_code_attr(model: ClassModel, code: CodeAttr) -> bytes:
    body = bytearray()
    body += struct.pack(">HH", code.max_stack, code.max_locals)
    encoded = codec.encode(code.instructions)
    body += struct.pack(">I", len(encoded))
    body += encoded
    body += struct.pack(">H", len(code.exception_table))
    for row in code.exception_table:
        body += struct.pack(">HHHH", *row)
    _emit_attributes(code.attributes, body)
    return bytes(body)


def emit_class(model: ClassModel) -> bytes:
    pool = model.pool
    try:
        pool.validate()
    except MalformedClassfile as exc:
        raise InconsistentModel(str(exc)) from exc
    w = bytearray()
    w += struct.pack(">IHH", model.magic, model.minor, model.major)
    _emit_pool(pool, w)
    w += struct.pack(">HHH", model.access_flags, model.this_class, model.super_class)
    w += struct.pack(">H", len(model.interfaces))
    for i in model.interfaces:
        w += struct.pack(">H", i)
    w += struct.pack(">H", len(model.fields))
    for f in model.fields:
        w += struct.pack(">HHH", f.access_flags, f.name_index, f.descriptor_index)
        _emit_attributes(f.attributes, w)
    w += struct.pack(">H", len(model.methods))
    for m in model.methods:
        w += struct.pack(">HHH", m.access_flags, m.name_index, m.descriptor_index)
        attrs = list(m.attributes)
        if m.code is not None:
            code_name = pool._find(TAG_UTF8, raw=b"Code")
            if code_name is None:
                raise InconsistentModel("pool lacks a 'Code' Utf8 entry for a method with code")
            attrs.insert(min(m.code_attr_pos, len(attrs)),
                         AttributeEntry(code_name, _emit_code_attr(model, m.code)))
        _emit_attributes(attrs, w)
    _emit_attributes(model.attributes, w)
    return bytes(w)
