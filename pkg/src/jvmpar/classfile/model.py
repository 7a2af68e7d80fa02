"""In-memory classfile model: header, pool, fields, methods, attributes."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from ..errors import AbstractMethod, NoSuchMethod
from .code import BytecodeInstr
from .pool import ConstantPool

ACC_PUBLIC = 0x0001
ACC_PRIVATE = 0x0002
ACC_PROTECTED = 0x0004
ACC_STATIC = 0x0008
ACC_FINAL = 0x0010
ACC_SUPER = 0x0020
ACC_SYNCHRONIZED = 0x0020
ACC_NATIVE = 0x0100
ACC_ABSTRACT = 0x0400


@dataclass
class AttributeEntry:
    name_index: int
    data: bytes


@dataclass
class CodeAttr:
    max_stack: int
    max_locals: int
    instructions: list[BytecodeInstr]
    exception_table: list[tuple[int, int, int, int]] = field(default_factory=list)
    attributes: list[AttributeEntry] = field(default_factory=list)


@dataclass
class FieldEntry:
    access_flags: int
    name_index: int
    descriptor_index: int
    attributes: list[AttributeEntry] = field(default_factory=list)


@dataclass
class MethodEntry:
    access_flags: int
    name_index: int
    descriptor_index: int
    code: CodeAttr | None = None
    attributes: list[AttributeEntry] = field(default_factory=list)  # non-Code attrs
    code_attr_pos: int = 0  # where Code sat among the attributes (round-trip fidelity)

    def is_static(self) -> bool:
        return bool(self.access_flags & ACC_STATIC)


@dataclass
class ClassModel:
    magic: int
    minor: int
    major: int
    pool: ConstantPool
    access_flags: int
    this_class: int
    super_class: int
    interfaces: list[int]
    fields: list[FieldEntry]
    methods: list[MethodEntry]
    attributes: list[AttributeEntry]

    @property
    def name(self) -> str:
        return self.pool.class_name(self.this_class)

    @property
    def super_name(self) -> str:
        return self.pool.class_name(self.super_class) if self.super_class else ""

    def method_name(self, m: MethodEntry) -> str:
        return self.pool.utf8(m.name_index)

    def method_desc(self, m: MethodEntry) -> str:
        return self.pool.utf8(m.descriptor_index)

    def find_method(self, name: str, desc: str | None = None) -> MethodEntry:
        hits = [m for m in self.methods
                if self.method_name(m) == name
                and (desc is None or self.method_desc(m) == desc)]
        if not hits:
            raise NoSuchMethod(f"{self.name}.{name}{desc or ''}")
        return hits[0]

    def get_code(self, name: str, desc: str | None = None) -> list[BytecodeInstr]:
        m = self.find_method(name, desc)
        if m.code is None:
            raise AbstractMethod(f"{self.name}.{name} has no Code attribute")
        return m.code.instructions

    def clone(self) -> "ClassModel":
        return copy.deepcopy(self)
