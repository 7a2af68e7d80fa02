"""Label-based bytecode assembly and structural class building.

Rewritten and generated methods are produced here; the assembler picks
shortest instruction forms, resolves labels to offsets, and recomputes
max_stack/max_locals with a width-typed stack simulation.
"""

from __future__ import annotations

import struct
from ..errors import InconsistentModel, UnsupportedOpcode
from . import opcodes as op
from .code import BytecodeInstr, layout
from .descriptors import args_slot_count, parse_method_descriptor, slot_width
from .model import (ACC_PUBLIC, ACC_STATIC, ACC_SUPER, ClassModel,
                    CodeAttr, FieldEntry, MethodEntry)
from .pool import (ConstantPool, TAG_CLASS, TAG_DOUBLE, TAG_FIELDREF, TAG_FLOAT,
                   TAG_IFACEMETHODREF, TAG_INTEGER, TAG_LONG, TAG_METHODREF,
                   TAG_NAMEANDTYPE, TAG_STRING, TAG_UTF8)


class Label:
    __slots__ = ("index",)

    def __init__(self):
        self.index: int | None = None

    def __repr__(self):
        return f"L@{self.index}"


class CodeBuilder:
    def __init__(self, pool: ConstantPool):
        self.pool = pool
        self.instrs: list[BytecodeInstr] = []
        self._pending: list[Label] = []

    # ---- core --------------------------------------------------------------

    def emit(self, mnemonic: str, *args, wide: bool = False) -> BytecodeInstr:
        if mnemonic not in op.BY_NAME:
            raise UnsupportedOpcode(mnemonic)
        ins = BytecodeInstr(offset=-1, mnemonic=mnemonic, args=tuple(args), wide=wide)
        for lab in self._pending:
            lab.index = len(self.instrs)
        self._pending.clear()
        self.instrs.append(ins)
        return ins

    def label(self, lab: Label | None = None) -> Label:
        """Bind a label to the next emitted instruction."""
        lab = lab or Label()
        self._pending.append(lab)
        return lab

    def new_label(self) -> Label:
        return Label()

    # ---- loads/stores/constants ---------------------------------------------

    def load(self, t: str, slot: int):
        if slot <= 3:
            self.emit(f"{t}load_{slot}")
        elif slot <= 255:
            self.emit(f"{t}load", slot)
        elif t == "i":
            self.emit("iload", slot, wide=True)
        else:
            raise InconsistentModel(f"wide {t}load unsupported (slot {slot})")

    def store(self, t: str, slot: int):
        if slot <= 3:
            self.emit(f"{t}store_{slot}")
        elif slot <= 255:
            self.emit(f"{t}store", slot)
        elif t == "i":
            self.emit("istore", slot, wide=True)
        else:
            raise InconsistentModel(f"wide {t}store unsupported (slot {slot})")

    def iinc(self, slot: int, delta: int):
        if slot <= 255 and -128 <= delta <= 127:
            self.emit("iinc", slot, delta)
        else:
            self.emit("iinc", slot, delta, wide=True)

    def const_int(self, v: int):
        if -1 <= v <= 5:
            self.emit("iconst_m1" if v == -1 else f"iconst_{v}")
        elif -128 <= v <= 127:
            self.emit("bipush", v)
        elif -32768 <= v <= 32767:
            self.emit("sipush", v)
        else:
            self.ldc_index(self.pool.add_integer(v), wide_value=False)

    def const_long(self, v: int):
        if v in (0, 1):
            self.emit(f"lconst_{v}")
        else:
            self.emit("ldc2_w", self.pool.add_long(v))

    def const_float(self, v: float):
        if v in (0.0, 1.0, 2.0) and (v != 0.0 or struct.pack(">f", v) == b"\x00\x00\x00\x00"):
            self.emit(f"fconst_{int(v)}")
        else:
            self.ldc_index(self.pool.add_float(v), wide_value=False)

    def const_double(self, v: float):
        if v in (0.0, 1.0) and (v != 0.0 or struct.pack(">d", v) == b"\x00" * 8):
            self.emit(f"dconst_{int(v)}")
        else:
            self.emit("ldc2_w", self.pool.add_double(v))

    def ldc_index(self, cp_index: int, wide_value: bool):
        if wide_value:
            self.emit("ldc2_w", cp_index)
        elif cp_index <= 255:
            self.emit("ldc", cp_index)
        else:
            self.emit("ldc_w", cp_index)

    # ---- control flow --------------------------------------------------------

    def branch(self, mnemonic: str, target: Label):
        if op.BY_NAME[mnemonic][1] not in ("br2", "br4"):
            raise InconsistentModel(f"{mnemonic} is not a branch")
        self.emit(mnemonic, target)

    def goto(self, target: Label):
        self.emit("goto", target)

    # ---- members ---------------------------------------------------------------

    def getfield(self, owner, name, desc):
        self.emit("getfield", self.pool.add_fieldref(owner, name, desc))

    def putfield(self, owner, name, desc):
        self.emit("putfield", self.pool.add_fieldref(owner, name, desc))

    def getstatic(self, owner, name, desc):
        self.emit("getstatic", self.pool.add_fieldref(owner, name, desc))

    def putstatic(self, owner, name, desc):
        self.emit("putstatic", self.pool.add_fieldref(owner, name, desc))

    def invoke(self, kind: str, owner: str, name: str, desc: str):
        self.emit(kind, self.pool.add_methodref(owner, name, desc))

    def new_object(self, owner: str):
        self.emit("new", self.pool.add_class(owner))

    def newarray_prim(self, elem_desc: str):
        self.emit("newarray", op.ATYPE_BY_DESC[elem_desc])

    def anewarray(self, component_desc: str):
        # component named without L;-wrapping for classes, or as an array descriptor
        name = component_desc
        if name.startswith("L") and name.endswith(";"):
            name = name[1:-1]
        self.emit("anewarray", self.pool.add_class(name))

    # ---- finish ----------------------------------------------------------------

    def assemble(self) -> list[BytecodeInstr]:
        if self._pending:
            raise InconsistentModel("label bound past the last instruction")
        layout(self.instrs)
        for ins in self.instrs:
            if ins.is_branch():
                resolved = []
                for t in ins.branch_targets():
                    if isinstance(t, Label):
                        if t.index is None:
                            raise InconsistentModel("unbound label")
                        resolved.append(self.instrs[t.index].offset)
                    else:
                        resolved.append(t)
                if ins.fmt in op.BRANCH_FMTS:
                    ins.args = (resolved[0],)
                    delta = resolved[0] - ins.offset
                    if ins.fmt == "br2" and not -32768 <= delta <= 32767:
                        raise InconsistentModel(f"branch delta {delta} exceeds 16 bits")
                else:
                    raise InconsistentModel("switch assembly is not supported")
        return self.instrs


# ---- max_stack / max_locals analysis -------------------------------------------

_ARITH = {f"{t}{o}" for t in "ilfd" for o in ("add", "sub", "mul", "div", "rem")}
_SHIFT = {f"{p}{o}" for p in "il" for o in ("shl", "shr", "ushr")}
_LOGIC = {f"{p}{o}" for p in "il" for o in ("and", "or", "xor")}
_W = {"i": 1, "l": 2, "f": 1, "d": 2, "a": 1, "b": 1, "c": 1, "s": 1, "z": 1}
_CONV_W = {"i": 1, "l": 2, "f": 1, "d": 2, "b": 1, "c": 1, "s": 1}


def _stack_effect(ins: BytecodeInstr, pool: ConstantPool, stack: list[int]) -> list[int]:
    """Apply one instruction to a width-typed abstract stack; returns new stack."""
    m = ins.mnemonic
    s = list(stack)

    def pop(w=None):
        if not s:
            raise InconsistentModel(f"stack underflow at {ins}")
        top = s.pop()
        if w is not None and top != w:
            raise InconsistentModel(f"width mismatch at {ins}: expected {w}, found {top}")
        return top

    def push(w):
        s.append(w)

    if m == "nop":
        return s
    if m == "aconst_null":
        push(1); return s
    if m.startswith("iconst") or m in ("bipush", "sipush"):
        push(1); return s
    if m.startswith("lconst"):
        push(2); return s
    if m.startswith("fconst"):
        push(1); return s
    if m.startswith("dconst"):
        push(2); return s
    if m in ("ldc", "ldc_w"):
        push(1); return s
    if m == "ldc2_w":
        push(2); return s
    if m[1:].startswith("load") and m[0] in "ilfda" and (len(m) == 5 or m[5] == "_" or m[1:] == "load"):
        push(_W[m[0]]); return s
    if m[1:].startswith("store") and m[0] in "ilfda":
        pop(_W[m[0]]); return s
    if len(m) == 6 and m.endswith("aload"):
        pop(1); pop(1); push(_W[m[0]]); return s
    if len(m) == 7 and m.endswith("astore"):
        pop(_W[m[0]]); pop(1); pop(1); return s
    if m == "pop":
        pop(1); return s
    if m == "pop2":
        w = pop()
        if w == 1:
            pop(1)
        return s
    if m == "dup":
        w = pop(1); push(1); push(1); return s
    if m == "dup_x1":
        v1 = pop(1); v2 = pop(1); push(v1); push(v2); push(v1); return s
    if m == "dup_x2":
        v1 = pop(1); v2 = pop()
        if v2 == 2:
            push(v1); push(v2); push(v1)
        else:
            v3 = pop(1); push(v1); push(v3); push(v2); push(v1)
        return s
    if m == "dup2":
        v1 = pop()
        if v1 == 2:
            push(v1); push(v1)
        else:
            v2 = pop(1); push(v2); push(v1); push(v2); push(v1)
        return s
    if m == "dup2_x1":
        v1 = pop()
        if v1 == 2:
            v2 = pop(1); push(v1); push(v2); push(v1)
        else:
            v2 = pop(1); v3 = pop(1); push(v2); push(v1); push(v3); push(v2); push(v1)
        return s
    if m == "dup2_x2":
        v1 = pop()
        if v1 == 2:
            v2 = pop()
            if v2 == 2:
                push(v1); push(v2); push(v1)
            else:
                v3 = pop(1); push(v1); push(v3); push(v2); push(v1)
        else:
            v2 = pop(1); v3 = pop()
            if v3 == 2:
                push(v2); push(v1); push(v3); push(v2); push(v1)
            else:
                v4 = pop(1); push(v2); push(v1); push(v4); push(v3); push(v2); push(v1)
        return s
    if m == "swap":
        v1 = pop(1); v2 = pop(1); push(v1); push(v2); return s
    if m in _ARITH:
        w = _W[m[0]]; pop(w); pop(w); push(w); return s
    if m in _SHIFT:
        w = _W[m[0]]; pop(1); pop(w); push(w); return s
    if m in _LOGIC:
        w = _W[m[0]]; pop(w); pop(w); push(w); return s
    if len(m) == 4 and m.endswith("neg"):
        return s
    if m == "iinc":
        return s
    if len(m) == 3 and m[1] == "2":
        pop(_CONV_W[m[0]]); push(_CONV_W[m[2]]); return s
    if m == "lcmp":
        pop(2); pop(2); push(1); return s
    if m in ("fcmpl", "fcmpg"):
        pop(1); pop(1); push(1); return s
    if m in ("dcmpl", "dcmpg"):
        pop(2); pop(2); push(1); return s
    if m.startswith("if_icmp") or m.startswith("if_acmp"):
        pop(1); pop(1); return s
    if m in ("ifeq", "ifne", "iflt", "ifge", "ifgt", "ifle", "ifnull", "ifnonnull"):
        pop(1); return s
    if m in ("goto", "goto_w"):
        return s
    if m in ("ireturn", "freturn", "areturn"):
        pop(1); return s
    if m in ("lreturn", "dreturn"):
        pop(2); return s
    if m == "return":
        return s
    if m in ("getstatic", "getfield", "putstatic", "putfield"):
        owner, name, desc = pool.member_ref(ins.args[0])
        w = slot_width(desc)
        if m == "getstatic":
            push(w)
        elif m == "getfield":
            pop(1); push(w)
        elif m == "putstatic":
            pop(w)
        else:
            pop(w); pop(1)
        return s
    if m in ("invokestatic", "invokevirtual", "invokespecial"):
        owner, name, desc = pool.member_ref(ins.args[0])
        params, ret = parse_method_descriptor(desc)
        for p in reversed(params):
            pop(slot_width(p))
        if m != "invokestatic":
            pop(1)
        if ret != "V":
            push(slot_width(ret))
        return s
    if m == "new":
        push(1); return s
    if m in ("newarray", "anewarray"):
        pop(1); push(1); return s
    if m == "multianewarray":
        for _ in range(ins.args[1]):
            pop(1)
        push(1)
        return s
    if m == "arraylength":
        pop(1); push(1); return s
    raise UnsupportedOpcode(f"stack analysis: {m}")


def compute_limits(instrs: list[BytecodeInstr], pool: ConstantPool,
                   desc: str, static: bool) -> tuple[int, int]:
    """(max_stack, max_locals) via worklist dataflow on width-typed stacks."""
    by_offset = {ins.offset: k for k, ins in enumerate(instrs)}
    entry: dict[int, tuple[int, ...]] = {instrs[0].offset: ()}
    work = [instrs[0].offset]
    max_stack = 0
    seen = set()
    while work:
        at = work.pop()
        stack = list(entry[at])
        k = by_offset[at]
        while k < len(instrs):
            ins = instrs[k]
            key = (ins.offset, tuple(stack))
            if key in seen:
                break
            seen.add(key)
            stack = _stack_effect(ins, pool, stack)
            max_stack = max(max_stack, sum(stack))
            m = ins.mnemonic
            if ins.is_branch():
                for t in ins.branch_targets():
                    prev = entry.get(t)
                    if prev is None:
                        entry[t] = tuple(stack)
                        work.append(t)
                    elif prev != tuple(stack):
                        raise InconsistentModel(f"inconsistent stack at join {t}")
                if m in ("goto", "goto_w"):
                    break
            if m.endswith("return") or m == "athrow":
                break
            k += 1

    max_locals = args_slot_count(desc, static)
    for ins in instrs:
        idx = ins.local_index()
        if idx is not None:
            width = 2 if ins.mnemonic and ins.mnemonic[0] in "ld" and ins.mnemonic != "iinc" else 1
            max_locals = max(max_locals, idx + width)
    return max_stack, max_locals


# ---- cross-pool import -------------------------------------------------------------

def import_pool_entry(dst: ConstantPool, src: ConstantPool, index: int) -> int:
    e = src.entry(index)
    if e.tag == TAG_UTF8:
        return dst.add_utf8(e.utf8)
    if e.tag == TAG_INTEGER:
        return dst._add(type(e)(TAG_INTEGER, raw=e.raw))
    if e.tag == TAG_FLOAT:
        return dst._add(type(e)(TAG_FLOAT, raw=e.raw))
    if e.tag == TAG_LONG:
        return dst._add(type(e)(TAG_LONG, raw=e.raw))
    if e.tag == TAG_DOUBLE:
        return dst._add(type(e)(TAG_DOUBLE, raw=e.raw))
    if e.tag == TAG_CLASS:
        return dst.add_class(src.utf8(e.a))
    if e.tag == TAG_STRING:
        return dst.add_string(src.utf8(e.a))
    if e.tag == TAG_NAMEANDTYPE:
        return dst.add_name_and_type(src.utf8(e.a), src.utf8(e.b))
    if e.tag in (TAG_FIELDREF, TAG_METHODREF, TAG_IFACEMETHODREF):
        owner, name, desc = src.member_ref(index)
        if e.tag == TAG_FIELDREF:
            return dst.add_fieldref(owner, name, desc)
        return dst.add_methodref(owner, name, desc)
    raise UnsupportedOpcode(f"cannot import pool entry of tag {e.tag}")


# ---- class construction ------------------------------------------------------------

class ClassBuilder:
    def __init__(self, name: str, super_name: str = "java/lang/Object",
                 access: int = ACC_PUBLIC | ACC_SUPER, major: int = 49):
        self.pool = ConstantPool()
        self.pool.add_utf8("Code")
        self.name = name
        self.super_name = super_name
        self.this_index = self.pool.add_class(name)
        self.super_index = self.pool.add_class(super_name)
        self.access = access
        self.major = major
        self.fields: list[FieldEntry] = []
        self.methods: list[MethodEntry] = []

    def add_field(self, name: str, desc: str, access: int = ACC_PUBLIC) -> None:
        self.fields.append(FieldEntry(access, self.pool.add_utf8(name),
                                      self.pool.add_utf8(desc)))

    def code_builder(self) -> CodeBuilder:
        return CodeBuilder(self.pool)

    def add_method(self, name: str, desc: str, access: int, cb: CodeBuilder,
                   max_stack: int | None = None, max_locals: int | None = None) -> MethodEntry:
        instrs = cb.assemble()
        ms, ml = compute_limits(instrs, self.pool, desc, bool(access & ACC_STATIC))
        code = CodeAttr(max_stack if max_stack is not None else ms,
                        max_locals if max_locals is not None else ml,
                        instrs)
        m = MethodEntry(access, self.pool.add_utf8(name), self.pool.add_utf8(desc), code)
        self.methods.append(m)
        return m

    def build(self) -> ClassModel:
        return ClassModel(
            magic=0xCAFEBABE, minor=0, major=self.major, pool=self.pool,
            access_flags=self.access, this_class=self.this_index,
            super_class=self.super_index, interfaces=[], fields=self.fields,
            methods=self.methods, attributes=[])
