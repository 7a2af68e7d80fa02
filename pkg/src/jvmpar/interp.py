"""Deterministic interpreter for the supported bytecode subset.

Serves as the semantic oracle: JVM-faithful integer wraparound, IEEE-754
float/double, bounds-checked arrays. A simulated multi-task mode executes
generated Thread subclasses run-to-completion in a schedule-chosen order
(sound for verified plans, which have no inter-task conflicts; a write-set
conflict check catches plans that are not).

Methods are compiled once per interpreter into flat op records (branch
targets as indices, member refs and intrinsics pre-resolved) so the oracle
stays fast enough for whole-benchmark differential runs.
"""

from __future__ import annotations

import math
import random
import struct
from dataclasses import dataclass, field

from .classfile.descriptors import parse_method_descriptor, slot_width
from .classfile.model import ClassModel, MethodEntry
from .errors import (JvmparError, NoSuchMethod, StepBudgetExceeded,
                     UnsupportedOpcode, VmTrap)

INT_MIN, INT_MAX = -(1 << 31), (1 << 31) - 1
LONG_MIN, LONG_MAX = -(1 << 63), (1 << 63) - 1


def i32(v: int) -> int:
    v &= 0xFFFFFFFF
    return v - (1 << 32) if v & 0x80000000 else v


def i64(v: int) -> int:
    v &= 0xFFFFFFFFFFFFFFFF
    return v - (1 << 64) if v & 0x8000000000000000 else v


def f32(v: float) -> float:
    return struct.unpack(">f", struct.pack(">f", v))[0]


def _jdiv(a: int, b: int) -> int:
    if b == 0:
        raise VmTrap("ArithmeticException", "/ by zero")
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def _fdiv(a: float, b: float) -> float:
    if b != 0:
        return a / b
    if a == 0 or math.isnan(a):
        return math.nan
    return math.copysign(math.inf, a) * math.copysign(1.0, b)


def _d2i(v: float, lo: int, hi: int) -> int:
    if math.isnan(v):
        return 0
    if v <= lo:
        return lo
    if v >= hi:
        return hi
    return int(v)


def _clip_b(v: int) -> int:
    return (v & 0xFF) - 256 if v & 0x80 else v & 0xFF


def _clip_s(v: int) -> int:
    return (v & 0xFFFF) - 65536 if v & 0x8000 else v & 0xFFFF


def _clip_c(v: int) -> int:
    return v & 0xFFFF


@dataclass
class JArray:
    elem: str  # element type descriptor
    data: list

    def __len__(self):
        return len(self.data)


@dataclass
class JObject:
    cls: str
    fields: dict = field(default_factory=dict)


def default_value(desc: str):
    if desc in ("I", "S", "B", "C", "Z", "J"):
        return 0
    if desc in ("F", "D"):
        return 0.0
    return None


def new_array(elem_desc: str, length: int) -> JArray:
    if length < 0:
        raise VmTrap("NegativeArraySizeException", str(length))
    return JArray(elem_desc, [default_value(elem_desc)] * length)


def jarray_of(elem_desc: str, values) -> JArray:
    return JArray(elem_desc, list(values))


def snapshot(value):
    """Deep structural copy (arrays to lists) for result comparison."""
    if isinstance(value, JArray):
        return [snapshot(v) for v in value.data]
    if isinstance(value, (list, tuple)):
        return [snapshot(v) for v in value]
    if isinstance(value, JObject):
        return {k: snapshot(v) for k, v in sorted(value.fields.items())}
    return value


def values_close(a, b, rel_tol: float) -> tuple[bool, str]:
    """Compare snapshots: ints exact, floats within rel_tol (exact if 0)."""
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            return False, f"length {len(a)} != {len(b)}"
        for k, (x, y) in enumerate(zip(a, b)):
            ok, why = values_close(x, y, rel_tol)
            if not ok:
                return False, f"[{k}]{why}"
        return True, ""
    if isinstance(a, float) or isinstance(b, float):
        if rel_tol == 0:
            ok = (a == b) or (math.isnan(a) and math.isnan(b))
        else:
            ok = math.isclose(a, b, rel_tol=rel_tol, abs_tol=rel_tol)
        return (True, "") if ok else (False, f" {a!r} != {b!r}")
    if a != b:
        return False, f" {a!r} != {b!r}"
    return True, ""


class Schedule:
    """Task execution order: explicit permutation, seeded shuffle, or identity.

    With several fork/join waves, `order(n)` is drawn per wave;
    run-to-completion per task is the only mode.
    """

    def __init__(self, permutation: list[int] | None = None, seed: int | None = None):
        self.permutation = permutation
        self._rng = random.Random(seed) if seed is not None else None
        self.history: list[list[int]] = []  # orders actually drawn, per wave

    def order(self, n: int) -> list[int]:
        if self.permutation is not None and len(self.permutation) == n:
            if sorted(self.permutation) != list(range(n)):
                raise JvmparError(f"schedule {self.permutation} is not a permutation")
            out = list(self.permutation)
        elif self._rng is not None:
            out = list(range(n))
            self._rng.shuffle(out)
        else:
            out = list(range(n))
        self.history.append(out)
        return out


_MATH_INTRINSICS = {
    ("sqrt", "(D)D"): lambda a: math.sqrt(a) if a >= 0 else float("nan"),
    ("abs", "(D)D"): abs,
    ("abs", "(I)I"): lambda a: i32(abs(a)),
    ("min", "(II)I"): min,
    ("max", "(II)I"): max,
    ("min", "(JJ)J"): min,
    ("max", "(JJ)J"): max,
    ("min", "(DD)D"): min,
    ("max", "(DD)D"): max,
    ("min", "(FF)F"): lambda a, b: f32(min(a, b)),
    ("max", "(FF)F"): lambda a, b: f32(max(a, b)),
    ("cos", "(D)D"): math.cos,
    ("sin", "(D)D"): math.sin,
    ("floor", "(D)D"): math.floor,
    ("ceil", "(D)D"): math.ceil,
    ("pow", "(DD)D"): math.pow,
}

# ---------------------------------------------------------------------------
# per-method compilation

K_LOAD, K_STORE, K_IINC, K_CONST, K_ALOAD, K_ASTORE, K_GOTO, K_IF_ICMP, \
    K_IF, K_ARITH, K_UN, K_CMP, K_RET, K_FIELD, K_INVOKE, K_NEW, K_NEWARR, \
    K_ANEWARR, K_MULTI, K_ARRLEN, K_POP, K_POP2, K_DUPS, K_SWAP, K_NOP, \
    K_IF_ACMP, K_IFNULL = range(27)

_I_ARITH = {
    "iadd": lambda a, b: i32(a + b), "isub": lambda a, b: i32(a - b),
    "imul": lambda a, b: i32(a * b), "idiv": lambda a, b: i32(_jdiv(a, b)),
    "irem": lambda a, b: i32(a - _jdiv(a, b) * b),
    "ladd": lambda a, b: i64(a + b), "lsub": lambda a, b: i64(a - b),
    "lmul": lambda a, b: i64(a * b), "ldiv": lambda a, b: i64(_jdiv(a, b)),
    "lrem": lambda a, b: i64(a - _jdiv(a, b) * b),
    "fadd": lambda a, b: f32(a + b), "fsub": lambda a, b: f32(a - b),
    "fmul": lambda a, b: f32(a * b), "fdiv": lambda a, b: f32(_fdiv(a, b)),
    "frem": lambda a, b: f32(math.fmod(a, b)) if b != 0 else math.nan,
    "dadd": lambda a, b: a + b, "dsub": lambda a, b: a - b,
    "dmul": lambda a, b: a * b, "ddiv": _fdiv,
    "drem": lambda a, b: math.fmod(a, b) if b != 0 else math.nan,
    "ishl": lambda a, b: i32(a << (b & 31)), "ishr": lambda a, b: i32(a >> (b & 31)),
    "iushr": lambda a, b: i32((a & 0xFFFFFFFF) >> (b & 31)),
    "lshl": lambda a, b: i64(a << (b & 63)), "lshr": lambda a, b: i64(a >> (b & 63)),
    "lushr": lambda a, b: i64((a & 0xFFFFFFFFFFFFFFFF) >> (b & 63)),
    "iand": lambda a, b: i32(a & b), "ior": lambda a, b: i32(a | b),
    "ixor": lambda a, b: i32(a ^ b),
    "land": lambda a, b: i64(a & b), "lor": lambda a, b: i64(a | b),
    "lxor": lambda a, b: i64(a ^ b),
}

_UNARY = {
    "ineg": (lambda x: i32(-x), 1), "lneg": (lambda x: i64(-x), 2),
    "fneg": (lambda x: f32(-x), 1), "dneg": (lambda x: -x, 2),
    "i2l": (int, 2), "i2f": (lambda x: f32(float(x)), 1), "i2d": (float, 2),
    "l2i": (i32, 1), "l2f": (lambda x: f32(float(x)), 1), "l2d": (float, 2),
    "f2i": (lambda x: _d2i(x, INT_MIN, INT_MAX), 1),
    "f2l": (lambda x: _d2i(x, LONG_MIN, LONG_MAX), 2), "f2d": (float, 2),
    "d2i": (lambda x: _d2i(x, INT_MIN, INT_MAX), 1),
    "d2l": (lambda x: _d2i(x, LONG_MIN, LONG_MAX), 2), "d2f": (f32, 1),
    "i2b": (_clip_b, 1), "i2c": (_clip_c, 1), "i2s": (_clip_s, 1),
}

_REL = {
    "eq": lambda a, b: a == b, "ne": lambda a, b: a != b,
    "lt": lambda a, b: a < b, "ge": lambda a, b: a >= b,
    "gt": lambda a, b: a > b, "le": lambda a, b: a <= b,
}

_ASTORE_CLIP = {"b": _clip_b, "s": _clip_s, "c": _clip_c}

_cat_of = {"i": 1, "l": 2, "f": 1, "d": 2, "a": 1}


def _compile_method(model: ClassModel, m: MethodEntry) -> list[tuple]:
    instrs = m.code.instructions
    by_offset = {ins.offset: k for k, ins in enumerate(instrs)}
    pool = model.pool
    ops: list[tuple] = []
    for ins in instrs:
        op = ins.mnemonic
        if op[1:].startswith("load") and op[0] in "ilfda" and len(op) <= 7 \
                and (len(op) == 5 or op[5] == "_"):
            ops.append((K_LOAD, ins.local_index(), _cat_of[op[0]]))
        elif op[1:].startswith("store") and op[0] in "ilfda":
            ops.append((K_STORE, ins.local_index()))
        elif op == "iinc":
            ops.append((K_IINC, ins.args[0], ins.args[1]))
        elif op.startswith("iconst_"):
            ops.append((K_CONST, -1 if op.endswith("m1") else int(op[-1]), 1))
        elif op in ("bipush", "sipush"):
            ops.append((K_CONST, ins.args[0], 1))
        elif op.startswith("lconst_"):
            ops.append((K_CONST, int(op[-1]), 2))
        elif op.startswith("fconst_") or op.startswith("dconst_"):
            ops.append((K_CONST, float(op[-1]), 1 if op[0] == "f" else 2))
        elif op == "aconst_null":
            ops.append((K_CONST, None, 1))
        elif op in ("ldc", "ldc_w", "ldc2_w"):
            e = pool.entry(ins.args[0])
            if e.tag == 3:
                ops.append((K_CONST, e.int_value, 1))
            elif e.tag == 4:
                ops.append((K_CONST, e.float_value, 1))
            elif e.tag == 5:
                ops.append((K_CONST, e.int_value, 2))
            elif e.tag == 6:
                ops.append((K_CONST, e.float_value, 2))
            else:
                raise UnsupportedOpcode(f"ldc of pool tag {e.tag}")
        elif len(op) == 6 and op.endswith("aload"):
            ops.append((K_ALOAD, _cat_of.get(op[0], 1)))
        elif len(op) == 7 and op.endswith("astore"):
            ops.append((K_ASTORE, _ASTORE_CLIP.get(op[0])))
        elif op in ("goto", "goto_w"):
            ops.append((K_GOTO, by_offset[ins.args[0]]))
        elif op.startswith("if_icmp"):
            ops.append((K_IF_ICMP, _REL[op[7:]], by_offset[ins.args[0]]))
        elif op.startswith("if_acmp"):
            ops.append((K_IF_ACMP, op.endswith("eq"), by_offset[ins.args[0]]))
        elif op in ("ifeq", "ifne", "iflt", "ifge", "ifgt", "ifle"):
            ops.append((K_IF, _REL[op[2:]], by_offset[ins.args[0]]))
        elif op in ("ifnull", "ifnonnull"):
            ops.append((K_IFNULL, op == "ifnull", by_offset[ins.args[0]]))
        elif op in _I_ARITH:
            ops.append((K_ARITH, _I_ARITH[op], _cat_of[op[0]]))
        elif op in _UNARY:
            fn, cat = _UNARY[op]
            ops.append((K_UN, fn, cat))
        elif op == "lcmp":
            ops.append((K_CMP, None))
        elif op in ("fcmpl", "fcmpg", "dcmpl", "dcmpg"):
            ops.append((K_CMP, -1 if op.endswith("l") else 1))
        elif op == "return":
            ops.append((K_RET, False))
        elif op in ("ireturn", "lreturn", "freturn", "dreturn", "areturn"):
            ops.append((K_RET, True))
        elif op in ("getstatic", "putstatic", "getfield", "putfield"):
            owner, fname, fdesc = pool.member_ref(ins.args[0])
            mode = ("getstatic", "putstatic", "getfield", "putfield").index(op)
            ops.append((K_FIELD, mode, owner, fname, default_value(fdesc),
                        slot_width(fdesc)))
        elif op in ("invokestatic", "invokevirtual", "invokespecial"):
            owner, name, mdesc = pool.member_ref(ins.args[0])
            params, ret = parse_method_descriptor(mdesc)
            widths = tuple(slot_width(p) for p in params)
            intrinsic = _MATH_INTRINSICS.get((name, mdesc)) \
                if owner == "java/lang/Math" and op == "invokestatic" else None
            ops.append((K_INVOKE, op, owner, name, mdesc, widths,
                        0 if ret == "V" else slot_width(ret), intrinsic))
        elif op == "new":
            ops.append((K_NEW, pool.class_name(ins.args[0])))
        elif op == "newarray":
            from .classfile.opcodes import ATYPE_BY_CODE
            ops.append((K_NEWARR, ATYPE_BY_CODE[ins.args[0]]))
        elif op == "anewarray":
            name = pool.class_name(ins.args[0])
            ops.append((K_NEWARR, name if name.startswith("[") else f"L{name};"))
        elif op == "multianewarray":
            ops.append((K_MULTI, pool.class_name(ins.args[0]), ins.args[1]))
        elif op == "arraylength":
            ops.append((K_ARRLEN,))
        elif op == "pop":
            ops.append((K_POP,))
        elif op == "pop2":
            ops.append((K_POP2,))
        elif op in ("dup", "dup_x1", "dup_x2", "dup2", "dup2_x1", "dup2_x2"):
            ops.append((K_DUPS, op))
        elif op == "swap":
            ops.append((K_SWAP,))
        elif op == "nop":
            ops.append((K_NOP,))
        else:
            raise UnsupportedOpcode(f"{op} at {ins.offset} in "
                                    f"{model.name}.{model.method_name(m)}")
    return ops


class Interp:
    def __init__(self, classes: dict[str, ClassModel] | ClassModel,
                 step_budget: int = 10 ** 9, schedule: Schedule | None = None,
                 trace: list | None = None, trace_limit: int = 10000,
                 conflict_check: bool = False):
        if isinstance(classes, ClassModel):
            classes = {classes.name: classes}
        self.classes = classes
        self.step_budget = step_budget
        self.schedule = schedule or Schedule()
        self.steps = 0
        self.trace = trace
        self.trace_limit = trace_limit
        self.statics: dict[tuple[str, str], object] = {}
        self._compiled: dict[int, tuple[MethodEntry, list]] = {}
        # thread simulation; keep strong refs so id() keys stay unique
        self._pending: list[JObject] = []
        self._executed: set[int] = set()
        self._task_index: dict[int, int] = {}
        self._all_tasks: list[JObject] = []
        self._task_count = 0
        self.task_steps: dict[int, int] = {}
        self.conflict_check = conflict_check
        self._task_writes: dict[int, set] = {}
        self._current_task: int | None = None
        self.conflicts: list[str] = []

    # ---- class/method resolution -----------------------------------------

    def _resolve(self, cls: str, name: str, desc: str) -> tuple[ClassModel, MethodEntry]:
        cur = cls
        while cur in self.classes:
            model = self.classes[cur]
            for m in model.methods:
                if model.method_name(m) == name and model.method_desc(m) == desc:
                    return model, m
            cur = model.super_name
        raise NoSuchMethod(f"{cls}.{name}{desc}")

    def _extends_thread(self, cls: str) -> bool:
        cur = cls
        while cur in self.classes:
            cur = self.classes[cur].super_name
        return cur == "java/lang/Thread"

    # ---- public API --------------------------------------------------------

    def exec_method(self, model: ClassModel | str, name: str, args: list,
                    desc: str | None = None):
        """Run a method; returns (return value, args, steps executed here)."""
        if isinstance(model, str):
            model = self.classes[model]
        elif model.name not in self.classes:
            self.classes[model.name] = model
        m = model.find_method(name, desc)
        if desc is None:
            desc = model.method_desc(m)
        before = self.steps
        ret = self._call(model, m, list(args))
        return ret, args, self.steps - before

    # ---- frame execution ---------------------------------------------------

    def _ops_for(self, model: ClassModel, m: MethodEntry) -> list[tuple]:
        hit = self._compiled.get(id(m))
        if hit is not None:
            return hit[1]
        ops = _compile_method(model, m)
        self._compiled[id(m)] = (m, ops)
        return ops

    def _call(self, model: ClassModel, m: MethodEntry, args: list):
        if m.code is None:
            raise NoSuchMethod(f"{model.name}.{model.method_name(m)} has no code")
        ops = self._ops_for(model, m)
        desc = model.method_desc(m)
        params, _ = parse_method_descriptor(desc)
        locals_ = [None] * max(m.code.max_locals, 8)
        slot = 0
        if not m.is_static():
            locals_[0] = args[0]
            slot = 1
            rest = args[1:]
        else:
            rest = args
        for p, v in zip(params, rest):
            locals_[slot] = v
            slot += slot_width(p)

        stack: list = []
        cats: list[int] = []
        push = stack.append
        pushc = cats.append
        pop = stack.pop
        popc = cats.pop
        pc = 0
        n_ops = len(ops)
        budget = self.step_budget
        tracing = self.trace is not None
        instrs = m.code.instructions if tracing else None
        conflict = self.conflict_check

        while True:
            if pc >= n_ops:
                raise VmTrap("FellOffCode", f"{model.name}.{model.method_name(m)}")
            rec = ops[pc]
            self.steps += 1
            if self.steps > budget:
                raise StepBudgetExceeded(f"budget {budget} exhausted")
            if tracing and len(self.trace) < self.trace_limit:
                self.trace.append(
                    f"{model.name}.{model.method_name(m)}@{instrs[pc].offset}: "
                    f"{instrs[pc].mnemonic}")
            tag = rec[0]
            pc += 1

            if tag == K_LOAD:
                push(locals_[rec[1]])
                pushc(rec[2])
            elif tag == K_ALOAD:
                idx = pop(); popc()
                a = pop(); popc()
                if a is None:
                    raise VmTrap("NullPointerException")
                data = a.data
                if not 0 <= idx < len(data):
                    raise VmTrap("ArrayIndexOutOfBounds",
                                 f"index {idx} length {len(data)}")
                push(data[idx])
                pushc(rec[1])
            elif tag == K_CONST:
                push(rec[1])
                pushc(rec[2])
            elif tag == K_ARITH:
                b = pop(); popc()
                stack[-1] = rec[1](stack[-1], b)
            elif tag == K_STORE:
                locals_[rec[1]] = pop()
                popc()
            elif tag == K_ASTORE:
                v = pop(); popc()
                idx = pop(); popc()
                a = pop(); popc()
                if a is None:
                    raise VmTrap("NullPointerException")
                data = a.data
                if not 0 <= idx < len(data):
                    raise VmTrap("ArrayIndexOutOfBounds",
                                 f"index {idx} length {len(data)}")
                if rec[1] is not None:
                    v = rec[1](v)
                data[idx] = v
                if conflict and self._current_task is not None:
                    self._task_writes.setdefault(self._current_task, set()) \
                        .add((id(a), idx))
            elif tag == K_IF_ICMP:
                b = pop(); popc()
                a = pop(); popc()
                if rec[1](a, b):
                    pc = rec[2]
            elif tag == K_IINC:
                locals_[rec[1]] = i32(locals_[rec[1]] + rec[2])
            elif tag == K_GOTO:
                pc = rec[1]
            elif tag == K_CMP:
                b = pop(); popc()
                a = pop(); popc()
                if rec[1] is not None and (math.isnan(a) or math.isnan(b)):
                    push(rec[1])
                else:
                    push((a > b) - (a < b))
                pushc(1)
            elif tag == K_IF:
                v = pop(); popc()
                if rec[1](v, 0):
                    pc = rec[2]
            elif tag == K_UN:
                stack[-1] = rec[1](stack[-1])
                cats[-1] = rec[2]
            elif tag == K_INVOKE:
                kind, owner, name, mdesc, widths, retw, intrinsic = rec[1:]
                if intrinsic is not None:
                    if len(widths) == 1:
                        a = pop(); popc()
                        r = intrinsic(a)
                    else:
                        b = pop(); popc()
                        a = pop(); popc()
                        r = intrinsic(a, b)
                else:
                    argv = []
                    for _ in widths:
                        argv.append(pop()); popc()
                    argv.reverse()
                    if kind == "invokestatic":
                        cm, me = self._resolve(owner, name, mdesc)
                        r = self._call(cm, me, argv)
                    else:
                        obj = pop(); popc()
                        if obj is None:
                            raise VmTrap("NullPointerException", f"call {name}")
                        r = self._invoke_instance(kind, owner, name, mdesc, obj, argv)
                if retw:
                    push(r)
                    pushc(retw)
            elif tag == K_FIELD:
                mode, owner, fname, dflt, width = rec[1:]
                if mode == 0:
                    push(self.statics.get((owner, fname), dflt))
                    pushc(width)
                elif mode == 1:
                    self.statics[(owner, fname)] = pop(); popc()
                elif mode == 2:
                    obj = stack[-1]
                    if obj is None:
                        raise VmTrap("NullPointerException", f"getfield {fname}")
                    stack[-1] = obj.fields.get(fname, dflt)
                    cats[-1] = width
                else:
                    v = pop(); popc()
                    obj = pop(); popc()
                    if obj is None:
                        raise VmTrap("NullPointerException", f"putfield {fname}")
                    obj.fields[fname] = v
            elif tag == K_RET:
                if rec[1]:
                    return pop()
                return None
            elif tag == K_DUPS:
                form = rec[1]
                if form == "dup":
                    push(stack[-1]); pushc(1)
                elif form == "dup_x1":
                    stack.insert(-2, stack[-1]); cats.insert(-2, 1)
                elif form == "dup_x2":
                    k = -3 if cats[-2] == 1 else -2
                    stack.insert(k, stack[-1]); cats.insert(k, 1)
                elif form == "dup2":
                    if cats[-1] == 2:
                        push(stack[-1]); pushc(2)
                    else:
                        v1, v2 = stack[-1], stack[-2]
                        push(v2); pushc(1)
                        push(v1); pushc(1)
                elif form == "dup2_x1":
                    if cats[-1] == 2:
                        stack.insert(-2, stack[-1]); cats.insert(-2, 2)
                    else:
                        stack.insert(-3, stack[-2]); cats.insert(-3, 1)
                        stack.insert(-3, stack[-1]); cats.insert(-3, 1)
                else:  # dup2_x2
                    if cats[-1] == 2:
                        k = -3 if cats[-2] == 1 else -2
                        stack.insert(k, stack[-1]); cats.insert(k, 2)
                    else:
                        under = -4 if cats[-3] == 1 else -3
                        stack.insert(under, stack[-2]); cats.insert(under, 1)
                        stack.insert(under, stack[-1]); cats.insert(under, 1)
            elif tag == K_ARRLEN:
                a = pop(); popc()
                if a is None:
                    raise VmTrap("NullPointerException")
                push(len(a.data)); pushc(1)
            elif tag == K_NEW:
                push(JObject(rec[1])); pushc(1)
            elif tag == K_NEWARR:
                n = pop(); popc()
                push(new_array(rec[1], n)); pushc(1)
            elif tag == K_MULTI:
                dims = []
                for _ in range(rec[2]):
                    dims.append(pop()); popc()
                dims.reverse()

                def alloc(d: str, sizes: list[int]):
                    a = new_array(d[1:], sizes[0])
                    if len(sizes) > 1:
                        a.data = [alloc(d[1:], sizes[1:]) for _ in range(sizes[0])]
                    return a

                push(alloc(rec[1], dims)); pushc(1)
            elif tag == K_POP:
                pop(); popc()
            elif tag == K_POP2:
                if popc() == 2:
                    pop()
                else:
                    pop(); pop(); popc()
            elif tag == K_SWAP:
                stack[-1], stack[-2] = stack[-2], stack[-1]
            elif tag == K_IF_ACMP:
                b = pop(); popc()
                a = pop(); popc()
                if (a is b) == rec[1]:
                    pc = rec[2]
            elif tag == K_IFNULL:
                v = pop(); popc()
                if (v is None) == rec[1]:
                    pc = rec[2]
            elif tag == K_NOP:
                pass
            else:
                raise UnsupportedOpcode(f"compiled tag {tag}")

    def _invoke_instance(self, kind, owner, mname, mdesc, obj, argv):
        # intercepted runtime surface
        if owner in ("java/lang/Object", "java/lang/Thread") and mname == "<init>":
            return None
        if mname in ("start", "join") and mdesc == "()V" and \
                isinstance(obj, JObject) and self._extends_thread(obj.cls):
            if mname == "start":
                if id(obj) in self._task_index:
                    raise VmTrap("IllegalThreadState", "thread started twice")
                self._task_index[id(obj)] = self._task_count
                self._task_count += 1
                self._pending.append(obj)
                self._all_tasks.append(obj)
            else:
                self._join(obj)
            return None
        target_cls = obj.cls if kind == "invokevirtual" else owner
        cm, me = self._resolve(target_cls, mname, mdesc)
        return self._call(cm, me, [obj] + argv)

    def _join(self, obj: JObject):
        if id(obj) in self._executed or id(obj) not in self._task_index:
            return
        wave = self._pending
        self._pending = []
        order = self.schedule.order(len(wave))
        for k in order:
            task = wave[k]
            t_index = self._task_index[id(task)]
            before = self.steps
            prev = self._current_task
            self._current_task = t_index
            try:
                cm, me = self._resolve(task.cls, "run", "()V")
                self._call(cm, me, [task])
            finally:
                self._current_task = prev
            self.task_steps[t_index] = self.task_steps.get(t_index, 0) + self.steps - before
            self._executed.add(id(task))
        if self.conflict_check:
            tids = sorted(self._task_writes)
            for a in range(len(tids)):
                for b in range(a + 1, len(tids)):
                    overlap = self._task_writes[tids[a]] & self._task_writes[tids[b]]
                    if overlap:
                        self.conflicts.append(
                            f"tasks {tids[a]} and {tids[b]} both wrote {len(overlap)} locations")
            self._task_writes.clear()


# ---- variant-level helpers ----------------------------------------------------


def exec_parallel(variant, name: str, args: list, schedule: Schedule | None = None,
                  step_budget: int = 10 ** 9, conflict_check: bool = False):
    """Run a ParallelVariant's driver; returns (ret, args, interp).

    `variant` needs `.classes()` -> {name: ClassModel} and `.driver_name`.
    """
    interp = Interp(variant.classes(), step_budget=step_budget,
                    schedule=schedule or Schedule(), conflict_check=conflict_check)
    ret, args, steps = interp.exec_method(variant.driver_name, name, args)
    return ret, args, interp


@dataclass
class EquivalenceReport:
    ok: bool
    schedules_run: int
    witness_schedule: list[int] | None = None
    detail: str = ""
    max_deviation: float = 0.0


def check_equivalence(original: ClassModel, name: str, variant, input_gen,
                      n_schedules: int = 20, rel_tol: float = 0.0,
                      seed: int = 42, desc: str | None = None,
                      step_budget: int = 10 ** 9) -> EquivalenceReport:
    """Serial vs parallel differential run under seeded schedule permutations."""
    rng = random.Random(seed)
    serial_interp = Interp({original.name: original}, step_budget=step_budget)
    for trial in range(n_schedules):
        in_seed = rng.randrange(1 << 30)
        args_serial = input_gen(random.Random(in_seed))
        serial_interp.statics.clear()
        ret_s, _, _ = serial_interp.exec_method(original, name, args_serial, desc)
        want = snapshot([ret_s] + list(args_serial))

        args_par = input_gen(random.Random(in_seed))
        sched = Schedule(seed=rng.randrange(1 << 30))
        ret_p, _, interp_p = exec_parallel(variant, name, args_par, sched,
                                           step_budget=step_budget)
        got = snapshot([ret_p] + list(args_par))
        ok, why = values_close(want, got, rel_tol)
        if not ok:
            witness = sched.history[0] if sched.history else None
            return EquivalenceReport(False, trial + 1, witness_schedule=witness,
                                     detail=f"trial {trial}: mismatch at {why}")
    return EquivalenceReport(True, n_schedules)
