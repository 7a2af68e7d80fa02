"""Operand-stack simulation: bytecode back to three-address statements.

Instructions are consumed linearly; the symbolic stack must be empty at every
branch, branch target, and emitted statement boundary. A method that violates
this (value live across a branch, e.g. a ternary) is marked non-transformable
by the caller via NonEmptyStackAtBoundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .classfile.code import BytecodeInstr
from .classfile.descriptors import parse_method_descriptor
from .classfile.model import ClassModel, MethodEntry
from .classfile.opcodes import ATYPE_BY_CODE
from .errors import NonEmptyStackAtBoundary, StackUnderflow, UnsupportedOpcode
from .ir import (ArrayElem, BinOp, Call, Const, FieldRef, IRStatement, Local,
                 NewArray, UnOp, dump_ir)

_REL = {"eq": "eq", "ne": "ne", "lt": "lt", "ge": "ge", "gt": "gt", "le": "le"}
_ARITH_OPS = {"add", "sub", "mul", "div", "rem", "shl", "shr", "ushr", "and", "or", "xor"}


@dataclass
class StackState:
    entries: list = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.entries)

    def push(self, e):
        self.entries.append(e)

    def pop(self):
        if not self.entries:
            raise StackUnderflow("symbolic stack underflow")
        return self.entries.pop()


def _elem_type(array_expr, opcode_letter: str) -> str:
    t = array_expr.result_type
    if t.startswith("["):
        return t[1:]
    return {"i": "I", "l": "J", "f": "F", "d": "D", "b": "B",
            "c": "C", "s": "S", "a": "A"}[opcode_letter]


class _Simulator:
    def __init__(self, pool):
        self.pool = pool
        self.state = StackState()
        self.pending: IRStatement | None = None

    def step(self, ins: BytecodeInstr) -> IRStatement | None:
        """Advance the simulation one instruction; may emit a statement."""
        st = self.state
        op = ins.mnemonic
        out: IRStatement | None = None

        def emit(kind, **kw):
            nonlocal out
            out = IRStatement(kind=kind, **kw)

        # ---- pushes ----
        if op == "nop":
            pass
        elif op == "aconst_null":
            st.push(Const(None, "A"))
        elif op.startswith("iconst_"):
            st.push(Const(-1 if op.endswith("m1") else int(op[-1]), "I"))
        elif op.startswith("lconst_"):
            st.push(Const(int(op[-1]), "J"))
        elif op.startswith("fconst_"):
            st.push(Const(float(op[-1]), "F"))
        elif op.startswith("dconst_"):
            st.push(Const(float(op[-1]), "D"))
        elif op in ("bipush", "sipush"):
            st.push(Const(ins.args[0], "I"))
        elif op in ("ldc", "ldc_w", "ldc2_w"):
            e = self.pool.entry(ins.args[0])
            if e.tag == 3:
                st.push(Const(e.int_value, "I"))
            elif e.tag == 4:
                st.push(Const(e.float_value, "F"))
            elif e.tag == 5:
                st.push(Const(e.int_value, "J"))
            elif e.tag == 6:
                st.push(Const(e.float_value, "D"))
            else:
                raise UnsupportedOpcode(f"ldc of pool tag {e.tag}")
        elif op[0] in "ilfda" and op[1:].startswith("load"):
            t = {"i": "I", "l": "J", "f": "F", "d": "D", "a": "A"}[op[0]]
            st.push(Local(ins.local_index() if ins.local_index() is not None
                          else int(op[-1]), t))
        elif len(op) == 6 and op.endswith("aload"):
            idx = st.pop()
            array = st.pop()
            st.push(ArrayElem(array, idx, _elem_type(array, op[0])))

        # ---- stores: statement producers ----
        elif op[0] in "ilfda" and op[1:].startswith("store"):
            t = {"i": "I", "l": "J", "f": "F", "d": "D", "a": "A"}[op[0]]
            slot = ins.local_index() if ins.local_index() is not None else int(op[-1])
            emit("assign", target=Local(slot, t), expr=st.pop())
        elif len(op) == 7 and op.endswith("astore"):
            value = st.pop()
            idx = st.pop()
            array = st.pop()
            emit("array_store", target=ArrayElem(array, idx, _elem_type(array, op[0])),
                 expr=value)
        elif op == "iinc":
            emit("inc", target=Local(ins.args[0], "I"), delta=ins.args[1])

        # ---- arithmetic / conversions ----
        elif op[0] in "ilfd" and op[1:] in _ARITH_OPS:
            right = st.pop()
            left = st.pop()
            t = {"i": "I", "l": "J", "f": "F", "d": "D"}[op[0]]
            st.push(BinOp(op[1:], left, right, t))
        elif len(op) == 4 and op.endswith("neg"):
            t = {"i": "I", "l": "J", "f": "F", "d": "D"}[op[0]]
            st.push(UnOp("neg", st.pop(), t))
        elif len(op) == 3 and op[1] == "2":
            t = {"i": "I", "l": "J", "f": "F", "d": "D", "b": "I", "c": "I", "s": "I"}[op[2]]
            st.push(UnOp(op, st.pop(), t))
        elif op in ("lcmp", "fcmpl", "fcmpg", "dcmpl", "dcmpg"):
            right = st.pop()
            left = st.pop()
            st.push(BinOp(op, left, right, "I"))

        # ---- stack management ----
        elif op == "pop":
            v = st.pop()
            if isinstance(v, Call):
                emit("call_stmt", expr=v)
        elif op == "pop2":
            v = st.pop()
            if v.result_type not in ("J", "D"):
                v2 = st.pop()
                if isinstance(v2, Call):
                    emit("call_stmt", expr=v2)
            if isinstance(v, Call):
                emit("call_stmt", expr=v)
        elif op == "dup":
            st.push(st.entries[-1])
        elif op == "dup_x1":
            v1, v2 = st.pop(), st.pop()
            st.push(v1); st.push(v2); st.push(v1)
        elif op == "dup_x2":
            v1, v2 = st.pop(), st.pop()
            if v2.result_type in ("J", "D"):
                st.push(v1); st.push(v2); st.push(v1)
            else:
                v3 = st.pop()
                st.push(v1); st.push(v3); st.push(v2); st.push(v1)
        elif op == "dup2":
            v1 = st.entries[-1]
            if v1.result_type in ("J", "D"):
                st.push(v1)
            else:
                v2 = st.entries[-2]
                st.push(v2); st.push(v1)
        elif op == "dup2_x1":
            v1 = st.pop()
            if v1.result_type in ("J", "D"):
                v2 = st.pop()
                st.push(v1); st.push(v2); st.push(v1)
            else:
                v2, v3 = st.pop(), st.pop()
                st.push(v2); st.push(v1); st.push(v3); st.push(v2); st.push(v1)
        elif op == "dup2_x2":
            v1 = st.pop()
            if v1.result_type in ("J", "D"):
                v2 = st.pop()
                if v2.result_type in ("J", "D"):
                    st.push(v1); st.push(v2); st.push(v1)
                else:
                    v3 = st.pop()
                    st.push(v1); st.push(v3); st.push(v2); st.push(v1)
            else:
                v2 = st.pop()
                v3 = st.pop()
                if v3.result_type in ("J", "D"):
                    st.push(v2); st.push(v1); st.push(v3); st.push(v2); st.push(v1)
                else:
                    v4 = st.pop()
                    st.push(v2); st.push(v1)
                    st.push(v4); st.push(v3); st.push(v2); st.push(v1)
        elif op == "swap":
            v1, v2 = st.pop(), st.pop()
            st.push(v1); st.push(v2)

        # ---- branches / returns ----
        elif op in ("ifeq", "ifne", "iflt", "ifge", "ifgt", "ifle"):
            cond = BinOp(_REL[op[2:]], st.pop(), Const(0, "I"), "Z")
            emit("cond_branch", expr=cond, branch_target=ins.args[0])
        elif op.startswith("if_icmp"):
            right = st.pop()
            left = st.pop()
            emit("cond_branch", expr=BinOp(_REL[op[7:]], left, right, "Z"),
                 branch_target=ins.args[0])
        elif op.startswith("if_acmp"):
            right = st.pop()
            left = st.pop()
            emit("cond_branch", expr=BinOp("acmp" + op[7:], left, right, "Z"),
                 branch_target=ins.args[0])
        elif op in ("ifnull", "ifnonnull"):
            cond = BinOp("acmpeq" if op == "ifnull" else "acmpne",
                         st.pop(), Const(None, "A"), "Z")
            emit("cond_branch", expr=cond, branch_target=ins.args[0])
        elif op == "goto":
            emit("goto", branch_target=ins.args[0])
        elif op == "return":
            emit("return_stmt")
        elif op in ("ireturn", "lreturn", "freturn", "dreturn", "areturn"):
            emit("return_stmt", expr=st.pop())

        # ---- fields / calls / arrays ----
        elif op == "getstatic":
            owner, name, desc = self.pool.member_ref(ins.args[0])
            st.push(FieldRef(owner, name, desc, None))
        elif op == "getfield":
            owner, name, desc = self.pool.member_ref(ins.args[0])
            st.push(FieldRef(owner, name, desc, st.pop()))
        elif op == "putstatic":
            owner, name, desc = self.pool.member_ref(ins.args[0])
            emit("field_store", target=FieldRef(owner, name, desc, None), expr=st.pop())
        elif op == "putfield":
            owner, name, desc = self.pool.member_ref(ins.args[0])
            value = st.pop()
            emit("field_store", target=FieldRef(owner, name, desc, st.pop()), expr=value)
        elif op in ("invokestatic", "invokevirtual", "invokespecial"):
            owner, name, desc = self.pool.member_ref(ins.args[0])
            params, ret = parse_method_descriptor(desc)
            args = [st.pop() for _ in params][::-1]
            if op != "invokestatic":
                args.insert(0, st.pop())
            call = Call(op, owner, name, desc, args, ret)
            if ret == "V":
                emit("call_stmt", expr=call)
            else:
                st.push(call)
        elif op == "newarray":
            n = st.pop()
            st.push(NewArray(ATYPE_BY_CODE[ins.args[0]], [n],
                             "[" + ATYPE_BY_CODE[ins.args[0]]))
        elif op == "anewarray":
            n = st.pop()
            name = self.pool.class_name(ins.args[0])
            elem = name if name.startswith("[") else f"L{name};"
            st.push(NewArray(elem, [n], "[" + elem))
        elif op == "multianewarray":
            dims = [st.pop() for _ in range(ins.args[1])][::-1]
            desc = self.pool.class_name(ins.args[0])
            st.push(NewArray(desc[1:], dims, desc))
        elif op == "arraylength":
            st.push(UnOp("arraylength", st.pop(), "I"))
        else:
            raise UnsupportedOpcode(f"{op} at offset {ins.offset}")

        return out


def step(state: StackState, ins: BytecodeInstr, pool=None):
    """Single-step interface: (state, instr) -> (state', statement or None).

    A statement is reported exactly when the stack empties at this instruction
    and an effect (store, inc, branch, call, return) occurred.
    """
    sim = _Simulator(pool)
    sim.state = StackState(list(state.entries))
    stmt = sim.step(ins)
    return sim.state, (stmt if sim.state.depth == 0 else None)


def decompile_method(code: list[BytecodeInstr], pool) -> list[IRStatement]:
    """Algorithm: simulate the operand stack until it empties per statement."""
    sim = _Simulator(pool)
    targets = set()
    for ins in code:
        targets.update(ins.branch_targets())

    stmts: list[IRStatement] = []
    by_off = {i.offset: i for i in code}
    span_start = code[0].offset if code else 0
    queue: list[tuple[IRStatement, int]] = []  # (stmt, emitting instruction offset)

    for ins in code:
        if ins.offset in targets and sim.state.depth != 0:
            raise NonEmptyStackAtBoundary(
                f"stack depth {sim.state.depth} at branch target {ins.offset}")
        stmt = sim.step(ins)
        if stmt is not None:
            queue.append((stmt, ins.offset))
        if ins.mnemonic in ("goto", "goto_w") or ins.mnemonic.startswith("if") \
                or ins.mnemonic == "iinc":
            if sim.state.depth != 0:
                raise NonEmptyStackAtBoundary(
                    f"stack depth {sim.state.depth} after {ins.mnemonic} at {ins.offset}")
        if sim.state.depth == 0 and queue:
            for k, (s, emitted_at) in enumerate(queue):
                # trailing discards fold into the boundary statement's span
                end = ins.offset if k == len(queue) - 1 else emitted_at
                s.bytecode_span = (span_start, end)
                span_start = end + by_off[end].size()
                s.index = len(stmts)
                stmts.append(s)
            queue.clear()
    if sim.state.depth != 0:
        raise NonEmptyStackAtBoundary(f"stack depth {sim.state.depth} at end of code")
    for s, _ in queue:
        s.index = len(stmts)
        stmts.append(s)
    return stmts


def decompile(model: ClassModel, method: MethodEntry) -> list[IRStatement]:
    return decompile_method(method.code.instructions, model.pool)


def ir_dump(model: ClassModel, name: str, desc: str | None = None) -> str:
    m = model.find_method(name, desc)
    return dump_ir(decompile(model, m))
