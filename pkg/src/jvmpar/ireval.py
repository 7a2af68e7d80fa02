"""Evaluator for decompiled IR: statement lists (with branches) and loop trees.

Mirrors the interpreter's arithmetic exactly (two's complement, IEEE-754) so
bytecode execution and IR evaluation can be compared bitwise. Shared
expression nodes (from dup) evaluate once per statement via identity
memoization.
"""

from __future__ import annotations

import math

from .errors import JvmparError, UnsupportedOpcode, VmTrap
from .interp import JArray, _MATH_INTRINSICS, _jdiv, f32, i32, i64, _d2i, INT_MIN, INT_MAX, LONG_MIN, LONG_MAX
from .ir import (ArrayElem, BinOp, Call, Const, FieldRef, IRExpr, IRStatement,
                 Local, NewArray, UnOp)
from .interp import new_array


class EvalContext:
    def __init__(self, locals_: list, statics: dict | None = None, resolver=None):
        self.locals = locals_
        self.statics = statics if statics is not None else {}
        self.resolver = resolver  # (owner, name, desc, args) -> return value
        self.memo: dict[int, object] = {}


def _arith(op: str, t: str, a, b):
    if t in ("I", "J"):
        wrap = i32 if t == "I" else i64
        if op == "add":
            return wrap(a + b)
        if op == "sub":
            return wrap(a - b)
        if op == "mul":
            return wrap(a * b)
        if op == "div":
            return wrap(_jdiv(a, b))
        if op == "rem":
            return wrap(a - _jdiv(a, b) * b)
        bits = 31 if t == "I" else 63
        mask = (1 << (bits + 1)) - 1
        if op == "shl":
            return wrap(a << (b & bits))
        if op == "shr":
            return wrap(a >> (b & bits))
        if op == "ushr":
            return wrap((a & mask) >> (b & bits))
        if op == "and":
            return wrap(a & b)
        if op == "or":
            return wrap(a | b)
        if op == "xor":
            return wrap(a ^ b)
    else:
        if op == "add":
            r = a + b
        elif op == "sub":
            r = a - b
        elif op == "mul":
            r = a * b
        elif op == "div":
            if b != 0:
                r = a / b
            elif a == 0 or math.isnan(a):
                r = math.nan
            else:
                r = math.copysign(math.inf, a) * math.copysign(1.0, b)
        elif op == "min":
            r = min(a, b)
        elif op == "max":
            r = max(a, b)
        else:
            raise UnsupportedOpcode(f"float op {op}")
        return f32(r) if t == "F" else r
    if op == "min":
        return min(a, b)
    if op == "max":
        return max(a, b)
    raise UnsupportedOpcode(f"{op} on {t}")


_CMP = {"eq": lambda a, b: a == b, "ne": lambda a, b: a != b,
        "lt": lambda a, b: a < b, "ge": lambda a, b: a >= b,
        "gt": lambda a, b: a > b, "le": lambda a, b: a <= b}


def eval_expr(e: IRExpr, ctx: EvalContext):
    if isinstance(e, Const):
        return e.value
    key = id(e)
    if key in ctx.memo:
        return ctx.memo[key]
    if isinstance(e, Local):
        v = ctx.locals[e.slot]
    elif isinstance(e, ArrayElem):
        a = eval_expr(e.array, ctx)
        i = eval_expr(e.index, ctx)
        if a is None:
            raise VmTrap("NullPointerException")
        if not 0 <= i < len(a.data):
            raise VmTrap("ArrayIndexOutOfBounds", f"index {i} length {len(a.data)}")
        v = a.data[i]
    elif isinstance(e, FieldRef):
        if e.obj is None:
            v = ctx.statics.get((e.owner, e.name), 0)
        else:
            obj = eval_expr(e.obj, ctx)
            v = obj.fields.get(e.name)
    elif isinstance(e, BinOp):
        a = eval_expr(e.left, ctx)
        b = eval_expr(e.right, ctx)
        if e.op in _CMP:
            v = 1 if _CMP[e.op](a, b) else 0
        elif e.op == "acmpeq":
            v = 1 if a is b else 0
        elif e.op == "acmpne":
            v = 1 if a is not b else 0
        elif e.op == "lcmp":
            v = (a > b) - (a < b)
        elif e.op in ("fcmpl", "fcmpg", "dcmpl", "dcmpg"):
            if math.isnan(a) or math.isnan(b):
                v = -1 if e.op.endswith("l") else 1
            else:
                v = (a > b) - (a < b)
        else:
            v = _arith(e.op, e.type, a, b)
    elif isinstance(e, UnOp):
        x = eval_expr(e.operand, ctx)
        if e.op == "neg":
            v = {"I": lambda: i32(-x), "J": lambda: i64(-x),
                 "F": lambda: f32(-x), "D": lambda: -x}[e.type]()
        elif e.op == "arraylength":
            v = len(x.data)
        elif len(e.op) == 3 and e.op[1] == "2":
            dst = e.op[2]
            src = e.op[0]
            if dst == "i":
                v = _d2i(x, INT_MIN, INT_MAX) if src in "fd" else i32(x)
            elif dst == "l":
                v = _d2i(x, LONG_MIN, LONG_MAX) if src in "fd" else int(x)
            elif dst == "f":
                v = f32(float(x))
            elif dst == "d":
                v = float(x)
            elif dst == "b":
                v = i32((x & 0xFF) - 256 if x & 0x80 else x & 0xFF)
            elif dst == "c":
                v = x & 0xFFFF
            else:
                v = i32((x & 0xFFFF) - 65536 if x & 0x8000 else x & 0xFFFF)
        else:
            raise UnsupportedOpcode(f"unop {e.op}")
    elif isinstance(e, Call):
        args = [eval_expr(a, ctx) for a in e.args]
        if e.owner == "java/lang/Math":
            fn = _MATH_INTRINSICS.get((e.name, e.desc))
            if fn is None:
                raise UnsupportedOpcode(f"Math.{e.name}{e.desc}")
            v = fn(*args)
        elif ctx.resolver is not None:
            v = ctx.resolver(e.owner, e.name, e.desc, args)
        else:
            raise UnsupportedOpcode(f"call {e.owner}.{e.name} without resolver")
    elif isinstance(e, NewArray):
        sizes = [eval_expr(d, ctx) for d in e.dims]

        def alloc(elem: str, dims: list[int]) -> JArray:
            a = new_array(elem, dims[0])
            if len(dims) > 1:
                a.data = [alloc(elem[1:], dims[1:]) for _ in range(dims[0])]
            return a

        v = alloc(e.elem if len(sizes) == 1 else e.type[1:], sizes)
    else:
        raise UnsupportedOpcode(f"expr {type(e).__name__}")
    ctx.memo[key] = v
    return v


def exec_statement(s: IRStatement, ctx: EvalContext):
    """Execute one non-branch statement (branches are handled by callers)."""
    ctx.memo = {}
    if s.kind == "assign":
        ctx.locals[s.target.slot] = eval_expr(s.expr, ctx)
    elif s.kind == "inc":
        ctx.locals[s.target.slot] = i32(ctx.locals[s.target.slot] + s.delta)
    elif s.kind == "array_store":
        a = eval_expr(s.target.array, ctx)
        i = eval_expr(s.target.index, ctx)
        v = eval_expr(s.expr, ctx)
        if not 0 <= i < len(a.data):
            raise VmTrap("ArrayIndexOutOfBounds", f"index {i} length {len(a.data)}")
        a.data[i] = v
    elif s.kind == "field_store":
        v = eval_expr(s.expr, ctx)
        if s.target.obj is None:
            ctx.statics[(s.target.owner, s.target.name)] = v
        else:
            eval_expr(s.target.obj, ctx).fields[s.target.name] = v
    elif s.kind == "call_stmt":
        eval_expr(s.expr, ctx)
    else:
        raise JvmparError(f"exec_statement cannot run {s.kind}")


def eval_statements(stmts: list[IRStatement], ctx: EvalContext,
                    max_steps: int = 10 ** 8):
    """Run a full statement list, following cond_branch/goto by offset."""
    # branch targets are bytecode offsets of the *start* of a statement's span
    start_of = {}
    for s in stmts:
        start_of[s.bytecode_span[0]] = s.index
    steps = 0
    pc = 0
    while pc < len(stmts):
        steps += 1
        if steps > max_steps:
            raise JvmparError("IR evaluation step budget exhausted")
        s = stmts[pc]
        if s.kind == "goto":
            pc = start_of[s.branch_target]
            continue
        if s.kind == "cond_branch":
            ctx.memo = {}
            if eval_expr(s.expr, ctx):
                pc = start_of[s.branch_target]
            else:
                pc += 1
            continue
        if s.kind == "return_stmt":
            ctx.memo = {}
            return eval_expr(s.expr, ctx) if s.expr is not None else None
        exec_statement(s, ctx)
        pc += 1
    return None
