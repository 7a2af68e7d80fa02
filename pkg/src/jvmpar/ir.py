"""Three-address IR recovered from bytecode.

Expression nodes compare by identity; dup-family instructions share subtrees,
and evaluation memoizes per statement so shared nodes evaluate once.
"""

from __future__ import annotations

from dataclasses import dataclass


class IRExpr:
    @property
    def result_type(self) -> str:
        return getattr(self, "type", "A")


@dataclass(eq=False)
class Const(IRExpr):
    value: object
    type: str  # 'I','J','F','D' or a reference descriptor


@dataclass(eq=False)
class Local(IRExpr):
    slot: int
    type: str


@dataclass(eq=False)
class ArrayElem(IRExpr):
    array: IRExpr
    index: IRExpr
    type: str  # element type


@dataclass(eq=False)
class FieldRef(IRExpr):
    owner: str
    name: str
    desc: str
    obj: IRExpr | None  # None for statics

    @property
    def type(self):
        return self.desc


@dataclass(eq=False)
class BinOp(IRExpr):
    op: str  # add sub mul div rem shl shr ushr and or xor lcmp fcmpl ... eq ne lt ge gt le min
    left: IRExpr
    right: IRExpr
    type: str


@dataclass(eq=False)
class UnOp(IRExpr):
    op: str  # neg, i2d-style conversions, arraylength
    operand: IRExpr
    type: str


@dataclass(eq=False)
class Call(IRExpr):
    kind: str  # invokestatic / invokevirtual / invokespecial
    owner: str
    name: str
    desc: str
    args: list[IRExpr]
    type: str  # return type


@dataclass(eq=False)
class NewArray(IRExpr):
    elem: str  # element descriptor of the outermost dimension
    dims: list[IRExpr]
    type: str


@dataclass
class IRStatement:
    kind: str  # assign | array_store | field_store | call_stmt | cond_branch | goto | return_stmt | inc
    target: IRExpr | None = None
    expr: IRExpr | None = None
    bytecode_span: tuple[int, int] = (0, 0)  # [first_offset, last_offset]
    branch_target: int | None = None  # absolute bytecode offset
    delta: int = 0  # inc amount
    index: int = -1  # position within the method's statement list

    def __repr__(self):
        lo, hi = self.bytecode_span
        head = f"{lo}-{hi}: "
        if self.kind == "assign":
            return head + f"{fmt_expr(self.target)} = {fmt_expr(self.expr)}"
        if self.kind == "array_store":
            return head + f"{fmt_expr(self.target)} = {fmt_expr(self.expr)}"
        if self.kind == "field_store":
            return head + f"{fmt_expr(self.target)} = {fmt_expr(self.expr)}"
        if self.kind == "inc":
            return head + f"{fmt_expr(self.target)} += {self.delta}"
        if self.kind == "cond_branch":
            return head + f"if {fmt_expr(self.expr)} goto @{self.branch_target}"
        if self.kind == "goto":
            return head + f"goto @{self.branch_target}"
        if self.kind == "return_stmt":
            return head + (f"return {fmt_expr(self.expr)}" if self.expr else "return")
        return head + f"call {fmt_expr(self.expr)}"


def fmt_expr(e: IRExpr | None) -> str:
    if e is None:
        return "<none>"
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Local):
        return f"l{e.slot}"
    if isinstance(e, ArrayElem):
        return f"{fmt_expr(e.array)}[{fmt_expr(e.index)}]"
    if isinstance(e, FieldRef):
        base = fmt_expr(e.obj) if e.obj is not None else e.owner
        return f"{base}.{e.name}"
    if isinstance(e, BinOp):
        return f"({fmt_expr(e.left)} {e.op} {fmt_expr(e.right)})"
    if isinstance(e, UnOp):
        return f"{e.op}({fmt_expr(e.operand)})"
    if isinstance(e, Call):
        return f"{e.owner.rsplit('/', 1)[-1]}.{e.name}({', '.join(fmt_expr(a) for a in e.args)})"
    if isinstance(e, NewArray):
        return f"new[{', '.join(fmt_expr(d) for d in e.dims)}]"
    return f"<{type(e).__name__}>"


def walk_expr(e: IRExpr | None):
    """Yield every node of an expression tree (shared nodes repeat per edge)."""
    if e is None:
        return
    yield e
    if isinstance(e, ArrayElem):
        yield from walk_expr(e.array)
        yield from walk_expr(e.index)
    elif isinstance(e, FieldRef):
        yield from walk_expr(e.obj)
    elif isinstance(e, BinOp):
        yield from walk_expr(e.left)
        yield from walk_expr(e.right)
    elif isinstance(e, UnOp):
        yield from walk_expr(e.operand)
    elif isinstance(e, Call):
        for a in e.args:
            yield from walk_expr(a)
    elif isinstance(e, NewArray):
        for d in e.dims:
            yield from walk_expr(d)


def exprs_equal(a: IRExpr | None, b: IRExpr | None) -> bool:
    """Structural equality (identity-shared subtrees compare equal fast)."""
    if a is b:
        return True
    if a is None or b is None or type(a) is not type(b):
        return False
    if isinstance(a, Const):
        return a.value == b.value and a.type == b.type
    if isinstance(a, Local):
        return a.slot == b.slot
    if isinstance(a, ArrayElem):
        return exprs_equal(a.array, b.array) and exprs_equal(a.index, b.index)
    if isinstance(a, FieldRef):
        return (a.owner, a.name) == (b.owner, b.name) and exprs_equal(a.obj, b.obj)
    if isinstance(a, BinOp):
        return a.op == b.op and exprs_equal(a.left, b.left) and exprs_equal(a.right, b.right)
    if isinstance(a, UnOp):
        return a.op == b.op and exprs_equal(a.operand, b.operand)
    if isinstance(a, Call):
        return ((a.kind, a.owner, a.name, a.desc) == (b.kind, b.owner, b.name, b.desc)
                and len(a.args) == len(b.args)
                and all(exprs_equal(x, y) for x, y in zip(a.args, b.args)))
    return False


def dump_ir(stmts: list[IRStatement]) -> str:
    """Stable textual listing, one statement per line (golden-file tested)."""
    return "\n".join(repr(s) for s in stmts) + "\n"
