"""Loop discovery and normalization.

Finds the goto/condition cycles in bytecode, recovers (ivar, init, bound,
step) for canonical counted loops, and builds a structured forest whose body
items are interleaved statements and nested loops. Both javac layouts are
recognized: (a) forward goto to a bottom test branching back, (b) top test
branching past the body with a backward goto.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .classfile.code import BytecodeInstr
from .classfile.model import ClassModel, MethodEntry
from .decompile import decompile
from .dfg import expr_reads, stmt_writes
from .errors import IrregularControlFlow, NonCanonicalLoop
from .ir import IRStatement, Local, walk_expr
from .ireval import EvalContext, eval_expr

_MIRROR = {"lt": "gt", "gt": "lt", "le": "ge", "ge": "le", "eq": "eq", "ne": "ne"}
_NEGATE = {"lt": "ge", "ge": "lt", "gt": "le", "le": "gt", "eq": "ne", "ne": "eq"}


@dataclass
class LoopCandidate:
    layout: str  # bottom_test | top_test | irregular
    goto_offset: int
    cond_offset: int  # first instruction of the condition block
    cond_branch_offset: int  # the conditional branch itself
    body_span: tuple[int, int]  # [start, end) instruction offsets, control excluded
    entry_offset: int  # first instruction of the loop machinery
    exit_offset: int  # first offset after the loop


@dataclass(eq=False)
class NormalizedLoop:
    ivar: int
    init: object  # IRExpr
    bound: object  # IRExpr
    step: int
    cmp: str  # continuation: loop runs while (ivar cmp bound)
    body: list = field(default_factory=list)  # IRStatement | NormalizedLoop | IrregularLoop
    layout: str = "bottom_test"
    # statement bookkeeping (indices into the method's statement list)
    init_idx: int = -1
    cond_idx: int = -1
    inc_idx: int = -1
    claimed: tuple[int, int] = (-1, -1)  # inclusive statement range owned by the loop
    # instruction bookkeeping (offsets)
    full_span: tuple[int, int] = (0, 0)  # init start .. exit (exclusive)
    body_instr_span: tuple[int, int] = (0, 0)  # body start .. iinc (exclusive)
    path: tuple[int, ...] = ()

    canonical = True

    @property
    def children(self):
        return [x for x in self.body if isinstance(x, (NormalizedLoop, IrregularLoop))]

    def statements(self):
        """Flattened body statements in order, descending into children."""
        for item in self.body:
            if isinstance(item, IRStatement):
                yield item
            else:
                yield from item.statements()

    def trip_count(self, locals_: list) -> int:
        ctx = EvalContext(list(locals_))
        v0 = eval_expr(self.init, ctx)
        ctx.memo = {}
        vb = eval_expr(self.bound, ctx)
        return trip_count_of(v0, vb, self.step, self.cmp)


@dataclass(eq=False)
class IrregularLoop:
    reason: str
    body: list = field(default_factory=list)
    claimed: tuple[int, int] = (-1, -1)
    full_span: tuple[int, int] = (0, 0)
    path: tuple[int, ...] = ()

    canonical = False

    @property
    def children(self):
        return [x for x in self.body if isinstance(x, (NormalizedLoop, IrregularLoop))]

    def statements(self):
        for item in self.body:
            if isinstance(item, IRStatement):
                yield item
            else:
                yield from item.statements()


@dataclass
class LoopForest:
    items: list  # top-level IRStatement | loop nodes in order
    stmts: list[IRStatement]
    candidates: list[LoopCandidate]

    @property
    def roots(self):
        return [x for x in self.items if isinstance(x, (NormalizedLoop, IrregularLoop))]

    def all_loops(self):
        out = []

        def walk(node):
            out.append(node)
            for c in node.children:
                walk(c)

        for r in self.roots:
            walk(r)
        return out

    def by_path(self, path):
        nodes = self.roots
        node = None
        for p in path:
            node = nodes[p]
            nodes = node.children
        return node


def trip_count_of(init: int, bound: int, step: int, cmp: str) -> int:
    if step > 0 and cmp == "lt":
        return max(0, -((-(bound - init)) // step))
    if step > 0 and cmp == "le":
        return max(0, (bound - init) // step + 1)
    if step < 0 and cmp == "gt":
        return max(0, -((-(init - bound)) // -step))
    if step < 0 and cmp == "ge":
        return max(0, (init - bound) // -step + 1)
    raise NonCanonicalLoop(f"non-terminating shape: step {step} with {cmp}")


# ---------------------------------------------------------------------------


def extract_loops(code: list[BytecodeInstr]) -> list[LoopCandidate]:
    """Report every backward-edge cycle once; unmatched shapes come back
    with layout='irregular' so callers mark the region non-transformable."""
    by_offset = {i.offset: i for i in code}
    prev_of = {}
    next_of = {}
    prev = None
    for ins in code:
        if prev is not None:
            prev_of[ins.offset] = prev
            next_of[prev.offset] = ins.offset
        prev = ins
    if prev is not None:
        next_of[prev.offset] = prev.offset + prev.size()

    out: list[LoopCandidate] = []

    # layout (b) tie-break: several backward gotos to one test (continue
    # statements); the largest offset owns the loop
    b_gotos: dict[int, int] = {}
    for ins in code:
        if ins.mnemonic == "goto" and ins.args[0] < ins.offset:
            b_gotos[ins.args[0]] = max(b_gotos.get(ins.args[0], -1), ins.offset)

    for ins in code:
        if ins.mnemonic.startswith("if") and ins.args[0] < ins.offset:
            # candidate layout (a): backward conditional to the body start
            t = ins.args[0]
            g = prev_of.get(t)
            if (g is not None and g.mnemonic == "goto"
                    and g.offset < g.args[0] <= ins.offset):
                out.append(LoopCandidate(
                    layout="bottom_test", goto_offset=g.offset,
                    cond_offset=g.args[0], cond_branch_offset=ins.offset,
                    body_span=(t, g.args[0]), entry_offset=g.offset,
                    exit_offset=next_of[ins.offset]))
            else:
                out.append(LoopCandidate(
                    layout="irregular", goto_offset=-1, cond_offset=t,
                    cond_branch_offset=ins.offset, body_span=(t, ins.offset),
                    entry_offset=t, exit_offset=next_of[ins.offset]))
        elif ins.mnemonic == "goto" and ins.args[0] < ins.offset:
            t = ins.args[0]
            if b_gotos.get(t) != ins.offset:
                continue  # inner continue; owned by the outermost goto
            exit_off = next_of[ins.offset]
            cond = None
            scan = t
            while scan < ins.offset:
                c = by_offset[scan]
                if c.mnemonic.startswith("if") and c.args[0] == exit_off:
                    cond = c
                    break
                scan = next_of[scan]
            if cond is not None:
                out.append(LoopCandidate(
                    layout="top_test", goto_offset=ins.offset, cond_offset=t,
                    cond_branch_offset=cond.offset,
                    body_span=(next_of[cond.offset], ins.offset),
                    entry_offset=t, exit_offset=exit_off))
            else:
                out.append(LoopCandidate(
                    layout="irregular", goto_offset=ins.offset, cond_offset=t,
                    cond_branch_offset=-1, body_span=(t, ins.offset),
                    entry_offset=t, exit_offset=exit_off))

    # spans must nest or be disjoint
    for a in out:
        for b in out:
            if a is b:
                continue
            a0, a1 = a.entry_offset, a.exit_offset
            b0, b1 = b.entry_offset, b.exit_offset
            if a0 < b0 < a1 < b1:
                raise IrregularControlFlow(
                    f"overlapping loop spans [{a0},{a1}) and [{b0},{b1})")
    out.sort(key=lambda c: c.entry_offset)
    return out


# ---------------------------------------------------------------------------


def _locals_written(items) -> set[int]:
    written = set()
    for item in items:
        if isinstance(item, IRStatement):
            for var in stmt_writes(item):
                if var[0] == "local":
                    written.add(var[1])
        else:
            written |= _locals_written(item.body)
            if isinstance(item, NormalizedLoop):
                written.add(item.ivar)
    return written


def _cells_written(items) -> set:
    cells = set()
    for item in items:
        if isinstance(item, IRStatement):
            cells |= {v for v in stmt_writes(item) if v[0] == "cells"}
        else:
            cells |= _cells_written(item.body)
    return cells


def _invariant(expr, written_locals: set[int], written_cells: set) -> bool:
    for node in walk_expr(expr):
        if isinstance(node, Local) and node.slot in written_locals:
            return False
    for var in expr_reads(expr):
        if var[0] == "cells" and var in written_cells:
            return False
        if var[0] == "field":
            return False  # fields may be written by callees; be conservative
    return True


def normalize_loop(cand: LoopCandidate, stmts: list[IRStatement],
                   body_items: list, claim_end: int | None = None) -> NormalizedLoop:
    """Recover (ivar, init, bound, step) or raise NonCanonicalLoop."""
    if cand.layout == "irregular":
        raise IrregularControlFlow("backward branch matches neither canonical layout")

    end_at = {s.bytecode_span[1]: s.index for s in stmts}
    start_at = {s.bytecode_span[0]: s.index for s in stmts}
    cond_idx = end_at.get(cand.cond_branch_offset)
    if cond_idx is None or stmts[cond_idx].kind != "cond_branch":
        raise NonCanonicalLoop("condition statement not found")
    cond = stmts[cond_idx]
    rel = cond.expr.op
    if rel not in _MIRROR:
        raise NonCanonicalLoop(f"unsupported comparison {rel}")
    if cand.layout == "top_test":
        rel = _NEGATE[rel]  # branch exits; continuation is the negation

    # single inc as the last body item
    if not body_items or not (isinstance(body_items[-1], IRStatement)
                              and body_items[-1].kind == "inc"):
        raise NonCanonicalLoop("loop update is not a trailing iinc")
    inc = body_items[-1]
    ivar = inc.target.slot

    lhs, rhs = cond.expr.left, cond.expr.right
    if isinstance(lhs, Local) and lhs.slot == ivar:
        bound = rhs
        cmp = rel
    elif isinstance(rhs, Local) and rhs.slot == ivar:
        bound = lhs
        cmp = _MIRROR[rel]
    else:
        raise NonCanonicalLoop("condition does not test the updated variable")

    body = body_items[:-1]
    written = _locals_written(body)
    if ivar in written:
        raise NonCanonicalLoop(f"induction variable slot {ivar} also written in body")
    cells = _cells_written(body)
    if not _invariant(bound, written | {ivar}, cells):
        raise NonCanonicalLoop("bound varies inside the body")

    # init: the assignment immediately before the loop entry
    entry_idx = start_at.get(cand.entry_offset)
    if entry_idx is None or entry_idx == 0:
        raise NonCanonicalLoop("no init statement before loop entry")
    init_stmt = stmts[entry_idx - 1]
    if not (init_stmt.kind == "assign" and isinstance(init_stmt.target, Local)
            and init_stmt.target.slot == ivar):
        raise NonCanonicalLoop("loop entry not dominated by an ivar init store")
    if not _invariant(init_stmt.expr, written | {ivar}, cells):
        raise NonCanonicalLoop("init expression varies inside the body")
    if inc.delta == 0:
        raise NonCanonicalLoop("zero step")
    if (inc.delta > 0) != (cmp in ("lt", "le")):
        raise NonCanonicalLoop(f"step {inc.delta} cannot terminate {cmp} loop")

    inc_offset = inc.bytecode_span[0]
    return NormalizedLoop(
        ivar=ivar, init=init_stmt.expr, bound=bound, step=inc.delta, cmp=cmp,
        body=body, layout=cand.layout,
        init_idx=init_stmt.index, cond_idx=cond_idx, inc_idx=inc.index,
        claimed=(init_stmt.index,
                 claim_end if claim_end is not None else max(cond_idx, inc.index)),
        full_span=(init_stmt.bytecode_span[0], cand.exit_offset),
        body_instr_span=(cand.body_span[0], inc_offset))


def build_forest(model: ClassModel, method: MethodEntry,
                 stmts: list[IRStatement] | None = None) -> LoopForest:
    if stmts is None:
        stmts = decompile(model, method)
    code = method.code.instructions
    cands = extract_loops(code)

    start_at = {s.bytecode_span[0]: s.index for s in stmts}
    end_at = {s.bytecode_span[1]: s.index for s in stmts}

    def stmt_range(cand: LoopCandidate) -> tuple[int, int]:
        """Inclusive statement range covered by the loop machinery (no init)."""
        if cand.layout == "bottom_test":
            first = start_at[cand.entry_offset]  # the goto statement
            last = end_at[cand.cond_branch_offset]
        elif cand.layout == "top_test":
            first = start_at[cand.cond_offset]
            last = end_at[max(cand.goto_offset, cand.cond_branch_offset)]
        else:
            first = start_at.get(cand.entry_offset, 0)
            hi = cand.cond_branch_offset if cand.cond_branch_offset >= 0 else cand.goto_offset
            last = end_at.get(hi, len(stmts) - 1)
        return first, last

    ranged = []
    for cand in cands:
        try:
            ranged.append((cand, stmt_range(cand)))
        except KeyError as exc:
            raise IrregularControlFlow(f"loop control not on statement boundary: {exc}")

    # innermost first so children exist when a parent is built
    ranged.sort(key=lambda cr: cr[1][1] - cr[1][0])
    built: dict[int, object] = {}  # claimed start stmt index -> node

    def build_items(lo: int, hi: int) -> list:
        items = []
        i = lo
        while i <= hi:
            node = built.get(i)
            if node is not None:
                items.append(node)
                i = node.claimed[1] + 1
            else:
                items.append(stmts[i])
                i += 1
        return items

    for cand, (first, last) in ranged:
        if cand.layout == "bottom_test":
            body_lo, body_hi = first + 1, last - 1  # between goto and cond
        elif cand.layout == "top_test":
            body_lo, body_hi = first + 1, last - 1  # between cond and goto
        else:
            body_lo, body_hi = first, last
        body_items = build_items(body_lo, body_hi) if body_hi >= body_lo else []
        try:
            node = normalize_loop(cand, stmts, body_items, claim_end=last)
        except (NonCanonicalLoop, IrregularControlFlow) as exc:
            node = IrregularLoop(reason=str(exc), body=body_items,
                                 claimed=(first, last),
                                 full_span=(cand.entry_offset, cand.exit_offset))
        built[node.claimed[0]] = node

    items = build_items(0, len(stmts) - 1)
    forest = LoopForest(items=items, stmts=stmts, candidates=cands)

    def assign_paths(nodes, prefix):
        for k, n in enumerate(nodes):
            n.path = prefix + (k,)
            assign_paths(n.children, n.path)

    assign_paths(forest.roots, ())
    return forest


def forest_json(forest: LoopForest) -> list:
    """--dump-loops payload: one tree entry per loop."""
    from .ir import fmt_expr

    def node_json(n):
        if isinstance(n, NormalizedLoop):
            return {
                "path": list(n.path), "ivar": n.ivar,
                "init": fmt_expr(n.init), "bound": fmt_expr(n.bound),
                "step": n.step, "cmp": n.cmp, "layout": n.layout,
                "span": list(n.full_span), "depth": len(n.path),
                "children": [node_json(c) for c in n.children],
            }
        return {
            "path": list(n.path), "irregular": True, "reason": n.reason,
            "span": list(n.full_span), "depth": len(n.path),
            "children": [node_json(c) for c in n.children],
        }

    return [node_json(r) for r in forest.roots]
