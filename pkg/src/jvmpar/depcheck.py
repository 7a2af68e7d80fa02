"""Dependence analysis and parallelism classification.

Array subscripts are linearized over enclosing loop counters and symbolic
parameters (integer coefficients); dependence existence per loop level is
decided by rational Fourier-Motzkin over subscript equality + loop bounds +
ordering. Scalars go through privatization and reduction recognition.

Verdict per loop level: IP (independent iterations), DP (all carried
dependences are recognized reductions), or serial.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .dfg import array_root, expr_reads, stmt_reads, stmt_writes
from .fm import InequalitySystem, fm_eliminate
from .ir import (ArrayElem, BinOp, Call, Const, IRExpr, IRStatement, Local,
                 UnOp, exprs_equal, fmt_expr)
from .loops import IrregularLoop, NormalizedLoop

REDUCTION_OPS = {"add": "+", "mul": "*", "min": "min", "max": "max"}

# linear form: ({term_key: int_coeff}, int_const); term keys are
# ('iv', loop) for counters and ('p', var_key) / ('p', ('len', root)) for params
LinForm = tuple[dict, int]


@dataclass(eq=False)
class AffineAccess:
    array: tuple  # root variable key
    kind: str  # read | write
    dims: list[LinForm | None]
    non_affine: bool
    stmt: IRStatement
    chain: tuple[NormalizedLoop, ...]  # enclosing canonical loops, outer->inner
    subscripts: list[IRExpr]

    @property
    def coeffs(self):
        """Per-dimension {loop: coeff} over the enclosing counters."""
        out = []
        for d in self.dims:
            if d is None:
                out.append(None)
            else:
                out.append({k[1]: c for k, c in d[0].items() if k[0] == "iv"})
        return out

    @property
    def consts(self):
        return [None if d is None else d[1] for d in self.dims]


@dataclass
class DependenceResult:
    src: AffineAccess
    dst: AffineAccess
    exists: str  # 'no' | 'maybe'
    carried_by: set = field(default_factory=set)  # NormalizedLoop objects
    classes: set = field(default_factory=set)  # flow | anti | output
    directions: set = field(default_factory=set)  # tuples over common levels
    loop_independent: bool = False
    assumed: str = ""  # non-affine / non-linear bound notes


@dataclass
class LevelVerdict:
    loop: NormalizedLoop
    verdict: str  # IP | DP | serial
    reductions: list = field(default_factory=list)  # (op symbol, target key)
    blockers: list = field(default_factory=list)  # human-readable reasons


@dataclass
class ParallelismType:
    by_loop: dict  # NormalizedLoop -> LevelVerdict
    summary: str  # fully | partially | serial

    def verdict(self, loop) -> str:
        return self.by_loop[loop].verdict


# ---------------------------------------------------------------------------
# affine extraction


def _lin_combine(a: LinForm, b: LinForm, sign: int) -> LinForm:
    terms = dict(a[0])
    for k, c in b[0].items():
        terms[k] = terms.get(k, 0) + sign * c
        if terms[k] == 0:
            del terms[k]
    return terms, a[1] + sign * b[1]


def _lin_scale(a: LinForm, s: int) -> LinForm:
    return {k: c * s for k, c in a[0].items() if c * s != 0}, a[1] * s


def linearize(expr: IRExpr, ivars: dict[int, NormalizedLoop],
              written: set[int]) -> LinForm | None:
    """Affine form over counters/params, or None."""
    if isinstance(expr, Const):
        return ({}, expr.value) if isinstance(expr.value, int) else None
    if isinstance(expr, Local):
        if expr.slot in ivars:
            return {("iv", ivars[expr.slot]): 1}, 0
        if expr.slot in written:
            return None
        return {("p", ("local", expr.slot)): 1}, 0
    if isinstance(expr, UnOp):
        if expr.op == "neg":
            inner = linearize(expr.operand, ivars, written)
            return None if inner is None else _lin_scale(inner, -1)
        if expr.op == "arraylength":
            root = array_root(expr.operand)
            if isinstance(expr.operand, Local) and expr.operand.slot not in written:
                return {("p", ("len", root)): 1}, 0
        return None
    if isinstance(expr, BinOp):
        if expr.op in ("add", "sub"):
            left = linearize(expr.left, ivars, written)
            right = linearize(expr.right, ivars, written)
            if left is None or right is None:
                return None
            return _lin_combine(left, right, 1 if expr.op == "add" else -1)
        if expr.op == "mul":
            left = linearize(expr.left, ivars, written)
            right = linearize(expr.right, ivars, written)
            if left is None or right is None:
                return None
            if not left[0]:
                return _lin_scale(right, left[1])
            if not right[0]:
                return _lin_scale(left, right[1])
            return None
    return None


def _written_locals(nest) -> set[int]:
    written = set()
    for s in nest.statements():
        for var in stmt_writes(s):
            if var[0] == "local":
                written.add(var[1])
    return written


def _maximal_array_elems(e: IRExpr | None, out: list, seen: set):
    """Collect outermost ArrayElem chains in an expression tree."""
    if e is None or id(e) in seen:
        return
    seen.add(id(e))
    if isinstance(e, ArrayElem):
        out.append(e)
        # subscripts may contain further accesses (hist[data[i]])
        node = e
        while isinstance(node, ArrayElem):
            _maximal_array_elems(node.index, out, seen)
            node = node.array
        return
    if isinstance(e, BinOp):
        _maximal_array_elems(e.left, out, seen)
        _maximal_array_elems(e.right, out, seen)
    elif isinstance(e, UnOp):
        if e.op != "arraylength":
            _maximal_array_elems(e.operand, out, seen)
    elif isinstance(e, Call):
        for a in e.args:
            _maximal_array_elems(a, out, seen)


def _unwrap_dims(elem: ArrayElem) -> list[IRExpr]:
    subs = []
    node = elem
    while isinstance(node, ArrayElem):
        subs.append(node.index)
        node = node.array
    return subs[::-1]  # outermost dimension first


def extract_affine(nest: NormalizedLoop) -> list[AffineAccess]:
    written = _written_locals(nest)
    out: list[AffineAccess] = []

    def visit(node, chain):
        ivars = {lp.ivar: lp for lp in chain}
        for item in node.body:
            if isinstance(item, (NormalizedLoop, IrregularLoop)):
                visit(item, chain + (item,) if isinstance(item, NormalizedLoop) else chain)
                continue
            stmt = item
            elems: list[ArrayElem] = []
            seen: set = set()
            if stmt.kind == "array_store":
                subs = _unwrap_dims(stmt.target)
                dims = [linearize(s, ivars, written) for s in subs]
                out.append(AffineAccess(
                    array=array_root(stmt.target), kind="write", dims=dims,
                    non_affine=any(d is None for d in dims), stmt=stmt,
                    chain=chain, subscripts=subs))
                for s in subs:
                    _maximal_array_elems(s, elems, seen)
                node2 = stmt.target.array
                _maximal_array_elems(node2, elems, seen)
                _maximal_array_elems(stmt.expr, elems, seen)
            else:
                _maximal_array_elems(stmt.expr, elems, seen)
                if stmt.kind == "cond_branch" or stmt.kind == "return_stmt":
                    pass
            for e in elems:
                subs = _unwrap_dims(e)
                dims = [linearize(s, ivars, written) for s in subs]
                out.append(AffineAccess(
                    array=array_root(e), kind="read", dims=dims,
                    non_affine=any(d is None for d in dims), stmt=stmt,
                    chain=chain, subscripts=subs))

    visit(nest, (nest,))
    return out


# ---------------------------------------------------------------------------
# dependence systems


class _SysBuilder:
    def __init__(self):
        self.names: list[str] = []
        self.index: dict = {}

    def var(self, key) -> int:
        if key not in self.index:
            self.index[key] = len(self.names)
            self.names.append(str(key))
        return self.index[key]


def _bounds_rows(builder: _SysBuilder, sys: InequalitySystem, side: str,
                 chain: tuple[NormalizedLoop, ...], written: set[int]) -> bool:
    """Constrain one side's iteration vector by its loop bounds."""
    for depth, lp in enumerate(chain):
        outer_ivars = {c.ivar: c for c in chain[:depth]}
        init = linearize(lp.init, outer_ivars, written)
        bound = linearize(lp.bound, outer_ivars, written)
        if init is None or bound is None:
            return False

        def form_coeffs(form: LinForm, sign: int) -> tuple[dict, int]:
            coeffs: dict[int, int] = {}
            for k, c in form[0].items():
                key = (side, k[1]) if k[0] == "iv" else k  # params shared
                idx = builder.var(key)
                coeffs[idx] = coeffs.get(idx, 0) + sign * c
            return coeffs, sign * form[1]

        me = builder.var((side, lp))
        if lp.step > 0:
            # i - init >= 0
            coeffs, const = form_coeffs(init, -1)
            coeffs[me] = coeffs.get(me, 0) + 1
            sys.add_ge0(coeffs, const)
            # bound - i + slack >= 0;  slack -1 for 'lt', 0 for 'le'
            coeffs, const = form_coeffs(bound, 1)
            coeffs[me] = coeffs.get(me, 0) - 1
            sys.add_ge0(coeffs, const + (-1 if lp.cmp == "lt" else 0))
        else:
            # i - bound - slack >= 0;  slack 1 for 'gt', 0 for 'ge'
            coeffs, const = form_coeffs(bound, -1)
            coeffs[me] = coeffs.get(me, 0) + 1
            sys.add_ge0(coeffs, const - (1 if lp.cmp == "gt" else 0))
            # init - i >= 0
            coeffs, const = form_coeffs(init, 1)
            coeffs[me] = coeffs.get(me, 0) - 1
            sys.add_ge0(coeffs, const)
    return True


def _subscript_rows(builder: _SysBuilder, sys: InequalitySystem,
                    src: AffineAccess, dst: AffineAccess) -> None:
    for ds, dd in zip(src.dims, dst.dims):
        coeffs: dict[int, int] = {}
        const = 0
        for k, c in ds[0].items():
            key = ("s", k[1]) if k[0] == "iv" else k
            idx = builder.var(key)
            coeffs[idx] = coeffs.get(idx, 0) + c
        const += ds[1]
        for k, c in dd[0].items():
            key = ("d", k[1]) if k[0] == "iv" else k
            idx = builder.var(key)
            coeffs[idx] = coeffs.get(idx, 0) - c
        const -= dd[1]
        sys.add_eq(coeffs, const)


def _param_rows(builder: _SysBuilder, sys: InequalitySystem) -> None:
    for key, idx in list(builder.index.items()):
        if isinstance(key, tuple) and key[0] == "p":
            sys.add_ge0({idx: 1}, -1)  # parameters are at least 1


def common_prefix(a: tuple, b: tuple) -> tuple:
    out = []
    for x, y in zip(a, b):
        if x is y:
            out.append(x)
        else:
            break
    return tuple(out)


def _direction_feasible(src: AffineAccess, dst: AffineAccess,
                        prefix: tuple, dirs: tuple[str, ...],
                        written: set[int], row_cap: int) -> bool:
    builder = _SysBuilder()
    sys = InequalitySystem(names=builder.names)
    if not _bounds_rows(builder, sys, "s", src.chain, written):
        return True  # non-linear bound: conservative
    if not _bounds_rows(builder, sys, "d", dst.chain, written):
        return True
    _subscript_rows(builder, sys, src, dst)
    for lp, d in zip(prefix, dirs):
        s_i = builder.var(("s", lp))
        d_i = builder.var(("d", lp))
        # execution order: for positive step '<' means smaller counter value
        sign = 1 if lp.step > 0 else -1
        if d == "=":
            sys.add_eq({s_i: 1, d_i: -1}, 0)
        elif d == "<":
            sys.add_ge0({d_i: sign, s_i: -sign}, -1)
        else:
            sys.add_ge0({s_i: sign, d_i: -sign}, -1)
    _param_rows(builder, sys)
    return fm_eliminate(sys, row_cap=row_cap) == "feasible_rational"


def feasible_directions(src: AffineAccess, dst: AffineAccess,
                        row_cap: int = 10_000) -> tuple[set, bool]:
    """All direction vectors over the common loop prefix, plus an exactness
    flag (False means everything was assumed due to non-affine parts)."""
    prefix = common_prefix(src.chain, dst.chain)
    if src.non_affine or dst.non_affine or len(src.dims) != len(dst.dims):
        return set(itertools.product("<=>", repeat=len(prefix))), False
    written = _written_locals(src.chain[0]) if src.chain else set()

    results: set = set()

    def dfs(prefix_dirs: tuple[str, ...]):
        if not _direction_feasible(src, dst, prefix[:len(prefix_dirs)],
                                   prefix_dirs, written, row_cap):
            return
        if len(prefix_dirs) == len(prefix):
            results.add(prefix_dirs)
            return
        for d in "<=>":
            dfs(prefix_dirs + (d,))

    dfs(())
    return results, True


def test_dependence(src: AffineAccess, dst: AffineAccess,
                    nest: NormalizedLoop | None = None,
                    row_cap: int = 10_000) -> DependenceResult:
    """Ordered test: does some sink instance of `dst` depend on an earlier
    source instance of `src`? carried_by holds the carrying loops."""
    prefix = common_prefix(src.chain, dst.chain)
    directions, exact = feasible_directions(src, dst, row_cap)

    carried = set()
    for level, lp in enumerate(prefix):
        for d in directions:
            if all(x == "=" for x in d[:level]) and d[level] == "<":
                carried.add(lp)
                break
    li = any(all(x == "=" for x in d) for d in directions) and \
        src.stmt.index <= dst.stmt.index
    cls = {"write": {"write": "output", "read": "flow"},
           "read": {"write": "anti", "read": "none"}}[src.kind][dst.kind]
    exists = "maybe" if (carried or li) else "no"
    return DependenceResult(
        src=src, dst=dst, exists=exists, carried_by=carried,
        classes={cls} if cls != "none" else set(),
        directions=directions, loop_independent=li,
        assumed="" if exact else "non-affine access: all directions assumed")


# ---------------------------------------------------------------------------
# scalar analysis


def _reduction_array_stmt(stmt: IRStatement):
    """(op symbol, root) when stmt is `A[s] = A[s] op e` with e free of A."""
    if stmt.kind != "array_store" or not isinstance(stmt.expr, BinOp):
        return None
    op = stmt.expr.op
    if op not in REDUCTION_OPS:
        return None
    root = array_root(stmt.target)
    for load, other in ((stmt.expr.left, stmt.expr.right),
                        (stmt.expr.right, stmt.expr.left)):
        if isinstance(load, ArrayElem) and exprs_equal(load, stmt.target):
            if ("cells", root) not in expr_reads(other):
                return REDUCTION_OPS[op], root
    return None


def _reduction_scalar_stmt(stmt: IRStatement):
    """(op symbol, ('local', slot)) for `t = t op e` / iinc t."""
    if stmt.kind == "inc":
        return "+", ("local", stmt.target.slot)
    if stmt.kind != "assign" or not isinstance(stmt.target, Local):
        return None
    e = stmt.expr
    key = ("local", stmt.target.slot)
    if isinstance(e, BinOp) and e.op in REDUCTION_OPS:
        for load, other in ((e.left, e.right), (e.right, e.left)):
            if isinstance(load, Local) and load.slot == stmt.target.slot:
                if key not in expr_reads(other):
                    return REDUCTION_OPS[e.op], key
    if isinstance(e, Call) and e.owner == "java/lang/Math" and e.name in ("min", "max") \
            and len(e.args) == 2:
        for load, other in ((e.args[0], e.args[1]), (e.args[1], e.args[0])):
            if isinstance(load, Local) and load.slot == stmt.target.slot:
                if key not in expr_reads(other):
                    return e.name, key
    return None


def upward_exposed(items: list, key) -> bool:
    """May `key` be read before it is written within one pass over items?"""
    definite = True  # writes before any branch statement dominate
    for item in items:
        if isinstance(item, IRStatement):
            if key in stmt_reads(item):
                return True
            if key in stmt_writes(item) and definite:
                return False
            if item.kind in ("cond_branch", "goto"):
                definite = False
        else:
            if isinstance(item, NormalizedLoop):
                if key in expr_reads(item.init) or key in expr_reads(item.bound):
                    return True
            if upward_exposed(item.body, key):
                return True
            if isinstance(item, NormalizedLoop) and key == ("local", item.ivar):
                if definite:
                    return False  # the child's init always runs
            # zero-trip children never make other writes definite
    return False


# ---------------------------------------------------------------------------
# classification


def classify(nest: NormalizedLoop, results: list[DependenceResult],
             forest_or_dfg=None) -> ParallelismType:
    """Per-level IP/DP/serial verdicts for every canonical loop in `nest`."""
    loops: list[NormalizedLoop] = []

    def collect(n):
        if isinstance(n, NormalizedLoop):
            loops.append(n)
        for c in n.children:
            collect(c)

    collect(nest)

    def coverage_maps(lp: NormalizedLoop):
        """Reduction coverage is scoped to the statements of this loop's
        subtree: a read outside the loop must not veto an inner reduction."""
        red_by_target: dict = {}
        plain_touch: dict = {}
        for s in lp.statements():
            red_a = _reduction_array_stmt(s)
            red_s = _reduction_scalar_stmt(s)
            touched = set()
            for var in stmt_reads(s) | stmt_writes(s):
                if var[0] == "cells":
                    touched.add(var[1])
                elif var[0] == "local":
                    touched.add(var)
            for t in touched:
                if red_a is not None and red_a[1] == t:
                    red_by_target.setdefault(t, set()).add(red_a[0])
                elif red_s is not None and red_s[1] == t:
                    red_by_target.setdefault(t, set()).add(red_s[0])
                else:
                    plain_touch.setdefault(t, set()).add(s.index)
        return red_by_target, plain_touch

    by_loop = {}
    for lp in loops:
        red_by_target, plain_touch = coverage_maps(lp)

        def covered_by_reduction(target) -> str | None:
            ops = red_by_target.get(target)
            if ops is None or len(ops) != 1 or target in plain_touch:
                return None
            return next(iter(ops))

        carried = [r for r in results if lp in r.carried_by]
        blockers = []
        reductions = []
        ok = True

        for root in {r.src.array for r in carried}:
            op = covered_by_reduction(root)
            if op is None:
                samples = [r for r in carried if r.src.array == root][:1]
                why = samples[0].assumed if samples and samples[0].assumed else "carried dependence"
                blockers.append(f"array {root}: {why}")
                ok = False
            else:
                reductions.append((op, root))

        # scalars written in this loop's subtree
        subtree_writes = set()
        for s in lp.statements():
            for var in stmt_writes(s):
                if var[0] == "local":
                    subtree_writes.add(var)
        for var in sorted(subtree_writes):
            if not upward_exposed(lp.body, var):
                continue  # privatizable
            op = covered_by_reduction(var)
            if op is None:
                blockers.append(f"scalar slot {var[1]} carried and not a reduction")
                ok = False
            else:
                reductions.append((op, var))

        if ok and not carried and not reductions:
            verdict = "IP"
        elif ok:
            verdict = "DP" if reductions else "IP"
        else:
            verdict = "serial"
        by_loop[lp] = LevelVerdict(loop=lp, verdict=verdict,
                                   reductions=sorted(set(reductions), key=str),
                                   blockers=blockers)

    n_par = sum(1 for v in by_loop.values() if v.verdict in ("IP", "DP"))
    summary = "fully" if n_par == len(by_loop) and by_loop else \
        ("partially" if n_par else "serial")
    return ParallelismType(by_loop=by_loop, summary=summary)


def analyze_nest(nest: NormalizedLoop, row_cap: int = 10_000):
    """(accesses, ordered dependence results, classification) for one nest."""
    if not isinstance(nest, NormalizedLoop):
        return [], [], ParallelismType(by_loop={}, summary="serial")
    accesses = extract_affine(nest)
    # depths at which each root is written: element writes at full depth do
    # not conflict with shallower row-pointer reads of a tree-shaped array
    write_depths: dict = {}
    for a in accesses:
        if a.kind == "write":
            write_depths.setdefault(a.array, set()).add(len(a.dims))
    results = []
    for src in accesses:
        for dst in accesses:
            if src.kind == "read" and dst.kind == "read":
                continue
            if src.array != dst.array:
                continue
            if len(src.dims) != len(dst.dims):
                depths = write_depths.get(src.array, set())
                shallow = min(len(src.dims), len(dst.dims))
                if all(d > shallow for d in depths):
                    continue  # distinct layers, row pointers never replaced
                prefix = common_prefix(src.chain, dst.chain)
                results.append(DependenceResult(
                    src=src, dst=dst, exists="maybe",
                    carried_by=set(prefix),
                    classes={"flow"} if src.kind == "write" else {"anti"},
                    directions={d for d in itertools.product("<=>", repeat=len(prefix))},
                    loop_independent=True,
                    assumed="mixed-depth accesses with row-pointer writes"))
                continue
            r = test_dependence(src, dst, nest, row_cap)
            if r.exists != "no":
                results.append(r)
    pt = classify(nest, results)
    return accesses, results, pt


def deps_json(nest: NormalizedLoop, accesses, results, pt: ParallelismType) -> dict:
    """--dump-deps payload for one nest."""
    def key_str(k):
        return f"{k[0]}:{k[1]}" if len(k) == 2 else f"{k[0]}:{k[1]}.{k[2]}"

    loops = []
    for lp, v in pt.by_loop.items():
        loops.append({
            "path": list(lp.path), "ivar": lp.ivar, "verdict": v.verdict,
            "reductions": [{"op": op, "target": key_str(t)} for op, t in v.reductions],
            "blockers": v.blockers,
        })
    pairs = []
    for r in results:
        pairs.append({
            "array": key_str(r.src.array),
            "src": fmt_expr(r.src.stmt.target) if r.src.stmt.target is not None else "",
            "dst_stmt": r.dst.stmt.index,
            "src_kind": r.src.kind, "dst_kind": r.dst.kind,
            "classes": sorted(r.classes),
            "carried_by": [list(lp.path) for lp in r.carried_by],
            "loop_independent": r.loop_independent,
            "assumption": r.assumed,
        })
    return {"summary": pt.summary, "loops": loops, "dependences": pairs,
            "assumptions": ["distinct array parameters assumed non-aliasing"]}
