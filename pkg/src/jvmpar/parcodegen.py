"""Bytecode rewriting: task classes per worker plus a driver splice.

The parallelized region (one loop's full span) is cut out of the driver and
replaced with runtime chunk computation, task construction/start/join, and a
reduction merge for DP plans. Each worker gets its own Thread subclass
`<Owner>$JPTask<k>` whose run() re-creates the loop controls for its chunk
around the untouched original body bytecode (locals shifted by one for
`this`). The serial original survives as `<name>$serial`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .classfile.asm import ClassBuilder, CodeBuilder, compute_limits, import_pool_entry
from .classfile.code import BytecodeInstr
from .classfile.descriptors import parse_method_descriptor, slot_width
from .classfile.model import ACC_PUBLIC, ClassModel, CodeAttr, MethodEntry
from .errors import CaptureFailure, InconsistentModel, UnsupportedReduction
from .ir import BinOp, Const, IRExpr, Local, UnOp
from .loops import NormalizedLoop
from .xform import TransformCandidate

THREAD = "java/lang/Thread"

_LOAD_KIND = {"I": "i", "J": "l", "F": "f", "D": "d"}
_CMP_BRANCH = {"lt": "if_icmplt", "le": "if_icmple", "gt": "if_icmpgt", "ge": "if_icmpge"}
_IDENTITY = {"+": 0, "*": 1}


@dataclass
class ChunkSpec:
    n_workers: int
    chunks: list[tuple[int, int]]
    strategy: str = "block"


def make_chunks(trip_count: int, n_workers: int, strategy: str = "block") -> ChunkSpec:
    """Block: chunk c = [c*ceil(T/N), min((c+1)*ceil(T/N), T)); cyclic keeps
    (first index, T) per worker with an implied stride of N."""
    if strategy == "cyclic":
        return ChunkSpec(n_workers, [(min(k, trip_count), trip_count)
                                     for k in range(n_workers)], "cyclic")
    size = -(-trip_count // n_workers) if trip_count else 0
    chunks = []
    for k in range(n_workers):
        lo = min(k * size, trip_count)
        hi = min((k + 1) * size, trip_count)
        chunks.append((lo, hi))
    return ChunkSpec(n_workers, chunks, "block")


@dataclass
class ParallelVariant:
    driver: ClassModel
    tasks: list[ClassModel]
    method: str
    desc: str
    plan: dict
    provenance: TransformCandidate | None = None

    @property
    def driver_name(self) -> str:
        return self.driver.name

    def classes(self) -> dict[str, ClassModel]:
        out = {self.driver.name: self.driver}
        for t in self.tasks:
            out[t.name] = t
        return out

    def write_to(self, outdir) -> list[str]:
        from pathlib import Path
        from .classfile.io import emit_class
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        written = []
        for name, model in self.classes().items():
            path = outdir / f"{name.rsplit('/', 1)[-1]}.class"
            path.write_bytes(emit_class(model))
            written.append(str(path))
        return written


# ---------------------------------------------------------------------------
# slot usage scanning


def _slot_accesses(ins: BytecodeInstr):
    """(slot, 'read'|'write'|'iinc', kind letter) or None."""
    m = ins.mnemonic
    idx = ins.local_index()
    if idx is None:
        return None
    if m == "iinc":
        return idx, "iinc", "i"
    base = m.split("_")[0] if "_" in m and m[-1].isdigit() else m
    kind = base[0]
    if base[1:] == "load":
        return idx, "read", kind
    if base[1:] == "store":
        return idx, "write", kind
    return None


def _infer_slot_types(model: ClassModel, method: MethodEntry) -> dict[int, str]:
    types: dict[int, str] = {}
    params, _ = parse_method_descriptor(model.method_desc(method))
    slot = 0 if method.is_static() else 1
    if not method.is_static():
        types[0] = f"L{model.name};"
    for p in params:
        types[slot] = p
        slot += slot_width(p)
    prim = {"i": "I", "l": "J", "f": "F", "d": "D"}
    for ins in method.code.instructions:
        acc = _slot_accesses(ins)
        if acc and acc[0] not in types and acc[2] in prim:
            types[acc[0]] = prim[acc[2]]
    return types


def _region_instrs(method: MethodEntry, span: tuple[int, int]) -> list[BytecodeInstr]:
    return [i for i in method.code.instructions if span[0] <= i.offset < span[1]]


# ---------------------------------------------------------------------------
# small expression compiler (loop bounds/inits and tile bounds)


def compile_int_expr(b: CodeBuilder, expr: IRExpr, shift: int) -> None:
    if isinstance(expr, Const):
        b.const_int(int(expr.value))
    elif isinstance(expr, Local):
        b.load("i" if expr.type == "I" else "a", expr.slot + shift)
    elif isinstance(expr, UnOp) and expr.op == "arraylength":
        if not isinstance(expr.operand, Local):
            raise CaptureFailure("arraylength bound on a non-local array")
        b.load("a", expr.operand.slot + shift)
        b.emit("arraylength")
    elif isinstance(expr, UnOp) and expr.op == "neg":
        compile_int_expr(b, expr.operand, shift)
        b.emit("ineg")
    elif isinstance(expr, BinOp):
        if expr.op == "min":
            compile_int_expr(b, expr.left, shift)
            compile_int_expr(b, expr.right, shift)
            b.invoke("invokestatic", "java/lang/Math", "min", "(II)I")
        elif expr.op in ("add", "sub", "mul", "div"):
            compile_int_expr(b, expr.left, shift)
            compile_int_expr(b, expr.right, shift)
            b.emit({"add": "iadd", "sub": "isub", "mul": "imul", "div": "idiv"}[expr.op])
        else:
            raise CaptureFailure(f"bound expression op {expr.op} not compilable")
    else:
        raise CaptureFailure(f"bound expression {type(expr).__name__} not compilable")


def _expr_local_reads(expr: IRExpr) -> set[int]:
    from .ir import walk_expr
    return {n.slot for n in walk_expr(expr) if isinstance(n, Local)}


# ---------------------------------------------------------------------------
# splice relocation


def emit_relocated(b: CodeBuilder, instrs: list[BytecodeInstr], shift: int,
                   src_pool, end_label=None) -> None:
    """Re-emit a bytecode range with shifted locals and an imported pool."""
    span_end = instrs[-1].offset + instrs[-1].size() if instrs else 0
    labels: dict[int, object] = {}
    for ins in instrs:
        for t in ins.branch_targets():
            if instrs[0].offset <= t < span_end:
                labels.setdefault(t, b.new_label())
            elif t == span_end and end_label is not None:
                labels[t] = end_label
            else:
                raise CaptureFailure(f"branch at {ins.offset} escapes the region to {t}")

    for ins in instrs:
        if ins.offset in labels:
            b.label(labels[ins.offset])
        acc = _slot_accesses(ins)
        if acc is not None:
            slot, mode, kind = acc
            if mode == "read":
                b.load(kind, slot + shift)
            elif mode == "write":
                b.store(kind, slot + shift)
            else:
                b.iinc(slot + shift, ins.args[1])
            continue
        if ins.is_branch():
            b.branch(ins.mnemonic, labels[ins.args[0]])
            continue
        fmt = ins.fmt
        if fmt in ("cp1", "cp2") or ins.mnemonic in ("getstatic", "putstatic",
                                                     "getfield", "putfield"):
            new_index = import_pool_entry(b.pool, src_pool, ins.args[0])
            if ins.mnemonic == "ldc" or ins.mnemonic == "ldc_w":
                b.ldc_index(new_index, wide_value=False)
            elif ins.mnemonic == "ldc2_w":
                b.ldc_index(new_index, wide_value=True)
            else:
                b.emit(ins.mnemonic, new_index, *ins.args[1:])
            continue
        if ins.mnemonic == "multianewarray":
            new_index = import_pool_entry(b.pool, src_pool, ins.args[0])
            b.emit(ins.mnemonic, new_index, ins.args[1])
            continue
        b.emit(ins.mnemonic, *ins.args, wide=ins.wide)


# ---------------------------------------------------------------------------
# capture analysis


def analyze_captures(model: ClassModel, method: MethodEntry,
                     region: list[BytecodeInstr], regen_levels,
                     fresh_slots: set[int], dp_scalars: set[int],
                     post_seq: list[BytecodeInstr] | None = None):
    """(captured slot list, live-out violations) for the spliced region.

    `post_seq` is the instruction sequence that executes after one pass over
    the region (enclosing loop bodies wrap around, then the method suffix);
    defaults to the plain suffix."""
    reads: set[int] = set()
    writes: set[int] = set()
    first_is_write: dict[int, bool] = {}
    for ins in region:
        acc = _slot_accesses(ins)
        if acc is None:
            continue
        slot, mode, _ = acc
        if mode in ("read", "iinc"):
            reads.add(slot)
            first_is_write.setdefault(slot, False)
        if mode in ("write", "iinc"):
            writes.add(slot)
            first_is_write.setdefault(slot, mode == "write")
    for header in regen_levels:
        for expr in (header[1], header[2]):
            reads |= _expr_local_reads(expr)

    region_start = region[0].offset
    region_end = region[-1].offset + region[-1].size()
    defined_before = set()
    params, _ = parse_method_descriptor(model.method_desc(method))
    slot = 0 if method.is_static() else 1
    if not method.is_static():
        defined_before.add(0)
    for p in params:
        defined_before.add(slot)
        slot += slot_width(p)
    for ins in method.code.instructions:
        if ins.offset >= region_start:
            break
        acc = _slot_accesses(ins)
        if acc is not None and acc[1] in ("write", "iinc"):
            defined_before.add(acc[0])

    regen_ivars = {h[0] for h in regen_levels}
    captured = sorted((reads & defined_before) - regen_ivars - fresh_slots - dp_scalars)
    for s in sorted(reads - set(captured) - regen_ivars - fresh_slots - dp_scalars):
        if not first_is_write.get(s, False):
            raise CaptureFailure(
                f"slot {s} read in region, not definable at spawn and not written first")

    # live-out: region writes whose value is consumed after the region
    if post_seq is None:
        post_seq = [i for i in method.code.instructions if i.offset >= region_end]
    live_out = []
    pending = set(writes) - dp_scalars - regen_ivars
    for ins in post_seq:
        if not pending:
            break
        acc = _slot_accesses(ins)
        if acc is None:
            continue
        slot, mode, _ = acc
        if slot in pending:
            if mode in ("read", "iinc"):
                live_out.append(slot)
            pending.discard(slot)  # first touch decides
    return captured, live_out


# ---------------------------------------------------------------------------
# generation


class _Codegen:
    def __init__(self, model: ClassModel, method_name: str, desc: str,
                 nest: NormalizedLoop, cand: TransformCandidate,
                 n_workers: int, strategy: str = "block"):
        self.model = model
        self.method_name = method_name
        self.desc = desc
        self.cand = cand
        self.n = n_workers
        self.strategy = strategy
        self.method = model.find_method(method_name, desc)
        if self.method.code.exception_table:
            raise CaptureFailure("method has an exception table; not transformable")
        self.slot_types = _infer_slot_types(model, self.method)

        region_loop = nest
        ancestors: list[NormalizedLoop] = []
        for k in cand.region_path:
            ancestors.append(region_loop)
            region_loop = region_loop.children[k]
        self.region_span = region_loop.full_span
        self.region = _region_instrs(self.method, self.region_span)
        self.splice = _region_instrs(self.method, cand.splice_span)

        # execution order after one region pass: rest of each enclosing body,
        # wrap to its start, then outward; finally the method suffix
        self.post_seq: list[BytecodeInstr] = []
        lo, hi = self.region_span
        for anc in reversed(ancestors):
            b_lo, b_hi = anc.body_instr_span
            self.post_seq += _region_instrs(self.method, (hi, b_hi))
            self.post_seq += _region_instrs(self.method, (b_lo, lo))
            lo, hi = anc.full_span
        self.post_seq += [i for i in self.method.code.instructions if i.offset >= hi]

        self.levels = cand.regen_levels
        self.fresh = {h[0] for h in self.levels if h[0] not in self.slot_types}
        # reduction targets
        self.red_arrays = []  # (op, slot, elem desc)
        self.red_scalars = []  # (op, slot, type desc)
        if cand.verdict == "DP":
            for op, target in cand.reductions:
                if target[0] == "local" and target[1] in self.slot_types \
                        and self.slot_types[target[1]].startswith("["):
                    desc_t = self.slot_types[target[1]]
                    if desc_t.count("[") != 1:
                        raise UnsupportedReduction(
                            f"reduction over {desc_t}: only 1-D private copies supported")
                    if op not in ("+", "*", "min", "max"):
                        raise UnsupportedReduction(op)
                    self.red_arrays.append((op, target[1], desc_t[1:]))
                elif target[0] == "local":
                    t = self.slot_types.get(target[1])
                    if t not in ("I", "J", "F", "D"):
                        raise UnsupportedReduction(f"scalar reduction on type {t}")
                    if op not in ("+", "*", "min", "max"):
                        raise UnsupportedReduction(op)
                    self.red_scalars.append((op, target[1], t))
                else:
                    raise UnsupportedReduction(f"reduction target {target}")

        dp_scalar_slots = {s for _, s, _ in self.red_scalars}
        self.captured, live_out = analyze_captures(
            model, self.method, self.region, self.levels, self.fresh,
            dp_scalar_slots, self.post_seq)
        if live_out:
            raise CaptureFailure(
                f"region writes slots {sorted(set(live_out))} that are read afterwards")
        for s in self.captured:
            if s not in self.slot_types:
                raise CaptureFailure(f"cannot infer a type for captured slot {s}")
        # the merge loop reads the reduction arrays in the driver afterwards
        for op, s, elem in self.red_arrays:
            if s not in self.captured:
                raise CaptureFailure(f"reduction array slot {s} is not captured")

        self.task_names = [f"{model.name}$JPTask{k}" for k in range(self.n)]
        cap_descs = [self.slot_types[s] for s in self.captured]
        self.ctor_desc = "(II" + "".join(cap_descs) + ")V"

    # ---- task classes ------------------------------------------------------

    def build_task(self, k: int) -> ClassModel:
        name = self.task_names[k]
        cb = ClassBuilder(name, super_name=THREAD)
        cb.add_field("start", "I")
        cb.add_field("end", "I")
        for s in self.captured:
            cb.add_field(f"cap{s}", self.slot_types[s])
        for op, s, t in self.red_scalars:
            cb.add_field(f"partial{s}", t)

        # <init>(II captures)V
        b = cb.code_builder()
        b.load("a", 0)
        b.invoke("invokespecial", THREAD, "<init>", "()V")
        b.load("a", 0)
        b.load("i", 1)
        b.putfield(name, "start", "I")
        b.load("a", 0)
        b.load("i", 2)
        b.putfield(name, "end", "I")
        arg = 3
        for s in self.captured:
            t = self.slot_types[s]
            b.load("a", 0)
            b.load(_LOAD_KIND.get(t, "a"), arg)
            b.putfield(name, f"cap{s}", t)
            arg += slot_width(t)
        b.emit("return")
        cb.add_method("<init>", self.ctor_desc, ACC_PUBLIC, b)

        # run()V
        b = cb.code_builder()
        shift = 1  # original slot s lives at s+1; slot 0 is `this`
        scratch = self.method.code.max_locals + 8 + shift
        end_slot = scratch
        for s in self.captured:
            t = self.slot_types[s]
            b.load("a", 0)
            b.getfield(name, f"cap{s}", t)
            b.store(_LOAD_KIND.get(t, "a"), s + shift)
        for op, s, t in self.red_scalars:
            self._emit_identity(b, op, t)
            b.store(_LOAD_KIND[t], s + shift)
        b.load("a", 0)
        b.getfield(name, "end", "I")
        b.store("i", end_slot)

        self._emit_task_nest(b, shift, end_slot, name, k)

        for op, s, t in self.red_scalars:
            b.load("a", 0)
            b.load(_LOAD_KIND[t], s + shift)
            b.putfield(name, f"partial{s}", t)
        b.emit("return")
        cb.add_method("run", "()V", ACC_PUBLIC, b)
        return cb.build()

    def _emit_identity(self, b: CodeBuilder, op: str, t: str) -> None:
        if op in ("+", "*"):
            v = _IDENTITY[op]
            if t == "I":
                b.const_int(v)
            elif t == "J":
                b.const_long(v)
            elif t == "F":
                b.const_float(float(v))
            else:
                b.const_double(float(v))
        elif op == "min":
            if t == "I":
                b.const_int(2 ** 31 - 1)
            elif t == "J":
                b.const_long(2 ** 63 - 1)
            elif t == "F":
                b.const_float(float("inf"))
            else:
                b.const_double(float("inf"))
        else:  # max
            if t == "I":
                b.const_int(-(2 ** 31))
            elif t == "J":
                b.const_long(-(2 ** 63))
            elif t == "F":
                b.const_float(float("-inf"))
            else:
                b.const_double(float("-inf"))

    def _emit_task_nest(self, b: CodeBuilder, shift: int, end_slot: int,
                        owner: str, k: int) -> None:
        """Loop controls for the chunk, inner levels, then the spliced body."""
        levels = self.levels
        step0 = levels[0][3]
        stride = step0 if self.strategy == "block" else step0 * self.n
        iv0 = levels[0][0] + shift

        cond = b.new_label()
        body = b.new_label()
        b.load("a", 0)
        b.getfield(owner, "start", "I")
        b.store("i", iv0)
        b.goto(cond)
        b.label(body)
        self._emit_inner(b, levels[1:], shift)
        b.iinc(iv0, stride)
        b.label(cond)
        b.load("i", iv0)
        b.load("i", end_slot)
        b.branch("if_icmplt" if step0 > 0 else "if_icmpgt", body)

    def _emit_inner(self, b: CodeBuilder, levels, shift: int) -> None:
        if not levels:
            end = b.new_label()
            emit_relocated(b, self.splice, shift, self.model.pool, end_label=end)
            b.label(end)  # binds to the caller's iinc
            return
        ivar, init, bound, step, cmp = levels[0]
        iv = ivar + shift
        cond = b.new_label()
        body = b.new_label()
        compile_int_expr(b, init, shift)
        b.store("i", iv)
        b.goto(cond)
        b.label(body)
        self._emit_inner(b, levels[1:], shift)
        b.iinc(iv, step)
        b.label(cond)
        b.load("i", iv)
        compile_int_expr(b, bound, shift)
        b.branch(_CMP_BRANCH[cmp], body)

    # ---- driver ------------------------------------------------------------

    def build_driver(self) -> ClassModel:
        driver = self.model.clone()
        method = driver.find_method(self.method_name, self.desc)
        pool = driver.pool
        b = CodeBuilder(pool)

        instrs = method.code.instructions
        lo, hi = self.region_span
        prefix = [i for i in instrs if i.offset < lo]
        suffix = [i for i in instrs if i.offset >= hi]

        labels: dict[int, object] = {}
        block_start = b.new_label()
        suffix_start = b.new_label()
        for ins in prefix + suffix:
            for t in ins.branch_targets():
                if t == lo:
                    labels[t] = block_start
                elif t == hi or (suffix and t == suffix[0].offset):
                    labels[t] = suffix_start
                elif any(t == x.offset for x in prefix + suffix):
                    labels.setdefault(t, b.new_label())
                else:
                    raise CaptureFailure(f"driver branch into the region at {t}")

        def replay(seq):
            for ins in seq:
                if ins.offset in labels:
                    b.label(labels[ins.offset])
                if ins.is_branch():
                    b.branch(ins.mnemonic, labels[ins.args[0]])
                else:
                    b.emit(ins.mnemonic, *ins.args, wide=ins.wide)

        replay(prefix)
        b.label(block_start)
        self._emit_spawn_block(b)
        b.label(suffix_start)
        replay(suffix)

        new_instrs = b.assemble()
        ms, ml = compute_limits(new_instrs, pool, self.desc, self.method.is_static())
        # keep the serial original for differential verification
        serial = MethodEntry(
            self.method.access_flags,
            pool.add_utf8(self.method_name + "$serial"),
            pool.add_utf8(self.desc),
            CodeAttr(self.method.code.max_stack, self.method.code.max_locals,
                     list(self.method.code.instructions),
                     list(self.method.code.exception_table), []),
        )
        method.code = CodeAttr(ms, ml, new_instrs, [], [])
        method.attributes = []  # debug info is stale after rewriting
        driver.methods.append(serial)
        driver.major = min(driver.major, 49)
        pool.add_utf8("Code")
        return driver

    def _emit_spawn_block(self, b: CodeBuilder) -> None:
        base = self.method.code.max_locals + 16  # clear of original + task slots
        sT, sC, sS, sE = base, base + 1, base + 2, base + 3
        task_slots = [base + 4 + k for k in range(self.n)]
        priv_base = base + 4 + self.n
        levels = self.levels
        ivar, init, bound, step, cmp = levels[0]
        n = self.n

        # T = clamp(((bound - init) + (step-1) + (le ? 1 : 0)) / step, 0..)
        compile_int_expr(b, bound, 0)
        compile_int_expr(b, init, 0)
        b.emit("isub")
        extra = (step - 1 if step > 0 else -step - 1) + (1 if cmp in ("le", "ge") else 0)
        if extra:
            b.const_int(extra)
            b.emit("iadd")
        if step not in (1, -1):
            b.const_int(abs(step))
            b.emit("idiv")
        elif step == -1:
            b.emit("ineg")
        b.store("i", sT)
        ok = b.new_label()
        b.load("i", sT)
        b.branch("ifge", ok)
        b.const_int(0)
        b.store("i", sT)
        b.label(ok)
        # C = (T + N - 1) / N
        b.load("i", sT)
        b.const_int(n - 1)
        b.emit("iadd")
        b.const_int(n)
        b.emit("idiv")
        b.store("i", sC)

        # private copies for DP array reductions
        priv_slots: dict[tuple[int, int], int] = {}
        next_priv = priv_base
        for j, (op, s, elem) in enumerate(self.red_arrays):
            for k in range(n):
                priv_slots[(k, j)] = next_priv
                next_priv += 1

        for k in range(n):
            if self.strategy == "block":
                # sS = min(k*C, T); sE = min(sS + C, T)
                b.load("i", sC)
                b.const_int(k)
                b.emit("imul")
                b.load("i", sT)
                b.invoke("invokestatic", "java/lang/Math", "min", "(II)I")
                b.store("i", sS)
                b.load("i", sS)
                b.load("i", sC)
                b.emit("iadd")
                b.load("i", sT)
                b.invoke("invokestatic", "java/lang/Math", "min", "(II)I")
                b.store("i", sE)
            else:
                # cyclic: worker k covers indices {k, k+N, ...}; the task loop
                # strides by N*step, so start index is min(k, T), end is T
                b.const_int(k)
                b.load("i", sT)
                b.invoke("invokestatic", "java/lang/Math", "min", "(II)I")
                b.store("i", sS)
                b.load("i", sT)
                b.store("i", sE)

            for j, (op, s, elem) in enumerate(self.red_arrays):
                b.load("a", s)
                b.emit("arraylength")
                b.newarray_prim(elem)
                b.store("a", priv_slots[(k, j)])
                if op != "+":
                    self._emit_fill(b, priv_slots[(k, j)], op, elem, sS)

            b.new_object(self.task_names[k])
            b.emit("dup")
            for v_slot in (sS, sE):
                compile_int_expr(b, init, 0)
                b.load("i", v_slot)
                if step not in (1,):
                    b.const_int(step)
                    b.emit("imul")
                b.emit("iadd")
            red_slot_of = {s: j for j, (op, s, elem) in enumerate(self.red_arrays)}
            for s in self.captured:
                if s in red_slot_of:
                    b.load("a", priv_slots[(k, red_slot_of[s])])
                else:
                    t = self.slot_types[s]
                    b.load(_LOAD_KIND.get(t, "a"), s)
            b.invoke("invokespecial", self.task_names[k], "<init>", self.ctor_desc)
            b.store("a", task_slots[k])
            b.load("a", task_slots[k])
            b.invoke("invokevirtual", THREAD, "start", "()V")

        for k in range(n):
            b.load("a", task_slots[k])
            b.invoke("invokevirtual", THREAD, "join", "()V")

        # merge: deterministic worker order, single thread
        for j, (op, s, elem) in enumerate(self.red_arrays):
            for k in range(n):
                self._emit_array_merge(b, s, priv_slots[(k, j)], op, elem, sS)
        for op, s, t in self.red_scalars:
            for k in range(n):
                b.load(_LOAD_KIND[t], s)
                b.load("a", task_slots[k])
                b.getfield(self.task_names[k], f"partial{s}", t)
                self._emit_combine(b, op, t)
                b.store(_LOAD_KIND[t], s)

    def _emit_fill(self, b: CodeBuilder, arr_slot: int, op: str, elem: str,
                   idx_slot: int) -> None:
        # for (x = 0; x < arr.length; x++) arr[x] = identity
        cond = b.new_label()
        body = b.new_label()
        b.const_int(0)
        b.store("i", idx_slot)
        b.goto(cond)
        b.label(body)
        b.load("a", arr_slot)
        b.load("i", idx_slot)
        self._emit_identity(b, op, elem)
        b.emit({"I": "iastore", "J": "lastore", "F": "fastore", "D": "dastore"}[elem])
        b.iinc(idx_slot, 1)
        b.label(cond)
        b.load("i", idx_slot)
        b.load("a", arr_slot)
        b.emit("arraylength")
        b.branch("if_icmplt", body)

    def _emit_array_merge(self, b: CodeBuilder, dst_slot: int, src_slot: int,
                          op: str, elem: str, idx_slot: int) -> None:
        # for (x = 0; x < dst.length; x++) dst[x] = dst[x] op src[x]
        cond = b.new_label()
        body = b.new_label()
        b.const_int(0)
        b.store("i", idx_slot)
        b.goto(cond)
        b.label(body)
        b.load("a", dst_slot)
        b.load("i", idx_slot)
        b.load("a", dst_slot)
        b.load("i", idx_slot)
        b.emit({"I": "iaload", "J": "laload", "F": "faload", "D": "daload"}[elem])
        b.load("a", src_slot)
        b.load("i", idx_slot)
        b.emit({"I": "iaload", "J": "laload", "F": "faload", "D": "daload"}[elem])
        self._emit_combine(b, op, elem)
        b.emit({"I": "iastore", "J": "lastore", "F": "fastore", "D": "dastore"}[elem])
        b.iinc(idx_slot, 1)
        b.label(cond)
        b.load("i", idx_slot)
        b.load("a", dst_slot)
        b.emit("arraylength")
        b.branch("if_icmplt", body)

    def _emit_combine(self, b: CodeBuilder, op: str, t: str) -> None:
        prefix = {"I": "i", "J": "l", "F": "f", "D": "d"}[t]
        if op == "+":
            b.emit(prefix + "add")
        elif op == "*":
            b.emit(prefix + "mul")
        elif op in ("min", "max"):
            b.invoke("invokestatic", "java/lang/Math", op, f"({t}{t}){t}")
        else:
            raise UnsupportedReduction(op)

    def build(self) -> ParallelVariant:
        tasks = [self.build_task(k) for k in range(self.n)]
        driver = self.build_driver()
        plan = {
            "mode": self.cand.verdict,
            "strategy": self.strategy,
            "n_workers": self.n,
            "captured_slots": list(self.captured),
            "reductions": [{"op": op, "target": list(t)} for op, t in self.cand.reductions],
            "task_classes": list(self.task_names),
            "candidate": self.cand.describe(),
        }
        return ParallelVariant(driver=driver, tasks=tasks, method=self.method_name,
                               desc=self.desc, plan=plan, provenance=self.cand)


def emit_variant(model: ClassModel, method_name: str, desc: str,
                 nest: NormalizedLoop, cand: TransformCandidate,
                 n_workers: int, strategy: str = "block") -> ParallelVariant:
    return _Codegen(model, method_name, desc, nest, cand, n_workers, strategy).build()


def parallelize_ip(model, method_name, desc, nest, cand, chunks: ChunkSpec):
    if cand.verdict != "IP":
        raise InconsistentModel("parallelize_ip on a non-IP candidate")
    return emit_variant(model, method_name, desc, nest, cand,
                        chunks.n_workers, chunks.strategy)


def parallelize_dp(model, method_name, desc, nest, cand, chunks: ChunkSpec):
    if cand.verdict != "DP":
        raise InconsistentModel("parallelize_dp on a non-DP candidate")
    return emit_variant(model, method_name, desc, nest, cand,
                        chunks.n_workers, chunks.strategy)
