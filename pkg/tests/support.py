"""Shared fixtures: corpus loading, kernel input builders, hand-assembled
classes, and the randomized straight-line method generator."""

from __future__ import annotations

import random
from pathlib import Path

from jvmpar.classfile import io
from jvmpar.classfile.asm import ClassBuilder
from jvmpar.classfile.model import ACC_PUBLIC, ACC_STATIC, ClassModel
from jvmpar.interp import JArray, jarray_of, new_array

PS = ACC_PUBLIC | ACC_STATIC
CORPUS = Path(__file__).resolve().parent.parent / "corpus"
FIXTURES = CORPUS / "fixtures"


def load_fixture(name: str) -> ClassModel:
    return io.parse_class((FIXTURES / name).read_bytes())


def fixture_bytes(name: str) -> bytes:
    return (FIXTURES / name).read_bytes()


# ---- kernel inputs ---------------------------------------------------------


def matmul_inputs(n: int):
    def gen(rng: random.Random):
        def mat(fill):
            return jarray_of("[D", [jarray_of("D", [fill(rng) for _ in range(n)])
                                    for _ in range(n)])
        return [mat(lambda r: r.random()), mat(lambda r: r.random()),
                mat(lambda r: 0.0), n]
    return gen


def histogram_inputs(n_values: int, bins: int):
    def gen(rng: random.Random):
        data = jarray_of("I", [rng.randrange(0, 4 * bins) for _ in range(n_values)])
        return [data, new_array("I", bins)]
    return gen


def nbody_inputs(bodies: int, steps: int):
    def gen(rng: random.Random):
        return [jarray_of("D", [rng.uniform(-1, 1) for _ in range(bodies)]),
                jarray_of("D", [rng.uniform(-1, 1) for _ in range(bodies)]),
                new_array("D", bodies), new_array("D", bodies),
                jarray_of("D", [rng.uniform(0.5, 2.0) for _ in range(bodies)]),
                steps]
    return gen


def fft_inputs():
    def gen(rng: random.Random):
        return [jarray_of("D", [rng.uniform(-1, 1) for _ in range(64)]),
                jarray_of("D", [rng.uniform(-1, 1) for _ in range(64)])]
    return gen


# ---- hand-assembled classes -------------------------------------------------


def build_top_test_loop() -> ClassModel:
    """Layout (b): top test branching past the body, backward goto.
    static void fill(int[] a, int n) { for (i=0;i<n;i++) a[i] = i*2; }"""
    cb = ClassBuilder("TopTest")
    b = cb.code_builder()
    cond = b.new_label()
    exit_ = b.new_label()
    b.const_int(0)
    b.store("i", 2)
    b.label(cond)
    b.load("i", 2)
    b.load("i", 1)
    b.branch("if_icmpge", exit_)
    b.load("a", 0)
    b.load("i", 2)
    b.load("i", 2)
    b.const_int(2)
    b.emit("imul")
    b.emit("iastore")
    b.iinc(2, 1)
    b.goto(cond)
    b.label(exit_)
    b.emit("return")
    cb.add_method("fill", "([II)V", PS, b)
    return cb.build()


def build_skew_dep() -> ClassModel:
    """a[i][j] = a[i-1][j+1] * 0.5 over i in [1,n), j in [0,n-1):
    direction (<,>), so interchanging i and j is illegal."""
    cb = ClassBuilder("SkewDep")
    b = cb.code_builder()
    # for (i=1; i<n; i++)
    icond, ibody = b.new_label(), b.new_label()
    b.const_int(1)
    b.store("i", 2)
    b.goto(icond)
    b.label(ibody)
    #   for (j=0; j<n-1; j++)
    jcond, jbody = b.new_label(), b.new_label()
    b.const_int(0)
    b.store("i", 3)
    b.goto(jcond)
    b.label(jbody)
    b.load("a", 0)
    b.load("i", 2)
    b.emit("aaload")
    b.load("i", 3)
    b.load("a", 0)
    b.load("i", 2)
    b.const_int(1)
    b.emit("isub")
    b.emit("aaload")
    b.load("i", 3)
    b.const_int(1)
    b.emit("iadd")
    b.emit("daload")
    b.const_double(0.5)
    b.emit("dmul")
    b.emit("dastore")
    b.iinc(3, 1)
    b.label(jcond)
    b.load("i", 3)
    b.load("i", 1)
    b.const_int(1)
    b.emit("isub")
    b.branch("if_icmplt", jbody)
    b.iinc(2, 1)
    b.label(icond)
    b.load("i", 2)
    b.load("i", 1)
    b.branch("if_icmplt", ibody)
    b.emit("return")
    cb.add_method("skew", "([[DI)V", PS, b)
    return cb.build()


def build_prefix_sum() -> ClassModel:
    """s[i] = s[i-1] + x[i]: a carried non-reduction flow, serial everywhere."""
    cb = ClassBuilder("PrefixSum")
    b = cb.code_builder()
    cond, body = b.new_label(), b.new_label()
    b.const_int(1)
    b.store("i", 2)
    b.goto(cond)
    b.label(body)
    b.load("a", 0)          # s
    b.load("i", 2)
    b.load("a", 0)
    b.load("i", 2)
    b.const_int(1)
    b.emit("isub")
    b.emit("daload")        # s[i-1]
    b.load("a", 1)
    b.load("i", 2)
    b.emit("daload")        # x[i]
    b.emit("dadd")
    b.emit("dastore")
    b.iinc(2, 1)
    b.label(cond)
    b.load("i", 2)
    b.load("a", 0)
    b.emit("arraylength")
    b.branch("if_icmplt", body)
    b.emit("return")
    cb.add_method("scan", "([D[D)V", PS, b)
    return cb.build()


def build_ternary() -> ClassModel:
    """Value carried across a branch: x = (n==0 ? 1 : 2). The decompiler
    must refuse with NonEmptyStackAtBoundary."""
    cb = ClassBuilder("Ternary")
    b = cb.code_builder()
    other, join = b.new_label(), b.new_label()
    b.load("i", 0)
    b.branch("ifeq", other)
    b.const_int(2)
    b.goto(join)
    b.label(other)
    b.const_int(1)
    b.label(join)
    b.store("i", 1)
    b.load("i", 1)
    b.emit("ireturn")
    cb.add_method("pick", "(I)I", PS, b)
    return cb.build()


def build_conflict_variant():
    """Driver + two tasks that both write out[0]: schedules disagree and the
    conflict check fires. Returns (serial model, ParallelVariant-alike)."""
    from jvmpar.parcodegen import ParallelVariant

    def task(k: int) -> ClassModel:
        cb = ClassBuilder(f"Conflict$JPTask{k}", super_name="java/lang/Thread")
        cb.add_field("out", "[I")
        b = cb.code_builder()
        b.load("a", 0)
        b.invoke("invokespecial", "java/lang/Thread", "<init>", "()V")
        b.load("a", 0)
        b.load("a", 1)
        b.putfield(f"Conflict$JPTask{k}", "out", "[I")
        b.emit("return")
        cb.add_method("<init>", "([I)V", ACC_PUBLIC, b)
        b = cb.code_builder()
        b.load("a", 0)
        b.getfield(f"Conflict$JPTask{k}", "out", "[I")
        b.const_int(0)
        b.const_int(k + 1)
        b.emit("iastore")
        b.emit("return")
        cb.add_method("run", "()V", ACC_PUBLIC, b)
        return cb.build()

    def driver_body(b, spawn: bool):
        if spawn:
            slots = []
            for k in range(2):
                b.new_object(f"Conflict$JPTask{k}")
                b.emit("dup")
                b.load("a", 0)
                b.invoke("invokespecial", f"Conflict$JPTask{k}", "<init>", "([I)V")
                b.store("a", 1 + k)
                b.load("a", 1 + k)
                b.invoke("invokevirtual", "java/lang/Thread", "start", "()V")
                slots.append(1 + k)
            for s in slots:
                b.load("a", s)
                b.invoke("invokevirtual", "java/lang/Thread", "join", "()V")
        else:
            # serial semantics: last write wins deterministically
            for k in range(2):
                b.load("a", 0)
                b.const_int(0)
                b.const_int(k + 1)
                b.emit("iastore")
        b.emit("return")

    serial_cb = ClassBuilder("Conflict")
    b = serial_cb.code_builder()
    driver_body(b, spawn=False)
    serial_cb.add_method("race", "([I)V", PS, b)
    serial = serial_cb.build()

    driver_cb = ClassBuilder("Conflict")
    b = driver_cb.code_builder()
    driver_body(b, spawn=True)
    driver_cb.add_method("race", "([I)V", PS, b)
    driver = driver_cb.build()
    variant = ParallelVariant(driver=driver, tasks=[task(0), task(1)],
                              method="race", desc="([I)V", plan={"mode": "test"})
    return serial, variant


# ---- randomized straight-line methods ----------------------------------------

_INT_OPS = ["iadd", "isub", "imul", "iand", "ior", "ixor"]
_DBL_OPS = ["dadd", "dsub", "dmul"]


def random_straightline(rng: random.Random, name: str = "Rand") -> tuple[ClassModel, list]:
    """(model, args) for a branch-free method mixing int/double locals and
    arrays; descriptor ([I[DID)I with arrays of length 8."""
    cb = ClassBuilder(name)
    b = cb.code_builder()
    int_slots = [5, 6, 7]
    dbl_slots = [8, 10, 12]

    def int_leaf():
        c = rng.randrange(4)
        if c == 0:
            b.const_int(rng.randrange(-100, 100))
        elif c == 1:
            b.load("i", 2)
        elif c == 2:
            b.load("i", rng.choice(int_slots))
        else:
            b.load("a", 0)
            int_expr(0)
            b.const_int(7)
            b.emit("iand")
            b.emit("iaload")

    def int_expr(depth=1):
        if depth >= 3:
            int_leaf()
            return
        c = rng.randrange(6)
        if c < 2:
            int_leaf()
        elif c < 5:
            int_expr(depth + 1)
            int_expr(depth + 1)
            b.emit(rng.choice(_INT_OPS))
        else:
            dbl_expr(depth + 1)
            b.emit("d2i")

    def dbl_leaf():
        c = rng.randrange(4)
        if c == 0:
            b.const_double(rng.uniform(-4, 4))
        elif c == 1:
            b.load("d", 3)
        elif c == 2:
            b.load("d", rng.choice(dbl_slots))
        else:
            b.load("a", 1)
            int_expr(0)
            b.const_int(7)
            b.emit("iand")
            b.emit("daload")

    def dbl_expr(depth=1):
        if depth >= 3:
            dbl_leaf()
            return
        c = rng.randrange(6)
        if c < 2:
            dbl_leaf()
        elif c < 5:
            dbl_expr(depth + 1)
            dbl_expr(depth + 1)
            b.emit(rng.choice(_DBL_OPS))
        else:
            int_expr(depth + 1)
            b.emit("i2d")

    # initialize every temp so reads are always defined
    for s in int_slots:
        b.const_int(rng.randrange(-8, 8))
        b.store("i", s)
    for s in dbl_slots:
        b.const_double(rng.uniform(-2, 2))
        b.store("d", s)

    for _ in range(rng.randrange(6, 18)):
        kind = rng.randrange(5)
        if kind == 0:
            int_expr(0)
            b.store("i", rng.choice(int_slots))
        elif kind == 1:
            dbl_expr(0)
            b.store("d", rng.choice(dbl_slots))
        elif kind == 2:
            b.load("a", 0)
            int_expr(0)
            b.const_int(7)
            b.emit("iand")
            int_expr(0)
            b.emit("iastore")
        elif kind == 3:
            b.load("a", 1)
            int_expr(0)
            b.const_int(7)
            b.emit("iand")
            dbl_expr(0)
            b.emit("dastore")
        else:
            b.iinc(rng.choice(int_slots), rng.randrange(-5, 6))
    b.load("i", rng.choice(int_slots))
    b.emit("ireturn")
    cb.add_method("f", "([I[DID)I", PS, b)
    model = cb.build()

    args = [jarray_of("I", [rng.randrange(-50, 50) for _ in range(8)]),
            jarray_of("D", [rng.uniform(-3, 3) for _ in range(8)]),
            rng.randrange(-20, 20), rng.uniform(-2, 2)]
    return model, args


# ---- synthetic affine nests + brute-force dependence oracle -------------------


def make_affine_nest(rng: random.Random, max_depth=3, max_bound=8, coeff_range=3):
    """A NormalizedLoop tree over one array with random affine accesses.

    Returns (nest, accure) where accure lets the oracle re-evaluate
    subscripts: list of (kind, [per-dim (coeff-per-level tuple, const)]).
    """
    from jvmpar.ir import ArrayElem, BinOp, Const, IRStatement, Local
    from jvmpar.loops import NormalizedLoop

    depth = rng.randint(1, max_depth)
    bounds = [rng.randint(2, max_bound) for _ in range(depth)]
    ivars = [10 + k for k in range(depth)]
    ndims = rng.randint(1, 2)

    def subscript():
        coeffs = tuple(rng.randint(-coeff_range, coeff_range) for _ in range(depth))
        const = rng.randint(0, 4)
        return coeffs, const

    def sub_expr(coeffs, const):
        e = Const(const, "I")
        for lvl, c in enumerate(coeffs):
            if c == 0:
                continue
            term = Local(ivars[lvl], "I")
            if c != 1:
                term = BinOp("mul", Const(c, "I"), term, "I")
            e = BinOp("add", e, term, "I")
        return e

    arr_type = "[" * ndims + "D"
    base = Local(0, arr_type)

    def elem(dims):
        node = base
        t = arr_type
        for coeffs, const in dims:
            t = t[1:]
            node = ArrayElem(node, sub_expr(coeffs, const), t)
        return node

    n_reads = rng.randint(1, 2)
    accesses = []
    wdims = [subscript() for _ in range(ndims)]
    accesses.append(("write", wdims))
    rhs = Const(1.0, "D")
    for _ in range(n_reads):
        rdims = [subscript() for _ in range(ndims)]
        accesses.append(("read", rdims))
        rhs = BinOp("add", rhs, elem(rdims), "D")
    stmt = IRStatement(kind="array_store", target=elem(wdims), expr=rhs, index=0)

    body = [stmt]
    node = None
    for lvl in reversed(range(depth)):
        node = NormalizedLoop(ivar=ivars[lvl], init=Const(0, "I"),
                              bound=Const(bounds[lvl], "I"), step=1, cmp="lt",
                              body=body)
        body = [node]
    node.path = (0,)

    def assign_paths(n, prefix):
        n.path = prefix
        for k, c in enumerate(n.children):
            assign_paths(c, prefix + (k,))

    assign_paths(node, (0,))
    return node, (depth, bounds, accesses)


def brute_force_carried(shape) -> dict[int, bool]:
    """Oracle: per level, does any dependence (pair with >=1 write, equal
    subscripts, lexicographic earlier-at-that-level ordering) exist?"""
    import itertools

    depth, bounds, accesses = shape
    points = list(itertools.product(*[range(b) for b in bounds]))

    def value(dims, p):
        return tuple(sum(c * p[l] for l, c in enumerate(coeffs)) + const
                     for coeffs, const in dims)

    by_value: list[dict] = []
    for kind, dims in accesses:
        m: dict = {}
        for p in points:
            m.setdefault(value(dims, p), []).append(p)
        by_value.append(m)

    carried = {lvl: False for lvl in range(depth)}
    for (ka, da), ma in zip(accesses, by_value):
        for (kb, db), mb in zip(accesses, by_value):
            if ka == "read" and kb == "read":
                continue
            for val, src_pts in ma.items():
                dst_pts = mb.get(val)
                if not dst_pts:
                    continue
                for lvl in range(depth):
                    if carried[lvl]:
                        continue
                    found = False
                    for p in src_pts:
                        for q in dst_pts:
                            if p[:lvl] == q[:lvl] and p[lvl] < q[lvl]:
                                found = True
                                break
                        if found:
                            break
                    if found:
                        carried[lvl] = True
            if all(carried.values()):
                return carried
    return carried
