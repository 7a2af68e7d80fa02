"""Dependency-graph construction over decompiled statements.

Variables are local slots, fields (owner+name), and array cell sets abstracted
by the array's root object (exact subscripts are depcheck's job). Last-writer
tracking yields flow edges; last-reader and last-writer tracking add the
anti/output edges that make parallelization sound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ir import (ArrayElem, Call, FieldRef, IRExpr, IRStatement, Local,
                 walk_expr)

# variable keys:
#   ('local', slot)          the slot itself
#   ('field', owner, name)   static or instance field
#   ('cells', root)          every element of the array rooted at `root`
#   root is itself a key ('local', slot) or ('field', owner, name)


def array_root(e: IRExpr):
    while isinstance(e, ArrayElem):
        e = e.array
    if isinstance(e, Local):
        return ("local", e.slot)
    if isinstance(e, FieldRef):
        return ("field", e.owner, e.name)
    return ("anon", id(e))


def expr_reads(e: IRExpr | None) -> set:
    reads = set()
    for node in walk_expr(e):
        if isinstance(node, Local):
            reads.add(("local", node.slot))
        elif isinstance(node, FieldRef):
            reads.add(("field", node.owner, node.name))
        elif isinstance(node, ArrayElem):
            reads.add(("cells", array_root(node)))
        elif isinstance(node, Call):
            # no interprocedural analysis: a callee may touch any array arg
            for a in node.args:
                if a.result_type.startswith("[") or a.result_type == "A":
                    if isinstance(a, Local):
                        reads.add(("cells", ("local", a.slot)))
                    elif isinstance(a, ArrayElem):
                        reads.add(("cells", array_root(a)))
    return reads


def call_writes(e: IRExpr | None) -> set:
    writes = set()
    for node in walk_expr(e):
        if isinstance(node, Call):
            for a in node.args:
                if a.result_type.startswith("[") or a.result_type == "A":
                    if isinstance(a, Local):
                        writes.add(("cells", ("local", a.slot)))
                    elif isinstance(a, ArrayElem):
                        writes.add(("cells", array_root(a)))
    return writes


def stmt_reads(s: IRStatement) -> set:
    reads = expr_reads(s.expr)
    if s.kind == "array_store":
        reads |= expr_reads(s.target.array)
        reads |= expr_reads(s.target.index)
        reads |= call_writes(s.expr)  # symmetry: treat as read+write
    elif s.kind == "field_store" and s.target.obj is not None:
        reads |= expr_reads(s.target.obj)
    elif s.kind == "inc":
        reads.add(("local", s.target.slot))
    return reads


def stmt_writes(s: IRStatement) -> set:
    if s.kind in ("assign", "inc"):
        return {("local", s.target.slot)}
    if s.kind == "array_store":
        return {("cells", array_root(s.target))}
    if s.kind == "field_store":
        return {("field", s.target.owner, s.target.name)}
    if s.kind == "call_stmt":
        return call_writes(s.expr)
    return set()


@dataclass
class DepGraph:
    nodes: list[int] = field(default_factory=list)
    # (producer stmt index, consumer stmt index, variable key, dependence class)
    edges: set = field(default_factory=set)
    last_write: dict = field(default_factory=dict)

    def edges_between(self, p: int, c: int):
        return [e for e in self.edges if e[0] == p and e[1] == c]


def build_dfg(stmts: list[IRStatement]) -> DepGraph:
    g = DepGraph(nodes=list(range(len(stmts))))
    last_write: dict = {}
    last_reads: dict = {}
    for s in stmts:
        idx = s.index
        reads = stmt_reads(s)
        writes = stmt_writes(s)
        for var in reads:
            if var in last_write:
                g.edges.add((last_write[var], idx, var, "flow"))
        for var in writes:
            if var in last_write:
                g.edges.add((last_write[var], idx, var, "output"))
            for r in last_reads.get(var, ()):
                if r != idx:
                    g.edges.add((r, idx, var, "anti"))
        for var in reads:
            last_reads.setdefault(var, []).append(idx)
        for var in writes:
            last_write[var] = idx
            last_reads[var] = []
    g.last_write = last_write
    return g


def to_dot(g: DepGraph, stmts: list[IRStatement]) -> str:
    lines = ["digraph dfg {"]
    for i in g.nodes:
        label = repr(stmts[i]).replace('"', "'")
        lines.append(f'  n{i} [label="{i}: {label}"];')
    style = {"flow": "solid", "anti": "dashed", "output": "dotted"}
    for p, c, var, cls in sorted(g.edges):
        lines.append(f'  n{p} -> n{c} [style={style[cls]}, label="{var}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
