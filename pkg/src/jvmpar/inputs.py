"""Seeded argument generation from method descriptors.

Used by verify/parallelize/bench when no explicit inputs are given: int
params take the problem size (overridable positionally), 1-D arrays get
`size` elements, 2-D arrays are size x size. Int arrays hold non-negative
values so modulo-indexed kernels stay in bounds.
"""

from __future__ import annotations

import random

from .classfile.descriptors import parse_method_descriptor
from .interp import jarray_of


def make_value(desc: str, rng: random.Random, size: int):
    if desc == "I":
        return size
    if desc == "J":
        return size
    if desc in ("F", "D"):
        return rng.uniform(-1.0, 1.0)
    if desc == "[I":
        return jarray_of("I", [rng.randrange(0, 2 * size) for _ in range(size)])
    if desc == "[J":
        return jarray_of("J", [rng.randrange(0, 2 * size) for _ in range(size)])
    if desc == "[F":
        return jarray_of("F", [rng.uniform(-1.0, 1.0) for _ in range(size)])
    if desc == "[D":
        return jarray_of("D", [rng.uniform(-1.0, 1.0) for _ in range(size)])
    if desc.startswith("[["):
        inner = desc[1:]
        return jarray_of(inner, [make_value(inner, rng, size) for _ in range(size)])
    raise ValueError(f"cannot generate a value for descriptor {desc}")


def args_for(desc: str, rng: random.Random, size: int,
             int_args: list[int] | None = None):
    """Arguments for a static method descriptor; `int_args` override the
    integer parameters in order."""
    params, _ = parse_method_descriptor(desc)
    out = []
    ints_taken = 0
    for p in params:
        v = make_value(p, rng, size)
        if p in ("I", "J") and int_args and ints_taken < len(int_args):
            v = int_args[ints_taken]
            ints_taken += 1
        out.append(v)
    return out


def generator_for(desc: str, size: int, int_args: list[int] | None = None):
    """An input_gen callable for check_equivalence."""

    def gen(rng: random.Random):
        return args_for(desc, rng, size, int_args)

    return gen
