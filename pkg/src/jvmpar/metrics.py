"""Speedup/efficiency arithmetic and the benchmark report table.

S(N,P) = T(N,1)/T(N,P);  E(N,P) = S(N,P)/P.
CSV rounds half-up to 2 decimals (table presentation); JSON keeps full
precision.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP

from .errors import EmptyInput, NonPositiveTime


@dataclass
class RunRecord:
    label: str  # benchmark + variant id
    n: int  # problem size
    p: int  # worker count
    t: float  # seconds or interp steps

    def __post_init__(self):
        if self.t <= 0:
            raise NonPositiveTime(f"T={self.t} for {self.label} N={self.n} P={self.p}")
        if self.p < 1:
            raise NonPositiveTime(f"P={self.p} for {self.label}")


def speedup(t1: float, tp: float) -> float:
    if t1 <= 0 or tp <= 0:
        raise NonPositiveTime(f"t1={t1}, tp={tp}")
    return t1 / tp


def efficiency(t1: float, tp: float, p: int) -> float:
    if p < 1:
        raise NonPositiveTime(f"p={p}")
    return speedup(t1, tp) / p


def _round2(x: float) -> str:
    return str(Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _rows(records: list[RunRecord]) -> list[dict]:
    if not records:
        raise EmptyInput("no run records")
    base: dict[tuple[str, int], float] = {}
    for r in records:
        if r.p == 1:
            base[(r.label, r.n)] = r.t
    rows = []
    for r in sorted(records, key=lambda r: (r.label, r.n, r.p)):
        t1 = base.get((r.label, r.n))
        if t1 is None:
            raise EmptyInput(f"no serial (P=1) record for {r.label} N={r.n}")
        s = speedup(t1, r.t)
        rows.append({"benchmark": r.label, "N": r.n, "P": r.p, "T": r.t,
                     "E": s / r.p, "S": s})
    return rows


def emit_report(records: list[RunRecord], fmt: str = "json") -> str:
    rows = _rows(records)
    if fmt == "json":
        return json.dumps({"rows": rows}, indent=2) + "\n"
    if fmt == "csv":
        out = io.StringIO()
        out.write("benchmark,N,P,T,E,S\n")
        for r in rows:
            out.write(f"{r['benchmark']},{r['N']},{r['P']},{_round2(r['T'])},"
                      f"{_round2(r['E'])},{_round2(r['S'])}\n")
        return out.getvalue()
    raise EmptyInput(f"unknown format {fmt}")


def parse_report_json(text: str) -> list[RunRecord]:
    data = json.loads(text)
    return [RunRecord(r["benchmark"], r["N"], r["P"], r["T"]) for r in data["rows"]]
