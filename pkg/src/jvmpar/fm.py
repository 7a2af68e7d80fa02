"""Rational Fourier-Motzkin elimination over integer-coefficient systems.

Feasibility is decided over the rationals, which is conservative for the
integer iteration spaces being modeled: "infeasible" is definitive, "feasible"
may be a phantom. A GCD pre-test on equality rows prunes some integer-
infeasible systems cheaply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

ROW_CAP_DEFAULT = 10_000


@dataclass
class InequalitySystem:
    """Sparse rows (coeff dict keyed by var index, constant); inequalities
    mean sum(c_i * x_i) + k >= 0, equalities sum(c_i * x_i) + k == 0.
    Variables may keep registering in `names` until elimination starts."""

    names: list[str]
    rows: list[tuple[dict[int, int], int]] = field(default_factory=list)
    eqs: list[tuple[dict[int, int], int]] = field(default_factory=list)

    @property
    def nvars(self) -> int:
        return len(self.names)

    def add_ge0(self, coeffs: dict[int, int], const: int) -> None:
        self.rows.append((dict(coeffs), const))

    def add_le(self, coeffs: dict[int, int], const: int) -> None:
        """sum(c x) + k <= 0"""
        self.rows.append(({v: -c for v, c in coeffs.items()}, -const))

    def add_eq(self, coeffs: dict[int, int], const: int) -> None:
        self.eqs.append((dict(coeffs), const))

    def dense(self, sparse: tuple[dict[int, int], int]) -> tuple[int, ...]:
        row = [0] * self.nvars
        for var, c in sparse[0].items():
            row[var] += c
        return tuple(row) + (sparse[1],)


def _normalize(row: tuple[int, ...]) -> tuple[int, ...] | None:
    """Scale down by the gcd when exact; None for trivially-true rows.

    The constant is only divided when the gcd divides it, keeping rational
    semantics identical so the verdict cannot depend on elimination order.
    """
    g = 0
    for c in row[:-1]:
        g = math.gcd(g, abs(c))
    if g == 0:
        return None if row[-1] >= 0 else row
    if g == 1 or row[-1] % g != 0:
        return row
    return tuple(c // g for c in row)


def fm_eliminate(sys: InequalitySystem, order: list[int] | None = None,
                 row_cap: int = ROW_CAP_DEFAULT) -> str:
    """Returns 'infeasible' or 'feasible_rational'.

    Row-cap overflow returns 'feasible_rational' (the conservative answer).
    """
    eqs = [sys.dense(e) for e in sys.eqs]
    ineqs = [sys.dense(r) for r in sys.rows]

    # GCD integrality pre-test on each equality row
    for eq in eqs:
        g = 0
        for c in eq[:-1]:
            g = math.gcd(g, abs(c))
        if g == 0:
            if eq[-1] != 0:
                return "infeasible"
        elif eq[-1] % g != 0:
            return "infeasible"

    remaining = list(range(sys.nvars)) if order is None else list(order)

    # Gaussian step: substitute variables out through equalities (exact over
    # the rationals, so the verdict stays order independent)
    pending_eqs = [e for e in eqs]
    while pending_eqs:
        eq = pending_eqs.pop()
        g = 0
        for c in eq[:-1]:
            g = math.gcd(g, abs(c))
        if g == 0:
            if eq[-1] != 0:
                return "infeasible"
            continue
        if eq[-1] % g != 0:
            return "infeasible"
        var = next((v for v in remaining if eq[v] != 0), None)
        if var is None:
            if eq[-1] != 0:
                return "infeasible"
            continue
        a = eq[var]

        def subst(row):
            b = row[var]
            if b == 0:
                return row
            if a > 0:
                return tuple(a * rc - b * ec for rc, ec in zip(row, eq))
            return tuple(-a * rc + b * ec for rc, ec in zip(row, eq))

        ineqs = [subst(r) for r in ineqs]
        pending_eqs = [subst(e) for e in pending_eqs]
        remaining.remove(var)

    def tighten(rows_in) -> dict | str:
        """Keep the tightest constant per coefficient vector."""
        best: dict[tuple[int, ...], int] = {}
        for r in rows_in:
            n = _normalize(r)
            if n is None:
                continue
            coeffs, k = n[:-1], n[-1]
            if not any(coeffs):
                if k < 0:
                    return "infeasible"
                continue
            if k < best.get(coeffs, k + 1):
                best[coeffs] = k
        return best

    best = tighten(ineqs)
    if best == "infeasible":
        return "infeasible"
    rows = {c + (k,) for c, k in best.items()}

    while remaining:
        # greedy: eliminate the variable with the fewest lower*upper products
        def cost(v: int) -> int:
            lo = sum(1 for r in rows if r[v] > 0)
            hi = sum(1 for r in rows if r[v] < 0)
            return lo * hi - (lo + hi)

        if order is None:
            var = min(remaining, key=cost)
        else:
            var = remaining[0]
        remaining.remove(var)

        lower = [r for r in rows if r[var] > 0]   # a*x + rest >= 0, a>0: x >= -rest/a
        upper = [r for r in rows if r[var] < 0]   # b*x + rest >= 0, b<0: x <= rest/(-b)
        combined = [r for r in rows if r[var] == 0]
        for lo in lower:
            a = lo[var]
            for up in upper:
                b = -up[var]
                combined.append(tuple(b * lc + a * uc for lc, uc in zip(lo, up)))
                if len(combined) > row_cap:
                    return "feasible_rational"
        best = tighten(combined)
        if best == "infeasible":
            return "infeasible"
        rows = {c + (k,) for c, k in best.items()}

    return "feasible_rational"
