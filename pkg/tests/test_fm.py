import itertools
import random

from jvmpar.fm import InequalitySystem, fm_eliminate


def _sys(names):
    return InequalitySystem(names=list(names))


def test_direct_contradiction():
    s = _sys(["x"])
    s.add_ge0({0: 1}, -1)   # x >= 1
    s.add_ge0({0: -1}, 0)   # x <= 0
    assert fm_eliminate(s) == "infeasible"


def test_distance_one_with_ordering_infeasible():
    # i - i' = 1, 0 <= i,i' <= 9, i < i'  (brute force over [0,9]^2 agrees)
    brute = any(i - j == 1 and i < j for i in range(10) for j in range(10))
    assert not brute
    s = _sys(["i", "j"])
    s.add_eq({0: 1, 1: -1}, -1)       # i - j - 1 == 0
    s.add_ge0({0: 1}, 0)
    s.add_ge0({0: -1}, 9)
    s.add_ge0({1: 1}, 0)
    s.add_ge0({1: -1}, 9)
    s.add_ge0({1: 1, 0: -1}, -1)      # j - i >= 1
    assert fm_eliminate(s) == "infeasible"


def test_rational_relaxation_misses_parity():
    # 2i = 2i' + 1 has no integer solution but i - i' = 1/2 exists rationally;
    # the GCD pre-test catches this particular equality though
    s = _sys(["i", "j", "n"])
    s.add_eq({0: 2, 1: -2}, -1)
    s.add_ge0({0: 1}, 0)
    s.add_ge0({1: 1}, 0)
    s.add_ge0({2: 1, 0: -1}, 0)
    s.add_ge0({2: 1, 1: -1}, 0)
    assert fm_eliminate(s) == "infeasible"  # gcd(2,2)=2 does not divide 1

    # without the equality shortcut (as two inequalities) rationals win
    s2 = _sys(["i", "j"])
    s2.add_ge0({0: 2, 1: -2}, -1)
    s2.add_ge0({0: -2, 1: 2}, 1)
    s2.add_ge0({0: 1}, 0)
    s2.add_ge0({1: 1}, 0)
    s2.add_ge0({0: -1}, 8)
    s2.add_ge0({1: -1}, 8)
    assert fm_eliminate(s2) == "feasible_rational"


def test_feasible_box():
    s = _sys(["x", "y"])
    s.add_ge0({0: 1}, 0)
    s.add_ge0({0: -1}, 5)
    s.add_ge0({1: 1}, 0)
    s.add_ge0({1: -1}, 5)
    s.add_eq({0: 1, 1: -1}, 0)
    assert fm_eliminate(s) == "feasible_rational"


def _random_system(rng, nvars=3, nrows=5, bound=6):
    s = _sys([f"x{k}" for k in range(nvars)])
    for v in range(nvars):
        s.add_ge0({v: 1}, 0)
        s.add_ge0({v: -1}, bound)
    for _ in range(nrows):
        coeffs = {v: rng.randint(-3, 3) for v in rng.sample(range(nvars), rng.randint(1, nvars))}
        s.add_ge0(coeffs, rng.randint(-6, 6))
    return s, bound


def _integer_feasible(s: InequalitySystem, nvars, bound):
    for point in itertools.product(range(bound + 1), repeat=nvars):
        ok = True
        for coeffs, const in s.rows:
            if sum(c * point[v] for v, c in coeffs.items()) + const < 0:
                ok = False
                break
        if ok:
            for coeffs, const in s.eqs:
                if sum(c * point[v] for v, c in coeffs.items()) + const != 0:
                    ok = False
                    break
        if ok:
            return True
    return False


def test_never_infeasible_when_integer_point_exists():
    rng = random.Random(2024)
    checked = 0
    for _ in range(150):
        s, bound = _random_system(rng)
        if _integer_feasible(s, 3, bound):
            assert fm_eliminate(s) == "feasible_rational"
            checked += 1
    assert checked > 30


def test_elimination_order_independence():
    rng = random.Random(7)
    for _ in range(60):
        s, _ = _random_system(rng)
        verdicts = set()
        orders = [list(p) for p in itertools.permutations(range(3))]
        for order in orders:
            verdicts.add(fm_eliminate(
                InequalitySystem(names=s.names, rows=list(s.rows), eqs=list(s.eqs)),
                order=order))
        assert len(verdicts) == 1, verdicts


def test_row_cap_returns_conservative():
    s = _sys([f"x{k}" for k in range(6)])
    rng = random.Random(5)
    for _ in range(40):
        coeffs = {v: rng.randint(-3, 3) for v in range(6)}
        s.add_ge0(coeffs, rng.randint(0, 20))
    assert fm_eliminate(s, row_cap=10) == "feasible_rational"
