"""Closed-form generic broadcast costs for the symmetric LCBC.

All values are exact Fractions. Piecewise formulas are stored as explicit
branch tables; when d sits on a boundary shared by several branches, every
matching branch is evaluated and the values must agree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .errors import BadK, BadParams, KTooSmall, UndefinedGain

F = Fraction


@dataclass(frozen=True)
class SymParams:
    K: int
    d: int
    m: int
    mprime: int

    def __post_init__(self):
        if min(self.K, self.d, self.m, self.mprime) < 0:
            raise BadParams(f"parameters must be nonnegative: {self}")


@dataclass(frozen=True)
class Branch:
    lo: Fraction
    hi: Fraction | None  # None = unbounded
    label: str
    value: Callable[[int], Fraction]
    slope: int  # 0 for flat steps, 1 for slanted edges

    def contains(self, d) -> bool:
        return self.lo <= d and (self.hi is None or d <= self.hi)


@dataclass(frozen=True)
class BoundsReport:
    lower: Fraction
    upper: Fraction
    delta_g: Fraction | None
    regime: str
    heuristic: bool = False


@dataclass(frozen=True)
class GainReport:
    gain: Fraction
    eta_K: int
    eta_d_range: tuple[Fraction, Fraction]
    pinned: bool


def _pos(x) -> Fraction:
    return max(F(0), F(x))


# ---------------------------------------------------------------------------
# K <= 3


def small_K_branches(K: int, m: int, mp: int) -> list[Branch]:
    m, mp = F(m), F(mp)
    flat = lambda c: (lambda d: F(c))
    shift = lambda c: (lambda d: F(d) - c)
    table = [
        (F(0), mp, "0", flat(0), 0),
        (mp, m + mp, "d-m'", shift(mp), 1),
    ]
    if K == 1:
        table += [(m + mp, None, "m", flat(m), 0)]
    elif K == 2:
        table += [
            (m + mp, m + 2 * mp, "m", flat(m), 0),
            (m + 2 * mp, 2 * (m + mp), "d-2m'", shift(2 * mp), 1),
            (2 * (m + mp), None, "2m", flat(2 * m), 0),
        ]
    elif K == 3:
        h = F(3, 2)
        table += [
            (m + mp, m + h * mp, "m", flat(m), 0),
            (m + h * mp, h * (m + mp), "d-1.5m'", shift(h * mp), 1),
            (h * (m + mp), h * m + 2 * mp, "1.5m", flat(h * m), 0),
            (h * m + 2 * mp, 2 * (m + mp), "d-2m'", shift(2 * mp), 1),
            (2 * (m + mp), 2 * m + 3 * mp, "2m", flat(2 * m), 0),
            (2 * m + 3 * mp, 3 * (m + mp), "d-3m'", shift(3 * mp), 1),
            (3 * (m + mp), None, "3m", flat(3 * m), 0),
        ]
    else:
        raise BadK(f"small-K formula needs K in {{1, 2, 3}}, got {K}")
    return [Branch(*row) for row in table]


def _evaluate(branches: Sequence[Branch], d: int) -> tuple[Fraction, str]:
    hits = [b for b in branches if b.contains(d)]
    if not hits:
        raise BadParams(f"no branch covers d={d}")
    values = {b.value(d) for b in hits}
    if len(values) != 1:
        raise AssertionError(f"branches disagree at d={d}: {[(b.label, b.value(d)) for b in hits]}")
    return values.pop(), hits[-1].label


def small_K_branch(params: SymParams) -> tuple[Fraction, str]:
    return _evaluate(small_K_branches(params.K, params.m, params.mprime), params.d)


def delta_g_small_K(params: SymParams) -> Fraction:
    return small_K_branch(params)[0]


# ---------------------------------------------------------------------------
# Large K


def large_K_condition(params: SymParams) -> bool:
    s = params.m + params.mprime
    return s >= 1 and params.K * math.gcd(params.d, s) >= params.d


def large_K_branch(params: SymParams) -> tuple[Fraction, str]:
    K, d, m, mp = params.K, params.d, params.m, params.mprime
    if m + mp < 1:
        raise BadParams("large-K formula needs m + m' >= 1")
    if not large_K_condition(params):
        raise KTooSmall(f"need K >= d/gcd(d, m+m') = {F(d, math.gcd(d, m + mp))}, got K={K}")
    branches = [
        Branch(F(0), F(mp), "0", lambda x: F(0), 0),
        Branch(F(mp), F(m + mp), "d-m'", lambda x: F(x - mp), 1),
        Branch(F(m + mp), F(K * (m + mp)), "dm/(m+m')", lambda x: F(x * m, m + mp), 0),
    ]
    return _evaluate(branches, d)


def delta_g_large_K(params: SymParams) -> Fraction:
    return large_K_branch(params)[0]


# ---------------------------------------------------------------------------
# m = m' = 1


def one_dim_branch(K: int, d: int) -> tuple[Fraction, str]:
    if K < 1 or d < 1:
        raise BadParams(f"need K >= 1 and d >= 1, got K={K}, d={d}")
    if d % 2 == 0:
        return (F(d, 2), "d/2") if d <= 2 * K else (F(K), "K")
    if d == 1:
        return F(0), "0"
    if d < 2 * K - 1:
        return F(d, 2), "d/2"
    if d == 2 * K - 1:
        return F(K - 1), "K-1"
    return F(K), "K"


def delta_g_one_dim(K: int, d: int) -> Fraction:
    return one_dim_branch(K, d)[0]


# ---------------------------------------------------------------------------
# Bounds for possibly asymmetric widths


SUBSET_LIMIT = 20


def _lower_bound(d: int, m: Sequence[int], mp: Sequence[int]) -> tuple[Fraction, bool]:
    K = len(m)
    best = F(0)
    if K <= SUBSET_LIMIT:
        for size in range(1, K + 1):
            for sub in itertools.combinations(range(K), size):
                val = min(d - sum(mp[k] for k in sub), sum(m[k] for k in sub))
                best = max(best, F(val))
        return best, False
    order = sorted(range(K), key=lambda k: (mp[k], -m[k], k))
    sm = smp = 0
    for k in order:
        sm += m[k]
        smp += mp[k]
        best = max(best, F(min(d - smp, sm)))
    return best, True


def _upper_bound(d: int, m: Sequence[int], mp: Sequence[int]) -> Fraction:
    if not m:
        return F(0)
    m_max, mp_min = max(m), min(mp)
    first = F(m_max * d, m_max + mp_min) if m_max + mp_min > 0 else F(0)
    return min(first, _pos(d - mp_min), F(sum(m)))


def regime_label(K: int, d: int, m: int, mp: int) -> str:
    if d <= mp:
        return "zero"
    if d <= m + mp:
        return "random-coding"
    if d < K * (m + mp):
        return "nontrivial"
    return "separate"


def generic_bounds(K: int, d: int, m: int | Sequence[int], mprime: int | Sequence[int]) -> BoundsReport:
    m = [m] * K if isinstance(m, int) else list(m)
    mp = [mprime] * K if isinstance(mprime, int) else list(mprime)
    if len(m) != K or len(mp) != K:
        raise BadParams("width lists must have K entries")
    lower, heuristic = _lower_bound(d, m, mp)
    upper = _upper_bound(d, m, mp)
    symmetric = len(set(m)) <= 1 and len(set(mp)) <= 1
    dg = None
    if symmetric and K >= 1:
        dg = delta_g(SymParams(K, d, m[0], mp[0]))[0]
        regime = regime_label(K, d, m[0], mp[0])
    else:
        regime = "asymmetric" if K else "empty"
    if dg is None and lower == upper:
        dg = lower
    return BoundsReport(lower, upper, dg, regime, heuristic)


# ---------------------------------------------------------------------------


def delta_g(params: SymParams) -> tuple[Fraction | None, str, str]:
    """(value, source, branch) from the first theorem that covers params.

    Sources: small-K, one-dim, large-K, bounds (lower = upper), or none.
    """
    K, d, m, mp = params.K, params.d, params.m, params.mprime
    if K == 0:
        return F(0), "empty", "0"
    if K <= 3:
        v, lab = small_K_branch(params)
        return v, "small-K", lab
    if m == 1 and mp == 1 and d >= 1:
        v, lab = one_dim_branch(K, d)
        return v, "one-dim", lab
    if large_K_condition(params):
        v, lab = large_K_branch(params)
        return v, "large-K", lab
    lower, _ = _lower_bound(d, [m] * K, [mp] * K)
    if lower == _upper_bound(d, [m] * K, [mp] * K):
        return lower, "bounds", regime_label(K, d, m, mp)
    return None, "none", regime_label(K, d, m, mp)


def gammas(d: int, m: int, mprime: int) -> tuple[int, int, int]:
    s = m + mprime
    g1 = max(0, min(3 * s - d, s, d))
    g2 = max(0, min(2 * s - d, s, d))
    g3 = max(0, min(3 * s - 2 * d, s, d))
    return g1, g2, g3


def formula_cost(params: SymParams) -> Fraction:
    """min{(d-m')^+, dm/(m+m'), Km}: the cost of the best of random coding,
    interference alignment and separate transmission."""
    K, d, m, mp = params.K, params.d, params.m, params.mprime
    ia = F(d * m, m + mp) if m + mp else F(0)
    return min(_pos(d - mp), ia, F(K * m))


def extremal_gains(params: SymParams) -> GainReport:
    """Cost ratio of the better baseline (random coding or separate
    transmission) to the generic optimum.

    Uses the theorem value of the optimum when one applies, and the formula
    min{(d-m')^+, dm/(m+m'), Km} otherwise (reported with pinned=False).
    """
    K, d, m, mp = params.K, params.d, params.m, params.mprime
    if d <= mp:
        raise UndefinedGain("d <= m': the random-coding baseline is degenerate")
    baseline = min(F(d - mp), F(K * m))
    value, source, _ = delta_g(params)
    pinned = value is not None
    opt = value if pinned else formula_cost(params)
    if opt == 0:
        raise UndefinedGain("optimal cost is zero")
    return GainReport(baseline / opt, K, (F(d, 4), F(d, 4) + 1), pinned)
