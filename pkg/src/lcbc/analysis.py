"""Rank certificates for the converse side, generic-condition checks,
Monte-Carlo frequency estimates and parameter sweeps."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._util import ordered_map
from .capacity import SymParams, delta_g, formula_cost, gammas, generic_bounds
from .errors import BadK, BadParams, BadRegime, BadSubset, ConfigError, LcbcError
from .galois import FieldCtx, make_field
from .instance import LcbcInstance, rng_for, sample_instance
from .schemes import ia_artifacts, ia_cost_formula, ia_en_bound, ia_N
from .sublinalg import FqMatrix, hstack, intersect, rank

Z95 = 1.959963984540054


@dataclass
class ConverseCertificate:
    mbar: int
    Ki: list[int]
    gamma_ranks: list[int]
    upsilon_ranks: list[int]
    pi_ranks: list[int]
    u_ranks: list[int]  # rank of u_{K_i} for i = 1..mbar
    vprime_ranks: list[int]
    en_conv: bool
    implied_bound: Fraction | None


def _sym_widths(inst: LcbcInstance) -> tuple[int, int]:
    if not inst.symmetric or inst.K == 0:
        raise BadRegime("needs a symmetric instance with K >= 1")
    return inst.m[0], inst.mprime[0]


def converse_chain(inst: LcbcInstance) -> ConverseCertificate:
    """Build Gamma_i, Upsilon_i = Gamma_i cap u_{K_i}, Pi_i = [Gamma_i, u_{K_i}]
    with Gamma_{i+1} = [Upsilon_i, u_{K_i + 1}, ..., u_{K_{i+1} - 1}]."""
    m, mp = _sym_widths(inst)
    d, s = inst.d, m + mp
    if s < 1 or d <= s:
        raise BadRegime(f"converse chain needs d > m+m' >= 1, got d={d}, m+m'={s}")
    g = math.gcd(d, s)
    mbar = s // g
    Ki = [-(-i * d // s) for i in range(mbar + 1)]
    if inst.K < Ki[-1]:
        raise BadRegime(f"needs K >= d/gcd(d, m+m') = {Ki[-1]}, got K={inst.K}")
    F = inst.field
    upsilon = FqMatrix.zeros(F, d, 0)
    g_r, y_r, p_r, u_r = [], [], [], []
    for i in range(1, mbar + 1):
        gamma = hstack([upsilon] + [inst.u(k - 1) for k in range(Ki[i - 1] + 1, Ki[i])])
        u = inst.u(Ki[i] - 1)
        pi = hstack([gamma, u])
        upsilon = intersect(gamma, u)
        g_r.append(rank(gamma))
        y_r.append(rank(upsilon))
        p_r.append(rank(pi))
        u_r.append(rank(u))
    vp = [rank(M) for M in inst.vprime]
    ok = all(r == mp for r in vp) and all(r == d for r in p_r)
    return ConverseCertificate(mbar, Ki, g_r, y_r, p_r, u_r, vp, ok, Fraction(m * d, s) if ok else None)


def lemma3_bound(inst: LcbcInstance, K1: Iterable[int], K2: Iterable[int]) -> Fraction:
    """Three-user cooperation bound for user 0 against groups K1 and K2 (0-based)."""
    K1, K2 = sorted(set(K1)), sorted(set(K2))
    for k in K1 + K2:
        if not 0 < k < inst.K:
            raise BadSubset(f"user {k} not allowed (must be in 1..{inst.K - 1})")
    F, d = inst.field, inst.d

    def group(mats):
        return hstack(list(mats), F=F, rows=d)

    u1, v1 = inst.u(0), inst.vprime[0]
    uA, uB = group(inst.u(k) for k in K1), group(inst.u(k) for k in K2)
    vA, vB = group(inst.vprime[k] for k in K1), group(inst.vprime[k] for k in K2)
    inner = hstack([intersect(u1, uA), intersect(u1, uB)])
    total = (
        rank(intersect(v1, inner))
        + rank(hstack([u1, uA]))
        + rank(hstack([u1, uB]))
        - 2 * rank(v1)
        - rank(vA)
        - rank(vB)
    )
    return max(Fraction(0), Fraction(total, 2))


def check_generic_conditions(inst: LcbcInstance) -> dict[str, bool | None]:
    """C1..C6; conditions that need more users than the instance has are None."""
    m, mp = _sym_widths(inst)
    K, d, s = inst.K, inst.d, m + mp
    if K > 3:
        raise BadK(f"conditions are defined for K <= 3, got K={K}")
    g1, g2, g3 = gammas(d, m, mp)
    u = [inst.u(k) for k in range(K)]
    vp = inst.vprime
    out: dict[str, bool | None] = {}
    out["C1"] = all(rank(vp[k]) == min(mp, d) for k in range(K))
    out["C2"] = all(rank(u[k]) == min(s, d) for k in range(K))
    uij = {(i, j): intersect(u[i], u[j]) for i in range(K) for j in range(K) if i != j}
    if K >= 2:
        out["C3"] = all(rank(hstack([vp[i], uij[i, j]])) == min(mp + g2, s, d) for i, j in uij)
    else:
        out["C3"] = None
    if K == 3:
        u123 = intersect(uij[0, 1], u[2])
        out["C4"] = all(rank(hstack([vp[k], u123])) == min(mp + g3, s, d) for k in range(3))
        c5 = c6 = True
        for i in range(3):
            j, k = [x for x in range(3) if x != i]
            c5 &= rank(hstack([vp[i], uij[i, j], uij[i, k]])) == min(mp + 2 * g2, s, d)
            ui_jk = intersect(u[i], hstack([u[j], u[k]]))
            c6 &= rank(hstack([vp[i], ui_jk])) == min(mp + g1, s, d)
        out["C5"], out["C6"] = bool(c5), bool(c6)
    else:
        out["C4"] = out["C5"] = out["C6"] = None
    return out


# ---------------------------------------------------------------------------
# Monte-Carlo estimation


@dataclass
class ProbEstimate:
    trials: int
    hits: int
    frequency: float
    ci_low: float
    ci_high: float
    paper_bound: float | None = None

    HEADER = ("event", "trials", "hits", "frequency", "ci_low", "ci_high", "paper_bound")

    def row(self, event: str) -> list:
        return [event, self.trials, self.hits, self.frequency, self.ci_low, self.ci_high, self.paper_bound]


def wilson(hits: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    phat = hits / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    # guard against rounding pushing the interval off the point estimate
    return min(lo, phat), max(hi, phat)


def trial_seed(seed: int, t: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(t)]).generate_state(1, dtype=np.uint64)[0])


EVENTS = ("full_rank", "en_ia", "en_conv", "conditions_K3")

_EVENT_KEYS = {
    "full_rank": {"d", "widths"},
    "en_ia": {"K", "d", "m", "mp", "N"},
    "en_conv": {"K", "d", "m", "mp"},
    "conditions_K3": {"d", "m", "mp"},
}


def _event_trial(event: str, F: FieldCtx, params: dict, seed: int, t: int) -> bool:
    if event == "full_rank":
        d = int(params["d"])
        cols = sum(int(w) for w in params["widths"])
        M = FqMatrix.random(F, d, cols, rng_for(seed, t))
        return rank(M) == min(d, cols)
    if event == "en_ia":
        inst = sample_instance(F, params["K"], params["d"], params["m"], params["mp"], trial_seed(seed, t))
        return ia_artifacts(inst, params.get("N", 1), seed=trial_seed(seed, t), with_hbar=False).en_holds
    if event == "en_conv":
        inst = sample_instance(F, params["K"], params["d"], params["m"], params["mp"], trial_seed(seed, t))
        return converse_chain(inst).en_conv
    if event == "conditions_K3":
        inst = sample_instance(F, 3, params["d"], params["m"], params["mp"], trial_seed(seed, t))
        return all(v is not False for v in check_generic_conditions(inst).values())
    raise BadParams(f"unknown event {event!r}; choose from {', '.join(EVENTS)}")


def _check_params(event: str, params: dict) -> dict:
    if event not in _EVENT_KEYS:
        raise BadParams(f"unknown event {event!r}; choose from {', '.join(EVENTS)}")
    extra = set(params) - _EVENT_KEYS[event]
    if extra:
        raise BadParams(f"unexpected parameters for {event}: {sorted(extra)}")
    need = _EVENT_KEYS[event] - {"N"}
    missing = need - set(params)
    if missing:
        raise BadParams(f"missing parameters for {event}: {sorted(missing)}")
    out = dict(params)
    if event == "en_ia":
        out.setdefault("N", 1)
    return out


def full_rank_probability(q: int, rows: int, cols: int) -> float:
    """Exact probability that a uniform rows x cols matrix over F_q has full rank."""
    lo, hi = min(rows, cols), max(rows, cols)
    return math.prod(1.0 - float(q) ** (i - hi) for i in range(lo))


def event_bound(event: str, F: FieldCtx, params: dict) -> float | None:
    if event == "full_rank":
        return full_rank_probability(F.q, int(params["d"]), sum(int(w) for w in params["widths"]))
    if event == "en_ia":
        return ia_en_bound(F.p, F.n, params["K"], params["d"], params["m"], params["mp"], params["N"])
    return None


def estimate_event(event: str, field: FieldCtx, trials: int, seed: int = 0, **params) -> ProbEstimate:
    """Seeded Monte-Carlo frequency of an event, with a Wilson 95% interval."""
    if trials < 1:
        raise BadParams("trials must be >= 1")
    params = _check_params(event, params)
    chunk = 64
    spans = [range(s, min(trials, s + chunk)) for s in range(0, trials, chunk)]
    counts = ordered_map(lambda span: sum(_event_trial(event, field, params, seed, t) for t in span), spans)
    hits = int(sum(counts))
    lo, hi = wilson(hits, trials)
    return ProbEstimate(trials, hits, hits / trials, lo, hi, event_bound(event, field, params))


# ---------------------------------------------------------------------------
# Sweeps

GRID_KEYS = ("p", "n", "K", "d", "m", "mp")
BASE_COLUMNS = (
    "p", "n", "K", "d", "m", "mp", "regime", "delta_g", "delta_g_source", "branch",
    "lower", "upper", "C_g", "separate_cost", "random_coding_cost", "ia_formula_cost", "ia_N",
)
EVENT_COLUMNS = ("trials", "hits", "frequency", "ci_low", "ci_high", "paper_bound")


def _axis(name: str, value) -> list[int]:
    if isinstance(value, int):
        return [value]
    if isinstance(value, list) and all(isinstance(v, int) for v in value):
        return list(value)
    if isinstance(value, dict) and set(value) <= {"start", "stop", "step"} and {"start", "stop"} <= set(value):
        step = value.get("step", 1)
        if step < 1:
            raise ConfigError(f"grid.{name}: step must be >= 1")
        return list(range(value["start"], value["stop"] + 1, step))
    raise ConfigError(f"grid.{name}: expected an int, a list of ints, or {{start, stop[, step]}}")


@dataclass
class SweepConfig:
    grid: dict[str, list[int]]
    events: list[str] = field(default_factory=list)
    trials: int = 100
    seed: int = 0
    N: int = 1

    @staticmethod
    def from_dict(obj: dict) -> "SweepConfig":
        if not isinstance(obj, dict) or set(obj) - {"grid", "events"}:
            raise ConfigError("config must contain only [grid] and [events] tables")
        grid_raw = obj.get("grid", {})
        unknown = set(grid_raw) - set(GRID_KEYS)
        if unknown:
            raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
        grid = {k: _axis(k, grid_raw[k]) if k in grid_raw else [] for k in GRID_KEYS}
        if "p" not in grid_raw:
            grid["p"] = [2]
        if "n" not in grid_raw:
            grid["n"] = [1]
        ev = obj.get("events", {})
        unknown = set(ev) - {"names", "trials", "seed", "N"}
        if unknown:
            raise ConfigError(f"unknown events keys: {sorted(unknown)}")
        names = ev.get("names", [])
        for nme in names:
            if nme not in EVENTS:
                raise ConfigError(f"unknown event {nme!r}")
        for key in ("trials", "seed", "N"):
            if key in ev and not isinstance(ev[key], int):
                raise ConfigError(f"events.{key} must be an integer")
        return SweepConfig(grid, list(names), ev.get("trials", 100), ev.get("seed", 0), ev.get("N", 1))


def _event_params(event: str, K: int, d: int, m: int, mp: int, N: int) -> dict:
    if event == "full_rank":
        return {"d": d, "widths": [m, mp]}
    if event == "en_ia":
        return {"K": K, "d": d, "m": m, "mp": mp, "N": N}
    if event == "en_conv":
        return {"K": K, "d": d, "m": m, "mp": mp}
    return {"d": d, "m": m, "mp": mp}


def _cell(cfg: SweepConfig, cell: tuple[int, ...]) -> list:
    p, n, K, d, m, mp = cell
    params = SymParams(K, d, m, mp)
    value, source, branch = delta_g(params)
    b = generic_bounds(K, d, m, mp)
    C_g = None if not value else 1 / value
    ia_cost = ia_n = None
    if m >= 1 and mp >= 1 and d > m + mp and K >= 1:
        ia_n = ia_N(n, K, d, m, mp)
        if ia_n >= 1:
            ia_cost = ia_cost_formula(n, K, d, m, mp, ia_n)[0]
    row = [p, n, K, d, m, mp, b.regime, value, source, branch, b.lower, b.upper, C_g,
           Fraction(K * m), max(Fraction(0), Fraction(d - mp)), ia_cost, ia_n]
    F = make_field(p, n) if cfg.events else None
    for ev in cfg.events:
        cell_seed = trial_seed(cfg.seed, hash_cell(cell))
        try:
            est = estimate_event(ev, F, cfg.trials, cell_seed, **_event_params(ev, K, d, m, mp, cfg.N))
            row += [est.trials, est.hits, est.frequency, est.ci_low, est.ci_high, est.paper_bound]
        except LcbcError:
            row += [None] * len(EVENT_COLUMNS)
    return row


def hash_cell(cell: Sequence[int]) -> int:
    """Stable integer key for a grid cell (independent of Python's hash seed)."""
    acc = 0
    for v in cell:
        acc = (acc * 1_000_003 + int(v) + 1) % (2**61 - 1)
    return acc


def sweep(config: dict | SweepConfig) -> tuple[list[str], list[list]]:
    cfg = config if isinstance(config, SweepConfig) else SweepConfig.from_dict(config)
    header = list(BASE_COLUMNS) + [f"{ev}_{c}" for ev in cfg.events for c in EVENT_COLUMNS]
    cells = list(itertools.product(*(cfg.grid[k] for k in GRID_KEYS)))
    for cell in cells:
        if cell[0] < 2 or cell[1] < 1 or min(cell[2:]) < 0:
            raise ConfigError(f"invalid grid cell {dict(zip(GRID_KEYS, cell))}")
    rows = [_cell(cfg, c) for c in cells] if cfg.events else ordered_map(lambda c: _cell(cfg, c), cells)
    return header, rows
