"""One test per acceptance criterion. Each prints a single
``criterion N: PASS|FAIL <detail>`` line and then asserts."""

import itertools
import math
import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

import test_sublinalg as la
from capacity_table import LARGE_K, ONE_DIM, SMALL_K
from lcbc.analysis import converse_chain, estimate_event
from lcbc.capacity import (
    SymParams,
    delta_g_large_K,
    delta_g_one_dim,
    delta_g_small_K,
    generic_bounds,
)
from lcbc.errors import RankDeficient
from lcbc.galois import make_field
from lcbc.instance import sample_instance
from lcbc.schemes import build_ia, build_odd_d, ia_cost_formula, simulate_decoding, toy_pair


@pytest.fixture
def verdict(capsys):
    def report(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, f"criterion {n}: {detail}"

    return report


def test_criterion_01_toy_exhaustive(verdict):
    inst, scheme = toy_pair()
    t0 = time.perf_counter()
    rep = simulate_decoding(inst, scheme, exhaustive=True)
    dt = time.perf_counter() - t0
    ok = rep.trials == rep.successes == 7**4 and dt < 1.0
    verdict(1, ok, f"{rep.successes}/{rep.trials} decoded in {dt:.3f}s")


def test_criterion_02_capacity_table(verdict):
    wrong = [r for r in SMALL_K if delta_g_small_K(SymParams(*r[:4])) != r[4]]
    wrong += [r for r in LARGE_K if delta_g_large_K(SymParams(*r[:4])) != r[4]]
    wrong += [r for r in ONE_DIM if delta_g_one_dim(*r[:2]) != r[2]]
    named = (
        delta_g_large_K(SymParams(4, 4, 1, 1)) == 2,
        delta_g_large_K(SymParams(4, 4, 2, 1)) == Fraction(8, 3),
        delta_g_one_dim(3, 5) == 2,
    )
    cells = len(SMALL_K) + len(LARGE_K) + len(ONE_DIM)
    ok = cells >= 60 and not wrong and all(named)
    verdict(2, ok, f"{cells} cells, {len(wrong)} mismatches, named values {named}")


def test_criterion_03_bounds_consistency(verdict):
    bad = []
    for K, d, m, mp in itertools.product((1, 2, 3), range(13), range(13), range(13)):
        b = generic_bounds(K, d, m, mp)
        if not b.lower <= delta_g_small_K(SymParams(K, d, m, mp)) <= b.upper:
            bad.append((K, d, m, mp))
    b4 = generic_bounds(4, 4, 1, 1)
    ok = not bad and b4.lower == b4.upper == 2
    verdict(3, ok, f"{len(bad)} unbracketed cells; K=4 d=4: lower={b4.lower} upper={b4.upper}")


def test_criterion_04_ia_desk_scale(verdict):
    F = make_field(2, 16)
    t0 = time.perf_counter()
    holds, failures = 0, []
    for seed in range(100):
        inst = sample_instance(F, 2, 4, 1, 1, seed)
        ia, scheme = build_ia(inst, 1, seed=seed)
        if not ia.en_holds:
            continue
        holds += 1
        rep = simulate_decoding(inst, scheme, trials=1000, seed=seed)
        if rep.successes != 1000:
            failures.append(seed)
    dt = time.perf_counter() - t0
    ok = holds >= 95 and not failures and dt < 300
    verdict(4, ok, f"E_n held {holds}/100, decode failures {failures}, {dt:.1f}s")


def test_criterion_05_ia_cost_limit(verdict):
    c1, N1 = ia_cost_formula(10**6, 2, 4, 1, 1)
    c2, N2 = ia_cost_formula(10**8, 2, 4, 2, 1)
    r1, r2 = float(c1 / 2), float(c2 / Fraction(8, 3))
    ok = abs(r1 - 1) <= 0.05 and abs(r2 - 1) <= 0.10
    verdict(
        5, ok,
        f"n=1e6 N={N1} cost={float(c1):.4g} (limit 2); n=1e8 N={N2} cost={float(c2):.4g} (limit 8/3)",
    )


def test_criterion_06_converse_certificate(verdict):
    F = make_field(2, 16)
    holds, mismatched = 0, []
    for seed in range(50):
        cert = converse_chain(sample_instance(F, 5, 10, 3, 3, seed))
        if not cert.en_conv:
            continue
        holds += 1
        if cert.upsilon_ranks[:2] != [2, 4] or set(cert.pi_ranks) != {10} or cert.implied_bound != 5:
            mismatched.append(seed)
    ok = holds >= 45 and not mismatched
    verdict(6, ok, f"en_conv held {holds}/50, rank mismatches {mismatched}")


def test_criterion_07_odd_d(verdict):
    F = make_field(2, 12)
    built, bad = 0, []
    for seed in range(100):
        inst = sample_instance(F, 3, 5, 1, 1, seed)
        try:
            scheme = build_odd_d(inst)
        except RankDeficient:
            continue
        built += 1
        rep = simulate_decoding(inst, scheme, trials=500, seed=seed)
        if scheme.cost_q != 2 or rep.successes != 500:
            bad.append(seed)
    ok = built >= 95 and not bad
    verdict(7, ok, f"built {built}/100, cost or decode failures {bad}")


def test_criterion_08_linear_algebra(verdict):
    # each randomized check below runs 1000 cases per field configuration
    failed = []
    checks = [(la.test_rank_identities_randomized, c) for c in la.CONFIGS]
    checks += [(la.test_adjugate_identity_randomized, c) for c in la.CONFIGS]
    for fn, (p, n) in checks:
        try:
            fn(p, n)
        except AssertionError:
            failed.append((fn.__name__, p, n))
    try:
        la.test_block_rank_frequency_trend()
    except AssertionError:
        failed.append(("block_rank_trend",))
    verdict(8, not failed, f"{len(checks) + 1} suites x 1000 cases, failures {failed}")


def test_criterion_09_full_rank_oracle(verdict):
    exact = math.prod(1 - 2.0**-i for i in range(1, 5))
    est = estimate_event("full_rank", make_field(2, 1), 10**4, seed=0, d=4, widths=[4])
    ok = est.trials == 10**4 and est.ci_low <= exact <= est.ci_high
    verdict(9, ok, f"freq={est.frequency:.4f} CI=[{est.ci_low:.4f}, {est.ci_high:.4f}] exact={exact:.4f}")


CLI_COMMANDS = [
    ["capacity", "--K", "3", "--d", "5", "--m", "1", "--mp", "2"],
    ["bounds", "--K", "4", "--d", "6", "--m", "1,2,1,1", "--mp", "1,1,2,1"],
    ["gen-instance", "--p", "2", "--n", "16", "--K", "2", "--d", "4", "--m", "1", "--mp", "1", "--out", "ia.json"],
    ["gen-instance", "--p", "2", "--n", "12", "--K", "3", "--d", "5", "--m", "1", "--mp", "1", "--out", "odd.json"],
    ["gen-instance", "--p", "2", "--n", "16", "--K", "5", "--d", "10", "--m", "3", "--mp", "3", "--out", "conv.json"],
    ["gen-instance", "--toy", "--out", "toy.json"],
    ["build-scheme", "--type", "ia", "--instance", "ia.json", "--N", "1", "--out", "ia.scheme.json"],
    ["build-scheme", "--type", "odd-d", "--instance", "odd.json", "--out", "odd.scheme.json"],
    ["build-scheme", "--type", "random-coding", "--instance", "odd.json", "--out", "rc.scheme.json"],
    ["build-scheme", "--type", "separate", "--instance", "odd.json", "--out", "sep.scheme.json"],
    ["simulate", "--instance", "ia.json", "--scheme", "ia.scheme.json", "--trials", "300"],
    ["simulate", "--instance", "odd.json", "--scheme", "rc.scheme.json", "--trials", "300"],
    ["simulate", "--instance", "toy.json", "--scheme", "toy.scheme.json", "--exhaustive"],
    ["check-en", "--instance", "ia.json", "--N", "1"],
    ["converse-cert", "--instance", "conv.json"],
    ["check-conditions", "--instance", "odd.json"],
    ["estimate", "--event", "full_rank", "--params", "d=4", "widths=4", "--trials", "2000"],
    ["estimate", "--event", "en_conv", "--p", "2", "--n", "8", "--params", "K=2", "d=4", "m=1", "mp=1", "--trials", "300"],
    ["sweep", "--config", "grid.toml"],
]

GRID = """[grid]
p = 2
n = 8
K = [2, 3]
d = {start = 1, stop = 7}
m = 1
mp = [1, 2]

[events]
names = ["full_rank", "en_conv"]
trials = 40
"""


def _run_all(workdir, threads: str) -> list[bytes]:
    workdir.mkdir()
    (workdir / "grid.toml").write_text(GRID)
    env = dict(os.environ, LCBC_THREADS=threads)
    outs = []
    for argv in CLI_COMMANDS:
        res = subprocess.run(
            [sys.executable, "-m", "lcbc.cli", *argv, "--seed", "11"],
            cwd=workdir, env=env, capture_output=True, check=False,
        )
        outs.append(res.returncode.to_bytes(1, "big") + res.stdout)
    for f in sorted(workdir.glob("*.json")):
        outs.append(f.name.encode() + f.read_bytes())
    return outs


def test_criterion_10_cli_determinism(verdict, tmp_path):
    runs = [_run_all(tmp_path / f"r{i}_{t}", t) for i, t in enumerate(("1", "1", "4", "4"))]
    codes = {o[0] for o in runs[0][: len(CLI_COMMANDS)]}
    same = all(r == runs[0] for r in runs[1:])
    ok = same and codes == {0}
    verdict(10, ok, f"{len(CLI_COMMANDS)} commands x 4 runs (threads 1,1,4,4), identical={same}, exit codes {sorted(codes)}")
