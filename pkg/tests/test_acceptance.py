"""Acceptance suite: ten criteria, each printed as one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` or as a script.
The summary is also printed at the end of every pytest session.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from fractions import Fraction

from cachebounds import gap, sim
from cachebounds.converse import (
    Thm2,
    Thm4,
    best_peak_converse,
    best_peak_converse_curve,
    best_peak_provenance,
    two_user_ave_converse,
    two_user_ave_curve,
)
from cachebounds.curves import achievable_average_curve, achievable_peak_curve
from cachebounds.envelope import evaluate
from cachebounds.rates import (
    SystemParams,
    convexity_deficit,
    r_u_ave,
    r_u_ave_integer,
    r_u_integer,
)

RESULTS: dict = {}


def report(num: int, name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {name}: {detail}"
    RESULTS[num] = line
    print(line)
    assert ok, line


# 1 ---------------------------------------------------------------------------

def _brute_average(n: int, k: int, r: int, memo: dict) -> Fraction:
    """Average load over every demand, counting (r+1)-subsets that meet the leader set."""
    total = 0
    for d in itertools.product(range(n), repeat=k):
        first = {}
        for user, f in enumerate(d):
            first.setdefault(f, user)
        lead = frozenset(first.values())
        key = (k, r, lead)
        if key not in memo:
            memo[key] = sum(1 for s in itertools.combinations(range(k), r + 1) if lead.intersection(s))
        total += memo[key]
    return Fraction(total, n ** k * math.comb(k, r))


def test_criterion_01_average_formula_vs_brute_force():
    t0 = time.perf_counter()
    memo: dict = {}
    bad = []
    checked = 0
    for n in range(1, 7):
        for k in range(1, 7):
            p = SystemParams(n, k)
            for r in range(k + 1):
                checked += 1
                if r_u_ave_integer(p, r) != _brute_average(n, k, r, memo):
                    bad.append((n, k, r))
    dt = time.perf_counter() - t0
    report(1, "average rate via N_e law == brute force", not bad and dt < 30,
           f"{checked} (N,K,r) exact matches, {len(bad)} mismatches, {dt:.1f}s (limit 30s)")


# 2 ---------------------------------------------------------------------------

def test_criterion_02_simulator_soundness():
    t0 = time.perf_counter()
    bad, runs, demands = [], 0, 0
    for n in range(1, 6):
        for k in range(1, 6):
            for r in range(1, k + 1):
                p = SystemParams.from_r(n, k, r)
                res = sim.simulate(p, seed=n * 100 + k * 10 + r)
                runs += 1
                demands += res.n_demands
                if (res.decode_failures or res.peak != r_u_integer(p, r)
                        or res.average != r_u_ave_integer(p, r)):
                    bad.append((n, k, r))
    dt = time.perf_counter() - t0
    report(2, "simulator decodes bit-exactly at the formula rates", not bad and dt < 120,
           f"{runs} systems, {demands} demands, {len(bad)} failures, {dt:.1f}s (limit 120s)")


# 3 ---------------------------------------------------------------------------

def test_criterion_03_case_b_exhaustive():
    t0 = time.perf_counter()
    res = gap.lemma4_case_b_sweep(81)
    dt = time.perf_counter() - t0
    report(3, "exhaustive corner sweep N<=81, N<9s: R_dec <= 2R", res.passed and dt < 60,
           f"{res.n_triples} corners, worst R_dec/R = {float(res.worst_ratio):.7f} at "
           f"(N,s,ell)={res.worst_triple}, {dt:.1f}s (limit 60s)")


# 4 ---------------------------------------------------------------------------

def test_criterion_04_numeric_inequalities():
    rep = gap.lemma4_numeric_inequalities(Fraction(1, 10000))
    cell = {k: v[0] for k, v in rep.min_cell_slack.items()}
    point = {k: v[0] for k, v in rep.min_point_slack.items()}
    ok = rep.passed and all(v > 0 for v in cell.values()) and all(v > 0 for v in point.values())
    report(4, "exponential inequalities on [0,9) at step 1e-4", ok,
           f"min node slack num1={point['num1']:.3g} num2={point['num2']:.3g}; "
           f"certified cell slack num1={cell['num1']:.3g} num2={cell['num2']:.3g}")


# 5 ---------------------------------------------------------------------------

def test_criterion_05_theorem1_sweep():
    t0 = time.perf_counter()
    rep = gap.theorem1_gap_sweep(30, 30, 8, workers=os.cpu_count() or 1)
    dt = time.perf_counter() - t0
    worst = {k: float(v["ratio"]) for k, v in rep.details.items()}
    ok = (rep.passed and dt < 600
          and rep.details["peak"]["ratio"] <= Fraction(200884, 100000)
          and rep.details["average"]["ratio"] <= Fraction(200884, 100000)
          and rep.details["peak-large-N"]["ratio"] <= 2
          and rep.details["average-large-N"]["ratio"] <= 2)
    report(5, "ratio sweep N,K<=30", ok,
           "worst " + ", ".join(f"{k}={v:.6f}" for k, v in sorted(worst.items()))
           + f"; {dt:.1f}s (limit 600s)")


# 6 ---------------------------------------------------------------------------

def test_criterion_06_tightness():
    parts = []
    ok = True
    for n, k in [(6, 3), (10, 4)]:
        upper, lower = achievable_peak_curve(n, k), best_peak_converse_curve(n, k)
        ms = set(upper.memories) | set(lower.memories)
        g = max(evaluate(upper, m) - evaluate(lower, m) for m in ms)
        ok &= g == 0
        parts.append(f"(K={k},N={n}) gap {g} over {len(ms)} breakpoints")
    report(6, "converse meets achievable rate", ok, "; ".join(parts))


# 7 ---------------------------------------------------------------------------

def test_criterion_07_spot_values():
    a = SystemParams(10, 4, 1)
    b = SystemParams(10, 4, 4)
    va, vb = best_peak_converse(a), best_peak_converse(b)
    pa, pb = best_peak_provenance(a).provenance, best_peak_provenance(b).provenance
    ok = (va == 3 and vb == 1 and isinstance(pa, Thm2)
          and isinstance(pb, Thm4) and pb.n == 2 and pb.branch == "condition-holds")
    report(7, "spot values", ok, f"(10,4,M=1) -> {va} via {pa}; (10,4,M=4) -> {vb} via {pb}")


# 8 ---------------------------------------------------------------------------

def test_criterion_08_two_user_average():
    bad, points = [], 0
    for n in range(2, 51):
        ms = set(achievable_average_curve(n, 2).memories) | set(two_user_ave_curve(n).memories)
        for m in sorted(ms):
            points += 1
            p = SystemParams(n, 2, m)
            if two_user_ave_converse(p) != r_u_ave(p):
                bad.append((n, m))
    rep = gap.corollary1_check(50)
    report(8, "two-user average converse == achievable average", not bad and rep.passed,
           f"{points} breakpoints for N in 2..50, {len(bad)} mismatches; certify suite pass={rep.passed}")


# 9 ---------------------------------------------------------------------------

def test_criterion_09_large_n_trend():
    rep = gap.theorem3_exactness_check(5, [100, 1000, 10000])
    gaps = [d["gap"] for d in rep.details["gaps"]]
    regimes = {c["regime"].split()[0] for c in rep.details["subchecks"]}
    sub_ok = all(c["ok"] for c in rep.details["subchecks"])
    ok = (rep.passed and gaps[0] >= gaps[1] >= gaps[2] and gaps[2] < gaps[0] / 5
          and sub_ok and {"r<=1", "thm4"} <= regimes)
    report(9, "K=5 gap shrinks with N, exact regimes equal", ok,
           f"g(100)={gaps[0]}, g(1000)={gaps[1]}, g(10000)={gaps[2]}; "
           f"{len(rep.details['subchecks'])} equality sub-checks, all ok={sub_ok}")


# 10 --------------------------------------------------------------------------

def test_criterion_10_convexity():
    t0 = time.perf_counter()
    bad, count, worst = [], 0, {"peak": None, "average": None}
    for n in range(1, 101):
        for k in range(2, 101):
            p = SystemParams(n, k)
            for r in range(1, k):
                for which in ("peak", "average"):
                    d = convexity_deficit(p, r, which)
                    count += 1
                    if d > 0:
                        bad.append((n, k, r, which))
                    if worst[which] is None or d > worst[which]:
                        worst[which] = d
    dt = time.perf_counter() - t0
    report(10, "second differences <= 0 for N,K<=100", not bad,
           f"{count} exact checks, {len(bad)} positive; max peak {worst['peak']}, "
           f"max average {float(worst['average']):.3g}; {dt:.1f}s")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
