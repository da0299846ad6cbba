"""Machine checks of the multiplicative-gap results.

Everything that can be exact is exact.  The two inequalities involving
``exp(-M)`` are checked on a grid with 113-bit arithmetic, and each grid
cell gets a lower bound on the slack obtained from the monotonicity of the
individual terms, so a positive cell bound covers the whole cell.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import mpmath

from .converse import best_peak_converse_curve, ave_converse_curve, thm2_line, thm4_line, thm4_range
from .curves import achievable_average_curve, achievable_peak_curve
from .envelope import curve_max_difference, curve_max_ratio, evaluate
from .rates import SystemParams, memory_at, r_u, r_u_integer

GAP_BOUND = Fraction(200884, 100000)
LARGE_N_BOUND = Fraction(2)
CASE_A_FACTOR = 2 + Fraction(1, 128)
CASE_B_FACTOR = Fraction(2)
CASE_B_N_MAX = 81
PRECISION_BITS = 113


@dataclass
class GapReport:
    suite: str
    grid: Dict[str, Any]
    worst_ratio: Optional[Fraction]
    worst_location: Optional[Dict[str, Any]]
    bound: Fraction
    passed: bool
    counterexamples: List[Dict[str, Any]] = field(default_factory=list)
    error_bound: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "grid": _jsonable(self.grid),
            "worst_ratio": _jsonable(self.worst_ratio),
            "worst_location": _jsonable(self.worst_location),
            "bound": _jsonable(self.bound),
            "pass": self.passed,
            "counterexamples": _jsonable(self.counterexamples),
            "error_bound": self.error_bound,
            "details": _jsonable(self.details),
        }


def _jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return {"exact": str(x), "decimal": float(x)}
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, mpmath.mpf):
        return float(x)
    return x


# --------------------------------------------------------------------------
# Corners of the converse region against the decentralized rate
# --------------------------------------------------------------------------

def corner(n_files: int, s: int, ell: int) -> Tuple[Fraction, Fraction]:
    """The ``(M, R)`` corner point for ``s`` users and pivot ``ell``."""
    return (Fraction(n_files - ell + 1, s),
            Fraction(s - 1, 2) + Fraction(ell * (ell - 1), 2 * s))


def classify_corner(n_files: int, s: int) -> str:
    if n_files >= 9 * s:
        return "a"
    if n_files <= CASE_B_N_MAX:
        return "b"
    return "c"


def r_dec_full(n_files: int, m: Fraction) -> Fraction:
    """``(N-M)/M (1 - (1-M/N)^N)``, the exponent-``N`` bound valid for every ``J <= N``."""
    if m == 0:
        return Fraction(n_files)
    return (n_files - m) / m * (1 - (1 - m / n_files) ** n_files)


def _check_triple(n_files: int, s: int, ell: int) -> None:
    if not 1 <= ell <= s <= n_files:
        raise ValueError(f"need 1 <= ell <= s <= N, got N={n_files}, s={s}, ell={ell}")


def lemma4_check_case_a(n_files: int, s: int, ell: int) -> bool:
    """Verify every link of the ``N >= 9s`` chain at one corner, exactly."""
    _check_triple(n_files, s, ell)
    if n_files < 9 * s:
        raise ValueError(f"case a needs N >= 9s, got N={n_files}, s={s}")
    m, r = corner(n_files, s, ell)
    if r == 0:
        return m == n_files and r_dec_full(n_files, m) == 0
    rdec_cap = (n_files - m) / m
    steps = [
        r_dec_full(n_files, m) <= rdec_cap,
        rdec_cap == s - 1 + Fraction(s * (ell - 1), n_files - ell + 1),
        rdec_cap <= s - 1 + Fraction(ell - 1, 8),
        s - 1 + Fraction(ell - 1, 8) <= s - 1 + Fraction(s - 1, 256) + Fraction(ell * (ell - 1), s),
        s - 1 + Fraction(s - 1, 256) + Fraction(ell * (ell - 1), s) <= CASE_A_FACTOR * r,
        CASE_A_FACTOR * r <= GAP_BOUND * r,
    ]
    return all(steps)


def lemma4_case_b_triple(n_files: int, s: int, ell: int) -> bool:
    _check_triple(n_files, s, ell)
    m, r = corner(n_files, s, ell)
    return r_dec_full(n_files, m) <= CASE_B_FACTOR * r


@dataclass
class CaseBResult:
    passed: bool
    n_triples: int
    worst_ratio: Fraction
    worst_triple: Tuple[int, int, int]
    failures: List[Tuple[int, int, int]]


def lemma4_case_b_sweep(n_max: int = CASE_B_N_MAX) -> CaseBResult:
    """Every corner with ``N <= n_max`` and ``N < 9s``, in exact arithmetic."""
    worst, worst_at, count, failures = Fraction(0), (1, 1, 1), 0, []
    for n in range(1, n_max + 1):
        for s in range(n // 9 + 1, n + 1):
            for ell in range(1, s + 1):
                count += 1
                m, r = corner(n, s, ell)
                rd = r_dec_full(n, m)
                if r == 0:
                    if rd != 0:
                        failures.append((n, s, ell))
                    continue
                q = rd / r
                if q > worst:
                    worst, worst_at = q, (n, s, ell)
                if q > CASE_B_FACTOR:
                    failures.append((n, s, ell))
    return CaseBResult(not failures, count, worst, worst_at, failures)


def lemma4_bruteforce_case_b() -> bool:
    return lemma4_case_b_sweep().passed


# --- inequalities with exp(-M) on [0, 9) ----------------------------------

def _terms(m: mpmath.mpf) -> Tuple[mpmath.mpf, mpmath.mpf, mpmath.mpf]:
    # (1 - e^-M)/M, sqrt(1+M^2) - M, e^-M
    e = mpmath.exp(-m)
    q = mpmath.mpf(1) if m == 0 else -mpmath.expm1(-m) / m
    g = 1 / (mpmath.sqrt(1 + m * m) + m)
    return q, g, e


def _mp(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def num1_sides(m) -> Tuple[mpmath.mpf, mpmath.mpf]:
    with mpmath.workprec(PRECISION_BITS):
        m = _mp(m)
        q, g, _ = _terms(m)
        return q, _gap_constant() * g


def num2_sides(m) -> Tuple[mpmath.mpf, mpmath.mpf]:
    with mpmath.workprec(PRECISION_BITS):
        m = _mp(m)
        q, g, e = _terms(m)
        c = _gap_constant()
        lhs = (81 - m) * q + mpmath.mpf(9) / 16 * m * e
        rhs = c * ((81 - m * m) * g + (m - 1) / 2)
        return lhs, rhs


@dataclass
class NumericReport:
    passed: bool
    grid_step: Fraction
    margin: float
    min_point_slack: Dict[str, Tuple[float, Fraction]]
    min_cell_slack: Dict[str, Tuple[float, Fraction]]
    near_equality: Dict[str, Tuple[Fraction, Fraction]]
    refined_cells: Dict[str, int]
    violations: List[Tuple[str, Fraction]]


def _gap_constant() -> mpmath.mpf:
    return mpmath.mpf(GAP_BOUND.numerator) / GAP_BOUND.denominator


def _cell_slack(key: str, a, b, ta, tb) -> mpmath.mpf:
    # lower bound of RHS - LHS over [a, b] from monotone pieces
    c = _gap_constant()
    qa, _, ea = ta
    _, gb, _ = tb
    if key == "num1":
        return c * gb - qa
    return c * ((81 - b * b) * gb + (a - 1) / 2) - ((81 - a) * qa + b * ea * 9 / 16)


def _certify(key: str, a, b, ta, tb, depth: int) -> Tuple[mpmath.mpf, int]:
    bound = _cell_slack(key, a, b, ta, tb)
    if bound > 0 or depth == 0:
        return bound, 1
    mid = (a + b) / 2
    tm = _terms(mid)
    left, n_left = _certify(key, a, mid, ta, tm, depth - 1)
    right, n_right = _certify(key, mid, b, tm, tb, depth - 1)
    return min(left, right), n_left + n_right


def lemma4_numeric_inequalities(grid_step: Fraction = Fraction(1, 10000),
                                margin: float = 1e-6, upper: int = 9,
                                max_depth: int = 24) -> NumericReport:
    """Check both exponential inequalities on ``[0, upper)``.

    Point slack is RHS - LHS at each grid node.  The cell bound on ``[a, b]``
    uses that ``(1-e^-M)/M``, ``sqrt(1+M^2)-M``, ``81-M`` and ``81-M^2`` are
    positive and decreasing there and ``M e^-M <= b e^-a``; a positive cell
    bound covers the whole cell.  Cells whose bound is not positive are
    bisected up to ``max_depth`` times.  Nodes with point slack below
    ``margin`` are reported as near-equality, not as failures.
    """
    grid_step = Fraction(grid_step)
    if not 0 < grid_step <= Fraction(1, 1000):
        raise ValueError("grid_step must lie in (0, 1e-3]")
    if margin <= 0:
        raise ValueError("margin must be positive")
    n = math.ceil(upper / grid_step)
    keys = ("num1", "num2")
    with mpmath.workprec(PRECISION_BITS):
        c = _gap_constant()
        nodes = [min(i * grid_step, Fraction(upper)) for i in range(n + 1)]
        ms = [mpmath.mpf(x.numerator) / x.denominator for x in nodes]
        vals = [_terms(m) for m in ms]
        point = {k: (mpmath.inf, None) for k in keys}
        cell = {k: (mpmath.inf, None) for k in keys}
        near: Dict[str, Tuple[Fraction, Fraction]] = {}
        refined = {k: 0 for k in keys}
        violations = []
        for i in range(n + 1):
            m, (q, g, e) = ms[i], vals[i]
            if nodes[i] < upper:
                slacks = {
                    "num1": c * g - q,
                    "num2": c * ((81 - m * m) * g + (m - 1) / 2) - ((81 - m) * q + m * e * 9 / 16),
                }
                for key, sl in slacks.items():
                    if sl < point[key][0]:
                        point[key] = (sl, nodes[i])
                    if sl <= 0:
                        violations.append((key, nodes[i]))
                    elif sl < margin:
                        lo_hi = near.get(key, (nodes[i], nodes[i]))
                        near[key] = (min(lo_hi[0], nodes[i]), max(lo_hi[1], nodes[i]))
            if i == n:
                break
            for key in keys:
                sl, pieces = _certify(key, ms[i], ms[i + 1], vals[i], vals[i + 1], max_depth)
                if pieces > 1:
                    refined[key] += 1
                if sl < cell[key][0]:
                    cell[key] = (sl, nodes[i])
                if sl <= 0:
                    violations.append((key, nodes[i]))
    as_float = lambda d: {k: (float(v[0]), v[1]) for k, v in d.items()}
    return NumericReport(not violations, grid_step, margin, as_float(point), as_float(cell),
                         near, refined, violations)


def lemma4_case_c_check(n_files: int, s: int, ell: int) -> Dict[str, Any]:
    """Direct check of one case-c corner plus the two-sided decomposition.

    Returns exact ``R_dec <= 2.00884 R`` and, in 113-bit arithmetic, the
    bounds ``R >= lower`` and ``R_dec <= upper`` along with
    ``2.00884*lower - upper``, which equals ``(N-81)*num1 + num2`` slack.
    """
    _check_triple(n_files, s, ell)
    if classify_corner(n_files, s) != "c":
        raise ValueError("corner is not in case c")
    m, r = corner(n_files, s, ell)
    rd = r_dec_full(n_files, m)
    with mpmath.workprec(PRECISION_BITS):
        mf = mpmath.mpf(m.numerator) / m.denominator
        q, g, e = _terms(mf)
        lower = (n_files - 81) * g + (81 - mf * mf) * g + (mf - 1) / 2
        upper = (n_files - 81) * q + (81 - mf) * q + mpmath.mpf(9) / 16 * mf * e
        l1, r1 = num1_sides(mf)
        l2, r2 = num2_sides(mf)
        c = _gap_constant()
        slack = c * lower - upper
        decomposed = (n_files - 81) * (r1 - l1) + (r2 - l2)
        return {
            "exact_holds": rd <= GAP_BOUND * r,
            "lower_holds": mpmath.mpf(r.numerator) / r.denominator >= lower,
            "upper_holds": mpmath.mpf(rd.numerator) / rd.denominator <= upper,
            "slack": slack,
            "decomposition_error": abs(slack - decomposed),
        }


def lemma4_report(case_a_n_max: int = 200, case_c_samples: int = 300, case_c_n_max: int = 300,
                  seed: int = 0, grid_step: Fraction = Fraction(1, 10000),
                  margin: float = 1e-6) -> GapReport:
    counterexamples: List[Dict[str, Any]] = []
    n_a = 0
    for n in range(9, case_a_n_max + 1):
        for s in range(1, n // 9 + 1):
            for ell in range(1, s + 1):
                n_a += 1
                if not lemma4_check_case_a(n, s, ell):
                    counterexamples.append({"case": "a", "N": n, "s": s, "ell": ell})
    b = lemma4_case_b_sweep()
    counterexamples += [{"case": "b", "N": n, "s": s, "ell": l} for n, s, l in b.failures]
    num = lemma4_numeric_inequalities(grid_step, margin)
    counterexamples += [{"case": "c-numeric", "inequality": k, "cell_start": m} for k, m in num.violations[:20]]
    rng = random.Random(seed)
    c_worst = None
    for _ in range(case_c_samples):
        n = rng.randint(82, case_c_n_max)
        s = rng.randint(n // 9 + 1, n)
        ell = rng.randint(1, s)
        res = lemma4_case_c_check(n, s, ell)
        if not (res["exact_holds"] and res["lower_holds"] and res["upper_holds"] and res["slack"] > 0):
            counterexamples.append({"case": "c", "N": n, "s": s, "ell": ell})
        if c_worst is None or res["slack"] < c_worst[0]:
            c_worst = (res["slack"], (n, s, ell))
    return GapReport(
        suite="lemma4",
        grid={"case_a_N_max": case_a_n_max, "case_b_N_max": CASE_B_N_MAX,
              "numeric_step": grid_step, "case_c_samples": case_c_samples,
              "case_c_N_max": case_c_n_max, "seed": seed},
        worst_ratio=b.worst_ratio,
        worst_location={"N": b.worst_triple[0], "s": b.worst_triple[1], "ell": b.worst_triple[2]},
        bound=CASE_B_FACTOR,
        passed=not counterexamples,
        counterexamples=counterexamples,
        # rounding in the 113-bit evaluations, far below the smallest cell slack
        error_bound=2.0 ** -(PRECISION_BITS - 10),
        details={
            "case_a_corners": n_a,
            "case_b_corners": b.n_triples,
            "numeric_min_point_slack": num.min_point_slack,
            "numeric_min_cell_slack": num.min_cell_slack,
            "numeric_margin": margin,
            "numeric_near_equality": num.near_equality,
            "numeric_refined_cells": num.refined_cells,
            "case_c_min_slack": c_worst[0] if c_worst else None,
            "case_c_min_slack_at": c_worst[1] if c_worst else None,
        },
    )


# --------------------------------------------------------------------------
# Ratio sweeps over (N, K)
# --------------------------------------------------------------------------

def _cell(args: Tuple[int, int, int]) -> List[Dict[str, Any]]:
    n, k, den = args
    grid = [Fraction(i, den) for i in range(n * den + 1)]
    out = []
    pairs = (
        ("peak", achievable_peak_curve(n, k), best_peak_converse_curve(n, k)),
        ("average", achievable_average_curve(n, k), ave_converse_curve(n, k)),
    )
    for metric, upper, lower in pairs:
        res = curve_max_ratio(upper, lower, extra_points=grid)
        out.append({"metric": metric, "N": n, "K": k, "ratio": res.ratio,
                    "M": res.argmax, "unbounded": res.unbounded,
                    "large_n": 2 * n >= k * (k + 1)})
    return out


def theorem1_gap_sweep(n_max: int = 30, k_max: int = 30, grid_den: int = 8,
                       workers: int = 1) -> GapReport:
    """Ratio of achievable to converse over every ``(N, K)`` cell.

    Probe points are all curve breakpoints plus the ``1/grid_den`` grid.
    Cells with ``N >= K(K+1)/2`` must also satisfy the factor-2 bound.
    """
    if n_max < 1 or k_max < 1 or grid_den < 1:
        raise ValueError("limits must be positive")
    cells = [(n, k, grid_den) for n in range(1, n_max + 1) for k in range(1, k_max + 1)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_cell, cells, chunksize=8))
    else:
        results = [_cell(c) for c in cells]
    counterexamples = []
    worst: Dict[str, Tuple[Fraction, Dict[str, Any]]] = {}
    for rows in results:
        for row in rows:
            loc = {"N": row["N"], "K": row["K"], "M": row["M"]}
            if row["unbounded"]:
                counterexamples.append({**loc, "metric": row["metric"], "ratio": "unbounded"})
                continue
            q = row["ratio"]
            keys = [row["metric"]] + ([row["metric"] + "-large-N"] if row["large_n"] else [])
            for key in keys:
                if key not in worst or q > worst[key][0]:
                    worst[key] = (q, {**loc, "metric": row["metric"]})
            if q > GAP_BOUND:
                counterexamples.append({**loc, "metric": row["metric"], "ratio": q, "bound": GAP_BOUND})
            elif row["large_n"] and q > LARGE_N_BOUND:
                counterexamples.append({**loc, "metric": row["metric"], "ratio": q, "bound": LARGE_N_BOUND})
    top = max(worst.values(), key=lambda v: v[0]) if worst else (None, None)
    return GapReport(
        suite="theorem1",
        grid={"N_max": n_max, "K_max": k_max, "M_grid": f"1/{grid_den} plus all breakpoints"},
        worst_ratio=top[0],
        worst_location=top[1],
        bound=GAP_BOUND,
        passed=not counterexamples,
        counterexamples=counterexamples,
        details={key: {"ratio": v[0], "location": v[1]} for key, v in sorted(worst.items())},
    )


# --------------------------------------------------------------------------
# Exactness for few users and many files
# --------------------------------------------------------------------------

def peak_gap(n_files: int, n_users: int) -> Tuple[Fraction, Fraction]:
    """``max_M (R_u - best converse)`` and its location."""
    return curve_max_difference(achievable_peak_curve(n_files, n_users),
                                best_peak_converse_curve(n_files, n_users))


def _equal_on(n_files: int, n_users: int, lo: Fraction, hi: Fraction) -> bool:
    upper = achievable_peak_curve(n_files, n_users)
    lower = best_peak_converse_curve(n_files, n_users)
    ms = {lo, hi} | {m for c in (upper, lower) for m in c.memories if lo <= m <= hi}
    return all(evaluate(upper, m) == evaluate(lower, m) for m in ms)


def lemma2_subchecks(n_files: int, n_users: int) -> List[Dict[str, Any]]:
    """Exact-equality checks on the finite-N regimes where the converse is tight."""
    k, n_f = n_users, n_files
    params = SystemParams(n_f, k)
    checks = []
    if 2 * n_f >= k * (k + 1):
        checks.append({"regime": "r<=1", "N": n_f,
                       "ok": _equal_on(n_f, k, Fraction(0), memory_at(n_f, k, 1))})
    if k >= 1:
        line = thm2_line(params, 1, 1)
        lo = memory_at(n_f, k, max(k - 1, 0))
        ok = all(line(m) == r_u(params.with_memory(m)) for m in (lo, Fraction(n_f)))
        checks.append({"regime": "r>=K-1", "N": n_f, "ok": ok and _equal_on(n_f, k, lo, Fraction(n_f))})
    for n in range(1, k):
        if 2 * n <= k - 1 or n not in thm4_range(params):
            continue
        if n_f < Fraction(2 * (k - n) ** 2, 2 * n + 1 - k) + 1 or n_f < k - n + 1:
            continue
        line = thm4_line(params, n)
        lo, hi = memory_at(n_f, k, n - 1), memory_at(n_f, k, n)
        ok = (line.provenance.branch == "condition-holds"
              and all(line(m) == r_u(params.with_memory(m)) for m in (lo, hi))
              and _equal_on(n_f, k, lo, hi))
        checks.append({"regime": f"thm4 n={n}", "N": n_f, "ok": ok})
    return checks


def thm4_tight_range(n_files: int, n_users: int) -> Tuple[int, int]:
    """Integer ``r`` range ``[lo, K-1)`` on which the ``n = floor(r+1)`` line is tight."""
    k = n_users
    inner = Fraction(n_files - 1, math.ceil(Fraction(2 * n_files, k + 1)))
    return math.ceil(k - 1 - inner), k - 1


def check_thm4_tightness(n_files: int, n_users: int) -> bool:
    """On the tight range, the ``n = floor(r+1)`` line equals ``R_u`` exactly."""
    params = SystemParams(n_files, n_users)
    lo, hi = thm4_tight_range(n_files, n_users)
    ok = True
    for n in range(max(lo, 0) + 1, hi + 1):
        if n not in thm4_range(params):
            return False
        line = thm4_line(params, n)
        # r_u and the line are affine on [n-1, n]; compare at both ends
        for r in (n - 1, n):
            m = memory_at(n_files, n_users, r)
            ok &= line(m) == r_u_integer(params, r)
    return ok


def theorem3_exactness_check(n_users: int, n_list: Sequence[int],
                             threshold: Optional[Fraction] = None) -> GapReport:
    """Track the peak gap as ``N`` grows, plus exact sub-checks.

    ``threshold`` bounds the last gap; by default it is a fifth of the first.
    """
    if n_users > 5:
        raise ValueError("exactness is only claimed for K <= 5")
    ns = list(n_list)
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_list must be increasing")
    if any(2 * n < n_users * (n_users + 1) for n in ns):
        raise ValueError("every N must be at least K(K+1)/2")
    gaps = [(n, *peak_gap(n, n_users)) for n in ns]
    counterexamples: List[Dict[str, Any]] = []
    for (n0, g0, _), (n1, g1, m1) in zip(gaps, gaps[1:]):
        if g1 > g0:
            counterexamples.append({"check": "monotone", "N": n1, "gap": g1, "previous": g0})
    if threshold is None:
        threshold = gaps[0][1] / 5
    if gaps and gaps[-1][1] > 0 and not gaps[-1][1] < threshold:
        counterexamples.append({"check": "threshold", "N": gaps[-1][0], "gap": gaps[-1][1],
                                "threshold": threshold})
    sub = [c for n in ns for c in lemma2_subchecks(n, n_users)]
    counterexamples += [{"check": "equality", **c} for c in sub if not c["ok"]]
    worst = max(gaps, key=lambda g: g[1])
    return GapReport(
        suite="theorem3",
        grid={"K": n_users, "N_list": ns},
        worst_ratio=None,
        worst_location={"N": worst[0], "M": worst[2], "gap": worst[1]},
        bound=threshold,
        passed=not counterexamples,
        counterexamples=counterexamples,
        details={"gaps": [{"N": n, "gap": g, "M": m} for n, g, m in gaps], "subchecks": sub},
    )


def corollary1_check(n_max: int = 50) -> GapReport:
    """Two-user average converse against the achievable average, exactly."""
    from .converse import two_user_ave_curve

    counterexamples = []
    n_points = 0
    for n in range(2, n_max + 1):
        upper = achievable_average_curve(n, 2)
        lower = two_user_ave_curve(n)
        ms = sorted(set(upper.memories) | set(lower.memories))
        for m in ms:
            n_points += 1
            u, l = evaluate(upper, m), evaluate(lower, m)
            if u != l:
                counterexamples.append({"N": n, "M": m, "achievable": u, "converse": l})
    return GapReport(
        suite="corollary1",
        grid={"K": 2, "N_range": [2, n_max]},
        worst_ratio=Fraction(1) if not counterexamples else None,
        worst_location=None,
        bound=Fraction(1),
        passed=not counterexamples,
        counterexamples=counterexamples,
        details={"points_checked": n_points},
    )
