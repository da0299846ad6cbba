"""Exact convex piecewise-linear curves.

Curves are stored as their vertex lists.  Hulls use a monotone-chain scan
with exact ``Fraction`` cross products, so no tolerance is ever involved.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

from .rates import RatePoint, Rational, to_fraction

Line = Tuple[Fraction, Fraction]  # (intercept, slope)


def _cross(o: RatePoint, a: RatePoint, b: RatePoint) -> Fraction:
    return (a.memory - o.memory) * (b.rate - o.rate) - (a.rate - o.rate) * (b.memory - o.memory)


@dataclass(frozen=True)
class PiecewiseLinearCurve:
    breakpoints: Tuple[RatePoint, ...]

    def __post_init__(self) -> None:
        pts = tuple(self.breakpoints)
        if not pts:
            raise ValueError("a curve needs at least one breakpoint")
        for a, b in zip(pts, pts[1:]):
            if not a.memory < b.memory:
                raise ValueError("breakpoint memories must be strictly increasing")
        for o, a, b in zip(pts, pts[1:], pts[2:]):
            if _cross(o, a, b) <= 0:
                raise ValueError(f"curve is not strictly convex at {a}")
        object.__setattr__(self, "breakpoints", pts)
        object.__setattr__(self, "_ms", [p.memory for p in pts])

    @classmethod
    def through(cls, points: Iterable[RatePoint]) -> "PiecewiseLinearCurve":
        """Curve through convex data, dropping collinear interior points."""
        pts = sorted(points, key=lambda p: p.memory)
        kept: List[RatePoint] = []
        for p in pts:
            if kept and kept[-1].memory == p.memory:
                if kept[-1].rate != p.rate:
                    raise ValueError(f"conflicting values at memory {p.memory}")
                continue
            while len(kept) >= 2 and _cross(kept[-2], kept[-1], p) == 0:
                kept.pop()
            kept.append(p)
        return cls(tuple(kept))

    @property
    def domain(self) -> Tuple[Fraction, Fraction]:
        return self.breakpoints[0].memory, self.breakpoints[-1].memory

    @property
    def memories(self) -> List[Fraction]:
        return list(self._ms)

    def __call__(self, m: Rational) -> Fraction:
        return evaluate(self, m)

    def slopes(self) -> List[Fraction]:
        return [
            (b.rate - a.rate) / (b.memory - a.memory)
            for a, b in zip(self.breakpoints, self.breakpoints[1:])
        ]


def lower_envelope(points: Iterable[RatePoint]) -> PiecewiseLinearCurve:
    """Lower boundary of the convex hull of ``points``."""
    best = {}
    for p in points:
        if p.memory not in best or p.rate < best[p.memory].rate:
            best[p.memory] = p
    if not best:
        raise ValueError("lower_envelope needs at least one point")
    hull: List[RatePoint] = []
    for p in sorted(best.values()):
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return PiecewiseLinearCurve(tuple(hull))


def evaluate(curve: PiecewiseLinearCurve, m: Rational) -> Fraction:
    m = to_fraction(m)
    lo, hi = curve.domain
    if not lo <= m <= hi:
        raise ValueError(f"memory {m} outside curve domain [{lo}, {hi}]")
    ms = curve._ms
    i = bisect.bisect_left(ms, m)
    if ms[i] == m:
        return curve.breakpoints[i].rate
    a, b = curve.breakpoints[i - 1], curve.breakpoints[i]
    return a.rate + (b.rate - a.rate) * (m - a.memory) / (b.memory - a.memory)


def segment_lines(curve: PiecewiseLinearCurve) -> List[Line]:
    """Supporting line ``(intercept, slope)`` of each segment."""
    out = []
    for a, b in zip(curve.breakpoints, curve.breakpoints[1:]):
        slope = (b.rate - a.rate) / (b.memory - a.memory)
        out.append((a.rate - slope * a.memory, slope))
    return out


def upper_envelope_of_lines(
    lines: Sequence[Line], lo: Rational, hi: Rational
) -> Tuple[PiecewiseLinearCurve, List[int]]:
    """Pointwise maximum of ``lines`` over ``[lo, hi]``.

    Returns the curve and, for each of its segments, the index of the line
    that realizes the maximum there (lowest index on exact ties).
    """
    lo, hi = to_fraction(lo), to_fraction(hi)
    if not lines:
        raise ValueError("need at least one line")
    if hi < lo:
        raise ValueError("empty interval")

    def value(i: int, m: Fraction) -> Fraction:
        a, b = lines[i]
        return a + b * m

    def pick(m: Fraction) -> int:
        # maximal value at m, then maximal slope so it stays on top to the right
        return max(range(len(lines)), key=lambda i: (value(i, m), lines[i][1], -i))

    cur = pick(lo)
    pts = [RatePoint(lo, value(cur, lo))]
    active = [cur]
    x = lo
    while x < hi:
        a0, b0 = lines[cur]
        nxt, nx = None, hi
        for i, (a, b) in enumerate(lines):
            if b <= b0:
                continue
            cross = (a0 - a) / (b - b0)
            if cross < x:
                continue
            if cross < nx or (cross == nx and nxt is not None and b > lines[nxt][1]):
                nxt, nx = i, cross
        if nxt is None or nx >= hi:
            break
        if nx > x:
            pts.append(RatePoint(nx, value(cur, nx)))
            active.append(nxt)
        else:
            active[-1] = nxt
        cur, x = nxt, nx
    pts.append(RatePoint(hi, value(cur, hi)))
    if lo == hi:
        return PiecewiseLinearCurve((pts[0],)), []
    # merge collinear pieces produced by identical lines
    merged: List[RatePoint] = [pts[0]]
    seg_active: List[int] = []
    for idx, p in enumerate(pts[1:]):
        if len(merged) >= 2 and _cross(merged[-2], merged[-1], p) == 0:
            merged[-1] = p
        else:
            merged.append(p)
            seg_active.append(active[idx])
    return PiecewiseLinearCurve(tuple(merged)), seg_active


def weighted_sum(
    curves: Sequence[PiecewiseLinearCurve], weights: Sequence[Rational]
) -> PiecewiseLinearCurve:
    """``sum(w_i * c_i)`` over the common domain; weights must be non-negative."""
    if len(curves) != len(weights) or not curves:
        raise ValueError("need matching non-empty curves and weights")
    ws = [to_fraction(w) for w in weights]
    if any(w < 0 for w in ws):
        raise ValueError("weights must be non-negative")
    dom = curves[0].domain
    if any(c.domain != dom for c in curves):
        raise ValueError("curves must share a domain")
    ms = sorted({m for c in curves for m in c.memories})
    pts = [RatePoint(m, sum((w * evaluate(c, m) for c, w in zip(curves, ws)), Fraction(0))) for m in ms]
    return PiecewiseLinearCurve.through(pts)


@dataclass(frozen=True)
class RatioResult:
    ratio: Optional[Fraction]  # None when unbounded
    argmax: Fraction
    unbounded: bool = False


def _probe_points(
    curves: Sequence[PiecewiseLinearCurve],
    m_range: Optional[Tuple[Rational, Rational]],
    extra: Iterable[Rational],
) -> List[Fraction]:
    lo = max(c.domain[0] for c in curves)
    hi = min(c.domain[1] for c in curves)
    if m_range is not None:
        lo, hi = max(lo, to_fraction(m_range[0])), min(hi, to_fraction(m_range[1]))
    if hi < lo:
        raise ValueError("empty comparison range")
    ms = {lo, hi}
    for c in curves:
        ms.update(m for m in c.memories if lo <= m <= hi)
    ms.update(m for m in map(to_fraction, extra) if lo <= m <= hi)
    return sorted(ms)


def curve_max_ratio(
    upper: PiecewiseLinearCurve,
    lower: PiecewiseLinearCurve,
    m_range: Optional[Tuple[Rational, Rational]] = None,
    extra_points: Iterable[Rational] = (),
) -> RatioResult:
    """Maximum of ``upper/lower`` over ``m_range``.

    Between consecutive breakpoints of the union both curves are affine, so
    the ratio is monotone there and the maximum sits on a breakpoint.  Points
    where both curves vanish count as ratio 1.
    """
    best: Optional[RatioResult] = None
    for m in _probe_points((upper, lower), m_range, extra_points):
        u, l = evaluate(upper, m), evaluate(lower, m)
        if l == 0:
            if u == 0:
                q = Fraction(1)
            else:
                return RatioResult(None, m, unbounded=True)
        else:
            q = u / l
        if best is None or q > best.ratio:
            best = RatioResult(q, m)
    assert best is not None
    return best


def curve_max_difference(
    upper: PiecewiseLinearCurve,
    lower: PiecewiseLinearCurve,
    m_range: Optional[Tuple[Rational, Rational]] = None,
) -> Tuple[Fraction, Fraction]:
    """``max(upper - lower)`` and where it occurs (first location on ties)."""
    best: Optional[Tuple[Fraction, Fraction]] = None
    for m in _probe_points((upper, lower), m_range, ()):
        d = evaluate(upper, m) - evaluate(lower, m)
        if best is None or d > best[0]:
            best = (d, m)
    assert best is not None
    return best
