"""Information-theoretic lower bounds on the peak and average rates.

Every bound here is a line ``R >= intercept + slope * M``, tagged with the
family and parameters that produced it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Set, Tuple, Union

from .envelope import (
    PiecewiseLinearCurve,
    evaluate,
    lower_envelope,
    segment_lines,
    upper_envelope_of_lines,
    weighted_sum,
)
from .rates import DemandType, Rational, RatePoint, SystemParams, demand_types, to_fraction


@dataclass(frozen=True)
class Thm2:
    """Enhanced-cutset family, indexed by ``s`` users, weight ``alpha``, pivot ``ell``."""

    s: int
    alpha: Fraction
    ell: int

    def __str__(self) -> str:
        return f"Thm2(s={self.s}, alpha={self.alpha}, ell={self.ell})"


@dataclass(frozen=True)
class Thm4:
    """Demand-splitting family; ``branch`` is ``condition-holds`` or ``otherwise``."""

    n: int
    branch: str
    alpha: int
    beta: int

    def __str__(self) -> str:
        return f"Thm4(n={self.n}, {self.branch}, alpha={self.alpha}, beta={self.beta})"


@dataclass(frozen=True)
class TwoUserAve:
    which: str  # "single-file" or "pair"

    def __str__(self) -> str:
        return f"TwoUserAve({self.which})"


@dataclass(frozen=True)
class Trivial:
    def __str__(self) -> str:
        return "Trivial(R>=0)"


Provenance = Union[Thm2, Thm4, TwoUserAve, Trivial]


@dataclass(frozen=True)
class ConverseLine:
    intercept: Fraction
    slope: Fraction
    provenance: Provenance

    def __call__(self, m: Rational) -> Fraction:
        return self.intercept + self.slope * to_fraction(m)

    @property
    def coefficients(self) -> Tuple[Fraction, Fraction]:
        return self.intercept, self.slope


ZERO_LINE = ConverseLine(Fraction(0), Fraction(0), Trivial())


def _ell_condition(n_files: int, s: int, alpha: Fraction, ell: int) -> bool:
    return Fraction(s * (s - 1) - ell * (ell - 1), 2) + alpha * s <= (n_files - ell + 1) * ell


def _check_alpha(alpha: Rational) -> Fraction:
    a = to_fraction(alpha)
    if not 0 <= a <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {a}")
    return a


def _min_ell(n_files: int, s: int, alpha: Fraction) -> int:
    for ell in range(1, s + 1):
        if _ell_condition(n_files, s, alpha, ell):
            return ell
    raise AssertionError("ell = s always satisfies the condition")  # pragma: no cover


def _thm2(n_files: int, s: int, alpha: Fraction) -> ConverseLine:
    ell = _min_ell(n_files, s, alpha)
    slope = -Fraction(s * (s - 1) - ell * (ell - 1) + 2 * alpha * s, 2 * (n_files - ell + 1))
    return ConverseLine(s - 1 + alpha, slope, Thm2(s, alpha, ell))


def _check_s(s: int, s_max: int) -> None:
    if not 1 <= s <= s_max:
        raise ValueError(f"s must lie in 1..{s_max}, got {s}")


def thm2_min_ell(params: SystemParams, s: int, alpha: Rational) -> int:
    """Smallest ``ell`` in ``1..s`` satisfying the pivot condition."""
    _check_s(s, params.j)
    return _min_ell(params.n_files, s, _check_alpha(alpha))


def thm2_line(params: SystemParams, s: int, alpha: Rational) -> ConverseLine:
    _check_s(s, params.j)
    return _thm2(params.n_files, s, _check_alpha(alpha))


@lru_cache(maxsize=4096)
def _corners(n_files: int, j: int) -> Tuple[RatePoint, ...]:
    pts = {RatePoint(Fraction(0), Fraction(j))}
    for s in range(1, j + 1):
        for ell in range(1, s + 1):
            pts.add(RatePoint(Fraction(n_files - ell + 1, s),
                              Fraction(s - 1, 2) + Fraction(ell * (ell - 1), 2 * s)))
    return tuple(sorted(pts))


def s_lower_corners(params: SystemParams) -> Set[RatePoint]:
    """Corner points whose lower convex envelope is the enhanced-cutset region."""
    return set(_corners(params.n_files, params.j))


@lru_cache(maxsize=4096)
def corner_envelope(n_files: int, j: int) -> PiecewiseLinearCurve:
    """Lower convex envelope of the corner set for ``n_files`` files and ``j`` users."""
    return lower_envelope(_corners(n_files, j))


def envelope_lines(n_files: int, j: int) -> List[ConverseLine]:
    """Each envelope segment, re-expressed as the enhanced-cutset line it lies on.

    A segment with intercept ``A`` is the line for ``s = ceil(A)`` and
    ``alpha = A - s + 1``; the identity is asserted, not assumed.
    """
    out = []
    for a, b in segment_lines(corner_envelope(n_files, j)):
        s = math.ceil(a)
        line = _thm2(n_files, s, a - s + 1)
        if line.coefficients != (a, b):
            raise AssertionError(f"envelope segment {a} + {b} M is not an enhanced-cutset line")
        out.append(line)
    return out


def thm4_range(params: SystemParams) -> range:
    k, n = params.n_users, params.n_files
    return range(max(1, k - n + 1), k)


def thm4_line(params: SystemParams, n: int) -> ConverseLine:
    k, big_n = params.n_users, params.n_files
    if n not in thm4_range(params):
        raise ValueError(f"n must lie in {max(1, k - big_n + 1)}..{k - 1}, got {n}")
    alpha = (big_n - 1) // (k - n)
    beta = big_n - alpha * (k - n)
    intercept = Fraction(2 * k - n + 1, n + 1)
    if 2 * beta + alpha * (k - 2 * n - 1) <= 0:
        slope = -Fraction(k * (k + 1), n * (n + 1) * big_n)
        branch = "condition-holds"
    else:
        slope = -Fraction(2 * k * (k - n), n * (n + 1) * (big_n - beta))
        branch = "otherwise"
    return ConverseLine(intercept, slope, Thm4(n, branch, alpha, beta))


def peak_converse_lines(n_files: int, n_users: int) -> List[ConverseLine]:
    """Every line that enters the best peak converse, plus ``R >= 0``."""
    params = SystemParams(n_files, n_users)
    lines = envelope_lines(n_files, params.j)
    lines += [thm4_line(params, n) for n in thm4_range(params)]
    lines.append(ZERO_LINE)
    return lines


@lru_cache(maxsize=2048)
def _best_peak(n_files: int, n_users: int) -> Tuple[PiecewiseLinearCurve, Tuple[ConverseLine, ...]]:
    lines = peak_converse_lines(n_files, n_users)
    curve, active = upper_envelope_of_lines([l.coefficients for l in lines], 0, n_files)
    return curve, tuple(lines[i] for i in active)


def best_peak_converse_curve(n_files: int, n_users: int) -> PiecewiseLinearCurve:
    return _best_peak(n_files, n_users)[0]


def thm4_curve(n_files: int, n_users: int) -> PiecewiseLinearCurve:
    """Max over the demand-splitting lines and zero."""
    params = SystemParams(n_files, n_users)
    lines = [thm4_line(params, n).coefficients for n in thm4_range(params)]
    lines.append(ZERO_LINE.coefficients)
    return upper_envelope_of_lines(lines, 0, n_files)[0]


def best_peak_converse(params: SystemParams) -> Fraction:
    """Best lower bound on the peak rate at ``params.memory``."""
    m = params.memory
    vals = [evaluate(corner_envelope(params.n_files, params.j), m), Fraction(0)]
    vals += [thm4_line(params, n)(m) for n in thm4_range(params)]
    return max(vals)


def best_peak_provenance(params: SystemParams) -> ConverseLine:
    """A line attaining :func:`best_peak_converse` at ``params.memory``."""
    m = params.memory
    target = best_peak_converse(params)
    for line in peak_converse_lines(params.n_files, params.n_users):
        if line(m) == target:
            return line
    raise AssertionError("no line attains the best converse")  # pragma: no cover


def per_type_converse(params: SystemParams, t: DemandType, s: int, alpha: Rational) -> ConverseLine:
    """Enhanced-cutset line for the users of one demand type (``s <= N_e``)."""
    if t.n_files != params.n_files or t.n_users != params.n_users:
        raise ValueError("demand type does not match the system")
    _check_s(s, t.n_distinct)
    return _thm2(params.n_files, s, _check_alpha(alpha))


def per_type_envelope(params: SystemParams, t: DemandType) -> PiecewiseLinearCurve:
    """Pointwise best per-type bound: the corner envelope with ``J = N_e``."""
    return corner_envelope(params.n_files, t.n_distinct)


@lru_cache(maxsize=2048)
def ave_converse_curve(n_files: int, n_users: int) -> PiecewiseLinearCurve:
    """Average-rate converse: type-probability mixture of per-type envelopes."""
    by_ne: Dict[int, Fraction] = {}
    for t, p in demand_types(n_files, n_users):
        by_ne[t.n_distinct] = by_ne.get(t.n_distinct, Fraction(0)) + p
    keys = sorted(by_ne)
    return weighted_sum([corner_envelope(n_files, k) for k in keys], [by_ne[k] for k in keys])


def ave_converse(params: SystemParams) -> Fraction:
    return evaluate(ave_converse_curve(params.n_files, params.n_users), params.memory)


def two_user_lines(n_files: int) -> List[ConverseLine]:
    n = n_files
    return [
        ConverseLine(Fraction(1), Fraction(-1, n), TwoUserAve("single-file")),
        ConverseLine(Fraction(2 * n - 1, n), -Fraction(3 * n - 2, n * n), TwoUserAve("pair")),
    ]


def two_user_ave_converse(params: SystemParams) -> Fraction:
    if params.n_users != 2:
        raise ValueError(f"two-user bound needs K = 2, got K = {params.n_users}")
    if params.n_files < 2:
        raise ValueError("two-user bound needs N >= 2")
    return max(line(params.memory) for line in two_user_lines(params.n_files))


def two_user_ave_curve(n_files: int) -> PiecewiseLinearCurve:
    lines = [l.coefficients for l in two_user_lines(n_files)]
    return upper_envelope_of_lines(lines, 0, n_files)[0]


def thm4_condition_theta_form(n_files: int, n_users: int, n: int) -> bool:
    """The branch condition written through ``theta = K beta + alpha (K-n)(K-n-1)/2``."""
    k = n_users
    alpha = (n_files - 1) // (k - n)
    beta = n_files - alpha * (k - n)
    return 2 * k * beta + alpha * (k - n) * (k - n - 1) <= n * (n + 1) * alpha
