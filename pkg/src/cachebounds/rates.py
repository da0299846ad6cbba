"""Achievable rates of uncoded-prefetching coded caching.

All quantities are exact ``Fraction`` values.  Memory ``M`` is measured in
files, and the normalized cache budget is ``r = K*M/N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Sequence, Tuple, Union

Rational = Union[int, Fraction, str]


def to_fraction(value: Rational) -> Fraction:
    """Parse ints, Fractions and strings like ``"3/2"`` or ``"1.25"``."""
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass a string or Fraction")
    return Fraction(value)


def binom(a: int, b: int) -> int:
    """Binomial coefficient with ``C(a, b) = 0`` whenever ``a < b`` or ``b < 0``."""
    if b < 0 or a < b or a < 0:
        return 0
    return math.comb(a, b)


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind, via the triangular recurrence."""
    if n == k:
        return 1
    if k <= 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


def _warm_stirling(n: int) -> None:
    # fill the memo bottom-up so deep rows do not hit the recursion limit
    for i in range(n + 1):
        for k in range(i + 1):
            stirling2(i, k)


@dataclass(frozen=True)
class SystemParams:
    """A caching system: ``n_files`` files, ``n_users`` users, cache ``memory`` files each."""

    n_files: int
    n_users: int
    memory: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if not isinstance(self.n_files, int) or self.n_files < 1:
            raise ValueError(f"n_files must be a positive integer, got {self.n_files!r}")
        if not isinstance(self.n_users, int) or self.n_users < 1:
            raise ValueError(f"n_users must be a positive integer, got {self.n_users!r}")
        m = to_fraction(self.memory)
        if not 0 <= m <= self.n_files:
            raise ValueError(f"memory must lie in [0, {self.n_files}], got {m}")
        object.__setattr__(self, "memory", m)

    @classmethod
    def from_r(cls, n_files: int, n_users: int, r: Rational) -> "SystemParams":
        r = to_fraction(r)
        if not 0 <= r <= n_users:
            raise ValueError(f"r must lie in [0, {n_users}], got {r}")
        return cls(n_files, n_users, r * n_files / n_users)

    @property
    def r(self) -> Fraction:
        return self.n_users * self.memory / self.n_files

    @property
    def j(self) -> int:
        return min(self.n_files, self.n_users)

    def with_memory(self, memory: Rational) -> "SystemParams":
        return SystemParams(self.n_files, self.n_users, to_fraction(memory))


@dataclass(frozen=True)
class Demand:
    requests: Tuple[int, ...]
    n_files: int

    def __post_init__(self) -> None:
        req = tuple(self.requests)
        if not req:
            raise ValueError("a demand needs at least one user")
        bad = [d for d in req if not 1 <= d <= self.n_files]
        if bad:
            raise ValueError(f"requests {bad} out of range 1..{self.n_files}")
        object.__setattr__(self, "requests", req)

    def __len__(self) -> int:
        return len(self.requests)

    def statistics(self) -> "DemandType":
        counts = [0] * self.n_files
        for d in self.requests:
            counts[d - 1] += 1
        return DemandType(tuple(sorted(counts, reverse=True)))


@dataclass(frozen=True)
class DemandType:
    """Sorted request-multiplicity profile of a demand (length ``N``)."""

    statistics: Tuple[int, ...]

    def __post_init__(self) -> None:
        s = tuple(self.statistics)
        if any(x < 0 for x in s) or list(s) != sorted(s, reverse=True):
            raise ValueError(f"statistics must be non-increasing and non-negative: {s}")
        if sum(s) < 1:
            raise ValueError("statistics must sum to a positive number of users")
        object.__setattr__(self, "statistics", s)

    @property
    def n_users(self) -> int:
        return sum(self.statistics)

    @property
    def n_files(self) -> int:
        return len(self.statistics)

    @property
    def n_distinct(self) -> int:
        return sum(1 for x in self.statistics if x)

    def count(self) -> int:
        """Number of demands in ``{1..N}^K`` having these statistics."""
        parts = [x for x in self.statistics if x]
        ways_users = math.factorial(self.n_users)
        for x in parts:
            ways_users //= math.factorial(x)
        # assign distinct files to the parts; equal parts are interchangeable
        ways_files = math.perm(self.n_files, len(parts))
        for mult in _multiplicities(parts):
            ways_files //= math.factorial(mult)
        return ways_users * ways_files


@dataclass(frozen=True, order=True)
class RatePoint:
    memory: Fraction
    rate: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "memory", to_fraction(self.memory))
        object.__setattr__(self, "rate", to_fraction(self.rate))


def _multiplicities(parts: Sequence[int]) -> List[int]:
    out: Dict[int, int] = {}
    for p in parts:
        out[p] = out.get(p, 0) + 1
    return list(out.values())


def _partitions(n: int, max_parts: int, max_part: int | None = None) -> Iterator[Tuple[int, ...]]:
    if max_part is None:
        max_part = n
    if n == 0:
        yield ()
        return
    if max_parts == 0:
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in _partitions(n - first, max_parts - 1, first):
            yield (first,) + rest


def demand_types(n_files: int, n_users: int) -> List[Tuple[DemandType, Fraction]]:
    """All demand types with their probabilities under uniform demands."""
    total = n_files ** n_users
    out = []
    for part in _partitions(n_users, min(n_files, n_users)):
        t = DemandType(part + (0,) * (n_files - len(part)))
        out.append((t, Fraction(t.count(), total)))
    return out


def n_e(demand: Union[Demand, Sequence[int]]) -> int:
    """Number of distinct files requested."""
    reqs = demand.requests if isinstance(demand, Demand) else demand
    return len(set(reqs))


def demand_rate(n_users: int, n_eff: int, r: int) -> Fraction:
    """Delivery load of one demand with ``n_eff`` distinct files, at integer ``r``."""
    return Fraction(binom(n_users, r + 1) - binom(n_users - n_eff, r + 1), binom(n_users, r))


def _check_integer_r(n_users: int, r: int) -> None:
    if isinstance(r, bool) or not isinstance(r, int):
        raise TypeError(f"r must be an int, got {type(r).__name__}")
    if not 0 <= r <= n_users:
        raise ValueError(f"r must lie in 0..{n_users}, got {r}")


def r_u_integer(params: SystemParams, r: int) -> Fraction:
    """Peak rate at an integer memory ratio ``r``."""
    _check_integer_r(params.n_users, r)
    return demand_rate(params.n_users, params.j, r)


@lru_cache(maxsize=4096)
def _distinct_weights(n_files: int, n_users: int) -> Tuple[int, ...]:
    # weight[t-1] = number of demands with exactly t distinct files
    _warm_stirling(n_users)
    return tuple(
        math.perm(n_files, t) * stirling2(n_users, t)
        for t in range(1, min(n_files, n_users) + 1)
    )


def n_e_distribution(params: SystemParams) -> Dict[int, Fraction]:
    """Law of the number of distinct requests for a uniformly random demand."""
    total = params.n_files ** params.n_users
    weights = _distinct_weights(params.n_files, params.n_users)
    return {t: Fraction(w, total) for t, w in enumerate(weights, start=1)}


@lru_cache(maxsize=4096)
def average_rates_integer(n_files: int, n_users: int) -> Tuple[Fraction, ...]:
    """Average rate at every integer ``r = 0..K``.

    Uses ``E[C(K-N_e, r+1)]`` computed as one integer sum over the
    distinct-count weights, so only one division happens per ``r``.
    """
    k = n_users
    total = n_files ** k
    weights = _distinct_weights(n_files, k)
    out = []
    for r in range(k + 1):
        tail = sum(w * binom(k - t, r + 1) for t, w in enumerate(weights, start=1))
        out.append(Fraction(binom(k, r + 1) * total - tail, total * binom(k, r)))
    return tuple(out)


def r_u_ave_integer(params: SystemParams, r: int) -> Fraction:
    _check_integer_r(params.n_users, r)
    return average_rates_integer(params.n_files, params.n_users)[r]


def _interpolate(f, params: SystemParams) -> Fraction:
    r = params.r
    lo = math.floor(r)
    if r == lo:
        return f(params, lo)
    hi = lo + 1
    return (r - lo) * f(params, hi) + (hi - r) * f(params, lo)


def r_u(params: SystemParams) -> Fraction:
    """Peak rate at any memory, by linear interpolation between integer ``r``."""
    return _interpolate(r_u_integer, params)


def r_u_ave(params: SystemParams) -> Fraction:
    """Average rate under uniform demands, interpolated between integer ``r``."""
    return _interpolate(r_u_ave_integer, params)


def r_dec(params: SystemParams, n_eff: int | None = None) -> Fraction:
    """Decentralized-prefetching rate ``(N-M)/M * (1 - (1-M/N)^J)``.

    ``n_eff`` replaces the exponent ``J = min(N, K)``; pass a type's number
    of distinct requests to get the per-type bound.
    """
    j = params.j if n_eff is None else n_eff
    m, n = params.memory, params.n_files
    if m == 0:
        return Fraction(j)
    return (n - m) / m * (1 - (1 - m / n) ** j)


def convexity_deficit(params: SystemParams, r: int, which: str = "peak") -> Fraction:
    """Second difference ``2 f(r) - f(r-1) - f(r+1)`` of the integer-point rates."""
    if not 1 <= r <= params.n_users - 1:
        raise ValueError(f"r must lie in 1..{params.n_users - 1}, got {r}")
    if which == "peak":
        f = r_u_integer
    elif which == "average":
        f = r_u_ave_integer
    else:
        raise ValueError(f"which must be 'peak' or 'average', got {which!r}")
    return 2 * f(params, r) - f(params, r - 1) - f(params, r + 1)


def memory_at(n_files: int, n_users: int, r: int) -> Fraction:
    return Fraction(r * n_files, n_users)
