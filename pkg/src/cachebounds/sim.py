"""Bit-exact simulation of uncoded placement and XOR multicast delivery.

Each file is cut into ``C(K, r)`` equal subfiles, one per ``r``-subset of
users (colexicographic order fixes the bit layout).  User ``k`` caches every
subfile whose subset contains ``k``.  For a demand, one leader is picked per
distinct requested file, and the server sends, for each ``(r+1)``-subset
``S`` meeting the leader set, the XOR over ``k in S`` of subfile
``(d_k, S - {k})``.

Users decode by Gaussian elimination over GF(2), which checks decodability
from scratch rather than trusting the construction.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .rates import Demand, SystemParams, binom

Subset = Tuple[int, ...]
SubfileIndex = Tuple[int, Subset]  # (file, users holding it)

ENUMERATION_LIMIT = 10 ** 6


class DecodeError(RuntimeError):
    """A user could not recover its file; indicates a protocol bug."""


def colex_subsets(n_users: int, size: int) -> List[Subset]:
    """``size``-subsets of ``1..n_users`` in colexicographic order."""
    combos = itertools.combinations(range(1, n_users + 1), size)
    return sorted(combos, key=lambda c: c[::-1])


def integer_r(params: SystemParams) -> int:
    r = params.r
    if r.denominator != 1:
        raise NotImplementedError(
            f"simulation needs an integer memory ratio r = KM/N, got {r}")
    return int(r)


def default_file_bits(n_users: int, r: int) -> int:
    return 8 * binom(n_users, r)


@dataclass(frozen=True)
class FileLibrary:
    files: Tuple[bytes, ...]
    n_bits: int

    def __post_init__(self) -> None:
        if self.n_bits <= 0 or self.n_bits % 8:
            raise ValueError(f"file size must be a positive multiple of 8 bits, got {self.n_bits}")
        if not self.files:
            raise ValueError("library needs at least one file")
        for f in self.files:
            if len(f) * 8 != self.n_bits:
                raise ValueError("all files must be exactly n_bits long")

    @classmethod
    def random(cls, n_files: int, n_bits: int, seed: int = 0) -> "FileLibrary":
        rng = random.Random(seed)
        return cls(tuple(rng.getrandbits(n_bits).to_bytes(n_bits // 8, "big")
                         for _ in range(n_files)), n_bits)

    @property
    def n_files(self) -> int:
        return len(self.files)

    def as_int(self, file: int) -> int:
        return int.from_bytes(self.files[file - 1], "big")


@dataclass
class CacheContent:
    owner: int
    sub_bits: int
    entries: Dict[SubfileIndex, int] = field(default_factory=dict)

    @property
    def stored_bits(self) -> int:
        return self.sub_bits * len(self.entries)


@dataclass(frozen=True)
class MulticastMessage:
    subset: Subset
    payload: int
    n_bits: int

    def hex(self) -> str:
        return format(self.payload, "0{}x".format(-(-self.n_bits // 4)))

    def line(self) -> str:
        return "{" + ",".join(map(str, self.subset)) + "}\t" + self.hex()


def _layout(library: FileLibrary, params: SystemParams) -> Tuple[int, int, Dict[Subset, int]]:
    if library.n_files != params.n_files:
        raise ValueError(f"library has {library.n_files} files, params say {params.n_files}")
    r = integer_r(params)
    n_sub = binom(params.n_users, r)
    if library.n_bits % n_sub:
        raise ValueError(f"file size {library.n_bits} is not divisible by C(K, r) = {n_sub}")
    order = {t: i for i, t in enumerate(colex_subsets(params.n_users, r))}
    return r, library.n_bits // n_sub, order


def subfile(library: FileLibrary, params: SystemParams, file: int, subset: Subset) -> int:
    _, sub_bits, order = _layout(library, params)
    return _slice(library.as_int(file), library.n_bits, sub_bits, order[subset])


def _slice(value: int, n_bits: int, sub_bits: int, pos: int) -> int:
    return (value >> (n_bits - (pos + 1) * sub_bits)) & ((1 << sub_bits) - 1)


def place(library: FileLibrary, params: SystemParams) -> List[CacheContent]:
    r, sub_bits, order = _layout(library, params)
    caches = [CacheContent(k, sub_bits) for k in range(1, params.n_users + 1)]
    for n in range(1, params.n_files + 1):
        value = library.as_int(n)
        for subset, pos in order.items():
            piece = _slice(value, library.n_bits, sub_bits, pos)
            for k in subset:
                caches[k - 1].entries[(n, subset)] = piece
    return caches


def leaders(demand: Demand) -> List[int]:
    """Lowest-indexed user for each distinct requested file."""
    seen, out = set(), []
    for k, d in enumerate(demand.requests, start=1):
        if d not in seen:
            seen.add(d)
            out.append(k)
    return out


def _as_demand(demand, params: SystemParams) -> Demand:
    if not isinstance(demand, Demand):
        demand = Demand(tuple(demand), params.n_files)
    if len(demand) != params.n_users or demand.n_files != params.n_files:
        raise ValueError("demand does not match the system parameters")
    return demand


def deliver(library: FileLibrary, caches: Sequence[CacheContent], demand,
            params: SystemParams) -> List[MulticastMessage]:
    r, sub_bits, order = _layout(library, params)
    demand = _as_demand(demand, params)
    if len(caches) != params.n_users or any(c.sub_bits != sub_bits for c in caches):
        raise ValueError("caches were not placed with these parameters")
    lead = set(leaders(demand))
    files = {n: library.as_int(n) for n in set(demand.requests)}
    out = []
    for subset in colex_subsets(params.n_users, r + 1):
        if lead.isdisjoint(subset):
            continue
        payload = 0
        for k in subset:
            rest = tuple(u for u in subset if u != k)
            payload ^= _slice(files[demand.requests[k - 1]], library.n_bits, sub_bits, order[rest])
        out.append(MulticastMessage(subset, payload, sub_bits))
    return out


def _solve_gf2(rows: Iterable[Tuple[int, int]]) -> Dict[int, Tuple[int, int]]:
    """Reduced row echelon form over GF(2), keyed by pivot column.

    Rows are ``(mask, rhs)``: ``mask`` bit ``i`` set means unknown ``i``
    appears; ``rhs`` is a multi-bit value XORed alongside.
    """
    pivots: Dict[int, Tuple[int, int]] = {}
    for mask, rhs in rows:
        for col, (pm, pr) in pivots.items():
            if mask >> col & 1:
                mask ^= pm
                rhs ^= pr
        if mask == 0:
            if rhs:
                raise DecodeError("inconsistent multicast equations")
            continue
        col = mask.bit_length() - 1
        for c, (pm, pr) in list(pivots.items()):
            if pm >> col & 1:
                pivots[c] = (pm ^ mask, pr ^ rhs)
        pivots[col] = (mask, rhs)
    return pivots


def decode(user: int, cache: CacheContent, messages: Sequence[MulticastMessage],
           demand, params: SystemParams) -> bytes:
    """Recover the file requested by ``user`` from its cache and the broadcast."""
    demand = _as_demand(demand, params)
    if cache.owner != user:
        raise ValueError(f"cache belongs to user {cache.owner}, not {user}")
    r = integer_r(params)
    subsets = colex_subsets(params.n_users, r)
    sub_bits = cache.sub_bits
    unknown: Dict[SubfileIndex, int] = {}
    rows = []
    for msg in messages:
        mask, rhs = 0, msg.payload
        for k in msg.subset:
            key = (demand.requests[k - 1], tuple(u for u in msg.subset if u != k))
            if key in cache.entries:
                rhs ^= cache.entries[key]
            else:
                mask ^= 1 << unknown.setdefault(key, len(unknown))
        rows.append((mask, rhs))
    pivots = _solve_gf2(rows)

    want = demand.requests[user - 1]
    value = 0
    for subset in subsets:
        key = (want, subset)
        if key in cache.entries:
            piece = cache.entries[key]
        else:
            idx = unknown.get(key)
            row = pivots.get(idx) if idx is not None else None
            if row is None or row[0] != 1 << idx:
                raise DecodeError(f"user {user} cannot recover subfile {key}")
            piece = row[1]
        value = (value << sub_bits) | piece
    n_bits = sub_bits * len(subsets)
    return value.to_bytes(n_bits // 8, "big")


@dataclass
class DemandOutcome:
    demand: Demand
    messages: List[MulticastMessage]
    bits_sent: int
    all_decoded: bool


def simulate_demand(library: FileLibrary, caches: Sequence[CacheContent], demand,
                    params: SystemParams) -> DemandOutcome:
    demand = _as_demand(demand, params)
    msgs = deliver(library, caches, demand, params)
    ok = all(
        decode(k, caches[k - 1], msgs, demand, params) == library.files[demand.requests[k - 1] - 1]
        for k in range(1, params.n_users + 1)
    )
    return DemandOutcome(demand, msgs, sum(m.n_bits for m in msgs), ok)


def all_demands(n_files: int, n_users: int) -> Iterator[Tuple[int, ...]]:
    return itertools.product(range(1, n_files + 1), repeat=n_users)


@dataclass
class SimulationResult:
    peak: Fraction
    average: Fraction
    n_demands: int
    decode_failures: List[Tuple[Tuple[int, ...], int]]
    transcript: List[str] = field(default_factory=list)


def simulate(params: SystemParams, n_bits: Optional[int] = None, seed: int = 0,
             samples: Optional[int] = None, keep_transcript: bool = False) -> SimulationResult:
    """Run every demand (or ``samples`` random ones) through placement, delivery and decoding."""
    r = integer_r(params)
    n_bits = n_bits or default_file_bits(params.n_users, r)
    n, k = params.n_files, params.n_users
    if samples is None:
        if n ** k > ENUMERATION_LIMIT:
            raise ValueError(f"N^K = {n ** k} demands exceeds {ENUMERATION_LIMIT}; pass samples")
        demands: Iterable[Tuple[int, ...]] = all_demands(n, k)
    else:
        rng = random.Random(seed + 1)
        demands = [tuple(rng.randint(1, n) for _ in range(k)) for _ in range(samples)]
    library = FileLibrary.random(n, n_bits, seed)
    caches = place(library, params)
    peak, total, count, failures, transcript = 0, 0, 0, [], []
    for d in demands:
        demand = Demand(d, n)
        msgs = deliver(library, caches, demand, params)
        sent = sum(m.n_bits for m in msgs)
        for user in range(1, k + 1):
            try:
                got = decode(user, caches[user - 1], msgs, demand, params)
            except DecodeError:
                got = None
            if got != library.files[d[user - 1] - 1]:
                failures.append((d, user))
        if keep_transcript:
            transcript.append("# demand " + ",".join(map(str, d)))
            transcript.extend(m.line() for m in msgs)
        peak = max(peak, sent)
        total += sent
        count += 1
    return SimulationResult(Fraction(peak, n_bits), Fraction(total, n_bits * count),
                            count, failures, transcript)


def measured_rates(params: SystemParams, n_bits: Optional[int] = None, seed: int = 0,
                   samples: Optional[int] = None) -> Tuple[Fraction, Fraction]:
    """Measured ``(peak, average)`` load in files; raises if any user fails to decode."""
    res = simulate(params, n_bits, seed, samples)
    if res.decode_failures:
        d, user = res.decode_failures[0]
        raise DecodeError(f"user {user} failed to decode demand {d}")
    return res.peak, res.average
