from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cachebounds import sim
from cachebounds.rates import Demand, SystemParams, binom, r_u_ave_integer, r_u_integer


def test_colex_order():
    assert sim.colex_subsets(4, 2) == [(1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4)]
    assert sim.colex_subsets(3, 0) == [()]


def test_leaders_pick_first_requester():
    assert sim.leaders(Demand((2, 2, 1, 2, 3), 3)) == [1, 3, 5]


def test_placement_respects_memory_budget():
    for n, k, r in [(3, 3, 1), (4, 5, 2), (2, 4, 3)]:
        p = SystemParams.from_r(n, k, r)
        bits = sim.default_file_bits(k, r)
        lib = sim.FileLibrary.random(n, bits, seed=1)
        for cache in sim.place(lib, p):
            assert cache.stored_bits == p.memory * bits
            assert all(cache.owner in subset for _, subset in cache.entries)


def test_subfiles_reassemble_file():
    p = SystemParams.from_r(2, 4, 2)
    lib = sim.FileLibrary.random(2, 48, seed=3)
    sub_bits = 48 // binom(4, 2)
    value = 0
    for subset in sim.colex_subsets(4, 2):
        value = (value << sub_bits) | sim.subfile(lib, p, 1, subset)
    assert value.to_bytes(6, "big") == lib.files[0]


@given(n=st.integers(1, 4), k=st.integers(1, 5), data=st.data())
@settings(max_examples=60, deadline=None)
def test_random_demand_round_trip(n, k, data):
    r = data.draw(st.integers(0, k))
    d = tuple(data.draw(st.lists(st.integers(1, n), min_size=k, max_size=k)))
    p = SystemParams.from_r(n, k, r)
    lib = sim.FileLibrary.random(n, sim.default_file_bits(k, r), seed=data.draw(st.integers(0, 99)))
    caches = sim.place(lib, p)
    out = sim.simulate_demand(lib, caches, d, p)
    assert out.all_decoded
    distinct = len(set(d))
    want = binom(k, r + 1) - binom(k - distinct, r + 1)
    assert len(out.messages) == want


def test_exhaustive_rates_small():
    for n, k in [(2, 2), (3, 3), (2, 4), (4, 2)]:
        for r in range(0, k + 1):
            p = SystemParams.from_r(n, k, r)
            res = sim.simulate(p, seed=5)
            assert not res.decode_failures
            assert res.peak == r_u_integer(p, r)
            assert res.average == r_u_ave_integer(p, r)


def test_zero_traffic_at_full_memory():
    res = sim.simulate(SystemParams.from_r(3, 3, 3))
    assert res.peak == res.average == 0 and not res.decode_failures


def test_tampered_broadcast_is_detected():
    p = SystemParams.from_r(3, 3, 1)
    lib = sim.FileLibrary.random(3, 24, seed=0)
    caches = sim.place(lib, p)
    d = (1, 2, 3)
    msgs = sim.deliver(lib, caches, d, p)
    bad = [sim.MulticastMessage(msgs[0].subset, msgs[0].payload ^ 1, msgs[0].n_bits)] + msgs[1:]
    got = [sim.decode(u, caches[u - 1], bad, d, p) for u in msgs[0].subset]
    assert any(g != lib.files[d[u - 1] - 1] for g, u in zip(got, msgs[0].subset))
    # dropping a message leaves some user short of a subfile
    with pytest.raises(sim.DecodeError):
        for u in range(1, 4):
            sim.decode(u, caches[u - 1], msgs[1:], d, p)


def test_gf2_solver_against_brute_force():
    # random small systems: compare the determined unknowns with the row span
    rng = random.Random(11)
    for _ in range(200):
        n_unk = rng.randint(1, 5)
        secret = [rng.getrandbits(4) for _ in range(n_unk)]
        rows = []
        for _ in range(rng.randint(0, 6)):
            mask = rng.getrandbits(n_unk)
            rhs = 0
            for i in range(n_unk):
                if mask >> i & 1:
                    rhs ^= secret[i]
            rows.append((mask, rhs))
        piv = sim._solve_gf2(rows)
        # unknown i is determined iff e_i lies in the row span
        span = {0}
        for mask, _ in rows:
            span |= {x ^ mask for x in span}
        for i in range(n_unk):
            determined = (1 << i) in span
            row = piv.get(i)
            assert determined == (row is not None and row[0] == 1 << i)
            if determined:
                assert row[1] == secret[i]


def test_inconsistent_system_raises():
    with pytest.raises(sim.DecodeError):
        sim._solve_gf2([(1, 5), (1, 6)])


def test_transcript_deterministic_and_formatted():
    p = SystemParams.from_r(2, 2, 1)
    a = sim.simulate(p, seed=7, keep_transcript=True)
    b = sim.simulate(p, seed=7, keep_transcript=True)
    assert a.transcript == b.transcript
    assert a.transcript[0] == "# demand 1,1"
    subset, payload = a.transcript[1].split("\t")
    assert subset == "{1,2}" and len(payload) == 2  # 8-bit subfiles


def test_sampled_demands():
    p = SystemParams.from_r(6, 8, 2)
    res = sim.simulate(p, samples=20, seed=2)
    assert res.n_demands == 20 and not res.decode_failures
    assert res.peak <= r_u_integer(p, 2)


def test_guards():
    with pytest.raises(NotImplementedError):
        sim.simulate(SystemParams(2, 2, Fraction(1, 2)))
    with pytest.raises(ValueError):
        sim.simulate(SystemParams.from_r(10, 7, 1))
    with pytest.raises(ValueError):
        sim.FileLibrary((b"ab",), 8)
    p = SystemParams.from_r(3, 3, 1)
    lib = sim.FileLibrary.random(3, 16, 0)
    with pytest.raises(ValueError):
        sim.place(lib, p)  # 16 bits do not split into 3 subfiles


def test_measured_rates_helper():
    p = SystemParams.from_r(3, 2, 1)
    assert sim.measured_rates(p) == (r_u_integer(p, 1), r_u_ave_integer(p, 1))
