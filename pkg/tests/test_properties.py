"""Invariants checked over generated inputs."""

import math
import random

import pytest
from hypothesis import assume, given, settings, strategies as st

from builders import random_snapshot
from dposmeter.attribution import AllocationMode, GeneratorCounts, reallocate
from dposmeter.election import PowerTable, rank, resolve_net_vests, stakeholder_power, witness_power
from dposmeter.errors import DomainError
from dposmeter.ledger import (
    MAX_WITNESS_VOTES,
    Account,
    LedgerSnapshot,
    OpKind,
    OperationRecord,
    apply_operation,
)
from dposmeter.metrics import Distribution, normalize, shannon_entropy

weights = st.lists(st.floats(0, 1e12, allow_nan=False, allow_infinity=False), min_size=1, max_size=40)
positive = st.floats(1e-6, 1e12, allow_nan=False, allow_infinity=False)
scales = st.sampled_from([2.0 ** k for k in range(-20, 21)])


def dist(values):
    return Distribution.from_values("p", values)


@given(weights, st.data())
def test_entropy_bounds(values, data):
    assume(sum(values) > 0)
    d = dist(values)
    r = data.draw(st.integers(1, len(values)))
    assume(math.fsum(d.amounts[:r]) > 0)
    h = shannon_entropy(d, r)
    assert 0.0 <= h <= math.log2(r)


@given(st.integers(1, 200), positive)
def test_uniform_attains_max(r, v):
    assert abs(shannon_entropy(dist([v] * r), r) - math.log2(r)) <= 1e-12


@given(st.lists(positive, min_size=1, max_size=40), st.floats(1e-6, 1e6), st.data())
def test_entropy_scale_invariant(values, c, data):
    r = data.draw(st.integers(1, len(values)))
    a = shannon_entropy(dist(values), r)
    b = shannon_entropy(dist([c * v for v in values]), r)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


@given(st.lists(positive, min_size=2, max_size=30), st.randoms(use_true_random=False), st.data())
def test_entropy_ignores_tail_order(values, rnd, data):
    values = sorted(values, reverse=True)
    r = data.draw(st.integers(1, len(values) - 1))
    head, tail = values[:r], values[r:]
    rnd.shuffle(tail)
    # the tail must stay below the head, so shrink it
    cap = head[-1]
    shuffled = head + [min(cap, v) * 0.5 for v in tail]
    assert shannon_entropy(dist(values), r) == shannon_entropy(dist(shuffled), r)


@given(st.lists(positive, min_size=1, max_size=40))
def test_normalize_preserves_ratios(values):
    d = dist(values)
    out = normalize(d)
    assert out[0] == 1.0
    top = d.amounts[0]
    for x, v in zip(out, d.amounts):
        assert x == pytest.approx(v / top, rel=1e-12)
    assert all(0 <= x <= 1 for x in out)


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(1, 4))
def test_net_conservation(rnd, depth):
    s = random_snapshot(rnd)
    net = resolve_net_vests(s, depth)
    assert math.fsum(net.entries.values()) + net.unresolved_vests == pytest.approx(s.total_pure_vests, rel=1e-9, abs=1e-6)
    assert all(v >= 0 for v in net.entries.values())


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_power_identity(rnd):
    s = random_snapshot(rnd, n_witnesses=4)
    net = resolve_net_vests(s, 4)
    assert stakeholder_power(s, net).total == pytest.approx(witness_power(s, net).total, rel=1e-9, abs=1e-6)


@given(st.dictionaries(st.text("abcdef", min_size=1, max_size=3), positive, min_size=1, max_size=20), scales)
def test_rank_scale_invariant(powers, c):
    before = [k for k, _ in rank(powers)]
    after = [k for k, _ in rank({k: v * c for k, v in powers.items()})]
    assert before == after


def allocation_case(rnd):
    s = random_snapshot(rnd, max_accounts=30, n_witnesses=3)
    net = resolve_net_vests(s, 2)
    sp = stakeholder_power(s, net)
    wp = witness_power(s, net)
    if sp.total == 0:
        return None
    counts = GeneratorCounts.from_mapping({w: rnd.randint(0, 50) for w in s.witnesses} | {"outsider": rnd.randint(0, 3)})
    votes = {a: s[a].witness_votes for a in sp.entries}
    return s, net, sp, wp, counts, votes


@settings(max_examples=80, deadline=None)
@given(st.randoms(use_true_random=False), st.sampled_from(list(AllocationMode)))
def test_allocation_conservation(rnd, mode):
    case = allocation_case(rnd)
    assume(case is not None)
    _, net, sp, wp, counts, votes = case
    res = reallocate(counts, sp, wp, dict(net.entries), votes, mode)
    assert res.allocated + res.unallocated == pytest.approx(counts.total, rel=1e-9, abs=1e-9)
    assert all(v >= 0 for v in res.shares.values())


@settings(max_examples=80, deadline=None)
@given(st.randoms(use_true_random=False), st.sampled_from(list(AllocationMode)), scales)
def test_allocation_scale_invariant(rnd, mode, c):
    case = allocation_case(rnd)
    assume(case is not None)
    _, net, sp, wp, counts, votes = case
    a = reallocate(counts, sp, wp, dict(net.entries), votes, mode)
    b = reallocate(
        counts,
        PowerTable({k: v * c for k, v in sp.entries.items()}, sp.basis),
        PowerTable({k: v * c for k, v in wp.entries.items()}, wp.basis),
        {k: v * c for k, v in net.entries.items()},
        votes,
        mode,
    )
    for k, v in a.shares.items():
        assert b.shares[k] == pytest.approx(v, rel=1e-9, abs=1e-9)


op_strategy = st.tuples(
    st.sampled_from([OpKind.WITNESS_VOTE, OpKind.WITNESS_UNVOTE, OpKind.WITNESS_PROXY, OpKind.WITNESS_PROXY_CLEAR]),
    st.integers(0, 4),
    st.integers(0, 39),
)


@settings(max_examples=50, deadline=None)
@given(st.lists(op_strategy, max_size=120))
def test_vote_cardinality_never_exceeds_limit(ops):
    voters = [Account(f"v{i}", 10.0) for i in range(5)]
    ws = [Account(f"w{i:02d}", is_witness=True) for i in range(40)]
    s = LedgerSnapshot.from_accounts(voters + ws)
    for kind, vi, wi in ops:
        actor = f"v{vi}"
        if kind in (OpKind.WITNESS_VOTE, OpKind.WITNESS_UNVOTE):
            target = f"w{wi:02d}"
        elif kind is OpKind.WITNESS_PROXY:
            target = f"v{wi % 5}"
        else:
            target = None
        before = s
        try:
            s = apply_operation(s, OperationRecord(kind, actor, target))
        except DomainError:
            assert s is before
        assert all(len(a.witness_votes) <= MAX_WITNESS_VOTES for a in s.accounts.values())


@settings(max_examples=50, deadline=None)
@given(st.randoms(use_true_random=False))
def test_apply_operation_is_pure(rnd):
    s = random_snapshot(rnd, max_accounts=10, n_witnesses=2)
    snapshot_copy = {k: v for k, v in s.accounts.items()}
    actor = rnd.choice(list(s.accounts))
    try:
        apply_operation(s, OperationRecord(OpKind.WITNESS_PROXY_CLEAR, actor))
        apply_operation(s, OperationRecord(OpKind.WITNESS_VOTE, actor, s.witnesses[0]))
    except DomainError:
        pass
    assert dict(s.accounts) == snapshot_copy


def test_random_snapshot_builder_covers_cycles():
    rng = random.Random(0)
    found = False
    for _ in range(200):
        s = random_snapshot(rng)
        if resolve_net_vests(s, 4).unresolved_vests > 0:
            found = True
            break
    assert found
