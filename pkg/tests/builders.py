"""Shared test builders and independent oracles."""

from __future__ import annotations

import random

from dposmeter.ledger import Account, LedgerSnapshot


def random_snapshot(rng: random.Random, max_accounts: int = 50, n_witnesses: int = 0) -> LedgerSnapshot:
    """Random ledger with proxy DAGs, chains and cycles (no dangling edges)."""
    n = rng.randint(1, max_accounts)
    ids = [f"a{i:03d}" for i in range(n)]
    witnesses = ids[: max(n_witnesses, rng.randint(0, min(n, 8)))]
    accounts = []
    for aid in ids:
        pure = rng.choice([0.0, rng.uniform(0, 1e3), rng.uniform(0, 1e11), float(rng.randint(0, 100))])
        proxy = None
        if n > 1 and rng.random() < 0.4:
            proxy = rng.choice([x for x in ids if x != aid])
        votes = frozenset(rng.sample(witnesses, rng.randint(0, len(witnesses)))) if witnesses else frozenset()
        accounts.append(Account(aid, pure, proxy, votes, is_witness=aid in witnesses))
    return LedgerSnapshot.from_accounts(accounts)


def propagate_oracle(snapshot: LedgerSnapshot, depth: int) -> tuple[dict[str, float], float]:
    """Net VESTS by pushing stake along proxy edges ``depth`` times.

    Stake parked on an account without a proxy stays put; whatever still sits
    on a proxied account after ``depth`` rounds is unresolved.
    """
    accounts = snapshot.accounts
    # each parcel of stake tracked separately so no float re-association happens
    parcels = [(a.id, a.pure_vests) for a in accounts.values()]
    for _ in range(depth):
        parcels = [
            (accounts[where].proxy if accounts[where].proxy is not None else where, amount)
            for where, amount in parcels
        ]
    net = {aid: 0.0 for aid in accounts}
    unresolved = 0.0
    for where, amount in parcels:
        if accounts[where].proxy is None:
            net[where] += amount
        else:
            unresolved += amount
    return net, unresolved


def brute_force_split(blocks_per_witness, nets, votes):
    """Per-witness split computed voter by voter, straight from the definition."""
    shares = {s: 0.0 for s in nets}
    for w, b in blocks_per_witness.items():
        voters = [s for s in nets if w in votes[s]]
        weight = sum(nets[s] for s in voters)
        for s in voters:
            shares[s] += b * nets[s] / weight
    return shares
