"""Proxy-resolved vote weight and the 21-seat witness election."""

from __future__ import annotations

import enum
import logging
import math
import random
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from .errors import DanglingProxyError, DomainError, InsufficientCandidatesError
from .ledger import LedgerSnapshot

log = logging.getLogger(__name__)

DEFAULT_PROXY_DEPTH = 1
MAX_PROXY_DEPTH = 4
TOP_SEATS = 20
SCHEDULE_SIZE = TOP_SEATS + 1


class Basis(str, enum.Enum):
    STAKEHOLDER = "stakeholder"
    WITNESS = "witness"


@dataclass(frozen=True)
class NetVestsTable:
    entries: Mapping[str, float]
    unresolved_vests: float = 0.0
    max_proxy_depth: int = DEFAULT_PROXY_DEPTH

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def __getitem__(self, account_id: str) -> float:
        return self.entries.get(account_id, 0.0)

    @property
    def total(self) -> float:
        return math.fsum(self.entries.values()) + self.unresolved_vests


@dataclass(frozen=True)
class PowerTable:
    entries: Mapping[str, float]
    basis: Basis

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))
        object.__setattr__(self, "basis", Basis(self.basis))

    def __getitem__(self, account_id: str) -> float:
        return self.entries.get(account_id, 0.0)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def total(self) -> float:
        return math.fsum(self.entries.values())

    def scaled(self, factor: float) -> "PowerTable":
        return PowerTable({k: v * factor for k, v in self.entries.items()}, self.basis)


@dataclass(frozen=True)
class WitnessSchedule:
    top20: tuple[str, ...]
    random_seat: str
    seed: int

    @property
    def members(self) -> tuple[str, ...]:
        return self.top20 + (self.random_seat,)


def resolve_net_vests(snapshot: LedgerSnapshot, max_proxy_depth: int = DEFAULT_PROXY_DEPTH) -> NetVestsTable:
    """Credit each account's stake to the end of its proxy chain.

    A chain is followed for at most ``max_proxy_depth`` hops. Stake whose
    chain is still pointing at a proxied account after that, or that loops
    back on itself, is counted in ``unresolved_vests``.
    """
    if not isinstance(max_proxy_depth, int) or not 1 <= max_proxy_depth <= MAX_PROXY_DEPTH:
        raise DomainError(f"max_proxy_depth must be in 1..{MAX_PROXY_DEPTH}, got {max_proxy_depth!r}")
    accounts = snapshot.accounts
    for acct in accounts.values():
        if acct.proxy is not None and acct.proxy not in accounts:
            raise DanglingProxyError(f"{acct.id!r} proxies to unknown account {acct.proxy!r}")

    net = {aid: 0.0 for aid in accounts}
    unresolved = 0.0
    cycles = 0
    for acct in accounts.values():
        if acct.pure_vests == 0:
            continue
        cur = acct
        seen = {acct.id}
        hops = 0
        while cur.proxy is not None:
            if hops == max_proxy_depth:
                cur = None
                break
            nxt = cur.proxy
            if nxt in seen:
                cycles += 1
                cur = None
                break
            seen.add(nxt)
            cur = accounts[nxt]
            hops += 1
        if cur is None:
            unresolved += acct.pure_vests
        else:
            net[cur.id] += acct.pure_vests
    if cycles:
        log.warning("%d account(s) sit on proxy cycles; their stake is unresolved", cycles)
    return NetVestsTable(net, unresolved, max_proxy_depth)


def active_net(snapshot: LedgerSnapshot, net: NetVestsTable) -> dict[str, float]:
    """Net VESTS of accounts that vote directly: no proxy, at least one vote."""
    return {
        a.id: net[a.id]
        for a in snapshot.accounts.values()
        if a.proxy is None and a.witness_votes
    }


def stakeholder_power(snapshot: LedgerSnapshot, net: NetVestsTable) -> PowerTable:
    entries = {
        a.id: net[a.id] * a.vote_count
        for a in snapshot.accounts.values()
        if a.proxy is None and a.witness_votes
    }
    return PowerTable(entries, Basis.STAKEHOLDER)


def witness_power(snapshot: LedgerSnapshot, net: NetVestsTable) -> PowerTable:
    """Sum of voter net VESTS received by every witness.

    Registered witnesses with no votes appear with 0. Votes cast by accounts
    that set a proxy carry no weight.
    """
    entries = {w: 0.0 for w in snapshot.witnesses}
    for a in snapshot.accounts.values():
        if a.proxy is not None or not a.witness_votes:
            continue
        weight = net[a.id]
        for w in a.witness_votes:
            entries[w] = entries.get(w, 0.0) + weight
    return PowerTable(entries, Basis.WITNESS)


def rank(power: PowerTable | Mapping[str, float]) -> list[tuple[str, float]]:
    """Descending by value, ascending id on ties."""
    entries = power.entries if isinstance(power, PowerTable) else power
    return sorted(entries.items(), key=lambda kv: (-kv[1], kv[0]))


def elect(
    snapshot: LedgerSnapshot,
    net: NetVestsTable,
    seed: int,
    *,
    uniform_seat: bool = False,
) -> WitnessSchedule:
    """Pick the 20 strongest registered witnesses plus one random seat.

    The extra seat is drawn from the remaining candidates with probability
    proportional to received power (uniformly if ``uniform_seat`` is set or
    all of them have zero power), using ``random.Random(seed)``.
    """
    candidates = snapshot.witnesses
    if len(candidates) < SCHEDULE_SIZE:
        raise InsufficientCandidatesError(
            f"need at least {SCHEDULE_SIZE} registered witnesses, found {len(candidates)}"
        )
    power = witness_power(snapshot, net)
    ranked = rank({w: power[w] for w in candidates})
    top = tuple(w for w, _ in ranked[:TOP_SEATS])
    rest = [w for w, _ in ranked[TOP_SEATS:]]
    weights = [power[w] for w in rest]

    rng = random.Random(seed)
    if uniform_seat or not any(weights):
        seat = rest[rng.randrange(len(rest))]
    else:
        seat = rng.choices(rest, weights=weights)[0]
    return WitnessSchedule(top, seat, seed)
