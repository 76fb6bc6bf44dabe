"""Stake ledger model for a DPoS chain.

Snapshots are immutable: every state transition returns a new
:class:`LedgerSnapshot` and leaves its input untouched. All stake is kept
in VESTS as floats; other units are converted on the way in with
:func:`to_vests`.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

from .errors import DomainError, MissingAccountError, VoteLimitError

log = logging.getLogger(__name__)

MAX_WITNESS_VOTES = 30
POWER_DOWN_WEEKS = 13


class Unit(str, enum.Enum):
    STEEM = "STEEM"
    SBD = "SBD"
    SP = "SP"
    VESTS = "VESTS"


@dataclass(frozen=True)
class ConversionRates:
    steem_per_sbd: float = 0.4
    vests_per_sp: float = 2000.0
    sp_per_steem: float = 1.0

    def __post_init__(self) -> None:
        for name in ("steem_per_sbd", "vests_per_sp", "sp_per_steem"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    def vests_per(self, unit: Unit) -> float:
        unit = Unit(unit)
        if unit is Unit.VESTS:
            return 1.0
        if unit is Unit.SP:
            return self.vests_per_sp
        if unit is Unit.STEEM:
            return self.sp_per_steem * self.vests_per_sp
        return self.steem_per_sbd * self.sp_per_steem * self.vests_per_sp


def to_vests(amount: float, unit: Unit | str = Unit.VESTS, rates: ConversionRates | None = None) -> float:
    """Express ``amount`` of ``unit`` in VESTS.

    >>> to_vests(13, "STEEM")
    26000.0
    >>> to_vests(1, "SBD")
    800.0
    """
    if rates is None:
        rates = ConversionRates()
    if isinstance(amount, bool) or not isinstance(amount, (int, float)):
        raise DomainError(f"amount must be a real number, got {amount!r}")
    if not math.isfinite(amount):
        raise DomainError(f"amount must be finite, got {amount!r}")
    if amount < 0:
        raise DomainError(f"amount must be non-negative, got {amount!r}")
    unit = Unit(unit)
    if unit is Unit.VESTS:
        return float(amount)
    return float(amount) * rates.vests_per(unit)


@dataclass(frozen=True)
class PowerDownSchedule:
    weekly_portion: float
    weeks_remaining: int = POWER_DOWN_WEEKS

    @classmethod
    def start(cls, claimed_vests: float) -> "PowerDownSchedule":
        return cls(weekly_portion=claimed_vests / POWER_DOWN_WEEKS, weeks_remaining=POWER_DOWN_WEEKS)

    @property
    def remaining_vests(self) -> float:
        return self.weekly_portion * self.weeks_remaining


@dataclass(frozen=True)
class Account:
    """One account row.

    Construction is permissive on purpose: invariant checks live in
    :func:`validate` so that malformed data can be loaded and reported.
    """

    id: str
    pure_vests: float = 0.0
    proxy: Optional[str] = None
    witness_votes: frozenset[str] = field(default_factory=frozenset)
    power_down: Optional[PowerDownSchedule] = None
    is_witness: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.witness_votes, frozenset):
            object.__setattr__(self, "witness_votes", frozenset(self.witness_votes))

    @property
    def vote_count(self) -> int:
        return len(self.witness_votes)


@dataclass(frozen=True)
class LedgerSnapshot:
    block_height: int
    accounts: Mapping[str, Account]
    rates: ConversionRates = field(default_factory=ConversionRates)

    def __post_init__(self) -> None:
        if not isinstance(self.accounts, MappingProxyType):
            object.__setattr__(self, "accounts", MappingProxyType(dict(self.accounts)))

    @classmethod
    def from_accounts(
        cls, accounts: Iterable[Account], block_height: int = 0, rates: ConversionRates | None = None
    ) -> "LedgerSnapshot":
        table: dict[str, Account] = {}
        for acct in accounts:
            if acct.id in table:
                raise DomainError(f"duplicate account id {acct.id!r}")
            table[acct.id] = acct
        return cls(block_height=block_height, accounts=table, rates=rates or ConversionRates())

    def __getitem__(self, account_id: str) -> Account:
        try:
            return self.accounts[account_id]
        except KeyError:
            raise MissingAccountError(account_id) from None

    def __contains__(self, account_id: object) -> bool:
        return account_id in self.accounts

    def __len__(self) -> int:
        return len(self.accounts)

    @property
    def witnesses(self) -> list[str]:
        return sorted(a.id for a in self.accounts.values() if a.is_witness)

    @property
    def total_pure_vests(self) -> float:
        return math.fsum(a.pure_vests for a in self.accounts.values())

    def with_accounts(self, *changed: Account) -> "LedgerSnapshot":
        table = dict(self.accounts)
        for acct in changed:
            table[acct.id] = acct
        return replace(self, accounts=table)


class OpKind(str, enum.Enum):
    WITNESS_VOTE = "witness_vote"
    WITNESS_UNVOTE = "witness_unvote"
    WITNESS_PROXY = "witness_proxy"
    WITNESS_PROXY_CLEAR = "witness_proxy_clear"
    WITNESS_UPDATE = "witness_update"
    POWER_DOWN_START = "power_down_start"


_NEEDS_TARGET = {OpKind.WITNESS_VOTE, OpKind.WITNESS_UNVOTE, OpKind.WITNESS_PROXY}


@dataclass(frozen=True)
class OperationRecord:
    kind: OpKind
    actor: str
    target: Optional[str] = None
    amount: Optional[float] = None
    unit: Unit = Unit.VESTS

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", OpKind(self.kind))
        object.__setattr__(self, "unit", Unit(self.unit))
        if not self.actor:
            raise DomainError("operation actor must be a non-empty account id")
        if self.kind in _NEEDS_TARGET and not self.target:
            raise DomainError(f"{self.kind.value} requires a target")
        if self.kind is OpKind.POWER_DOWN_START:
            if self.amount is None:
                raise DomainError("power_down_start requires an amount")
            if self.amount < 0 or not math.isfinite(self.amount):
                raise DomainError(f"power-down amount must be finite and >= 0, got {self.amount!r}")


def apply_operation(snapshot: LedgerSnapshot, op: OperationRecord) -> LedgerSnapshot:
    """Return a new snapshot with ``op`` applied."""
    actor = snapshot.accounts.get(op.actor)
    if actor is None:
        raise MissingAccountError(op.actor, f"actor of {op.kind.value}")
    if op.kind in _NEEDS_TARGET and op.target not in snapshot.accounts:
        raise MissingAccountError(op.target, f"target of {op.kind.value}")

    if op.kind is OpKind.WITNESS_VOTE:
        if op.target in actor.witness_votes:
            return snapshot
        if actor.vote_count >= MAX_WITNESS_VOTES:
            raise VoteLimitError(
                f"{actor.id!r} already votes for {MAX_WITNESS_VOTES} witnesses"
            )
        updated = replace(actor, witness_votes=actor.witness_votes | {op.target})
    elif op.kind is OpKind.WITNESS_UNVOTE:
        updated = replace(actor, witness_votes=actor.witness_votes - {op.target})
    elif op.kind is OpKind.WITNESS_PROXY:
        if op.target == actor.id:
            raise DomainError(f"{actor.id!r} cannot set itself as proxy")
        updated = replace(actor, proxy=op.target)
    elif op.kind is OpKind.WITNESS_PROXY_CLEAR:
        updated = replace(actor, proxy=None)
    elif op.kind is OpKind.WITNESS_UPDATE:
        updated = replace(actor, is_witness=True)
    else:
        claimed = to_vests(op.amount, op.unit, snapshot.rates)
        if claimed > actor.pure_vests * (1 + 1e-12):
            raise DomainError(
                f"{actor.id!r} cannot power down {claimed} VESTS, holds {actor.pure_vests}"
            )
        updated = replace(actor, power_down=PowerDownSchedule.start(claimed))
    return snapshot.with_accounts(updated)


def advance_week(snapshot: LedgerSnapshot) -> LedgerSnapshot:
    """Pay out one weekly power-down portion for every active schedule."""
    changed = []
    for acct in snapshot.accounts.values():
        sched = acct.power_down
        if sched is None:
            continue
        remaining = acct.pure_vests - sched.weekly_portion
        if remaining < 0:
            log.warning(
                "power-down of %s exceeds balance by %.6g VESTS; flooring at 0",
                acct.id, -remaining,
            )
            remaining = 0.0
        weeks = sched.weeks_remaining - 1
        next_sched = replace(sched, weeks_remaining=weeks) if weeks > 0 else None
        changed.append(replace(acct, pure_vests=remaining, power_down=next_sched))
    if not changed:
        return snapshot
    return snapshot.with_accounts(*changed)


@dataclass(frozen=True)
class Violation:
    account: str
    rule: str
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.account}: {self.rule}: {self.message}"


def validate(snapshot: LedgerSnapshot) -> list[Violation]:
    """Check every account invariant; violations are returned, never raised.

    Rules with severity ``"warning"`` describe suspicious but loadable data
    (a power-down larger than the remaining balance).
    """
    out: list[Violation] = []
    accounts = snapshot.accounts
    for key in sorted(accounts):
        acct = accounts[key]
        aid = acct.id
        if key != aid:
            out.append(Violation(key, "id-mismatch", f"stored under {key!r} but id is {aid!r}"))
        if not aid:
            out.append(Violation(key, "empty-id", "account id must be non-empty"))
        if not math.isfinite(acct.pure_vests) or acct.pure_vests < 0:
            out.append(Violation(aid, "negative-vests", f"pure_vests={acct.pure_vests!r}"))
        if acct.vote_count > MAX_WITNESS_VOTES:
            out.append(Violation(
                aid, "vote-limit", f"{acct.vote_count} witness votes (max {MAX_WITNESS_VOTES})"
            ))
        if acct.proxy is not None:
            if acct.proxy == aid:
                out.append(Violation(aid, "self-proxy", "account proxies to itself"))
            elif acct.proxy not in accounts:
                out.append(Violation(aid, "dangling-proxy", f"proxy {acct.proxy!r} does not exist"))
        for w in sorted(acct.witness_votes):
            if w not in accounts:
                out.append(Violation(aid, "dangling-vote", f"voted witness {w!r} does not exist"))
        sched = acct.power_down
        if sched is not None:
            if not 0 <= sched.weeks_remaining <= POWER_DOWN_WEEKS:
                out.append(Violation(
                    aid, "power-down-range", f"weeks_remaining={sched.weeks_remaining}"
                ))
            if sched.weekly_portion < 0 or not math.isfinite(sched.weekly_portion):
                out.append(Violation(
                    aid, "power-down-range", f"weekly_portion={sched.weekly_portion!r}"
                ))
            elif sched.remaining_vests > acct.pure_vests * (1 + 1e-9):
                out.append(Violation(
                    aid, "power-down-exceeds-balance",
                    f"{sched.remaining_vests:.6g} VESTS scheduled, {acct.pure_vests:.6g} held",
                    severity="warning",
                ))
    return out


def errors_only(violations: Iterable[Violation]) -> list[Violation]:
    return [v for v in violations if v.severity == "error"]
