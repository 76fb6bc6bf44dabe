"""Block tallies per generator and re-allocation of blocks to stakeholders."""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

from .election import (
    DEFAULT_PROXY_DEPTH,
    NetVestsTable,
    PowerTable,
    resolve_net_vests,
    stakeholder_power,
    witness_power,
)
from .errors import DataError, DegenerateInputError, DomainError
from .ledger import LedgerSnapshot


@dataclass(frozen=True)
class BlockRecord:
    height: int
    generator: str
    timestamp: Optional[float] = None

    def __post_init__(self) -> None:
        if isinstance(self.height, bool) or not isinstance(self.height, int) or self.height < 0:
            raise DataError(f"block height must be a non-negative integer, got {self.height!r}")
        if not self.generator:
            raise DataError(f"block {self.height} has an empty generator")


@dataclass(frozen=True)
class GeneratorCounts:
    counts: Mapping[str, int]
    total: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", MappingProxyType(dict(self.counts)))
        if sum(self.counts.values()) != self.total:
            raise DataError(f"counts sum to {sum(self.counts.values())}, total says {self.total}")

    @classmethod
    def from_mapping(cls, counts: Mapping[str, int]) -> "GeneratorCounts":
        return cls(counts, sum(counts.values()))

    def merge(self, other: "GeneratorCounts") -> "GeneratorCounts":
        merged = Counter(self.counts)
        merged.update(other.counts)
        return GeneratorCounts(merged, self.total + other.total)

    def ranked(self) -> list[tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))

    def share(self, generator: str) -> float:
        return self.counts.get(generator, 0) / self.total if self.total else 0.0


class HeightSet:
    """Set of block heights stored as one bitmap page per 2**16 heights.

    Memory grows with the height span covered, not with the number of
    blocks, so a contiguous range of a million heights costs ~128 KiB.
    """

    PAGE_BITS = 16

    def __init__(self) -> None:
        self._pages: dict[int, bytearray] = {}
        self._size = 0

    def add(self, height: int) -> bool:
        """Insert ``height``; return False if it was already present."""
        page_no, offset = divmod(height, 1 << self.PAGE_BITS)
        page = self._pages.get(page_no)
        if page is None:
            page = self._pages[page_no] = bytearray(1 << (self.PAGE_BITS - 3))
        byte, bit = divmod(offset, 8)
        mask = 1 << bit
        if page[byte] & mask:
            return False
        page[byte] |= mask
        self._size += 1
        return True

    def __contains__(self, height: int) -> bool:
        page_no, offset = divmod(height, 1 << self.PAGE_BITS)
        page = self._pages.get(page_no)
        if page is None:
            return False
        byte, bit = divmod(offset, 8)
        return bool(page[byte] & (1 << bit))

    def __len__(self) -> int:
        return self._size


def count_blocks(stream: Iterable[BlockRecord]) -> GeneratorCounts:
    """Tally blocks per generator; a repeated height is a data error."""
    counts: Counter[str] = Counter()
    seen = HeightSet()
    for rec in stream:
        if not seen.add(rec.height):
            raise DataError(f"duplicate block height {rec.height}")
        counts[rec.generator] += 1
    return GeneratorCounts(counts, sum(counts.values()))


class AllocationMode(str, enum.Enum):
    GLOBAL_PROPORTIONAL = "global_proportional"
    PER_WITNESS_SPLIT = "per_witness_split"


@dataclass(frozen=True)
class AllocationResult:
    """Blocks attributed to stakeholders.

    ``total`` is the number of blocks in the input tally. Whatever could not
    be attributed is in ``unallocated``: blocks of witnesses nobody voted for
    (``zero_power_witnesses``) and blocks of generators missing from the
    witness table (``unattributed``). ``sum(shares) + unallocated == total``.
    """

    shares: Mapping[str, float]
    total: float
    mode: AllocationMode
    unallocated: float = 0.0
    zero_power_witnesses: Mapping[str, float] = field(default_factory=dict)
    unattributed: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("shares", "zero_power_witnesses", "unattributed"):
            object.__setattr__(self, name, MappingProxyType(dict(getattr(self, name))))

    @property
    def allocated(self) -> float:
        return math.fsum(self.shares.values())

    def fraction(self, stakeholder: str) -> float:
        return self.shares.get(stakeholder, 0.0) / self.total if self.total else 0.0


def reallocate(
    counts: GeneratorCounts,
    stakeholder: PowerTable,
    witness: Optional[PowerTable] = None,
    net: Optional[NetVestsTable | Mapping[str, float]] = None,
    votes: Optional[Mapping[str, Iterable[str]]] = None,
    mode: AllocationMode | str = AllocationMode.GLOBAL_PROPORTIONAL,
) -> AllocationResult:
    """Attribute produced blocks back to the stakeholders who elected the producers.

    ``global_proportional`` splits the whole tally by stakeholder power.
    ``per_witness_split`` splits each witness's blocks among its voters by
    their net VESTS; it needs ``witness``, ``net`` and ``votes``.
    """
    mode = AllocationMode(mode)
    total = counts.total
    if not any(v > 0 for v in stakeholder.entries.values()):
        raise DegenerateInputError("every stakeholder has zero power; nothing to allocate by")

    unattributed: dict[str, float] = {}
    if witness is not None:
        unattributed = {g: float(b) for g, b in counts.counts.items() if g not in witness.entries}

    if mode is AllocationMode.GLOBAL_PROPORTIONAL:
        power_sum = stakeholder.total
        shares = {s: total * p / power_sum for s, p in stakeholder.entries.items() if p > 0}
        return AllocationResult(shares, float(total), mode, 0.0, {}, unattributed)

    if witness is None or net is None or votes is None:
        raise DomainError("per_witness_split needs witness power, net VESTS and votes")
    net_of = net.entries if isinstance(net, NetVestsTable) else net

    voters_of: dict[str, list[str]] = {}
    for s in sorted(votes):
        if s not in stakeholder.entries:
            continue
        for w in votes[s]:
            voters_of.setdefault(w, []).append(s)

    shares: dict[str, float] = {}
    zero_power: dict[str, float] = {}
    for g in sorted(counts.counts):
        blocks = counts.counts[g]
        if g in unattributed:
            continue
        w_power = witness[g]
        if w_power <= 0:
            zero_power[g] = float(blocks)
            continue
        for s in voters_of.get(g, ()):
            n = net_of.get(s, 0.0)
            if n > 0:
                shares[s] = shares.get(s, 0.0) + blocks * n / w_power
    unallocated = math.fsum(zero_power.values()) + math.fsum(unattributed.values())
    return AllocationResult(shares, float(total), mode, unallocated, zero_power, unattributed)


def reallocate_snapshot(
    snapshot: LedgerSnapshot,
    counts: GeneratorCounts,
    mode: AllocationMode | str = AllocationMode.GLOBAL_PROPORTIONAL,
    max_proxy_depth: int = DEFAULT_PROXY_DEPTH,
) -> AllocationResult:
    """Run the whole pipeline: net VESTS, both power tables, re-allocation."""
    net = resolve_net_vests(snapshot, max_proxy_depth)
    votes = {a.id: a.witness_votes for a in snapshot.accounts.values() if a.proxy is None}
    return reallocate(
        counts,
        stakeholder_power(snapshot, net),
        witness_power(snapshot, net),
        net,
        votes,
        mode,
    )


def round_shares(shares: Mapping[str, float], total: Optional[int] = None) -> dict[str, int]:
    """Largest-remainder rounding of real shares to integers.

    The integers sum to ``total``, which defaults to the rounded sum of the
    shares.
    """
    if not shares:
        return {}
    if total is None:
        total = round(math.fsum(shares.values()))
    floors = {k: math.floor(v) for k, v in shares.items()}
    left = total - sum(floors.values())
    if not 0 <= left <= len(shares):
        raise DomainError(f"cannot round shares summing to {math.fsum(shares.values())} to {total}")
    by_remainder = sorted(shares, key=lambda k: (-(shares[k] - floors[k]), k))
    for k in by_remainder[:left]:
        floors[k] += 1
    return floors
