"""Built-in Bitcoin/Steem reference datasets.

Only aggregates are known for these (top-k sums, a handful of individual
bars, means and standard deviations). Every fixture keeps those quoted
numbers exactly; the remaining bars are estimates chosen to respect the
quoted aggregates, the known shapes and the expected entropy ordering.
Estimated entries are listed in ``Fixture.estimated`` and must only be used
for ordering and shape checks.

The measurement window:

* Bitcoin blocks 534,763..539,261 (4,499 blocks),
* Steem blocks 24,671,074..25,563,499 (892,426 blocks), ledger state taken
  at block 25,563,499.
"""

from __future__ import annotations

import functools
import math
import random
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterator, Mapping, Union

from .attribution import BlockRecord
from .errors import FixtureNotFoundError
from .ledger import Account, ConversionRates, LedgerSnapshot
from .metrics import Distribution

BITCOIN_FIRST_HEIGHT = 534_763
BITCOIN_LAST_HEIGHT = 539_261
BITCOIN_TOTAL_BLOCKS = 4_499
BITCOIN_POOL_BLOCKS = 4_430

STEEM_FIRST_HEIGHT = 24_671_074
STEEM_LAST_HEIGHT = 25_563_499
STEEM_TOTAL_BLOCKS = 892_426
STEEM_SNAPSHOT_HEIGHT = STEEM_LAST_HEIGHT

STEEM_PURE_HOLDERS = 1_077_405
STEEM_PURE_TOTAL = 3.975e11  # estimate; see Fixture("steem-fig4").note

# Rank-1 stakeholder: 1.58e10 net VESTS x 30 votes earns 177,698 of 892,426
# blocks under proportional re-allocation, which fixes the total power.
STEEM_TOTAL_STAKEHOLDER_POWER = 1.58e10 * 30 * STEEM_TOTAL_BLOCKS / 177_698


@dataclass(frozen=True)
class Fixture:
    name: str
    figure: int
    label: str
    unit: str
    entries: tuple[tuple[str, float], ...]
    quoted: Mapping[str, float]
    estimated: frozenset[str] = frozenset()
    tail_total: float = 0.0
    tail_count: int = 0
    note: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "quoted", MappingProxyType(dict(self.quoted)))

    @property
    def ids(self) -> list[str]:
        return [i for i, _ in self.entries]

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.entries]

    @property
    def total(self) -> float:
        return math.fsum(self.values) + self.tail_total

    def as_mapping(self) -> dict[str, float]:
        return dict(self.entries)

    def value(self, rank: int) -> float:
        """Value at 1-based ``rank`` in the figure's own ordering."""
        return self.entries[rank - 1][1]

    def cumulative(self, k: int) -> float:
        return math.fsum(self.values[:k])

    def distribution(self) -> Distribution:
        return Distribution.from_mapping(self.label, self.as_mapping(), self.tail_total)


def _ids(prefix: str, n: int, start: int = 1) -> list[str]:
    return [f"{prefix}-{i:02d}" for i in range(start, start + n)]


# bitcoin-fig2: top-5 pools quoted; ranks 6..21 follow a 0.8 geometric decay that
# sums to the 1,331 remaining pool blocks. 69 blocks came from non-pool
# miners, one block each.
_BTC_POOLS = [848, 661, 571, 525, 494,
              274, 219, 175, 140, 112, 90, 72, 57, 46, 37, 29, 24, 19, 15, 12, 10]
_BTC_SOLO = 69


def _bitcoin_fig2() -> Fixture:
    pools = list(zip(_ids("pool", len(_BTC_POOLS)), map(float, _BTC_POOLS)))
    solo = [(f"solo-{i:02d}", 1.0) for i in range(1, _BTC_SOLO + 1)]
    entries = tuple(pools + solo)
    return Fixture(
        name="bitcoin-fig2",
        figure=2,
        label="bitcoin-miner",
        unit="blocks",
        entries=entries,
        quoted={
            "total": 4_499, "pool_blocks": 4_430, "pool_share": 0.986,
            "rank1": 848, "rank2": 661, "rank3": 571, "rank4": 525, "rank5": 494,
            "top2_sum": 1_509, "top2_share": 0.335,
            "top4_sum": 2_605, "top4_share": 0.579,
        },
        estimated=frozenset(i for i, _ in entries[5:]),
        note="ranks 6+ estimated; pool and solo-miner labels are placeholders",
    )


# steem-fig3: 20 near-equal producers (mean 42,219.5, population std 977.9), then
# backup witnesses that held the rotating 21st seat.
_STEEM_TOP20 = [44114, 43715, 43416, 43217, 43017, 42818, 42668, 42519, 42369, 42269,
                42170, 42070, 41920, 41771, 41621, 41422, 41222, 41023, 40724, 40325]
_STEEM_BACKUP = [9100, 8000, 7000, 6000, 5000, 4000, 3000, 2500, 2000, 1400, 24, 12]


def _steem_fig3() -> Fixture:
    values = _STEEM_TOP20 + _STEEM_BACKUP
    entries = tuple(zip(_ids("witness", len(values)), map(float, values)))
    return Fixture(
        name="steem-fig3",
        figure=3,
        label="steem-witness",
        unit="blocks",
        entries=entries,
        quoted={
            "total": 892_426, "top20_sum": 844_390, "top20_share": 0.946,
            "top20_mean": 42_219, "top20_std": 978,
        },
        estimated=frozenset(i for i, _ in entries),
        note="no single bar is quoted; values reproduce the top-20 sum, mean and std",
    )


# steem-fig4: ranks 1, 1-2, 1-3, 1-5 and 1-10 are pinned by quoted cumulative
# sums (the rank-3 value follows from 3.23e10 net being 21.7% of top-3 pure).
_PURE_TOP = [9.00e10, 3.60e10, 2.28e10, 1.28e10, 1.24e10,
             4.2e9, 3.9e9, 3.8e9, 3.6e9, 3.5e9,
             3.3e9, 3.1e9, 2.9e9, 2.8e9, 2.6e9, 2.5e9, 2.4e9, 2.3e9, 2.2e9, 2.1e9,
             2.0e9, 1.9e9, 1.85e9, 1.8e9, 1.75e9, 1.7e9, 1.65e9, 1.6e9, 1.55e9, 1.5e9]


def _steem_fig4() -> Fixture:
    entries = tuple(zip(_ids("holder", len(_PURE_TOP)), _PURE_TOP))
    pinned = {"holder-01", "holder-02", "holder-03"}
    return Fixture(
        name="steem-fig4",
        figure=4,
        label="steem-pure-vests",
        unit="VESTS",
        entries=entries,
        quoted={
            "holders": STEEM_PURE_HOLDERS,
            "top1": 9.00e10, "top1_share": 0.227,
            "top2": 1.26e11, "top2_share": 0.375,
            "top5": 1.74e11, "top5_share": 0.439,
            "top10": 1.93e11, "top10_share": 0.485,
            "bottom_1000000": 4.83e9, "bottom_1000000_share": 0.012,
        },
        estimated=frozenset(i for i, _ in entries) - pinned,
        tail_total=STEEM_PURE_TOTAL - math.fsum(_PURE_TOP),
        tail_count=STEEM_PURE_HOLDERS - len(_PURE_TOP),
        note=(
            "total 3.975e11 is estimated: the quoted shares cannot all hold at once, "
            "it satisfies the top-1 and top-10 shares; top-2/top-5 shares do not round-trip"
        ),
    )


# steem-fig5/6: top-30 voting stakeholders by net VESTS and their vote
# counts. Ranks 1-3 and the cumulative top-5 are quoted; 12 of 30 cast 30
# votes, ranks 2, 4 and 7 cast only a few.
_NET_RANK3 = 1.58e10 * 91_207 / 177_698  # both vote 30 times, so blocks scale with net
_NET_TOP = [1.58e10, 3.23e10 - 1.58e10 - _NET_RANK3, _NET_RANK3, 3.30e9, 3.10e9, 2.90e9, 2.70e9, 2.55e9, 2.42e9, 2.30e9,
            2.21e9, 2.12e9, 2.05e9, 1.98e9, 1.91e9, 1.85e9, 1.79e9, 1.73e9, 1.68e9, 1.63e9,
            1.58e9, 1.53e9, 1.49e9, 1.45e9, 1.41e9, 1.37e9, 1.33e9, 1.30e9, 1.27e9, 1.24e9]
_VOTES_TOP = [30, 3, 30, 5, 30, 18, 2, 30, 6, 30,
              4, 30, 8, 30, 3, 30, 5, 30, 7, 30,
              30, 4, 30, 6, 5, 8, 4, 7, 5, 6]
_STAKEHOLDERS = _ids("stakeholder", 30)


def _steem_fig5() -> Fixture:
    entries = tuple(zip(_STAKEHOLDERS, _NET_TOP))
    return Fixture(
        name="steem-fig5",
        figure=5,
        label="steem-net-vests",
        unit="VESTS",
        entries=entries,
        quoted={
            "top1": 1.58e10, "top3": 3.23e10, "top5": 3.87e10,
            "top1_of_pure": 0.176, "top3_of_pure": 0.217, "top5_of_pure": 0.222,
        },
        estimated=frozenset(_STAKEHOLDERS[1:]),
        note="ranks 2-5 split the quoted cumulative sums; rank 3 is pinned by the steem-fig9 ratio",
    )


def _steem_fig6() -> Fixture:
    entries = tuple(zip(_STAKEHOLDERS, map(float, _VOTES_TOP)))
    return Fixture(
        name="steem-fig6",
        figure=6,
        label="steem-vote-count",
        unit="votes",
        entries=entries,
        quoted={"full_voters": 12, "full_voters_top7": 3},
        estimated=frozenset(_STAKEHOLDERS),
        note="counts estimated; 12 full (30-vote) voters, ranks 2, 4 and 7 vote sparsely",
    )


def _stakeholder_powers() -> list[float]:
    return [n * v for n, v in zip(_NET_TOP, _VOTES_TOP)]


def _steem_fig7() -> Fixture:
    powers = _stakeholder_powers()
    entries = tuple(zip(_STAKEHOLDERS, powers))
    return Fixture(
        name="steem-fig7",
        figure=7,
        label="steem-stakeholder-power",
        unit="VESTS",
        entries=entries,
        quoted={"total_power": STEEM_TOTAL_STAKEHOLDER_POWER},
        estimated=frozenset(_STAKEHOLDERS[1:]),
        tail_total=STEEM_TOTAL_STAKEHOLDER_POWER - math.fsum(powers),
        note="net VESTS x vote count; total power derived from the rank-1 re-allocation",
    )


# steem-fig8: mean 5.648e10, population std 1.059e10; rank 8 received the most.
_WITNESS_POWER_TOP = [
    6.99e10, 6.77e10, 6.55e10, 7.32e10, 6.33e10, 6.66e10, 6.11e10, 8.31e10, 5.89e10, 6.44e10,
    6.22e10, 5.78e10, 6.00e10, 5.67e10, 5.45e10, 6.88e10, 5.56e10, 5.34e10, 5.12e10, 5.23e10,
    4.90e10, 5.01e10, 4.68e10, 4.79e10, 4.46e10, 4.57e10, 4.24e10, 4.35e10, 4.02e10, 3.80e10,
]
_WITNESSES = _ids("witness", 30)


def _steem_fig8() -> Fixture:
    entries = tuple(zip(_WITNESSES, _WITNESS_POWER_TOP))
    return Fixture(
        name="steem-fig8",
        figure=8,
        label="steem-witness-power",
        unit="VESTS",
        entries=entries,
        quoted={"mean": 5.65e10, "std": 1.06e10, "max_rank": 8},
        estimated=frozenset(_WITNESSES),
        tail_total=STEEM_TOTAL_STAKEHOLDER_POWER - math.fsum(_WITNESS_POWER_TOP),
        note="ordered by block-production rank (steem-fig3 order), not by value",
    )


def _steem_fig9() -> Fixture:
    blocks = [STEEM_TOTAL_BLOCKS * p / STEEM_TOTAL_STAKEHOLDER_POWER for p in _stakeholder_powers()]
    entries = tuple(zip(_STAKEHOLDERS, blocks))
    return Fixture(
        name="steem-fig9",
        figure=9,
        label="steem-stakeholder",
        unit="blocks",
        entries=entries,
        quoted={
            "total": 892_426,
            "rank1": 177_698, "rank3": 91_207,
            "rank1_of_top30": 0.305, "rank3_of_top30": 0.161,
            "rank1_of_all": 0.200, "rank3_of_all": 0.101,
        },
        estimated=frozenset(_STAKEHOLDERS[1:]),
        tail_total=STEEM_TOTAL_BLOCKS - math.fsum(blocks),
        note="proportional re-allocation of steem-fig7; ordered by net-VESTS rank",
    )


# -- full-scale ledger snapshot ---------------------------------------------

_FILLER_CAP = 1.0e9  # below the rank-30 net VESTS, so fillers never enter the top 30
_EXTRA_WITNESSES = 40


def _extra_witness_targets() -> list[float]:
    remaining = STEEM_TOTAL_STAKEHOLDER_POWER - math.fsum(_WITNESS_POWER_TOP)
    raw = [0.97 ** i for i in range(_EXTRA_WITNESSES)]
    scale = remaining / math.fsum(raw)
    return [scale * x for x in raw]


# (number of clients, VESTS per client) for stakeholders whose net VESTS
# arrives partly through proxies; their own pure VESTS make up the rest
_PROXIED = {
    "stakeholder-01": (16, 8.0e8),
    "stakeholder-03": (4, 1.0e9),
    "stakeholder-06": (2, 5.0e8),
}


@functools.lru_cache(maxsize=1)
def steem_snapshot() -> LedgerSnapshot:
    """A ledger whose election pipeline reproduces steem-fig5..9.

    Built from the fixtures above: the top-30 voting stakeholders carry the
    steem-fig5 net VESTS and steem-fig6 vote counts, the first 30 witnesses receive
    exactly the steem-fig8 power, and single-vote filler voters (net VESTS at
    most 1e9 each) top every witness up to its target. Because total
    stakeholder power equals total received witness power, the filler
    stake also fixes the steem-fig9 re-allocation shares.
    """
    accounts: list[Account] = []
    witness_ids = _ids("witness", 30 + _EXTRA_WITNESSES)
    targets = dict(zip(witness_ids, _WITNESS_POWER_TOP + _extra_witness_targets()))
    deficit = dict(targets)

    for sid, net, nvotes in zip(_STAKEHOLDERS, _NET_TOP, _VOTES_TOP):
        order = sorted(deficit, key=lambda w: (-deficit[w], w))[:nvotes]
        if deficit[order[-1]] < net:
            raise RuntimeError(f"cannot place the votes of {sid} without overshooting steem-fig8")
        for w in order:
            deficit[w] -= net
        clients, per_client = _PROXIED.get(sid, (0, 0.0))
        own = net - clients * per_client
        accounts.append(Account(sid, own, witness_votes=frozenset(order)))
        for c in range(1, clients + 1):
            # a couple of clients keep stale direct votes; they carry no weight
            stale = frozenset(order[:1]) if c <= 2 else frozenset()
            accounts.append(Account(f"client-{sid[-2:]}-{c:02d}", per_client, proxy=sid, witness_votes=stale))

    n = 0
    for w in witness_ids:
        d = deficit[w]
        if d <= 0:
            continue
        k = math.ceil(d / _FILLER_CAP)
        for _ in range(k):
            n += 1
            accounts.append(Account(f"voter-{n:05d}", d / k, witness_votes=frozenset({w})))

    for w in witness_ids:
        accounts.append(Account(w, 0.0, is_witness=True))
    # passive whales: most pure VESTS, no votes, no proxy
    for hid, pure in zip(_ids("holder", 10), _PURE_TOP[:10]):
        accounts.append(Account(hid, pure))

    return LedgerSnapshot.from_accounts(accounts, STEEM_SNAPSHOT_HEIGHT, ConversionRates())


# -- block streams --------------------------------------------------------------


def fixture_blocks(name: str, seed: int = 0) -> Iterator[BlockRecord]:
    """Synthetic block stream over the measured height range.

    Heights are contiguous; the producer of each height is a seeded shuffle
    of the fixture's per-generator counts.
    """
    if name == "bitcoin-fig2":
        first = BITCOIN_FIRST_HEIGHT
    elif name == "steem-fig3":
        first = STEEM_FIRST_HEIGHT
    else:
        raise FixtureNotFoundError(name, ["bitcoin-fig2", "steem-fig3"])
    fx = load_fixture(name)
    producers = [g for g, count in fx.entries for _ in range(int(count))]
    random.Random(seed).shuffle(producers)
    for offset, g in enumerate(producers):
        yield BlockRecord(first + offset, g)


_BUILDERS = {
    "bitcoin-fig2": _bitcoin_fig2,
    "steem-fig3": _steem_fig3,
    "steem-fig4": _steem_fig4,
    "steem-fig5": _steem_fig5,
    "steem-fig6": _steem_fig6,
    "steem-fig7": _steem_fig7,
    "steem-fig8": _steem_fig8,
    "steem-fig9": _steem_fig9,
    "steem-snapshot": steem_snapshot,
}

FIXTURE_NAMES = tuple(_BUILDERS)


def load_fixture(name: str) -> Union[Fixture, LedgerSnapshot]:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise FixtureNotFoundError(name, FIXTURE_NAMES) from None
    return builder()
