"""Decentralization of block production in PoW and DPoS blockchains.

Pipeline: a ledger snapshot gives proxy-resolved net VESTS
(:func:`resolve_net_vests`), which give stakeholder and witness vote weight
(:func:`stakeholder_power`, :func:`witness_power`). Produced blocks are then
re-allocated to stakeholders (:func:`reallocate`), and ranked distributions
are compared by top-r Shannon entropy (:func:`shannon_entropy`, :func:`compare`).
"""

from .attribution import (
    AllocationMode,
    AllocationResult,
    BlockRecord,
    GeneratorCounts,
    count_blocks,
    reallocate,
    reallocate_snapshot,
    round_shares,
)
from .election import (
    Basis,
    NetVestsTable,
    PowerTable,
    WitnessSchedule,
    active_net,
    elect,
    rank,
    resolve_net_vests,
    stakeholder_power,
    witness_power,
)
from .errors import DposmeterError
from .fixtures import FIXTURE_NAMES, Fixture, fixture_blocks, load_fixture, steem_snapshot
from .ingest import (
    FileChainSource,
    load_blocks,
    load_series,
    load_snapshot,
    save_series,
    save_snapshot,
    write_blocks,
)
from .ledger import (
    Account,
    ConversionRates,
    LedgerSnapshot,
    OperationRecord,
    OpKind,
    PowerDownSchedule,
    Unit,
    Violation,
    advance_week,
    apply_operation,
    to_vests,
    validate,
)
from .metrics import (
    ComparisonReport,
    Distribution,
    EntropyReport,
    compare,
    distribution_stats,
    normalize,
    shannon_entropy,
)

__all__ = [
    "Account",
    "active_net",
    "advance_week",
    "AllocationMode",
    "AllocationResult",
    "apply_operation",
    "Basis",
    "BlockRecord",
    "compare",
    "ComparisonReport",
    "ConversionRates",
    "count_blocks",
    "Distribution",
    "distribution_stats",
    "DposmeterError",
    "elect",
    "EntropyReport",
    "FileChainSource",
    "Fixture",
    "fixture_blocks",
    "FIXTURE_NAMES",
    "GeneratorCounts",
    "LedgerSnapshot",
    "load_blocks",
    "load_fixture",
    "load_series",
    "load_snapshot",
    "NetVestsTable",
    "normalize",
    "OperationRecord",
    "OpKind",
    "steem_snapshot",
    "PowerDownSchedule",
    "PowerTable",
    "rank",
    "reallocate",
    "reallocate_snapshot",
    "resolve_net_vests",
    "round_shares",
    "save_series",
    "save_snapshot",
    "shannon_entropy",
    "stakeholder_power",
    "to_vests",
    "Unit",
    "validate",
    "Violation",
    "witness_power",
    "WitnessSchedule",
    "write_blocks",
]

__version__ = "0.1.0"
