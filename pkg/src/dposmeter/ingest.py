"""File formats: ledger snapshots (JSON), block streams (CSV), series (JSON/CSV).

Snapshot file::

    {"format_version": 1, "block_height": 25563499,
     "rates": {"steem_per_sbd": 0.4, "vests_per_sp": 2000.0},
     "accounts": [{"id": "alice", "pure_vests": 100.0, "proxy": "bob",
                   "votes": ["w1"], "witness": false,
                   "power_down": {"weekly_portion": 2000.0, "weeks_remaining": 13}}]}

Block stream file (UTF-8, LF)::

    # format_version: 1
    height,generator,timestamp
    534763,pool-01,
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional, Protocol, Union

from .attribution import BlockRecord, HeightSet
from .errors import DataError, FormatError, ValidationError
from .ledger import (
    Account,
    ConversionRates,
    LedgerSnapshot,
    PowerDownSchedule,
    errors_only,
    validate,
)
from .metrics import Distribution

PathLike = Union[str, os.PathLike]

FORMAT_VERSION = 1
BLOCK_HEADER = ("height", "generator", "timestamp")
SERIES_HEADER = ("id", "value")


# -- snapshots ---------------------------------------------------------------


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(f"{where}: expected an integer, got {value!r}")
    return value


def snapshot_from_dict(doc: dict) -> LedgerSnapshot:
    """Build a snapshot from parsed JSON. Does not run :func:`validate`."""
    if not isinstance(doc, dict):
        raise FormatError("snapshot: top level must be an object")
    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise FormatError(f"format_version: unsupported version {version!r}")
    height = _integer(doc.get("block_height", 0), "block_height")

    raw_rates = doc.get("rates", {})
    if not isinstance(raw_rates, dict):
        raise FormatError("rates: expected an object")
    rate_args = {k: _number(raw_rates[k], f"rates.{k}") for k in ("steem_per_sbd", "vests_per_sp") if k in raw_rates}
    unknown = set(raw_rates) - {"steem_per_sbd", "vests_per_sp"}
    if unknown:
        raise FormatError(f"rates: unknown key(s) {sorted(unknown)}")
    rates = ConversionRates(**rate_args)

    raw_accounts = doc.get("accounts")
    if not isinstance(raw_accounts, list):
        raise FormatError("accounts: expected a list")
    table: dict[str, Account] = {}
    for i, row in enumerate(raw_accounts):
        where = f"accounts[{i}]"
        if not isinstance(row, dict):
            raise FormatError(f"{where}: expected an object")
        aid = row.get("id")
        if not isinstance(aid, str) or not aid:
            raise FormatError(f"{where}.id: expected a non-empty string")
        if aid in table:
            raise FormatError(f"{where}.id: duplicate account id {aid!r}")
        proxy = row.get("proxy")
        if proxy is not None and not isinstance(proxy, str):
            raise FormatError(f"{where}.proxy: expected a string")
        votes = row.get("votes", [])
        if not isinstance(votes, list) or not all(isinstance(v, str) for v in votes):
            raise FormatError(f"{where}.votes: expected a list of account ids")
        if len(set(votes)) != len(votes):
            raise FormatError(f"{where}.votes: repeated witness id")
        witness = row.get("witness", False)
        if not isinstance(witness, bool):
            raise FormatError(f"{where}.witness: expected true/false")
        pd = row.get("power_down")
        schedule = None
        if pd is not None:
            if not isinstance(pd, dict):
                raise FormatError(f"{where}.power_down: expected an object")
            schedule = PowerDownSchedule(
                _number(pd.get("weekly_portion"), f"{where}.power_down.weekly_portion"),
                _integer(pd.get("weeks_remaining"), f"{where}.power_down.weeks_remaining"),
            )
        table[aid] = Account(
            id=aid,
            pure_vests=_number(row.get("pure_vests", 0.0), f"{where}.pure_vests"),
            proxy=proxy,
            witness_votes=frozenset(votes),
            power_down=schedule,
            is_witness=witness,
        )
    return LedgerSnapshot(height, table, rates)


def snapshot_to_dict(snapshot: LedgerSnapshot) -> dict:
    accounts = []
    for aid in sorted(snapshot.accounts):
        a = snapshot.accounts[aid]
        row: dict = {"id": a.id, "pure_vests": float(a.pure_vests)}
        if a.proxy is not None:
            row["proxy"] = a.proxy
        row["votes"] = sorted(a.witness_votes)
        if a.is_witness:
            row["witness"] = True
        if a.power_down is not None:
            row["power_down"] = {
                "weekly_portion": float(a.power_down.weekly_portion),
                "weeks_remaining": a.power_down.weeks_remaining,
            }
        accounts.append(row)
    return {
        "format_version": FORMAT_VERSION,
        "block_height": snapshot.block_height,
        "rates": {
            "steem_per_sbd": snapshot.rates.steem_per_sbd,
            "vests_per_sp": snapshot.rates.vests_per_sp,
        },
        "accounts": accounts,
    }


def dumps_snapshot(snapshot: LedgerSnapshot) -> str:
    return json.dumps(snapshot_to_dict(snapshot), indent=2) + "\n"


def save_snapshot(snapshot: LedgerSnapshot, path: PathLike) -> None:
    Path(path).write_text(dumps_snapshot(snapshot), encoding="utf-8", newline="\n")


def loads_snapshot(text: str) -> LedgerSnapshot:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    snapshot = snapshot_from_dict(doc)
    problems = errors_only(validate(snapshot))
    if problems:
        raise ValidationError(problems)
    return snapshot


def load_snapshot(path: PathLike) -> LedgerSnapshot:
    """Read and validate a snapshot file.

    Raises :class:`FormatError` for malformed JSON or fields, and
    :class:`ValidationError` (carrying ``.violations``) when the ledger
    invariants do not hold. Warnings do not prevent loading.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return loads_snapshot(text)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


# -- block streams -----------------------------------------------------------


def _parse_block_row(row: list[str], line: int) -> BlockRecord:
    if len(row) != 3:
        raise FormatError(f"row {line}: expected 3 fields, got {len(row)}")
    raw_height, generator, raw_ts = row
    try:
        height = int(raw_height)
    except ValueError:
        raise FormatError(f"row {line}: height {raw_height!r} is not an integer") from None
    if height < 0:
        raise FormatError(f"row {line}: negative height {height}")
    if not generator:
        raise FormatError(f"row {line}: empty generator")
    ts: Optional[float] = None
    if raw_ts != "":
        try:
            ts = float(raw_ts)
        except ValueError:
            raise FormatError(f"row {line}: timestamp {raw_ts!r} is not a number") from None
    return BlockRecord(height, generator, ts)


class BlockStream:
    """Lazily parsed block stream; iterate once.

    The header is checked when the stream is opened. Rows are parsed as they
    are consumed, and only a height bitmap is kept for duplicate detection.
    """

    def __init__(self, source: Union[PathLike, IO[str]]) -> None:
        if isinstance(source, (str, os.PathLike)):
            self.name = str(source)
            self._fh: IO[str] = open(source, encoding="utf-8", newline="")
            self._owns = True
        else:
            self.name = getattr(source, "name", "<stream>")
            self._fh = source
            self._owns = False
        self.format_version = FORMAT_VERSION
        self._reader = csv.reader(self._fh)
        self._consumed = False
        try:
            self._read_header()
        except Exception:
            self.close()
            raise

    def _read_header(self) -> None:
        for row in self._reader:
            if not row:
                continue
            if row[0].startswith("#"):
                text = ",".join(row).lstrip("#").strip()
                key, _, value = text.partition(":")
                if key.strip() == "format_version":
                    if value.strip() != str(FORMAT_VERSION):
                        raise FormatError(f"{self.name}: unsupported format_version {value.strip()!r}")
                continue
            if tuple(c.strip() for c in row) != BLOCK_HEADER:
                raise FormatError(
                    f"{self.name}: line {self._reader.line_num}: expected header "
                    f"{','.join(BLOCK_HEADER)!r}, got {','.join(row)!r}"
                )
            return
        raise FormatError(f"{self.name}: missing header {','.join(BLOCK_HEADER)!r}")

    def __iter__(self) -> Iterator[BlockRecord]:
        if self._consumed:
            raise DataError(f"{self.name}: block stream already consumed")
        self._consumed = True
        seen = HeightSet()
        try:
            for row in self._reader:
                if not row:
                    continue
                line = self._reader.line_num
                rec = _parse_block_row(row, line)
                if not seen.add(rec.height):
                    raise DataError(f"{self.name}: row {line}: duplicate block height {rec.height}")
                yield rec
        finally:
            self.close()

    def close(self) -> None:
        if self._owns and not self._fh.closed:
            self._fh.close()

    def __enter__(self) -> "BlockStream":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def load_blocks(path: PathLike) -> BlockStream:
    return BlockStream(path)


def _format_ts(ts: Optional[float]) -> str:
    if ts is None:
        return ""
    if float(ts).is_integer():
        return str(int(ts))
    return repr(float(ts))


def write_blocks(records: Iterable[BlockRecord], dest: Union[PathLike, IO[str]]) -> int:
    """Write a block stream file; returns the number of rows written."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            return write_blocks(records, fh)
    dest.write(f"# format_version: {FORMAT_VERSION}\n")
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(BLOCK_HEADER)
    n = 0
    for rec in records:
        writer.writerow((rec.height, rec.generator, _format_ts(rec.timestamp)))
        n += 1
    return n


# -- series -------------------------------------------------------------------


def distribution_to_dict(dist: Distribution) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "label": dist.label,
        "values": [[i, v] for i, v in dist.values],
        "tail_total": dist.tail_total,
    }


def save_series(dist: Distribution, path: PathLike) -> None:
    text = json.dumps(distribution_to_dict(dist), indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def load_series(path: PathLike, label: Optional[str] = None) -> Distribution:
    """Load a ranked series for entropy work.

    Accepts a series JSON document, an ``id,value`` CSV, or a block stream
    CSV (which is tallied per generator).
    """
    path = Path(path)
    default_label = label or path.stem
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        values = doc.get("values")
        if not isinstance(values, list):
            raise FormatError(f"{path}: 'values' must be a list of [id, value] pairs")
        mapping: dict[str, float] = {}
        for n, pair in enumerate(values):
            if not (isinstance(pair, list) and len(pair) == 2):
                raise FormatError(f"{path}: values[{n}]: expected [id, value]")
            ident = str(pair[0])
            if ident in mapping:
                raise FormatError(f"{path}: values[{n}]: duplicate id {ident!r}")
            mapping[ident] = _number(pair[1], f"{path}: values[{n}]")
        tail = _number(doc.get("tail_total", 0.0), f"{path}: tail_total")
        return Distribution.from_mapping(label or doc.get("label") or default_label, mapping, tail)

    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    header = tuple(c.strip() for c in rows[0].split(",")) if rows else ()
    if header == BLOCK_HEADER:
        from .attribution import count_blocks

        with BlockStream(path) as stream:
            counts = count_blocks(stream)
        return Distribution.from_mapping(default_label, {k: float(v) for k, v in counts.counts.items()})
    if header != SERIES_HEADER:
        raise FormatError(f"{path}: expected a series JSON, an 'id,value' CSV or a block stream")
    mapping = {}
    for line_no, row in enumerate(csv.reader(io.StringIO("\n".join(rows[1:]))), start=2):
        if len(row) != 2:
            raise FormatError(f"{path}: row {line_no}: expected 2 fields")
        try:
            value = float(row[1])
        except ValueError:
            raise FormatError(f"{path}: row {line_no}: value {row[1]!r} is not a number") from None
        if row[0] in mapping:
            raise FormatError(f"{path}: row {line_no}: duplicate id {row[0]!r}")
        if not math.isfinite(value):
            raise FormatError(f"{path}: row {line_no}: value must be finite")
        mapping[row[0]] = value
    return Distribution.from_mapping(default_label, mapping)


# -- chain sources ------------------------------------------------------------


class ChainSource(Protocol):
    """Where snapshots and blocks come from.

    Live node adapters (Steem ``condenser_api``, Bitcoin RPC) would implement
    the same two methods.
    """

    def fetch_snapshot(self) -> LedgerSnapshot: ...

    def fetch_blocks(self, start: int, stop: int) -> Iterator[BlockRecord]: ...


class FileChainSource:
    def __init__(self, snapshot_path: Optional[PathLike] = None, blocks_path: Optional[PathLike] = None) -> None:
        self.snapshot_path = snapshot_path
        self.blocks_path = blocks_path

    def fetch_snapshot(self) -> LedgerSnapshot:
        if self.snapshot_path is None:
            raise DataError("no snapshot file configured")
        return load_snapshot(self.snapshot_path)

    def fetch_blocks(self, start: int, stop: int) -> Iterator[BlockRecord]:
        """Blocks with ``start <= height < stop``, in file order."""
        if self.blocks_path is None:
            raise DataError("no block stream file configured")
        for rec in load_blocks(self.blocks_path):
            if start <= rec.height < stop:
                yield rec
