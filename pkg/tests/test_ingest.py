import io
import json
import tracemalloc

import pytest

from dposmeter.attribution import BlockRecord, count_blocks
from dposmeter.errors import DataError, FormatError, ValidationError
from dposmeter.fixtures import fixture_blocks, load_fixture, steem_snapshot
from dposmeter.ingest import (
    BlockStream,
    FileChainSource,
    dumps_snapshot,
    load_blocks,
    load_series,
    load_snapshot,
    loads_snapshot,
    save_series,
    save_snapshot,
    snapshot_to_dict,
    write_blocks,
)
from dposmeter.ledger import Account, LedgerSnapshot, PowerDownSchedule

MINIMAL = {
    "format_version": 1,
    "block_height": 25_563_499,
    "accounts": [
        {"id": "alice", "pure_vests": 100.0, "proxy": "bob", "votes": []},
        {"id": "bob", "pure_vests": 100.0, "votes": ["w1"]},
        {"id": "w1", "pure_vests": 0, "witness": True},
    ],
}


class TestSnapshot:
    def test_minimal(self):
        s = loads_snapshot(json.dumps(MINIMAL))
        assert s.block_height == 25_563_499
        assert s["alice"].proxy == "bob"
        assert s["bob"].witness_votes == {"w1"}
        assert s.witnesses == ["w1"]

    def test_duplicate_id(self):
        doc = dict(MINIMAL, accounts=MINIMAL["accounts"] + [{"id": "bob"}])
        with pytest.raises(FormatError, match="bob"):
            loads_snapshot(json.dumps(doc))

    def test_bad_json_position(self):
        with pytest.raises(FormatError, match="line 1"):
            loads_snapshot('{"accounts": [}')

    @pytest.mark.parametrize(
        "patch,where",
        [
            ({"format_version": 2}, "format_version"),
            ({"block_height": 1.5}, "block_height"),
            ({"accounts": [{"id": 3}]}, "accounts[0].id"),
            ({"accounts": [{"id": "a", "pure_vests": "lots"}]}, "accounts[0].pure_vests"),
            ({"accounts": [{"id": "a", "votes": ["w", "w"]}]}, "accounts[0].votes"),
            ({"rates": {"steem_per_btc": 1}}, "rates"),
        ],
    )
    def test_field_errors(self, patch, where):
        with pytest.raises(FormatError) as exc:
            loads_snapshot(json.dumps(dict(MINIMAL, **patch)))
        assert where in str(exc.value)

    def test_validation_failure_lists_violations(self):
        doc = dict(MINIMAL, accounts=[{"id": "a", "proxy": "ghost"}])
        with pytest.raises(ValidationError) as exc:
            loads_snapshot(json.dumps(doc))
        assert [v.rule for v in exc.value.violations] == ["dangling-proxy"]

    def test_round_trip_byte_identical(self, tmp_path):
        src = tmp_path / "a.json"
        src.write_text(dumps_snapshot(loads_snapshot(json.dumps(MINIMAL))))
        dst = tmp_path / "b.json"
        save_snapshot(load_snapshot(src), dst)
        assert src.read_bytes() == dst.read_bytes()

    def test_round_trip_steem_snapshot(self, tmp_path):
        path = tmp_path / "snap.json"
        save_snapshot(steem_snapshot(), path)
        again = load_snapshot(path)
        assert snapshot_to_dict(again) == snapshot_to_dict(steem_snapshot())

    def test_power_down_and_rates_survive(self):
        s = LedgerSnapshot.from_accounts([Account("a", 26000, power_down=PowerDownSchedule(2000, 13))], 7)
        back = loads_snapshot(dumps_snapshot(s))
        assert back["a"].power_down == PowerDownSchedule(2000, 13)
        assert back.rates == s.rates

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_snapshot(tmp_path / "nope.json")


def blocks_text(*rows, header="height,generator,timestamp"):
    return "\n".join([header, *rows]) + "\n"


class TestBlocks:
    def test_three_rows_in_order(self):
        stream = BlockStream(io.StringIO(blocks_text("10,a,", "11,b,1500000000", "12,a,")))
        recs = list(stream)
        assert [r.height for r in recs] == [10, 11, 12]
        assert recs[1].timestamp == 1_500_000_000
        assert recs[0].timestamp is None

    def test_version_comment(self):
        text = "# format_version: 1\n" + blocks_text("1,a,")
        assert len(list(BlockStream(io.StringIO(text)))) == 1

    def test_unsupported_version(self):
        with pytest.raises(FormatError, match="format_version"):
            BlockStream(io.StringIO("# format_version: 9\n" + blocks_text()))

    def test_missing_header(self):
        with pytest.raises(FormatError, match="header"):
            BlockStream(io.StringIO("1,a,\n2,b,\n"))

    def test_empty_file(self):
        with pytest.raises(FormatError, match="missing header"):
            BlockStream(io.StringIO(""))

    @pytest.mark.parametrize("row", ["x,a,", "3,,", "3,a", "-3,a,", "3,a,noon"])
    def test_malformed_row_number(self, row):
        stream = BlockStream(io.StringIO(blocks_text("1,a,", "2,a,", row)))
        with pytest.raises(FormatError, match="row 4"):
            list(stream)

    def test_duplicate_height(self):
        stream = BlockStream(io.StringIO(blocks_text("5,a,", "5,b,")))
        with pytest.raises(DataError, match="duplicate block height 5"):
            list(stream)

    def test_single_consume(self):
        stream = BlockStream(io.StringIO(blocks_text("1,a,")))
        list(stream)
        with pytest.raises(DataError):
            list(stream)

    def test_write_then_read(self, tmp_path):
        path = tmp_path / "b.csv"
        recs = list(fixture_blocks("bitcoin-fig2", seed=2))
        assert write_blocks(recs, path) == 4499
        assert list(load_blocks(path)) == recs

    def test_timestamps_round_trip(self, tmp_path):
        path = tmp_path / "b.csv"
        recs = [BlockRecord(1, "a", 1.25), BlockRecord(2, "b", 7.0), BlockRecord(3, "a")]
        write_blocks(recs, path)
        assert list(load_blocks(path)) == recs

    def test_million_rows_bounded_memory(self, tmp_path):
        path = tmp_path / "big.csv"
        n = 1_000_000
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("height,generator,timestamp\n")
            for h in range(n):
                fh.write(f"{24_000_000 + h},w{h % 21:02d},\n")
        tracemalloc.start()
        try:
            counts = count_blocks(load_blocks(path))
            _, peak = tracemalloc.get_traced_memory()
        finally:
            tracemalloc.stop()
        assert counts.total == n and len(counts.counts) == 21
        # a list of 1M records would need well over 100 MB
        assert peak < 16 * 2**20


class TestSeries:
    def test_json_round_trip(self, tmp_path):
        dist = load_fixture("steem-fig4").distribution()
        path = tmp_path / "s.json"
        save_series(dist, path)
        assert load_series(path) == dist

    def test_csv(self, tmp_path):
        path = tmp_path / "miners.csv"
        path.write_text("id,value\np1,3\np2,9\n")
        d = load_series(path)
        assert d.label == "miners"
        assert d.values == (("p2", 9.0), ("p1", 3.0))

    def test_block_stream_is_counted(self, tmp_path):
        path = tmp_path / "blocks.csv"
        write_blocks(fixture_blocks("bitcoin-fig2"), path)
        d = load_series(path, label="btc")
        assert d.label == "btc" and d.amounts[:2] == [848.0, 661.0]

    @pytest.mark.parametrize(
        "text", ["id,value\np1,abc\n", "id,value\np1,1\np1,2\n", "a,b,c\n", '{"values": 3}', "{oops"]
    )
    def test_rejects(self, tmp_path, text):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(FormatError):
            load_series(path)


class TestFileChainSource:
    def test_fetch(self, tmp_path):
        snap_path, blocks_path = tmp_path / "s.json", tmp_path / "b.csv"
        save_snapshot(loads_snapshot(json.dumps(MINIMAL)), snap_path)
        write_blocks([BlockRecord(h, "w1") for h in range(100, 110)], blocks_path)
        src = FileChainSource(snap_path, blocks_path)
        assert src.fetch_snapshot()["bob"].pure_vests == 100
        assert [r.height for r in src.fetch_blocks(103, 106)] == [103, 104, 105]

    def test_unconfigured(self):
        with pytest.raises(DataError):
            FileChainSource().fetch_snapshot()
        with pytest.raises(DataError):
            list(FileChainSource().fetch_blocks(0, 1))
