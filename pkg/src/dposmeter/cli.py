"""``dposmeter`` command line.

Data goes to stdout, diagnostics to stderr. Every command is deterministic
for fixed flags and input bytes.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import click

from . import fixtures as fx
from .attribution import AllocationMode, GeneratorCounts, count_blocks, reallocate_snapshot, round_shares
from .election import (
    DEFAULT_PROXY_DEPTH,
    MAX_PROXY_DEPTH,
    active_net,
    elect,
    rank,
    resolve_net_vests,
    stakeholder_power,
    witness_power,
)
from .errors import DposmeterError, ValidationError
from .ingest import BlockStream, load_series, load_snapshot, save_series, save_snapshot, write_blocks
from .ledger import LedgerSnapshot
from .metrics import Distribution, compare

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FORMATS = ("table", "csv", "json")
DEFAULT_R_VALUES = (10, 20, 30)
DEFAULT_SEED = 42


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    inputs: tuple[str, ...] = ()
    output_format: str = "table"
    mode: AllocationMode = AllocationMode.GLOBAL_PROPORTIONAL
    proxy_depth: int = DEFAULT_PROXY_DEPTH
    r_values: tuple[int, ...] = DEFAULT_R_VALUES
    seed: int = DEFAULT_SEED
    top: Optional[int] = None

    def __post_init__(self) -> None:
        if self.output_format not in FORMATS:
            raise click.BadParameter(f"format must be one of {FORMATS}")
        if not self.r_values or any(r <= 0 for r in self.r_values):
            raise click.BadParameter("r-values must be positive integers")
        if list(self.r_values) != sorted(set(self.r_values)):
            object.__setattr__(self, "r_values", tuple(sorted(set(self.r_values))))


def parse_r_values(text: str | Sequence[int]) -> tuple[int, ...]:
    if isinstance(text, str):
        try:
            values = [int(part) for part in text.split(",") if part.strip()]
        except ValueError:
            raise click.BadParameter(f"expected comma-separated integers, got {text!r}") from None
    else:
        values = [int(v) for v in text]
    if not values or any(v <= 0 for v in values):
        raise click.BadParameter(f"r-values must be positive integers, got {text!r}")
    return tuple(sorted(set(values)))


def pct(x: float) -> str:
    return f"{100 * x:.1f}%"


def num(x: float) -> str:
    if abs(x) >= 1e7:
        return f"{x:.3e}"
    if float(x).is_integer():
        return str(int(x))
    return f"{x:.2f}"


def render(headers: Sequence[str], rows: Iterable[Sequence], fmt: str, *, meta: Optional[dict] = None) -> str:
    rows = [list(r) for r in rows]
    if fmt == "json":
        doc = dict(meta or {})
        doc["rows"] = [dict(zip(headers, r)) for r in rows]
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(headers)
        w.writerows(rows)
        return buf.getvalue()
    cells = [[str(h) for h in headers]] + [[c if isinstance(c, str) else num(c) for c in r] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = []
    for n, row in enumerate(cells):
        lines.append("  ".join(c.rjust(widths[i]) if i else c.ljust(widths[i]) for i, c in enumerate(row)).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _fail(exc: Exception) -> click.ClickException:
    if isinstance(exc, ValidationError):
        detail = "\n".join(f"  {v}" for v in exc.violations)
        return click.ClickException(f"snapshot failed validation:\n{detail}")
    return click.ClickException(str(exc))


def _guard(fn: Callable) -> Callable:
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (DposmeterError, OSError) as exc:
            raise _fail(exc) from exc

    return wrapper


def _read_counts(path: str) -> GeneratorCounts:
    if os.path.getsize(path) == 0:
        return GeneratorCounts({}, 0)
    with BlockStream(path) as stream:
        return count_blocks(stream)


def _load_snapshot(spec: str) -> LedgerSnapshot:
    if spec.startswith("fixture:"):
        snap = fx.load_fixture(spec.split(":", 1)[1])
        if not isinstance(snap, LedgerSnapshot):
            raise click.BadParameter(f"{spec} is not a ledger snapshot fixture")
        return snap
    return load_snapshot(spec)


def _load_series(spec: str) -> Distribution:
    if spec.startswith("fixture:"):
        fixture = fx.load_fixture(spec.split(":", 1)[1])
        if isinstance(fixture, LedgerSnapshot):
            raise click.BadParameter(f"{spec} is a snapshot, not a series")
        return fixture.distribution()
    return load_series(spec)


format_option = click.option(
    "--format", "output_format", type=click.Choice(FORMATS), default="table", show_default=True
)
depth_option = click.option(
    "--proxy-depth",
    type=click.IntRange(1, MAX_PROXY_DEPTH),
    default=DEFAULT_PROXY_DEPTH,
    show_default=True,
    help="Maximum number of proxy hops followed.",
)


def _load_config(ctx: click.Context, _param, value: Optional[str]):
    if value is None:
        return None
    try:
        with open(value, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise click.BadParameter(f"cannot read config {value}: {exc}") from None
    # [count], [power], ... tables become per-command defaults; flags still win
    defaults = {}
    for cmd, opts in data.items():
        if not isinstance(opts, dict):
            continue
        command = cli.commands.get(cmd)
        if command is None:
            raise click.BadParameter(f"{value}: unknown command table [{cmd}]")
        # keys are flag names ("format", "proxy-depth"); map them to parameter names
        names = {o.lstrip("-"): p.name for p in command.params for o in p.opts if o.startswith("--")}
        names.update({o.lstrip("-").replace("-", "_"): p.name for p in command.params for o in p.opts})
        unknown = sorted(set(opts) - set(names))
        if unknown:
            raise click.BadParameter(f"{value}: [{cmd}] has unknown key(s) {unknown}")
        defaults[cmd] = {names[k]: v for k, v in opts.items()}
    ctx.default_map = defaults
    return value


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option(
    "--config",
    type=click.Path(dir_okay=False),
    callback=_load_config,
    is_eager=True,
    expose_value=False,
    help="TOML file with one table per subcommand mirroring its flags.",
)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose: bool) -> None:
    """Measure how decentralized block production is in PoW and DPoS chains."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )


@cli.command("count")
@click.argument("blocks", type=click.Path(exists=True, dir_okay=False))
@click.option("--top", type=click.IntRange(min=1), default=None, help="Only show the N largest generators.")
@format_option
@_guard
def cmd_count(blocks: str, top: Optional[int], output_format: str) -> None:
    """Tally blocks per generator in a block stream CSV."""
    cfg = RunConfig("count", (blocks,), output_format, top=top)
    counts = _read_counts(blocks)
    ranked = counts.ranked()[: cfg.top]
    rows = [
        (i, g, n, pct(n / counts.total) if cfg.output_format == "table" else n / counts.total)
        for i, (g, n) in enumerate(ranked, 1)
    ]
    click.echo(
        render(("rank", "generator", "blocks", "share"), rows, cfg.output_format, meta={"total": counts.total}),
        nl=False,
    )
    if cfg.output_format == "table":
        click.echo(f"total blocks: {counts.total}")


@cli.command("power")
@click.argument("snapshot")
@click.option(
    "--basis", type=click.Choice(["stakeholder", "witness"]), default="stakeholder", show_default=True
)
@depth_option
@click.option("--top", type=click.IntRange(min=1), default=None)
@format_option
@_guard
def cmd_power(snapshot: str, basis: str, proxy_depth: int, top: Optional[int], output_format: str) -> None:
    """Rank accounts by accumulated vote weight.

    SNAPSHOT is a snapshot JSON file or ``fixture:steem-snapshot``.
    """
    cfg = RunConfig("power", (snapshot,), output_format, proxy_depth=proxy_depth, top=top)
    snap = _load_snapshot(snapshot)
    net = resolve_net_vests(snap, cfg.proxy_depth)
    if net.unresolved_vests:
        click.echo(f"warning: {num(net.unresolved_vests)} VESTS unresolved (proxy depth/cycles)", err=True)
    if basis == "stakeholder":
        power = stakeholder_power(snap, net)
        headers = ("rank", "account", "net_vests", "votes", "accumulated_vests")
        rows = [
            (i, a, net[a], snap[a].vote_count, p)
            for i, (a, p) in enumerate(rank(power)[: cfg.top], 1)
        ]
    else:
        power = witness_power(snap, net)
        voters: dict[str, int] = {}
        for acct in snap.accounts.values():
            if acct.proxy is None:
                for w in acct.witness_votes:
                    voters[w] = voters.get(w, 0) + 1
        headers = ("rank", "witness", "voters", "accumulated_vests")
        rows = [(i, w, voters.get(w, 0), p) for i, (w, p) in enumerate(rank(power)[: cfg.top], 1)]
    if not power.entries:
        click.echo(f"warning: no {basis} has any vote weight", err=True)
    meta = {"basis": basis, "proxy_depth": cfg.proxy_depth, "unresolved_vests": net.unresolved_vests}
    click.echo(render(headers, rows, cfg.output_format, meta=meta), nl=False)


@cli.command("allocate")
@click.argument("snapshot")
@click.argument("blocks", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--mode",
    type=click.Choice([m.value for m in AllocationMode]),
    default=AllocationMode.GLOBAL_PROPORTIONAL.value,
    show_default=True,
)
@click.option(
    "--rank-by",
    type=click.Choice(["blocks", "net"]),
    default="blocks",
    show_default=True,
    help="Order by allocated blocks or by net VESTS among direct voters.",
)
@depth_option
@click.option("--top", type=click.IntRange(min=1), default=None)
@format_option
@_guard
def cmd_allocate(
    snapshot: str, blocks: str, mode: str, rank_by: str, proxy_depth: int, top: Optional[int], output_format: str
) -> None:
    """Re-allocate produced blocks to the stakeholders who elected the producers."""
    cfg = RunConfig(
        "allocate", (snapshot, blocks), output_format, mode=AllocationMode(mode), proxy_depth=proxy_depth, top=top
    )
    snap = _load_snapshot(snapshot)
    counts = _read_counts(blocks)
    result = reallocate_snapshot(snap, counts, cfg.mode, cfg.proxy_depth)
    net = resolve_net_vests(snap, cfg.proxy_depth)
    if rank_by == "net":
        order = [a for a, _ in rank(active_net(snap, net)) if a in result.shares]
    else:
        order = [a for a, _ in rank(result.shares)]
    rounded = round_shares(result.shares)
    rows = []
    for i, a in enumerate(order[: cfg.top], 1):
        share = result.fraction(a)
        rows.append((
            i, a, net[a], snap[a].vote_count, result.shares[a], rounded.get(a, 0),
            pct(share) if cfg.output_format == "table" else share,
        ))
    meta = {
        "mode": cfg.mode.value,
        "total": result.total,
        "allocated": result.allocated,
        "unallocated": result.unallocated,
        "unattributed": dict(sorted(result.unattributed.items())),
        "zero_power_witnesses": dict(sorted(result.zero_power_witnesses.items())),
    }
    headers = ("rank", "stakeholder", "net_vests", "votes", "blocks", "blocks_rounded", "overall_share")
    click.echo(render(headers, rows, cfg.output_format, meta=meta), nl=False)
    if cfg.output_format == "table":
        click.echo(
            f"total {num(result.total)}  allocated {result.allocated:.2f}  unallocated {result.unallocated:.2f}"
        )
    if result.unattributed:
        names = sorted(result.unattributed)
        more = f" (+{len(names) - 5} more)" if len(names) > 5 else ""
        click.echo(
            f"warning: {len(names)} generator(s) not in the witness table: {', '.join(names[:5])}{more}",
            err=True,
        )


@cli.command("entropy")
@click.option(
    "--series",
    "series",
    multiple=True,
    required=True,
    help="Series JSON, id,value CSV, block stream CSV, or fixture:NAME. Repeatable.",
)
@click.option("--r", "r_text", default="10,20,30", show_default=True, help="Comma-separated top-r ranges.")
@click.option("--units", type=click.Choice(["bits", "nats"]), default="bits", show_default=True)
@click.option("--plot-data", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Write the normalized overlay (rank vs. value per series) as CSV.")
@format_option
@_guard
def cmd_entropy(series: Sequence[str], r_text: str, units: str, plot_data: Optional[str], output_format: str) -> None:
    """Top-r Shannon entropy of one or more ranked series."""
    cfg = RunConfig("entropy", tuple(series), output_format, r_values=parse_r_values(r_text))
    dists = [_load_series(s) for s in cfg.inputs]
    report = compare(dists, cfg.r_values)
    doc = report.to_dict(units)
    overlay_headers = ["rank"] + [label for label, _ in report.series]
    depth = max(len(v) for _, v in report.series)
    overlay = [
        [k + 1] + [values[k] if k < len(values) else "" for _, values in report.series]
        for k in range(depth)
    ]
    if plot_data:
        with open(plot_data, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(overlay_headers)
            w.writerows(overlay)

    if cfg.output_format == "json":
        if len(dists) < 2:
            doc.pop("normalized")
        click.echo(json.dumps(doc, indent=2))
        return
    headers = ("series", "r", f"entropy_{units}", "top_r_share")
    rows = [
        (e["label"], e["r"], f"{e['entropy']:.4f}" if cfg.output_format == "table" else e["entropy"],
         pct(e["top_r_share"]) if cfg.output_format == "table" else e["top_r_share"])
        for e in doc["entropy"]
    ]
    click.echo(render(headers, rows, cfg.output_format), nl=False)
    if len(dists) >= 2 and cfg.output_format == "table":
        click.echo()
        shown = [[r[0]] + [f"{v:.4f}" if isinstance(v, float) else v for v in r[1:]] for r in overlay]
        click.echo(render(overlay_headers, shown, "table"), nl=False)


@cli.command("elect")
@click.argument("snapshot")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--uniform-seat", is_flag=True, help="Draw the 21st seat uniformly instead of by power.")
@depth_option
@format_option
@_guard
def cmd_elect(snapshot: str, seed: int, uniform_seat: bool, proxy_depth: int, output_format: str) -> None:
    """Compute the 21-member producer group for a snapshot."""
    cfg = RunConfig("elect", (snapshot,), output_format, proxy_depth=proxy_depth, seed=seed)
    snap = _load_snapshot(snapshot)
    net = resolve_net_vests(snap, cfg.proxy_depth)
    schedule = elect(snap, net, cfg.seed, uniform_seat=uniform_seat)
    power = witness_power(snap, net)
    rows = [(i, w, "top20", power[w]) for i, w in enumerate(schedule.top20, 1)]
    rows.append((21, schedule.random_seat, "random", power[schedule.random_seat]))
    meta = {"seed": cfg.seed, "uniform_seat": uniform_seat}
    click.echo(render(("seat", "witness", "kind", "accumulated_vests"), rows, cfg.output_format, meta=meta), nl=False)


@cli.group("fixture")
def fixture_group() -> None:
    """Inspect and export the built-in datasets."""


@fixture_group.command("list")
def fixture_list() -> None:
    for name in fx.FIXTURE_NAMES:
        item = fx.load_fixture(name)
        if isinstance(item, LedgerSnapshot):
            click.echo(f"{name}\tsnapshot\t{len(item)} accounts at block {item.block_height}")
        else:
            click.echo(f"{name}\tfig. {item.figure}\t{item.label} ({item.unit}, {len(item.entries)} entries)")


@fixture_group.command("export")
@click.argument("name")
@click.argument("output", type=click.Path(dir_okay=False, writable=True))
@click.option("--blocks", is_flag=True, help="Export a synthetic block stream (bitcoin-fig2, steem-fig3).")
@click.option("--seed", type=int, default=0, show_default=True, help="Shuffle seed for --blocks.")
@_guard
def fixture_export(name: str, output: str, blocks: bool, seed: int) -> None:
    """Write fixture NAME to OUTPUT (snapshot JSON, series JSON or block CSV)."""
    if blocks:
        n = write_blocks(fx.fixture_blocks(name, seed), output)
        click.echo(f"wrote {n} blocks to {output}", err=True)
        return
    item = fx.load_fixture(name)
    if isinstance(item, LedgerSnapshot):
        save_snapshot(item, output)
    else:
        save_series(item.distribution(), output)
    click.echo(f"wrote {name} to {output}", err=True)


def main(argv: Optional[Sequence[str]] = None) -> None:
    cli.main(args=argv, prog_name="dposmeter")


if __name__ == "__main__":
    main()
