"""Normalization, top-r Shannon entropy and summary statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

from .errors import DegenerateInputError, DomainError, RangeError


@dataclass(frozen=True)
class Distribution:
    """Blocks (or stake) per generator, ranked descending.

    ``tail_total`` holds mass belonging to entries that are not listed
    individually (e.g. the million small stakeholders behind a top-30
    chart). It counts towards shares but never towards top-r entropy.
    """

    label: str
    values: tuple[tuple[str, float], ...]
    tail_total: float = 0.0

    def __post_init__(self) -> None:
        values = tuple((str(i), float(v)) for i, v in self.values)
        object.__setattr__(self, "values", values)
        for i, (ident, v) in enumerate(values):
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{self.label}: value for {ident!r} must be finite and >= 0, got {v}")
            if i:
                prev_id, prev_v = values[i - 1]
                if v > prev_v or (v == prev_v and ident < prev_id):
                    raise DomainError(f"{self.label}: entries out of rank order at rank {i + 1}")
        if not math.isfinite(self.tail_total) or self.tail_total < 0:
            raise DomainError(f"{self.label}: tail_total must be finite and >= 0")

    @classmethod
    def from_mapping(
        cls, label: str, mapping: Mapping[str, float], tail_total: float = 0.0
    ) -> "Distribution":
        ordered = sorted(mapping.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls(label, tuple(ordered), tail_total)

    @classmethod
    def from_values(cls, label: str, values: Iterable[float]) -> "Distribution":
        """Anonymous series; ids are the 1-based input positions, zero-padded."""
        values = list(values)
        width = max(len(str(len(values))), 1)
        return cls.from_mapping(label, {str(i + 1).zfill(width): v for i, v in enumerate(values)})

    def __len__(self) -> int:
        return len(self.values)

    @property
    def ids(self) -> list[str]:
        return [i for i, _ in self.values]

    @property
    def amounts(self) -> list[float]:
        return [v for _, v in self.values]

    @property
    def total(self) -> float:
        return math.fsum(self.amounts) + self.tail_total

    def top(self, r: int) -> list[float]:
        return self.amounts[:r]


def _check_r(dist: Distribution, r: int) -> None:
    if isinstance(r, bool) or not isinstance(r, int) or r < 1:
        raise RangeError(f"r must be a positive integer, got {r!r}")
    if r > len(dist):
        raise RangeError(f"r={r} exceeds the {len(dist)} entries of {dist.label!r}")


def normalize(dist: Distribution) -> list[float]:
    """Divide every value by the rank-1 value."""
    if not dist.values or dist.values[0][1] <= 0:
        raise DegenerateInputError(f"{dist.label!r} is empty or all zero; cannot normalize")
    head = dist.values[0][1]
    return [v / head for v in dist.amounts]


def shannon_entropy(dist: Distribution, r: int) -> float:
    """Entropy in bits of the top-``r`` entries, renormalized among themselves."""
    _check_r(dist, r)
    top = dist.top(r)
    s = math.fsum(top)
    if s <= 0:
        raise DegenerateInputError(f"top-{r} of {dist.label!r} sums to zero")
    h = 0.0
    for b in top:
        p = b / s
        if p > 0:  # a subnormal b can underflow to 0 here
            h -= p * math.log2(p)
    # -p log p summed in floating point can land a hair outside [0, log2 r]
    return min(max(h, 0.0), math.log2(r))


class DistributionStats(NamedTuple):
    mean: float
    std: float
    top_r_share: float


def distribution_stats(dist: Distribution, r: int) -> DistributionStats:
    """Mean and population std of the top-``r`` values, and their share of the total."""
    _check_r(dist, r)
    top = dist.top(r)
    mean = math.fsum(top) / r
    var = math.fsum((v - mean) ** 2 for v in top) / r
    total = dist.total
    share = math.fsum(top) / total if total > 0 else 0.0
    return DistributionStats(mean, math.sqrt(var), share)


class EntropyRow(NamedTuple):
    r: int
    entropy_bits: float
    top_r_share: float


@dataclass(frozen=True)
class EntropyReport:
    label: str
    rows: tuple[EntropyRow, ...]


def entropy_report(dist: Distribution, r_values: Sequence[int]) -> EntropyReport:
    rows = tuple(
        EntropyRow(r, shannon_entropy(dist, r), distribution_stats(dist, r).top_r_share)
        for r in r_values
    )
    return EntropyReport(dist.label, rows)


@dataclass(frozen=True)
class ComparisonReport:
    reports: tuple[EntropyReport, ...]
    series: tuple[tuple[str, tuple[float, ...]], ...]

    def entropy(self, label: str, r: int) -> float:
        for rep in self.reports:
            if rep.label == label:
                for row in rep.rows:
                    if row.r == r:
                        return row.entropy_bits
        raise KeyError((label, r))

    def to_dict(self, units: str = "bits") -> dict:
        """Plain-data form used for JSON output.

        ``units="nats"`` rescales entropy to natural-log units; everything
        is computed in bits.
        """
        if units not in ("bits", "nats"):
            raise DomainError(f"units must be 'bits' or 'nats', got {units!r}")
        factor = math.log(2) if units == "nats" else 1.0
        return {
            "units": units,
            "entropy": [
                {
                    "label": rep.label,
                    "r": row.r,
                    "entropy": row.entropy_bits * factor,
                    "top_r_share": row.top_r_share,
                }
                for rep in self.reports
                for row in rep.rows
            ],
            "normalized": [
                {"label": label, "values": list(values)} for label, values in self.series
            ],
        }


def compare(dists: Sequence[Distribution], r_values: Sequence[int] = (10, 20, 30)) -> ComparisonReport:
    r_values = sorted(set(r_values))
    reports = tuple(entropy_report(d, r_values) for d in dists)
    series = tuple((d.label, tuple(normalize(d))) for d in dists)
    return ComparisonReport(reports, series)
