"""Workload timing protocol and the records file.

Workloads report phase timings on stdout, one line per phase:

    TIMING <phase> <seconds>
    TOTAL <seconds>

Duplicate phase lines accumulate. A missing TOTAL defaults to the sum
of the phases. Whatever the total covers beyond the named phases is
kept as the pseudo-phase "other"; interpreter start-up and import cost
live there, and on large parallel runs that bucket is the interesting
number.

Records persist as tab-separated lines

    workload  platform  nprocs  run_index  phase  seconds

with one line per phase, then "other", then "total". A failed run
yields a single line with phase "failed" carrying the exit code. The
format is deterministic: same records in, same bytes out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import CrucibleError

RESERVED_PHASES = ("total", "other", "failed")
# small float slack when checking totals against phase sums
EPSILON = 1e-9


class TimingError(CrucibleError):
    pass


class NoTimingsFound(TimingError):
    pass


class NegativeTiming(TimingError):
    pass


class BadRecordsFile(TimingError):
    pass


@dataclass
class TimingRecord:
    """One run of one workload on one platform."""

    workload: str
    platform: str
    nprocs: int
    run_index: int
    phase_seconds: dict[str, float] = field(default_factory=dict)
    total_seconds: float = 0.0
    failed: bool = False
    exit_code: int = 0

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.workload, self.platform, self.nprocs)


def parse_timings(output: str, phases: Sequence[str] = ()) -> tuple[dict[str, float], float]:
    """Extract (phase_seconds, total_seconds) from workload output.

    Lines other than TIMING/TOTAL are ignored, so workloads may print
    whatever else they like. The returned dict is ordered: expected
    phases first (in the given order), then any extra reported phases
    in report order, then "other" holding the unattributed remainder.
    """
    seen: dict[str, float] = {}
    total: float | None = None
    for line in output.splitlines():
        parts = line.split()
        if len(parts) == 3 and parts[0] == "TIMING":
            try:
                value = float(parts[2])
            except ValueError:
                continue
            if value < 0:
                raise NegativeTiming(f"phase {parts[1]!r} reported {value}")
            seen[parts[1]] = seen.get(parts[1], 0.0) + value
        elif len(parts) == 2 and parts[0] == "TOTAL":
            try:
                value = float(parts[1])
            except ValueError:
                continue
            if value < 0:
                raise NegativeTiming(f"total reported {value}")
            total = value
    if not seen and total is None:
        raise NoTimingsFound("output contains no TIMING or TOTAL lines")

    phase_sum = sum(seen.values())
    if total is None:
        total = phase_sum

    ordered: dict[str, float] = {}
    for name in phases:
        ordered[name] = seen.pop(name, 0.0)
    ordered.update(seen)
    ordered["other"] = max(0.0, total - phase_sum)
    return ordered, total


def _format_seconds(value: float) -> str:
    return f"{value:.9g}"


def format_records(records: Iterable[TimingRecord]) -> str:
    lines: list[str] = []
    for rec in records:
        head = f"{rec.workload}\t{rec.platform}\t{rec.nprocs}\t{rec.run_index}"
        if rec.failed:
            lines.append(f"{head}\tfailed\t{rec.exit_code}")
            continue
        for phase, seconds in rec.phase_seconds.items():
            lines.append(f"{head}\t{phase}\t{_format_seconds(seconds)}")
        lines.append(f"{head}\ttotal\t{_format_seconds(rec.total_seconds)}")
    return "".join(line + "\n" for line in lines)


def write_records(records: Iterable[TimingRecord], path: Path | str) -> None:
    Path(path).write_text(format_records(records))


def parse_records(text: str, source: str = "<records>") -> list[TimingRecord]:
    by_run: dict[tuple[str, str, int, int], TimingRecord] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise BadRecordsFile(f"{source}:{lineno}: expected 6 tab-separated fields")
        workload, platform, nprocs_s, run_s, phase, value_s = parts
        try:
            nprocs, run_index = int(nprocs_s), int(run_s)
        except ValueError as exc:
            raise BadRecordsFile(f"{source}:{lineno}: {exc}") from None
        key = (workload, platform, nprocs, run_index)
        rec = by_run.get(key)
        if rec is None:
            rec = TimingRecord(workload, platform, nprocs, run_index)
            by_run[key] = rec
        if phase == "failed":
            rec.failed = True
            rec.exit_code = int(value_s)
            continue
        try:
            value = float(value_s)
        except ValueError as exc:
            raise BadRecordsFile(f"{source}:{lineno}: {exc}") from None
        if value < 0:
            raise BadRecordsFile(f"{source}:{lineno}: negative seconds")
        if phase == "total":
            rec.total_seconds = value
        else:
            rec.phase_seconds[phase] = value
    return list(by_run.values())


def read_records(path: Path | str) -> list[TimingRecord]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise BadRecordsFile(f"cannot read {path}: {exc}") from None
    records = parse_records(text, str(path))
    if not records:
        raise BadRecordsFile(f"{path} contains no records")
    return records
