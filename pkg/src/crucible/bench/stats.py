"""Aggregation, differentials against a baseline, and the regression gate."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Mapping

from ..errors import CrucibleError

# stats table key: (workload, platform, nprocs, phase)
StatsKey = tuple[str, str, int, str]
# group key: (workload, platform, nprocs)
GroupKey = tuple[str, str, int]


class StatsError(CrucibleError):
    pass


class AllRunsFailed(StatsError):
    pass


class MissingBaseline(StatsError):
    pass


@dataclass(frozen=True)
class PhaseStats:
    mean: float
    std: float
    stderr: float
    n: int


@dataclass(frozen=True)
class Verdict:
    workload: str
    platform: str
    nprocs: int
    percent: float
    threshold: float
    passed: bool


def _phase_stats(samples: list[float]) -> PhaseStats:
    n = len(samples)
    mean = statistics.fmean(samples)
    std = statistics.stdev(samples) if n > 1 else 0.0
    return PhaseStats(mean=mean, std=std, stderr=std / math.sqrt(n), n=n)


def aggregate(records: Iterable) -> dict[StatsKey, PhaseStats]:
    """Per-(workload, platform, nprocs, phase) statistics over runs.

    Failed runs are excluded; a group whose every run failed raises
    AllRunsFailed since silently dropping it would skew comparisons.
    The pseudo-phase "total" aggregates total_seconds.
    """
    records = list(records)
    if not records:
        raise StatsError("no records to aggregate")
    groups: dict[GroupKey, list] = {}
    for rec in records:
        groups.setdefault(rec.key, []).append(rec)

    samples: dict[StatsKey, list[float]] = {}
    for key, group in sorted(groups.items()):
        alive = [r for r in group if not r.failed]
        if not alive:
            raise AllRunsFailed(f"every run failed for {key[0]}/{key[1]} n={key[2]}")
        for rec in alive:
            workload, platform, nprocs = key
            for phase, seconds in rec.phase_seconds.items():
                samples.setdefault((workload, platform, nprocs, phase), []).append(seconds)
            samples.setdefault((workload, platform, nprocs, "total"), []).append(
                rec.total_seconds
            )
    return {key: _phase_stats(values) for key, values in samples.items()}


def differentials(
    stats: Mapping[StatsKey, PhaseStats], baseline: str
) -> dict[GroupKey, float]:
    """Percent total-time overhead of each platform against the baseline.

    positive = slower than baseline. Baseline rows are included at 0.0
    (exactly: they are compared against themselves).
    """
    totals = {
        (w, p, n): st for (w, p, n, phase), st in stats.items() if phase == "total"
    }
    if not any(p == baseline for (_, p, _) in totals):
        raise MissingBaseline(f"no records for baseline platform {baseline!r}")
    diffs: dict[GroupKey, float] = {}
    for (workload, platform, nprocs), st in sorted(totals.items()):
        base = totals.get((workload, baseline, nprocs))
        if base is None:
            raise MissingBaseline(
                f"baseline {baseline!r} has no records for {workload} n={nprocs}"
            )
        diffs[(workload, platform, nprocs)] = 100.0 * (st.mean - base.mean) / base.mean
    return diffs


def regression_check(
    diffs: Mapping[GroupKey, float],
    threshold: float,
    per_platform: Mapping[str, float] | None = None,
) -> list[Verdict]:
    """Gate differentials: fail a row iff its overhead exceeds the threshold.

    Exceeds means strictly greater, so a platform sitting exactly on the
    limit passes. per_platform overrides the global threshold for named
    platforms. Verdicts come back sorted by (workload, nprocs, platform).
    """
    per_platform = per_platform or {}
    verdicts = []
    for (workload, platform, nprocs), percent in sorted(
        diffs.items(), key=lambda kv: (kv[0][0], kv[0][2], kv[0][1])
    ):
        limit = per_platform.get(platform, threshold)
        verdicts.append(
            Verdict(
                workload=workload,
                platform=platform,
                nprocs=nprocs,
                percent=percent,
                threshold=limit,
                passed=percent <= limit,
            )
        )
    return verdicts
