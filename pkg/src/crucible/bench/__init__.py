"""Benchmark campaigns: run workloads across platforms, record timings."""

from .campaign import Campaign, Platform, Workload, load_campaign
from .mockmodel import TimingModel, load_model
from .runner import run_campaign
from .stats import (
    AllRunsFailed,
    MissingBaseline,
    PhaseStats,
    Verdict,
    aggregate,
    differentials,
    regression_check,
)
from .timings import (
    NegativeTiming,
    NoTimingsFound,
    TimingRecord,
    format_records,
    parse_records,
    parse_timings,
    read_records,
    write_records,
)

__all__ = [
    "Campaign",
    "Platform",
    "Workload",
    "load_campaign",
    "TimingModel",
    "load_model",
    "run_campaign",
    "AllRunsFailed",
    "MissingBaseline",
    "PhaseStats",
    "Verdict",
    "aggregate",
    "differentials",
    "regression_check",
    "NegativeTiming",
    "NoTimingsFound",
    "TimingRecord",
    "format_records",
    "parse_records",
    "parse_timings",
    "read_records",
    "write_records",
]
