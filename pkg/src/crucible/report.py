"""Report emitters.

Everything here renders aggregated statistics to plain text: a CSV
table, plot-data blocks for external plotting tools, and an aligned
terminal summary. All numbers derive from the records file alone, and
emission is deterministic: the same statistics always produce the same
bytes, with LF line endings and floats at six significant digits.

Plot data is line-oriented so gnuplot or a notebook can consume it:

    <group label>
    <bar label> <value> <error> [TRUNCATED]
    ...
    <blank line>

grouped-bars lays out one group per workload with one bar per platform
(total seconds), the shape used for platform-overhead comparisons.
stacked-bars lays out one group per (nprocs, platform) with one segment
per phase, the shape used for scaling studies. A value exceeding the
axis cap is flagged TRUNCATED rather than silently squashing the rest
of the axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .bench.stats import PhaseStats, StatsKey, Verdict
from .errors import CrucibleError

CSV_HEADER = "workload,platform,nprocs,phase,mean_s,std_s,stderr_s,n"
TRUNCATED_MARK = "TRUNCATED"


class ReportError(CrucibleError):
    pass


class WriteFailure(ReportError):
    pass


class InconsistentSpec(ReportError):
    pass


class BadCsv(ReportError):
    pass


@dataclass(frozen=True)
class PlotSpec:
    """Layout request for plot data.

    bar_segments names the phases drawn: for grouped-bars exactly one
    (the bar height), for stacked-bars the stack order. axis_cap marks
    values above it as truncated; None disables truncation.
    """

    kind: str = "grouped-bars"
    bar_segments: tuple[str, ...] = ("total",)
    error_bars: bool = True
    axis_cap: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("grouped-bars", "stacked-bars"):
            raise InconsistentSpec(f"unknown plot kind {self.kind!r}")
        if not self.bar_segments:
            raise InconsistentSpec("bar_segments must name at least one phase")
        if self.kind == "grouped-bars" and len(self.bar_segments) != 1:
            raise InconsistentSpec("grouped-bars takes exactly one segment phase")
        if self.axis_cap is not None and self.axis_cap <= 0:
            raise InconsistentSpec("axis_cap must be positive")


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def render_csv(stats: Mapping[StatsKey, PhaseStats]) -> str:
    rows = [CSV_HEADER]
    for (workload, platform, nprocs, phase) in sorted(
        stats, key=lambda k: (k[0], k[2], k[1], k[3])
    ):
        st = stats[(workload, platform, nprocs, phase)]
        rows.append(
            f"{workload},{platform},{nprocs},{phase},"
            f"{_fmt(st.mean)},{_fmt(st.std)},{_fmt(st.stderr)},{st.n}"
        )
    return "".join(row + "\n" for row in rows)


def emit_csv(stats: Mapping[StatsKey, PhaseStats], path: Path | str) -> None:
    try:
        Path(path).write_text(render_csv(stats))
    except OSError as exc:
        raise WriteFailure(f"cannot write {path}: {exc}") from None


def read_csv(path: Path | str) -> dict[StatsKey, PhaseStats]:
    """Parse a stats CSV back into a table (round-trips byte-exactly)."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise BadCsv(f"cannot read {path}: {exc}") from None
    if not lines or lines[0] != CSV_HEADER:
        raise BadCsv(f"{path} lacks the expected header")
    stats: dict[StatsKey, PhaseStats] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 8:
            raise BadCsv(f"{path}:{lineno}: expected 8 columns")
        workload, platform, nprocs, phase, mean, std, stderr, n = parts
        try:
            stats[(workload, platform, int(nprocs), phase)] = PhaseStats(
                mean=float(mean), std=float(std), stderr=float(stderr), n=int(n)
            )
        except ValueError as exc:
            raise BadCsv(f"{path}:{lineno}: {exc}") from None
    return stats


def _groups(stats: Mapping[StatsKey, PhaseStats]) -> dict[tuple[str, str, int], dict[str, PhaseStats]]:
    by_group: dict[tuple[str, str, int], dict[str, PhaseStats]] = {}
    for (workload, platform, nprocs, phase), st in stats.items():
        by_group.setdefault((workload, platform, nprocs), {})[phase] = st
    return by_group


def _line(label: str, st: PhaseStats, spec: PlotSpec) -> str:
    error = st.stderr if spec.error_bars else 0.0
    line = f"{label} {_fmt(st.mean)} {_fmt(error)}"
    if spec.axis_cap is not None and st.mean > spec.axis_cap:
        line += f" {TRUNCATED_MARK}"
    return line


def render_plot_data(stats: Mapping[StatsKey, PhaseStats], spec: PlotSpec) -> str:
    groups = _groups(stats)
    workloads = sorted({w for (w, _, _) in groups})
    nprocs_values = sorted({n for (_, _, n) in groups})
    blocks: list[str] = []

    if spec.kind == "grouped-bars":
        phase = spec.bar_segments[0]
        for workload in workloads:
            for nprocs in nprocs_values:
                bars = {
                    p: phases
                    for (w, p, n), phases in groups.items()
                    if w == workload and n == nprocs
                }
                if not bars:
                    continue
                label = workload if len(nprocs_values) == 1 else f"{workload}@{nprocs}"
                lines = [label]
                for platform in sorted(bars):
                    if phase not in bars[platform]:
                        raise InconsistentSpec(
                            f"no phase {phase!r} for {workload}/{platform} n={nprocs}"
                        )
                    lines.append(_line(platform, bars[platform][phase], spec))
                blocks.append("\n".join(lines))
    else:
        for workload in workloads:
            for nprocs in nprocs_values:
                for (w, platform, n), phases in sorted(groups.items()):
                    if w != workload or n != nprocs:
                        continue
                    label = f"{nprocs}({platform})"
                    if len(workloads) > 1:
                        label = f"{workload} {label}"
                    lines = [label]
                    for phase in spec.bar_segments:
                        if phase not in phases:
                            raise InconsistentSpec(
                                f"no phase {phase!r} for {workload}/{platform} n={nprocs}"
                            )
                        lines.append(_line(phase, phases[phase], spec))
                    blocks.append("\n".join(lines))

    return "\n\n".join(blocks) + "\n"


def emit_plot_data(
    stats: Mapping[StatsKey, PhaseStats], spec: PlotSpec, path: Path | str
) -> None:
    try:
        Path(path).write_text(render_plot_data(stats, spec))
    except OSError as exc:
        raise WriteFailure(f"cannot write {path}: {exc}") from None


def render_summary(
    stats: Mapping[StatsKey, PhaseStats],
    diffs: Mapping[tuple[str, str, int], float] | None = None,
    verdicts: list[Verdict] | None = None,
) -> str:
    """Aligned per-group summary of total times, overheads and verdicts."""
    verdict_by_key = {
        (v.workload, v.platform, v.nprocs): v for v in (verdicts or [])
    }
    rows = [("WORKLOAD", "PLATFORM", "NPROCS", "TOTAL_S", "STDERR", "RUNS", "DIFF%", "GATE")]
    totals = {
        (w, p, n): st for (w, p, n, phase), st in stats.items() if phase == "total"
    }
    for (workload, platform, nprocs) in sorted(totals, key=lambda k: (k[0], k[2], k[1])):
        st = totals[(workload, platform, nprocs)]
        key = (workload, platform, nprocs)
        diff = f"{diffs[key]:+.1f}" if diffs and key in diffs else "-"
        verdict = verdict_by_key.get(key)
        gate = "-" if verdict is None else ("PASS" if verdict.passed else "FAIL")
        rows.append(
            (
                workload,
                platform,
                str(nprocs),
                _fmt(st.mean),
                _fmt(st.stderr),
                str(st.n),
                diff,
                gate,
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    out = []
    for row in rows:
        out.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
    return "".join(line + "\n" for line in out)
