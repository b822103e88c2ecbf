"""Campaign execution.

Runs are strictly sequential (workload, then platform, then process
count, then repetition) so concurrent containers never fight for cores
and record order is deterministic. Warmup runs execute and are thrown
away; with JIT-compiled solver assembly the first run pays one-off
compilation costs that would poison the statistics.
"""

from __future__ import annotations

import logging

from ..executor import Executor, RealExecutor
from ..hpc import plan_hpc_job
from ..launch import BackendKind, LaunchSpec, synthesize_command
from .campaign import Campaign, CampaignError, Platform, Workload
from .timings import TimingRecord, parse_timings

log = logging.getLogger(__name__)

_CONTAINER_KINDS = (BackendKind.DOCKER, BackendKind.RKT, BackendKind.MOCK)


def _default_scheduler(platform: Platform) -> str:
    if platform.scheduler is not None:
        return platform.scheduler
    return "slurm-srun" if platform.backend.kind is BackendKind.SHIFTER else "mpirun"


def synthesize_run_argv(
    campaign: Campaign, workload: Workload, platform: Platform, nprocs: int
) -> tuple[str, ...]:
    """The argv one benchmark run would execute.

    Single-process container runs are plain launches. Parallel runs on
    shifter or native go through the host launcher; parallel runs on
    docker-style backends wrap the command in mpirun inside one
    container, since those runtimes have no multi-node story.
    """
    kind = platform.backend.kind
    image = platform.backend.options.get("image", campaign.image_ref)
    spec = LaunchSpec(image_ref=image, command=workload.command)

    if kind in _CONTAINER_KINDS and nprocs == 1:
        return synthesize_command(spec, platform.backend).argv
    if kind is BackendKind.NATIVE and nprocs == 1:
        return synthesize_command(spec, platform.backend).argv

    if kind in _CONTAINER_KINDS:
        plan = plan_hpc_job(
            spec, nprocs, mode="inside-container", backend=platform.backend
        )
        return plan.argv
    plan = plan_hpc_job(
        spec,
        nprocs,
        manifest=platform.manifest,
        scheduler="none" if nprocs == 1 else _default_scheduler(platform),
        backend=platform.backend,
    )
    return plan.argv


def _mock_record(
    campaign: Campaign, workload: Workload, platform: Platform, nprocs: int, run_index: int
) -> TimingRecord:
    output = campaign.mock_model.render_output(
        workload, platform.label, nprocs, run_index, campaign.seed
    )
    phase_seconds, total = parse_timings(output, workload.phases)
    return TimingRecord(
        workload=workload.name,
        platform=platform.label,
        nprocs=nprocs,
        run_index=run_index,
        phase_seconds=phase_seconds,
        total_seconds=total,
    )


def _real_record(
    executor: Executor,
    argv: tuple[str, ...],
    workload: Workload,
    platform: Platform,
    nprocs: int,
    run_index: int,
) -> TimingRecord:
    result = executor.execute(argv)
    if result.exit_code != 0:
        log.warning(
            "%s on %s (n=%d, run %d) exited with %d",
            workload.name,
            platform.label,
            nprocs,
            run_index,
            result.exit_code,
        )
        return TimingRecord(
            workload=workload.name,
            platform=platform.label,
            nprocs=nprocs,
            run_index=run_index,
            failed=True,
            exit_code=result.exit_code,
        )
    phase_seconds, total = parse_timings(result.stdout, workload.phases)
    return TimingRecord(
        workload=workload.name,
        platform=platform.label,
        nprocs=nprocs,
        run_index=run_index,
        phase_seconds=phase_seconds,
        total_seconds=total,
    )


def run_campaign(campaign: Campaign, executor: Executor | None = None) -> list[TimingRecord]:
    """Execute every (workload, platform, nprocs) cell of a campaign.

    Returns one record per measured repetition in execution order. For
    mock campaigns the executor is never consulted; timings come from
    the campaign's model and depend only on the campaign definition and
    seed, so reruns are byte-identical.
    """
    mock = campaign.executor == "mock"
    if not mock and executor is None:
        executor = RealExecutor()

    records: list[TimingRecord] = []
    for workload in campaign.workloads:
        for platform in campaign.platforms:
            for nprocs in campaign.proc_counts:
                argv = synthesize_run_argv(campaign, workload, platform, nprocs)
                if mock:
                    records.extend(
                        _mock_record(campaign, workload, platform, nprocs, i)
                        for i in range(campaign.repetitions)
                    )
                    continue
                for _ in range(workload.warmup_runs):
                    executor.execute(argv)
                for i in range(campaign.repetitions):
                    records.append(
                        _real_record(executor, argv, workload, platform, nprocs, i)
                    )
    if not records:
        raise CampaignError("campaign produced no records")
    return records
