"""Command-line interface.

Exit codes: 0 success, 1 tool error, 2 usage error, 3 benchmark
regression gate failure. Every tool error prints a single line starting
with "error:" on stderr; warnings print as "warning:" lines and never
change the exit code.
"""

from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

import click

from . import bench, hpc, report, store as store_mod
from .config import Config, load_config
from .errors import CrucibleError
from .executor import MockExecutor, RealExecutor
from .launch import Backend, BackendKind, LaunchSpec, RenderWarning, synthesize_command, shell_line
from .projects import ProjectManager
from .recipes import parse_recipe

PACKAGED_CAMPAIGNS = ("workstation", "hpgmg", "edison", "python-import")


def _warn(warnings: Sequence[RenderWarning]) -> None:
    for w in warnings:
        click.echo(f"warning: {w.detail}", err=True)


def _open_store(cfg: Config) -> store_mod.Store:
    return store_mod.Store.open(cfg.store_root)


def _manager(cfg: Config) -> ProjectManager:
    kind = BackendKind(cfg.default_backend)
    executor = MockExecutor() if kind is BackendKind.MOCK else RealExecutor(capture=False)
    return ProjectManager(
        cfg.projects_root,
        _open_store(cfg),
        executor,
        backend=Backend(kind),
        registry=cfg.registry_path,
    )


def _abi_table(cfg: Config):
    if cfg.abi_table_path is not None:
        return hpc.load_abi_table(cfg.abi_table_path)
    return hpc.default_abi_table()


@click.group()
def cli() -> None:
    """Container workflows for scientific software."""


# -- images --------------------------------------------------------------


@cli.command()
@click.argument("recipe", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("-t", "--tag", "tag_name", default=None, help="Tag the built image.")
def build(recipe: Path, tag_name: str | None) -> None:
    """Build an image from a recipe file."""
    cfg = load_config()
    store = _open_store(cfg)
    parsed = parse_recipe(recipe.read_text())
    image = store_mod.build_image(store, parsed, cfg.registry_path)
    for lid in image.layers:
        layer = store.layers[lid]
        click.echo(f"{layer.display_id} {layer.directive.canonical()}")
    if tag_name:
        store_mod.tag_image(store, image.id, tag_name)
        click.echo(f"built {image.display_id} tagged {tag_name}")
    else:
        click.echo(f"built {image.display_id}")


@cli.command()
@click.argument("reference")
@click.argument("name")
def tag(reference: str, name: str) -> None:
    """Point a tag name at an image (id prefix or existing tag)."""
    cfg = load_config()
    image = store_mod.tag_image(_open_store(cfg), reference, name)
    click.echo(f"tagged {name} -> {image.display_id}")


@cli.command()
def images() -> None:
    """List images in the store."""
    cfg = load_config()
    store = _open_store(cfg)
    usage = store_mod.store_usage(store)
    rows = [("IMAGE ID", "TAGS", "LAYERS", "BYTES")]
    for iid in sorted(store.images):
        image = store.images[iid]
        rows.append(
            (
                image.display_id,
                ",".join(sorted(image.tags)) or "-",
                str(len(image.layers)),
                str(usage.image_bytes[iid]),
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    for row in rows:
        click.echo("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    click.echo(
        f"{usage.distinct_layers} layers, {usage.total_bytes} bytes stored, "
        f"{usage.shared_bytes} bytes shared"
    )


@cli.command()
@click.argument("reference")
@click.option("--registry", type=click.Path(path_type=Path), default=None)
def pull(reference: str, registry: Path | None) -> None:
    """Copy an image from a registry directory into the store."""
    cfg = load_config()
    registry = registry or cfg.registry_path
    if registry is None:
        raise CrucibleError("no registry configured; pass --registry or set registry_path")
    store = _open_store(cfg)
    before = len(store.layers)
    image = store_mod.pull_image(store, registry, reference)
    click.echo(f"pulled {reference}: {image.display_id} ({len(store.layers) - before} new layers)")


# -- launching -----------------------------------------------------------


_run_options = [
    click.option("-i", "--interactive", is_flag=True, help="Attach a terminal."),
    click.option("-d", "--detach", is_flag=True, help="Run in the background."),
    click.option("-w", "--workdir", default=None, help="Working directory inside the container."),
    click.option("-v", "--volume", "volumes", multiple=True, metavar="HOST:CONT"),
    click.option("-p", "--publish", "publishes", multiple=True, metavar="[IP:]HOST:CONT"),
    click.option("-e", "--env", "env_vars", multiple=True, metavar="NAME=VALUE"),
    click.option(
        "--backend",
        type=click.Choice([k.value for k in BackendKind]),
        default=None,
        help="Container runtime (default from config).",
    ),
]


def _with_run_options(fn):
    for option in reversed(_run_options):
        fn = option(fn)
    return fn


def _parse_mount(value: str) -> tuple[str, str]:
    host, sep, cont = value.partition(":")
    if not sep or not host or not cont:
        raise click.UsageError(f"bad volume {value!r}, expected HOST:CONT")
    return host, cont


def _parse_publish(value: str) -> tuple[str, int, int]:
    parts = value.split(":")
    try:
        if len(parts) == 2:
            return "127.0.0.1", int(parts[0]), int(parts[1])
        if len(parts) == 3:
            return parts[0], int(parts[1]), int(parts[2])
    except ValueError:
        pass
    raise click.UsageError(f"bad publish {value!r}, expected [IP:]HOSTPORT:CONTPORT")


def _parse_env(value: str) -> tuple[str, str]:
    name, sep, val = value.partition("=")
    if not sep or not name:
        raise click.UsageError(f"bad env {value!r}, expected NAME=VALUE")
    return name, val


def _build_spec(image, command, interactive, detach, workdir, volumes, publishes, env_vars):
    return LaunchSpec(
        image_ref=image,
        interactive=interactive,
        detach=detach,
        workdir=workdir,
        mounts=tuple(_parse_mount(v) for v in volumes),
        ports=tuple(_parse_publish(p) for p in publishes),
        env=tuple(_parse_env(e) for e in env_vars),
        command=tuple(command) or None,
    )


@cli.command(context_settings={"ignore_unknown_options": True})
@_with_run_options
@click.argument("image")
@click.argument("command", nargs=-1, type=click.UNPROCESSED)
def run(interactive, detach, workdir, volumes, publishes, env_vars, backend, image, command):
    """Run a container image."""
    cfg = load_config()
    kind = BackendKind(backend or cfg.default_backend)
    spec = _build_spec(image, command, interactive, detach, workdir, volumes, publishes, env_vars)
    rendered = synthesize_command(spec, Backend(kind))
    _warn(rendered.warnings)
    executor = MockExecutor() if kind is BackendKind.MOCK else RealExecutor(capture=False)
    result = executor.execute(rendered.argv)
    if result.exit_code != 0:
        raise CrucibleError(f"command exited with {result.exit_code}")


@cli.group("print-command")
def print_command() -> None:
    """Print the command a launch would run, without running it."""


@print_command.command("run", context_settings={"ignore_unknown_options": True})
@_with_run_options
@click.argument("image")
@click.argument("command", nargs=-1, type=click.UNPROCESSED)
def print_run(interactive, detach, workdir, volumes, publishes, env_vars, backend, image, command):
    """Print the launch line for IMAGE."""
    cfg = load_config()
    kind = BackendKind(backend or cfg.default_backend)
    spec = _build_spec(image, command, interactive, detach, workdir, volumes, publishes, env_vars)
    rendered = synthesize_command(spec, Backend(kind))
    _warn(rendered.warnings)
    click.echo(shell_line(rendered.argv))


# -- projects ------------------------------------------------------------


@cli.command()
@click.argument("name")
@click.option("--image", default=None, help="Image reference (default from config).")
@click.option("--share-dir", default="$(pwd)", show_default=True)
def notebook(name: str, image: str | None, share_dir: str) -> None:
    """Create a notebook project."""
    cfg = load_config()
    project = _manager(cfg).create(
        name, image or cfg.default_image, mode="notebook", share_dir=share_dir
    )
    click.echo(f"created notebook project {name} on port {project.port}")
    click.echo(f"start it with: crucible start {name}")


@cli.command()
@click.argument("name")
def start(name: str) -> None:
    """Start (or resume) a project."""
    cfg = load_config()
    project = _manager(cfg).start(name)
    if project.mode == "notebook":
        click.echo(f"{name} running at http://127.0.0.1:{project.port}")
    else:
        click.echo(f"{name} running")


@cli.command()
@click.argument("name")
def stop(name: str) -> None:
    """Stop a running project."""
    cfg = load_config()
    _manager(cfg).stop(name)
    click.echo(f"{name} stopped")


@cli.command()
def ls() -> None:
    """List projects."""
    cfg = load_config()
    projects = _manager(cfg).list()
    rows = [("NAME", "MODE", "STATE", "PORT", "IMAGE")]
    for p in projects:
        rows.append((p.name, p.mode, p.state, str(p.port or "-"), p.image_ref))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    for row in rows:
        click.echo("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())


@cli.command()
@click.argument("name")
@click.option("--force", is_flag=True, help="Remove even if not stopped.")
def rm(name: str, force: bool) -> None:
    """Remove a project."""
    cfg = load_config()
    _manager(cfg).remove(name, force=force)
    click.echo(f"{name} removed")


# -- hpc -----------------------------------------------------------------


@cli.group("hpc")
def hpc_group() -> None:
    """Parallel job planning and MPI library staging."""


@hpc_group.command("plan")
@click.option("--image", required=True)
@click.option("-n", "--nprocs", type=int, default=1, show_default=True)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, path_type=Path))
@click.option(
    "--scheduler", type=click.Choice(hpc.SCHEDULERS), default="slurm-srun", show_default=True
)
@click.option(
    "--mode",
    type=click.Choice(["host-launcher", "inside-container"]),
    default="host-launcher",
    show_default=True,
)
@click.option(
    "--backend",
    type=click.Choice([k.value for k in BackendKind]),
    default="shifter",
    show_default=True,
)
@click.argument("command", nargs=-1, required=True, type=click.UNPROCESSED)
def hpc_plan(image, nprocs, manifest_path, scheduler, mode, backend, command):
    """Print the full parallel job line for COMMAND."""
    cfg = load_config()
    manifest = hpc.load_manifest(manifest_path) if manifest_path else None
    plan = hpc.plan_hpc_job(
        LaunchSpec(image_ref=image, command=tuple(command)),
        nprocs,
        manifest=manifest,
        scheduler=scheduler,
        mode=mode,
        backend=Backend(BackendKind(backend)),
        abi_table=_abi_table(cfg),
    )
    _warn(plan.warnings)
    click.echo(shell_line(plan.argv))


@hpc_group.command("stage")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--plan-only", is_flag=True, help="Show the copies without making them.")
def hpc_stage(manifest_path: Path, plan_only: bool) -> None:
    """Stage host MPI libraries into the manifest's shared directory."""
    manifest = hpc.load_manifest(manifest_path)
    if plan_only:
        plan = hpc.plan_staging(manifest)
        for src, dst in plan:
            click.echo(f"{src} -> {dst}")
        if not plan:
            click.echo("nothing to copy")
        return
    copied = hpc.stage_libraries(manifest)
    click.echo(f"staged {len(copied)} file(s) into {manifest.staged_dir}")


# -- bench ---------------------------------------------------------------


@cli.group("bench")
def bench_group() -> None:
    """Benchmark campaigns."""


def _campaign_path(name: str) -> Path:
    if name in PACKAGED_CAMPAIGNS:
        # the package installs as plain files, so this is a real path
        return Path(str(resources.files("crucible.data").joinpath(f"{name}.campaign.toml")))
    return Path(name)


@bench_group.command("run")
@click.argument("campaign")
@click.option(
    "-o",
    "--records",
    "records_path",
    type=click.Path(path_type=Path),
    default=Path("records.tsv"),
    show_default=True,
)
def bench_run(campaign: str, records_path: Path) -> None:
    """Run a campaign (a file path or a packaged name) and write records."""
    path = _campaign_path(campaign)
    if not path.is_file():
        raise CrucibleError(
            f"no campaign named {campaign!r}; packaged: {', '.join(PACKAGED_CAMPAIGNS)}"
        )
    loaded = bench.load_campaign(path)
    records = bench.run_campaign(loaded)
    bench.write_records(records, records_path)
    click.echo(f"wrote {len(records)} records to {records_path}")
    stats = bench.aggregate(records)
    click.echo(report.render_summary(stats), nl=False)


@bench_group.command("report")
@click.option("--records", "records_path", required=True, type=click.Path(path_type=Path))
@click.option("--baseline", default=None, help="Baseline platform label for differentials.")
@click.option("--threshold", type=float, default=5.0, show_default=True, help="Max overhead %.")
@click.option("--limit", "limits", multiple=True, metavar="PLATFORM=PCT", help="Per-platform threshold.")
@click.option("--csv", "csv_path", type=click.Path(path_type=Path), default=None)
@click.option("--plot", "plot_path", type=click.Path(path_type=Path), default=None)
@click.option(
    "--layout", type=click.Choice(["grouped-bars", "stacked-bars"]), default="grouped-bars"
)
@click.option("--segments", default=None, help="Comma-separated phases for stacked bars.")
@click.option("--axis-cap", type=float, default=None, help="Mark larger values TRUNCATED.")
def bench_report(
    records_path, baseline, threshold, limits, csv_path, plot_path, layout, segments, axis_cap
) -> int:
    """Aggregate a records file; write CSV/plot data; gate regressions."""
    records = bench.read_records(records_path)
    stats = bench.aggregate(records)

    diffs = None
    verdicts = None
    if baseline is not None:
        per_platform = {}
        for limit in limits:
            platform, sep, pct = limit.partition("=")
            if not sep:
                raise click.UsageError(f"bad limit {limit!r}, expected PLATFORM=PCT")
            per_platform[platform] = float(pct)
        diffs = bench.differentials(stats, baseline)
        verdicts = bench.regression_check(diffs, threshold, per_platform)

    if csv_path is not None:
        report.emit_csv(stats, csv_path)
        click.echo(f"wrote {csv_path}")
    if plot_path is not None:
        if segments:
            seg = tuple(s.strip() for s in segments.split(",") if s.strip())
        else:
            seg = ("total",)
        spec = report.PlotSpec(kind=layout, bar_segments=seg, axis_cap=axis_cap)
        report.emit_plot_data(stats, spec, plot_path)
        click.echo(f"wrote {plot_path}")

    click.echo(report.render_summary(stats, diffs, verdicts), nl=False)
    if verdicts is not None:
        failed = [v for v in verdicts if not v.passed]
        for v in failed:
            click.echo(
                f"regression: {v.workload} on {v.platform} (n={v.nprocs}) "
                f"is {v.percent:+.1f}% vs limit {v.threshold:g}%",
                err=True,
            )
        if failed:
            return 3
    return 0


# -- dispatch ------------------------------------------------------------


def dispatch(argv: Sequence[str]) -> int:
    """Run the CLI programmatically; returns the exit code."""
    try:
        result = cli.main(args=list(argv), prog_name="crucible", standalone_mode=False)
    except click.exceptions.NoArgsIsHelpError as exc:
        click.echo(exc.format_message(), err=True)
        return 2
    except click.exceptions.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return 130
    except CrucibleError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return result if isinstance(result, int) else 0


def main() -> None:
    import logging

    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="warning: %(message)s")
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
