"""MPI library injection and HPC job planning.

Containers built against one MPI implementation can run on a host with
a different implementation of the same ABI family when the host
libraries are staged somewhere the container can see and pushed onto
LD_LIBRARY_PATH. This module checks ABI compatibility, plans and
applies the library staging, and synthesizes the full job line
(launcher prefix, environment injection, runtime invocation).

Two launch modes exist. In host-launcher mode the MPI launcher runs on
the host and starts the container runtime per rank, which is the only
way ranks can use the host interconnect. In inside-container mode a
single container runs mpirun internally; that works on a workstation
but cannot use a host's native fabric, so it is only rendered for
docker-style backends.
"""

from __future__ import annotations

import hashlib
import os
import shutil
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import tomli
from filelock import FileLock

from .errors import CrucibleError
from .launch import (
    Backend,
    BackendKind,
    LaunchSpec,
    RenderedCommand,
    RenderWarning,
    UnsupportedFeature,
    synthesize_command,
)

SCHEDULERS = ("slurm-srun", "mpirun", "none")
_LAUNCHER_PROGRAM = {"slurm-srun": "srun", "mpirun": "mpirun"}


class HpcError(CrucibleError):
    pass


class UnknownImplementation(HpcError):
    pass


class IncompatibleAbi(HpcError):
    pass


class MissingLibrary(HpcError):
    pass


class StageDirUnwritable(HpcError):
    pass


class BadAbiTable(HpcError):
    pass


class BadManifest(HpcError):
    pass


class BadJobRequest(HpcError):
    pass


@dataclass(frozen=True)
class AbiFamily:
    name: str
    members: frozenset[str]


@dataclass(frozen=True)
class AbiCheck:
    compatible: bool
    family: str | None


@dataclass(frozen=True)
class InjectionManifest:
    """Host MPI libraries to expose inside a container.

    staged_dir may contain environment references like $SCRATCH; they
    stay verbatim in rendered job lines and expand only when the plan
    is applied or the job actually runs.
    """

    host_lib_dir: str
    staged_dir: str
    libraries: tuple[str, ...]
    host_impl: str
    container_impl: str
    env_var: str = "LD_LIBRARY_PATH"

    def __post_init__(self) -> None:
        if not self.libraries:
            raise BadManifest("manifest lists no libraries")
        if self.host_lib_dir == self.staged_dir:
            raise BadManifest("host_lib_dir and staged_dir must differ")
        if not self.env_var:
            raise BadManifest("env_var must be non-empty")


@dataclass(frozen=True)
class JobPlan:
    argv: tuple[str, ...]
    warnings: tuple[RenderWarning, ...] = ()


_MANIFEST_KEYS = {
    "host_lib_dir": str,
    "staged_dir": str,
    "libraries": list,
    "host_impl": str,
    "container_impl": str,
    "env_var": str,
}
_MANIFEST_REQUIRED = ("host_lib_dir", "staged_dir", "libraries", "host_impl", "container_impl")


def manifest_from_mapping(data: dict, source: str = "<manifest>") -> InjectionManifest:
    for key in _MANIFEST_REQUIRED:
        if key not in data:
            raise BadManifest(f"{source}: missing key {key!r}")
    for key, value in data.items():
        if key not in _MANIFEST_KEYS:
            raise BadManifest(f"{source}: unknown key {key!r}")
        if not isinstance(value, _MANIFEST_KEYS[key]):
            raise BadManifest(f"{source}: {key} must be a {_MANIFEST_KEYS[key].__name__}")
    libs = data["libraries"]
    if not all(isinstance(lib, str) and lib for lib in libs):
        raise BadManifest(f"{source}: libraries must be non-empty strings")
    return InjectionManifest(
        host_lib_dir=data["host_lib_dir"],
        staged_dir=data["staged_dir"],
        libraries=tuple(libs),
        host_impl=data["host_impl"],
        container_impl=data["container_impl"],
        env_var=data.get("env_var", "LD_LIBRARY_PATH"),
    )


def load_manifest(path: Path | str) -> InjectionManifest:
    """Read an injection manifest from a TOML file."""
    path = Path(path)
    try:
        data = tomli.loads(path.read_text())
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise BadManifest(f"cannot read manifest {path}: {exc}") from None
    return manifest_from_mapping(data, str(path))


def parse_abi_table(text: str, source: str = "<abi table>") -> tuple[AbiFamily, ...]:
    """Parse family<TAB>implementation lines into ABI families.

    Implementations must be unique across families; an implementation
    claiming two ABIs would make compatibility checks meaningless.
    """
    members: dict[str, list[str]] = {}
    seen: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise BadAbiTable(f"{source}:{lineno}: expected family<TAB>implementation")
        family, impl = parts
        if impl in seen:
            raise BadAbiTable(f"{source}:{lineno}: {impl!r} already in family {seen[impl]!r}")
        seen[impl] = family
        members.setdefault(family, []).append(impl)
    if not members:
        raise BadAbiTable(f"{source}: table is empty")
    return tuple(AbiFamily(name, frozenset(m)) for name, m in members.items())


def load_abi_table(path: Path | str) -> tuple[AbiFamily, ...]:
    path = Path(path)
    return parse_abi_table(path.read_text(), str(path))


def default_abi_table() -> tuple[AbiFamily, ...]:
    text = resources.files("crucible.data").joinpath("mpi-abi.tsv").read_text()
    return parse_abi_table(text, "crucible/data/mpi-abi.tsv")


def check_abi(
    container_impl: str, host_impl: str, table: tuple[AbiFamily, ...] | None = None
) -> AbiCheck:
    """Report whether two MPI implementations share an ABI family."""
    table = table if table is not None else default_abi_table()
    families: dict[str, str] = {}
    for fam in table:
        for impl in fam.members:
            families[impl] = fam.name
    for impl in (container_impl, host_impl):
        if impl not in families:
            raise UnknownImplementation(f"MPI implementation {impl!r} not in ABI table")
    if families[container_impl] == families[host_impl]:
        return AbiCheck(True, families[container_impl])
    return AbiCheck(False, None)


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _needs_copy(src: Path, dst: Path) -> bool:
    if not dst.exists():
        return True
    if src.stat().st_size != dst.stat().st_size:
        return True
    return _sha256_file(src) != _sha256_file(dst)


def plan_staging(manifest: InjectionManifest) -> tuple[tuple[Path, Path], ...]:
    """Compute the copies needed to stage the manifest's libraries.

    Only missing or changed (size or sha256 mismatch) destinations
    appear, so the plan after a successful apply is empty. Environment
    references in the manifest directories expand here.
    """
    host_dir = Path(os.path.expandvars(manifest.host_lib_dir))
    staged_dir = Path(os.path.expandvars(manifest.staged_dir))
    plan: list[tuple[Path, Path]] = []
    seen: set[str] = set()
    for lib in manifest.libraries:
        base = os.path.basename(lib)
        if base in seen:
            continue
        seen.add(base)
        src = host_dir / lib
        if not src.is_file():
            raise MissingLibrary(f"{src} does not exist")
        dst = staged_dir / base
        if _needs_copy(src, dst):
            plan.append((src, dst))
    return tuple(plan)


def stage_libraries(manifest: InjectionManifest) -> tuple[tuple[Path, Path], ...]:
    """Apply the staging plan; returns the copies actually made."""
    staged_dir = Path(os.path.expandvars(manifest.staged_dir))
    try:
        staged_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StageDirUnwritable(f"cannot create {staged_dir}: {exc}") from None
    with FileLock(str(staged_dir / ".stage-lock"), timeout=30):
        plan = plan_staging(manifest)
        for src, dst in plan:
            try:
                shutil.copy2(src, dst)
            except OSError as exc:
                raise StageDirUnwritable(f"cannot copy to {dst}: {exc}") from None
    return plan


def _launcher_prefix(scheduler: str, nprocs: int) -> list[str]:
    if scheduler not in SCHEDULERS:
        raise BadJobRequest(f"unknown scheduler {scheduler!r}")
    if scheduler == "none":
        if nprocs != 1:
            raise BadJobRequest("scheduler 'none' only launches single-process jobs")
        return []
    return [_LAUNCHER_PROGRAM[scheduler], "-n", str(nprocs)]


def plan_hpc_job(
    spec: LaunchSpec,
    nprocs: int,
    manifest: InjectionManifest | None = None,
    scheduler: str = "slurm-srun",
    mode: str = "host-launcher",
    backend: Backend | None = None,
    abi_table: tuple[AbiFamily, ...] | None = None,
) -> JobPlan:
    """Synthesize the full parallel job line for a launch spec.

    host-launcher mode renders  <launcher> -n N shifter [env VAR=dir]
    --image=docker:REF cmd...  (or the bare command for the native
    backend). inside-container mode renders a docker-style launch whose
    command is wrapped in mpirun -n N. A shifter plan without a
    manifest falls back to whatever MPI the image carries, which only
    works within one node's shared memory; that earns a warning record
    rather than an error.
    """
    if nprocs < 1:
        raise BadJobRequest(f"nprocs must be >= 1, got {nprocs}")
    if mode not in ("host-launcher", "inside-container"):
        raise BadJobRequest(f"unknown mode {mode!r}")
    backend = backend or Backend(BackendKind.SHIFTER)
    if not spec.command:
        raise BadJobRequest("parallel jobs need an explicit command")

    if manifest is not None:
        if backend.kind is not BackendKind.SHIFTER:
            raise UnsupportedFeature(backend.kind, "library injection manifest")
        result = check_abi(manifest.container_impl, manifest.host_impl, abi_table)
        if not result.compatible:
            raise IncompatibleAbi(
                f"container MPI {manifest.container_impl!r} and host MPI "
                f"{manifest.host_impl!r} are in different ABI families"
            )

    if mode == "inside-container":
        if backend.kind not in (BackendKind.DOCKER, BackendKind.RKT, BackendKind.MOCK):
            raise UnsupportedFeature(backend.kind, "inside-container launch")
        inner = ("mpirun", "-n", str(nprocs), *spec.command)
        rendered = synthesize_command(
            LaunchSpec(
                image_ref=spec.image_ref,
                interactive=spec.interactive,
                detach=spec.detach,
                workdir=spec.workdir,
                mounts=spec.mounts,
                ports=spec.ports,
                env=spec.env,
                command=inner,
            ),
            backend,
        )
        return JobPlan(rendered.argv, rendered.warnings)

    prefix = _launcher_prefix(scheduler, nprocs)

    if backend.kind is BackendKind.NATIVE:
        return JobPlan(tuple(prefix) + tuple(spec.command))

    if backend.kind is not BackendKind.SHIFTER:
        raise UnsupportedFeature(backend.kind, "host-launcher mode")

    rendered: RenderedCommand = synthesize_command(spec, backend)
    argv = list(rendered.argv)
    warnings = list(rendered.warnings)
    if manifest is not None:
        # env injection sits between shifter and --image so the runtime
        # itself starts with the staged libraries visible
        argv = [argv[0], "env", f"{manifest.env_var}={manifest.staged_dir}", *argv[1:]]
    else:
        warnings.append(
            RenderWarning(
                "container-mpi-fallback",
                "no injection manifest; the image's own MPI will run, "
                "which cannot use the host interconnect across nodes",
            )
        )
    return JobPlan(tuple(prefix) + tuple(argv), tuple(warnings))
