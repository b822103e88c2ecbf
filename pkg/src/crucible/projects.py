"""Project lifecycle for interactive container sessions.

A project names a long-lived working session: an image, a shared host
directory mounted at a fixed path inside the container, and for
notebook projects a published port. Projects move through three states
(created, running, stopped). Starting a stopped project resumes its
existing container instead of creating a new one, which is what keeps
installed packages and kernel state alive across sessions.

State lives in one file per project under the projects root,
key<TAB>value lines, guarded by a writer lock.
"""

from __future__ import annotations

import re
import socket
import uuid
from dataclasses import dataclass
from pathlib import Path

from filelock import FileLock

from .errors import CrucibleError
from .executor import Executor
from .launch import Backend, BackendKind, LaunchSpec, UnsupportedFeature, synthesize_command
from .store import Store, registry_has

SHARE_TARGET = "/home/fenics/shared"
PORT_RANGE = range(8888, 8989)
NOTEBOOK_COMMAND = ("jupyter-notebook", "--ip=0.0.0.0")
NOTEBOOK_CONTAINER_PORT = 8888
PROJECT_NAME_RE = r"^[A-Za-z0-9][A-Za-z0-9._-]*$"

STATES = ("created", "running", "stopped")
MODES = ("shell", "notebook")


class WorkflowError(CrucibleError):
    pass


class InvalidProjectName(WorkflowError):
    pass


class NameTaken(WorkflowError):
    pass


class UnknownProject(WorkflowError):
    pass


class AlreadyRunning(WorkflowError):
    pass


class NotRunning(WorkflowError):
    pass


class NotStopped(WorkflowError):
    pass


class NoFreePort(WorkflowError):
    pass


class ImageUnresolvable(WorkflowError):
    pass


class LaunchFailed(WorkflowError):
    pass


class StopFailed(WorkflowError):
    pass


@dataclass
class Project:
    name: str
    image_ref: str
    mode: str
    state: str = "created"
    container_id: str | None = None
    port: int | None = None
    share_dir: str = "$(pwd)"


def _project_to_text(p: Project) -> str:
    rows = [
        ("name", p.name),
        ("image", p.image_ref),
        ("mode", p.mode),
        ("state", p.state),
        ("container_id", p.container_id or ""),
        ("port", "" if p.port is None else str(p.port)),
        ("share_dir", p.share_dir),
    ]
    return "".join(f"{k}\t{v}\n" for k, v in rows)


def _project_from_text(text: str) -> Project:
    fields = {}
    for line in text.splitlines():
        if line:
            key, _, value = line.partition("\t")
            fields[key] = value
    return Project(
        name=fields["name"],
        image_ref=fields["image"],
        mode=fields["mode"],
        state=fields["state"],
        container_id=fields["container_id"] or None,
        port=int(fields["port"]) if fields["port"] else None,
        share_dir=fields["share_dir"],
    )


def _looks_remote(reference: str) -> bool:
    head = reference.split("/")[0]
    return "." in head or ":" in head


def _port_is_bindable(port: int) -> bool:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as sock:
        try:
            sock.bind(("127.0.0.1", port))
        except OSError:
            return False
    return True


class ProjectManager:
    """Create, start, stop, list and remove projects."""

    def __init__(
        self,
        root: Path | str,
        store: Store,
        executor: Executor,
        backend: Backend = Backend(BackendKind.DOCKER),
        registry: Path | str | None = None,
        probe_port=_port_is_bindable,
    ):
        if backend.kind not in (BackendKind.DOCKER, BackendKind.MOCK):
            raise UnsupportedFeature(backend.kind, "project sessions")
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.store = store
        self.executor = executor
        self.backend = backend
        self.registry = registry
        self._probe_port = probe_port

    # -- persistence ---------------------------------------------------

    def _path(self, name: str) -> Path:
        return self.root / f"{name}.project"

    def _lock(self) -> FileLock:
        return FileLock(str(self.root / "lock"), timeout=10)

    def _save(self, project: Project) -> None:
        self._path(project.name).write_text(_project_to_text(project))

    def load(self, name: str) -> Project:
        path = self._path(name)
        if not path.is_file():
            raise UnknownProject(f"no project named {name!r}")
        return _project_from_text(path.read_text())

    def list(self) -> list[Project]:
        return [
            _project_from_text(p.read_text())
            for p in sorted(self.root.glob("*.project"))
        ]

    # -- lifecycle -----------------------------------------------------

    def _resolve_image(self, reference: str) -> None:
        if self.store.has_reference(reference):
            return
        if self.registry is not None and registry_has(self.registry, reference):
            return
        if _looks_remote(reference):
            # the runtime will pull it on first start; nothing to verify locally
            return
        raise ImageUnresolvable(f"image {reference!r} not found in store or registry")

    def _free_port(self) -> int:
        held = {p.port for p in self.list() if p.port is not None}
        for port in PORT_RANGE:
            if port not in held and self._probe_port(port):
                return port
        raise NoFreePort(f"no free port in {PORT_RANGE.start}-{PORT_RANGE.stop - 1}")

    def create(
        self, name: str, image_ref: str, mode: str = "shell", share_dir: str = "$(pwd)"
    ) -> Project:
        if not re.match(PROJECT_NAME_RE, name):
            raise InvalidProjectName(f"bad project name {name!r}")
        if mode not in MODES:
            raise WorkflowError(f"unknown mode {mode!r}")
        with self._lock():
            if self._path(name).exists():
                raise NameTaken(f"project {name!r} already exists")
            self._resolve_image(image_ref)
            port = self._free_port() if mode == "notebook" else None
            project = Project(name, image_ref, mode, port=port, share_dir=share_dir)
            self._save(project)
        return project

    def launch_spec(self, project: Project) -> LaunchSpec:
        """The first-start launch for a project.

        Shell projects run an interactive session with the share mount;
        notebook projects run detached with the working directory set to
        the share target and the notebook port published on loopback.
        """
        mounts = ((project.share_dir, SHARE_TARGET),)
        if project.mode == "notebook":
            assert project.port is not None
            return LaunchSpec(
                image_ref=project.image_ref,
                workdir=SHARE_TARGET,
                mounts=mounts,
                detach=True,
                ports=(("127.0.0.1", project.port, NOTEBOOK_CONTAINER_PORT),),
                command=NOTEBOOK_COMMAND,
            )
        return LaunchSpec(
            image_ref=project.image_ref,
            interactive=True,
            mounts=mounts,
        )

    def _runtime(self) -> str:
        return "docker" if self.backend.kind is BackendKind.DOCKER else "mock"

    def start(self, name: str) -> Project:
        with self._lock():
            project = self.load(name)
            if project.state == "running":
                raise AlreadyRunning(f"project {name!r} is already running")
            if project.state == "stopped":
                argv = (self._runtime(), "start", project.container_id or "")
            else:
                argv = synthesize_command(self.launch_spec(project), self.backend).argv
            result = self.executor.execute(argv)
            if result.exit_code != 0:
                raise LaunchFailed(
                    f"runtime exited with {result.exit_code} starting {name!r}"
                )
            if project.container_id is None:
                out = result.stdout.strip()
                project.container_id = out.splitlines()[0].strip() if out else uuid.uuid4().hex[:12]
            project.state = "running"
            self._save(project)
        return project

    def stop(self, name: str) -> Project:
        with self._lock():
            project = self.load(name)
            if project.state != "running":
                raise NotRunning(f"project {name!r} is not running")
            result = self.executor.execute((self._runtime(), "stop", project.container_id or ""))
            if result.exit_code != 0:
                raise StopFailed(f"runtime exited with {result.exit_code} stopping {name!r}")
            project.state = "stopped"
            self._save(project)
        return project

    def remove(self, name: str, force: bool = False) -> None:
        with self._lock():
            project = self.load(name)
            if not force and project.state != "stopped":
                raise NotStopped(
                    f"project {name!r} is {project.state}; stop it first or use force"
                )
            if force and project.state == "running":
                # best effort; the project file goes away regardless
                self.executor.execute((self._runtime(), "stop", project.container_id or ""))
            self._path(name).unlink()
