"""Runtime-agnostic launch specs rendered to concrete argument vectors.

A LaunchSpec says what to run (image, command, mounts, ports...) without
naming a runtime. synthesize_command() turns it into argv for one of the
supported backends. Docker option order is fixed (interactive, workdir,
mounts, detach, ports, env, image, command) so rendered lines are
reproducible verbatim.

Backends honor different subsets of a launch spec. Asking a backend for a
feature it cannot express raises UnsupportedFeature rather than silently
dropping it; fields a backend deliberately ignores (for instance the
image on the native backend) produce warning records instead.

Tokens like ``$(pwd)`` pass through rendering untouched. They are meant
for human-readable listings and are substituted only when a command is
actually executed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

from .errors import CrucibleError


class LaunchError(CrucibleError):
    pass


class UnsupportedFeature(LaunchError):
    def __init__(self, backend: "BackendKind", feature: str):
        super().__init__(f"backend {backend.value} does not support {feature}")
        self.backend = backend
        self.feature = feature


class EmptyCommandForNative(LaunchError):
    pass


class InvalidSpec(LaunchError):
    pass


class BackendKind(enum.Enum):
    DOCKER = "docker"
    RKT = "rkt"
    SHIFTER = "shifter"
    NATIVE = "native"
    MOCK = "mock"


@dataclass(frozen=True)
class Backend:
    kind: BackendKind
    options: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class LaunchSpec:
    """What to run, independent of any container runtime.

    mounts are (host_path, container_path) pairs; ports are
    (host_ip, host_port, container_port) triples; env is (name, value)
    pairs. command None means the image default entry point.
    """

    image_ref: str
    interactive: bool = False
    detach: bool = False
    workdir: str | None = None
    mounts: tuple[tuple[str, str], ...] = ()
    ports: tuple[tuple[str, int, int], ...] = ()
    env: tuple[tuple[str, str], ...] = ()
    command: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.image_ref:
            raise InvalidSpec("image_ref must be non-empty")
        if self.command is not None and len(self.command) == 0:
            raise InvalidSpec("command must be None or non-empty")
        for host, cont in self.mounts:
            if not host or not cont:
                raise InvalidSpec("mount paths must be non-empty")
        for ip, hport, cport in self.ports:
            if not (0 < hport < 65536 and 0 < cport < 65536):
                raise InvalidSpec(f"port out of range: {hport}:{cport}")
            if not ip:
                raise InvalidSpec("port binding needs a host address")
        for name, _ in self.env:
            if not name or "=" in name:
                raise InvalidSpec(f"bad environment variable name {name!r}")


@dataclass(frozen=True)
class RenderWarning:
    code: str
    detail: str


@dataclass(frozen=True)
class RenderedCommand:
    argv: tuple[str, ...]
    warnings: tuple[RenderWarning, ...] = ()


def _render_docker_style(spec: LaunchSpec, program: str) -> RenderedCommand:
    argv = [program, "run"]
    if spec.interactive:
        argv.append("-ti")
    if spec.workdir:
        argv += ["-w", spec.workdir]
    for host, cont in spec.mounts:
        argv += ["-v", f"{host}:{cont}"]
    if spec.detach:
        argv.append("-d")
    for ip, hport, cport in spec.ports:
        argv += ["-p", f"{ip}:{hport}:{cport}"]
    for name, value in spec.env:
        argv += ["-e", f"{name}={value}"]
    argv.append(spec.image_ref)
    if spec.command:
        argv += list(spec.command)
    return RenderedCommand(tuple(argv))


def _render_rkt(spec: LaunchSpec) -> RenderedCommand:
    for feature in ("detach", "workdir", "mounts", "ports", "env"):
        if getattr(spec, feature):
            raise UnsupportedFeature(BackendKind.RKT, feature)
    argv = ["rkt", "run"]
    if spec.interactive:
        argv.append("--interactive")
    argv.append(spec.image_ref)
    if spec.command:
        argv += ["--exec", spec.command[0]]
        if len(spec.command) > 1:
            argv += ["--", *spec.command[1:]]
    return RenderedCommand(tuple(argv))


def _render_shifter(spec: LaunchSpec) -> RenderedCommand:
    for feature in ("interactive", "detach", "workdir", "mounts", "ports", "env"):
        if getattr(spec, feature):
            raise UnsupportedFeature(BackendKind.SHIFTER, feature)
    ref = spec.image_ref
    if not ref.startswith("docker:"):
        ref = f"docker:{ref}"
    argv = ["shifter", f"--image={ref}"]
    if spec.command:
        argv += list(spec.command)
    return RenderedCommand(tuple(argv))


def _render_native(spec: LaunchSpec) -> RenderedCommand:
    for feature in ("detach", "workdir", "mounts", "ports", "env"):
        if getattr(spec, feature):
            raise UnsupportedFeature(BackendKind.NATIVE, feature)
    if not spec.command:
        raise EmptyCommandForNative("native launch requires an explicit command")
    warnings = [RenderWarning("native-ignores-image", f"image {spec.image_ref!r} ignored")]
    if spec.interactive:
        warnings.append(RenderWarning("native-ignores-interactive", "runs in the calling terminal"))
    return RenderedCommand(tuple(spec.command), tuple(warnings))


def synthesize_command(spec: LaunchSpec, backend: Backend) -> RenderedCommand:
    """Render a launch spec to argv for one backend."""
    kind = backend.kind
    if kind is BackendKind.DOCKER:
        return _render_docker_style(spec, "docker")
    if kind is BackendKind.MOCK:
        return _render_docker_style(spec, "mock")
    if kind is BackendKind.RKT:
        return _render_rkt(spec)
    if kind is BackendKind.SHIFTER:
        return _render_shifter(spec)
    if kind is BackendKind.NATIVE:
        return _render_native(spec)
    raise LaunchError(f"unknown backend {kind!r}")


def shell_line(argv: tuple[str, ...] | list[str]) -> str:
    """Join argv for display, quoting only tokens that need it.

    Deliberately leaves $(pwd) and $VAR unquoted; the emitted lines are
    meant to be pasted into a shell where those should expand.
    """
    out = []
    for token in argv:
        if any(c in token for c in (" ", "\t", '"', "'")):
            escaped = token.replace("'", "'\\''")
            out.append(f"'{escaped}'")
        else:
            out.append(token)
    return " ".join(out)
