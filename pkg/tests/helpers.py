"""Test utilities shared across test modules.

The oracles here are deliberately independent implementations: they
recompute expected values from first principles (hashlib directly, a
two-pass variance formula, a dict-based state machine) so that tests
compare the package against something that cannot share its bugs.
"""

from __future__ import annotations

import hashlib
import math

from crucible.launch import LaunchSpec


def parse_docker_run(argv: tuple[str, ...]) -> LaunchSpec:
    """Re-derive a LaunchSpec from a rendered docker-style argv.

    Only used for round-trip tests; assumes host paths without colons
    and IPv4 host addresses, which the generating strategies respect.
    """
    assert argv[0] in ("docker", "mock") and argv[1] == "run"
    i = 2
    interactive = detach = False
    workdir = None
    mounts: list[tuple[str, str]] = []
    ports: list[tuple[str, int, int]] = []
    env: list[tuple[str, str]] = []
    while i < len(argv):
        tok = argv[i]
        if tok == "-ti":
            interactive = True
            i += 1
        elif tok == "-d":
            detach = True
            i += 1
        elif tok == "-w":
            workdir = argv[i + 1]
            i += 2
        elif tok == "-v":
            host, _, cont = argv[i + 1].partition(":")
            mounts.append((host, cont))
            i += 2
        elif tok == "-p":
            ip, hport, cport = argv[i + 1].split(":")
            ports.append((ip, int(hport), int(cport)))
            i += 2
        elif tok == "-e":
            name, _, value = argv[i + 1].partition("=")
            env.append((name, value))
            i += 2
        else:
            break
    image = argv[i]
    command = tuple(argv[i + 1 :]) or None
    return LaunchSpec(
        image_ref=image,
        interactive=interactive,
        detach=detach,
        workdir=workdir,
        mounts=tuple(mounts),
        ports=tuple(ports),
        env=tuple(env),
        command=command,
    )


def oracle_layer_chain(directives: list[tuple[str, str]]) -> list[tuple[str, int]]:
    """Independent recomputation of (layer id, size) chains.

    directives are (KIND, argument) pairs. Mirrors the documented hash
    contract: sha256 over parent-hex, newline, canonical directive,
    newline, decimal size; FROM layers have size zero, all others 1024
    bytes per UTF-8 byte of the argument.
    """
    chain: list[tuple[str, int]] = []
    parent = ""
    for kind, argument in directives:
        size = 0 if kind == "FROM" else 1024 * len(argument.encode("utf-8"))
        material = f"{parent}\n{kind} {argument}\n{size}"
        lid = hashlib.sha256(material.encode("utf-8")).hexdigest()
        chain.append((lid, size))
        parent = lid
    return chain


def oracle_mean_std(samples: list[float]) -> tuple[float, float, float]:
    """Two-pass mean / sample std / standard error."""
    n = len(samples)
    mean = sum(samples) / n
    if n == 1:
        return mean, 0.0, 0.0
    var = sum((x - mean) ** 2 for x in samples) / (n - 1)
    std = math.sqrt(var)
    return mean, std, std / math.sqrt(n)


class ReferenceProjectMachine:
    """Dict-based model of the project lifecycle.

    Mirrors the documented state machine without any of the package's
    code: states are created/running/stopped, and each action either
    transitions or names the error class it must raise.
    """

    def __init__(self) -> None:
        self.projects: dict[str, str] = {}

    def create(self, name: str) -> str | None:
        if name in self.projects:
            return "NameTaken"
        self.projects[name] = "created"
        return None

    def start(self, name: str) -> str | None:
        state = self.projects.get(name)
        if state is None:
            return "UnknownProject"
        if state == "running":
            return "AlreadyRunning"
        self.projects[name] = "running"
        return None

    def stop(self, name: str) -> str | None:
        state = self.projects.get(name)
        if state is None:
            return "UnknownProject"
        if state != "running":
            return "NotRunning"
        self.projects[name] = "stopped"
        return None

    def remove(self, name: str, force: bool = False) -> str | None:
        state = self.projects.get(name)
        if state is None:
            return "UnknownProject"
        if not force and state != "stopped":
            return "NotStopped"
        del self.projects[name]
        return None
