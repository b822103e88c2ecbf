"""Command execution, real and mocked.

RealExecutor spawns the argv as a subprocess, expanding $(pwd) and
environment references at that moment (rendered commands keep them
verbatim). MockExecutor resolves commands against a fixture table and
never touches process state, the filesystem or the clock beyond reading
a canned duration, which keeps benchmark plumbing testable offline.

Fixture tables are tab-separated lines:

    pattern<TAB>exit_code<TAB>duration_s<TAB>stdout_file

The pattern is an fnmatch glob tested against the space-joined argv.
A stdout_file of ``-`` means empty output; paths resolve relative to
the table file. First matching row wins; a command matching no row
executes as a success with empty output and is marked unmatched.
"""

from __future__ import annotations

import os
import subprocess
import time
from dataclasses import dataclass
from fnmatch import fnmatchcase
from pathlib import Path
from typing import Protocol, Sequence

from .errors import CrucibleError


class ExecutorError(CrucibleError):
    pass


class SpawnFailure(ExecutorError):
    pass


class BadFixtureTable(ExecutorError):
    pass


@dataclass(frozen=True)
class Execution:
    """Outcome of one command."""

    argv: tuple[str, ...]
    exit_code: int
    stdout: str
    stderr: str
    duration_s: float
    unmatched: bool = False

    @property
    def succeeded(self) -> bool:
        return self.exit_code == 0


class Executor(Protocol):
    def execute(self, argv: Sequence[str]) -> Execution: ...


def _expand_token(token: str) -> str:
    if "$(pwd)" in token:
        token = token.replace("$(pwd)", os.getcwd())
    return os.path.expandvars(token)


class RealExecutor:
    """Runs commands as subprocesses.

    With capture=False the child inherits the terminal, which is what
    interactive container sessions need; stdout/stderr come back empty.
    """

    def __init__(self, timeout_s: float | None = None, capture: bool = True):
        self.timeout_s = timeout_s
        self.capture = capture

    def execute(self, argv: Sequence[str]) -> Execution:
        if not argv:
            raise SpawnFailure("empty argument vector")
        expanded = [_expand_token(t) for t in argv]
        start = time.perf_counter()
        try:
            proc = subprocess.run(
                expanded,
                capture_output=self.capture,
                text=True,
                timeout=self.timeout_s,
            )
        except FileNotFoundError:
            raise SpawnFailure(f"program not found: {expanded[0]!r}") from None
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise SpawnFailure(f"could not run {expanded[0]!r}: {exc}") from None
        duration = time.perf_counter() - start
        return Execution(
            argv=tuple(argv),
            exit_code=proc.returncode,
            stdout=proc.stdout if self.capture else "",
            stderr=proc.stderr if self.capture else "",
            duration_s=duration,
        )


@dataclass(frozen=True)
class Fixture:
    pattern: str
    exit_code: int
    duration_s: float
    stdout: str


def load_fixture_table(path: Path | str) -> tuple[Fixture, ...]:
    path = Path(path)
    fixtures: list[Fixture] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise BadFixtureTable(f"{path}:{lineno}: expected 4 tab-separated fields")
        pattern, exit_code, duration_s, stdout_file = parts
        try:
            code = int(exit_code)
            duration = float(duration_s)
        except ValueError as exc:
            raise BadFixtureTable(f"{path}:{lineno}: {exc}") from None
        if stdout_file in ("-", ""):
            stdout = ""
        else:
            stdout_path = path.parent / stdout_file
            if not stdout_path.is_file():
                raise BadFixtureTable(f"{path}:{lineno}: no such stdout file {stdout_file!r}")
            stdout = stdout_path.read_text()
        fixtures.append(Fixture(pattern, code, duration, stdout))
    return tuple(fixtures)


class MockExecutor:
    """Resolves commands against canned fixtures, spawning nothing."""

    def __init__(self, fixtures: Sequence[Fixture] = ()):
        self.fixtures = tuple(fixtures)
        self.calls: list[tuple[str, ...]] = []

    @classmethod
    def from_table(cls, path: Path | str) -> "MockExecutor":
        return cls(load_fixture_table(path))

    def execute(self, argv: Sequence[str]) -> Execution:
        if not argv:
            raise SpawnFailure("empty argument vector")
        self.calls.append(tuple(argv))
        line = " ".join(argv)
        for fixture in self.fixtures:
            if fnmatchcase(line, fixture.pattern):
                return Execution(
                    argv=tuple(argv),
                    exit_code=fixture.exit_code,
                    stdout=fixture.stdout,
                    stderr="",
                    duration_s=fixture.duration_s,
                )
        return Execution(
            argv=tuple(argv),
            exit_code=0,
            stdout="",
            stderr="",
            duration_s=0.0,
            unmatched=True,
        )


def execute(argv: Sequence[str], executor: Executor) -> Execution:
    """Run argv through the given executor."""
    return executor.execute(argv)
