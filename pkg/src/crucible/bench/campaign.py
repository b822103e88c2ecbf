"""Campaign definitions.

A campaign names the workloads to run, the platforms to run them on,
process counts, repetition counts and the executor (real subprocesses
or the mock timing model). Campaign files are TOML; see the shipped
files under crucible/data for the schema by example.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import tomli

from ..errors import CrucibleError
from ..hpc import InjectionManifest, manifest_from_mapping
from ..launch import Backend, BackendKind
from .mockmodel import TimingModel, load_model
from .timings import RESERVED_PHASES


class CampaignError(CrucibleError):
    pass


@dataclass(frozen=True)
class Workload:
    """A benchmark program and the phases it reports."""

    name: str
    command: tuple[str, ...]
    phases: tuple[str, ...]
    warmup_runs: int = 1

    def __post_init__(self) -> None:
        if not self.name:
            raise CampaignError("workload name must be non-empty")
        if not self.command:
            raise CampaignError(f"workload {self.name!r} has an empty command")
        if len(set(self.phases)) != len(self.phases):
            raise CampaignError(f"workload {self.name!r} repeats a phase name")
        for phase in self.phases:
            if not phase or phase in RESERVED_PHASES:
                raise CampaignError(
                    f"workload {self.name!r}: phase name {phase!r} is reserved or empty"
                )
        if self.warmup_runs < 0:
            raise CampaignError(f"workload {self.name!r}: warmup_runs must be >= 0")


@dataclass(frozen=True)
class Platform:
    """One way of running workloads: a backend plus its job-line policy."""

    label: str
    backend: Backend
    baseline: bool = False
    scheduler: str | None = None
    manifest: InjectionManifest | None = None

    def __post_init__(self) -> None:
        if not self.label:
            raise CampaignError("platform label must be non-empty")


@dataclass(frozen=True)
class Campaign:
    workloads: tuple[Workload, ...]
    platforms: tuple[Platform, ...]
    repetitions: int
    image_ref: str
    proc_counts: tuple[int, ...] = (1,)
    executor: str = "real"
    seed: int = 0
    mock_model: TimingModel | None = None

    def __post_init__(self) -> None:
        if not self.workloads:
            raise CampaignError("campaign has no workloads")
        if not self.platforms:
            raise CampaignError("campaign has no platforms")
        labels = [p.label for p in self.platforms]
        if len(set(labels)) != len(labels):
            raise CampaignError("platform labels must be unique")
        if sum(1 for p in self.platforms if p.baseline) != 1:
            raise CampaignError("campaign needs exactly one baseline platform")
        if self.repetitions < 1:
            raise CampaignError("repetitions must be >= 1")
        if not self.proc_counts or list(self.proc_counts) != sorted(set(self.proc_counts)):
            raise CampaignError("proc_counts must be strictly ascending")
        if any(n < 1 for n in self.proc_counts):
            raise CampaignError("proc_counts must be positive")
        if self.executor not in ("real", "mock"):
            raise CampaignError(f"unknown executor {self.executor!r}")
        if self.executor == "mock" and self.mock_model is None:
            raise CampaignError("mock campaigns need a mock_model")

    @property
    def baseline_label(self) -> str:
        return next(p.label for p in self.platforms if p.baseline)


_TOP_KEYS = {
    "image",
    "repetitions",
    "proc_counts",
    "executor",
    "seed",
    "mock_model",
    "workload",
    "platform",
}
_WORKLOAD_KEYS = {"name", "command", "phases", "warmup_runs"}
_PLATFORM_KEYS = {"label", "backend", "baseline", "scheduler", "image", "manifest"}


def _check_keys(mapping: dict, allowed: set[str], context: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise CampaignError(f"{context}: unknown key {key!r}")


def _parse_workload(data: dict, source: str) -> Workload:
    _check_keys(data, _WORKLOAD_KEYS, f"{source} workload")
    try:
        return Workload(
            name=data["name"],
            command=tuple(data["command"]),
            phases=tuple(data.get("phases", ())),
            warmup_runs=data.get("warmup_runs", 1),
        )
    except KeyError as exc:
        raise CampaignError(f"{source}: workload missing key {exc}") from None


def _parse_platform(data: dict, source: str, default_image: str) -> Platform:
    _check_keys(data, _PLATFORM_KEYS, f"{source} platform")
    try:
        kind = BackendKind(data["backend"])
    except KeyError:
        raise CampaignError(f"{source}: platform missing backend") from None
    except ValueError:
        raise CampaignError(f"{source}: unknown backend {data['backend']!r}") from None
    options = {"image": data.get("image", default_image)}
    manifest = None
    if "manifest" in data:
        manifest = manifest_from_mapping(data["manifest"], f"{source} manifest")
    return Platform(
        label=data.get("label", kind.value),
        backend=Backend(kind, options),
        baseline=data.get("baseline", False),
        scheduler=data.get("scheduler"),
        manifest=manifest,
    )


def load_campaign(path: Path | str) -> Campaign:
    """Load a campaign file; relative model paths resolve beside it."""
    path = Path(path)
    try:
        data = tomli.loads(path.read_text())
    except OSError as exc:
        raise CampaignError(f"cannot read campaign {path}: {exc}") from None
    except tomli.TOMLDecodeError as exc:
        raise CampaignError(f"{path}: {exc}") from None

    _check_keys(data, _TOP_KEYS, str(path))
    image = data.get("image", "")
    if not image:
        raise CampaignError(f"{path}: campaign needs an image")

    model = None
    if "mock_model" in data:
        model_path = Path(data["mock_model"])
        if not model_path.is_absolute():
            model_path = path.parent / model_path
        model = load_model(model_path)

    return Campaign(
        workloads=tuple(_parse_workload(w, str(path)) for w in data.get("workload", ())),
        platforms=tuple(
            _parse_platform(p, str(path), image) for p in data.get("platform", ())
        ),
        repetitions=data.get("repetitions", 1),
        image_ref=image,
        proc_counts=tuple(data.get("proc_counts", [1])),
        executor=data.get("executor", "real"),
        seed=data.get("seed", 0),
        mock_model=model,
    )
