"""Deterministic synthetic timing model for mock campaigns.

The model produces the stdout a workload would print, with phase
durations computed as

    seconds = base[workload][phase] * factor * (1 + noise)

where factor is a per-(platform, phase, nprocs) override when one is
configured, otherwise platform_factor[platform] * nprocs_factor[nprocs].
Overrides replace the whole factor so a fixture can shape any curve,
for example a solve phase that collapses at high process counts.

Noise is a +/- amplitude drawn from sha256(seed|workload|phase|nprocs|
run_index). It deliberately does not depend on the platform: paired
runs across platforms share their noise, so mean ratios between
platforms equal the configured factor ratios exactly and regression
verdicts on mock data are reproducible to the last bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import tomli

from ..errors import CrucibleError

if TYPE_CHECKING:  # pragma: no cover - import cycle guard
    from .campaign import Workload


class ModelError(CrucibleError):
    pass


def _noise(seed: int, workload: str, phase: str, nprocs: int, run_index: int) -> float:
    material = f"{seed}|{workload}|{phase}|{nprocs}|{run_index}"
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    r = int.from_bytes(digest[:8], "big") / 2**64
    return 2.0 * r - 1.0


@dataclass(frozen=True)
class TimingModel:
    """base: workload -> phase -> seconds (phase "other" allowed).
    platform_factor: platform label -> multiplier (default 1.0).
    nprocs_factor: str(nprocs) -> multiplier (default 1.0).
    phase_factor: platform -> phase -> str(nprocs) -> full-factor override.
    noise_amplitude: relative half-width of the deterministic jitter.
    """

    base: dict[str, dict[str, float]]
    platform_factor: dict[str, float] = field(default_factory=dict)
    nprocs_factor: dict[str, float] = field(default_factory=dict)
    phase_factor: dict[str, dict[str, dict[str, float]]] = field(default_factory=dict)
    noise_amplitude: float = 0.01

    def factor(self, platform: str, phase: str, nprocs: int) -> float:
        override = (
            self.phase_factor.get(platform, {}).get(phase, {}).get(str(nprocs))
        )
        if override is not None:
            return override
        return self.platform_factor.get(platform, 1.0) * self.nprocs_factor.get(
            str(nprocs), 1.0
        )

    def phase_seconds(
        self,
        workload: str,
        phase: str,
        platform: str,
        nprocs: int,
        run_index: int,
        seed: int,
    ) -> float:
        try:
            base = self.base[workload][phase]
        except KeyError:
            raise ModelError(f"model has no base time for {workload!r}/{phase!r}") from None
        jitter = self.noise_amplitude * _noise(seed, workload, phase, nprocs, run_index)
        return base * self.factor(platform, phase, nprocs) * (1.0 + jitter)

    def render_output(
        self, workload: "Workload", platform: str, nprocs: int, run_index: int, seed: int
    ) -> str:
        """The stdout a run would produce: TIMING lines plus TOTAL."""
        lines = []
        total = 0.0
        for phase in workload.phases:
            seconds = self.phase_seconds(
                workload.name, phase, platform, nprocs, run_index, seed
            )
            total += seconds
            lines.append(f"TIMING {phase} {seconds:.6f}")
        if "other" in self.base.get(workload.name, {}):
            total += self.phase_seconds(
                workload.name, "other", platform, nprocs, run_index, seed
            )
        lines.append(f"TOTAL {total:.6f}")
        return "".join(line + "\n" for line in lines)


_MODEL_KEYS = {"base", "platform_factor", "nprocs_factor", "phase_factor", "noise_amplitude"}


def load_model(path: Path | str) -> TimingModel:
    path = Path(path)
    try:
        data = tomli.loads(path.read_text())
    except OSError as exc:
        raise ModelError(f"cannot read model {path}: {exc}") from None
    except tomli.TOMLDecodeError as exc:
        raise ModelError(f"{path}: {exc}") from None
    for key in data:
        if key not in _MODEL_KEYS:
            raise ModelError(f"{path}: unknown key {key!r}")
    if "base" not in data:
        raise ModelError(f"{path}: model needs a base table")
    return TimingModel(
        base=data["base"],
        platform_factor=data.get("platform_factor", {}),
        nprocs_factor=data.get("nprocs_factor", {}),
        phase_factor=data.get("phase_factor", {}),
        noise_amplitude=data.get("noise_amplitude", 0.01),
    )
