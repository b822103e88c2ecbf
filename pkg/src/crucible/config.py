"""Tool configuration.

Configuration is a small TOML file. Its location comes from the
CRUCIBLE_CONFIG environment variable, falling back to
$XDG_CONFIG_HOME/crucible/config.toml (or ~/.config/...). A missing
file yields defaults rooted next to where the file would live; an
unknown key is an error, since a typoed key silently doing nothing is
how benchmarks end up measuring the wrong store.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import tomli

from .errors import ConfigError

ENV_VAR = "CRUCIBLE_CONFIG"

_KEYS = {
    "store_root": str,
    "registry_path": str,
    "abi_table_path": str,
    "default_backend": str,
    "default_image": str,
}


@dataclass(frozen=True)
class Config:
    store_root: Path
    projects_root: Path
    registry_path: Path | None = None
    abi_table_path: Path | None = None
    default_backend: str = "docker"
    default_image: str = "quay.io/fenicsproject/stable"


def config_path() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    xdg = os.environ.get("XDG_CONFIG_HOME")
    base = Path(xdg) if xdg else Path.home() / ".config"
    return base / "crucible" / "config.toml"


def load_config(path: Path | str | None = None) -> Config:
    path = Path(path) if path is not None else config_path()
    data: dict = {}
    if path.is_file():
        try:
            data = tomli.loads(path.read_text())
        except (OSError, tomli.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    for key, value in data.items():
        if key not in _KEYS:
            raise ConfigError(f"{path}: unknown key {key!r}")
        if not isinstance(value, _KEYS[key]):
            raise ConfigError(f"{path}: {key} must be a string")

    root = path.parent
    store_root = Path(data.get("store_root", root / "store"))
    return Config(
        store_root=store_root,
        projects_root=root / "projects",
        registry_path=Path(data["registry_path"]) if "registry_path" in data else None,
        abi_table_path=Path(data["abi_table_path"]) if "abi_table_path" in data else None,
        default_backend=data.get("default_backend", "docker"),
        default_image=data.get("default_image", "quay.io/fenicsproject/stable"),
    )
