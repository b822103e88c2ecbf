from __future__ import annotations

from pathlib import Path

import pytest

from crucible.store import Store


@pytest.fixture
def store(tmp_path: Path) -> Store:
    return Store.open(tmp_path / "store")


@pytest.fixture
def config_env(tmp_path: Path, monkeypatch) -> Path:
    """Point CRUCIBLE_CONFIG into the test's temp directory."""
    cfg_dir = tmp_path / "crucible-config"
    cfg_dir.mkdir()
    monkeypatch.setenv("CRUCIBLE_CONFIG", str(cfg_dir / "config.toml"))
    return cfg_dir
