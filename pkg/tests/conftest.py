"""Shared builders for colibri-sim tests."""

from pathlib import Path
from typing import Optional

import pytest

from colibri_sim.config import (
    AdapterKind,
    AtomicFlavor,
    CoreProgram,
    ProgramKind,
    RunConfig,
    SimConfig,
    config_manager,
)

CONFIGS_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    """Keep a developer's COLIBRI_SIM_SEED out of the tests."""
    monkeypatch.delenv(config_manager.ENV_SEED, raising=False)


@pytest.fixture
def configs_dir() -> Path:
    return CONFIGS_DIR


@pytest.fixture
def fig2_path() -> Path:
    return CONFIGS_DIR / "fig2.yaml"


@pytest.fixture
def fig2_run(fig2_path) -> RunConfig:
    return config_manager.load(fig2_path)


def rmw_run(
    adapter: AdapterKind,
    flavor: AtomicFlavor,
    *,
    n_cores: int = 4,
    n_banks: int = 4,
    iterations: int = 4,
    bins: Optional[int] = None,
    targets: Optional[list[int]] = None,
    **sim_fields,
) -> RunConfig:
    """Every core increments shared words ``iterations`` times."""
    program = CoreProgram(
        kind=ProgramKind.RMW_LOOP,
        iterations=iterations,
        bins=bins,
        target_addresses=targets or [],
        atomic_flavor=flavor,
    )
    sim = SimConfig(n_cores=n_cores, n_banks=n_banks, adapter=adapter, **sim_fields)
    return RunConfig(sim=sim, programs=[program])
