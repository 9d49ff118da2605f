"""Configuration models and loading for colibri-sim."""

from __future__ import annotations

import logging
import os
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

logger = logging.getLogger(__name__)

SUPPORTED_ADDRESSES_PER_BANK = (1, 2, 4, 8)


class ConfigError(Exception):
    """Invalid, missing or contradictory configuration."""

    pass


class AdapterKind(str, Enum):
    """Memory-bank front-end installed in front of every bank."""

    PLAIN_LRSC = "plain-lrsc"
    AMO_ONLY = "amo-only"
    LRSCWAIT_IDEAL = "lrscwait-ideal"
    LRSCWAIT_BOUNDED = "lrscwait-bounded"
    COLIBRI = "colibri"

    @property
    def supports_lrwait(self) -> bool:
        return self in (
            AdapterKind.LRSCWAIT_IDEAL,
            AdapterKind.LRSCWAIT_BOUNDED,
            AdapterKind.COLIBRI,
        )


class AtomicFlavor(str, Enum):
    """How a core program performs its atomic update or takes its lock."""

    AMO_ADD = "amo-add"
    LR_SC = "lr-sc"
    LRSC_WAIT = "lrsc-wait"
    COLIBRI = "colibri"
    SPIN_LOCK_AMO = "spin-lock-amo"
    SPIN_LOCK_LR_SC = "spin-lock-lr-sc"
    SPIN_LOCK_COLIBRI = "spin-lock-colibri"
    MCS_MWAIT_LOCK = "mcs-mwait-lock"

    @property
    def is_lock(self) -> bool:
        return self in (
            AtomicFlavor.SPIN_LOCK_AMO,
            AtomicFlavor.SPIN_LOCK_LR_SC,
            AtomicFlavor.SPIN_LOCK_COLIBRI,
            AtomicFlavor.MCS_MWAIT_LOCK,
        )

    def accepts(self, adapter: AdapterKind) -> bool:
        """Whether programs of this flavor can run on ``adapter``."""
        if self in (AtomicFlavor.AMO_ADD, AtomicFlavor.SPIN_LOCK_AMO):
            return True
        if self in (AtomicFlavor.LR_SC, AtomicFlavor.SPIN_LOCK_LR_SC):
            return adapter is AdapterKind.PLAIN_LRSC
        if self is AtomicFlavor.MCS_MWAIT_LOCK:
            return adapter is AdapterKind.COLIBRI
        return adapter.supports_lrwait


class ProgramKind(str, Enum):
    """Scripted core programs."""

    RMW_LOOP = "rmw-loop"
    LOCKED_CS = "locked-cs"
    QUEUE_OPS = "queue-ops"
    WORKER_STREAM = "worker-stream"
    IDLE = "idle"
    MWAIT_ONCE = "mwait-once"
    STORE_ONCE = "store-once"
    ROGUE_SCWAIT = "rogue-scwait"


class TargetOrder(str, Enum):
    RANDOM = "random"
    ROUND_ROBIN = "round-robin"


class Mutation(str, Enum):
    """Seeded protocol bugs the verifier must catch."""

    DROP_SUCCESSOR_UPDATE = "drop-successor-update"
    SKIP_HEAD_INVALIDATION = "skip-head-invalidation"
    WAKE_WRONG_SUCCESSOR = "wake-wrong-successor"
    DOUBLE_RESPONSE = "double-response"
    FORGET_STORE_INVALIDATION = "forget-store-invalidation"


class VerifyWorkload(str, Enum):
    """Core programs the exhaustive explorer runs."""

    INCREMENTS = "increments"
    MWAIT_CASCADE = "mwait-cascade"
    ROGUE_SCWAIT = "rogue-scwait"
    STORE_INTERFERENCE = "store-interference"


class ExperimentName(str, Enum):
    HISTOGRAM = "histogram"
    QUEUE = "queue"
    INTERFERENCE = "interference"


class SimConfig(BaseModel):
    """Machine parameters of one simulation instance."""

    model_config = ConfigDict(extra="forbid")

    n_cores: int = Field(default=4, ge=1, description="Number of cores")
    n_banks: int = Field(default=16, ge=1, description="Number of memory banks")
    channel_latency: int = Field(default=5, ge=1, description="Cycles per channel hop")
    bank_service_rate: int = Field(default=1, description="Requests a bank serves per cycle")
    adapter: AdapterKind = Field(default=AdapterKind.COLIBRI, description="Bank front-end")
    queue_slots: int = Field(default=1, ge=1, description="q for the bounded reservation queue")
    addresses_per_bank: int = Field(default=1, ge=1, description="Colibri queues per bank")
    backoff_cycles: int = Field(default=128, ge=0, description="Constant software backoff")
    backoff_jitter: int = Field(default=16, ge=0, description="Seeded extra backoff cycles")
    fail_retry_window: Optional[int] = Field(
        default=None,
        ge=0,
        description="Upper bound of the seeded pause after a FailResp; channel_latency if unset",
    )
    seed: int = Field(default=0, ge=0, description="Run seed")
    max_cycles: int = Field(default=50_000_000, ge=1, description="Cycle budget per run")
    monitor: bool = Field(default=False, description="Check protocol properties online")

    @field_validator("bank_service_rate")
    @classmethod
    def _fixed_service_rate(cls, value: int) -> int:
        if value != 1:
            raise ValueError("bank_service_rate is fixed at 1 request per cycle")
        return value

    @property
    def addresses_per_bank_supported(self) -> bool:
        return self.addresses_per_bank in SUPPORTED_ADDRESSES_PER_BANK


class CoreProgram(BaseModel):
    """A scripted workload assigned to one or more cores."""

    model_config = ConfigDict(extra="forbid")

    cores: str = Field(default="all", description="'all', a range '0-3' or a list '0,2,5'")
    kind: ProgramKind = ProgramKind.RMW_LOOP
    iterations: Optional[int] = Field(default=1, ge=1)
    target_addresses: list[int] = Field(default_factory=list)
    bins: Optional[int] = Field(default=None, ge=1, description="Histogram bins to allocate")
    target_order: TargetOrder = TargetOrder.RANDOM
    atomic_flavor: AtomicFlavor = AtomicFlavor.COLIBRI
    backoff: Optional[int] = Field(default=None, ge=0)
    cs_length: Optional[int] = Field(default=None, ge=0)
    think_cycles: int = Field(default=0, ge=0, description="Compute before each iteration")
    start_delay: int = Field(default=0, ge=0)
    background: bool = False
    max_retries: Optional[int] = Field(default=None, ge=0)
    expected: int = 0
    value: int = 1

    @model_validator(mode="after")
    def _check(self) -> "CoreProgram":
        if self.iterations is None and not self.background:
            raise ValueError("iterations may only be omitted for background programs")
        if self.kind is ProgramKind.RMW_LOOP and self.atomic_flavor.is_lock:
            raise ValueError(f"rmw-loop cannot use lock flavor {self.atomic_flavor.value}")
        if self.kind is ProgramKind.LOCKED_CS and not self.atomic_flavor.is_lock:
            raise ValueError(f"locked-cs needs a lock flavor, got {self.atomic_flavor.value}")
        return self

    def core_ids(self, n_cores: int) -> list[int]:
        """Expand the ``cores`` selector."""
        text = self.cores.strip()
        if text == "all":
            return list(range(n_cores))
        ids: list[int] = []
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                low, high = part.split("-", 1)
                ids.extend(range(int(low), int(high) + 1))
            elif part:
                ids.append(int(part))
        bad = [i for i in ids if not 0 <= i < n_cores]
        if bad:
            raise ConfigError(f"program cores {bad} outside 0..{n_cores - 1}")
        return ids


class ExperimentSpec(BaseModel):
    """A parameter sweep run by the bench harness."""

    model_config = ConfigDict(extra="forbid")

    name: ExperimentName = ExperimentName.HISTOGRAM
    sweep: Optional[str] = Field(default=None, description="bins | cores | pollers")
    values: list[Union[int, str]] = Field(default_factory=list)
    flavors: list[str] = Field(default_factory=list)
    repetitions: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    increments_per_core: int = Field(default=64, ge=1)
    think_cycles: int = Field(
        default=20, ge=0, description="Histogram loop overhead: drawing the bin and its address"
    )
    ops_per_core: int = Field(default=16, ge=2)
    workers: int = Field(default=4, ge=1)
    stream_length: int = Field(default=256, ge=1)
    stream_banks: int = Field(default=16, ge=1)


class ExplorationConfig(BaseModel):
    """Bounds of one exhaustive exploration."""

    model_config = ConfigDict(extra="forbid")

    n_cores: int = Field(default=2, ge=1, le=4)
    n_banks: int = Field(default=1, ge=1, le=2)
    addresses: int = Field(default=1, ge=1, le=2)
    ops_per_core: int = Field(default=1, ge=1, le=3)
    adapter: AdapterKind = AdapterKind.COLIBRI
    queue_slots: int = Field(default=1, ge=1)
    addresses_per_bank: int = Field(default=2, ge=1)
    delay_choices: list[int] = Field(default_factory=lambda: [1, 3])
    workload: VerifyWorkload = VerifyWorkload.INCREMENTS
    mutation: Optional[Mutation] = None
    max_retries: int = Field(default=1, ge=0, description="LR/SC retry bound")
    writer_delay: int = Field(default=2, ge=0)
    compare_with_ideal: bool = True
    max_states: int = Field(default=1_000_000, ge=1)
    golden_trace: Optional[str] = Field(default=None, description="Trace file to match")

    @field_validator("delay_choices")
    @classmethod
    def _positive_delays(cls, value: list[int]) -> list[int]:
        if not value or any(d < 1 for d in value):
            raise ValueError("delay_choices must be a non-empty list of positive latencies")
        return sorted(set(value))


class RunConfig(BaseModel):
    """Everything one config file can hold."""

    model_config = ConfigDict(extra="forbid")

    sim: SimConfig = Field(default_factory=SimConfig)
    programs: list[CoreProgram] = Field(default_factory=list)
    experiment: Optional[ExperimentSpec] = None
    verify: Optional[ExplorationConfig] = None

    @model_validator(mode="after")
    def _check_flavors(self) -> "RunConfig":
        for program in self.programs:
            if program.kind in (ProgramKind.RMW_LOOP, ProgramKind.LOCKED_CS, ProgramKind.QUEUE_OPS):
                if not program.atomic_flavor.accepts(self.sim.adapter):
                    raise ValueError(
                        f"flavor {program.atomic_flavor.value} cannot run on adapter "
                        f"{self.sim.adapter.value}"
                    )
            colibri = self.sim.adapter is AdapterKind.COLIBRI
            if program.kind is ProgramKind.MWAIT_ONCE and not colibri:
                raise ValueError("mwait-once programs need the colibri adapter")
        return self


def _describe_validation_error(error: ValidationError) -> str:
    """Turn pydantic errors into one diagnostic per offending key."""
    lines = []
    for item in error.errors():
        key = ".".join(str(part) for part in item["loc"]) or "<root>"
        if item["type"] == "extra_forbidden":
            lines.append(f"unknown key '{key}'")
        else:
            lines.append(f"{key}: {item['msg']}")
    return "; ".join(lines)


class ConfigManager:
    """Loads run configuration from YAML, overrides and the environment."""

    ENV_SEED = "COLIBRI_SIM_SEED"
    RESOLVED_NAME = "resolved-config.yaml"

    def load(self, path: Optional[Path] = None, overrides: Sequence[str] = ()) -> RunConfig:
        """Load and validate a config file, then apply overrides and env."""
        data: dict[str, Any] = {}
        if path is not None:
            data = self._read(path)
        data = self.apply_overrides(data, self.parse_overrides(overrides))
        seed = self.get_env_seed()
        if seed is not None:
            data.setdefault("sim", {})["seed"] = seed
            if isinstance(data.get("experiment"), dict):
                data["experiment"]["seed"] = seed
        return self.validate(data)

    def validate(self, data: dict[str, Any]) -> RunConfig:
        try:
            return RunConfig(**data)
        except ValidationError as e:
            raise ConfigError(_describe_validation_error(e)) from e

    def _read(self, path: Path) -> dict[str, Any]:
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = yaml.safe_load(path.read_text())
        except yaml.YAMLError as e:
            raise ConfigError(f"malformed config {path}: {e}") from e
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigError(f"malformed config {path}: top level must be a mapping")
        return data

    def parse_overrides(self, items: Sequence[str]) -> dict[str, Any]:
        """Parse ``key=value`` pairs; the same key twice with different values is an error."""
        parsed: dict[str, Any] = {}
        for item in items:
            if "=" not in item:
                raise ConfigError(f"override '{item}' is not of the form key=value")
            key, raw = item.split("=", 1)
            key = key.strip()
            if not key:
                raise ConfigError(f"override '{item}' has an empty key")
            try:
                value = yaml.safe_load(raw)
            except yaml.YAMLError:
                value = raw
            if key in parsed and parsed[key] != value:
                raise ConfigError(
                    f"contradictory overrides for '{key}': {parsed[key]!r} and {value!r}"
                )
            parsed[key] = value
        return parsed

    def apply_overrides(self, data: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
        """Write dotted overrides into a nested mapping."""
        for key, value in overrides.items():
            node = data
            parts = key.split(".")
            for part in parts[:-1]:
                child = node.get(part)
                if child is None:
                    child = node[part] = {}
                if not isinstance(child, dict):
                    raise ConfigError(f"override '{key}': '{part}' is not a section")
                node = child
            node[parts[-1]] = value
            logger.debug("override %s=%r", key, value)
        return data

    def get_env_seed(self) -> Optional[int]:
        """Seed from the environment, which takes precedence over the file."""
        raw = os.environ.get(self.ENV_SEED)
        if raw is None or raw == "":
            return None
        try:
            return int(raw)
        except ValueError as e:
            raise ConfigError(f"{self.ENV_SEED} must be an integer, got {raw!r}") from e

    def echo(self, config: RunConfig, out_dir: Path) -> Path:
        """Write the fully resolved config next to a run's outputs."""
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / self.RESOLVED_NAME
        path.write_text(yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False))
        return path


# Global config manager instance
config_manager = ConfigManager()
