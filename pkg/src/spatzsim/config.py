"""Cluster configuration: topology, latencies and micro-architectural knobs.

Named configurations live as YAML presets in ``spatzsim/presets``.  A
config file is a flat mapping with a ``schema_version`` key; any field of
:class:`ClusterConfig` may be given, everything else takes the defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import yaml

from .errors import ConfigInvalid

SCHEMA_VERSION = 1
PRESET_DIR = Path(__file__).parent / "presets"
MACUS_PER_TILE = 4
ALIASES = {"mempool16": "minpool16"}


@dataclass(frozen=True)
class HierarchyLatency:
    local_tile: int = 1
    same_group: int = 3
    remote_group: int = 5

    def validate(self) -> None:
        if not 1 <= self.local_tile <= self.same_group <= self.remote_group <= 5:
            raise ConfigInvalid(f"latencies must satisfy 1 <= local <= group <= remote <= 5, got {self}")


@dataclass(frozen=True)
class ClusterConfig:
    name: str = "custom"
    n_cores: int = 1
    macus_per_pe: int = 4  # 0 selects a scalar Snitch PE
    vlen_bits: int = 512
    n_groups: int = 1
    tiles_per_group: int = 1
    banks_per_tile: int = 16
    bank_bytes: int = 1024
    latency: HierarchyLatency = field(default_factory=HierarchyLatency)
    frequency_hz: float = 590e6
    chaining: bool = True
    # vector unit
    vau_latency: int = 2
    fu_queue_depth: int = 4
    rob_depth: Optional[int] = None  # beats; defaults to 2*N
    vsldu_swap_cycles: int = 1
    # scalar core and fetch
    mul_latency: int = 2
    load_outstanding: int = 8
    branch_penalty: int = 1
    l0_icache_bytes: int = 128
    icache_miss_penalty: int = 5
    hang_cycles: int = 20000
    energy_table: Optional[str] = None

    # -- derived ------------------------------------------------------------
    @property
    def is_vector(self) -> bool:
        return self.macus_per_pe > 0

    @property
    def macus_per_core(self) -> int:
        return max(self.macus_per_pe, 1)

    @property
    def total_macus(self) -> int:
        return self.n_cores * self.macus_per_core

    @property
    def cores_per_tile(self) -> int:
        return MACUS_PER_TILE // self.macus_per_core

    @property
    def n_tiles(self) -> int:
        return self.n_groups * self.tiles_per_group

    @property
    def n_banks(self) -> int:
        return self.n_tiles * self.banks_per_tile

    @property
    def l1_total_bytes(self) -> int:
        return self.n_banks * self.bank_bytes

    @property
    def peak_ops_per_cycle(self) -> float:
        return 2.0 * self.total_macus

    def peak_ops_at(self, sew: int) -> float:
        """Peak at element width ``sew``: vector MACUs split into 32/sew lanes."""
        return self.peak_ops_per_cycle * (32 // sew if self.is_vector else 1)

    @property
    def bandwidth_bytes_per_cycle(self) -> float:
        return 4.0 * self.total_macus

    @property
    def rob_beats(self) -> int:
        return self.rob_depth if self.rob_depth is not None else 2 * self.macus_per_pe

    def core_tile(self, core: int) -> int:
        return min(core // self.cores_per_tile, self.n_tiles - 1)

    def validate(self) -> "ClusterConfig":
        if self.n_cores < 1:
            raise ConfigInvalid("n_cores must be >= 1")
        if self.macus_per_pe not in (0, 1, 2, 4):
            raise ConfigInvalid(f"macus_per_pe must be 0 (scalar) or one of 1, 2, 4; got {self.macus_per_pe}")
        if self.is_vector and self.vlen_bits != 128 * self.macus_per_pe:
            raise ConfigInvalid(f"vlen_bits={self.vlen_bits} must equal 128 * N = {128 * self.macus_per_pe}")
        if self.n_tiles < 1 or self.banks_per_tile < 1 or self.bank_bytes % 4:
            raise ConfigInvalid("topology counts must be positive and banks word-sized")
        if self.n_cores > self.n_tiles * self.cores_per_tile:
            raise ConfigInvalid(f"{self.n_cores} cores do not fit in {self.n_tiles} tiles "
                                f"of {self.cores_per_tile} cores")
        if self.n_banks & (self.n_banks - 1):
            raise ConfigInvalid("total bank count must be a power of two")
        self.latency.validate()
        if self.vau_latency < 1 or self.fu_queue_depth < 1 or (self.is_vector and self.rob_beats < 1):
            raise ConfigInvalid("pipeline parameters must be >= 1")
        if self.frequency_hz <= 0:
            raise ConfigInvalid("frequency_hz must be positive")
        return self

    def replace(self, **kw) -> "ClusterConfig":
        if "latency" in kw and isinstance(kw["latency"], dict):
            kw["latency"] = HierarchyLatency(**kw["latency"])
        return dataclasses.replace(self, **kw).validate()

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d


_FIELDS = {f.name for f in dataclasses.fields(ClusterConfig)}


def config_from_dict(data: dict) -> ClusterConfig:
    data = dict(data)
    version = data.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigInvalid(f"unsupported schema_version {version}")
    unknown = set(data) - _FIELDS
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
    lat = data.pop("latency", None)
    try:
        if lat is not None:
            data["latency"] = HierarchyLatency(**{k: int(v) for k, v in lat.items()})
        for f in dataclasses.fields(ClusterConfig):
            if f.name in data and data[f.name] is not None and f.type in ("int", "float", "bool"):
                data[f.name] = {"int": int, "float": float, "bool": bool}[f.type](data[f.name])
        return ClusterConfig(**data).validate()
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigInvalid(str(exc)) from None


def preset_names() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))


def load_config(name_or_path: Union[str, Path]) -> ClusterConfig:
    """Load a named preset or a YAML config file."""
    key = str(name_or_path)
    key = ALIASES.get(key, key)
    path = PRESET_DIR / f"{key}.yaml"
    if not path.exists():
        path = Path(name_or_path)
    if not path.exists():
        raise ConfigInvalid(f"no preset or file named {name_or_path!r} (presets: {', '.join(preset_names())})")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{path}: expected a mapping")
    return config_from_dict(data)
