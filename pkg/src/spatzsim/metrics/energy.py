"""Linear energy model: event counts times per-event energies.

Every counted event and every static (per unit-cycle) term has one entry
in an :class:`EnergyTable`.  Entries are grouped into components so a run
can be broken down the same way the reference measurements are.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import yaml

from ..config import ClusterConfig
from ..errors import MissingTableEntry
from .counters import PerfCounters

DEFAULT_TABLE = Path(__file__).resolve().parent.parent / "data" / "energy_table.yaml"

# event name -> component it is charged to
EVENT_COMPONENT = {
    "snitch_issue": "snitch",  # per scalar instruction issued (ALU ops included)
    "snitch_static": "snitch",  # per core-cycle
    "srf_access": "srf",  # per scalar register file read or write
    "srf_static": "srf",  # per core-cycle
    "vrf_read_word": "vrf",  # per 32-bit word
    "vrf_write_word": "vrf",
    "vrf_static": "vrf",  # per MACU-cycle of vector cores (VRF size scales with N)
    "vau_macc_elem": "macu",
    "vau_mul_elem": "macu",
    "vau_alu_elem": "macu",
    "ipu_mac": "macu",
    "ipu_mul": "macu",
    "macu_static": "macu",  # per MACU-cycle
    "vlsu_word": "vlsu",
    "vlsu_beat": "vlsu",  # per committed or issued beat (ROB and request control)
    "vlsu_static": "vlsu",  # per MACU-cycle of vector cores
    "icache_fetch": "icache",
    "icache_refill": "icache",
    "icache_static": "icache",  # per core-cycle
    "xbar_local": "interconnect",
    "xbar_group": "interconnect",
    "xbar_remote": "interconnect",
    "xbar_static": "interconnect",  # per tile-cycle
    "spm_access": "spm",
    "spm_static": "spm",  # per bank-cycle
}
COMPONENTS = ("snitch", "srf", "vrf", "macu", "vlsu", "icache", "interconnect", "spm")


def event_counts(c: PerfCounters, cfg: ClusterConfig) -> dict:
    """Map raw counters and the configuration onto the table's event names."""
    cyc = c.cycles
    vec_macus = cfg.n_cores * cfg.macus_per_pe if cfg.is_vector else 0
    return {
        "snitch_issue": c.scalar_instructions_issued,
        "snitch_static": cyc * cfg.n_cores,
        "srf_access": c.scalar_rf_reads + c.scalar_rf_writes,
        "srf_static": cyc * cfg.n_cores,
        "vrf_read_word": c.vrf_reads,
        "vrf_write_word": c.vrf_writes,
        "vrf_static": cyc * vec_macus,
        "vau_macc_elem": c.vau_macc_elems,
        "vau_mul_elem": c.vau_mul_elems,
        "vau_alu_elem": c.vau_alu_elems + c.vau_move_elems,
        "ipu_mac": c.ipu_mac,
        "ipu_mul": c.ipu_mul,
        "macu_static": cyc * cfg.total_macus,
        "vlsu_word": c.vlsu_beats * cfg.macus_per_pe if cfg.is_vector else 0,
        "vlsu_beat": c.vlsu_beats,
        "vlsu_static": cyc * vec_macus,
        "icache_fetch": c.icache_fetches,
        "icache_refill": c.icache_misses,
        "icache_static": cyc * cfg.n_cores,
        "xbar_local": c.interconnect_local,
        "xbar_group": c.interconnect_group,
        "xbar_remote": c.interconnect_remote,
        "xbar_static": cyc * cfg.n_tiles,
        "spm_access": c.sram_accesses,
        "spm_static": cyc * cfg.n_banks,
    }


@dataclass
class EnergyTable:
    """pJ per event; plain data, loadable from and dumpable to YAML."""
    entries: dict
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.entries.items():
            if v < 0:
                raise ValueError(f"energy entry {k} is negative ({v})")

    def __getitem__(self, key: str) -> float:
        try:
            return self.entries[key]
        except KeyError:
            raise MissingTableEntry(f"energy table has no entry for {key!r}") from None

    @classmethod
    def load(cls, path: Union[str, Path, None] = None) -> "EnergyTable":
        data = yaml.safe_load(Path(path or DEFAULT_TABLE).read_text())
        if not isinstance(data, dict) or "entries" not in data:
            raise MissingTableEntry(f"{path}: expected a mapping with an 'entries' key")
        return cls({k: float(v) for k, v in data["entries"].items()}, data.get("provenance", {}))

    def dump(self, path: Union[str, Path], header: str = "") -> None:
        body = yaml.safe_dump({"entries": self.entries, "provenance": self.provenance}, sort_keys=False)
        Path(path).write_text(header + body)


@dataclass(frozen=True)
class EnergyReport:
    components_pj: dict
    total_pj: float
    seconds: float
    power_w: float
    ops: int
    gops: float
    gops_per_w: Optional[float]  # None when nothing was computed or spent

    def to_dict(self) -> dict:
        return {"energy_pj": dict(self.components_pj), "total_pj": self.total_pj, "power_w": self.power_w,
                "gops": self.gops, "gops_per_w": self.gops_per_w}


def energy_report(counters: PerfCounters, table: EnergyTable, cfg: ClusterConfig,
                  ops: Optional[int] = None) -> EnergyReport:
    """Energy per component, average power and efficiency.

    ``ops`` overrides the counted elementary operations (kernel reports pass
    the kernel's structural operation count).
    """
    events = event_counts(counters, cfg)
    comp = {c: 0.0 for c in COMPONENTS}
    for name, n in events.items():
        comp[EVENT_COMPONENT[name]] += n * table[name]
    total = sum(comp.values())
    seconds = counters.cycles / cfg.frequency_hz
    power = total * 1e-12 / seconds if seconds else 0.0
    ops = counters.elementary_ops if ops is None else ops
    gops = ops / seconds / 1e9 if seconds else 0.0
    # ops per pJ equals Gops/W
    eff = ops / total * 1e3 if ops and total else None
    return EnergyReport(components_pj=comp, total_pj=total, seconds=seconds, power_w=power, ops=ops,
                        gops=gops, gops_per_w=eff)
