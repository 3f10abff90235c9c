"""Performance and activity counters shared by every model layer."""

from __future__ import annotations

import dataclasses
from collections import Counter
from dataclasses import dataclass, field

STALL_REASONS = ("busy", "issue", "fu_busy", "vrf_port", "chaining", "bank_conflict", "memory",
                 "mem_order", "ifetch", "drain", "idle")


@dataclass
class PerfCounters:
    cycles: int = 0
    elementary_ops: int = 0
    # vector unit
    vau_busy_beats: int = 0
    vau_macc_elems: int = 0
    vau_mul_elems: int = 0
    vau_alu_elems: int = 0
    vau_move_elems: int = 0
    vlsu_requests: int = 0
    vlsu_beats: int = 0
    vsldu_beats: int = 0
    vrf_reads: int = 0  # 32-bit words
    vrf_writes: int = 0  # 32-bit words
    vector_dispatched: int = 0
    # scalar core
    scalar_instructions_issued: int = 0
    ipu_mac: int = 0
    ipu_mul: int = 0
    scalar_rf_reads: int = 0
    scalar_rf_writes: int = 0
    scalar_loads: int = 0
    scalar_stores: int = 0
    # memory system
    sram_accesses: int = 0
    interconnect_local: int = 0
    interconnect_group: int = 0
    interconnect_remote: int = 0
    bank_conflict_cycles: int = 0
    icache_fetches: int = 0
    icache_misses: int = 0
    # core-cycles attributed to exactly one reason each
    stall_cycles: Counter = field(default_factory=Counter)
    core_cycles: int = 0

    def merge(self, other: "PerfCounters") -> "PerfCounters":
        for f in dataclasses.fields(self):
            if f.name == "stall_cycles":
                self.stall_cycles.update(other.stall_cycles)
            elif f.name != "cycles":
                setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        self.cycles = max(self.cycles, other.cycles)
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["stall_cycles"] = {k: int(self.stall_cycles.get(k, 0)) for k in STALL_REASONS
                             if self.stall_cycles.get(k, 0)}
        return d

    def scaled(self, factor: float) -> dict:
        """Event counts multiplied by ``factor`` (used by the linearity checks)."""
        return {k: v * factor for k, v in self.event_counts().items()}

    def event_counts(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)
                if f.name not in ("stall_cycles",)}
