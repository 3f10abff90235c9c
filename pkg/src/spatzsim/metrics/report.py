"""Per-run report with stable JSON field names."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

from ..config import ClusterConfig
from ..kernels.base import KernelSpec, arithmetic_intensity
from .counters import STALL_REASONS, PerfCounters
from .energy import EnergyReport
from .roofline import performance_summary

REPORT_VERSION = 1

# field -> accepted types; the JSON written by :meth:`SimReport.to_json` must match
SCHEMA = {
    "config": str,
    "kernel": str,
    "cycles": int,
    "ops": int,
    "op_per_cycle": float,
    "utilization_pct": float,
    "intensity": float,
    "roof": float,
    "stalls": dict,
    "energy_pj": dict,
    "power_w": (float, type(None)),
    "gops": (float, type(None)),
    "gops_per_w": (float, type(None)),
}


@dataclass
class SimReport:
    config: str
    kernel: str
    cycles: int
    ops: int
    op_per_cycle: float
    utilization_pct: float
    intensity: float
    roof: float
    stalls: dict
    energy_pj: dict = field(default_factory=dict)
    power_w: Optional[float] = None
    gops: Optional[float] = None
    gops_per_w: Optional[float] = None
    # run parameters and anything else that is not a measurement
    metadata: dict = field(default_factory=dict)

    def with_energy(self, e: EnergyReport) -> "SimReport":
        self.energy_pj = {k: round(v, 3) for k, v in e.components_pj.items()}
        self.power_w = e.power_w
        self.gops = e.gops
        self.gops_per_w = e.gops_per_w
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["report_version"] = REPORT_VERSION
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def validate_report(d: dict) -> None:
    """Raise ValueError unless ``d`` carries every schema field with the right type."""
    for key, types in SCHEMA.items():
        if key not in d:
            raise ValueError(f"report lacks field {key!r}")
        val = d[key]
        if types is float and isinstance(val, int) and not isinstance(val, bool):
            continue
        if isinstance(types, tuple) and float in types and isinstance(val, int) and not isinstance(val, bool):
            continue
        if not isinstance(val, types):
            raise ValueError(f"report field {key!r} has type {type(val).__name__}")
    for k, v in d["stalls"].items():
        if k not in STALL_REASONS or not isinstance(v, int):
            raise ValueError(f"bad stall entry {k!r}: {v!r}")


def performance_report(counters: PerfCounters, cfg: ClusterConfig, spec: KernelSpec) -> SimReport:
    """op/cycle, utilization and roofline point; raises RooflineViolation above the roof.

    Operations are the kernel's structural count (a multiply-accumulate is
    two), so a kernel that seeds its accumulators with a plain multiply is
    not penalised for the add it skips.  The compute roof is the peak at the
    kernel's element width.
    """
    summary = performance_summary(spec.ops, counters.cycles, cfg.peak_ops_at(spec.sew),
                                  cfg.bandwidth_bytes_per_cycle, arithmetic_intensity(spec))
    stalls = {k: int(counters.stall_cycles[k]) for k in STALL_REASONS if counters.stall_cycles.get(k)}
    label = spec.label if spec.kind == "conv2d" else f"matmul_{spec.n}"
    return SimReport(config=cfg.name, kernel=label, cycles=counters.cycles, ops=spec.ops,
                     stalls=stalls, metadata={"counted_ops": counters.elementary_ops}, **summary)
