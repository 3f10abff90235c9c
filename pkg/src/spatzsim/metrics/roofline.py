"""Roofline bound and the per-run performance summary."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable

from ..errors import RooflineViolation

# measured points may sit on the roof; allow for float rounding only
ROOF_SLACK = 1e-9


def roofline_bound(intensity: float, peak: float, bandwidth: float) -> float:
    """Attainable op/cycle: min(peak, intensity * bandwidth)."""
    if intensity < 0 or peak < 0 or bandwidth < 0:
        raise ValueError("roofline inputs must be non-negative")
    return min(peak, intensity * bandwidth)


@dataclass(frozen=True)
class RooflinePoint:
    label: str
    intensity: float
    performance: float


def performance_summary(ops: int, cycles: int, peak: float, bandwidth: float, intensity: float) -> dict:
    """op/cycle, utilization and roof for one run; raises if the point is above the roof."""
    perf = ops / cycles if cycles else 0.0
    roof = roofline_bound(intensity, peak, bandwidth)
    if perf > roof * (1 + ROOF_SLACK):
        raise RooflineViolation(f"{perf:.3f} op/cycle exceeds the roof {roof:.3f} at intensity {intensity:.3f}")
    return {
        "op_per_cycle": perf,
        "utilization_pct": 100.0 * perf / peak if peak else 0.0,
        "intensity": intensity,
        "roof": roof,
    }


def roofline_csv(points: Iterable[RooflinePoint]) -> str:
    """CSV with columns label, intensity, performance; rows sorted by label."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "intensity", "performance"])
    for p in sorted(points, key=lambda p: p.label):
        w.writerow([p.label, f"{p.intensity:.6g}", f"{p.performance:.6g}"])
    return buf.getvalue()
