"""Counters, roofline bounds, the linear energy model and run reports."""

from .counters import STALL_REASONS, PerfCounters
from .energy import EnergyReport, EnergyTable, energy_report, event_counts
from .report import SimReport, performance_report, validate_report
from .roofline import RooflinePoint, performance_summary, roofline_bound, roofline_csv

__all__ = ["STALL_REASONS", "EnergyReport", "EnergyTable", "PerfCounters", "RooflinePoint", "SimReport",
           "energy_report", "event_counts", "performance_report", "performance_summary", "roofline_bound",
           "roofline_csv", "validate_report"]
