"""Cycle-level models of the Snitch core, the Spatz vector unit and the cluster."""

from .cluster import Cluster, SimResult, simulate
from .vrf import VrfGeometry, map_vreg_slice


def issue_rate_bound(scalar_ops_per_vector_op: float, vector_beats: float) -> float:
    """Largest fraction of peak reachable when each vector instruction needs
    ``scalar_ops_per_vector_op`` extra issue slots and keeps the unit busy for
    ``vector_beats`` cycles."""
    if scalar_ops_per_vector_op < 0 or vector_beats < 0:
        raise ValueError("counts must be non-negative")
    return min(1.0, vector_beats / (1.0 + scalar_ops_per_vector_op))


__all__ = ["Cluster", "SimResult", "VrfGeometry", "issue_rate_bound", "map_vreg_slice", "simulate"]
