"""Benchmark program generators with golden references."""

from ..config import ClusterConfig
from .base import (GeneratedKernel, KernelSpec, TilingPlan, arithmetic_intensity, golden_conv2d,
                   golden_matmul)
from .conv2d import gen_conv2d
from .matmul import gen_matmul


def generate(spec: KernelSpec, cfg: ClusterConfig, **inputs) -> GeneratedKernel:
    spec.validate()
    if spec.kind == "matmul":
        return gen_matmul(spec, cfg, **inputs)
    return gen_conv2d(spec, cfg, **inputs)


__all__ = ["GeneratedKernel", "KernelSpec", "TilingPlan", "arithmetic_intensity", "gen_conv2d",
           "gen_matmul", "generate", "golden_conv2d", "golden_matmul"]
