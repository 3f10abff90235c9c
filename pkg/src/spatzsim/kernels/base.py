"""Kernel descriptions, golden references and the generated-program container."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import UnsupportedShape
from ..isa.asm import Program, assemble

KINDS = ("matmul", "conv2d")
CONV_SIZES = (3, 5, 7)


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    n: int
    f: int = 3  # conv2d only
    sew: int = 32
    seed: int = 0
    variant: str = "auto"  # auto | vector | scalar
    pad: bool = False  # zero-pad matmul sizes the block plan does not divide

    def validate(self) -> "KernelSpec":
        if self.kind not in KINDS:
            raise UnsupportedShape(f"unknown kernel kind {self.kind!r}")
        if self.n < 1:
            raise UnsupportedShape("n must be positive")
        if self.sew not in (8, 16, 32):
            raise UnsupportedShape(f"element width {self.sew} not in (8, 16, 32)")
        if self.variant not in ("auto", "vector", "scalar"):
            raise UnsupportedShape(f"unknown variant {self.variant!r}")
        if self.kind == "conv2d":
            if self.f not in CONV_SIZES:
                raise UnsupportedShape(f"conv2d kernel size must be one of {CONV_SIZES}")
            if self.n < self.f:
                raise UnsupportedShape(f"image size {self.n} smaller than kernel size {self.f}")
            if self.sew != 32:
                raise UnsupportedShape("conv2d accumulates in 32-bit elements only")
        return self

    @property
    def label(self) -> str:
        return f"matmul_{self.n}" if self.kind == "matmul" else f"conv2d_{self.f}"

    @property
    def out_dim(self) -> int:
        return self.n if self.kind == "matmul" else self.n - self.f + 1

    @property
    def ops(self) -> int:
        """Elementary operations, a multiply and an add counted separately."""
        if self.kind == "matmul":
            return 2 * self.n ** 3
        return 2 * self.f ** 2 * self.out_dim ** 2


def arithmetic_intensity(spec: KernelSpec) -> float:
    """Operations per byte of compulsory L1 traffic.

    matmul reads A and B and writes C once; conv2d counts one element load
    and one element store per output.
    """
    es = spec.sew // 8
    if spec.kind == "matmul":
        return 2 * spec.n ** 3 / (3 * spec.n ** 2 * es)
    return 2 * spec.f ** 2 / (2 * es)


@dataclass
class TilingPlan:
    """Work decomposition chosen for one kernel on one configuration."""
    variant: str
    block_rows: int
    block_cols: int
    lmul: int = 1
    vectors_per_block: int = 0
    loads_per_block: int = 0  # L1 elements loaded per reduction step
    macc_per_block: int = 0  # multiply-accumulates per reduction step
    jobs: int = 1
    extra: dict = field(default_factory=dict)


def _mask(sew: int) -> int:
    return (1 << sew) - 1


def random_matrix(rng: np.random.Generator, shape, sew: int) -> np.ndarray:
    return rng.integers(0, 1 << sew, size=shape, dtype=np.uint64)


def golden_matmul(a: np.ndarray, b: np.ndarray, sew: int = 32) -> np.ndarray:
    """C = A B modulo 2**sew (uint64 arithmetic wraps modulo 2**64)."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    with np.errstate(over="ignore"):
        c = a @ b
    return c & np.uint64(_mask(sew))


def golden_conv2d(img: np.ndarray, k: np.ndarray, sew: int = 32) -> np.ndarray:
    """Valid-region 2D correlation, out[i,j] = sum k[r,c] img[i+r, j+c] mod 2**sew."""
    img = np.asarray(img, dtype=np.uint64)
    k = np.asarray(k, dtype=np.uint64)
    f = k.shape[0]
    ho, wo = img.shape[0] - f + 1, img.shape[1] - f + 1
    out = np.zeros((ho, wo), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for r in range(f):
            for c in range(f):
                out += k[r, c] * img[r:r + ho, c:c + wo]
    return out & np.uint64(_mask(sew))


def to_bytes(arr: np.ndarray, sew: int) -> bytes:
    dt = {8: "<u1", 16: "<u2", 32: "<u4"}[sew]
    return (np.asarray(arr, dtype=np.uint64) & np.uint64(_mask(sew))).astype(dt).tobytes()


@dataclass
class GeneratedKernel:
    """Assembly program, initial memory image and expected output region."""
    spec: KernelSpec
    config_name: str
    source: str
    image: list  # [(addr, bytes)]
    expected: np.ndarray
    out_addr: int
    plan: TilingPlan
    inputs: dict = field(default_factory=dict)
    _program: Optional[Program] = field(default=None, repr=False)

    @property
    def program(self) -> Program:
        if self._program is None:
            self._program = assemble(self.source)
        return self._program

    @property
    def ops(self) -> int:
        return self.spec.ops

    @property
    def intensity(self) -> float:
        return arithmetic_intensity(self.spec)

    def result(self, mem) -> np.ndarray:
        rows, cols = self.expected.shape
        return mem.array(self.out_addr, rows * cols, self.spec.sew).astype(np.uint64).reshape(rows, cols)

    def check(self, mem) -> bool:
        return bool(np.array_equal(self.result(mem), self.expected))

    def digest(self) -> str:
        return hashlib.sha256(to_bytes(self.expected, self.spec.sew)).hexdigest()

    def sidecar(self) -> dict:
        return {
            "spec": asdict(self.spec),
            "config": self.config_name,
            "expected_sha256": self.digest(),
            "out_addr": self.out_addr,
            "out_shape": list(self.expected.shape),
            "ops": self.ops,
            "intensity": self.intensity,
            "plan": asdict(self.plan),
        }

    def write(self, stem: str | Path) -> dict:
        """Write ``stem.s``, ``stem.hex`` (``@addr`` blocks) and ``stem.json``."""
        stem = Path(stem)
        stem.with_suffix(".s").write_text(self.source)
        lines = []
        for addr, blob in self.image:
            lines.append(f"@{addr:08x}")
            padded = blob + bytes(-len(blob) % 4)
            lines.extend(f"{int.from_bytes(padded[i:i + 4], 'little'):08x}" for i in range(0, len(padded), 4))
        stem.with_suffix(".hex").write_text("\n".join(lines) + "\n")
        meta = self.sidecar()
        stem.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True))
        return meta


class Asm:
    """Tiny helper that collects assembly lines."""

    def __init__(self):
        self.lines: list[str] = []
        self._labels = 0

    def __call__(self, line: str) -> None:
        self.lines.append("    " + line)

    def label(self, name: str) -> None:
        self.lines.append(f"{name}:")

    def fresh(self, stem: str) -> str:
        self._labels += 1
        return f"{stem}_{self._labels}"

    def comment(self, text: str) -> None:
        self.lines.append(f"    # {text}")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def job_table(entries: list[tuple], addr: int) -> tuple[int, bytes]:
    """Pack 16-byte job records (up to four words each) at ``addr``."""
    blob = bytearray()
    for e in entries:
        words = list(e) + [0] * (4 - len(e))
        for w in words:
            blob += (w & 0xFFFFFFFF).to_bytes(4, "little")
    return addr, bytes(blob)


def align(x: int, a: int) -> int:
    return -(-x // a) * a
