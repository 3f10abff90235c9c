"""Integer matrix multiplication generators.

Matrices are row-major and packed back to back from address 0 (A, B, C),
followed by a job table.  Every core runs the same program: it reads its
hart id and walks the job table with stride ``n_cores``.

Vector variant: a job is an R-row by W-column block of C.  C rows live in
R register groups; for each k the core loads A[i..i+R, k] into scalar
registers, streams row k+1 of B into the spare buffer group and issues R
``vmacc.vx``.  B is double buffered so the load overlaps the arithmetic.

Scalar variant: a job is a 4x4 block of C held in 16 accumulator
registers; each k step loads four A and four B elements and issues sixteen
``p.mac``.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..config import ClusterConfig
from ..errors import UnsupportedShape
from .base import Asm, GeneratedKernel, KernelSpec, TilingPlan, align, golden_matmul, job_table, random_matrix, to_bytes

LOADS = {1: "lb", 2: "lh", 4: "lw"}
STORES = {1: "sb", 2: "sh", 4: "sw"}
MAX_ROWS = 8
UNROLL_N = 16  # reduction loops this short are fully unrolled


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def plan_vector(n: int, sew: int, cfg: ClusterConfig) -> TilingPlan:
    """Pick block rows R, block columns W and LMUL for the vector matmul.

    The estimate is (rounds of jobs) x (per-job time), where a job's k step
    costs the larger of its VAU beats and its scalar issue slots.
    """
    es = sew // 8
    beat_bytes = cfg.vlen_bits // 32
    best = None
    for lmul in (1, 2, 4, 8):
        vlmax = cfg.vlen_bits * lmul // sew
        lo = cfg.vlen_bits * (lmul // 2) // sew if lmul > 1 else 0
        for w in _divisors(n):
            if not lo < w <= vlmax:
                continue
            beats = -(-w * es // beat_bytes)
            for r in (1, 2, 4, 8):
                if n % r or (r + 2) * lmul > 32 or r > MAX_ROWS:
                    continue
                jobs = (n // r) * (n // w)
                rounds = -(-jobs // cfg.n_cores)
                step = max(r * beats, 3 * r + 4, beats)
                cost = rounds * (n * step + 12 * r + 30)
                key = (cost, -r * w, lmul)
                if best is None or key < best[0]:
                    best = (key, r, w, lmul, jobs)
    if best is None:
        raise UnsupportedShape(f"no vector tiling for n={n}, sew={sew} on {cfg.name}")
    _, r, w, lmul, jobs = best
    return TilingPlan("vector", r, w, lmul, vectors_per_block=r + 2, loads_per_block=w + r,
                      macc_per_block=r * w, jobs=jobs)


def plan_scalar(n: int) -> TilingPlan:
    return TilingPlan("scalar", 4, 4, 1, loads_per_block=8, macc_per_block=16, jobs=(n // 4) ** 2)


def _layout(n: int, es: int, cfg: ClusterConfig, jobs: int) -> dict:
    sz = n * n * es
    a, b, c = 0, align(sz, 64), align(2 * align(sz, 64), 64)
    tab = align(c + sz, 64)
    end = tab + 16 * jobs
    if end > cfg.l1_total_bytes:
        raise UnsupportedShape(f"matmul_{n} with {es}-byte elements needs {end} bytes, "
                               f"{cfg.name} has {cfg.l1_total_bytes} bytes of L1")
    return {"A": a, "B": b, "C": c, "jobs": tab}


def _prologue(asm: Asm, cfg: ClusterConfig, njobs: int, tab: int) -> None:
    asm("csrr s0, mhartid")
    asm.label("job_loop")
    asm(f"li t6, {njobs}")
    asm("bge s0, t6, finish")
    asm("slli t6, s0, 4")
    asm(f"li t5, {tab}")
    asm("add t6, t6, t5")


def _epilogue(asm: Asm, cfg: ClusterConfig) -> None:
    step = cfg.n_cores
    if step < 2048:
        asm(f"addi s0, s0, {step}")
    else:
        asm(f"li t6, {step}")
        asm("add s0, s0, t6")
    asm("j job_loop")
    asm.label("finish")
    asm("ecall")


def _vector_source(n: int, sew: int, plan: TilingPlan, cfg: ClusterConfig, lay: dict) -> str:
    es = sew // 8
    r_rows, w, lmul = plan.block_rows, plan.block_cols, plan.lmul
    rowb = n * es
    ld, vle, vse = LOADS[es], f"vle{sew}.v", f"vse{sew}.v"
    # A rows share base pointers as far as the 12-bit load offset reaches
    per_ptr = min(r_rows, 2047 // rowb + 1)
    ptr = [f"a{i}" for i in range(-(-r_rows // per_ptr))]
    row_src = [(ptr[i // per_ptr], (i % per_ptr) * rowb) for i in range(r_rows)]
    val = [f"s{i + 2}" for i in range(r_rows)]  # broadcast A elements
    vc = [f"v{i * lmul}" for i in range(r_rows)]
    vb = [f"v{r_rows * lmul}", f"v{(r_rows + 1) * lmul}"]
    asm = Asm()
    asm.comment(f"matmul n={n} e{sew}: {r_rows}x{w} blocks, LMUL={lmul}, {plan.jobs} jobs")
    asm(f"li t1, {rowb}")
    asm(f"li t2, {w}")
    asm(f"vsetvli zero, t2, e{sew}, m{lmul}, ta, ma")
    _prologue(asm, cfg, plan.jobs, lay["jobs"])
    asm(f"lw {ptr[0]}, 0(t6)")
    asm("lw t0, 4(t6)")
    asm("lw t3, 8(t6)")
    for i in range(1, len(ptr)):
        for _ in range(per_ptr):
            asm(f"add {ptr[i]}, {ptr[i - 1] if _ == 0 else ptr[i]}, t1")
    asm(f"{vle} {vb[0]}, (t0)")
    asm("add t0, t0, t1")

    def step(use: str, fill: Optional[str], first: bool = False) -> None:
        # each A value is reloaded for the next k right after the vector op
        # that consumed it, so the loads hide behind the queued vector work
        last = fill is None
        if not last:
            for p in ptr:
                asm(f"addi {p}, {p}, {es}")
        for (p, off), v, x in zip(row_src, vc, val):
            asm(f"vmul.vx {v}, {use}, {x}" if first else f"vmacc.vx {v}, {x}, {use}")
            if not last:
                asm(f"{ld} {x}, {off}({p})")
        if not last:
            asm(f"{vle} {fill}, (t0)")
            asm("add t0, t0, t1")

    for (p, off), x in zip(row_src, val):
        asm(f"{ld} {x}, {off}({p})")
    # k = 0 initialises C with vmul, the last k issues no further loads;
    # the steps in between alternate B buffers, looped in pairs unless the
    # matrix is small enough to unroll completely
    step(vb[0], vb[1] if n > 1 else None, first=True)
    mid = max(n - 2, 0)
    if n <= UNROLL_N:
        for k in range(1, n - 1):
            step(vb[k % 2], vb[(k + 1) % 2])
    else:
        if mid // 2:
            asm(f"li t4, {mid // 2}")
            loop = asm.fresh("kloop")
            asm.label(loop)
            step(vb[1], vb[0])
            step(vb[0], vb[1])
            asm("addi t4, t4, -1")
            asm(f"bnez t4, {loop}")
        if mid % 2:
            step(vb[1], vb[0])
    if n > 1:
        step(vb[(n - 1) % 2], None)
    for v in vc:
        asm(f"{vse} {v}, (t3)")
        asm("add t3, t3, t1")
    _epilogue(asm, cfg)
    return asm.text()


def _scalar_source(n: int, sew: int, plan: TilingPlan, cfg: ClusterConfig, lay: dict) -> str:
    es = sew // 8
    rowb = n * es
    if rowb > 2047:
        raise UnsupportedShape(f"scalar matmul row stride {rowb} exceeds the 12-bit offset range")
    ld, st = LOADS[es], STORES[es]
    acc = [[f"x{16 + 4 * r + c}" for c in range(4)] for r in range(4)]
    av = ["a1", "a2", "a3", "a4"]
    bv = ["a5", "ra", "sp", "gp"]
    asm = Asm()
    asm.comment(f"matmul n={n} e{sew}: 4x4 register blocks, {plan.jobs} jobs")
    _prologue(asm, cfg, plan.jobs, lay["jobs"])
    asm("lw t0, 0(t6)")
    asm("lw t2, 4(t6)")
    asm("lw tp, 8(t6)")
    one_ptr = 3 * rowb <= 2047
    if not one_ptr:
        asm(f"addi t1, t0, {rowb}")
        asm(f"addi t1, t1, {rowb}")
    for row in acc:
        for a in row:
            asm(f"li {a}, 0")
    # the loop ends when the B pointer reaches the row past the last one
    asm(f"li a0, {n * rowb}")
    asm("add a0, a0, t2")
    loop = asm.fresh("kloop")
    asm.label(loop)
    if one_ptr:
        srcs = [("t0", i * rowb) for i in range(4)]
    else:
        srcs = [("t0", 0), ("t0", rowb), ("t1", 0), ("t1", rowb)]
    for i in range(4):
        asm(f"{ld} {av[i]}, {srcs[i][1]}({srcs[i][0]})")
        asm(f"{ld} {bv[i]}, {i * es}(t2)")
    for r in range(4):
        for c in range(4):
            asm(f"p.mac {acc[r][c]}, {av[r]}, {bv[c]}")
    asm(f"addi t0, t0, {es}")
    if not one_ptr:
        asm(f"addi t1, t1, {es}")
    asm(f"addi t2, t2, {rowb}")
    asm(f"bne t2, a0, {loop}")
    asm(f"addi t0, tp, {rowb}")
    asm(f"addi t0, t0, {rowb}")
    for r in range(4):
        base, off = ("tp", r * rowb) if r < 2 else ("t0", (r - 2) * rowb)
        for c in range(4):
            asm(f"{st} {acc[r][c]}, {off + c * es}({base})")
    _epilogue(asm, cfg)
    return asm.text()


def gen_matmul(spec: KernelSpec, cfg: ClusterConfig, a: Optional[np.ndarray] = None,
               b: Optional[np.ndarray] = None) -> GeneratedKernel:
    spec.validate()
    n, sew, es = spec.n, spec.sew, spec.sew // 8
    rng = np.random.default_rng(spec.seed)
    if a is None:
        a = random_matrix(rng, (n, n), sew)
    if b is None:
        b = random_matrix(rng, (n, n), sew)
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    variant = spec.variant
    if variant == "auto":
        variant = "vector" if cfg.is_vector else "scalar"
    if variant == "vector" and not cfg.is_vector:
        raise UnsupportedShape(f"{cfg.name} has no vector unit")
    np_ = n
    if variant == "scalar" and n % 4:
        if not spec.pad:
            raise UnsupportedShape(f"scalar matmul needs n divisible by 4, got {n} (enable padding)")
        np_ = n + (-n % 4)
    if np_ != n:
        pa = np.zeros((np_, np_), dtype=np.uint64)
        pb = np.zeros((np_, np_), dtype=np.uint64)
        pa[:n, :n], pb[:n, :n] = a, b
    else:
        pa, pb = a, b
    plan = plan_vector(np_, sew, cfg) if variant == "vector" else plan_scalar(np_)
    lay = _layout(np_, es, cfg, plan.jobs)
    rowb = np_ * es
    entries = []
    if variant == "vector":
        r, w = plan.block_rows, plan.block_cols
        for bi in range(np_ // r):
            for bj in range(np_ // w):
                entries.append((lay["A"] + bi * r * rowb, lay["B"] + bj * w * es,
                                lay["C"] + bi * r * rowb + bj * w * es))
        src = _vector_source(np_, sew, plan, cfg, lay)
    else:
        for bi in range(np_ // 4):
            for bj in range(np_ // 4):
                entries.append((lay["A"] + bi * 4 * rowb, lay["B"] + bj * 4 * es,
                                lay["C"] + bi * 4 * rowb + bj * 4 * es))
        src = _scalar_source(np_, sew, plan, cfg, lay)
    image = [(lay["A"], to_bytes(pa, sew)), (lay["B"], to_bytes(pb, sew)), job_table(entries, lay["jobs"])]
    expected = golden_matmul(pa, pb, sew)
    plan.extra["padded_n"] = np_
    return GeneratedKernel(spec=spec, config_name=cfg.name, source=src, image=image, expected=expected,
                           out_addr=lay["C"], plan=plan, inputs={"A": a, "B": b})
