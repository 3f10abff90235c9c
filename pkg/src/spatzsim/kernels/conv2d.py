"""Valid-region 2D integer convolution generators.

Layout from address 0: the n x n image, the compact (n-f+1)^2 output, one
copy of the f x f kernel per core (so cores never contend for the taps),
then the job table.  A job is one output row (split into column chunks
when a row does not fit a register group).

Vector variant, per kernel row: load the input row once at the input
length, produce the f-1 shifted copies with ``vslidedown``, switch vl to
the output length and accumulate f ``vmacc.vx`` with the scalar taps.

Scalar variant: for f=3 a hand-unrolled row with a rotating 3x3 input
window in registers (three new loads per output); larger kernels use a
per-output loop over all taps.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..config import ClusterConfig
from ..errors import UnsupportedShape
from .base import (Asm, GeneratedKernel, KernelSpec, TilingPlan, align, golden_conv2d, job_table, random_matrix,
                   to_bytes)
from .matmul import _epilogue, _prologue

ES = 4


def plan_vector(n: int, f: int, cfg: ClusterConfig) -> TilingPlan:
    groups = f + 1  # output, input row, f-1 shifted copies
    lmul = 8
    while lmul > 1 and groups * lmul > 32:
        lmul //= 2
    # the smallest LMUL that still holds a whole input row keeps beats short
    while lmul > 1 and cfg.vlen_bits * (lmul // 2) // 32 >= n:
        lmul //= 2
    vlmax = cfg.vlen_bits * lmul // 32
    wo = n - f + 1
    cap = vlmax - (f - 1)
    if cap < 1:
        raise UnsupportedShape(f"conv2d_{f} does not fit the register file of {cfg.name}")
    chunks = -(-wo // cap)
    width = -(-wo // chunks)
    spans = [(c0, min(width, wo - c0)) for c0 in range(0, wo, width)]
    return TilingPlan("vector", 1, width, lmul, vectors_per_block=groups, loads_per_block=f * (width + f - 1),
                      macc_per_block=f * f * width, jobs=wo * len(spans), extra={"spans": spans})


def _layout(n: int, f: int, cfg: ClusterConfig, jobs: int) -> dict:
    wo = n - f + 1
    img, out = 0, align(n * n * ES, 64)
    kern = align(out + wo * wo * ES, 64)
    tab = align(kern + cfg.n_cores * f * f * ES, 64)
    end = tab + 16 * jobs
    if end > cfg.l1_total_bytes:
        raise UnsupportedShape(f"conv2d n={n} f={f} needs {end} bytes, {cfg.name} has {cfg.l1_total_bytes}")
    return {"img": img, "out": out, "kern": kern, "jobs": tab}


def _kernel_base(asm: Asm, f: int, lay: dict, reg: str) -> None:
    """reg = address of this core's private kernel copy."""
    asm("csrr s0, mhartid")
    asm(f"li t6, {f * f * ES}")
    asm(f"mul {reg}, s0, t6")
    asm(f"li t6, {lay['kern']}")
    asm(f"add {reg}, {reg}, t6")


def _vector_source(n: int, f: int, plan: TilingPlan, cfg: ClusterConfig, lay: dict) -> str:
    lmul = plan.lmul
    rowb = n * ES
    v_out, v_row = "v0", f"v{lmul}"
    v_sh = [f"v{(2 + i) * lmul}" for i in range(f - 1)]
    taps = [f"s{2 + c}" for c in range(f)]
    asm = Asm()
    asm.comment(f"conv2d n={n} f={f}: row jobs of width <= {plan.block_cols}, LMUL={lmul}, {plan.jobs} jobs")
    _kernel_base(asm, f, lay, "s9")
    asm(f"li t4, {rowb}")
    asm(f"li s1, {plan.jobs}")
    asm(f"li t5, {lay['jobs']}")
    asm("bge s0, s1, finish")

    def load_job() -> None:
        # job parameters and the first kernel row are loaded before the
        # previous job's output store so the store does not block them
        asm("slli t6, s0, 4")
        asm("add t6, t6, t5")
        asm("lw t0, 0(t6)")
        asm("lw t1, 4(t6)")
        asm("lw a0, 8(t6)")
        asm("lw a1, 12(t6)")
        for c in range(f):
            asm(f"lw {taps[c]}, {c * ES}(s9)")

    def row_load(kr: int) -> None:
        asm(f"vsetvli zero, a0, e32, m{lmul}, ta, ma")
        asm(f"vle32.v {v_row}, (t0)")
        if kr < f - 1:
            asm("add t0, t0, t4")
        for c in range(1, f):
            asm(f"vslidedown.vi {v_sh[c - 1]}, {v_row}, {c}")

    # software pipelined: the next job's first row load and slides are
    # issued before the current output store, which waits on the last vmacc
    load_job()
    row_load(0)
    asm.label("job_loop")
    asm(f"addi t2, s9, {f * ES}")
    for kr in range(f):
        if kr > 0:
            for c in range(f):
                asm(f"lw {taps[c]}, {c * ES}(t2)")
            if kr < f - 1:
                asm(f"addi t2, t2, {f * ES}")
            row_load(kr)
        asm(f"vsetvli zero, a1, e32, m{lmul}, ta, ma")
        if kr == 0:
            asm(f"vmul.vx {v_out}, {v_row}, {taps[0]}")
        else:
            asm(f"vmacc.vx {v_out}, {taps[0]}, {v_row}")
        for c in range(1, f):
            asm(f"vmacc.vx {v_out}, {taps[c]}, {v_sh[c - 1]}")
    asm("mv t3, t1")
    asm("mv a2, a1")
    asm(f"li t6, {cfg.n_cores}")
    asm("add s0, s0, t6")
    asm("bge s0, s1, last")
    load_job()
    row_load(0)
    asm(f"vsetvli zero, a2, e32, m{lmul}, ta, ma")
    asm(f"vse32.v {v_out}, (t3)")
    asm("j job_loop")
    asm.label("last")
    asm(f"vse32.v {v_out}, (t3)")
    asm.label("finish")
    asm("ecall")
    return asm.text()


def _scalar3_source(n: int, plan: TilingPlan, cfg: ClusterConfig, lay: dict) -> str:
    """Hand-unrolled 3x3 convolution keeping a rotating input window in registers."""
    wo = n - 2
    rowb = n * ES
    if ES * n > 2047:
        raise UnsupportedShape("scalar conv2d row longer than the 12-bit offset range")
    k = [["s1", "s2", "s3"], ["s4", "s5", "s6"], ["s7", "s8", "s9"]]
    win = [["a0", "a1", "a2"], ["a3", "a4", "a5"], ["a6", "a7", "ra"]]  # [row][slot]
    rows = ["t0", "t1", "t2"]
    asm = Asm()
    asm.comment(f"conv2d n={n} f=3 scalar: unrolled rows, {plan.jobs} jobs")
    _kernel_base(asm, 3, lay, "t3")
    for r in range(3):
        for c in range(3):
            asm(f"lw {k[r][c]}, {(3 * r + c) * ES}(t3)")
    _prologue(asm, cfg, plan.jobs, lay["jobs"])
    asm("lw t0, 0(t6)")
    asm("lw tp, 4(t6)")
    asm(f"addi t1, t0, {rowb}")
    asm(f"addi t2, t1, {rowb}")

    def load_col(col: int) -> None:
        for r in range(3):
            asm(f"lw {win[r][col % 3]}, {col * ES}({rows[r]})")

    load_col(0)
    load_col(1)
    for j in range(wo):
        load_col(j + 2)
        terms = [(k[r][c], win[r][(j + c) % 3]) for c in range(3) for r in range(3)]
        accs = ("s10", "s11")
        for i, (kk, ww) in enumerate(terms):
            acc = accs[i % 2]
            asm(f"{'mul' if i < 2 else 'p.mac'} {acc}, {kk}, {ww}")
        asm("add s10, s10, s11")
        asm(f"sw s10, {j * ES}(tp)")
    _epilogue(asm, cfg)
    return asm.text()


def _scalar_source(n: int, f: int, plan: TilingPlan, cfg: ClusterConfig, lay: dict) -> str:
    """Straightforward loop over outputs and taps for larger kernels."""
    wo = n - f + 1
    rowb = n * ES
    rows = ["s1", "s2", "s3", "s4", "s5", "s6", "s7"][:f]
    xs, ks = ["a2", "a4", "a6", "ra"], ["a3", "a5", "a7", "gp"]
    asm = Asm()
    asm.comment(f"conv2d n={n} f={f} scalar: tap loop per output, {plan.jobs} jobs")
    _kernel_base(asm, f, lay, "t3")
    _prologue(asm, cfg, plan.jobs, lay["jobs"])
    asm(f"lw {rows[0]}, 0(t6)")
    asm("lw tp, 4(t6)")
    for r in range(1, f):
        if rowb < 2048:
            asm(f"addi {rows[r]}, {rows[r - 1]}, {rowb}")
        else:
            asm(f"li t5, {rowb}")
            asm(f"add {rows[r]}, {rows[r - 1]}, t5")
    asm(f"li a0, {wo}")
    loop = asm.fresh("col")
    asm.label(loop)
    i = 0
    for r in range(f):
        for c in range(f):
            x, kk = xs[i % 4], ks[i % 4]
            asm(f"lw {x}, {c * ES}({rows[r]})")
            asm(f"lw {kk}, {(r * f + c) * ES}(t3)")
            acc = ("s10", "s11")[i % 2]
            asm(f"{'mul' if i < 2 else 'p.mac'} {acc}, {kk}, {x}")
            i += 1
    asm("add s10, s10, s11")
    asm("sw s10, 0(tp)")
    for r in range(f):
        asm(f"addi {rows[r]}, {rows[r]}, {ES}")
    asm(f"addi tp, tp, {ES}")
    asm("addi a0, a0, -1")
    asm(f"bnez a0, {loop}")
    _epilogue(asm, cfg)
    return asm.text()


def gen_conv2d(spec: KernelSpec, cfg: ClusterConfig, img: Optional[np.ndarray] = None,
               k: Optional[np.ndarray] = None) -> GeneratedKernel:
    spec.validate()
    n, f = spec.n, spec.f
    rng = np.random.default_rng(spec.seed)
    if img is None:
        img = random_matrix(rng, (n, n), 32)
    if k is None:
        k = random_matrix(rng, (f, f), 32)
    img = np.asarray(img, dtype=np.uint64)
    k = np.asarray(k, dtype=np.uint64)
    variant = spec.variant
    if variant == "auto":
        variant = "vector" if cfg.is_vector else "scalar"
    if variant == "vector" and not cfg.is_vector:
        raise UnsupportedShape(f"{cfg.name} has no vector unit")
    wo = n - f + 1
    rowb = n * ES
    if variant == "vector":
        plan = plan_vector(n, f, cfg)
        lay = _layout(n, f, cfg, plan.jobs)
        entries = []
        for o in range(wo):
            for c0, w in plan.extra["spans"]:
                entries.append((lay["img"] + o * rowb + c0 * ES, lay["out"] + (o * wo + c0) * ES, w + f - 1, w))
        src = _vector_source(n, f, plan, cfg, lay)
    else:
        plan = TilingPlan("scalar", 1, wo, 1, loads_per_block=3 * wo if f == 3 else 2 * f * f * wo,
                          macc_per_block=f * f * wo, jobs=wo)
        lay = _layout(n, f, cfg, plan.jobs)
        entries = [(lay["img"] + o * rowb, lay["out"] + o * wo * ES) for o in range(wo)]
        src = _scalar3_source(n, plan, cfg, lay) if f == 3 else _scalar_source(n, f, plan, cfg, lay)
    kcopies = to_bytes(np.tile(k.reshape(-1), cfg.n_cores), 32)
    image = [(lay["img"], to_bytes(img, 32)), (lay["kern"], kcopies), job_table(entries, lay["jobs"])]
    return GeneratedKernel(spec=spec, config_name=cfg.name, source=src, image=image,
                           expected=golden_conv2d(img, k), out_addr=lay["out"], plan=plan,
                           inputs={"img": img, "K": k})
