"""Random short programs over the implemented instruction subset.

Used to check that the cycle-level model and the functional model agree on
the final architectural state.  Every generated program is legal by
construction: register groups are LMUL-aligned, memory accesses stay
inside a data window and are element-aligned, and branches only jump
forward, so each program terminates.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

SCALAR_RR = ("add", "sub", "sll", "slt", "sltu", "xor", "srl", "sra", "or", "and", "mul", "p.mac")
SCALAR_RI = ("addi", "slti", "sltiu", "xori", "ori", "andi")
SHIFT_I = ("slli", "srli", "srai")
VV_OPS = ("vadd", "vsub", "vminu", "vmin", "vmaxu", "vmax", "vand", "vor", "vxor", "vsll", "vsrl", "vsra", "vmul",
          "vmacc")
VX_OPS = VV_OPS + ("vrsub",)
VI_OPS = ("vadd", "vrsub", "vand", "vor", "vxor", "vsll", "vsrl", "vsra")
BRANCHES = ("beq", "bne", "blt", "bge", "bltu", "bgeu")

# x1..x4 are left alone; x5..x15 are data registers, x20 holds the data window base
DATA_REGS = [f"x{i}" for i in range(5, 16)]
BASE_REG = "x20"
OFF_REG = "x21"
STRIDE_REG = "x22"
AVL_REG = "x23"


@dataclass
class RandomProgram:
    source: str
    image: list  # [(addr, bytes)]
    data_base: int
    data_bytes: int


def random_program(seed: int, vlen: int = 512, length: int = 40, data_base: int = 0,
                   data_bytes: int = 4096) -> RandomProgram:
    rng = random.Random(seed)
    lines: list[str] = []
    pending_labels: list[tuple[int, str]] = []  # (emit before instruction index, label)
    label_id = 0

    for r in DATA_REGS:
        lines.append(f"li {r}, {rng.getrandbits(32) - (1 << 31)}")
    lines.append(f"li {BASE_REG}, {data_base}")

    sew, lmul = 32, 1

    def vsetvli() -> None:
        nonlocal sew, lmul
        sew = rng.choice((8, 16, 32))
        lmul = rng.choice((1, 2, 4, 8))
        vlmax = vlen * lmul // sew
        avl = rng.choice((vlmax, rng.randint(0, vlmax), rng.randint(0, 2 * vlmax)))
        lines.append(f"li {AVL_REG}, {avl}")
        lines.append(f"vsetvli {rng.choice(DATA_REGS)}, {AVL_REG}, e{sew}, m{lmul}, ta, ma")

    def vgroup() -> int:
        return rng.randrange(0, 32 // lmul) * lmul

    max_vbytes = vlen * 8 // 8  # one LMUL=8 group

    def mem_offset(align: int, span: int) -> int:
        hi = max(0, data_bytes - span)
        return rng.randrange(0, hi + 1) // align * align

    vsetvli()
    idx = 0
    while idx < length:
        while pending_labels and pending_labels[0][0] <= idx:
            lines.append(f"{pending_labels.pop(0)[1]}:")
        choice = rng.random()
        rd, a, b = rng.choice(DATA_REGS), rng.choice(DATA_REGS), rng.choice(DATA_REGS)
        if choice < 0.15:
            lines.append(f"{rng.choice(SCALAR_RR)} {rd}, {a}, {b}")
        elif choice < 0.22:
            if rng.random() < 0.7:
                lines.append(f"{rng.choice(SCALAR_RI)} {rd}, {a}, {rng.randint(-2048, 2047)}")
            else:
                lines.append(f"{rng.choice(SHIFT_I)} {rd}, {a}, {rng.randint(0, 31)}")
        elif choice < 0.30:
            width = rng.choice((1, 2, 4))
            off = mem_offset(width, width)
            if off > 2047:
                lines.append(f"li {OFF_REG}, {off}")
                lines.append(f"add {OFF_REG}, {OFF_REG}, {BASE_REG}")
                base, imm = OFF_REG, 0
            else:
                base, imm = BASE_REG, off
            if rng.random() < 0.5:
                op = {1: rng.choice(("lb", "lbu")), 2: rng.choice(("lh", "lhu")), 4: "lw"}[width]
                lines.append(f"{op} {rd}, {imm}({base})")
            else:
                op = {1: "sb", 2: "sh", 4: "sw"}[width]
                lines.append(f"{op} {a}, {imm}({base})")
        elif choice < 0.34:
            label_id += 1
            name = f"skip_{label_id}"
            dist = rng.randint(1, 4)
            lines.append(f"{rng.choice(BRANCHES)} {a}, {b}, {name}")
            pending_labels.append((idx + 1 + dist, name))
            pending_labels.sort()
        elif choice < 0.38:
            # branches never skip a vtype change, so every path sees the same LMUL
            while pending_labels:
                lines.append(f"{pending_labels.pop(0)[1]}:")
            vsetvli()
        elif choice < 0.66:
            vd, vs1, vs2 = vgroup(), vgroup(), vgroup()
            form = rng.random()
            if form < 0.45:
                op = rng.choice(VV_OPS)
                lines.append(f"{op}.vv v{vd}, v{vs2}, v{vs1}" if op != "vmacc" else f"vmacc.vv v{vd}, v{vs1}, v{vs2}")
            elif form < 0.8:
                op = rng.choice(VX_OPS)
                lines.append(f"{op}.vx v{vd}, v{vs2}, {a}" if op != "vmacc" else f"vmacc.vx v{vd}, {a}, v{vs2}")
            else:
                op = rng.choice(VI_OPS)
                imm = rng.randint(0, 31) if op in ("vsll", "vsrl", "vsra") else rng.randint(-16, 15)
                lines.append(f"{op}.vi v{vd}, v{vs2}, {imm}")
        elif choice < 0.72:
            vd = vgroup()
            vs2 = rng.choice([g for g in range(0, 32, lmul) if g != vd])
            op = rng.choice(("vslideup", "vslidedown"))
            if rng.random() < 0.5:
                lines.append(f"{op}.vi v{vd}, v{vs2}, {rng.randint(0, 31)}")
            else:
                lines.append(f"li {OFF_REG}, {rng.randint(0, 2 * vlen * lmul // sew)}")
                lines.append(f"{op}.vx v{vd}, v{vs2}, {OFF_REG}")
        elif choice < 0.77:
            form = rng.random()
            if form < 0.4:
                lines.append(f"vmv.x.s {rd}, v{vgroup()}")
            elif form < 0.7:
                lines.append(f"vmv.s.x v{vgroup()}, {a}")
            else:
                src = rng.choice(("v", "x", "i"))
                operand = {"v": f"v{vgroup()}", "x": a, "i": str(rng.randint(-16, 15))}[src]
                lines.append(f"vmv.v.{src} v{vgroup()}, {operand}")
        else:
            eb = sew // 8
            vr = vgroup()
            strided = rng.random() < 0.3
            if strided:
                stride = rng.choice((eb, 2 * eb, 3 * eb, -eb, 0))
                span = (vlen * lmul // sew) * abs(stride) + eb
                off = mem_offset(eb, span)
                if stride < 0:
                    off = min(data_bytes - eb, off + span - eb) // eb * eb
                lines.append(f"li {STRIDE_REG}, {stride}")
            else:
                off = mem_offset(eb, max_vbytes)
            lines.append(f"li {OFF_REG}, {off}")
            lines.append(f"add {OFF_REG}, {OFF_REG}, {BASE_REG}")
            kind = "l" if rng.random() < 0.5 else "s"
            mnem = f"v{kind}{'se' if strided else 'e'}{sew}.v"
            tail = f", {STRIDE_REG}" if strided else ""
            lines.append(f"{mnem} v{vr}, ({OFF_REG}){tail}")
        idx += 1
    for _, name in pending_labels:
        lines.append(f"{name}:")
    lines.append("ecall")
    data = bytes(rng.getrandbits(8) for _ in range(data_bytes))
    return RandomProgram("\n".join(lines) + "\n", [(data_base, data)], data_base, data_bytes)
