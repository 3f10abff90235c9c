"""Timing-free reference semantics.

``exec_functional`` mutates an :class:`ArchState` and a :class:`Memory` for
one instruction.  The cycle model calls the very same routines when an
instruction issues, so any value difference between the two models can only
come from ordering, which the equivalence tests check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import MisalignedAccess, OutOfBoundsAccess, SimulationHang, UnknownInstruction
from .encoding import (
    CSR_MHARTID, CSR_VL, CSR_VLENB, CSR_VTYPE, DecodedInst, Kind, VTypeState,
    check_alignment, decode, parse_vtype_bits, vsetvl, vtype_bits,
)

MASK32 = 0xFFFFFFFF
UDT = {8: np.uint8, 16: np.uint16, 32: np.uint32}
SDT = {8: np.int8, 16: np.int16, 32: np.int32}


def sext32(v: int) -> int:
    v &= MASK32
    return v - (1 << 32) if v & 0x80000000 else v


class Memory:
    """Flat little-endian byte-addressed memory starting at ``base``."""

    def __init__(self, size: int, base: int = 0):
        self.size = size
        self.base = base
        self.data = bytearray(size)

    def check(self, addr: int, nbytes: int) -> int:
        off = addr - self.base
        if off < 0 or off + nbytes > self.size:
            raise OutOfBoundsAccess(f"access [{addr:#x}, +{nbytes}) outside memory of {self.size} bytes")
        if addr % nbytes and nbytes in (2, 4):
            raise MisalignedAccess(f"address {addr:#x} not aligned to {nbytes} bytes")
        return off

    def read(self, addr: int, nbytes: int) -> int:
        off = self.check(addr, nbytes)
        return int.from_bytes(self.data[off:off + nbytes], "little")

    def write(self, addr: int, nbytes: int, value: int) -> None:
        off = self.check(addr, nbytes)
        self.data[off:off + nbytes] = (value & ((1 << (8 * nbytes)) - 1)).to_bytes(nbytes, "little")

    def load_image(self, addr: int, blob: bytes) -> None:
        off = addr - self.base
        if off < 0 or off + len(blob) > self.size:
            raise OutOfBoundsAccess(f"image [{addr:#x}, +{len(blob)}) outside memory")
        self.data[off:off + len(blob)] = blob

    def array(self, addr: int, count: int, sew: int = 32) -> np.ndarray:
        eb = sew // 8
        off = self.check(addr, eb * max(count, 1)) if count else addr - self.base
        return np.frombuffer(self.data, dtype=UDT[sew], count=count, offset=off).copy()

    def copy(self) -> "Memory":
        m = Memory(self.size, self.base)
        m.data[:] = self.data
        return m


@dataclass
class ArchState:
    vlen: int = 512
    hartid: int = 0
    pc: int = 0
    x: list = field(default_factory=lambda: [0] * 32)
    vrf: bytearray = field(default=None)
    vtype: VTypeState = field(default=None)
    halted: bool = False
    retired: int = 0

    def __post_init__(self):
        if self.vrf is None:
            self.vrf = bytearray(32 * self.vlen // 8)
        if self.vtype is None:
            self.vtype = VTypeState(sew=32, lmul=1, vl=0, vlen=self.vlen)

    @property
    def vlenb(self) -> int:
        return self.vlen // 8

    @property
    def xregs(self) -> list:
        return self.x

    def vreg(self, reg: int, sew: int = 32, count: Optional[int] = None) -> np.ndarray:
        """Copy of register ``reg`` (or its group) as ``count`` elements of ``sew`` bits."""
        eb = sew // 8
        if count is None:
            count = self.vlenb // eb
        return np.frombuffer(self.vrf, dtype=UDT[sew], count=count, offset=reg * self.vlenb).copy()

    def set_vreg(self, reg: int, values, sew: int = 32) -> None:
        arr = np.asarray(values).astype(np.int64).astype(UDT[sew])
        off = reg * self.vlenb
        self.vrf[off:off + arr.nbytes] = arr.tobytes()

    def snapshot(self) -> tuple:
        return (tuple(self.x), bytes(self.vrf), self.vtype, self.pc, self.halted)


# ---------------------------------------------------------------------------
# scalar semantics

def _alu(op: str) -> Callable[[int, int], int]:
    return {
        "add": lambda a, b: a + b, "sub": lambda a, b: a - b,
        "sll": lambda a, b: a << (b & 31), "srl": lambda a, b: a >> (b & 31),
        "sra": lambda a, b: sext32(a) >> (b & 31),
        "slt": lambda a, b: int(sext32(a) < sext32(b)), "sltu": lambda a, b: int(a < b),
        "xor": lambda a, b: a ^ b, "or": lambda a, b: a | b, "and": lambda a, b: a & b,
        "mul": lambda a, b: a * b,
    }[op]


_IMM_ALU = {"addi": "add", "slti": "slt", "sltiu": "sltu", "xori": "xor", "ori": "or",
            "andi": "and", "slli": "sll", "srli": "srl", "srai": "sra"}
_LOAD = {"lb": (1, True), "lh": (2, True), "lw": (4, False), "lbu": (1, False), "lhu": (2, False)}
_STORE = {"sb": 1, "sh": 2, "sw": 4}
_BRANCH = {
    "beq": lambda a, b: a == b, "bne": lambda a, b: a != b,
    "blt": lambda a, b: sext32(a) < sext32(b), "bge": lambda a, b: sext32(a) >= sext32(b),
    "bltu": lambda a, b: a < b, "bgeu": lambda a, b: a >= b,
}


def read_csr(state: ArchState, csr: int) -> int:
    if csr == CSR_VL:
        return state.vtype.vl
    if csr == CSR_VTYPE:
        return vtype_bits(state.vtype.sew, state.vtype.lmul)
    if csr == CSR_VLENB:
        return state.vlenb
    if csr == CSR_MHARTID:
        return state.hartid
    raise UnknownInstruction(f"CSR {csr:#x} not implemented")


# ---------------------------------------------------------------------------
# vector semantics

def _vview(state: ArchState, reg: int, sew: int, count: int) -> np.ndarray:
    return np.frombuffer(state.vrf, dtype=UDT[sew], count=count, offset=reg * state.vlenb)


def _scalar_operand(inst: DecodedInst, state: ArchState, sew: int):
    if inst.variant == "vx":
        return UDT[sew](state.x[inst.rs1] & ((1 << sew) - 1))
    return UDT[sew](inst.imm & ((1 << sew) - 1))


def _varith(inst: DecodedInst, state: ArchState, sew: int, vl: int) -> None:
    op = inst.op
    vd = _vview(state, inst.vd, sew, vl)
    if op == "vmv":
        if inst.variant == "vv":
            vd[:] = _vview(state, inst.vs1, sew, vl)
        else:
            vd[:] = _scalar_operand(inst, state, sew)
        return
    b = _vview(state, inst.vs1, sew, vl) if inst.variant == "vv" else _scalar_operand(inst, state, sew)
    a = _vview(state, inst.vs2, sew, vl)
    if op == "vmacc":
        vd[:] = vd + b * a
        return
    if op in ("vmin", "vmax", "vsra"):
        sa = a.view(SDT[sew])
        if op == "vsra":
            res = sa >> (np.asarray(b, dtype=UDT[sew]) & (sew - 1)).astype(SDT[sew])
        else:
            sb = np.asarray(b, dtype=UDT[sew]).view(SDT[sew])
            res = np.minimum(sa, sb) if op == "vmin" else np.maximum(sa, sb)
        vd[:] = res.view(UDT[sew]) if isinstance(res, np.ndarray) else UDT[sew](res)
        return
    if op == "vadd":
        res = a + b
    elif op == "vsub":
        res = a - b
    elif op == "vrsub":
        res = b - a
    elif op == "vmul":
        res = a * b
    elif op == "vand":
        res = a & b
    elif op == "vor":
        res = a | b
    elif op == "vxor":
        res = a ^ b
    elif op == "vminu":
        res = np.minimum(a, b)
    elif op == "vmaxu":
        res = np.maximum(a, b)
    elif op == "vsll":
        res = a << (b & UDT[sew](sew - 1))
    elif op == "vsrl":
        res = a >> (b & UDT[sew](sew - 1))
    else:
        raise UnknownInstruction(f"no semantics for {inst.mnemonic}")
    vd[:] = res


def _vslide(inst: DecodedInst, state: ArchState, sew: int, vl: int) -> None:
    off = state.x[inst.rs1] if inst.variant == "vx" else inst.imm
    src = _vview(state, inst.vs2, sew, vl).copy()
    vd = _vview(state, inst.vd, sew, vl)
    if inst.op == "vslideup":
        if off < vl:
            vd[off:] = src[:vl - off]
    else:
        keep = max(vl - off, 0)
        vd[:keep] = src[off:off + keep]
        vd[keep:] = 0


def _vmem(inst: DecodedInst, state: ArchState, mem: Memory, sew: int, vl: int) -> None:
    eew = inst.eew
    eb = eew // 8
    base = state.x[inst.rs1]
    reg = inst.vd if inst.kind is Kind.VLOAD else inst.vs3
    roff = reg * state.vlenb
    if vl == 0:
        return
    if not inst.strided or state.x[inst.rs2] == eb:
        off = mem.check(base, eb)
        mem.check(base + (vl - 1) * eb, eb)
        n = vl * eb
        if inst.kind is Kind.VLOAD:
            state.vrf[roff:roff + n] = mem.data[off:off + n]
        else:
            mem.data[off:off + n] = state.vrf[roff:roff + n]
        return
    stride = sext32(state.x[inst.rs2])
    for i in range(vl):
        a = (base + i * stride) & MASK32
        off = mem.check(a, eb)
        r = roff + i * eb
        if inst.kind is Kind.VLOAD:
            state.vrf[r:r + eb] = mem.data[off:off + eb]
        else:
            mem.data[off:off + eb] = state.vrf[r:r + eb]


def vector_addresses(inst: DecodedInst, state: ArchState) -> list[int]:
    """Byte addresses touched by a vector memory instruction, in element order."""
    eb = inst.eew // 8
    base = state.x[inst.rs1]
    stride = sext32(state.x[inst.rs2]) if inst.strided else eb
    return [(base + i * stride) & MASK32 for i in range(state.vtype.vl)]


def exec_functional(inst: DecodedInst, state: ArchState, mem: Memory) -> ArchState:
    """Execute one instruction, updating ``state`` (including pc) and ``mem``."""
    x = state.x
    op = inst.op
    k = inst.kind
    next_pc = (state.pc + 4) & MASK32
    rd = None
    val = 0

    if k is Kind.SARITH:
        if op in ("lui", "auipc"):
            val = (inst.imm << 12) + (state.pc if op == "auipc" else 0)
        elif op == "p.mac":
            val = x[inst.rd] + x[inst.rs1] * x[inst.rs2]
        elif inst.rs2 is not None:
            val = _alu(op)(x[inst.rs1], x[inst.rs2])
        else:
            val = _alu(_IMM_ALU[op])(x[inst.rs1], inst.imm & MASK32)
        rd = inst.rd
    elif k is Kind.SLOAD:
        nbytes, signed = _LOAD[op]
        v = mem.read((x[inst.rs1] + inst.imm) & MASK32, nbytes)
        if signed and v >> (8 * nbytes - 1):
            v -= 1 << (8 * nbytes)
        rd, val = inst.rd, v
    elif k is Kind.SSTORE:
        mem.write((x[inst.rs1] + inst.imm) & MASK32, _STORE[op], x[inst.rs2])
    elif k is Kind.BRANCH:
        if op == "jal":
            rd, val = inst.rd, next_pc
            next_pc = (state.pc + inst.imm) & MASK32
        elif op == "jalr":
            target = (x[inst.rs1] + inst.imm) & ~1 & MASK32
            rd, val = inst.rd, next_pc
            next_pc = target
        elif _BRANCH[op](x[inst.rs1], x[inst.rs2]):
            next_pc = (state.pc + inst.imm) & MASK32
    elif k is Kind.CSR:
        if op == "ecall":
            state.halted = True
        else:
            rd, val = inst.rd, read_csr(state, inst.csr)
    elif k is Kind.VSETVL:
        if op == "vsetvli":
            sew, lmul = inst.vt_sew, inst.vt_lmul
        else:
            sew, lmul = parse_vtype_bits(x[inst.rs2] & 0xFF)
        if inst.rs1 != 0:
            avl = x[inst.rs1]
        elif inst.rd != 0:
            avl = 1 << 32
        else:
            avl = state.vtype.vl
        vl, state.vtype = vsetvl(avl, sew, lmul, state.vlen)
        rd, val = inst.rd, vl
    else:
        vt = state.vtype
        check_alignment(inst, vt.sew, vt.lmul)
        if k is Kind.VARITH:
            _varith(inst, state, vt.sew, vt.vl)
        elif k is Kind.VSLIDE:
            _vslide(inst, state, vt.sew, vt.vl)
        elif k is Kind.VMOVE:
            if inst.variant == "xs":
                rd, val = inst.rd, int(_vview(state, inst.vs2, vt.sew, 1).view(SDT[vt.sew])[0])
            elif inst.variant == "sx":
                if vt.vl:
                    _vview(state, inst.vd, vt.sew, 1)[0] = x[inst.rs1] & ((1 << vt.sew) - 1)
            else:
                _varith(inst, state, vt.sew, vt.vl)
        elif k in (Kind.VLOAD, Kind.VSTORE):
            _vmem(inst, state, mem, vt.sew, vt.vl)
        else:
            raise UnknownInstruction(f"no semantics for {inst.mnemonic}")

    if rd:
        x[rd] = val & MASK32
    state.pc = next_pc
    state.retired += 1
    return state


# ---------------------------------------------------------------------------
# whole-program execution

class DecodeCache:
    """Per-program cache of decoded words, indexed by pc."""

    def __init__(self, program):
        self.program = program
        self.base = program.text_base
        self.insts: list[Optional[DecodedInst]] = [None] * len(program.words)

    def get(self, pc: int) -> DecodedInst:
        idx = (pc - self.base) >> 2
        if pc & 3 or not 0 <= idx < len(self.insts):
            raise UnknownInstruction(f"fetch from pc {pc:#x} outside program text")
        inst = self.insts[idx]
        if inst is None:
            inst = self.insts[idx] = decode(self.program.words[idx])
        return inst


def load_program_memory(program, mem: Memory, image: Optional[list] = None) -> None:
    for addr, blob in program.data:
        mem.load_image(addr, blob)
    for addr, blob in image or ():
        mem.load_image(addr, blob)


def run_functional(program, mem: Memory, n_cores: int = 1, vlen: int = 512,
                   max_steps: int = 50_000_000, states: Optional[list] = None) -> list[ArchState]:
    """Run every hart to its ``ecall`` one after another.

    Harts only communicate through memory regions they do not share, so
    sequential execution is equivalent to any interleaving.
    """
    cache = DecodeCache(program)
    out = []
    for hart in range(n_cores):
        st = states[hart] if states else ArchState(vlen=vlen, hartid=hart, pc=program.text_base)
        steps = 0
        while not st.halted:
            exec_functional(cache.get(st.pc), st, mem)
            steps += 1
            if steps > max_steps:
                raise SimulationHang(f"hart {hart} exceeded {max_steps} instructions")
        out.append(st)
    return out
