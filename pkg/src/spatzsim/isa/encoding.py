"""Bit-accurate encode/decode for RV32I(M) plus the implemented Zve32x subset.

Vector assembly operand order follows RVV 1.0 (``vadd.vv vd, vs2, vs1``,
``vmacc.vv vd, vs1, vs2``).  ``decode`` yields a fully populated
:class:`DecodedInst`; register-group alignment is checked only when a
:class:`VTypeState` is supplied, because LMUL is a run-time property.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

from ..errors import IllegalRegisterGroup, UnknownInstruction, UnsupportedSew

SEWS = (8, 16, 32)
LMULS = (1, 2, 4, 8)

CSR_VL = 0xC20
CSR_VTYPE = 0xC21
CSR_VLENB = 0xC22
CSR_MHARTID = 0xF14
KNOWN_CSRS = {CSR_VL: "vl", CSR_VTYPE: "vtype", CSR_VLENB: "vlenb", CSR_MHARTID: "mhartid"}


class Kind(enum.Enum):
    VSETVL = "VSETVL"
    VARITH = "VARITH"
    VLOAD = "VLOAD"
    VSTORE = "VSTORE"
    VSLIDE = "VSLIDE"
    VMOVE = "VMOVE"
    SARITH = "SARITH"
    SLOAD = "SLOAD"
    SSTORE = "SSTORE"
    BRANCH = "BRANCH"
    CSR = "CSR"


VECTOR_KINDS = frozenset({Kind.VSETVL, Kind.VARITH, Kind.VLOAD, Kind.VSTORE, Kind.VSLIDE, Kind.VMOVE})


@dataclass(frozen=True)
class VTypeState:
    sew: int = 32
    lmul: int = 1
    vl: int = 0
    vlen: int = 512

    @property
    def vlmax(self) -> int:
        return self.vlen * self.lmul // self.sew

    def check(self) -> None:
        if self.sew not in SEWS:
            raise UnsupportedSew(f"SEW={self.sew} not in Zve32x")
        if self.lmul not in LMULS:
            raise UnknownInstruction(f"LMUL={self.lmul} unsupported")
        if self.vl > self.vlmax:
            raise ValueError(f"vl={self.vl} exceeds vlmax={self.vlmax}")


def vsetvl(avl: int, sew: int, lmul: int, vlen: int) -> tuple[int, VTypeState]:
    """Grant a vector length: ``vl = min(avl, vlen * lmul / sew)``."""
    if sew not in SEWS:
        raise UnsupportedSew(f"SEW={sew} requested; Zve32x supports {SEWS}")
    if lmul not in LMULS:
        raise UnknownInstruction(f"LMUL={lmul} unsupported")
    if avl < 0:
        raise ValueError("avl must be non-negative")
    vlmax = vlen * lmul // sew
    vl = min(avl, vlmax)
    return vl, VTypeState(sew=sew, lmul=lmul, vl=vl, vlen=vlen)


@dataclass(frozen=True)
class DecodedInst:
    kind: Kind
    op: str
    variant: Optional[str] = None
    rd: Optional[int] = None
    rs1: Optional[int] = None
    rs2: Optional[int] = None
    vd: Optional[int] = None
    vs1: Optional[int] = None
    vs2: Optional[int] = None
    vs3: Optional[int] = None
    imm: Optional[int] = None
    eew: Optional[int] = None
    strided: bool = False
    csr: Optional[int] = None
    vt_sew: Optional[int] = None
    vt_lmul: Optional[int] = None
    # SEW/LMUL in force when the instruction was decoded (vector kinds only)
    ctx_sew: Optional[int] = None
    ctx_lmul: Optional[int] = None

    @property
    def mnemonic(self) -> str:
        if self.kind in (Kind.VLOAD, Kind.VSTORE):
            return f"{self.op}{self.eew}.v"
        if self.variant:
            return f"{self.op}.{self.variant}"
        return self.op

    @property
    def is_vector(self) -> bool:
        return self.kind in VECTOR_KINDS

    def without_context(self) -> "DecodedInst":
        return replace(self, ctx_sew=None, ctx_lmul=None)


# ---------------------------------------------------------------------------
# opcode tables

OP_LUI, OP_AUIPC, OP_JAL, OP_JALR = 0x37, 0x17, 0x6F, 0x67
OP_BRANCH, OP_LOAD, OP_STORE, OP_IMM, OP_REG, OP_SYSTEM = 0x63, 0x03, 0x23, 0x13, 0x33, 0x73
OP_V, OP_VLOAD, OP_VSTORE = 0x57, 0x07, 0x27

R_OPS = {  # name: (funct3, funct7)
    "add": (0, 0x00), "sub": (0, 0x20), "sll": (1, 0x00), "slt": (2, 0x00),
    "sltu": (3, 0x00), "xor": (4, 0x00), "srl": (5, 0x00), "sra": (5, 0x20),
    "or": (6, 0x00), "and": (7, 0x00), "mul": (0, 0x01),
    # Xpulpimg multiply-accumulate: rd <- rd + rs1 * rs2
    "p.mac": (0, 0x21),
}
R_DECODE = {v: k for k, v in R_OPS.items()}

I_OPS = {"addi": 0, "slti": 2, "sltiu": 3, "xori": 4, "ori": 6, "andi": 7}
SHIFT_I_OPS = {"slli": (1, 0x00), "srli": (5, 0x00), "srai": (5, 0x20)}
LOAD_OPS = {"lb": 0, "lh": 1, "lw": 2, "lbu": 4, "lhu": 5}
STORE_OPS = {"sb": 0, "sh": 1, "sw": 2}
BRANCH_OPS = {"beq": 0, "bne": 1, "blt": 4, "bge": 5, "bltu": 6, "bgeu": 7}
CSR_OPS = {"csrrw": 1, "csrrs": 2, "csrrc": 3, "csrrwi": 5, "csrrsi": 6, "csrrci": 7}

I_DECODE = {v: k for k, v in I_OPS.items()}
SHIFT_I_DECODE = {v: k for k, v in SHIFT_I_OPS.items()}
LOAD_DECODE = {v: k for k, v in LOAD_OPS.items()}
STORE_DECODE = {v: k for k, v in STORE_OPS.items()}
BRANCH_DECODE = {v: k for k, v in BRANCH_OPS.items()}
CSR_DECODE = {v: k for k, v in CSR_OPS.items()}

F3_OPIVV, F3_OPMVV, F3_OPIVI, F3_OPIVX, F3_OPMVX, F3_OPCFG = 0, 2, 3, 4, 6, 7
VARIANT_F3 = {"vv": F3_OPIVV, "vi": F3_OPIVI, "vx": F3_OPIVX}
MVARIANT_F3 = {"vv": F3_OPMVV, "vx": F3_OPMVX}

# name: (funct6, allowed variants)
VI_OPS = {
    "vadd": (0b000000, ("vv", "vx", "vi")),
    "vsub": (0b000010, ("vv", "vx")),
    "vrsub": (0b000011, ("vx", "vi")),
    "vminu": (0b000100, ("vv", "vx")),
    "vmin": (0b000101, ("vv", "vx")),
    "vmaxu": (0b000110, ("vv", "vx")),
    "vmax": (0b000111, ("vv", "vx")),
    "vand": (0b001001, ("vv", "vx", "vi")),
    "vor": (0b001010, ("vv", "vx", "vi")),
    "vxor": (0b001011, ("vv", "vx", "vi")),
    "vslideup": (0b001110, ("vx", "vi")),
    "vslidedown": (0b001111, ("vx", "vi")),
    "vmv": (0b010111, ("vv", "vx", "vi")),
    "vsll": (0b100101, ("vv", "vx", "vi")),
    "vsrl": (0b101000, ("vv", "vx", "vi")),
    "vsra": (0b101001, ("vv", "vx", "vi")),
}
VM_OPS = {
    "vmul": (0b100101, ("vv", "vx")),
    "vmacc": (0b101101, ("vv", "vx")),
}
VI_DECODE = {v[0]: k for k, v in VI_OPS.items()}
VM_DECODE = {v[0]: k for k, v in VM_OPS.items()}
F6_VWXUNARY0 = 0b010000

UIMM_OPS = frozenset({"vsll", "vsrl", "vsra", "vslideup", "vslidedown"})
SLIDE_OPS = frozenset({"vslideup", "vslidedown"})

EEW_WIDTH = {8: 0b000, 16: 0b101, 32: 0b110}
WIDTH_EEW = {v: k for k, v in EEW_WIDTH.items()}

LMUL_BITS = {1: 0, 2: 1, 4: 2, 8: 3}
SEW_BITS = {8: 0, 16: 1, 32: 2, 64: 3}


def vtype_bits(sew: int, lmul: int, ta: bool = False, ma: bool = False) -> int:
    return LMUL_BITS[lmul] | (SEW_BITS[sew] << 3) | (int(ta) << 6) | (int(ma) << 7)


def parse_vtype_bits(bits: int) -> tuple[int, int]:
    vlmul = bits & 7
    vsew = (bits >> 3) & 7
    if vlmul > 3:
        raise UnknownInstruction(f"fractional/reserved LMUL encoding {vlmul}")
    if vsew > 3:
        raise UnknownInstruction(f"reserved SEW encoding {vsew}")
    sew = 8 << vsew
    if sew not in SEWS:
        raise UnsupportedSew(f"SEW={sew} not supported by Zve32x")
    return sew, 1 << vlmul


def _sext(value: int, bits: int) -> int:
    value &= (1 << bits) - 1
    return value - (1 << bits) if value >> (bits - 1) else value


def _reg(r: Optional[int]) -> int:
    if r is None or not 0 <= r < 32:
        raise ValueError(f"bad register {r}")
    return r


def _check_imm(imm: int, bits: int, signed: bool = True) -> int:
    lo, hi = (-(1 << (bits - 1)), (1 << (bits - 1)) - 1) if signed else (0, (1 << bits) - 1)
    if not lo <= imm <= hi:
        raise ValueError(f"immediate {imm} out of range [{lo}, {hi}]")
    return imm & ((1 << bits) - 1)


# ---------------------------------------------------------------------------
# encode

def encode(inst: DecodedInst) -> int:
    """Encode a :class:`DecodedInst` back into its 32-bit word."""
    op, k = inst.op, inst.kind
    if op in R_OPS:
        f3, f7 = R_OPS[op]
        return (f7 << 25) | (_reg(inst.rs2) << 20) | (_reg(inst.rs1) << 15) | (f3 << 12) | (_reg(inst.rd) << 7) | OP_REG
    if op in I_OPS:
        return (_check_imm(inst.imm, 12) << 20) | (_reg(inst.rs1) << 15) | (I_OPS[op] << 12) | (_reg(inst.rd) << 7) | OP_IMM
    if op in SHIFT_I_OPS:
        f3, f7 = SHIFT_I_OPS[op]
        return (f7 << 25) | (_check_imm(inst.imm, 5, False) << 20) | (_reg(inst.rs1) << 15) | (f3 << 12) | (_reg(inst.rd) << 7) | OP_IMM
    if op in LOAD_OPS:
        return (_check_imm(inst.imm, 12) << 20) | (_reg(inst.rs1) << 15) | (LOAD_OPS[op] << 12) | (_reg(inst.rd) << 7) | OP_LOAD
    if op in STORE_OPS:
        imm = _check_imm(inst.imm, 12)
        return ((imm >> 5) << 25) | (_reg(inst.rs2) << 20) | (_reg(inst.rs1) << 15) | (STORE_OPS[op] << 12) | ((imm & 31) << 7) | OP_STORE
    if op in BRANCH_OPS:
        imm = _check_imm(inst.imm, 13)
        if imm & 1:
            raise ValueError("branch offset must be even")
        return (((imm >> 12) & 1) << 31) | (((imm >> 5) & 0x3F) << 25) | (_reg(inst.rs2) << 20) | (_reg(inst.rs1) << 15) \
            | (BRANCH_OPS[op] << 12) | (((imm >> 1) & 0xF) << 8) | (((imm >> 11) & 1) << 7) | OP_BRANCH
    if op == "lui" or op == "auipc":
        return (_check_imm(inst.imm, 20, False) << 12) | (_reg(inst.rd) << 7) | (OP_LUI if op == "lui" else OP_AUIPC)
    if op == "jal":
        imm = _check_imm(inst.imm, 21)
        if imm & 1:
            raise ValueError("jump offset must be even")
        return (((imm >> 20) & 1) << 31) | (((imm >> 1) & 0x3FF) << 21) | (((imm >> 11) & 1) << 20) \
            | (((imm >> 12) & 0xFF) << 12) | (_reg(inst.rd) << 7) | OP_JAL
    if op == "jalr":
        return (_check_imm(inst.imm, 12) << 20) | (_reg(inst.rs1) << 15) | (_reg(inst.rd) << 7) | OP_JALR
    if op == "ecall":
        return OP_SYSTEM
    if op in CSR_OPS:
        src = _check_imm(inst.imm, 5, False) if op.endswith("i") else _reg(inst.rs1)
        return (_check_imm(inst.csr, 12, False) << 20) | (src << 15) | (CSR_OPS[op] << 12) | (_reg(inst.rd) << 7) | OP_SYSTEM
    if op == "vsetvli":
        zimm = vtype_bits(inst.vt_sew, inst.vt_lmul)
        return (zimm << 20) | (_reg(inst.rs1) << 15) | (F3_OPCFG << 12) | (_reg(inst.rd) << 7) | OP_V
    if op == "vsetvl":
        return (1 << 31) | (_reg(inst.rs2) << 20) | (_reg(inst.rs1) << 15) | (F3_OPCFG << 12) | (_reg(inst.rd) << 7) | OP_V
    if k in (Kind.VLOAD, Kind.VSTORE):
        width = EEW_WIDTH[inst.eew]
        mop = 0b10 if inst.strided else 0b00
        mid = _reg(inst.rs2) if inst.strided else 0
        reg = inst.vd if k is Kind.VLOAD else inst.vs3
        return (mop << 26) | (1 << 25) | (mid << 20) | (_reg(inst.rs1) << 15) | (width << 12) | (_reg(reg) << 7) \
            | (OP_VLOAD if k is Kind.VLOAD else OP_VSTORE)
    if op == "vmv" and inst.variant in ("xs", "sx"):
        if inst.variant == "xs":
            return (F6_VWXUNARY0 << 26) | (1 << 25) | (_reg(inst.vs2) << 20) | (F3_OPMVV << 12) | (_reg(inst.rd) << 7) | OP_V
        return (F6_VWXUNARY0 << 26) | (1 << 25) | (_reg(inst.rs1) << 15) | (F3_OPMVX << 12) | (_reg(inst.vd) << 7) | OP_V
    if op in VM_OPS:
        f6, _ = VM_OPS[op]
        f3 = MVARIANT_F3[inst.variant]
        mid = _reg(inst.vs1) if inst.variant == "vv" else _reg(inst.rs1)
        return (f6 << 26) | (1 << 25) | (_reg(inst.vs2) << 20) | (mid << 15) | (f3 << 12) | (_reg(inst.vd) << 7) | OP_V
    if op in VI_OPS:
        f6, _ = VI_OPS[op]
        f3 = VARIANT_F3[inst.variant]
        vs2 = 0 if op == "vmv" else _reg(inst.vs2)
        if inst.variant == "vv":
            mid = _reg(inst.vs1)
        elif inst.variant == "vx":
            mid = _reg(inst.rs1)
        else:
            mid = _check_imm(inst.imm, 5, signed=op not in UIMM_OPS)
        return (f6 << 26) | (1 << 25) | (vs2 << 20) | (mid << 15) | (f3 << 12) | (_reg(inst.vd) << 7) | OP_V
    raise UnknownInstruction(f"cannot encode {op!r}")


# ---------------------------------------------------------------------------
# decode

def _check_group(reg: Optional[int], emul: int, what: str) -> None:
    if reg is not None and reg % emul:
        raise IllegalRegisterGroup(f"{what}=v{reg} is not aligned to a group of {emul}")


def check_alignment(inst: DecodedInst, sew: int, lmul: int) -> None:
    """Raise IllegalRegisterGroup if any vector operand breaks LMUL grouping."""
    if inst.kind in (Kind.VLOAD, Kind.VSTORE):
        emul = max(1, inst.eew * lmul // sew)
        if emul > 8:
            raise IllegalRegisterGroup(f"EMUL={emul} exceeds 8")
        _check_group(inst.vd if inst.kind is Kind.VLOAD else inst.vs3, emul, "vd" if inst.kind is Kind.VLOAD else "vs3")
        if (inst.vd if inst.kind is Kind.VLOAD else inst.vs3) + emul > 32:
            raise IllegalRegisterGroup("register group exceeds v31")
        return
    if inst.kind in (Kind.VARITH, Kind.VSLIDE, Kind.VMOVE):
        if inst.variant in ("xs", "sx"):
            return
        for name in ("vd", "vs1", "vs2"):
            _check_group(getattr(inst, name), lmul, name)
        if inst.kind is Kind.VSLIDE and inst.vd == inst.vs2:
            raise IllegalRegisterGroup("slide destination overlaps source")


def decode(word: int, vtype: Optional[VTypeState] = None) -> DecodedInst:
    """Decode one 32-bit word.

    When ``vtype`` is given, vector instructions carry its SEW/LMUL as
    context and their register groups are checked for LMUL alignment.
    """
    word &= 0xFFFFFFFF
    opc = word & 0x7F
    rd = (word >> 7) & 31
    f3 = (word >> 12) & 7
    rs1 = (word >> 15) & 31
    rs2 = (word >> 20) & 31
    f7 = word >> 25

    if opc == OP_REG:
        name = R_DECODE.get((f3, f7))
        if name is None:
            raise UnknownInstruction(f"{word:#010x}: OP funct3={f3} funct7={f7:#x}")
        return DecodedInst(Kind.SARITH, name, rd=rd, rs1=rs1, rs2=rs2)
    if opc == OP_IMM:
        if f3 in (1, 5):
            name = SHIFT_I_DECODE.get((f3, f7))
            if name is None:
                raise UnknownInstruction(f"{word:#010x}: bad shift encoding")
            return DecodedInst(Kind.SARITH, name, rd=rd, rs1=rs1, imm=rs2)
        return DecodedInst(Kind.SARITH, I_DECODE[f3], rd=rd, rs1=rs1, imm=_sext(word >> 20, 12))
    if opc == OP_LOAD:
        if f3 not in LOAD_DECODE:
            raise UnknownInstruction(f"{word:#010x}: load funct3={f3}")
        return DecodedInst(Kind.SLOAD, LOAD_DECODE[f3], rd=rd, rs1=rs1, imm=_sext(word >> 20, 12))
    if opc == OP_STORE:
        if f3 not in STORE_DECODE:
            raise UnknownInstruction(f"{word:#010x}: store funct3={f3}")
        imm = _sext(((word >> 25) << 5) | rd, 12)
        return DecodedInst(Kind.SSTORE, STORE_DECODE[f3], rs1=rs1, rs2=rs2, imm=imm)
    if opc == OP_BRANCH:
        if f3 not in BRANCH_DECODE:
            raise UnknownInstruction(f"{word:#010x}: branch funct3={f3}")
        imm = (((word >> 31) & 1) << 12) | (((word >> 7) & 1) << 11) | (((word >> 25) & 0x3F) << 5) | (((word >> 8) & 0xF) << 1)
        return DecodedInst(Kind.BRANCH, BRANCH_DECODE[f3], rs1=rs1, rs2=rs2, imm=_sext(imm, 13))
    if opc == OP_LUI or opc == OP_AUIPC:
        return DecodedInst(Kind.SARITH, "lui" if opc == OP_LUI else "auipc", rd=rd, imm=word >> 12)
    if opc == OP_JAL:
        imm = (((word >> 31) & 1) << 20) | (((word >> 12) & 0xFF) << 12) | (((word >> 20) & 1) << 11) | (((word >> 21) & 0x3FF) << 1)
        return DecodedInst(Kind.BRANCH, "jal", rd=rd, imm=_sext(imm, 21))
    if opc == OP_JALR:
        if f3:
            raise UnknownInstruction(f"{word:#010x}: jalr funct3={f3}")
        return DecodedInst(Kind.BRANCH, "jalr", rd=rd, rs1=rs1, imm=_sext(word >> 20, 12))
    if opc == OP_SYSTEM:
        if word == OP_SYSTEM:
            return DecodedInst(Kind.CSR, "ecall")
        if f3 not in CSR_DECODE:
            raise UnknownInstruction(f"{word:#010x}: system funct3={f3}")
        name = CSR_DECODE[f3]
        if name.endswith("i"):
            return DecodedInst(Kind.CSR, name, rd=rd, imm=rs1, csr=word >> 20)
        return DecodedInst(Kind.CSR, name, rd=rd, rs1=rs1, csr=word >> 20)
    if opc in (OP_V, OP_VLOAD, OP_VSTORE):
        inst = _decode_vector(word, opc, rd, f3, rs1, rs2)
        if vtype is not None:
            if inst.kind is not Kind.VSETVL:
                check_alignment(inst, vtype.sew, vtype.lmul)
            inst = replace(inst, ctx_sew=vtype.sew, ctx_lmul=vtype.lmul)
        return inst
    raise UnknownInstruction(f"{word:#010x}: major opcode {opc:#04x}")


def _decode_vector(word: int, opc: int, rd: int, f3: int, rs1: int, rs2: int) -> DecodedInst:
    vm = (word >> 25) & 1
    if opc in (OP_VLOAD, OP_VSTORE):
        nf, mew, mop = word >> 29, (word >> 28) & 1, (word >> 26) & 3
        if f3 not in WIDTH_EEW or nf or mew or not vm or mop not in (0, 2):
            raise UnknownInstruction(f"{word:#010x}: unsupported vector memory encoding")
        if mop == 0 and rs2 != 0:
            raise UnknownInstruction(f"{word:#010x}: unsupported unit-stride variant")
        eew = WIDTH_EEW[f3]
        strided = mop == 2
        if opc == OP_VLOAD:
            return DecodedInst(Kind.VLOAD, "vlse" if strided else "vle", vd=rd, rs1=rs1,
                               rs2=rs2 if strided else None, eew=eew, strided=strided)
        return DecodedInst(Kind.VSTORE, "vsse" if strided else "vse", vs3=rd, rs1=rs1,
                           rs2=rs2 if strided else None, eew=eew, strided=strided)

    if f3 == F3_OPCFG:
        if not (word >> 31):
            sew, lmul = parse_vtype_bits((word >> 20) & 0x7FF)
            return DecodedInst(Kind.VSETVL, "vsetvli", rd=rd, rs1=rs1, vt_sew=sew, vt_lmul=lmul)
        if (word >> 25) == 0b1000000:
            return DecodedInst(Kind.VSETVL, "vsetvl", rd=rd, rs1=rs1, rs2=rs2)
        raise UnknownInstruction(f"{word:#010x}: vsetivli/reserved config encoding")

    f6 = word >> 26
    if not vm:
        raise UnknownInstruction(f"{word:#010x}: masked vector operations are not implemented")
    vd, vs2 = rd, rs2
    if f3 in (F3_OPMVV, F3_OPMVX):
        if f6 == F6_VWXUNARY0:
            if f3 == F3_OPMVV and rs1 == 0:
                return DecodedInst(Kind.VMOVE, "vmv", "xs", rd=rd, vs2=vs2)
            if f3 == F3_OPMVX and vs2 == 0:
                return DecodedInst(Kind.VMOVE, "vmv", "sx", vd=vd, rs1=rs1)
            raise UnknownInstruction(f"{word:#010x}: unsupported unary encoding")
        name = VM_DECODE.get(f6)
        if name is None:
            raise UnknownInstruction(f"{word:#010x}: OPM funct6={f6:#08b}")
        if f3 == F3_OPMVV:
            return DecodedInst(Kind.VARITH, name, "vv", vd=vd, vs1=rs1, vs2=vs2)
        return DecodedInst(Kind.VARITH, name, "vx", vd=vd, rs1=rs1, vs2=vs2)

    name = VI_DECODE.get(f6)
    variant = {F3_OPIVV: "vv", F3_OPIVX: "vx", F3_OPIVI: "vi"}.get(f3)
    if name is None or variant is None or variant not in VI_OPS[name][1]:
        raise UnknownInstruction(f"{word:#010x}: OPI funct6={f6:#08b} funct3={f3}")
    if name == "vmv":
        if vs2 != 0:
            raise UnknownInstruction(f"{word:#010x}: vmerge is not implemented")
        vs2 = None
    kind = Kind.VSLIDE if name in SLIDE_OPS else Kind.VMOVE if name == "vmv" else Kind.VARITH
    if variant == "vv":
        return DecodedInst(kind, name, "vv", vd=vd, vs1=rs1, vs2=vs2)
    if variant == "vx":
        return DecodedInst(kind, name, "vx", vd=vd, rs1=rs1, vs2=vs2)
    imm = rs1 if name in UIMM_OPS else _sext(rs1, 5)
    return DecodedInst(kind, name, "vi", vd=vd, vs2=vs2, imm=imm)
