"""Two-pass assembler for the kernel text format.

One statement per line, RVV 1.0 mnemonics, ``label:`` definitions, and a
handful of directives::

    .text                   switch to the instruction stream
    .data [addr]            switch to data, optionally moving the location
    .word / .half / .byte   emit little-endian constants (expressions allowed)
    .space n                reserve n zero bytes
    .align k                align the data location to 2**k bytes
    .equ name, expr         define an absolute symbol

Comments start with ``#`` or ``//``.  Expressions are sums/differences of
integer literals and symbols.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from ..errors import AsmError, SimError
from .encoding import (
    BRANCH_OPS, CSR_OPS, I_OPS, KNOWN_CSRS, LOAD_OPS, R_OPS, SHIFT_I_OPS, STORE_OPS,
    UIMM_OPS, VI_OPS, VM_OPS, DecodedInst, Kind, encode,
)

TEXT_BASE = 0x8000_0000

ABI_NAMES = {
    "zero": 0, "ra": 1, "sp": 2, "gp": 3, "tp": 4, "t0": 5, "t1": 6, "t2": 7,
    "s0": 8, "fp": 8, "s1": 9, "t3": 28, "t4": 29, "t5": 30, "t6": 31,
}
ABI_NAMES.update({f"a{i}": 10 + i for i in range(8)})
ABI_NAMES.update({f"s{i}": 16 + i for i in range(2, 12)})
CSR_NAMES = {v: k for k, v in KNOWN_CSRS.items()}

_MEM_RE = re.compile(r"^(.*)\((\w+)\)$")
_VMEM_RE = re.compile(r"^(vl|vs)(s?)e(8|16|32)\.v$")


@dataclass
class Program:
    """Assembled image: instruction words plus initialized data segments."""
    words: list[int]
    text_base: int = TEXT_BASE
    data: list[tuple[int, bytes]] = field(default_factory=list)
    symbols: dict[str, int] = field(default_factory=dict)
    source: list[str] = field(default_factory=list)  # source line per word

    @property
    def text_end(self) -> int:
        return self.text_base + 4 * len(self.words)

    def word_at(self, pc: int) -> int:
        idx = (pc - self.text_base) >> 2
        if pc & 3 or not 0 <= idx < len(self.words):
            raise SimError(f"pc {pc:#x} outside program text")
        return self.words[idx]


def parse_xreg(tok: str) -> int:
    tok = tok.strip().lower()
    if tok in ABI_NAMES:
        return ABI_NAMES[tok]
    if re.fullmatch(r"x([0-9]|[12][0-9]|3[01])", tok):
        return int(tok[1:])
    raise ValueError(f"bad scalar register {tok!r}")


def parse_vreg(tok: str) -> int:
    tok = tok.strip().lower()
    if re.fullmatch(r"v([0-9]|[12][0-9]|3[01])", tok):
        return int(tok[1:])
    raise ValueError(f"bad vector register {tok!r}")


def _split_operands(text: str) -> list[str]:
    return [t.strip() for t in text.split(",")] if text.strip() else []


class _Assembler:
    def __init__(self, text_base: int, data_base: int):
        self.text_base = text_base
        self.data_base = data_base
        self.symbols: dict[str, int] = {}

    # -- expressions --------------------------------------------------------
    def eval(self, expr: str, strict: bool = True) -> Optional[int]:
        expr = expr.strip()
        if not expr:
            raise ValueError("empty expression")
        total = 0
        for sign, term in re.findall(r"([+-]?)\s*([^+\-\s]+)", expr):
            term = term.strip()
            if re.fullmatch(r"0[xX][0-9a-fA-F_]+|0[bB][01_]+|\d+", term):
                val = int(term, 0)
            elif term in self.symbols:
                val = self.symbols[term]
            elif strict:
                raise ValueError(f"undefined symbol {term!r}")
            else:
                return None
            total += -val if sign == "-" else val
        return total

    # -- pass 1 -------------------------------------------------------------
    def _size(self, mnem: str, ops: list[str]) -> int:
        if mnem == "la":
            return 2
        if mnem == "li":
            val = self.eval(ops[1], strict=False) if len(ops) == 2 else None
            return 1 if val is not None and -2048 <= val < 2048 else 2
        return 1

    def run(self, source: str) -> Program:
        stmts = []  # (section, addr, mnem, ops, lineno, raw)
        section = "text"
        pc = self.text_base
        dloc = self.data_base
        lines = source.splitlines()
        for lineno, raw in enumerate(lines, 1):
            line = raw.split("#", 1)[0].split("//", 1)[0].strip()
            try:
                while True:
                    m = re.match(r"^([A-Za-z_.$][\w.$]*)\s*:(.*)$", line)
                    if not m:
                        break
                    name = m.group(1)
                    if name in self.symbols:
                        raise ValueError(f"duplicate label {name!r}")
                    self.symbols[name] = pc if section == "text" else dloc
                    line = m.group(2).strip()
                if not line:
                    continue
                parts = line.split(None, 1)
                mnem = parts[0].lower()
                rest = parts[1] if len(parts) > 1 else ""
                if mnem.startswith("."):
                    if mnem == ".text":
                        section = "text"
                    elif mnem == ".data":
                        section = "data"
                        if rest.strip():
                            dloc = self.eval(rest)
                    elif mnem in (".equ", ".set"):
                        name, expr = _split_operands(rest)
                        self.symbols[name] = self.eval(expr)
                    elif mnem in (".word", ".half", ".byte", ".space", ".align"):
                        if section != "data":
                            raise ValueError(f"{mnem} only allowed in .data")
                        if mnem == ".align":
                            a = 1 << self.eval(rest)
                            dloc = (dloc + a - 1) & -a
                            continue
                        if mnem == ".space":
                            n = self.eval(rest)
                            stmts.append(("data", dloc, mnem, [str(n)], lineno, raw))
                            dloc += n
                            continue
                        ops = _split_operands(rest)
                        size = {".word": 4, ".half": 2, ".byte": 1}[mnem]
                        stmts.append(("data", dloc, mnem, ops, lineno, raw))
                        dloc += size * len(ops)
                    elif mnem in (".globl", ".global", ".section", ".option", ".p2align"):
                        pass
                    else:
                        raise ValueError(f"unknown directive {mnem}")
                    continue
                if section != "text":
                    raise ValueError("instruction outside .text")
                ops = _split_operands(rest)
                size = self._size(mnem, ops)
                stmts.append(("text", pc, mnem, (ops, size), lineno, raw))
                pc += 4 * size
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise AsmError(f"line {lineno}: {exc}: {raw.strip()!r}") from None

        # -- pass 2 ---------------------------------------------------------
        words: list[int] = []
        src: list[str] = []
        data: dict[int, bytearray] = {}
        for section, addr, mnem, ops, lineno, raw in stmts:
            try:
                if section == "data":
                    if mnem == ".space":
                        blob = bytes(int(ops[0]))
                    else:
                        size = {".word": 4, ".half": 2, ".byte": 1}[mnem]
                        mask = (1 << (8 * size)) - 1
                        blob = b"".join((self.eval(o) & mask).to_bytes(size, "little") for o in ops)
                    data[addr] = bytearray(blob)
                    continue
                ops, size = ops
                insts = self.expand(mnem, ops, addr, size)
                for inst in insts:
                    words.append(encode(inst))
                    src.append(raw.strip())
            except AsmError:
                raise
            except (ValueError, KeyError, IndexError, TypeError, SimError) as exc:
                raise AsmError(f"line {lineno}: {exc}: {raw.strip()!r}") from None
        segments = _merge_segments(data)
        return Program(words=words, text_base=self.text_base, data=segments,
                       symbols=dict(self.symbols), source=src)

    # -- instruction expansion ---------------------------------------------
    def _mem_operand(self, tok: str) -> tuple[int, int]:
        m = _MEM_RE.match(tok.strip())
        if not m:
            raise ValueError(f"expected imm(reg), got {tok!r}")
        imm = self.eval(m.group(1)) if m.group(1).strip() else 0
        return imm, parse_xreg(m.group(2))

    def _csr(self, tok: str) -> int:
        tok = tok.strip().lower()
        if tok in CSR_NAMES:
            return CSR_NAMES[tok]
        return self.eval(tok)

    def expand(self, mnem: str, ops: list[str], pc: int, size: int = 1) -> list[DecodedInst]:
        X, V, E = parse_xreg, parse_vreg, self.eval
        S = Kind.SARITH

        def nops(n):
            if len(ops) != n:
                raise ValueError(f"{mnem} expects {n} operands, got {len(ops)}")

        # scalar pseudo-instructions
        if mnem == "nop":
            nops(0)
            return [DecodedInst(S, "addi", rd=0, rs1=0, imm=0)]
        if mnem in ("li", "la"):
            nops(2)
            rd, val = X(ops[0]), E(ops[1]) & 0xFFFFFFFF
            sval = val - (1 << 32) if val >> 31 else val
            if mnem == "li" and size == 1:
                return [DecodedInst(S, "addi", rd=rd, rs1=0, imm=sval)]
            lo = ((val & 0xFFF) ^ 0x800) - 0x800
            hi = ((val - lo) >> 12) & 0xFFFFF
            return [DecodedInst(S, "lui", rd=rd, imm=hi), DecodedInst(S, "addi", rd=rd, rs1=rd, imm=lo)]
        if mnem == "mv":
            nops(2)
            return [DecodedInst(S, "addi", rd=X(ops[0]), rs1=X(ops[1]), imm=0)]
        if mnem == "neg":
            nops(2)
            return [DecodedInst(S, "sub", rd=X(ops[0]), rs1=0, rs2=X(ops[1]))]
        if mnem == "not":
            nops(2)
            return [DecodedInst(S, "xori", rd=X(ops[0]), rs1=X(ops[1]), imm=-1)]
        if mnem == "j":
            nops(1)
            return [DecodedInst(Kind.BRANCH, "jal", rd=0, imm=E(ops[0]) - pc)]
        if mnem == "jal" and len(ops) == 1:
            return [DecodedInst(Kind.BRANCH, "jal", rd=1, imm=E(ops[0]) - pc)]
        if mnem == "jr":
            nops(1)
            return [DecodedInst(Kind.BRANCH, "jalr", rd=0, rs1=X(ops[0]), imm=0)]
        if mnem == "ret":
            nops(0)
            return [DecodedInst(Kind.BRANCH, "jalr", rd=0, rs1=1, imm=0)]
        zb = {"beqz": ("beq", False), "bnez": ("bne", False), "bltz": ("blt", False),
              "bgez": ("bge", False), "blez": ("bge", True), "bgtz": ("blt", True)}
        if mnem in zb:
            nops(2)
            base, swap = zb[mnem]
            r = X(ops[0])
            rs1, rs2 = (0, r) if swap else (r, 0)
            return [DecodedInst(Kind.BRANCH, base, rs1=rs1, rs2=rs2, imm=E(ops[1]) - pc)]
        sw = {"bgt": "blt", "ble": "bge", "bgtu": "bltu", "bleu": "bgeu"}
        if mnem in sw:
            nops(3)
            return [DecodedInst(Kind.BRANCH, sw[mnem], rs1=X(ops[1]), rs2=X(ops[0]), imm=E(ops[2]) - pc)]
        if mnem == "csrr":
            nops(2)
            return [DecodedInst(Kind.CSR, "csrrs", rd=X(ops[0]), rs1=0, csr=self._csr(ops[1]))]
        if mnem == "csrw":
            nops(2)
            return [DecodedInst(Kind.CSR, "csrrw", rd=0, rs1=X(ops[1]), csr=self._csr(ops[0]))]

        # scalar base instructions
        if mnem in R_OPS:
            nops(3)
            return [DecodedInst(S, mnem, rd=X(ops[0]), rs1=X(ops[1]), rs2=X(ops[2]))]
        if mnem in I_OPS or mnem in SHIFT_I_OPS:
            nops(3)
            return [DecodedInst(S, mnem, rd=X(ops[0]), rs1=X(ops[1]), imm=E(ops[2]))]
        if mnem in ("lui", "auipc"):
            nops(2)
            return [DecodedInst(S, mnem, rd=X(ops[0]), imm=E(ops[1]) & 0xFFFFF)]
        if mnem in LOAD_OPS:
            nops(2)
            imm, rs1 = self._mem_operand(ops[1])
            return [DecodedInst(Kind.SLOAD, mnem, rd=X(ops[0]), rs1=rs1, imm=imm)]
        if mnem in STORE_OPS:
            nops(2)
            imm, rs1 = self._mem_operand(ops[1])
            return [DecodedInst(Kind.SSTORE, mnem, rs2=X(ops[0]), rs1=rs1, imm=imm)]
        if mnem in BRANCH_OPS:
            nops(3)
            return [DecodedInst(Kind.BRANCH, mnem, rs1=X(ops[0]), rs2=X(ops[1]), imm=E(ops[2]) - pc)]
        if mnem == "jal":
            nops(2)
            return [DecodedInst(Kind.BRANCH, "jal", rd=X(ops[0]), imm=E(ops[1]) - pc)]
        if mnem == "jalr":
            if len(ops) == 2:
                imm, rs1 = self._mem_operand(ops[1])
            else:
                nops(3)
                rs1, imm = X(ops[1]), E(ops[2])
            return [DecodedInst(Kind.BRANCH, "jalr", rd=X(ops[0]), rs1=rs1, imm=imm)]
        if mnem == "ecall":
            nops(0)
            return [DecodedInst(Kind.CSR, "ecall")]
        if mnem in CSR_OPS:
            nops(3)
            if mnem.endswith("i"):
                return [DecodedInst(Kind.CSR, mnem, rd=X(ops[0]), csr=self._csr(ops[1]), imm=E(ops[2]))]
            return [DecodedInst(Kind.CSR, mnem, rd=X(ops[0]), csr=self._csr(ops[1]), rs1=X(ops[2]))]

        # vector configuration
        if mnem == "vsetvli":
            if len(ops) < 4:
                raise ValueError("vsetvli expects rd, rs1, eN, mN[, ta, ma]")
            sew = lmul = None
            for tok in ops[2:]:
                tok = tok.lower()
                if re.fullmatch(r"e\d+", tok):
                    sew = int(tok[1:])
                elif re.fullmatch(r"m\d+", tok):
                    lmul = int(tok[1:])
                elif tok not in ("ta", "tu", "ma", "mu"):
                    raise ValueError(f"bad vtype token {tok!r}")
            if sew not in (8, 16, 32, 64) or lmul not in (1, 2, 4, 8):
                raise ValueError("vsetvli needs a valid eN and mN")
            if sew == 64:
                raise ValueError("e64 is not available in Zve32x")
            return [DecodedInst(Kind.VSETVL, "vsetvli", rd=X(ops[0]), rs1=X(ops[1]), vt_sew=sew, vt_lmul=lmul)]
        if mnem == "vsetvl":
            nops(3)
            return [DecodedInst(Kind.VSETVL, "vsetvl", rd=X(ops[0]), rs1=X(ops[1]), rs2=X(ops[2]))]

        # vector memory
        m = _VMEM_RE.match(mnem)
        if m:
            is_load, strided, eew = m.group(1) == "vl", bool(m.group(2)), int(m.group(3))
            nops(3 if strided else 2)
            imm, rs1 = self._mem_operand(ops[1])
            if imm:
                raise ValueError("vector memory operands take no offset")
            rs2 = X(ops[2]) if strided else None
            if is_load:
                return [DecodedInst(Kind.VLOAD, "vlse" if strided else "vle", vd=V(ops[0]), rs1=rs1,
                                    rs2=rs2, eew=eew, strided=strided)]
            return [DecodedInst(Kind.VSTORE, "vsse" if strided else "vse", vs3=V(ops[0]), rs1=rs1,
                                rs2=rs2, eew=eew, strided=strided)]

        # vector arithmetic / moves / slides
        if "." not in mnem:
            raise ValueError(f"unknown mnemonic {mnem!r}")
        base, variant = mnem.split(".", 1)
        if base == "vmv" and variant == "x.s":
            nops(2)
            return [DecodedInst(Kind.VMOVE, "vmv", "xs", rd=X(ops[0]), vs2=V(ops[1]))]
        if base == "vmv" and variant == "s.x":
            nops(2)
            return [DecodedInst(Kind.VMOVE, "vmv", "sx", vd=V(ops[0]), rs1=X(ops[1]))]
        if base == "vmv" and variant in ("v.v", "v.x", "v.i"):
            nops(2)
            v = variant[-1]
            if v == "v":
                kw = {"vs1": V(ops[1])}
            elif v == "x":
                kw = {"rs1": X(ops[1])}
            else:
                kw = {"imm": E(ops[1])}
                if not -16 <= kw["imm"] <= 15:
                    raise ValueError(f"immediate {kw['imm']} out of range [-16, 15]")
            return [DecodedInst(Kind.VMOVE, "vmv", "v" + v, vd=V(ops[0]), **kw)]
        if base in VM_OPS and variant in VM_OPS[base][1]:
            nops(3)
            if base == "vmacc":  # vd, vs1|rs1, vs2
                if variant == "vv":
                    return [DecodedInst(Kind.VARITH, base, "vv", vd=V(ops[0]), vs1=V(ops[1]), vs2=V(ops[2]))]
                return [DecodedInst(Kind.VARITH, base, "vx", vd=V(ops[0]), rs1=X(ops[1]), vs2=V(ops[2]))]
            if variant == "vv":
                return [DecodedInst(Kind.VARITH, base, "vv", vd=V(ops[0]), vs2=V(ops[1]), vs1=V(ops[2]))]
            return [DecodedInst(Kind.VARITH, base, "vx", vd=V(ops[0]), vs2=V(ops[1]), rs1=X(ops[2]))]
        if base in VI_OPS and base != "vmv" and variant in VI_OPS[base][1]:
            nops(3)
            kind = Kind.VSLIDE if base in ("vslideup", "vslidedown") else Kind.VARITH
            vd, vs2 = V(ops[0]), V(ops[1])
            if variant == "vv":
                return [DecodedInst(kind, base, "vv", vd=vd, vs2=vs2, vs1=V(ops[2]))]
            if variant == "vx":
                return [DecodedInst(kind, base, "vx", vd=vd, vs2=vs2, rs1=X(ops[2]))]
            imm = E(ops[2])
            lo, hi = (0, 31) if base in UIMM_OPS else (-16, 15)
            if not lo <= imm <= hi:
                raise ValueError(f"immediate {imm} out of range [{lo}, {hi}]")
            return [DecodedInst(kind, base, "vi", vd=vd, vs2=vs2, imm=imm)]
        raise ValueError(f"unknown mnemonic {mnem!r}")


def _merge_segments(data: dict[int, bytearray]) -> list[tuple[int, bytes]]:
    merged: list[tuple[int, bytearray]] = []
    for addr in sorted(data):
        blob = data[addr]
        if merged and merged[-1][0] + len(merged[-1][1]) == addr:
            merged[-1][1].extend(blob)
        elif merged and merged[-1][0] + len(merged[-1][1]) > addr:
            raise AsmError(f"overlapping data at {addr:#x}")
        else:
            merged.append((addr, bytearray(blob)))
    return [(a, bytes(b)) for a, b in merged]


def assemble(source: str, text_base: int = TEXT_BASE, data_base: int = 0) -> Program:
    """Assemble ``source`` into a :class:`Program`.  Errors carry the line number."""
    return _Assembler(text_base, data_base).run(source)


def _x(r: int) -> str:
    return f"x{r}"


def format_inst(inst: DecodedInst) -> str:
    """Render a decoded instruction back to assembly text (used in traces)."""
    op, k, m = inst.op, inst.kind, inst.mnemonic
    if k is Kind.VSETVL:
        if op == "vsetvli":
            return f"vsetvli {_x(inst.rd)}, {_x(inst.rs1)}, e{inst.vt_sew}, m{inst.vt_lmul}, ta, ma"
        return f"vsetvl {_x(inst.rd)}, {_x(inst.rs1)}, {_x(inst.rs2)}"
    if k in (Kind.VLOAD, Kind.VSTORE):
        reg = inst.vd if k is Kind.VLOAD else inst.vs3
        tail = f", {_x(inst.rs2)}" if inst.strided else ""
        return f"{m} v{reg}, ({_x(inst.rs1)}){tail}"
    if op == "vmv":
        if inst.variant == "xs":
            return f"vmv.x.s {_x(inst.rd)}, v{inst.vs2}"
        if inst.variant == "sx":
            return f"vmv.s.x v{inst.vd}, {_x(inst.rs1)}"
        src = {"vv": f"v{inst.vs1}", "vx": _x(inst.rs1 or 0), "vi": str(inst.imm)}[inst.variant]
        return f"vmv.v.{inst.variant[1]} v{inst.vd}, {src}"
    if k in (Kind.VARITH, Kind.VSLIDE):
        third = {"vv": f"v{inst.vs1}", "vx": _x(inst.rs1 or 0), "vi": str(inst.imm)}[inst.variant]
        if op == "vmacc":
            return f"{m} v{inst.vd}, {third}, v{inst.vs2}"
        return f"{m} v{inst.vd}, v{inst.vs2}, {third}"
    if k is Kind.SLOAD:
        return f"{op} {_x(inst.rd)}, {inst.imm}({_x(inst.rs1)})"
    if k is Kind.SSTORE:
        return f"{op} {_x(inst.rs2)}, {inst.imm}({_x(inst.rs1)})"
    if k is Kind.BRANCH:
        if op == "jal":
            return f"jal {_x(inst.rd)}, {inst.imm:+d}"
        if op == "jalr":
            return f"jalr {_x(inst.rd)}, {inst.imm}({_x(inst.rs1)})"
        return f"{op} {_x(inst.rs1)}, {_x(inst.rs2)}, {inst.imm:+d}"
    if k is Kind.CSR:
        if op == "ecall":
            return "ecall"
        name = KNOWN_CSRS.get(inst.csr, hex(inst.csr))
        src = str(inst.imm) if op.endswith("i") else _x(inst.rs1)
        return f"{op} {_x(inst.rd)}, {name}, {src}"
    if op in ("lui", "auipc"):
        return f"{op} {_x(inst.rd)}, {inst.imm:#x}"
    if inst.rs2 is not None:
        return f"{op} {_x(inst.rd)}, {_x(inst.rs1)}, {_x(inst.rs2)}"
    return f"{op} {_x(inst.rd)}, {_x(inst.rs1)}, {inst.imm}"
