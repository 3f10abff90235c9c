"""In-order single-issue scalar core with a register scoreboard.

Instructions execute functionally at issue.  Timing comes from per-register
ready cycles: ALU results are usable the next cycle, multiplies after
``mul_latency`` cycles, loads when the memory system's response arrives.
Taken branches and jumps cost ``branch_penalty`` bubbles.  Vector
instructions are handed to the attached :class:`Spatz`, which may refuse
them (the core then retries the same instruction next cycle).
"""

from __future__ import annotations

from typing import Optional

from ..isa.encoding import DecodedInst, Kind, decode
from ..isa.functional import ArchState, Memory, exec_functional

ALU, MUL, LOAD, STORE, BRANCH, SYS, VEC, VCFG = range(8)
NEVER = 1 << 62


def _compile(inst: DecodedInst) -> tuple:
    """(inst, class, source regs, destination reg) for one decoded word."""
    k, op = inst.kind, inst.op
    srcs: list = []
    rd = inst.rd
    if k is Kind.SARITH:
        cls = MUL if op in ("mul", "p.mac") else ALU
        if op in ("lui", "auipc"):
            pass
        elif inst.rs2 is not None:
            srcs = [inst.rs1, inst.rs2] + ([inst.rd] if op == "p.mac" else [])
        else:
            srcs = [inst.rs1]
    elif k is Kind.SLOAD:
        cls, srcs = LOAD, [inst.rs1]
    elif k is Kind.SSTORE:
        cls, srcs = STORE, [inst.rs1, inst.rs2]
    elif k is Kind.BRANCH:
        cls = BRANCH
        srcs = [] if op == "jal" else [inst.rs1] if op == "jalr" else [inst.rs1, inst.rs2]
    elif k is Kind.CSR:
        cls = SYS
        srcs = [inst.rs1] if inst.rs1 is not None else []
    elif k is Kind.VSETVL:
        cls = VCFG
        srcs = [inst.rs1] + ([inst.rs2] if op == "vsetvl" else [])
    else:
        cls = VEC
        rd = inst.rd if (k is Kind.VMOVE and inst.variant == "xs") else None
        if inst.rs1 is not None:
            srcs.append(inst.rs1)
        if inst.rs2 is not None:
            srcs.append(inst.rs2)
    srcs = tuple(r for r in srcs if r)
    return inst, cls, srcs, (rd or None)


class ProgramCache:
    """Decoded and pre-classified program text shared by all cores."""

    def __init__(self, program):
        self.base = program.text_base
        self.entries = [_compile(decode(w)) for w in program.words]

    def get(self, pc: int) -> tuple:
        idx = (pc - self.base) >> 2
        if pc & 3 or not 0 <= idx < len(self.entries):
            from ..errors import UnknownInstruction
            raise UnknownInstruction(f"fetch from pc {pc:#x} outside program text")
        return self.entries[idx]


class Snitch:
    def __init__(self, core_id: int, cfg, cache: ProgramCache, mem: Memory, l1, icache,
                 counters, spatz=None, trace=None):
        self.core = core_id
        self.cfg = cfg
        self.cache = cache
        self.mem = mem
        self.l1 = l1
        self.icache = icache
        self.c = counters
        self.spatz = spatz
        self.trace = trace
        vlen = cfg.vlen_bits if cfg.is_vector else 128
        self.state = ArchState(vlen=vlen, hartid=core_id, pc=cache.base)
        self.ready = [0] * 32
        self.conflicted = [False] * 32
        self.wake = 0
        self.wake_reason = "issue"
        self.mem_busy_until = 0
        self.load_resp: list[int] = []
        self.fetched_pc: Optional[int] = None
        self.mul_lat = cfg.mul_latency
        self.branch_pen = cfg.branch_penalty
        self.max_loads = cfg.load_outstanding
        self.issued = 0
        if spatz is not None:
            spatz.scalar_writeback = self._vector_writeback

    @property
    def halted(self) -> bool:
        return self.state.halted

    def _vector_writeback(self, rd: int, at: int) -> None:
        self.ready[rd] = at

    def done(self, t: int) -> bool:
        return self.state.halted and t >= self.mem_busy_until and (self.spatz is None or self.spatz.idle)

    def next_wake(self) -> int:
        return self.wake

    def tick(self, t: int) -> str:
        st = self.state
        if st.halted:
            return "drain" if (t < self.mem_busy_until or (self.spatz is not None and not self.spatz.idle)) else "idle"
        if t < self.wake:
            return self.wake_reason
        pc = st.pc
        inst, cls, srcs, rd = self.cache.get(pc)
        if self.fetched_pc != pc:
            self.fetched_pc = pc
            self.c.icache_fetches += 1
            pen = self.icache.ifetch(pc)
            if pen:
                self.c.icache_misses += 1
                self.wake, self.wake_reason = t + pen, "ifetch"
                return "ifetch"
        ready = self.ready
        for r in srcs:
            if ready[r] > t:
                at = ready[r]
                if at >= NEVER:
                    self.wake = t + 1
                    reason = "fu_busy"
                else:
                    self.wake = at
                    reason = "bank_conflict" if self.conflicted[r] else "memory"
                self.wake_reason = reason
                return reason
        if rd and ready[rd] > t:  # write-after-write on a pending load
            self.wake = ready[rd] if ready[rd] < NEVER else t + 1
            self.wake_reason = "memory"
            return "memory"
        c = self.c
        if cls == ALU:
            exec_functional(inst, st, self.mem)
            if rd:
                ready[rd] = t + 1
                self.conflicted[rd] = False
        elif cls == MUL:
            exec_functional(inst, st, self.mem)
            if inst.op == "p.mac":
                c.ipu_mac += 1
                c.elementary_ops += 2
            else:
                c.ipu_mul += 1
                c.elementary_ops += 1
            if rd:
                ready[rd] = t + self.mul_lat
                self.conflicted[rd] = False
        elif cls == LOAD or cls == STORE:
            sp = self.spatz
            if sp is not None and sp.vmem_inflight:
                self.wake, self.wake_reason = t + 1, "mem_order"
                return "mem_order"
            if cls == LOAD:
                lr = [x for x in self.load_resp if x > t]
                self.load_resp = lr
                if len(lr) >= self.max_loads:
                    self.wake, self.wake_reason = min(lr), "memory"
                    return "memory"
            addr = (st.x[inst.rs1] + inst.imm) & 0xFFFFFFFF
            before = self.l1.counters.conflict_cycles
            resp = self.l1.route(self.core, addr & ~3, t, cls == STORE)
            exec_functional(inst, st, self.mem)
            if resp > self.mem_busy_until:
                self.mem_busy_until = resp
            if cls == LOAD:
                c.scalar_loads += 1
                self.load_resp.append(resp)
                if rd:
                    ready[rd] = resp
                    self.conflicted[rd] = self.l1.counters.conflict_cycles != before
            else:
                c.scalar_stores += 1
        elif cls == BRANCH:
            exec_functional(inst, st, self.mem)
            if rd:
                ready[rd] = t + 1
            if st.pc != pc + 4:
                self.wake, self.wake_reason = t + 1 + self.branch_pen, "issue"
        elif cls == SYS:
            exec_functional(inst, st, self.mem)
            if rd:
                ready[rd] = t + 1
        else:
            sp = self.spatz
            if sp is None:
                from ..errors import UnknownInstruction
                raise UnknownInstruction(f"vector instruction {inst.mnemonic} on a scalar-only core")
            if cls == VEC:
                if inst.kind in (Kind.VLOAD, Kind.VSTORE) and t < self.mem_busy_until:
                    self.wake, self.wake_reason = self.mem_busy_until, "mem_order"
                    return "mem_order"
                reason = sp.try_dispatch(inst, st, t)
                if reason is not None:
                    self.wake, self.wake_reason = t + 1, reason
                    return reason
                exec_functional(inst, st, self.mem)
                if rd:
                    ready[rd] = NEVER
            else:
                sp.c.vector_dispatched += 1
                exec_functional(inst, st, self.mem)
                if rd:
                    ready[rd] = t + 1
        c.scalar_instructions_issued += 1
        c.scalar_rf_reads += len(srcs)
        if rd:
            c.scalar_rf_writes += 1
        self.issued += 1
        if self.trace:
            from ..isa.asm import format_inst
            self.trace(t, self.core, "issue", f"{pc:#010x} {format_inst(inst)}")
        return "busy"
