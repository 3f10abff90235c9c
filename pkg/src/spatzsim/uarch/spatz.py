"""Beat-level timing model of the Spatz vector unit.

Values are produced by the functional model when an instruction is
dispatched; this model only decides *when* each beat happens.  A beat is
one 32N-bit slice of a register group.  Global beat ``g = 4 * vreg + b``
names a beat across the whole register file (every register has exactly
four beats because VLEN = 128 N).

Each in-flight instruction keeps two visible progress counters: ``issued``
(beats whose sources were read) and ``committed`` (beats written to the
VRF).  Dependencies are lists of thresholds on older instructions'
counters, checked per beat, which gives element-granular chaining at beat
resolution.  Counter updates made in cycle ``t`` become visible in
``t + 1``.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Callable, Optional

from ..isa.encoding import DecodedInst, Kind
from ..isa.functional import ArchState, vector_addresses
from .vrf import N_BANKS, VrfGeometry, VrfPorts, bank_of_global_beat

VAU, VLSU, VSLDU = 0, 1, 2
FU_NAMES = ("VAU", "VLSU", "VSLDU")
BANK = [bank_of_global_beat(g) for g in range(32 * 4)]
SLDU_WB_DEPTH = 2


class VEntry:
    """One in-flight vector instruction (a scoreboard entry)."""

    __slots__ = (
        "seq", "inst", "fu", "n", "d0", "srcs", "reads", "hi", "req_c", "req_i",
        "issued", "committed", "ip", "cp", "op_class", "elems", "eb", "epb",
        "is_load", "is_store", "words", "beat_ready", "req_beat", "req_word",
        "last_ack", "start_at", "scalar_rd", "vl",
    )

    def __init__(self, seq: int, inst: DecodedInst, fu: int, n: int):
        self.seq = seq
        self.inst = inst
        self.fu = fu
        self.n = n
        self.d0: Optional[int] = None
        self.srcs: list[int] = []
        self.reads: list[list[int]] = []  # global source beats newly read per beat
        self.hi: list[int] = []  # slides: highest source beat (relative) needed per output beat
        self.req_c: list[list] = [[] for _ in range(n)]
        self.req_i: list[list] = [[] for _ in range(n)]
        self.issued = self.committed = 0
        self.ip = self.cp = 0
        self.op_class = "alu"
        self.elems = 0
        self.eb = 4
        self.epb = 1
        self.is_load = self.is_store = False
        self.words: list[list[int]] = []
        self.beat_ready: list[int] = []
        self.req_beat = self.req_word = 0
        self.last_ack = 0
        self.start_at: Optional[int] = None
        self.scalar_rd: Optional[int] = None
        self.vl = 0

    # which of this entry's beats reads global source beat g last
    def last_reader_beat(self, g: int) -> Optional[int]:
        if self.fu == VSLDU:
            if not self.srcs:
                return None
            rel = g - self.srcs[0]
            if rel < 0 or not self.hi or rel > self.hi[-1]:
                return None
            for k, h in enumerate(self.hi):
                if h >= rel:
                    return k
            return None
        best = None
        for s in self.srcs:
            k = g - s
            if 0 <= k < self.n:
                best = k if best is None else max(best, k)
        return best

    def writes(self, g: int) -> bool:
        return self.d0 is not None and self.d0 <= g < self.d0 + self.n

    def __repr__(self):
        return f"<{FU_NAMES[self.fu]} #{self.seq} {self.inst.mnemonic} {self.committed}/{self.n}>"


class Spatz:
    """Controller, VRF ports and the three functional units of one core complex."""

    def __init__(self, core_id: int, cfg, l1, counters, chaining: bool = True,
                 check_hazards: bool = False, trace: Optional[Callable] = None):
        self.core = core_id
        self.cfg = cfg
        self.N = cfg.macus_per_pe
        self.geom = VrfGeometry(cfg.vlen_bits, self.N)
        self.W = self.geom.beat_bytes
        self.l1 = l1
        self.c = counters
        self.chaining = chaining
        self.check_hazards = check_hazards
        self.trace = trace
        self.lat = cfg.vau_latency
        self.depth = cfg.fu_queue_depth
        self.rob_cap = cfg.rob_beats
        self.swap = cfg.vsldu_swap_cycles
        self.ports = VrfPorts(horizon=self.lat + 2)
        self.queues: list[list[VEntry]] = [[], [], []]
        self.inflight: list[VEntry] = []
        self.vmem_inflight = 0
        self.rob_used = 0
        self.pending_commit: dict[int, list[VEntry]] = defaultdict(list)
        self.vau_wb: dict[tuple[int, int], VEntry] = {}  # (cycle, bank) -> VAU write-back owner
        self.sldu_wb: list[tuple[VEntry, int]] = []  # produced slide beats awaiting a write port
        self.touched: list[VEntry] = []
        self.seq = 0
        self.scalar_writeback: Optional[Callable[[int, int], None]] = None
        self.vau_state = "empty"
        self.vlsu_state = "empty"
        self.progress = 0

    # ------------------------------------------------------------------
    @property
    def idle(self) -> bool:
        return not self.inflight

    def fu_of(self, inst: DecodedInst) -> Optional[int]:
        k = inst.kind
        if k is Kind.VSETVL:
            return None
        if k in (Kind.VLOAD, Kind.VSTORE):
            return VLSU
        if k is Kind.VSLIDE:
            return VSLDU
        return VAU

    def try_dispatch(self, inst: DecodedInst, state: ArchState, t: int) -> Optional[str]:
        """Accept ``inst`` (returns None) or return the stall reason.

        Must be called before the functional model executes ``inst`` so that
        scalar operands and addresses are read from the pre-issue state.
        """
        fu = self.fu_of(inst)
        if fu is None:
            return None
        if len(self.queues[fu]) >= self.depth:
            return "fu_busy"
        e = self._build(inst, state, fu)
        self.c.vector_dispatched += 1
        if e.n == 0:
            return None
        self._link(e)
        self.queues[fu].append(e)
        self.inflight.append(e)
        if fu == VLSU:
            self.vmem_inflight += 1
        if self.trace:
            self.trace(t, self.core, "dispatch", f"{FU_NAMES[fu]} {inst.mnemonic} beats={e.n}")
        return None

    # ------------------------------------------------------------------
    def _build(self, inst: DecodedInst, state: ArchState, fu: int) -> VEntry:
        vt = state.vtype
        W = self.W
        sew, vl = vt.sew, vt.vl
        self.seq += 1
        k = inst.kind
        if k in (Kind.VLOAD, Kind.VSTORE):
            eb = inst.eew // 8
        else:
            eb = sew // 8
        n = -(-vl * eb // W)
        if k is Kind.VMOVE and inst.variant == "xs":
            n = 1
        elif k is Kind.VMOVE and inst.variant == "sx":
            n = 1 if vl else 0
        e = VEntry(self.seq, inst, fu, n)
        e.eb = eb
        e.epb = W // eb
        e.vl = vl
        if k is Kind.VMOVE and inst.variant in ("xs", "sx"):
            e.elems = 0 if inst.variant == "xs" else n
        else:
            e.elems = vl
        if fu == VAU:
            op = inst.op
            e.op_class = "macc" if op == "vmacc" else "mul" if op == "vmul" else "move" if op == "vmv" else "alu"
            srcs = []
            if inst.variant == "xs":
                srcs = [inst.vs2 * 4]
                e.scalar_rd = inst.rd
            elif inst.variant == "vv":
                srcs = [inst.vs1 * 4] if op == "vmv" else [inst.vs1 * 4, inst.vs2 * 4]
            elif inst.variant in ("vx", "vi") and op != "vmv":
                srcs = [inst.vs2 * 4]
            if op == "vmacc":
                srcs.append(inst.vd * 4)
            e.srcs = srcs
            e.reads = [[s + b for s in srcs] for b in range(n)]
            if inst.variant != "xs":
                e.d0 = inst.vd * 4
        elif fu == VSLDU:
            off = state.x[inst.rs1] if inst.variant == "vx" else inst.imm
            ob = off * eb
            e.srcs = [inst.vs2 * 4]
            e.d0 = inst.vd * 4
            prev = -1
            for b in range(n):
                # source beats [lo, h] hold the bytes that land in output beat b
                if inst.op == "vslidedown":
                    lo = (b * W + ob) // W
                    h = min(n - 1, ((b + 1) * W - 1 + ob) // W)
                else:
                    lo = max(0, b * W - ob) // W
                    h = min(n - 1, ((b + 1) * W - 1 - ob) // W) if ob < (b + 1) * W else -1
                e.hi.append(h)
                e.reads.append([e.srcs[0] + r for r in range(max(prev + 1, lo), h + 1)])
                prev = max(prev, h)
        else:
            addrs = vector_addresses(inst, state)
            words: list[list[int]] = [[] for _ in range(n)]
            for i, a in enumerate(addrs):
                w = a & ~3
                lst = words[(i * eb) // W]
                if not lst or lst[-1] != w:
                    lst.append(w)
            e.words = words
            e.beat_ready = [0] * n
            if k is Kind.VLOAD:
                e.is_load = True
                e.d0 = inst.vd * 4
            else:
                e.is_store = True
                e.srcs = [inst.vs3 * 4]
                e.reads = [[inst.vs3 * 4 + b] for b in range(n)]
        return e

    def _link(self, e: VEntry) -> None:
        """Derive per-beat thresholds on older in-flight instructions."""
        n = e.n
        for p in self.inflight:
            # RAW: sources produced by an older instruction
            if p.d0 is not None and e.srcs:
                pd0, pn = p.d0, p.n
                if e.fu == VSLDU:
                    s0 = e.srcs[0]
                    for b in range(n):
                        lo, top = max(s0, pd0), min(s0 + e.hi[b], pd0 + pn - 1)
                        if lo <= top:
                            e.req_c[b].append((p, pn if not self.chaining else top - pd0 + 1))
                else:
                    for s in e.srcs:
                        if s + n <= pd0 or s >= pd0 + pn:
                            continue
                        for b in range(n):
                            g = s + b
                            if pd0 <= g < pd0 + pn:
                                e.req_c[b].append((p, pn if not self.chaining else g - pd0 + 1))
                if not self.chaining:
                    # without chaining the whole instruction waits for the producer
                    full = [(q, v) for lst in e.req_c for (q, v) in lst if q is p]
                    if full and n:
                        e.req_c[0].append((p, p.n))
            if e.d0 is None:
                continue
            # WAW: keep write order on overlapping destinations
            if p.d0 is not None and not (e.d0 + n <= p.d0 or e.d0 >= p.d0 + p.n):
                for b in range(n):
                    g = e.d0 + b
                    if p.d0 <= g < p.d0 + p.n:
                        e.req_c[b].append((p, g - p.d0 + 1))
            # WAR: do not overwrite a beat an older instruction has yet to read
            if p.srcs:
                for b in range(n):
                    k = p.last_reader_beat(e.d0 + b)
                    if k is not None:
                        e.req_i[b].append((p, k + 1))

    @staticmethod
    def _ready(e: VEntry, b: int) -> bool:
        for p, v in e.req_c[b]:
            if p.committed < v:
                return False
        for p, v in e.req_i[b]:
            if p.issued < v:
                return False
        return True

    def _assert_no_hazard(self, e: VEntry, beats) -> None:
        # independent re-check: every older writer of a read beat has committed it
        for g in beats:
            for p in self.inflight:
                if p.seq >= e.seq:
                    break
                if p.writes(g) and p.committed < g - p.d0 + 1:
                    raise AssertionError(f"{e} read beat {g} before {p} committed it")

    # ------------------------------------------------------------------
    def tick(self, t: int) -> None:
        if not self.inflight:
            self.vau_state = self.vlsu_state = "empty"
            return
        ports = self.ports
        ports.new_cycle(t)
        self._vau(t)
        self._vlsu(t)
        self._vsldu(t)
        self._end_cycle(t)

    def _touch(self, e: VEntry) -> None:
        if e.ip == e.issued and e.cp == e.committed:
            self.touched.append(e)

    def _vau(self, t: int) -> None:
        q = self.queues[VAU]
        e = None
        for cand in q:
            if cand.ip < cand.n:
                e = cand
                break
        if e is None:
            self.vau_state = "drain" if q else "empty"
            return
        b = e.ip
        if not self._ready(e, b):
            self.vau_state = "chaining"
            return
        reads = e.reads[b]
        banks = [BANK[g] for g in reads]
        at = t + self.lat
        wbank = BANK[e.d0 + b] if e.d0 is not None else None
        if not self.ports.can_read(banks) or (wbank is not None and not self.ports.can_write(wbank, at)):
            self.vau_state = "vrf_port"
            return
        if self.check_hazards:
            self._assert_no_hazard(e, reads)
        self.ports.do_read(banks)
        if wbank is not None:
            self.ports.do_write(wbank, at)
            self.vau_wb[(at, wbank)] = e
        self._touch(e)
        e.ip += 1
        self.pending_commit[at].append(e)
        c = self.c
        N = self.N
        c.vau_busy_beats += 1
        c.vrf_reads += N * len(reads)
        elems = min(e.epb, e.elems - b * e.epb) if e.elems else 0
        if elems > 0:
            oc = e.op_class
            if oc == "macc":
                c.vau_macc_elems += elems
                c.elementary_ops += 2 * elems
            elif oc == "mul":
                c.vau_mul_elems += elems
                c.elementary_ops += elems
            elif oc == "alu":
                c.vau_alu_elems += elems
                c.elementary_ops += elems
            else:
                c.vau_move_elems += elems
        self.vau_state = "busy"
        self.progress += 1
        if self.trace:
            self.trace(t, self.core, "beat", f"VAU #{e.seq} {e.inst.mnemonic} beat {b}")

    def _vlsu(self, t: int) -> None:
        q = self.queues[VLSU]
        if not q:
            self.vlsu_state = "empty"
            return
        ports = self.ports
        state = "wait"
        # commit one ROB beat, in order, from the oldest load with data pending
        for e in q:
            if e.is_load and e.cp < e.n:
                b = e.cp
                if b < e.req_beat and e.beat_ready[b] <= t:
                    bank = BANK[e.d0 + b]
                    if not self._ready(e, b):
                        state = "chaining"
                    elif not ports.can_write(bank, t) and not self._yield_write(e, bank, t):
                        state = "vrf_port"
                    else:
                        ports.do_write(bank, t)
                        self._touch(e)
                        e.cp += 1
                        self.rob_used -= 1
                        self.c.vrf_writes += self.N
                        self.c.vlsu_beats += 1
                        self.progress += 1
                        state = "busy"
                        if self.trace:
                            self.trace(t, self.core, "commit", f"VLSU #{e.seq} beat {b}")
                break
        # issue up to N word requests from the oldest instruction with requests left
        budget = self.N
        for e in q:
            if e.req_beat >= e.n:
                continue
            while budget and e.req_beat < e.n:
                b = e.req_beat
                words = e.words[b]
                if e.req_word == 0:
                    if e.is_load:
                        if self.rob_used >= self.rob_cap:
                            break
                        self.rob_used += 1
                    else:
                        reads = e.reads[b]
                        banks = [BANK[g] for g in reads]
                        if not self._ready(e, b):
                            state = "chaining" if state == "wait" else state
                            break
                        if not ports.can_read(banks):
                            state = "vrf_port" if state == "wait" else state
                            break
                        if self.check_hazards:
                            self._assert_no_hazard(e, reads)
                        ports.do_read(banks)
                        self._touch(e)
                        e.ip += 1
                        self.c.vrf_reads += self.N
                        self.c.vlsu_beats += 1
                while budget and e.req_word < len(words):
                    r = self.l1.route(self.core, words[e.req_word], t, e.is_store)
                    self.c.vlsu_requests += 1
                    budget -= 1
                    if e.is_store:
                        if r > e.last_ack:
                            e.last_ack = r
                    elif r > e.beat_ready[b]:
                        e.beat_ready[b] = r
                    e.req_word += 1
                    self.progress += 1
                    state = "busy"
                if e.req_word >= len(words):
                    e.req_beat += 1
                    e.req_word = 0
                else:
                    break
            break
        self.vlsu_state = state

    def _yield_write(self, e: VEntry, bank: int, t: int) -> bool:
        """Move a younger VAU write-back off ``bank`` so the older load ``e`` can commit.

        The VAU result waits one cycle in its write-back register; the VAU
        keeps issuing.  Without this a chained consumer could delay its own
        producer's commits and run slower than with chaining off.
        """
        v = self.vau_wb.get((t, bank))
        if v is None or v.seq < e.seq or not self.ports.can_write(bank, t + 1):
            return False
        self.ports.release_write(bank, t)
        self.ports.do_write(bank, t + 1)
        del self.vau_wb[(t, bank)]
        self.vau_wb[(t + 1, bank)] = v
        self.pending_commit[t].remove(v)
        self.pending_commit[t + 1].append(v)
        return True

    def _vsldu(self, t: int) -> None:
        q = self.queues[VSLDU]
        wb = self.sldu_wb
        ports = self.ports
        # drain the write-back buffer (lowest write priority)
        if wb:
            e, b = wb[0]
            wbank = BANK[e.d0 + b]
            if ports.can_write(wbank, t):
                ports.do_write(wbank, t)
                wb.pop(0)
                self._touch(e)
                e.cp += 1
                self.c.vrf_writes += self.N
        e = None
        for cand in q:
            if cand.ip < cand.n:
                e = cand
                break
        if e is None:
            return
        if e.start_at is None:
            e.start_at = t + self.swap
        if t < e.start_at or len(wb) >= SLDU_WB_DEPTH:
            return
        b = e.ip
        if not self._ready(e, b):
            return
        reads = e.reads[b]
        banks = [BANK[g] for g in reads]
        if not ports.can_read(banks):
            return
        if self.check_hazards:
            self._assert_no_hazard(e, [e.srcs[0] + r for r in range(e.hi[b] + 1)])
        ports.do_read(banks)
        self._touch(e)
        e.ip += 1
        wb.append((e, b))
        self.c.vrf_reads += self.N * len(reads)
        self.c.vsldu_beats += 1
        self.progress += 1
        if self.trace:
            self.trace(t, self.core, "beat", f"VSLDU #{e.seq} beat {b}")

    def _end_cycle(self, t: int) -> None:
        for b in range(N_BANKS):
            self.vau_wb.pop((t, b), None)
        for e in self.pending_commit.pop(t, ()):
            self._touch(e)
            e.cp += 1
            self.c.vrf_writes += self.N if e.d0 is not None else 0
            if e.scalar_rd is not None and self.scalar_writeback:
                self.scalar_writeback(e.scalar_rd, t + 1)
        for e in self.touched:
            e.issued = e.ip
            e.committed = e.cp
        self.touched.clear()
        # retire finished instructions
        finished = None
        for e in self.inflight:
            if e.is_store:
                if e.req_beat >= e.n and t >= e.last_ack:
                    finished = finished or []
                    finished.append(e)
            elif e.committed >= e.n:
                finished = finished or []
                finished.append(e)
        if finished:
            for e in finished:
                self.inflight.remove(e)
                self.queues[e.fu].remove(e)
                if e.fu == VLSU:
                    self.vmem_inflight -= 1
                if self.trace:
                    self.trace(t, self.core, "retire", f"{FU_NAMES[e.fu]} #{e.seq} {e.inst.mnemonic}")
