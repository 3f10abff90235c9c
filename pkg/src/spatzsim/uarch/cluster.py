"""Cycle loop for a cluster of scalar cores or core complexes sharing one L1."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, TextIO

from ..config import ClusterConfig
from ..errors import SimulationHang
from ..isa.functional import ArchState, Memory
from ..memsys import BankedL1, L0ICache
from ..metrics.counters import PerfCounters
from .snitch import ProgramCache, Snitch
from .spatz import Spatz


class CoreComplex:
    """Snitch plus (optionally) its Spatz, with per-cycle stall attribution."""

    def __init__(self, core_id: int, cfg: ClusterConfig, cache: ProgramCache, mem: Memory, l1: BankedL1,
                 chaining: bool, check_hazards: bool, trace):
        self.c = PerfCounters()
        self.spatz = Spatz(core_id, cfg, l1, self.c, chaining, check_hazards, trace) if cfg.is_vector else None
        icache = L0ICache(cfg.l0_icache_bytes, cfg.icache_miss_penalty)
        self.snitch = Snitch(core_id, cfg, cache, mem, l1, icache, self.c, self.spatz, trace)
        self.attr: Counter = Counter()

    def tick(self, t: int) -> None:
        r = self.snitch.tick(t)
        sp = self.spatz
        if sp is not None:
            if sp.inflight:
                sp.tick(t)
                vs = sp.vau_state
                if vs == "busy":
                    r = "busy"
                elif vs in ("chaining", "vrf_port"):
                    r = vs
                elif r == "busy":
                    r = "issue"
                elif r in ("drain", "idle"):
                    r = "memory" if sp.vlsu_state == "wait" else "drain"
            elif r == "busy":
                r = "issue"
        self.attr[r] += 1

    def done(self, t: int) -> bool:
        return self.snitch.done(t)

    def progress(self) -> int:
        return self.snitch.issued + (self.spatz.progress if self.spatz else 0)

    def quiet_until(self) -> Optional[int]:
        """Cycle before which this core provably does nothing, or None."""
        if self.spatz is not None and self.spatz.inflight:
            return None
        if self.snitch.halted:
            return None
        return self.snitch.wake


@dataclass
class SimResult:
    cycles: int
    counters: PerfCounters
    per_core: list
    states: list
    mem: Memory
    l1: BankedL1
    extras: dict = field(default_factory=dict)


class Cluster:
    def __init__(self, cfg: ClusterConfig, program, image: Optional[list] = None, chaining: Optional[bool] = None,
                 trace: Optional[TextIO] = None, check_hazards: bool = False, jitter: int = 0, seed: int = 0,
                 active_cores: Optional[int] = None):
        self.cfg = cfg
        self.program = program
        self.mem = Memory(cfg.l1_total_bytes)
        for addr, blob in program.data:
            self.mem.load_image(addr, blob)
        for addr, blob in image or ():
            self.mem.load_image(addr, blob)
        self.l1 = BankedL1(cfg, jitter=jitter, seed=seed)
        self.cache = ProgramCache(program)
        self.trace_file = trace
        tr = self._trace if trace is not None else None
        chaining = cfg.chaining if chaining is None else chaining
        n = cfg.n_cores if active_cores is None else active_cores
        self.cores = [CoreComplex(i, cfg, self.cache, self.mem, self.l1, chaining, check_hazards, tr)
                      for i in range(n)]

    def _trace(self, t: int, core: int, event: str, detail: str) -> None:
        self.trace_file.write(f"{t} {core} {event} {detail}\n")

    def run(self, max_cycles: int = 50_000_000) -> SimResult:
        """Step all cores in lock-step until every core has halted and drained.

        Cores are visited in an order that rotates every cycle, which makes
        bank arbitration round-robin across requesters.
        """
        cores = self.cores
        n = len(cores)
        hang = self.cfg.hang_cycles
        l1 = self.l1
        live = list(cores)
        finished_at = {}
        t = 0
        last_progress, last_change = -1, 0
        while live:
            start = t % n
            for i in range(n):
                core = cores[(start + i) % n]
                if core in finished_at:
                    continue
                core.tick(t)
            t += 1
            still = []
            for c in live:
                if c.snitch.halted and c.done(t):
                    finished_at[c] = t
                else:
                    still.append(c)
            live = still
            if t & 255 == 0:
                prog = sum(c.progress() for c in cores)
                if prog != last_progress:
                    last_progress, last_change = prog, t
                elif t - last_change > hang:
                    raise SimulationHang(f"no progress for {hang} cycles at cycle {t}")
                l1.prune(t)
                if t > max_cycles:
                    raise SimulationHang(f"exceeded {max_cycles} cycles")
        for c, at in finished_at.items():
            c.attr["idle"] += t - at
        return self._result(t)

    def _result(self, t: int) -> SimResult:
        total = PerfCounters()
        for c in self.cores:
            total.merge(c.c)
        total.cycles = t
        mc = self.l1.counters
        total.sram_accesses = mc.total
        total.interconnect_local, total.interconnect_group, total.interconnect_remote = mc.requests
        total.bank_conflict_cycles = mc.conflict_cycles
        for c in self.cores:
            total.stall_cycles.update(c.attr)
        total.core_cycles = sum(sum(c.attr.values()) for c in self.cores)
        states = [c.snitch.state for c in self.cores]
        return SimResult(cycles=t, counters=total, per_core=[c.c for c in self.cores], states=states,
                         mem=self.mem, l1=self.l1)


def simulate(cfg: ClusterConfig, program, image=None, **kw) -> SimResult:
    return Cluster(cfg, program, image, **kw).run()
