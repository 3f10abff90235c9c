"""Banked L1 scratchpad timing and the hierarchical latency model.

Addresses are word-interleaved across every bank of the cluster.  A request
issued at cycle ``t`` with zero-load latency ``L`` reaches its bank at
``t + (L - 1) // 2``, occupies the first free bank slot from then on, and
its response is visible ``L - (L - 1) // 2`` cycles after that slot.  Each
bank accepts one access per cycle; requests that find the slot taken wait
for the next free one, so requesters processed in rotating order share a
bank round-robin.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import ClusterConfig
from .errors import OutOfBoundsAccess

LOCAL, GROUP, REMOTE = 0, 1, 2
LEVEL_NAMES = ("local", "group", "remote")


@dataclass
class MemCounters:
    requests: list = field(default_factory=lambda: [0, 0, 0])  # by hierarchy level
    reads: int = 0
    writes: int = 0
    conflict_cycles: int = 0
    conflicted_requests: int = 0

    @property
    def total(self) -> int:
        return sum(self.requests)


class BankedL1:
    """Timing view of the shared L1; values live in :class:`isa.Memory`."""

    def __init__(self, cfg: ClusterConfig, jitter: int = 0, seed: int = 0):
        self.cfg = cfg
        self.n_banks = cfg.n_banks
        self.size = cfg.l1_total_bytes
        self.banks_per_tile = cfg.banks_per_tile
        self.tiles_per_group = cfg.tiles_per_group
        lat = cfg.latency
        self.lat = (lat.local_tile, lat.same_group, lat.remote_group)
        self.busy: list[set] = [set() for _ in range(self.n_banks)]
        self.counters = MemCounters()
        self.jitter = jitter
        self.rng = random.Random(seed)
        self.core_tile = [cfg.core_tile(c) for c in range(cfg.n_cores)]
        self._last_prune = 0

    # -- address map ----------------------------------------------------------
    def bank_of(self, addr: int) -> int:
        return (addr >> 2) & (self.n_banks - 1)

    def locate(self, addr: int) -> tuple[int, int]:
        """(bank, byte offset inside the bank) of an L1 byte address."""
        if not 0 <= addr < self.size:
            raise OutOfBoundsAccess(f"L1 address {addr:#x} outside {self.size} bytes")
        word = addr >> 2
        return word & (self.n_banks - 1), ((word // self.n_banks) << 2) | (addr & 3)

    def level(self, core: int, addr: int) -> int:
        tile = self.bank_of(addr) // self.banks_per_tile
        mine = self.core_tile[core]
        if tile == mine:
            return LOCAL
        if tile // self.tiles_per_group == mine // self.tiles_per_group:
            return GROUP
        return REMOTE

    def zero_load_latency(self, core: int, addr: int) -> int:
        return self.lat[self.level(core, addr)]

    # -- timing -------------------------------------------------------------
    def route(self, core: int, addr: int, cycle: int, write: bool = False) -> int:
        """Schedule one 32-bit access; returns the cycle its response is usable."""
        if not 0 <= addr < self.size:
            raise OutOfBoundsAccess(f"L1 address {addr:#x} outside {self.size} bytes")
        bank = (addr >> 2) & (self.n_banks - 1)
        tile = bank // self.banks_per_tile
        mine = self.core_tile[core]
        if tile == mine:
            lvl = LOCAL
        elif tile // self.tiles_per_group == mine // self.tiles_per_group:
            lvl = GROUP
        else:
            lvl = REMOTE
        lat = self.lat[lvl]
        pre = (lat - 1) >> 1
        arrive = cycle + pre
        busy = self.busy[bank]
        slot = arrive
        while slot in busy:
            slot += 1
        busy.add(slot)
        c = self.counters
        c.requests[lvl] += 1
        if write:
            c.writes += 1
        else:
            c.reads += 1
        if slot != arrive:
            c.conflict_cycles += slot - arrive
            c.conflicted_requests += 1
        done = slot + lat - pre
        if self.jitter:
            done += self.rng.randint(0, self.jitter)
        return done

    def prune(self, cycle: int) -> None:
        """Forget reservations older than ``cycle`` (bounded memory use)."""
        if cycle - self._last_prune < 256:
            return
        self._last_prune = cycle
        for i, b in enumerate(self.busy):
            if b:
                self.busy[i] = {s for s in b if s >= cycle}


class L0ICache:
    """Sliding 128-byte fetch window in front of an always-hitting L1 I$.

    Sequential fetch slides the window along (next-line prefetch); a jump
    to an address outside the window costs the refill penalty and moves the
    window to start at the target.
    """

    def __init__(self, window_bytes: int = 128, miss_penalty: int = 5):
        self.window = window_bytes
        self.penalty = miss_penalty
        self.start: Optional[int] = None
        self.last_pc: Optional[int] = None
        self.fetches = 0
        self.misses = 0

    def ifetch(self, pc: int) -> int:
        self.fetches += 1
        last, self.last_pc = self.last_pc, pc
        if self.start is not None and self.start <= pc < self.start + self.window:
            return 0
        if last is not None and pc == last + 4 and self.start is not None:
            self.start = pc + 4 - self.window
            return 0
        self.misses += 1
        self.start = pc
        return self.penalty


def load_image_file(path: str | Path, base: int = 0) -> list[tuple[int, bytes]]:
    """Read a flat binary (``.bin``) or hex-text memory image into segments.

    Hex text holds whitespace-separated 32-bit words; an ``@addr`` token
    starts a new segment at that (hex) byte address.
    """
    path = Path(path)
    if path.suffix == ".bin":
        return [(base, path.read_bytes())]
    segments: list[tuple[int, bytearray]] = []
    cur = bytearray()
    start = base
    for tok in path.read_text().split():
        if tok.startswith("@"):
            if cur:
                segments.append((start, cur))
            start, cur = int(tok[1:], 16), bytearray()
            continue
        cur += (int(tok, 16) & 0xFFFFFFFF).to_bytes(4, "little")
    if cur:
        segments.append((start, cur))
    return [(a, bytes(b)) for a, b in segments]


def address_map(cfg: ClusterConfig) -> dict:
    return {
        "l1_base": 0,
        "l1_bytes": cfg.l1_total_bytes,
        "interleave": "word",
        "banks": cfg.n_banks,
        "bank_bytes": cfg.bank_bytes,
        "text_base": 0x8000_0000,
    }
