"""Vector register file geometry and per-cycle port bookkeeping.

Every register is one row across the four banks; a beat is one 32N-bit
port-width slice, i.e. exactly one bank slice.  Beat ``b`` of register
``r`` lives in bank ``(r + b) % 4`` so that consecutive beats rotate over
the banks and the three sources of a ``vmacc`` rarely collide.
"""

from __future__ import annotations

from dataclasses import dataclass

N_BANKS = 4
READ_PORTS = 3
WRITE_PORTS = 1


class PortConflict(AssertionError):
    """A bank was asked to serve more than 3 reads or 1 write in one cycle."""


@dataclass(frozen=True)
class VrfGeometry:
    vlen: int
    n_macus: int
    n_regs: int = 32

    @property
    def bank_width_bits(self) -> int:
        return self.vlen // N_BANKS

    @property
    def port_width_bits(self) -> int:
        return 32 * self.n_macus

    @property
    def beats_per_reg(self) -> int:
        return self.vlen // self.port_width_bits

    @property
    def beat_bytes(self) -> int:
        return self.port_width_bits // 8


def map_vreg_slice(vreg: int, beat: int, geom: VrfGeometry) -> tuple[int, int, int]:
    """Physical (bank, row, bit offset inside the bank row) of one beat."""
    if not 0 <= vreg < geom.n_regs or not 0 <= beat < geom.beats_per_reg:
        raise ValueError(f"no beat {beat} of v{vreg} in {geom}")
    return (vreg + beat) % N_BANKS, vreg, 0


def bank_of_global_beat(g: int) -> int:
    """Bank of global beat index ``g = 4 * vreg + beat`` (one bank slice per beat)."""
    return ((g >> 2) + (g & 3)) & 3


class VrfPorts:
    """Read/write port usage of the current cycle plus future write reservations."""

    def __init__(self, horizon: int = 8):
        self.reads = [0, 0, 0, 0]
        self.horizon = horizon
        self.writes = [[False] * N_BANKS for _ in range(horizon)]
        self.cycle = 0
        self.read_words = 0
        self.write_beats = 0

    def new_cycle(self, cycle: int) -> None:
        # slots of cycles that have passed become the farthest future slots
        for c in range(self.cycle, min(cycle, self.cycle + self.horizon)):
            self.writes[c % self.horizon] = [False] * N_BANKS
        self.cycle = cycle
        self.reads = [0, 0, 0, 0]

    def can_read(self, banks) -> bool:
        r = list(self.reads)
        for b in banks:
            r[b] += 1
            if r[b] > READ_PORTS:
                return False
        return True

    def do_read(self, banks) -> None:
        for b in banks:
            self.reads[b] += 1
            if self.reads[b] > READ_PORTS:
                raise PortConflict(f"bank {b} read {self.reads[b]} times in cycle {self.cycle}")

    def can_write(self, bank: int, at: int) -> bool:
        return not self.writes[at % self.horizon][bank]

    def do_write(self, bank: int, at: int) -> None:
        slot = self.writes[at % self.horizon]
        if slot[bank]:
            raise PortConflict(f"bank {bank} written twice in cycle {at}")
        if at - self.cycle >= self.horizon:
            raise ValueError("write reserved beyond the reservation horizon")
        slot[bank] = True
        self.write_beats += 1

    def release_write(self, bank: int, at: int) -> None:
        slot = self.writes[at % self.horizon]
        if not slot[bank]:
            raise PortConflict(f"bank {bank} has no write reserved in cycle {at}")
        slot[bank] = False
        self.write_beats -= 1
