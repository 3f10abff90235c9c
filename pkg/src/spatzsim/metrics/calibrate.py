"""Back-solve the default energy table from reference energy measurements.

Run as ``python3 -m spatzsim.metrics.calibrate``.  The procedure:

1. Simulate instruction microbenchmarks (long streams of one instruction
   kind on every core) on the three four-MACU tiles, at two stream lengths.
   The difference of the two runs' event counts divided by the difference
   in processed elements is the marginal event mix of one element.
2. Take the event rates (events per cycle) of the matmul_256 runs on the
   three full-system configurations.  These runs are slow, so their
   counters are cached in ``data/calibration_counters.json``; pass
   ``--rerun-system`` to regenerate them.
3. Every reference number is a linear function of the table entries.  The
   tile totals are hard constraints (within ``TILE_BAND``).  Two linear
   programs (``scipy.optimize.linprog``) then fix the rest: the first finds
   the smallest worst-case relative error of the system energy per
   operation, the second keeps that bound and minimises the summed absolute
   error (pJ) of every per-component split.  Absolute errors keep small
   components from dominating the fit.
4. Write ``data/energy_table.yaml`` with the residual of every target.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from ..config import load_config
from ..isa.asm import assemble
from ..kernels import KernelSpec, generate
from ..uarch import simulate
from .counters import PerfCounters
from .energy import DEFAULT_TABLE, EVENT_COMPONENT, EnergyTable, event_counts

DATA = DEFAULT_TABLE.parent
COUNTERS_CACHE = DATA / "calibration_counters.json"
EVENTS = list(EVENT_COMPONENT)
INSTRS = ("macc", "mul", "add", "load")

# pJ per element, instruction stream on the Spatz4 tile, by component
TILE_SPATZ4 = {
    "macc": {"snitch": 0.10, "vrf": 2.89, "vau": 2.77, "vlsu": 0.05, "interconnect": 0.92, "sram": 1.103},
    "mul": {"snitch": 0.10, "vrf": 2.16, "vau": 2.53, "vlsu": 0.05, "interconnect": 0.93, "sram": 1.103},
    "add": {"snitch": 0.10, "vrf": 2.21, "vau": 2.59, "vlsu": 0.05, "interconnect": 0.91, "sram": 1.103},
    "load": {"snitch": 0.12, "vrf": 1.23, "vau": 0.19, "vlsu": 0.68, "interconnect": 1.84, "sram": 2.06},
}
# pJ per element totals per tile
TILE_TOTALS = {
    "tile_spatz4": {"macc": 7.9, "mul": 6.9, "add": 7.0, "load": 6.1},
    "tile_spatz2": {"macc": 7.8, "mul": 6.8, "add": 6.9, "load": 6.6},
    "tile_snitch": {"macc": 13.1, "mul": 12.9, "add": 8.0, "load": 7.9},
}
# watts per category for matmul_256, and the reported totals
SYSTEM_POWER = {
    "mempool256": {"snitch": 0.177, "regfile": 0.198, "macu": 0.127, "icache": 0.081,
                   "interconnect": 0.514, "spm": 0.197},
    "mempoolspatz128_2": {"snitch": 0.092, "regfile": 0.343, "macu": 0.113, "icache": 0.087,
                          "interconnect": 0.423, "spm": 0.159},
    "mempoolspatz64_4": {"snitch": 0.044, "regfile": 0.367, "macu": 0.106, "icache": 0.056,
                         "interconnect": 0.338, "spm": 0.159},
}
SYSTEM_TOTAL_W = {"mempool256": 1.30, "mempoolspatz128_2": 1.15, "mempoolspatz64_4": 1.07}
# Gop/s per watt for matmul_256; the per-category power is rescaled to energy per op
SYSTEM_EFFICIENCY = {"mempool256": 128.0, "mempoolspatz128_2": 234.0, "mempoolspatz64_4": 266.0}

# reference category -> model components
TILE_CATEGORY = {"snitch": ("snitch", "srf"), "vrf": ("vrf",), "vau": ("macu",), "vlsu": ("vlsu",),
                 "interconnect": ("interconnect",), "sram": ("spm", "icache")}
SYSTEM_CATEGORY = {"snitch": ("snitch",), "regfile": ("srf", "vrf"), "macu": ("macu",), "icache": ("icache",),
                   "interconnect": ("interconnect", "vlsu"), "spm": ("spm",)}

TILE_BAND = 0.01
# slack on the stage-one optimum when it becomes a constraint
SYSTEM_SLACK = 1e-3
VL = 32
SHORT, LONG = 32, 96


def stream_source(instr: str, vector: bool, vlen: int, count: int) -> str:
    """Straight-line stream of ``count`` instructions of one kind per core."""
    lines = ["csrr s0, mhartid", "slli s1, s0, 2"]
    if vector:
        lmul = max(1, VL * 32 // vlen)
        lines += [f"li t0, {VL}", f"vsetvli zero, t0, e32, m{lmul}, ta, ma", "slli s1, s0, 7"]
        dests = [f"v{i * lmul}" for i in range(4)]
        a, b = f"v{4 * lmul}", f"v{5 * lmul}" if 5 * lmul < 32 else f"v{4 * lmul}"
        for i in range(count):
            d = dests[i % 4]
            lines.append({"macc": f"vmacc.vv {d}, {a}, {b}", "mul": f"vmul.vv {d}, {a}, {b}",
                          "add": f"vadd.vv {d}, {a}, {b}", "load": f"vle32.v {d}, (s1)"}[instr])
    else:
        dests = ["a0", "a3", "a4", "a5"]
        for i in range(count):
            d = dests[i % 4]
            lines.append({"macc": f"p.mac {d}, a1, a2", "mul": f"mul {d}, a1, a2", "add": f"add {d}, a1, a2",
                          "load": f"lw {d}, {16 * (i % 64)}(s1)"}[instr])
    lines.append("ecall")
    return "\n".join(lines) + "\n"


def _events(counters: PerfCounters, cfg) -> np.ndarray:
    ev = event_counts(counters, cfg)
    return np.array([ev[k] for k in EVENTS], dtype=float)


def marginal_events(cfg_name: str, instr: str) -> np.ndarray:
    """Event counts per processed element for one instruction kind."""
    cfg = load_config(cfg_name)
    per_inst = VL if cfg.is_vector else 1
    runs = []
    for count in (SHORT, LONG):
        prog = assemble(stream_source(instr, cfg.is_vector, cfg.vlen_bits, count))
        runs.append(_events(simulate(cfg, prog).counters, cfg))
    elems = (LONG - SHORT) * per_inst * cfg.n_cores
    return (runs[1] - runs[0]) / elems


def system_counters(rerun: bool = False) -> dict:
    """Counters of matmul_256 on each full-system configuration (cached)."""
    if COUNTERS_CACHE.exists() and not rerun:
        return json.loads(COUNTERS_CACHE.read_text())
    out = {}
    for name in SYSTEM_POWER:
        cfg = load_config(name)
        g = generate(KernelSpec("matmul", 256), cfg)
        res = simulate(cfg, g.program, g.image)
        if not g.check(res.mem):
            raise RuntimeError(f"matmul_256 on {name} produced a wrong result")
        d = res.counters.to_dict()
        d.pop("stall_cycles")
        out[name] = d
    COUNTERS_CACHE.write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
    return out


def _mask(components) -> np.ndarray:
    return np.array([EVENT_COMPONENT[k] in components for k in EVENTS], dtype=float)


def build_system(rerun: bool = False):
    """Rows ``(vector, target, kind, label)`` of the calibration problem.

    ``kind`` is "tile" (hard total), "system" (energy per op) or "split".
    """
    rows = []
    for tile, totals in TILE_TOTALS.items():
        for instr in INSTRS:
            m = marginal_events(tile, instr)
            rows.append((m, totals[instr], "tile", f"{tile}/{instr}/total"))
            if tile == "tile_spatz4":
                for cat, comps in TILE_CATEGORY.items():
                    rows.append((m * _mask(comps), TILE_SPATZ4[instr][cat], "split", f"{tile}/{instr}/{cat}"))
    ops = KernelSpec("matmul", 256).ops
    for name, cnt in system_counters(rerun).items():
        cfg = load_config(name)
        pc = PerfCounters(**{k: v for k, v in cnt.items() if k in PerfCounters.__dataclass_fields__})
        per_op = _events(pc, cfg) / ops
        pj_per_op = 1e3 / SYSTEM_EFFICIENCY[name]
        rows.append((per_op, pj_per_op, "system", f"{name}/total"))
        for cat, comps in SYSTEM_CATEGORY.items():
            share = SYSTEM_POWER[name][cat] / SYSTEM_TOTAL_W[name]
            rows.append((per_op * _mask(comps), share * pj_per_op, "split", f"{name}/{cat}"))
    return rows


def _banded(rows, band, k):
    """Inequalities keeping every row within ``band`` of its target."""
    a, b = [], []
    for vec, t, _, _ in rows:
        a += [np.concatenate([vec, np.zeros(k)]), np.concatenate([-vec, np.zeros(k)])]
        b += [t * (1 + band), -t * (1 - band)]
    return a, b


def _lp(c, a_ub, b_ub, n_vars):
    res = linprog(c, A_ub=np.array(a_ub), b_ub=np.array(b_ub), bounds=[(0, None)] * n_vars, method="highs")
    if not res.success:
        raise RuntimeError(f"calibration infeasible: {res.message}")
    return res.x


def solve(rerun: bool = False) -> tuple[EnergyTable, list]:
    rows = build_system(rerun)
    n = len(EVENTS)
    tiles = [r for r in rows if r[2] == "tile"]
    system = [r for r in rows if r[2] == "system"]
    splits = [r for r in rows if r[2] == "split"]

    # stage one: variables x and one shared bound e on |relative system error|
    a_ub, b_ub = _banded(tiles, TILE_BAND, 1)
    for vec, t, _, _ in system:
        a_ub += [np.concatenate([vec, [-t]]), np.concatenate([-vec, [-t]])]
        b_ub += [t, -t]
    worst = _lp(np.concatenate([np.zeros(n), [1.0]]), a_ub, b_ub, n + 1)[-1]
    system_band = worst + SYSTEM_SLACK

    # stage two: variables x and one absolute-error slack per split
    k = len(splits)
    a_ub, b_ub = _banded(tiles, TILE_BAND, k)
    a2, b2 = _banded(system, system_band, k)
    a_ub, b_ub = a_ub + a2, b_ub + b2
    for i, (vec, t, _, _) in enumerate(splits):
        slack = np.zeros(k)
        slack[i] = -1.0
        a_ub += [np.concatenate([vec, slack]), np.concatenate([-vec, slack])]
        b_ub += [t, -t]
    x = _lp(np.concatenate([np.zeros(n), np.ones(k)]), a_ub, b_ub, n + k)[:n]

    residuals = [(lab, float(t), float(vec @ x), float((vec @ x - t) / t)) for vec, t, _, lab in rows]
    table = EnergyTable({k: round(float(v), 6) for k, v in zip(EVENTS, x)},
                        provenance={"method": "two-stage linear program: minimax system energy per op, "
                                              "then summed absolute split errors",
                                    "tile_total_band": TILE_BAND,
                                    "system_band": round(float(system_band), 4),
                                    "microbenchmark": {"vl": VL, "sew": 32, "short": SHORT, "long": LONG},
                                    "residuals": {lab: round(r, 4) for lab, _, _, r in residuals}})
    return table, residuals


HEADER = """\
# Default energy table (pJ per event) produced by
#   python3 -m spatzsim.metrics.calibrate
# Targets: per-element energies of vmacc/vmul/vadd/vle streams on the
# Spatz4, Spatz2 and Snitch tiles (hard, within 1%), the Spatz4 per-component
# split, and the energy per operation of matmul_256 on the three full-system
# configurations with its per-component split.  Residuals of every target
# are listed under provenance.
"""


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rerun-system", action="store_true", help="re-simulate the matmul_256 runs")
    ap.add_argument("--out", default=str(DEFAULT_TABLE))
    args = ap.parse_args(argv)
    table, residuals = solve(args.rerun_system)
    table.dump(Path(args.out), HEADER)
    for lab, t, f, r in residuals:
        print(f"{lab:40s} target {t:8.3f}  fit {f:8.3f}  {100 * r:+6.1f}%")


if __name__ == "__main__":
    main()
