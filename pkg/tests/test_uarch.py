import io
import re
from collections import defaultdict

import pytest
from hypothesis import given, settings, strategies as st

from spatzsim.config import load_config
from spatzsim.isa import Memory, VTypeState, assemble, decode, run_functional
from spatzsim.isa.randprog import random_program
from spatzsim.uarch import Cluster, VrfGeometry, issue_rate_bound, map_vreg_slice, simulate
from spatzsim.uarch.vrf import N_BANKS, PortConflict, VrfPorts


def brute_force_mapping(geom):
    seen = {}
    for r in range(geom.n_regs):
        for b in range(geom.beats_per_reg):
            seen[(r, b)] = map_vreg_slice(r, b, geom)
    return seen


@pytest.mark.parametrize("vlen,n", [(256, 2), (512, 4), (128, 1)])
def test_vrf_mapping_is_bijective(vlen, n):
    geom = VrfGeometry(vlen, n)
    m = brute_force_mapping(geom)
    assert len(set(m.values())) == len(m)
    # storage conservation: every register is fully mapped
    assert len(m) * geom.port_width_bits == 32 * vlen


def test_vrf_mapping_examples():
    g4 = VrfGeometry(512, 4)
    assert g4.beats_per_reg == 4
    assert [map_vreg_slice(0, b, g4)[:2] for b in range(4)] == [(0, 0), (1, 0), (2, 0), (3, 0)]
    g2 = VrfGeometry(256, 2)
    assert map_vreg_slice(5, 0, g2)[0] != map_vreg_slice(5, 1, g2)[0]


def test_three_source_beat_fits_read_ports():
    # vmacc reads vd, vs1 and vs2 at the same beat index; banks never exceed 3 reads
    g = VrfGeometry(512, 4)
    for regs in [(0, 1, 2), (0, 4, 8), (3, 3, 3)]:
        for b in range(g.beats_per_reg):
            banks = [map_vreg_slice(r, b, g)[0] for r in regs]
            assert max(banks.count(x) for x in range(N_BANKS)) <= 3


def test_map_rejects_out_of_range():
    with pytest.raises(ValueError):
        map_vreg_slice(0, 4, VrfGeometry(512, 4))


def test_port_conservation_asserts():
    p = VrfPorts()
    p.do_read([1, 1, 1])
    assert not p.can_read([1])
    with pytest.raises(PortConflict):
        p.do_read([1])
    p.do_write(2, 0)
    assert not p.can_write(2, 0)
    with pytest.raises(PortConflict):
        p.do_write(2, 0)
    p.new_cycle(1)
    assert p.can_read([1, 1, 1]) and p.can_write(2, 1)


def test_issue_rate_bound_examples():
    assert issue_rate_bound(2, 2) == pytest.approx(2 / 3)
    assert issue_rate_bound(3, 4) == 1.0
    assert issue_rate_bound(5, 0) == 0.0
    with pytest.raises(ValueError):
        issue_rate_bound(-1, 2)


@given(st.integers(0, 64), st.integers(0, 64), st.integers(0, 64))
def test_issue_rate_bound_properties(s, v, extra):
    r = issue_rate_bound(s, v)
    assert 0.0 <= r <= 1.0
    assert issue_rate_bound(s + extra, v) <= r
    assert issue_rate_bound(s, v + extra) >= r


def run_src(cfg_name, src, **kw):
    cfg = load_config(cfg_name)
    return simulate(cfg, assemble(src), **kw)


SETVL32 = "li t0, 32\nvsetvli zero, t0, e32, m1, ta, ma\n"


def test_single_vmacc_beats_spatz4():
    # a 128-bit beat holds four 32-bit elements, so vl=32 (LMUL 2) is 8 beats
    r = run_src("spatz4", SETVL32.replace("m1", "m2") + "vmacc.vv v2, v4, v6\necall\n")
    assert r.counters.vau_busy_beats == 8
    assert r.counters.vau_macc_elems == 32
    assert r.counters.elementary_ops == 64


def test_matmul8_row_takes_two_beats():
    r = run_src("spatz4", "li t0, 8\nvsetvli zero, t0, e32, m1, ta, ma\nvmacc.vx v1, a0, v2\necall\n")
    assert r.counters.vau_busy_beats == 2


def test_vmacc_stream_sustains_one_beat_per_cycle():
    body = "".join(f"vmacc.vv v{d}, v8, v9\n" for d in (0, 1, 2, 3) * 16)
    r = run_src("spatz4", SETVL32 + body + "ecall\n")
    beats = r.counters.vau_busy_beats
    assert beats == 64 * 4
    assert r.cycles < beats * 1.1 + 20


LOAD_ADD = SETVL32.replace("m1", "m4") + "li a0, 0\nvle32.v v0, (a0)\nvadd.vv v8, v0, v0\necall\n"


def test_chaining_is_faster_and_equal():
    cfg = load_config("spatz2")
    prog = assemble(LOAD_ADD.replace("li t0, 32", "li t0, 64"))
    image = [(0, bytes(range(256)))]
    on = Cluster(cfg, prog, image, chaining=True).run()
    off = Cluster(cfg, prog, image, chaining=False).run()
    assert on.states[0].snapshot() == off.states[0].snapshot()
    assert on.cycles < off.cycles


def test_scalar_load_waits_for_vector_load():
    r = run_src("spatz4", SETVL32.replace("m1", "m8") + "li a0, 0\nvle32.v v0, (a0)\nlw a1, 0(a0)\necall\n")
    assert r.counters.stall_cycles["mem_order"] > 0


def test_full_vau_queue_stalls_dispatch():
    cfg = load_config("spatz4")
    core = Cluster(cfg, assemble("ecall\n")).cores[0]
    sp, state = core.spatz, core.snitch.state
    state.vtype = VTypeState(sew=32, lmul=8, vl=128, vlen=cfg.vlen_bits)
    inst = decode(assemble("vmacc.vv v0, v16, v24\n").words[0])
    depth = cfg.fu_queue_depth
    assert [sp.try_dispatch(inst, state, 0) for _ in range(depth)] == [None] * depth
    assert sp.try_dispatch(inst, state, 0) == "fu_busy"


def test_vector_op_into_empty_machine_issues_immediately():
    r = run_src("spatz4", "vadd.vv v1, v2, v3\necall\n")
    assert r.counters.stall_cycles.get("fu_busy", 0) == 0
    assert r.counters.vector_dispatched == 1


def commit_orders(trace_text):
    orders = defaultdict(list)
    for line in trace_text.splitlines():
        m = re.match(r"\d+ (\d+) commit VLSU #(\d+) beat (\d+)", line)
        if m:
            orders[(m[1], m[2])].append(int(m[3]))
    return orders


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_rob_commits_in_order_under_jittered_latency(seed):
    src = SETVL32.replace("m1", "m8") + "li a0, 0\nvle32.v v0, (a0)\nli a1, 512\nvle32.v v8, (a1)\necall\n"
    f = io.StringIO()
    cfg = load_config("spatz4")
    res = Cluster(cfg, assemble(src), [(0, bytes(range(256)) * 8)], trace=f, jitter=6, seed=seed).run()
    orders = commit_orders(f.getvalue())
    assert len(orders) == 2
    for beats in orders.values():
        assert beats == list(range(len(beats)))
    # values are still those of memory
    assert res.states[0].vreg(0, 32, 4)[1] == int.from_bytes(bytes(range(4, 8)), "little")


def test_trace_is_deterministic():
    cfg = load_config("tile_spatz2")
    rp = random_program(11, vlen=cfg.vlen_bits)
    prog = assemble(rp.source)
    traces = []
    for _ in range(2):
        f = io.StringIO()
        Cluster(cfg, prog, rp.image, trace=f).run()
        traces.append(f.getvalue())
    assert traces[0] == traces[1] and traces[0]


def functional_final(cfg, prog, image):
    mem = Memory(cfg.l1_total_bytes)
    for a, b in prog.data:
        mem.load_image(a, b)
    for a, b in image:
        mem.load_image(a, b)
    states = run_functional(prog, mem, n_cores=1, vlen=cfg.vlen_bits)
    return states[0], mem


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["tile_spatz4", "spatz2"]))
def test_timing_matches_functional_model(seed, cfg_name):
    cfg = load_config(cfg_name)
    rp = random_program(seed, vlen=cfg.vlen_bits)
    prog = assemble(rp.source)
    ref, mem = functional_final(cfg, prog, rp.image)
    res = Cluster(cfg, prog, rp.image, check_hazards=True).run()
    assert res.states[0].snapshot() == ref.snapshot()
    assert bytes(res.mem.data) == bytes(mem.data)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_chaining_never_changes_values(seed):
    cfg = load_config("tile_spatz2")
    rp = random_program(seed, vlen=cfg.vlen_bits)
    prog = assemble(rp.source)
    on = Cluster(cfg, prog, rp.image, chaining=True).run()
    off = Cluster(cfg, prog, rp.image, chaining=False).run()
    for a, b in zip(on.states, off.states):
        assert a.snapshot() == b.snapshot()
    assert bytes(on.mem.data) == bytes(off.mem.data)


def test_chained_consumer_never_delays_its_load():
    # the vmacc chained on each vle32 would otherwise take the write port of
    # the load's last ROB commit, and the scalar lw behind the load would wait
    from spatzsim.kernels import KernelSpec, generate

    cycles = {}
    for chaining in (True, False):
        cfg = load_config("mempoolspatz64_4").replace(chaining=chaining)
        g = generate(KernelSpec("matmul", 16), cfg)
        res = simulate(cfg, g.program, g.image)
        assert g.check(res.mem)
        cycles[chaining] = res.cycles
    assert cycles[True] < cycles[False]


def test_chaining_cycles_on_random_programs():
    # Scheduling anomaly: with chaining an older VAU instruction starts a cycle
    # earlier, its write-backs line up with the banks of a younger strided
    # load, and the load loses one commit.  Age order is respected, so no
    # arbitration rule removes it; kernel runs are unaffected (see the
    # acceptance suite).  This pins the known counterexample.
    cfg = load_config("tile_spatz2")
    rp = random_program(140, vlen=cfg.vlen_bits)
    prog = assemble(rp.source)
    on = Cluster(cfg, prog, rp.image, chaining=True).run()
    off = Cluster(cfg, prog, rp.image, chaining=False).run()
    assert on.cycles == off.cycles + 1
    assert on.counters.stall_cycles["mem_order"] > off.counters.stall_cycles["mem_order"]


def test_throughput_bounds_hold_on_random_programs():
    cfg = load_config("tile_spatz4")
    for seed in range(20):
        rp = random_program(seed, vlen=cfg.vlen_bits)
        c = simulate(cfg, assemble(rp.source), rp.image).counters
        # at most one result beat and one memory beat per cycle per core
        assert c.vau_busy_beats <= c.cycles * cfg.n_cores
        assert c.vlsu_requests <= c.cycles * cfg.n_cores * cfg.macus_per_pe
        assert sum(c.stall_cycles.values()) == c.cycles * cfg.n_cores
