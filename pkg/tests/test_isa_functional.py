import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spatzsim.errors import IllegalRegisterGroup, MisalignedAccess, OutOfBoundsAccess
from spatzsim.isa import ArchState, DecodedInst, Kind, Memory, VTypeState, assemble, exec_functional, run_functional


def state_with(sew, vl, lmul=1, vlen=256):
    st_ = ArchState(vlen=vlen)
    st_.vtype = VTypeState(sew=sew, lmul=lmul, vl=vl, vlen=vlen)
    return st_


def test_vadd_example():
    s = state_with(32, 4)
    s.set_vreg(1, [1, 2, 3, 4])
    s.set_vreg(0, [10, 20, 30, 40])
    exec_functional(DecodedInst(Kind.VARITH, "vadd", "vv", vd=2, vs1=1, vs2=0), s, Memory(64))
    assert list(s.vreg(2, 32, 4)) == [11, 22, 33, 44]


def test_vmacc_sew8_wraps():
    s = state_with(8, 2)
    s.set_vreg(1, [10, 3], sew=8)
    s.set_vreg(2, [1, 2], sew=8)
    s.set_vreg(4, [250, 0], sew=8)
    exec_functional(DecodedInst(Kind.VARITH, "vmacc", "vv", vd=4, vs1=1, vs2=2), s, Memory(64))
    assert list(s.vreg(4, 8, 2)) == [4, 6]


def test_vslidedown_zero_fills_past_vl():
    s = state_with(32, 4)
    s.set_vreg(1, [5, 6, 7, 8, 99, 99])
    exec_functional(DecodedInst(Kind.VSLIDE, "vslidedown", "vi", vd=2, vs2=1, imm=1), s, Memory(64))
    assert list(s.vreg(2, 32, 4)) == [6, 7, 8, 0]


def test_vslideup_leaves_low_elements():
    s = state_with(32, 4)
    s.set_vreg(1, [5, 6, 7, 8])
    s.set_vreg(2, [1, 1, 1, 1, 42])
    exec_functional(DecodedInst(Kind.VSLIDE, "vslideup", "vi", vd=2, vs2=1, imm=2), s, Memory(64))
    assert list(s.vreg(2, 32, 5)) == [1, 1, 5, 6, 42]


def test_tail_undisturbed():
    s = state_with(32, 2)
    s.set_vreg(3, [7] * 8)
    exec_functional(DecodedInst(Kind.VMOVE, "vmv", "vi", vd=3, imm=-1), s, Memory(64))
    assert list(s.vreg(3, 32, 4)) == [0xFFFFFFFF, 0xFFFFFFFF, 7, 7]


def test_x0_hardwired():
    s = ArchState()
    exec_functional(DecodedInst(Kind.SARITH, "addi", rd=0, rs1=0, imm=5), s, Memory(16))
    assert s.x[0] == 0


def test_memory_errors():
    s = ArchState()
    mem = Memory(64)
    s.x[5] = 6
    with pytest.raises(MisalignedAccess):
        exec_functional(DecodedInst(Kind.SLOAD, "lw", rd=1, rs1=5, imm=0), s, mem)
    s.x[5] = 64
    with pytest.raises(OutOfBoundsAccess):
        exec_functional(DecodedInst(Kind.SLOAD, "lw", rd=1, rs1=5, imm=0), s, mem)


def test_misaligned_group_at_execute():
    s = state_with(32, 4, lmul=2)
    with pytest.raises(IllegalRegisterGroup):
        exec_functional(DecodedInst(Kind.VARITH, "vadd", "vv", vd=1, vs1=2, vs2=4), s, Memory(16))


def _ref(op, a, b, d, sew):
    m = (1 << sew) - 1
    sx = lambda v: v - (1 << sew) if v >> (sew - 1) else v
    sh = b & (sew - 1)
    return {
        "vadd": a + b, "vsub": a - b, "vrsub": b - a, "vmul": a * b, "vmacc": d + a * b,
        "vand": a & b, "vor": a | b, "vxor": a ^ b,
        "vminu": min(a, b), "vmaxu": max(a, b),
        "vmin": min(sx(a), sx(b)), "vmax": max(sx(a), sx(b)),
        "vsll": a << sh, "vsrl": a >> sh, "vsra": sx(a) >> sh,
    }[op] & m


ARITH = ["vadd", "vsub", "vmul", "vmacc", "vand", "vor", "vxor", "vminu", "vmaxu", "vmin", "vmax",
         "vsll", "vsrl", "vsra"]


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(ARITH + ["vrsub"]), st.sampled_from([8, 16, 32]), st.sampled_from([1, 2, 4]),
       st.integers(0, 64), st.data())
def test_arith_matches_scalar_loop(op, sew, lmul, avl, data):
    vlen = 256
    vl = min(avl, vlen * lmul // sew)
    m = (1 << sew) - 1
    n = vlen * lmul // sew
    ints = st.lists(st.integers(0, m), min_size=n, max_size=n)
    a, b, d = data.draw(ints), data.draw(ints), data.draw(ints)
    scalar = data.draw(st.integers(0, 0xFFFFFFFF))
    variant = "vx" if op == "vrsub" else data.draw(st.sampled_from(["vv", "vx"]))
    s = state_with(sew, vl, lmul, vlen)
    vs1, vs2, vd = 0, {1: 2, 2: 2, 4: 8}[lmul], {1: 3, 2: 6, 4: 12}[lmul]
    s.set_vreg(vs2, a, sew)
    s.set_vreg(vs1, b, sew)
    s.set_vreg(vd, d, sew)
    s.x[7] = scalar
    if variant == "vv":
        inst = DecodedInst(Kind.VARITH, op, "vv", vd=vd, vs1=vs1, vs2=vs2)
        bb = b
    else:
        inst = DecodedInst(Kind.VARITH, op, "vx", vd=vd, rs1=7, vs2=vs2)
        bb = [scalar & m] * n
    exec_functional(inst, s, Memory(16))
    out = list(s.vreg(vd, sew, n))
    expect = [_ref(op, a[i], bb[i], d[i], sew) if i < vl else d[i] for i in range(n)]
    assert out == expect


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 255), min_size=32, max_size=32), st.lists(st.integers(0, 255), min_size=32, max_size=32))
def test_sew8_packing_independent(a, b):
    # each 8-bit lane behaves like an independent scalar computation
    s = state_with(8, 32)
    s.set_vreg(1, a, 8)
    s.set_vreg(2, b, 8)
    exec_functional(DecodedInst(Kind.VARITH, "vmul", "vv", vd=3, vs1=1, vs2=2), s, Memory(16))
    words = s.vreg(3, 32, 8)
    for w in range(8):
        lanes = [(int(words[w]) >> (8 * j)) & 0xFF for j in range(4)]
        assert lanes == [(a[4 * w + j] * b[4 * w + j]) & 0xFF for j in range(4)]


def test_program_with_vector_memory():
    src = """
        .data 0x100
    vec: .word 1, 2, 3, 4, 5, 6, 7, 8
        .text
        la a0, vec
        li a1, 8
        vsetvli t0, a1, e32, m2, ta, ma
        vle32.v v2, (a0)
        vadd.vv v4, v2, v2
        li t1, 8
        vsetvli t0, zero, e32, m1, ta, ma
        addi a2, a0, 32
        li a3, 4
        vsetvli t0, a3, e32, m1, ta, ma
        vlse32.v v6, (a0), t1
        vse32.v v6, (a2)
        csrr a4, vl
        csrr a5, vlenb
        ecall
    """
    prog = assemble(src)
    mem = Memory(1024)
    for addr, blob in prog.data:
        mem.load_image(addr, blob)
    (s,) = run_functional(prog, mem, vlen=128)
    assert list(s.vreg(4, 32, 8)) == [2, 4, 6, 8, 10, 12, 14, 16]
    assert list(mem.array(0x120, 4)) == [1, 3, 5, 7]
    assert s.x[14] == 4 and s.x[15] == 16


def test_scalar_program():
    src = """
        li a0, 10
        li a1, 0
    loop:
        add a1, a1, a0
        addi a0, a0, -1
        bnez a0, loop
        li t0, 7
        li t1, 6
        p.mac a1, t0, t1
        li t2, -8
        srai t3, t2, 1
        sb t2, 3(zero)
        lb t4, 3(zero)
        lbu t5, 3(zero)
        ecall
    """
    (s,) = run_functional(assemble(src), Memory(64))
    assert s.x[11] == 55 + 42
    assert s.x[28] == (-4) & 0xFFFFFFFF
    assert s.x[29] == (-8) & 0xFFFFFFFF and s.x[30] == 0xF8


def test_vmv_scalar_moves_and_hartid():
    src = """
        csrr a0, mhartid
        li a1, -3
        vsetvli t0, a1, e16, m1, ta, ma
        vmv.s.x v1, a1
        vmv.x.s a2, v1
        ecall
    """
    prog = assemble(src)
    states = run_functional(prog, Memory(16), n_cores=3)
    assert [s.x[10] for s in states] == [0, 1, 2]
    assert states[0].x[12] == (-3) & 0xFFFFFFFF
