import pytest

from spatzsim.errors import AsmError
from spatzsim.isa import assemble, decode, format_inst
from spatzsim.isa.asm import TEXT_BASE


def test_labels_and_branch_offsets():
    prog = assemble("""
    top: addi a0, a0, 1
         bne a0, a1, top
         j done
         nop
    done: ecall
    """)
    assert prog.symbols["top"] == TEXT_BASE
    assert decode(prog.words[1]).imm == -4
    assert decode(prog.words[2]).imm == 8


def test_li_sizes():
    prog = assemble("li a0, 5\nli a1, 0x12345678\nli a2, later\n.equ later, 4")
    assert len(prog.words) == 1 + 2 + 2
    prog = assemble(".equ small, 4\nli a2, small")
    assert len(prog.words) == 1


def test_li_large_values_roundtrip():
    from spatzsim.isa import Memory, run_functional
    for val in (0x12345678, 0xFFFFF800, 0x7FFFFFFF, -2049, 2048, 0x80000000):
        prog = assemble(f"li a0, {val}\necall")
        (s,) = run_functional(prog, Memory(16))
        assert s.x[10] == val & 0xFFFFFFFF


def test_data_directives():
    prog = assemble("""
        .data 0x40
    a:  .word 1, -1
    b:  .half 0x1234
        .byte 7
        .align 2
    c:  .space 4
        .text
        la t0, c
        ecall
    """)
    assert prog.symbols == {"a": 0x40, "b": 0x48, "c": 0x4C}
    assert prog.data == [(0x40, bytes([1, 0, 0, 0, 255, 255, 255, 255, 0x34, 0x12, 7])), (0x4C, bytes(4))]


@pytest.mark.parametrize("line", [
    "vadd.vv v1, v2",
    "frobnicate a0",
    "addi a0, a0, 5000",
    "lw a0, a1",
    "vsetvli t0, a0, e64, m1",
    "bne a0, a1, nowhere",
])
def test_errors_carry_line_number(line):
    with pytest.raises(AsmError, match="line 2"):
        assemble("nop\n" + line)


def test_format_roundtrip_through_text():
    src = """
        vsetvli t0, a0, e32, m4, ta, ma
        vle32.v v4, (a1)
        vlse16.v v8, (a1), t2
        vmacc.vx v8, a3, v4
        vmacc.vv v8, v12, v4
        vsub.vx v1, v2, a4
        vslidedown.vi v3, v2, 3
        vmv.v.i v5, -2
        vmv.x.s a0, v3
        vse8.v v4, (a2)
        sw a0, -8(sp)
        p.mac a0, a1, a2
        csrr a0, vlenb
    """
    prog = assemble(src)
    text = "\n".join(format_inst(decode(w)) for w in prog.words)
    assert assemble(text).words == prog.words
