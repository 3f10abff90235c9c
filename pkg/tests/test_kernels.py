import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spatzsim.config import load_config
from spatzsim.errors import UnsupportedShape
from spatzsim.isa import Memory, run_functional
from spatzsim.isa.functional import load_program_memory
from spatzsim.kernels import KernelSpec, arithmetic_intensity, generate, golden_conv2d, golden_matmul
from spatzsim.uarch import simulate


def triple_loop(a, b, sew):
    n = len(a)
    return np.array([[sum(int(a[i][k]) * int(b[k][j]) for k in range(n)) % (1 << sew) for j in range(n)]
                     for i in range(n)], dtype=np.uint64)


def four_loop(img, k):
    f = len(k)
    h = len(img) - f + 1
    out = np.zeros((h, h), dtype=np.uint64)
    for i in range(h):
        for j in range(h):
            out[i, j] = sum(int(k[r][c]) * int(img[i + r][j + c]) for r in range(f) for c in range(f)) % (1 << 32)
    return out


def run_functionally(g, cfg):
    mem = Memory(cfg.l1_total_bytes)
    load_program_memory(g.program, mem, g.image)
    run_functional(g.program, mem, n_cores=cfg.n_cores, vlen=cfg.vlen_bits if cfg.is_vector else 128)
    return mem


def test_golden_matmul_matches_triple_loop():
    rng = np.random.default_rng(42)
    for sew in (8, 16, 32):
        a = rng.integers(0, 1 << sew, (16, 16), dtype=np.uint64)
        b = rng.integers(0, 1 << sew, (16, 16), dtype=np.uint64)
        assert np.array_equal(golden_matmul(a, b, sew), triple_loop(a, b, sew))


def test_golden_conv2d_matches_four_loop():
    rng = np.random.default_rng(7)
    img = rng.integers(0, 1 << 32, (8, 8), dtype=np.uint64)
    k = rng.integers(0, 1 << 32, (3, 3), dtype=np.uint64)
    assert np.array_equal(golden_conv2d(img, k), four_loop(img, k))


def test_identity_matmul():
    cfg = load_config("minpoolspatz4_4")
    eye = np.eye(8, dtype=np.uint64)
    g = generate(KernelSpec("matmul", 8), cfg, a=eye, b=eye)
    assert np.array_equal(g.expected, eye)
    assert g.check(simulate(cfg, g.program, g.image).mem)


def test_ones_conv_gives_tap_count():
    cfg = load_config("spatz4")
    g = generate(KernelSpec("conv2d", 16, f=3), cfg, img=np.ones((16, 16), dtype=np.uint64),
                 k=np.ones((3, 3), dtype=np.uint64))
    assert (g.expected == 9).all()
    assert g.check(simulate(cfg, g.program, g.image).mem)


@pytest.mark.parametrize("cfg_name,variant", [("minpoolspatz8_2", "vector"), ("minpool16", "scalar")])
def test_matmul_seed42_against_triple_loop(cfg_name, variant):
    cfg = load_config(cfg_name)
    g = generate(KernelSpec("matmul", 16, seed=42, variant=variant), cfg)
    assert np.array_equal(g.expected, triple_loop(g.inputs["A"], g.inputs["B"], 32))
    assert g.check(run_functionally(g, cfg))


@pytest.mark.parametrize("cfg_name", ["minpoolspatz4_4", "minpool16"])
def test_conv2d_seed7_against_four_loop(cfg_name):
    cfg = load_config(cfg_name)
    g = generate(KernelSpec("conv2d", 16, f=3, seed=7), cfg)
    assert np.array_equal(g.expected, four_loop(g.inputs["img"], g.inputs["K"]))
    assert g.check(simulate(cfg, g.program, g.image).mem)


@pytest.mark.parametrize("sew", [8, 16, 32])
def test_vector_and_scalar_matmul_agree(sew):
    spec = dict(kind="matmul", n=16, sew=sew, seed=3)
    vec = generate(KernelSpec(**spec, variant="vector"), load_config("minpoolspatz4_4"))
    sca = generate(KernelSpec(**spec, variant="scalar"), load_config("minpool16"))
    mv = run_functionally(vec, load_config("minpoolspatz4_4"))
    ms = run_functionally(sca, load_config("minpool16"))
    assert np.array_equal(vec.result(mv), sca.result(ms))


def test_vector_and_scalar_conv2d_agree():
    spec = dict(kind="conv2d", n=20, f=5, seed=5)
    cv, cs = load_config("minpoolspatz8_2"), load_config("minpool16")
    vec = generate(KernelSpec(**spec), cv)
    sca = generate(KernelSpec(**spec), cs)
    assert np.array_equal(vec.result(run_functionally(vec, cv)), sca.result(run_functionally(sca, cs)))


@settings(max_examples=12, deadline=None)
@given(st.sampled_from([8, 16, 24, 32]), st.sampled_from([8, 16, 32]), st.integers(0, 1000),
       st.sampled_from(["spatz2", "spatz4", "minpoolspatz4_4", "minpool16"]))
def test_generated_matmul_is_correct(n, sew, seed, cfg_name):
    cfg = load_config(cfg_name)
    try:
        g = generate(KernelSpec("matmul", n, sew=sew, seed=seed), cfg)
    except UnsupportedShape:
        return
    assert g.check(run_functionally(g, cfg))


def test_op_counts_are_structural():
    assert KernelSpec("matmul", 64).ops == 2 * 64 ** 3
    assert KernelSpec("conv2d", 64, f=7).ops == 2 * 49 * 58 * 58


def test_arithmetic_intensity_examples():
    assert arithmetic_intensity(KernelSpec("matmul", 16)) == pytest.approx(2.6666666, rel=1e-6)
    assert arithmetic_intensity(KernelSpec("matmul", 6)) == pytest.approx(1.0)
    assert arithmetic_intensity(KernelSpec("conv2d", 32, f=3)) == pytest.approx(2.25)
    assert arithmetic_intensity(KernelSpec("conv2d", 32, f=7)) == pytest.approx(12.25)
    # narrower elements move fewer bytes for the same operations
    assert arithmetic_intensity(KernelSpec("matmul", 16, sew=8)) == pytest.approx(4 * 2.6666666, rel=1e-6)


def test_tiling_plans_reuse_ratios():
    # vector blocks load one B row and block_rows A scalars per reduction step;
    # the block must keep the unit compute-bound (at least 0.5 op per loaded byte)
    for cfg_name, n in [("spatz2", 64), ("spatz4", 64), ("minpoolspatz8_2", 64), ("mempoolspatz64_4", 256)]:
        cfg = load_config(cfg_name)
        v = generate(KernelSpec("matmul", n), cfg).plan
        assert v.loads_per_block == v.block_rows + v.block_cols
        assert v.macc_per_block == v.block_rows * v.block_cols
        balance = cfg.peak_ops_per_cycle / cfg.bandwidth_bytes_per_cycle
        assert 2 * v.macc_per_block / (4 * v.loads_per_block) >= balance
    s = generate(KernelSpec("matmul", 64), load_config("minpool16")).plan
    assert (s.block_rows, s.block_cols) == (4, 4)
    assert (s.loads_per_block, s.macc_per_block) == (8, 16)


def test_unsupported_shapes():
    with pytest.raises(UnsupportedShape):
        KernelSpec("conv2d", 16, f=4).validate()
    with pytest.raises(UnsupportedShape):
        KernelSpec("conv2d", 2, f=3).validate()
    with pytest.raises(UnsupportedShape):
        generate(KernelSpec("matmul", 18, variant="scalar"), load_config("minpool16"))
    with pytest.raises(UnsupportedShape):
        generate(KernelSpec("matmul", 16, variant="vector"), load_config("minpool16"))


def test_padding_flag_accepts_odd_sizes():
    cfg = load_config("minpool16")
    g = generate(KernelSpec("matmul", 18, variant="scalar", pad=True, seed=1), cfg)
    assert g.expected.shape == (20, 20)
    assert np.array_equal(g.expected[:18, :18], golden_matmul(g.inputs["A"][:18, :18], g.inputs["B"][:18, :18]))
    assert not g.expected[18:].any() and not g.expected[:, 18:].any()
    assert g.check(run_functionally(g, cfg))


def test_sidecar_files(tmp_path):
    g = generate(KernelSpec("matmul", 16, seed=4), load_config("spatz2"))
    meta = g.write(tmp_path / "mm16")
    assert json.loads((tmp_path / "mm16.json").read_text()) == json.loads(json.dumps(meta))
    assert meta["ops"] == 2 * 16 ** 3 and meta["intensity"] == pytest.approx(16 / 6)
    assert len(meta["expected_sha256"]) == 64
    assert (tmp_path / "mm16.s").read_text() == g.source
    assert (tmp_path / "mm16.hex").read_text().startswith("@")
