import csv
import io
import json

import pytest
import yaml
from click.testing import CliRunner

from spatzsim.cli import (EXIT_CONFIG, EXIT_INVARIANT, EXIT_MISMATCH, RunManifest, exit_code, expand_sweep_file,
                          main, point_label, run_manifest, sweep)
from spatzsim.config import load_config
from spatzsim.errors import ConfigInvalid, FunctionalMismatch, RooflineViolation, SimulationHang, UnsupportedShape
from spatzsim.kernels import KernelSpec
from spatzsim.metrics import validate_report
from spatzsim.metrics.energy import EVENT_COMPONENT


def small(cfg="minpoolspatz4_4", **kw):
    return RunManifest(config=cfg, kernel=KernelSpec("matmul", kw.pop("n", 16), **kw))


def test_run_writes_valid_report(tmp_path):
    out = tmp_path / "r.json"
    res = CliRunner().invoke(main, ["run", "--config", "minpoolspatz4_4", "--kernel", "matmul", "--n", "16",
                                    "--out", str(out)])
    assert res.exit_code == 0, res.output
    d = json.loads(out.read_text())
    validate_report(d)
    assert d["config"] == "minpoolspatz4_4" and d["kernel"] == "matmul_16"
    assert 0 < d["utilization_pct"] <= 100
    assert d["metadata"]["expected_sha256"]


def test_run_to_stdout_and_trace(tmp_path):
    trace = tmp_path / "t.log"
    res = CliRunner().invoke(main, ["run", "--config", "spatz2", "--kernel", "conv2d", "--n", "16", "--f", "3",
                                    "--trace", str(trace)])
    assert res.exit_code == 0, res.output
    assert json.loads(res.output)["kernel"] == "conv2d_3"
    first = trace.read_text().splitlines()[0].split()
    assert first[0].isdigit() and first[1] == "0"


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        m = small(seed=5)
        m.out = str(p)
        run_manifest(m)
    assert a.read_bytes() == b.read_bytes()


def test_chaining_flag_and_energy_override(tmp_path):
    table = tmp_path / "e.yaml"
    table.write_text(yaml.safe_dump({"entries": {k: 1.0 for k in EVENT_COMPONENT}}))
    on = run_manifest(RunManifest("spatz2", KernelSpec("matmul", 16), chaining=True, energy_table=str(table)))
    off = run_manifest(RunManifest("spatz2", KernelSpec("matmul", 16), chaining=False, energy_table=str(table)))
    assert on.metadata["chaining"] and not off.metadata["chaining"]
    assert on.cycles <= off.cycles
    assert on.gops_per_w is not None


@pytest.mark.parametrize("args,code", [
    (["--config", "no_such_cfg", "--kernel", "matmul", "--n", "16"], EXIT_CONFIG),
    (["--config", "minpool16", "--kernel", "matmul", "--n", "18"], EXIT_CONFIG),
    (["--config", "spatz2", "--kernel", "matmul", "--n", "16", "--energy-table", "/nonexistent.yaml"], EXIT_CONFIG),
])
def test_exit_codes(args, code):
    res = CliRunner().invoke(main, ["run", *args])
    assert res.exit_code == code
    assert "error:" in res.output


def test_invalid_inline_config_exits_2(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text(yaml.safe_dump({"name": "bad", "macus_per_pe": 4, "vlen_bits": 256}))
    res = CliRunner().invoke(main, ["run", "--config", str(p), "--kernel", "matmul", "--n", "16"])
    assert res.exit_code == EXIT_CONFIG


def test_exit_code_mapping():
    assert exit_code(FunctionalMismatch("x")) == EXIT_MISMATCH
    assert exit_code(ConfigInvalid("x")) == EXIT_CONFIG
    assert exit_code(UnsupportedShape("x")) == EXIT_CONFIG
    assert exit_code(RooflineViolation("x")) == EXIT_INVARIANT
    assert exit_code(SimulationHang("x")) == EXIT_INVARIANT
    with pytest.raises(KeyError):
        exit_code(KeyError("not ours"))


def test_functional_mismatch_is_caught(monkeypatch):
    import spatzsim.kernels.base as base

    monkeypatch.setattr(base.GeneratedKernel, "check", lambda self, mem: False)
    with pytest.raises(FunctionalMismatch):
        run_manifest(small())
    res = CliRunner().invoke(main, ["run", "--config", "spatz2", "--kernel", "matmul", "--n", "8"])
    assert res.exit_code == EXIT_MISMATCH


def test_sweep_rows_match_single_runs():
    ms = [small(n=8), small(n=16), RunManifest("spatz2", KernelSpec("conv2d", 16, f=3))]
    text, failures = sweep(ms)
    assert not failures
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["label"] for r in rows] == sorted(r["label"] for r in rows)
    single = run_manifest(small(n=16))
    row = next(r for r in rows if r["label"] == point_label(small(n=16), "minpoolspatz4_4"))
    assert float(row["performance"]) == pytest.approx(single.op_per_cycle, rel=1e-5)
    assert float(row["intensity"]) == pytest.approx(single.intensity, rel=1e-5)


def test_sweep_is_order_independent():
    ms = [small(n=8), RunManifest("spatz2", KernelSpec("matmul", 8))]
    assert sweep(ms)[0] == sweep(list(reversed(ms)))[0]


def test_empty_sweep_is_an_error():
    with pytest.raises(ConfigInvalid):
        sweep([])


def test_sweep_file_and_partial_failure(tmp_path):
    f = tmp_path / "sweep.yaml"
    f.write_text(yaml.safe_dump({
        "runs": [{"config": "minpool16", "kernel": "matmul", "n": 18}],
        "grid": {"configs": ["spatz2", "minpoolspatz4_4"], "kernels": [{"kernel": "matmul", "n": [8, 16]}]},
    }))
    ms = expand_sweep_file(str(f))
    assert len(ms) == 5
    out = tmp_path / "roof.csv"
    res = CliRunner().invoke(main, ["sweep", str(f), "--out", str(out)])
    assert res.exit_code == EXIT_CONFIG
    assert "partial output" in res.output
    assert len(out.read_text().splitlines()) == 1 + 4


def test_manifest_rejects_unknown_keys():
    with pytest.raises(ConfigInvalid):
        RunManifest.from_dict({"config": "spatz2", "kernel": "matmul", "n": 8, "colour": "red"})
    with pytest.raises(ConfigInvalid):
        RunManifest.from_dict({"config": "spatz2", "kernel": "matmul", "n": 8, "chaining": "maybe"})


def test_inline_config_manifest():
    cfg = load_config("spatz4").to_dict()
    rep = run_manifest(RunManifest.from_dict({"config": cfg, "kernel": "matmul", "n": 8, "chaining": "off"}))
    assert rep.config == "spatz4" and rep.metadata["chaining"] is False
