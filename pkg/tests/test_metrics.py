import dataclasses
import json

import pytest
from hypothesis import given, settings, strategies as st

from spatzsim.config import load_config
from spatzsim.errors import MissingTableEntry, RooflineViolation
from spatzsim.kernels import KernelSpec
from spatzsim.metrics import (EnergyTable, PerfCounters, RooflinePoint, SimReport, energy_report, event_counts,
                              performance_report, performance_summary, roofline_bound, roofline_csv,
                              validate_report)
from spatzsim.metrics.energy import COMPONENTS, EVENT_COMPONENT

UNIT_TABLE = EnergyTable({k: 1.0 for k in EVENT_COMPONENT})

COUNTER_FIELDS = [f.name for f in dataclasses.fields(PerfCounters)
                  if f.name not in ("stall_cycles", "cycles", "core_cycles")]


def test_roofline_examples():
    assert roofline_bound(0.25, 8, 16) == 4
    assert roofline_bound(0.5, 8, 16) == 8
    assert roofline_bound(3.0, 8, 16) == 8
    assert roofline_bound(0, 8, 16) == 0
    with pytest.raises(ValueError):
        roofline_bound(-1, 8, 16)


@given(st.floats(0, 100), st.floats(0, 1024), st.floats(0, 2048))
def test_roofline_is_min_of_roofs(i, peak, bw):
    r = roofline_bound(i, peak, bw)
    assert r <= peak and r <= i * bw + 1e-9
    assert r == pytest.approx(min(peak, i * bw))


def test_performance_summary_flags_points_above_the_roof():
    s = performance_summary(3840, 1000, 4, 8, 10.0)
    assert s["op_per_cycle"] == pytest.approx(3.84) and s["utilization_pct"] == pytest.approx(96.0)
    with pytest.raises(RooflineViolation):
        performance_summary(5000, 1000, 4, 8, 10.0)
    with pytest.raises(RooflineViolation):
        performance_summary(1000, 1000, 4, 8, 0.05)


def test_zero_length_run_reports_zero():
    cfg = load_config("spatz4")
    s = performance_summary(0, 0, cfg.peak_ops_per_cycle, cfg.bandwidth_bytes_per_cycle, 1.0)
    assert s["op_per_cycle"] == 0 and s["utilization_pct"] == 0


def test_roofline_csv_is_sorted_and_stable():
    pts = [RooflinePoint("b", 2.0, 3.0), RooflinePoint("a", 1.0 / 3, 0.5)]
    text = roofline_csv(pts)
    assert text.splitlines() == ["label,intensity,performance", "a,0.333333,0.5", "b,2,3"]
    assert roofline_csv(list(reversed(pts))) == text


def random_counters(draw_ints):
    c = PerfCounters(cycles=draw_ints[0] + 1)
    for name, v in zip(COUNTER_FIELDS, draw_ints[1:]):
        setattr(c, name, v)
    return c


counter_values = st.lists(st.integers(0, 10 ** 6), min_size=len(COUNTER_FIELDS) + 1,
                          max_size=len(COUNTER_FIELDS) + 1)


@settings(max_examples=50)
@given(counter_values, st.sampled_from(["spatz4", "minpool16", "mempoolspatz64_4"]))
def test_energy_is_linear_and_components_sum(vals, cfg_name):
    cfg = load_config(cfg_name)
    c = random_counters(vals)
    doubled = random_counters([2 * vals[0] + 1] + [2 * v for v in vals[1:]])
    doubled.cycles = 2 * c.cycles
    e1 = energy_report(c, UNIT_TABLE, cfg)
    e2 = energy_report(doubled, UNIT_TABLE, cfg)
    assert e2.total_pj == pytest.approx(2 * e1.total_pj)
    assert sum(e1.components_pj.values()) == pytest.approx(e1.total_pj, rel=1e-12)
    assert set(e1.components_pj) == set(COMPONENTS)


def test_energy_uses_every_event_and_frequency():
    cfg = load_config("spatz4")
    c = PerfCounters(cycles=590, elementary_ops=1180, vrf_reads=3)
    e = energy_report(c, UNIT_TABLE, cfg)
    ev = event_counts(c, cfg)
    assert e.total_pj == pytest.approx(sum(ev.values()))
    assert e.seconds == pytest.approx(1e-6)
    assert e.power_w == pytest.approx(e.total_pj * 1e-12 / 1e-6)
    assert e.gops == pytest.approx(1180 / 1e-6 / 1e9)
    assert e.gops_per_w == pytest.approx(1180 / e.total_pj * 1e3)


def test_zero_counters_give_null_efficiency():
    e = energy_report(PerfCounters(), UNIT_TABLE, load_config("spatz4"))
    assert e.total_pj == 0 and e.gops_per_w is None


def test_missing_entry_is_reported():
    partial = EnergyTable({k: 1.0 for k in list(EVENT_COMPONENT)[1:]})
    with pytest.raises(MissingTableEntry):
        energy_report(PerfCounters(cycles=1), partial, load_config("spatz4"))


def test_negative_entries_rejected():
    with pytest.raises(ValueError):
        EnergyTable({"snitch_issue": -1.0})


def test_table_round_trip(tmp_path):
    t = EnergyTable({"snitch_issue": 0.5, "spm_access": 1.25}, provenance={"source": "test"})
    p = tmp_path / "t.yaml"
    t.dump(p, "# header\n")
    back = EnergyTable.load(p)
    assert back == t
    bad = tmp_path / "bad.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(MissingTableEntry):
        EnergyTable.load(bad)


def test_default_table_covers_every_event():
    t = EnergyTable.load()
    assert set(EVENT_COMPONENT) <= set(t.entries)
    assert all(v >= 0 for v in t.entries.values())
    assert "residuals" in t.provenance


def make_report():
    cfg = load_config("spatz2")
    c = PerfCounters(cycles=140000, elementary_ops=2 * 64 ** 3)
    c.stall_cycles.update({"busy": 130000, "issue": 10000})
    rep = performance_report(c, cfg, KernelSpec("matmul", 64))
    return rep.with_energy(energy_report(c, UNIT_TABLE, cfg, ops=KernelSpec("matmul", 64).ops))


def test_report_schema_and_json():
    rep = make_report()
    d = json.loads(rep.to_json())
    validate_report(d)
    assert d["kernel"] == "matmul_64" and d["ops"] == 2 * 64 ** 3
    assert d["op_per_cycle"] == pytest.approx(2 * 64 ** 3 / 140000)
    assert d["intensity"] == pytest.approx(64 / 6) and d["roof"] == 4
    assert d["stalls"] == {"busy": 130000, "issue": 10000}
    assert set(d["energy_pj"]) == set(COMPONENTS)


def test_report_validation_rejects_bad_fields():
    d = make_report().to_dict()
    for broken in ({k: v for k, v in d.items() if k != "roof"}, {**d, "cycles": "many"},
                   {**d, "stalls": {"nap": 3}}):
        with pytest.raises(ValueError):
            validate_report(broken)


def test_report_above_roof_raises():
    cfg = load_config("spatz2")
    with pytest.raises(RooflineViolation):
        performance_report(PerfCounters(cycles=10), cfg, KernelSpec("matmul", 64))


def test_sim_report_is_plain_data():
    rep = make_report()
    assert isinstance(rep, SimReport)
    assert SimReport(**{k: v for k, v in rep.to_dict().items() if k != "report_version"}) == rep


def test_subword_elements_raise_the_vector_roof():
    vec, sca = load_config("minpoolspatz8_2"), load_config("minpool16")
    assert [vec.peak_ops_at(s) for s in (32, 16, 8)] == [32, 64, 128]
    assert sca.peak_ops_at(8) == sca.peak_ops_per_cycle
    c = PerfCounters(cycles=700, elementary_ops=2 * 32 ** 3)
    rep = performance_report(c, vec, KernelSpec("matmul", 32, sew=8))
    assert rep.roof == 128 and rep.op_per_cycle > vec.peak_ops_per_cycle
