"""Command-line front end: single runs and roofline sweeps.

``spatzsim run`` generates a kernel, simulates it, checks the result
against the golden reference and writes a JSON report.  ``spatzsim sweep``
runs a list of manifests (optionally in parallel) and writes one roofline
CSV row per run.

Exit codes: 0 ok, 1 functional mismatch, 2 configuration or usage error,
3 model invariant violation (roofline, hang).
"""

from __future__ import annotations

import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import click
import yaml

from .config import ClusterConfig, config_from_dict, load_config
from .errors import (ConfigInvalid, FunctionalMismatch, MissingTableEntry, RooflineViolation, SimulationHang,
                     UnsupportedShape)
from .kernels import KernelSpec, generate
from .metrics.energy import EnergyTable, energy_report
from .metrics.report import SimReport, performance_report, validate_report
from .metrics.roofline import RooflinePoint, roofline_csv
from .uarch import simulate

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2, 3


@dataclass
class RunManifest:
    """Everything that determines one run."""
    config: object  # preset name, path, or an inline ClusterConfig / mapping
    kernel: KernelSpec
    out: Optional[str] = None
    trace: Optional[str] = None
    chaining: Optional[bool] = None  # None keeps the configuration's setting
    energy_table: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def resolve_config(self) -> ClusterConfig:
        if isinstance(self.config, ClusterConfig):
            cfg = self.config.validate()
        elif isinstance(self.config, dict):
            cfg = config_from_dict(self.config)
        else:
            cfg = load_config(self.config)
        if self.chaining is not None:
            cfg = cfg.replace(chaining=self.chaining)
        return cfg

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        d = dict(d)
        spec = KernelSpec(kind=d.pop("kernel"), n=int(d.pop("n")), f=int(d.pop("f", 3)), sew=int(d.pop("sew", 32)),
                          seed=int(d.pop("seed", 0)), variant=d.pop("variant", "auto"), pad=bool(d.pop("pad", False)))
        chaining = d.pop("chaining", None)
        if isinstance(chaining, str):
            chaining = _on_off(chaining)
        m = cls(config=d.pop("config"), kernel=spec, out=d.pop("out", None), trace=d.pop("trace", None),
                chaining=chaining, energy_table=d.pop("energy_table", None))
        if d:
            raise ConfigInvalid(f"unknown manifest keys: {sorted(d)}")
        return m


def _on_off(v: str) -> bool:
    if v not in ("on", "off"):
        raise ConfigInvalid(f"expected 'on' or 'off', got {v!r}")
    return v == "on"


def run_manifest(m: RunManifest) -> SimReport:
    """Generate, simulate, verify and report one run.

    Raises FunctionalMismatch when the simulated result differs from the
    golden reference; no performance numbers are produced in that case.
    """
    cfg = m.resolve_config()
    spec = m.kernel.validate()
    table = EnergyTable.load(m.energy_table or cfg.energy_table)
    g = generate(spec, cfg)
    if m.trace:
        with open(m.trace, "w") as tf:
            res = simulate(cfg, g.program, g.image, trace=tf)
    else:
        res = simulate(cfg, g.program, g.image)
    if not g.check(res.mem):
        raise FunctionalMismatch(f"{spec.label} (n={spec.n}) on {cfg.name}: result differs from the golden reference")
    report = performance_report(res.counters, cfg, spec)
    report.with_energy(energy_report(res.counters, table, cfg, ops=spec.ops))
    report.metadata.update({
        "kernel_spec": asdict(spec),
        "chaining": cfg.chaining,
        "frequency_hz": cfg.frequency_hz,
        "plan": {"variant": g.plan.variant, "block_rows": g.plan.block_rows, "block_cols": g.plan.block_cols,
                 "lmul": g.plan.lmul, "jobs": g.plan.jobs},
        "expected_sha256": g.digest(),
    })
    validate_report(report.to_dict())
    if m.out:
        Path(m.out).write_text(report.to_json())
    return report


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, FunctionalMismatch):
        return EXIT_MISMATCH
    if isinstance(exc, (ConfigInvalid, UnsupportedShape, MissingTableEntry, FileNotFoundError)):
        return EXIT_CONFIG
    if isinstance(exc, (RooflineViolation, SimulationHang)):
        return EXIT_INVARIANT
    raise exc


def _sweep_one(m: RunManifest):
    try:
        return run_manifest(m), None
    except (FunctionalMismatch, ConfigInvalid, UnsupportedShape, MissingTableEntry, RooflineViolation,
            SimulationHang, FileNotFoundError) as exc:
        return None, exc


def point_label(m: RunManifest, cfg_name: str) -> str:
    s = m.kernel
    size = f"n{s.n}" + (f"_f{s.f}" if s.kind == "conv2d" else "") + (f"_e{s.sew}" if s.sew != 32 else "")
    return f"{cfg_name}/{s.kind}/{size}"


def sweep(manifests: list, jobs: int = 1) -> tuple[str, list]:
    """Roofline CSV over all manifests plus a list of (label, error) for failed rows."""
    if not manifests:
        raise ConfigInvalid("sweep needs at least one manifest")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_sweep_one, manifests))
    else:
        results = [_sweep_one(m) for m in manifests]
    points, failures = [], []
    for m, (rep, exc) in zip(manifests, results):
        name = rep.config if rep else str(getattr(m.config, "name", m.config))
        label = point_label(m, name)
        if rep is None:
            failures.append((label, exc))
        else:
            points.append(RooflinePoint(label, rep.intensity, rep.op_per_cycle))
    return roofline_csv(points), failures


def expand_sweep_file(path: str) -> list:
    """Manifests from a YAML file: a ``runs`` list and/or a ``grid`` of configs x kernels."""
    data = yaml.safe_load(Path(path).read_text()) or {}
    out = [RunManifest.from_dict(r) for r in data.get("runs", [])]
    grid = data.get("grid")
    if grid:
        for cfg in grid["configs"]:
            for k in grid["kernels"]:
                sizes = k.get("n", [])
                for n in sizes if isinstance(sizes, list) else [sizes]:
                    d = {kk: v for kk, v in k.items() if kk != "n"}
                    out.append(RunManifest.from_dict({"config": cfg, "n": n, **d}))
    return out


@click.group()
def main() -> None:
    """Cycle-level simulator for Snitch and Spatz clusters with a shared L1 scratchpad."""


@main.command("run")
@click.option("--config", "config", required=True, help="Preset name or YAML config path.")
@click.option("--kernel", type=click.Choice(["matmul", "conv2d"]), required=True)
@click.option("--n", type=int, required=True, help="Matrix or image size.")
@click.option("--f", type=int, default=3, show_default=True, help="conv2d kernel size.")
@click.option("--sew", type=click.Choice(["8", "16", "32"]), default="32", show_default=True)
@click.option("--chaining", type=click.Choice(["on", "off"]), default=None)
@click.option("--trace", type=click.Path(dir_okay=False), default=None, help="Write a per-cycle event trace.")
@click.option("--energy-table", type=click.Path(dir_okay=False), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Report path (default: stdout).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--variant", type=click.Choice(["auto", "vector", "scalar"]), default="auto", show_default=True)
def run_cmd(config, kernel, n, f, sew, chaining, trace, energy_table, out, seed, variant) -> None:
    """Simulate one kernel and emit its report."""
    try:
        m = RunManifest(config=config, kernel=KernelSpec(kernel, n, f=f, sew=int(sew), seed=seed, variant=variant),
                        out=out, trace=trace, chaining=None if chaining is None else chaining == "on",
                        energy_table=energy_table)
        rep = run_manifest(m)
    except Exception as exc:  # mapped to the documented exit codes
        code = exit_code(exc)
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(code)
    if out is None:
        click.echo(rep.to_json(), nl=False)
    else:
        click.echo(f"{rep.config} {rep.kernel}: {rep.op_per_cycle:.2f} op/cycle "
                   f"({rep.utilization_pct:.1f}%), {rep.cycles} cycles -> {out}", err=True)


@main.command("sweep")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (default: stdout).")
@click.option("--jobs", type=int, default=1, show_default=True, help="Parallel simulations.")
def sweep_cmd(manifest, out, jobs) -> None:
    """Run every manifest in a YAML sweep file and write roofline points as CSV."""
    try:
        manifests = expand_sweep_file(manifest)
        text, failures = sweep(manifests, jobs=jobs)
    except Exception as exc:
        code = exit_code(exc)
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(code)
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)
    for label, exc in failures:
        click.echo(f"failed: {label}: {type(exc).__name__}: {exc}", err=True)
    if failures:
        click.echo(f"partial output: {len(failures)} of {len(manifests)} runs failed", err=True)
        sys.exit(max(exit_code(e) for _, e in failures))


if __name__ == "__main__":
    main()
