"""Command-line front end: scenario runs, convergence studies, Riemann info.

Subcommands:
    run          evolve a scenario with the PDE engine, the aggregate engine,
                 or both, writing CSV snapshots and a diagnostics JSON
    convergence  L1-error table of u against an exact oracle over resolutions
    riemann      admissible speed range, selected speed and wave structure
    validate     run all configured diagnostics; exit 0 iff everything passes

Exit codes: 0 success, 1 configuration/I-O error, 2 diagnostics failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import analysis, flux as fx, particles, pde
from .measure import (
    AtomicMeasure,
    GridField,
    MeasureError,
    TriangularDensity,
    UniformDensity,
    extract_atoms,
    sample_to_grid,
    wasserstein1,
)

DEFAULT_CHECKS = ("mass", "oleinik", "pressureless")
KNOWN_CHECKS = ("mass", "oleinik", "pressureless", "pushforward",
                "weak_residual", "w1_vs_particles")


class ScenarioError(ValueError):
    """Malformed scenario file; the message names the offending field."""


@dataclass
class Scenario:
    model: fx.FluxModel
    initial: object                    # AtomicMeasure or a density object
    x_min: float
    x_max: float
    n_cells: int
    t_end: float
    cfl: float = 0.45
    output_times: list[float] = field(default_factory=list)
    checks: tuple[str, ...] = DEFAULT_CHECKS
    tolerances: dict = field(default_factory=dict)
    out_dir: str = "out"
    formats: tuple[str, ...] = ("csv", "json")
    raw: dict = field(default_factory=dict)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells


def _require_keys(block: dict, allowed: set, required: set, where: str):
    unknown = set(block) - allowed
    if unknown:
        raise ScenarioError(f"unknown field(s) in {where}: {sorted(unknown)}")
    missing = required - set(block)
    if missing:
        raise ScenarioError(f"missing field(s) in {where}: {sorted(missing)}")


def _parse_initial(block: dict):
    kind = block.get("type")
    if kind == "atoms":
        _require_keys(block, {"type", "atoms"}, {"type", "atoms"}, "initial")
        pairs = block["atoms"]
        if not pairs:
            raise ScenarioError("initial.atoms must be non-empty (total mass > 0)")
        try:
            return AtomicMeasure.from_pairs(pairs)
        except MeasureError as exc:
            raise ScenarioError(f"initial.atoms: {exc}") from exc
    if kind == "uniform":
        _require_keys(block, {"type", "x_left", "x_right", "mass"},
                      {"type", "x_left", "x_right", "mass"}, "initial")
        return UniformDensity(block["x_left"], block["x_right"], block["mass"])
    if kind == "triangular":
        keys = {"type", "x_left", "x_peak", "x_right", "mass"}
        _require_keys(block, keys, keys, "initial")
        return TriangularDensity(block["x_left"], block["x_peak"],
                                 block["x_right"], block["mass"])
    raise ScenarioError(f"initial.type must be atoms|uniform|triangular, got {kind!r}")


def load_scenario(path: str) -> Scenario:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    return parse_scenario(raw)


def parse_scenario(raw: dict) -> Scenario:
    _require_keys(raw, {"flux", "initial", "grid", "time", "diagnostics", "output"},
                  {"flux", "initial", "grid", "time"}, "scenario")
    try:
        model = fx.from_dict(raw["flux"])
    except fx.FluxError as exc:
        raise ScenarioError(f"flux: {exc}") from exc
    initial = _parse_initial(raw["initial"])

    grid = raw["grid"]
    _require_keys(grid, {"x_min", "x_max", "n_cells"},
                  {"x_min", "x_max", "n_cells"}, "grid")
    tblock = raw["time"]
    _require_keys(tblock, {"t_end", "cfl", "output_times"}, {"t_end"}, "time")
    t_end = float(tblock["t_end"])
    if t_end <= 0:
        raise ScenarioError("time.t_end must be positive")
    output_times = [float(t) for t in tblock.get("output_times", [])]
    if any(t < 0 or t > t_end for t in output_times):
        raise ScenarioError("time.output_times must lie in [0, t_end]")
    if output_times != sorted(output_times):
        raise ScenarioError("time.output_times must be sorted")

    diag = raw.get("diagnostics", {})
    _require_keys(diag, {"checks", "tolerances"}, set(), "diagnostics")
    checks = tuple(diag.get("checks", DEFAULT_CHECKS))
    for c in checks:
        if c not in KNOWN_CHECKS:
            raise ScenarioError(f"diagnostics.checks: unknown check {c!r}")
    out = raw.get("output", {})
    _require_keys(out, {"directory", "formats"}, set(), "output")

    return Scenario(
        model=model,
        initial=initial,
        x_min=float(grid["x_min"]),
        x_max=float(grid["x_max"]),
        n_cells=int(grid["n_cells"]),
        t_end=t_end,
        cfl=float(tblock.get("cfl", 0.45)),
        output_times=output_times,
        checks=checks,
        tolerances=dict(diag.get("tolerances", {})),
        out_dir=out.get("directory", "out"),
        formats=tuple(out.get("formats", ("csv", "json"))),
        raw=raw,
    )


def initial_grid(scn: Scenario, n_cells: int | None = None) -> GridField:
    try:
        return sample_to_grid(scn.initial, scn.x_min, scn.x_max,
                              n_cells or scn.n_cells)
    except MeasureError as exc:
        raise ScenarioError(str(exc)) from exc


def run_pde(scn: Scenario, n_cells: int | None = None) -> list[pde.SolverState]:
    grid = initial_grid(scn, n_cells)
    return pde.run(grid, scn.model, scn.t_end, cfl=scn.cfl,
                   output_times=scn.output_times)


def run_particles(scn: Scenario):
    if not isinstance(scn.initial, AtomicMeasure):
        raise ScenarioError("particle engine requires atomic initial data")
    system = particles.AggregateSystem.create(scn.initial, scn.model)
    times = sorted(set(scn.output_times) | {scn.t_end})
    rows = []
    events: list[particles.MergeEvent] = []
    current = system
    for t in times:
        current, ev = particles.advance(current, t)
        events.extend(ev)
        for i in range(current.atoms.n_atoms):
            rows.append((t, i, float(current.atoms.positions[i]),
                         float(current.atoms.masses[i]), float(current.v[i])))
    return rows, events, current


def _seed() -> int:
    return int(os.environ.get("DUALFLOW_SEED", "0"))


def bundled_scenario(name: str) -> str:
    """Path of a scenario file shipped with the package."""
    from importlib import resources

    return str(resources.files("dualflow").joinpath("scenarios", name))


def pair_with_oracle(scn: Scenario, snapshots):
    """(snapshot, oracle atoms) pairs, skipping times within 2 dt of a merge.

    Shock merging in the PDE path is smeared over a few cells, so the W1
    comparison is meaningless right at an oracle merge instant.
    """
    system = particles.AggregateSystem.create(scn.initial, scn.model)
    _, all_events = particles.advance(system, scn.t_end)
    dt_est = pde.stable_dt(initial_grid(scn), scn.model, scn.cfl)
    pairs = []
    current = system
    for s in snapshots:
        current, _ = particles.advance(current, s.t)
        if any(abs(s.t - e.t) <= 2 * dt_est for e in all_events):
            continue
        pairs.append((s, current.atoms))
    return pairs


def run_diagnostics(scn: Scenario, snapshots, particle_states=None) -> analysis.DiagnosticsReport:
    report = analysis.DiagnosticsReport(scenario=dict(scn.raw))
    dx = scn.dx
    tol = scn.tolerances
    total = snapshots[0].field.total_mass
    for name in scn.checks:
        if name == "mass":
            mass_tol = float(tol.get("mass", 1e-12))
            for s in snapshots:
                err = abs(s.field.u_faces[-1] - total)
                report.add(analysis.CheckRecord("mass_conservation", s.t, err,
                                                mass_tol, mass_tol, err <= mass_tol))
        elif name == "oleinik":
            ole_tol = float(tol.get("oleinik", 5 * dx))
            for s in snapshots:
                if s.t > 0:
                    for rec in analysis.check_oleinik(s, scn.model, ole_tol):
                        report.add(rec)
        elif name == "pressureless":
            for rec in analysis.pressureless_check(snapshots, scn.model):
                report.add(rec)
        elif name == "pushforward":
            flow = analysis.reconstruct_flow(snapshots, scn.initial, scn.model)
            span = max(abs(scn.x_min), abs(scn.x_max))
            funcs = {
                "x": (lambda x: x, 1.0),
                "x2": (lambda x: x * x, 2.0 * span),
                "sin": (np.sin, 1.0),
            }
            per_lip = float(tol.get("pushforward", 5 * dx))
            for rec in analysis.pushforward_checks(flow, snapshots, funcs, per_lip):
                report.add(rec)
        elif name == "weak_residual":
            res_tol = float(tol.get("weak_residual", 20 * dx))
            value = analysis.weak_residual(snapshots, scn.model, seed=_seed())
            report.add(analysis.CheckRecord("weak_residual", snapshots[-1].t,
                                            value, res_tol, res_tol,
                                            value <= res_tol))
        elif name == "w1_vs_particles":
            if particle_states is None:
                continue
            w1_tol = float(tol.get("w1_vs_particles", 3 * dx))
            for s, atoms in particle_states:
                d = wasserstein1(s.field, atoms)
                report.add(analysis.CheckRecord("w1_pde_vs_particles", s.t, d,
                                                w1_tol, w1_tol, d <= w1_tol))
    return report


# ---------------------------------------------------------------------------
# file output


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: str, header: list[str], rows):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_text(path: str, text: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_field_outputs(out_dir: str, snapshots):
    face_rows = []
    cell_rows = []
    atom_rows = []
    for s in snapshots:
        f = s.field
        for x, u in zip(f.faces, f.u_faces):
            face_rows.append((s.t, float(x), float(u)))
        dx = f.dx
        for x, m in zip(f.centers, f.cell_masses):
            cell_rows.append((s.t, float(x), float(m), float(m / dx)))
        mu = extract_atoms(f)
        for i in range(mu.n_atoms):
            atom_rows.append((s.t, i, float(mu.positions[i]), float(mu.masses[i])))
    _write_csv(os.path.join(out_dir, "fields_faces.csv"),
               ["t", "x_face", "u"], face_rows)
    _write_csv(os.path.join(out_dir, "fields_cells.csv"),
               ["t", "x_center", "rho_cell_mass", "rho_density"], cell_rows)
    _write_csv(os.path.join(out_dir, "atoms_extracted.csv"),
               ["t", "atom_id", "x", "m"], atom_rows)


def write_particle_outputs(out_dir: str, rows, events):
    _write_csv(os.path.join(out_dir, "trajectory.csv"),
               ["t", "atom_id", "x", "m", "v"], rows)
    _write_csv(os.path.join(out_dir, "events.csv"),
               ["t_event", "ids_merged", "x", "m"],
               [(e.t, "+".join(str(i) for i in e.indices), e.x, e.m)
                for e in events])


def write_summary_csv(out_dir: str, scn: Scenario, snapshots, report):
    residual = next((c.value for c in report.checks if c.name == "weak_residual"),
                    "")
    rows = []
    for s in snapshots:
        f = s.field
        ole = ""
        if s.t > 0:
            au = fx.eval_a(scn.model, f.u_faces)
            ole = float(np.max(np.diff(au)) / f.dx)
        rows.append((s.t, f.total_mass, float(np.max(f.cell_masses) / f.dx),
                     ole, residual))
    _write_csv(os.path.join(out_dir, "diagnostics.csv"),
               ["t", "total_mass", "max_cell_density", "oleinik_lhs_max",
                "residual_weak"], rows)


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args) -> int:
    scn = load_scenario(args.scenario)
    if args.out:
        scn.out_dir = args.out
    engine = args.engine
    particle_states = None
    snapshots = None

    if engine in ("particles", "both"):
        if not isinstance(scn.initial, AtomicMeasure):
            raise ScenarioError("engine=particles requires atomic initial data")
        if not fx.is_attractive(scn.model, scn.initial.total_mass):
            raise ScenarioError("engine=particles requires an attractive-admissible "
                                "flux (a non-increasing on [0, total mass])")
        rows, events, _ = run_particles(scn)
        write_particle_outputs(scn.out_dir, rows, events)

    if engine in ("pde", "both"):
        snapshots = run_pde(scn)
        write_field_outputs(scn.out_dir, snapshots)

    checks = scn.checks
    if engine == "both":
        particle_states = pair_with_oracle(scn, snapshots)
        if "w1_vs_particles" not in checks:
            checks = checks + ("w1_vs_particles",)

    if snapshots is not None:
        scn_checks = dataclasses.replace(scn, checks=checks) if checks != scn.checks else scn
        report = run_diagnostics(scn_checks, snapshots, particle_states)
        if "json" in scn.formats:
            _write_text(os.path.join(scn.out_dir, "diagnostics.json"),
                        report.to_json() + "\n")
        write_summary_csv(scn.out_dir, scn, snapshots, report)
        if not report.all_pass:
            for c in report.checks:
                if not c.passed:
                    print(f"FAIL {c.name} t={c.t}: value={c.value} bound={c.bound}",
                          file=sys.stderr)
            return 2
    return 0


def _exact_repulsive_dirac(scn: Scenario):
    # closed-form rarefaction primitive for a single Dirac, a(u) = u
    if (scn.model.kind == "quadratic-repulsive"
            and isinstance(scn.initial, AtomicMeasure)
            and scn.initial.n_atoms == 1):
        x0 = float(scn.initial.positions[0])
        m = scn.initial.total_mass
        t = scn.t_end
        return lambda x: np.clip((np.asarray(x) - x0) / t, 0.0, m)
    return None


def convergence_table(scn: Scenario, resolutions) -> list[dict]:
    """L1 error of u per resolution, with observed order between rows."""
    if len(resolutions) < 3:
        raise ScenarioError("convergence study needs at least 3 resolutions")
    resolutions = sorted(int(n) for n in resolutions)
    attractive = fx.is_attractive(scn.model, initial_total(scn))
    oracle_atoms = None
    exact_u = _exact_repulsive_dirac(scn)
    if attractive and isinstance(scn.initial, AtomicMeasure):
        system = particles.AggregateSystem.create(scn.initial, scn.model)
        final, _ = particles.advance(system, scn.t_end)
        oracle_atoms = final.atoms

    fields = {}
    for n in resolutions:
        snaps = run_pde(scn, n_cells=n)
        fields[n] = snaps[-1].field

    errors = {}
    finest = fields[resolutions[-1]]
    for n in resolutions:
        f = fields[n]
        if oracle_atoms is not None:
            errors[n] = wasserstein1(f, oracle_atoms)
        elif exact_u is not None:
            xs = f.faces
            errors[n] = float(np.trapezoid(np.abs(f.u_faces - exact_u(xs)), xs))
        else:
            if n == resolutions[-1]:
                errors[n] = float("nan")
                continue
            u_ref = np.interp(f.faces, finest.faces, finest.u_faces)
            errors[n] = float(np.trapezoid(np.abs(f.u_faces - u_ref), f.faces))

    rows = []
    prev = None
    for n in resolutions:
        e = errors[n]
        order = None
        if prev is not None and e > 0 and errors[prev] > 0:
            order = math.log2(errors[prev] / e) / math.log2(n / prev)
        rows.append({"n_cells": n, "l1_error": e, "order": order})
        prev = n
    return rows


def initial_total(scn: Scenario) -> float:
    return scn.initial.total_mass


def cmd_convergence(args) -> int:
    scn = load_scenario(args.scenario)
    resolutions = [int(s) for s in args.resolutions.split(",")]
    rows = convergence_table(scn, resolutions)
    out_dir = args.out or scn.out_dir
    _write_csv(os.path.join(out_dir, "convergence.csv"),
               ["n_cells", "l1_error", "order"],
               [(r["n_cells"], r["l1_error"],
                 "" if r["order"] is None else r["order"]) for r in rows])
    print(f"{'n_cells':>8} {'L1 error':>14} {'order':>8}")
    for r in rows:
        order = "" if r["order"] is None else f"{r['order']:.3f}"
        print(f"{r['n_cells']:>8} {r['l1_error']:>14.6e} {order:>8}")
    return 0


def cmd_riemann(args) -> int:
    model = fx.from_dict(json.loads(args.flux))
    u_minus, u_plus = args.u_minus, args.u_plus
    if u_minus >= u_plus:
        raise ScenarioError("riemann requires u_minus < u_plus")
    info = analysis.classify_riemann(model, u_minus, u_plus)
    print(f"admissible speed range: ({info['admissible_low']}, {info['admissible_high']})")
    print(f"selected (Rankine-Hugoniot) speed: {info['selected_speed']}")
    print(f"wave type: {info['wave']}")
    for kind, ua, ub, s in info["segments"]:
        if kind == "shock":
            print(f"  shock {ua} -> {ub}, speed {s}")
        else:
            print(f"  rarefaction {ua} -> {ub}")
    return 0


def cmd_validate(args) -> int:
    scn = load_scenario(args.scenario)
    if args.out:
        scn.out_dir = args.out
    snapshots = run_pde(scn)
    particle_states = None
    if ("w1_vs_particles" in scn.checks
            and isinstance(scn.initial, AtomicMeasure)
            and fx.is_attractive(scn.model, scn.initial.total_mass)):
        particle_states = pair_with_oracle(scn, snapshots)
    report = run_diagnostics(scn, snapshots, particle_states)
    _write_text(os.path.join(scn.out_dir, "diagnostics.json"),
                report.to_json() + "\n")
    for c in report.checks:
        status = "pass" if c.passed else "FAIL"
        print(f"{status} {c.name} t={c.t} value={c.value} bound={c.bound}")
    return 0 if report.all_pass else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualflow",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--engine", choices=("pde", "particles", "both"),
                       default="pde")
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(func=cmd_run)

    p_conv = sub.add_parser("convergence", help="grid-refinement study")
    p_conv.add_argument("--scenario", required=True)
    p_conv.add_argument("--resolutions", required=True,
                        help="comma-separated cell counts, e.g. 100,200,400")
    p_conv.add_argument("--out", default=None)
    p_conv.set_defaults(func=cmd_convergence)

    p_rie = sub.add_parser("riemann", help="classify a Riemann problem")
    p_rie.add_argument("--flux", required=True,
                       help='flux block as JSON, e.g. {"kind": "quadratic-attractive"}')
    p_rie.add_argument("u_minus", type=float)
    p_rie.add_argument("u_plus", type=float)
    p_rie.set_defaults(func=cmd_riemann)

    p_val = sub.add_parser("validate", help="run diagnostics; exit 0 iff all pass")
    p_val.add_argument("--scenario", required=True)
    p_val.add_argument("--out", default=None)
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, fx.FluxError, MeasureError, particles.OracleError,
            analysis.AnalysisError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
