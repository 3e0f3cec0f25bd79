"""Command-line front end.

Exit codes: 0 success, 1 analysis check failed, 2 bad input, 3 resource guard.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import geometry, linalg
from .inference import (
    LikelihoodError, ProblemError, Region, RegionError, SynthesisProblem, free_energy_slope,
)
from .machine import DETECT_A_INPUTS, MachineSpec, SpecError, WindowOverflowError, tm_run, utm_run_cycles
from .noisy import ChartError, LocalChart
from .polynomial import BudgetError, ResourceGuardError
from .propagation import propagate_inputs
from .syndromes import EnumerationGuardError, path_count, weight_one_table

SCHEMA = "tmsl-report/1"
BUILTIN_MACHINES = ("detectA0", "detectA1", "two_branch")
BUILTIN_PROBLEMS = ("detectA_problem", "two_branch_problem")

OK, CHECK_FAILED, INPUT_ERROR, GUARD = 0, 1, 2, 3


class InputError(ValueError):
    pass


class CheckFailed(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    machine: str
    problem: str | None
    t: int | None
    mu: float | None
    kmax: int
    coords: tuple | None
    out: str | None
    seed: int
    backend: str
    threads: int
    inputs: tuple | None = None

    def echo(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def _data_path(name):
    return resources.files("tmsl") / "data" / f"{name}.json"


def _resolve(value, builtins):
    """Builtin names stay names so the provenance header is machine independent."""
    if value in builtins:
        return value
    path = Path(value)
    if not path.is_file():
        raise InputError(f"no such file: {value}")
    return str(path.resolve())


def load_machine(value):
    if value in BUILTIN_MACHINES:
        return MachineSpec.from_dict(json.loads(_data_path(value).read_text()))
    path = Path(value)
    if not path.is_file():
        raise InputError(f"no such machine file: {value}")
    return MachineSpec.load(path)


def load_problem(value, spec, t=None, mu=None):
    if value is None:
        inputs = DETECT_A_INPUTS if set("AB") <= set(spec.alphabet) else ()
        if not inputs:
            raise InputError("--problem is required for this machine")
        doc = {"inputs": list(inputs), "y": {x: spec.states[tm_run(x, spec, t or 2)] for x in inputs},
               "t": t or 2}
    elif value in BUILTIN_PROBLEMS:
        doc = json.loads(_data_path(value).read_text())
    else:
        path = Path(value)
        if not path.is_file():
            raise InputError(f"no such problem file: {value}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{value}: {exc}") from exc
    if t is not None:
        doc["t"] = t
    if mu is not None:
        doc["mu"] = mu
    return SynthesisProblem.from_dict(doc, spec)


def _parse_coords(text, dim=None):
    if text is None:
        return None
    try:
        coords = tuple(int(c) for c in text.split(",") if c.strip())
    except ValueError as exc:
        raise InputError(f"bad --coords {text!r}") from exc
    if not coords:
        raise InputError("empty --coords")
    if dim is not None:
        bad = [c for c in coords if not 1 <= c <= dim]
        if bad:
            raise InputError(f"coordinates {bad} outside 1..{dim}")
    return coords


def frac(v):
    v = Fraction(v)
    return {"num": str(v.numerator), "den": str(v.denominator)}


def header(config):
    from importlib.metadata import PackageNotFoundError, version
    try:
        ver = version("artifact")
    except PackageNotFoundError:
        ver = "unknown"
    return {"schema": SCHEMA, "tool_version": ver, "config": config.echo()}


def _emit(config, name, text):
    if config.out:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_header(config):
    return "# " + json.dumps(header(config), sort_keys=True) + "\n"


# simulate

def cmd_simulate(config, spec):
    t = 2 if config.t is None else config.t
    inputs = config.inputs or (DETECT_A_INPUTS if config.problem is None else
                               load_problem(config.problem, spec, t).inputs)
    lines = [_csv_header(config).rstrip("\n"), "input,direct,utm,status"]
    failed = False
    for x in inputs:
        direct = tm_run(x, spec, t)
        utm = utm_run_cycles(x, spec, t)
        ok = direct == utm
        failed |= not ok
        lines.append(f"{x},{spec.states[direct]},{spec.states[utm]},{'OK' if ok else 'MISMATCH'}")
    _emit(config, "simulate.csv", "\n".join(lines) + "\n")
    if failed:
        raise CheckFailed("direct and simulated runs disagree")


# tables

def cmd_tables(config, spec):
    chart = LocalChart(spec)
    problem = load_problem(config.problem, spec, config.t)
    if problem.t != 2:
        raise InputError("weight-one path tables are defined for t = 2")
    coords = _parse_coords_checked(config, chart.dim) or tuple(range(1, chart.dim + 1))
    width = max(path_count(spec, chart.coords[k - 1].kind) for k in coords)
    cols = [f"e{j + 1}" for j in range(width)]
    lines = [_csv_header(config).rstrip("\n"), ",".join(["coordinate", "label", "input", "correct"] + cols + ["errors", "error_paths"])]
    for k in coords:
        names, table, counts = weight_one_table(spec, k - 1, problem.inputs, chart)
        for x in problem.inputs:
            correct = tm_run(x, spec, 2)
            cells = [spec.states[q] for q in table[x]] + [""] * (width - len(names))
            bad = [f"e{j + 1}" for j, q in enumerate(table[x]) if q != correct]
            lines.append(",".join([str(k), f'"{chart.label(k - 1)}"', x, spec.states[correct]] + cells
                                  + [str(counts[x]), ";".join(bad)]))
    _emit(config, "tables.csv", "\n".join(lines) + "\n")


def _parse_coords_checked(config, dim):
    if config.coords is None:
        return None
    bad = [c for c in config.coords if not 1 <= c <= dim]
    if bad:
        raise InputError(f"coordinates {bad} outside 1..{dim}")
    return config.coords


# geometry

def geometry_report(spec, problem, kmax, threads=1, backend="exact", coords=None, newton_degree=None):
    chart = LocalChart(spec)
    props = propagate_inputs(spec, problem.inputs, problem.t, k_max=kmax, threads=threads)
    table = geometry.InfluenceTable(props, problem.q)
    P = table.weight_one_matrix()
    H = geometry.hessian(P, [problem.q[x] for x in problem.inputs])
    idx, block = geometry.nonzero_block(H)
    report = {
        "machine": spec.to_dict(),
        "problem": problem.to_dict(spec),
        "k_max": kmax,
        "dimension": chart.dim,
        "classical_solution": all(tm_run(x, spec, problem.t) == problem.y[x] for x in problem.inputs),
        "relevant_coordinates": [i + 1 for i in idx],
        "coordinate_labels": {str(i + 1): chart.label(i) for i in idx},
        "P": {"columns": [i + 1 for i in idx], "rows": list(problem.inputs),
              "values": [[str(row[i]) for i in idx] for row in P]},
        "rank": linalg.rank(H),
    }
    if idx:
        c = geometry.matrix_content(block)
        prim = [[v / c for v in row] for row in block]
        spec_ = geometry.spectrum(prim)
        report["hessian_block"] = {
            "scale": frac(c),
            "primitive": [[str(v) for v in row] for row in prim],
            "charpoly": [str(v) for v in spec_.charpoly],
            "zero_multiplicity": spec_.zero_multiplicity,
            "rational_roots": [str(r) for r in spec_.rational_roots],
            "residual_factor": [str(v) for v in spec_.residual_factor],
        }
        if backend == "float":
            eig = np.linalg.eigvalsh(np.array(prim, dtype=float))
            report["hessian_block"]["eigenvalues"] = [float(f"{v:.12g}") for v in eig]
        else:
            report["hessian_block"]["eigenvalues"] = [float(f"{v:.12g}") for v in spec_.eigenvalues()]
            report["hessian_block"]["residual_root_intervals"] = [
                [frac(lo), frac(hi)] for lo, hi in spec_.residual_roots]
        kernel = geometry.hessian_kernel(block)
        report["hessian_block"]["kernel"] = [
            {str(idx[j] + 1): str(v) for j, v in enumerate(vec) if v} for vec in kernel]
    if coords:
        sub = [[H[i - 1][j - 1] for j in coords] for i in coords]
        report["restricted_hessian"] = {"coordinates": list(coords), "values": [[str(v) for v in r] for r in sub]}
    C = geometry.error_correction_order(table, min(kmax, 2)) if kmax >= 1 else None
    report["error_correction_order"] = C
    degree = newton_degree if newton_degree is not None else kmax + 1
    support = geometry.taylor_support(table, degree)
    nb = geometry.newton_bound(support, chart.dim, degree)
    report["newton"] = {
        "support_degree_bound": degree,
        "support_size": len(support),
        "distance": frac(nb.distance) if nb.distance is not None else None,
        "bound_partial": frac(nb.bound) if nb.bound is not None else None,
        "certified_bound": frac(nb.certified_bound) if nb.certified_bound is not None else None,
        "min_support_degree": nb.min_support_degree,
        "universal_bound": frac(geometry.correction_bound(chart.dim, C or 0)),
    }
    return report


def _fmt(d):
    if isinstance(d, dict) and set(d) == {"num", "den"}:
        return d["num"] if d["den"] == "1" else f"{d['num']}/{d['den']}"
    return str(d)


def render_text(report):
    out = []
    out.append(f"dimension d = {report['dimension']}, k_max = {report['k_max']}")
    out.append(f"classical solution: {report['classical_solution']}")
    out.append(f"rank of Hessian: {report['rank']}")
    out.append("relevant coordinates:")
    for k in report["relevant_coordinates"]:
        out.append(f"  {report['coordinate_labels'][str(k)]}")
    P = report["P"]
    out.append("weight-one influence matrix P (nonzero columns):")
    out.append("  " + "input".ljust(8) + " ".join(f"w{c}".rjust(5) for c in P["columns"]))
    for name, row in zip(P["rows"], P["values"]):
        out.append("  " + name.ljust(8) + " ".join(v.rjust(5) for v in row))
    hb = report.get("hessian_block")
    if hb:
        out.append(f"Hessian nonzero block = {_fmt(hb['scale'])} * B with B:")
        for row in hb["primitive"]:
            out.append("  " + " ".join(v.rjust(4) for v in row))
        out.append(f"charpoly(B) = {hb['charpoly']}")
        out.append(f"  zero roots: {hb['zero_multiplicity']}, rational roots: {hb['rational_roots']}, "
                   f"residual factor: {hb['residual_factor']}")
        out.append("eigenvalues of B: " + ", ".join(f"{v:.6f}" for v in hb["eigenvalues"]))
        out.append("kernel of the block:")
        for vec in hb["kernel"]:
            out.append("  " + " + ".join(f"({v}) e{k}" for k, v in vec.items()))
    if "restricted_hessian" in report:
        r = report["restricted_hessian"]
        out.append(f"Hessian restricted to {r['coordinates']}: {r['values']}")
    out.append(f"error-correction order C = {report['error_correction_order']}")
    nb = report["newton"]
    out.append(f"Newton distance over support of degree <= {nb['support_degree_bound']} "
               f"({nb['support_size']} points): {_fmt(nb['distance'])}")
    out.append(f"  bound 1/l valid only for the known support: {_fmt(nb['bound_partial'])}")
    out.append(f"  certified bound d/(least support degree): {_fmt(nb['certified_bound'])}")
    out.append(f"  universal bound d/(2(C+1)): {_fmt(nb['universal_bound'])}")
    return "\n".join(out) + "\n"


def cmd_geometry(config, spec):
    problem = load_problem(config.problem, spec, config.t)
    chart = LocalChart(spec)
    coords = _parse_coords_checked(config, chart.dim)
    report = geometry_report(spec, problem, config.kmax, config.threads, config.backend, coords)
    doc = {**header(config), "report": report}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if config.out:
        _emit(config, "geometry.json", text)
        _emit(config, "geometry.txt", render_text(report))
    else:
        sys.stdout.write(render_text(report))


# free energy

def cmd_free_energy(config, spec, n_grid, samples, replicates, width):
    problem = load_problem(config.problem, spec, config.t, config.mu)
    chart = LocalChart(spec)
    coords = _parse_coords_checked(config, chart.dim)
    if not coords:
        raise InputError("--coords is required for free-energy (at most 3)")
    if len(coords) > 3:
        raise InputError("free-energy slices are limited to 3 coordinates")
    region = Region.box({k - 1: (0.0, width) for k in coords})
    fit = free_energy_slope(region, problem, spec, n_grid, samples, replicates, config.seed, config.threads)
    text = _csv_header(config)
    text += f"# slice: {', '.join(chart.label(k - 1) for k in coords)} in [0, {width}]\n"
    text += f"# slope {fit.slope:.6f} ci [{fit.ci[0]:.6f}, {fit.ci[1]:.6f}] r2 {fit.r_squared:.4f} replicates {fit.replicates}\n"
    text += fit.to_csv()
    _emit(config, "free_energy.csv", text)


def build_parser():
    p = argparse.ArgumentParser(prog="tmsl", description="Noisy Turing machine geometry toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--machine", default="detectA0", help="machine JSON path or builtin name")
        sp.add_argument("--problem", default=None, help="problem JSON path or builtin name")
        sp.add_argument("--t", type=int, default=None)
        sp.add_argument("--mu", type=float, default=None)
        sp.add_argument("--kmax", type=int, default=2)
        sp.add_argument("--coords", default=None, help="comma separated 1-based chart coordinates")
        sp.add_argument("--backend", choices=("exact", "float"), default="exact")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output directory (default stdout)")
        sp.add_argument("--threads", type=int, default=None)

    s = sub.add_parser("simulate", help="run a machine directly and through the simulator")
    common(s)
    s.add_argument("--input", action="append", dest="inputs")
    common(sub.add_parser("geometry", help="Hessian, spectrum, kernel and bounds"))
    common(sub.add_parser("tables", help="weight-one path tables as CSV"))
    f = sub.add_parser("free-energy", help="free-energy slope on a chart slice")
    common(f)
    f.add_argument("--n-grid", default="100,1000,10000")
    f.add_argument("--samples", type=int, default=100000)
    f.add_argument("--replicates", type=int, default=50)
    f.add_argument("--width", type=float, default=1.0)
    return p


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("TMSL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InputError(f"bad TMSL_THREADS {env!r}") from exc
    return 1


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.kmax < 0:
            raise InputError("--kmax must be nonnegative")
        if args.t is not None and args.t < 0:
            raise InputError("--t must be nonnegative")
        config = RunConfig(
            command=args.command,
            machine=_resolve(args.machine, BUILTIN_MACHINES),
            problem=None if args.problem is None else _resolve(args.problem, BUILTIN_PROBLEMS),
            t=args.t, mu=args.mu, kmax=args.kmax, coords=_parse_coords(args.coords),
            out=args.out, seed=args.seed, backend=args.backend, threads=_threads(args),
            inputs=tuple(args.inputs) if getattr(args, "inputs", None) else None,
        )
        spec = load_machine(config.machine)
        if config.command == "simulate":
            cmd_simulate(config, spec)
        elif config.command == "tables":
            cmd_tables(config, spec)
        elif config.command == "geometry":
            cmd_geometry(config, spec)
        else:
            try:
                n_grid = tuple(int(v) for v in args.n_grid.split(","))
            except ValueError as exc:
                raise InputError(f"bad --n-grid {args.n_grid!r}") from exc
            cmd_free_energy(config, spec, n_grid, args.samples, args.replicates, args.width)
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return CHECK_FAILED
    except (BudgetError, ResourceGuardError, EnumerationGuardError, WindowOverflowError) as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return GUARD
    except (InputError, SpecError, ProblemError, ChartError, RegionError, LikelihoodError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    return OK


if __name__ == "__main__":
    sys.exit(main())
