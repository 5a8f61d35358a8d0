"""Configuration-driven benchmark runner: uniform p-sweeps and adaptive
p-refinement on manufactured solutions, emitting CSV tables and a plain-text
report.

Exit codes: 0 success, 2 validation error, 3 solver failure, 4 stagnation.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .benchmarks import get_benchmark
from .errors import JacobiFemError, ParameterError, SolverError
from .estimator import EstimatorParams, compute_indicators, effectivity, error_surrogate
from .fem import assemble, solve
from .mesh import (
    ParallelogramMesh,
    l_shaped_mesh_dict,
    load_and_validate,
    rect_mesh_dict,
    smooth_degrees,
    uniform_degrees,
)

SWEEP_HEADER = "p,dofs,energy_err,tilde_err,eta,osc,effectivity"
ADAPTIVE_HEADER = "iter,pmax,dofs,tilde_err,eta,osc"


@dataclass
class RunConfig:
    benchmark: str
    mesh: str = ""
    delta: float = 0.1
    p0: int = 2
    max_degree: int = 8
    mode: str = "uniform"
    theta: float = 0.5
    outdir: str = "."
    eta_target: float = 1e-8
    quad_boost: int = 3

    def validate(self) -> "RunConfig":
        if self.benchmark not in ("smooth-sine", "bubble-exact", "corner-cutoff"):
            raise ParameterError(f"unknown benchmark {self.benchmark!r}")
        if self.p0 < 2:
            raise ParameterError(f"p0 must be >= 2 (degree floor), got {self.p0}")
        if self.max_degree < self.p0:
            raise ParameterError("max_degree must be >= p0")
        if not 0.0 < self.theta <= 1.0:
            raise ParameterError(f"theta must lie in (0, 1], got {self.theta}")
        if self.mode not in ("uniform", "adaptive"):
            raise ParameterError(f"mode must be 'uniform' or 'adaptive', got {self.mode!r}")
        EstimatorParams(delta=self.delta)  # range check
        return self


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_config(path) -> RunConfig:
    """Read a run configuration: JSON (first non-blank char '{') or
    'key = value' lines with '#' comments."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
    else:
        data = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"config line {lineno} is not 'key = value': {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            data[key] = value
    kwargs = {}
    for key, value in data.items():
        if key not in _FIELD_TYPES:
            raise ParameterError(f"unknown config key {key!r}")
        ftype = _FIELD_TYPES[key]
        if ftype in ("int", int):
            kwargs[key] = int(value)
        elif ftype in ("float", float):
            kwargs[key] = float(value)
        else:
            kwargs[key] = str(value)
    if "benchmark" not in kwargs:
        raise ParameterError("config must set 'benchmark'")
    return RunConfig(**kwargs).validate()


_BUILTIN_MESHES = {
    "builtin:square1": lambda: rect_mesh_dict(1, 1),
    "builtin:square2x2": lambda: rect_mesh_dict(2, 2),
    "builtin:square4x4": lambda: rect_mesh_dict(4, 4),
    "builtin:bubble1": lambda: rect_mesh_dict(1, 1, x0=-1.0, y0=-1.0, width=2.0, height=2.0),
    "builtin:lshape": lambda: l_shaped_mesh_dict(4),
    "builtin:lshape-coarse": lambda: l_shaped_mesh_dict(2),
}


def build_mesh(config: RunConfig) -> ParallelogramMesh:
    spec = config.mesh
    if not spec:
        return load_and_validate(get_benchmark(config.benchmark).default_mesh)
    if spec in _BUILTIN_MESHES:
        return load_and_validate(_BUILTIN_MESHES[spec]())
    return load_and_validate(spec)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_degrees(path: Path, degrees: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("element,p\n")
        for k, p in enumerate(degrees):
            fh.write(f"{k},{int(p)}\n")


def _solve_and_estimate(mesh, degrees, bench, params, config):
    system = assemble(mesh, degrees, bench.f, quad_order_boost=config.quad_boost)
    sol = solve(system)
    report = compute_indicators(sol, bench.f, params)
    sur = error_surrogate(sol, bench.u, bench.grad_u, params)
    report.effectivity = effectivity(report.eta, sur.tilde)
    return sol, report, sur


def run_uniform_sweep(config: RunConfig, outdir=None):
    """Solve/estimate for p = p0..max_degree; returns the sweep rows."""
    config.validate()
    outdir = Path(outdir if outdir is not None else config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    bench = get_benchmark(config.benchmark)
    mesh = build_mesh(config)
    params = EstimatorParams(delta=config.delta)
    rows = []
    failure = None
    degrees = uniform_degrees(mesh, config.p0)
    for p in range(config.p0, config.max_degree + 1):
        degrees = uniform_degrees(mesh, p)
        try:
            sol, report, sur = _solve_and_estimate(mesh, degrees, bench, params, config)
        except SolverError as exc:
            failure = (p, str(exc))
            break
        rows.append((p, sol.n_dofs, sur.energy, sur.tilde, report.eta,
                     report.osc, report.effectivity))
    _write_csv(outdir / "sweep.csv", SWEEP_HEADER, rows)
    _write_degrees(outdir / "degrees.csv", degrees)
    _write_report(outdir / "report.txt", config, rows, SWEEP_HEADER, failure=failure)
    if failure is not None:
        raise SolverError(f"sweep aborted at p = {failure[0]}: {failure[1]}")
    return rows


def dorfler_mark(eta_K: np.ndarray, theta: float) -> np.ndarray:
    """Smallest element set (by count, largest indicators first) whose squared
    indicators reach the fraction theta^2 of the total."""
    eta_sq = np.asarray(eta_K, dtype=float) ** 2
    total = float(eta_sq.sum())
    if total <= 0.0:
        return np.zeros(0, dtype=int)
    order = np.argsort(-eta_sq, kind="stable")
    cum = np.cumsum(eta_sq[order])
    target = theta**2 * total * (1.0 - 1e-12)
    count = int(np.searchsorted(cum, target) + 1)
    return np.sort(order[:count])


def run_adaptive(config: RunConfig, outdir=None):
    """Solve/estimate/mark/increment loop with degree smoothing.

    Terminates on eta <= eta_target, the degree cap, or stagnation (no eta
    decrease for three consecutive iterations); returns rows, the final degree
    map and the stop reason.  The loop is best-effort: nothing guarantees eta
    decreases monotonically, so stagnation is flagged rather than fatal.
    """
    config.validate()
    outdir = Path(outdir if outdir is not None else config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    bench = get_benchmark(config.benchmark)
    mesh = build_mesh(config)
    params = EstimatorParams(delta=config.delta)
    degrees = uniform_degrees(mesh, config.p0)
    rows = []
    failure = None
    stop = "degree-cap"
    best_eta = np.inf
    stall = 0
    iteration = 0
    while True:
        try:
            sol, report, sur = _solve_and_estimate(mesh, degrees, bench, params, config)
        except SolverError as exc:
            failure = (iteration, str(exc))
            break
        rows.append((iteration, int(degrees.max()), sol.n_dofs, sur.tilde,
                     report.eta, report.osc))
        if report.eta <= config.eta_target:
            stop = "eta-target"
            break
        if report.eta < best_eta * (1.0 - 1e-12):
            best_eta = report.eta
            stall = 0
        else:
            stall += 1
            if stall >= 3:
                stop = "stagnation"
                break
        if degrees.max() >= config.max_degree:
            stop = "degree-cap"
            break
        marked = dorfler_mark(report.eta_K, config.theta)
        degrees = degrees.copy()
        degrees[marked] += 1
        degrees = smooth_degrees(mesh, degrees)
        iteration += 1
    _write_csv(outdir / "adaptive.csv", ADAPTIVE_HEADER, rows)
    _write_degrees(outdir / "degrees.csv", degrees)
    _write_report(outdir / "report.txt", config, rows, ADAPTIVE_HEADER,
                  failure=failure, stop=stop, degrees=degrees)
    if failure is not None:
        raise SolverError(f"adaptive run aborted at iteration {failure[0]}: {failure[1]}")
    return rows, degrees, stop


def _write_report(path: Path, config: RunConfig, rows, header, failure=None,
                  stop=None, degrees=None) -> None:
    lines = ["jacobifem run report", "=" * 40, "", "configuration:"]
    for f in fields(RunConfig):
        lines.append(f"  {f.name} = {getattr(config, f.name)}")
    lines.append("")
    lines.append(header.replace(",", "  "))
    for row in rows:
        lines.append("  ".join(_fmt(v) for v in row))
    lines.append("")
    if config.mode == "uniform" or stop is None:
        effs = [row[-1] for row in rows if np.isfinite(row[-1])]
        if effs:
            lines.append(f"effectivity range: [{min(effs):.6g}, {max(effs):.6g}]")
        errs = [row[3] for row in rows]
        monotone = all(b <= a * (1.0 + 1e-12) for a, b in zip(errs, errs[1:]))
        lines.append(f"tilde error monotone decreasing: {'yes' if monotone else 'NO'}")
    else:
        lines.append(f"stop reason: {stop}")
        etas = [row[4] for row in rows]
        monotone = all(b <= a * (1.0 + 1e-12) for a, b in zip(etas, etas[1:]))
        lines.append(f"eta non-increasing: {'yes' if monotone else 'NO (flagged, not fatal)'}")
        if degrees is not None:
            lines.append(
                f"final degrees: min {int(np.min(degrees))}, max {int(np.max(degrees))}"
            )
        lines.append("note: the adaptive loop is best-effort engineering; the marking")
        lines.append("and increment strategy carries no convergence guarantee.")
    if failure is not None:
        lines.append(f"SOLVER FAILURE at step {failure[0]}: {failure[1]}")
    lines.append("")
    path.write_text("\n".join(lines))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="jacobifem",
                                     description="p-FEM benchmark runner")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run a benchmark described by a config file")
    runp.add_argument("--config", required=True, help="path to a key=value or JSON config")
    args = parser.parse_args(argv)

    try:
        config = parse_config(args.config)
    except (OSError, json.JSONDecodeError, ParameterError, ValueError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    try:
        if config.mode == "uniform":
            run_uniform_sweep(config)
        else:
            _, _, stop = run_adaptive(config)
            if stop == "stagnation":
                print("warning: adaptive loop stagnated", file=sys.stderr)
                return 4
    except SolverError as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return 3
    except JacobiFemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
