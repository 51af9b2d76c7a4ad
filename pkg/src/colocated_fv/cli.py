"""Command-line interface: ``run``, ``verify``, ``convergence`` and ``mesh-info``.

Exit codes: 0 success, 1 usage/configuration error or failed checks,
2 solver failure during ``run``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import analytic as an
from . import fields as fld
from . import verify as vf
from .mesh import MeshError, build_equilateral_mesh, read_triangle_files, refine_uniform, validate
from .output import DiagnosticsWriter, VTKSnapshots, fmt
from .problems import PROBLEMS, make_problem
from .scheme import CompatibilityError, SchemeConfig, run, with_problem
from .solver import SolverConfig

SUITES = ("identities", "orders", "inverse", "infsup", "stability", "all")
CONVERGENCE_PROBLEMS = ("gradient", "projection", "convection", "manufactured")


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- run ----------------------------------------------------------------------

_KEYS = {
    "mesh": {"node", "ele", "rows", "cols", "side", "refine"},
    "problem": {"name", "amplitude"},
    "scheme": {"reynolds", "dt", "t_end", "output_every"},
    "solver": {"rel_tol", "abs_tol", "max_iters", "preconditioner", "momentum_preconditioner"},
    "output": {"directory", "vtk"},
}


def _get(cp, section, key, conv, default):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r}") from None


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(s)


def load_run_config(path):
    """Parse an INI run configuration into ``(mesh, SchemeConfig, outdir, vtk)``."""
    path = Path(path)
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for section in cp.sections():
        if section not in _KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp.options(section):
            if key not in _KEYS[section]:
                raise ConfigError(f"unknown key {section}.{key}")

    base = path.parent
    if cp.has_option("mesh", "node") or cp.has_option("mesh", "ele"):
        if not (cp.has_option("mesh", "node") and cp.has_option("mesh", "ele")):
            raise ConfigError("mesh.node and mesh.ele must be given together")
        node = base / cp.get("mesh", "node")
        ele = base / cp.get("mesh", "ele")
        for p in (node, ele):
            if not p.is_file():
                raise ConfigError(f"mesh file not found: {p}")
        try:
            m = read_triangle_files(node, ele)
        except MeshError as exc:
            raise ConfigError(f"mesh: {exc}") from None
        domain = None
    else:
        rows = _get(cp, "mesh", "rows", int, 4)
        cols = _get(cp, "mesh", "cols", int, 4)
        side = _get(cp, "mesh", "side", float, 0.25)
        if rows < 1 or cols < 1:
            raise ConfigError("mesh.rows and mesh.cols must be >= 1")
        if not side > 0:
            raise ConfigError("mesh.side must be positive")
        m = build_equilateral_mesh(rows, cols, side)
        domain = an.rhombus_map(rows, cols, side)
    refine = _get(cp, "mesh", "refine", int, 0)
    if refine < 0:
        raise ConfigError("mesh.refine must be >= 0")
    if domain is None:
        domain = vf.domain_map(m)
    for _ in range(refine):
        m = refine_uniform(m)
    report = validate(m)
    if not report.passed:
        raise ConfigError("mesh fails validation: " + "; ".join(report.failures))

    name = _get(cp, "problem", "name", str, "forced").strip()
    amplitude = _get(cp, "problem", "amplitude", float, 10.0)
    reynolds = _get(cp, "scheme", "reynolds", float, 1.0)
    dt = _get(cp, "scheme", "dt", float, 0.01)
    t_end = _get(cp, "scheme", "t_end", float, 0.1)
    every = _get(cp, "scheme", "output_every", int, 1)
    if name not in PROBLEMS:
        raise ConfigError(f"problem.name: unknown problem {name!r} (choose from {', '.join(PROBLEMS)})")
    for key, val in (("reynolds", reynolds), ("dt", dt)):
        if not (np.isfinite(val) and val > 0):
            raise ConfigError(f"scheme.{key}: must be positive, got {val!r}")
    if not (np.isfinite(t_end) and t_end >= dt):
        raise ConfigError(f"scheme.t_end: must be >= dt, got {t_end!r}")
    try:
        solver = SolverConfig(
            rel_tol=_get(cp, "solver", "rel_tol", float, 1e-12),
            abs_tol=_get(cp, "solver", "abs_tol", float, 1e-14),
            max_iters=_get(cp, "solver", "max_iters", int, None),
            preconditioner=_get(cp, "solver", "preconditioner", str, "none").strip())
        mom = SolverConfig(rel_tol=solver.rel_tol, abs_tol=solver.abs_tol,
                           max_iters=solver.max_iters,
                           preconditioner=_get(cp, "solver", "momentum_preconditioner", str,
                                               "diagonal").strip())
        cfg = SchemeConfig(reynolds=reynolds, dt=dt, t_end=t_end, solver=solver,
                           momentum_solver=mom, output_every=every)
        problem = make_problem(name, domain, reynolds, amplitude)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = with_problem(cfg, problem)
    outdir = Path(_get(cp, "output", "directory", str, "output"))
    if not outdir.is_absolute():
        outdir = base / outdir
    vtk = _get(cp, "output", "vtk", _bool, True)
    return m, cfg, outdir, vtk


def cmd_run(args) -> int:
    try:
        m, cfg, outdir, vtk = load_run_config(args.config)
        outdir.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"config error: cannot create output directory: {exc}", file=sys.stderr)
        return 1
    with DiagnosticsWriter(outdir / "diagnostics.csv") as diag:
        sinks = [diag]
        if vtk:
            sinks.append(VTKSnapshots(outdir, m))
        try:
            res = run(cfg, m, sinks)
        except CompatibilityError as exc:
            print(f"solver failure: {exc}", file=sys.stderr)
            return 2
    for w in res.state.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if res.failure is not None:
        print(f"solver failure: {res.failure}", file=sys.stderr)
        return 2
    print(f"steps={res.state.step} triangles={m.n_triangles} h={fmt(m.h)}")
    print(f"max energy monitor      {fmt(res.max_energy)}")
    print(f"max increment rate      {fmt(res.max_increment)}")
    print(f"pressure monitor        {fmt(res.max_pressure_sum)}")
    print(f"max |div_h u|           {fmt(res.max_div)}")
    print(f"wrote {outdir / 'diagnostics.csv'}")
    return 0


# -- verify -------------------------------------------------------------------

def run_suite(suite: str, rows: int = 4, cols: int = 4, side: float = 0.25, seed: int = 0,
              mesh=None) -> list:
    """Results of a named suite; ``mesh`` replaces the equilateral generator."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    base = build_equilateral_mesh(rows, cols, side) if mesh is None else mesh
    parts = SUITES[:-1] if suite == "all" else (suite,)
    out = []
    for part in parts:
        if part == "identities":
            out += vf.check_identities(base, seed)
        elif part == "orders":
            out += vf.measure_orders(vf.refine_family(base, 5))
        elif part == "inverse":
            out += vf.measure_inverse_constants(vf.refine_family(base, 4), seed)
        elif part == "infsup":
            out += vf.measure_infsup(vf.refine_family(base, 3), seed)
        elif part == "stability":
            spec = vf.SweepSpec(rows=rows, cols=cols, side=side)
            out += vf.stability_sweep(spec, base=mesh)
    return out


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return 1
    mesh = None
    if args.node or args.ele:
        if not (args.node and args.ele):
            print("--node and --ele must be given together", file=sys.stderr)
            return 1
        try:
            mesh = read_triangle_files(args.node, args.ele)
        except (OSError, MeshError) as exc:
            print(f"mesh error: {exc}", file=sys.stderr)
            return 1
    try:
        results = run_suite(args.suite, args.rows, args.cols, args.side, args.seed, mesh)
    except vf.HypothesisError as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return 1
    except (ValueError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    src = (f"node={args.node} ele={args.ele}" if mesh is not None
           else f"rows={args.rows} cols={args.cols} side={fmt(args.side)}")
    lines = [f"# verify suite={args.suite} seed={args.seed} {src}"]
    lines += [r.line() for r in results]
    n_pass = sum(r.passed for r in results)
    lines.append(f"# {n_pass}/{len(results)} checks passed")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.report:
        Path(args.report).write_text(text)
    return 0 if n_pass == len(results) else 1


# -- convergence --------------------------------------------------------------

def _orders(h, e):
    out = [""]
    for i in range(1, len(e)):
        if e[i] > 0 and e[i - 1] > 0:
            out.append(fmt(np.log(e[i - 1] / e[i]) / np.log(h[i - 1] / h[i])))
        else:
            out.append("")
    return out


def convergence_table(problem: str, levels: int, rows: int = 2, cols: int = 2,
                      side: float = 0.5, reynolds: float = 1.0, t_end: float = 0.2,
                      dt0: float = 0.05):
    """Header and rows of a convergence study over uniform refinements."""
    if problem not in CONVERGENCE_PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}")
    if levels < 3:
        raise ValueError("at least 3 levels are needed to observe an order")
    domain = an.rhombus_map(rows, cols, side)
    meshes = vf.uniform_family(rows, cols, side, levels)
    h = [m.h for m in meshes]
    if problem == "gradient":
        tf = vf.gradient_test_functions(domain)
        names = list(tf)
        errs = [list(vf.gradient_errors(tf[n], meshes).values) for n in names]
        header = ["level", "h", "k"] + [f"error_{i + 1}" for i in range(len(names))] \
            + [f"order_{i + 1}" for i in range(len(names))]
        cols_ = errs
        ks = [""] * levels
    elif problem == "projection":
        f = an.scalar_field(vf._sin2_product(domain))
        cols_ = [list(vf.projection_errors(f, meshes).values)]
        header = ["level", "h", "k", "error", "order"]
        ks = [""] * levels
    elif problem == "convection":
        cols_ = [list(vf.convection_errors(domain, meshes).values)]
        header = ["level", "h", "k", "error", "order"]
        ks = [""] * levels
    else:
        prob = make_problem("manufactured", domain, reynolds)
        eu, ep, ks = [], [], []
        for i, m in enumerate(meshes):
            dt = dt0 / 2**i
            cfg = with_problem(SchemeConfig(reynolds=reynolds, dt=dt, t_end=t_end), prob)
            res = run(cfg, m)
            if res.failure:
                raise RuntimeError(res.failure)
            t = res.state.step * dt
            eu.append(fld.l2_error_p0(prob.exact_velocity, res.state.u_curr, m, t))
            exact_p = prob.exact_pressure(m.edge_midpoints, t)
            p = fld.project_p1nc_from_p0(fld.mean_zero(res.state.p_curr, m), m)
            ep.append(fld.norm_p1nc(p - exact_p, m))
            ks.append(fmt(dt))
        cols_ = [eu, ep]
        header = ["level", "h", "k", "velocity_error", "pressure_p1nc_error",
                  "velocity_order", "pressure_order"]
    orders = [_orders(h, e) for e in cols_]
    rows_out = []
    for i in range(levels):
        rows_out.append([str(i), fmt(h[i]), ks[i]] + [fmt(e[i]) for e in cols_]
                        + [o[i] for o in orders])
    return header, rows_out


def cmd_convergence(args) -> int:
    if args.levels < 3:
        print("convergence needs --levels >= 3", file=sys.stderr)
        return 1
    if args.problem not in CONVERGENCE_PROBLEMS:
        print(f"unknown problem {args.problem!r}; choose from {', '.join(CONVERGENCE_PROBLEMS)}",
              file=sys.stderr)
        return 1
    header, rows = convergence_table(args.problem, args.levels, args.rows, args.cols, args.side,
                                     args.reynolds, args.t_end, args.dt)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    sys.stdout.write(buf.getvalue())
    return 0


# -- mesh-info ----------------------------------------------------------------

def cmd_mesh_info(args) -> int:
    try:
        m = read_triangle_files(args.node, args.ele)
    except (OSError, MeshError) as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return 1
    rep = validate(m)
    print(f"vertices              {m.n_vertices}")
    print(f"triangles             {m.n_triangles}")
    print(f"edges                 {m.n_edges} ({len(m.interior_edges)} interior, "
          f"{len(m.boundary_edges)} boundary)")
    print(f"h (max circumradius)  {m.h:.6e}")
    print(f"total area            {m.total_area:.6e}")
    print(f"uniform               {'yes' if vf.is_uniform(m) else 'no'}")
    print(rep.summary())
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="colocated-fv", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a simulation from an INI config")
    r.add_argument("--config", required=True)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", default="all", help=f"one of {', '.join(SUITES)}")
    v.add_argument("--rows", type=int, default=4)
    v.add_argument("--cols", type=int, default=4)
    v.add_argument("--side", type=float, default=0.25)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--node")
    v.add_argument("--ele")
    v.add_argument("--report", help="also write the report to this file")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("convergence", help="print a convergence table as CSV")
    c.add_argument("--levels", type=int, default=4)
    c.add_argument("--problem", default="gradient", help=f"one of {', '.join(CONVERGENCE_PROBLEMS)}")
    c.add_argument("--rows", type=int, default=2)
    c.add_argument("--cols", type=int, default=2)
    c.add_argument("--side", type=float, default=0.5)
    c.add_argument("--reynolds", type=float, default=1.0)
    c.add_argument("--t-end", type=float, default=0.2)
    c.add_argument("--dt", type=float, default=0.05, help="time step on the coarsest level")
    c.set_defaults(func=cmd_convergence)

    mi = sub.add_parser("mesh-info", help="load and validate a Triangle mesh")
    mi.add_argument("--node", required=True)
    mi.add_argument("--ele", required=True)
    mi.set_defaults(func=cmd_mesh_info)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
