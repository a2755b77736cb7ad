"""Unified command line: bulk, solve, deflate, stability, continue, metric,
asymptotics and reproduce subcommands.

Every run directory receives a manifest.json with the full configuration,
tool version and timings, sufficient to re-execute the run.  Data is emitted
as CSV with header rows at full double precision; plotting is left to
external one-liners (see README).
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import io as fio
from .bulk import ModelParams, bulk_critical_points
from .deflation import default_guess_suite, discover_solutions, named_guess
from .discretization import FieldState, energy, make_mesh
from .runtime import worker_count
from .solver import SolveOptions, newton_solve
from .stability import hessian_spectrum

_FMT = "%.17g"


def _add_mesh_args(p):
    p.add_argument("--n-cells", type=int, default=1000)
    p.add_argument("--xi", type=float, default=1.0)


def _params(args, l=None) -> ModelParams:
    l = args.l if l is None else l
    return ModelParams.isotropic(l, args.c, getattr(args, "xi", 1.0))


def _emit(path: str | None, header: str, rows) -> None:
    text = header + "\n" + "\n".join(rows) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_bulk(args) -> int:
    cs = [args.c]
    if args.sweep:
        c0, c1, n = args.sweep.split(":")
        cs = list(np.linspace(float(c0), float(c1), int(n)))
    rows = []
    for c in cs:
        params = ModelParams(l1=1.0, l2=1.0, c=c, xi=args.xi)
        for p in bulk_critical_points(params):
            rows.append(",".join([
                _FMT % c, p.label, p.parity, _FMT % p.rho, _FMT % p.sigma, _FMT % p.energy,
            ]))
    out = os.path.join(args.out, "bulk.csv") if args.out else None
    _emit(out, "c,branch,parity,rho,sigma,energy", rows)
    if args.out:
        fio.write_manifest(args.out, vars(args) | {"command": "bulk"})
    return 0


def cmd_solve(args) -> int:
    params = _params(args)
    mesh = make_mesh(args.n_cells)
    system = "or" if getattr(args, "or_system") else "full"
    if os.path.exists(args.guess):
        guess = fio.read_solution(args.guess)
    else:
        guess = named_guess(mesh, params, system, args.guess)
    t0 = time.perf_counter()
    report = newton_solve(guess, params)
    elapsed = time.perf_counter() - t0
    if not report.converged:
        print(f"solve did not converge: {report.diagnostic}", file=sys.stderr)
        return 1
    state = report.final_state
    spec = hessian_spectrum(state, params)
    fio.write_solution(args.out, "solution", state, params, energy(state, params),
                       eigenvalues=spec.smallest_eigenvalues, stability=spec.verdict)
    fio.write_manifest(args.out, vars(args) | {"command": "solve"},
                       {"solve_seconds": elapsed, "iterations": report.iterations})
    print(f"converged in {report.iterations} iterations; verdict: {spec.verdict}")
    return 0


def cmd_deflate(args) -> int:
    params = _params(args)
    mesh = make_mesh(args.n_cells)
    system = "or" if args.or_system else "full"
    suite = default_guess_suite(mesh, params, system, seed=args.seed)
    t0 = time.perf_counter()
    solutions = discover_solutions(params, system, suite, budget=args.budget)
    elapsed = time.perf_counter() - t0
    index = []
    for k, state in enumerate(solutions):
        e = energy(state, params)
        spec = hessian_spectrum(state, params)
        fio.write_solution(args.out, f"solution_{k:02d}", state, params, e,
                           eigenvalues=spec.smallest_eigenvalues, stability=spec.verdict)
        index.append({"name": f"solution_{k:02d}", "energy": e, "stability": spec.verdict})
    with open(os.path.join(args.out, "index.json"), "w", encoding="utf-8") as fh:
        json.dump({"count": len(solutions), "solutions": index}, fh, indent=2)
        fh.write("\n")
    fio.write_manifest(args.out, vars(args) | {"command": "deflate"},
                       {"seconds": elapsed})
    print(f"found {len(solutions)} solutions")
    return 0


def cmd_stability(args) -> int:
    paths = sorted(glob.glob(os.path.join(args.indir, "*.csv")))
    done = 0
    for csv_path in paths:
        sidecar = csv_path[:-4] + ".json"
        if not os.path.exists(sidecar):
            continue
        with open(sidecar, encoding="utf-8") as fh:
            meta = json.load(fh)
        params = ModelParams(**meta["params"])
        state = fio.read_solution(csv_path)
        spec = hessian_spectrum(state, params)
        fio.update_sidecar(sidecar,
                           eigenvalues=[float(v) for v in spec.smallest_eigenvalues],
                           stability=spec.verdict)
        done += 1
    print(f"updated {done} sidecars")
    return 0 if done else 1


def cmd_continue(args) -> int:
    from .continuation import continue_in_l, diagram_emit

    a, b = (float(v) for v in args.l_range.split(":"))
    system = "or" if args.or_system else "full"
    t0 = time.perf_counter()
    branches, events = continue_in_l(args.c, a, b, args.step, system=system,
                                     n_cells=args.n_cells, xi=args.xi)
    elapsed = time.perf_counter() - t0
    diagram_emit(branches, events, args.out)
    if args.dump_states:
        for branch in branches:
            for p in branch.points:
                name = f"branch{branch.id:02d}_l{p.l:.6f}"
                fio.write_solution(os.path.join(args.out, "states"), name, p.state,
                                   ModelParams.isotropic(p.l, args.c, args.xi),
                                   p.energy, stability=p.verdict)
    fio.write_manifest(args.out, vars(args) | {"command": "continue"},
                       {"seconds": elapsed})
    print(f"{len(branches)} branches, {len(events)} events")
    return 0


def cmd_metric(args) -> int:
    from .gamma_metric import (REFERENCE_COST_TARGETS, boundary_plane_states,
                               bulk_plane_minima, transition_cost)

    pstar, pstar2 = bulk_plane_minima(args.c)
    pb = boundary_plane_states()
    points = {"p*": pstar, "p**": pstar2, "pb(-1)": pb[-1], "pb(1)": pb[1]}
    if args.pairs == "all":
        keys = list(REFERENCE_COST_TARGETS)
    else:
        keys = args.pairs.split(",")
    jobs = []
    for key in keys:
        a, b = key.split(":")
        jobs.append((key, points[a], points[b]))
    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(
            lambda job: (job[0], transition_cost(job[1], job[2], args.c, grid_n=args.grid)),
            jobs,
        ))
    elapsed = time.perf_counter() - t0
    rows = [f"{key},{_FMT % tc.cost}" for key, tc in results]
    out = os.path.join(args.out, "costs.csv") if args.out else None
    _emit(out, "pair,cost", rows)
    if args.out:
        for key, tc in results:
            safe = key.replace("*", "s").replace(":", "_").replace("(", "").replace(")", "")
            path_rows = [f"{_FMT % q},{_FMT % m}" for q, m in tc.path.nodes]
            _emit(os.path.join(args.out, f"path_{safe}.csv"), "Q11,M1", path_rows)
        fio.write_manifest(args.out, vars(args) | {"command": "metric"},
                           {"seconds": elapsed})
    return 0


def cmd_asymptotics(args) -> int:
    from .asymptotics import expansion_gaps

    order = {"order0": 0, "order1": 1, "order2": 2}[args.study]
    c_grid = np.geomspace(args.c_min, args.c_max, args.n_points)
    t0 = time.perf_counter()
    gaps = expansion_gaps(c_grid, n_cells=args.n_cells)[order]
    slope = float(np.polyfit(np.log(c_grid), np.log(gaps), 1)[0])
    elapsed = time.perf_counter() - t0
    rows = [f"{_FMT % c},{_FMT % g}" for c, g in zip(c_grid, gaps)]
    _emit(os.path.join(args.out, f"{args.study}_gaps.csv"), "c,gap", rows)
    with open(os.path.join(args.out, f"{args.study}_slope.json"), "w", encoding="utf-8") as fh:
        json.dump({"study": args.study, "slope": slope}, fh, indent=2)
        fh.write("\n")
    fio.write_manifest(args.out, vars(args) | {"command": "asymptotics"},
                       {"seconds": elapsed})
    print(f"{args.study}: slope {slope:.3f}")
    return 0


def _reproduce_pipelines():
    """figure id -> (description, callable(outdir) )"""

    def fig1(outdir):
        ns = argparse.Namespace(c=1.0, xi=1.0, sweep="0.01:3.0:60", out=outdir)
        return cmd_bulk(ns)

    def fig3(outdir):
        rc = 0
        for study in ("order0", "order1", "order2"):
            ns = argparse.Namespace(study=study, c_min=1e-3, c_max=1e-1, n_points=8,
                                    n_cells=1000, out=outdir)
            rc |= cmd_asymptotics(ns)
        return rc

    def fig4(outdir):
        from .gamma_metric import resolve_reference_coupling

        c = resolve_reference_coupling()
        ns = argparse.Namespace(c=c, pairs="all", grid=400, out=outdir)
        return cmd_metric(ns)

    def _deflate(outdir, l, c, or_system, budget):
        ns = argparse.Namespace(l=l, c=c, xi=1.0, or_system=or_system, budget=budget,
                                seed=0, out=outdir, n_cells=1000)
        return cmd_deflate(ns)

    def _continue(outdir, c, rng, step):
        ns = argparse.Namespace(c=c, l_range=rng, step=step, or_system=False,
                                out=outdir, n_cells=1000, xi=1.0, dump_states=False)
        return cmd_continue(ns)

    return {
        "fig1": ("bulk energy of the nontrivial branches against c", fig1),
        "fig3": ("expansion-order convergence study", fig3),
        "fig4": ("transition costs at the resolved coupling", fig4),
        "fig5": ("unique solution at l=10, c=1",
                 lambda out: _deflate(out, 10.0, 1.0, False, 24)),
        "fig6": ("two-field multiplicity at l=0.01, c=1",
                 lambda out: _deflate(out, 0.01, 1.0, True, 40)),
        "fig7": ("two-field transition layers at l=0.01, c=5",
                 lambda out: _deflate(out, 0.01, 5.0, True, 40)),
        "fig8": ("bifurcation diagram, c=1, l in [0.2, 3.0]",
                 lambda out: _continue(out, 1.0, "3.0:0.2", 0.01)),
        "fig9": ("full-system multiplicity at l=0.2, c=1",
                 lambda out: _deflate(out, 0.2, 1.0, False, 80)),
        "fig10": ("three solutions at l=1, c=1",
                  lambda out: _deflate(out, 1.0, 1.0, False, 40)),
        "fig11": ("bifurcation diagram, c=5, l in [3, 5]",
                  lambda out: _continue(out, 5.0, "5.0:3.0", 0.015)),
        "fig12": ("stable pair at l=4.43, c=5",
                  lambda out: _deflate(out, 4.43, 5.0, False, 40)),
    }


def cmd_reproduce(args) -> int:
    pipelines = _reproduce_pipelines()
    if args.figure not in pipelines:
        print(f"unknown figure {args.figure!r}; known: {', '.join(sorted(pipelines))}",
              file=sys.stderr)
        return 2
    desc, fn = pipelines[args.figure]
    outdir = args.out or args.figure
    print(f"reproducing {args.figure}: {desc} -> {outdir}")
    return fn(outdir)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ferrobvp",
                                     description="1D coupled nematic-magnetic solver suite")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bulk", help="homogeneous critical points")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--sweep", default=None, metavar="C0:C1:N")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_bulk)

    p = sub.add_parser("solve", help="single Newton solve")
    p.add_argument("--l", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--or", dest="or_system", action="store_true")
    p.add_argument("--guess", default="linear")
    p.add_argument("--out", required=True)
    _add_mesh_args(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("deflate", help="discover multiple solutions")
    p.add_argument("--l", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--or", dest="or_system", action="store_true")
    p.add_argument("--budget", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_mesh_args(p)
    p.set_defaults(fn=cmd_deflate)

    p = sub.add_parser("stability", help="append spectra to solution sidecars")
    p.add_argument("--in", dest="indir", required=True)
    p.set_defaults(fn=cmd_stability)

    p = sub.add_parser("continue", help="natural-parameter continuation in l")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--l-range", required=True, metavar="A:B")
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--or", dest="or_system", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--dump-states", action="store_true")
    _add_mesh_args(p)
    p.set_defaults(fn=cmd_continue)

    p = sub.add_parser("metric", help="degenerate-metric transition costs")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--pairs", default="all")
    p.add_argument("--grid", type=int, default=400)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_metric)

    p = sub.add_parser("asymptotics", help="expansion-order convergence study")
    p.add_argument("--study", choices=["order0", "order1", "order2"], required=True)
    p.add_argument("--c-min", type=float, default=1e-3)
    p.add_argument("--c-max", type=float, default=1e-1)
    p.add_argument("--n-points", type=int, default=8)
    p.add_argument("--n-cells", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_asymptotics)

    p = sub.add_parser("reproduce", help="regenerate the data behind a figure")
    p.add_argument("figure")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
