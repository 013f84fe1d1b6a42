"""Command-line front end: experiments in, CSV (and optional VTK) out."""

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import freefall as ff
from . import harness
from .elements import TRIPLET_NAMES

OUTPUT_ROOT_ENV = "CUTSTOKES_OUTPUT_ROOT"


def _common_flags(p):
    p.add_argument("--triplet", default="p2_p1_p0", choices=TRIPLET_NAMES)
    p.add_argument("--gamma0", type=float, default=0.05)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--xc", type=float, default=0.5)
    p.add_argument("--yc", type=float, default=0.5)
    p.add_argument("--radius", type=float, default=0.21)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cutstokes",
        description="Cut-cell fictitious-domain Stokes experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("single", help="one manufactured-solution case")
    _common_flags(p)
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--cond", action="store_true")
    p.add_argument("--vtk", action="store_true")

    p = sub.add_parser("convergence", help="error table over mesh levels")
    _common_flags(p)
    p.add_argument("--n-list", type=int, nargs="+", default=[10, 20, 40, 80])

    p = sub.add_parser("gamma-sweep", help="condition and errors over gamma0")
    _common_flags(p)
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--grid", type=float, nargs="+",
                   default=[1e-14, 1e-3, 1e-2, 0.05, 0.2, 1.0, 1e3])

    p = sub.add_parser("geometry-sweep", help="lambda error vs circle position")
    _common_flags(p)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--xc-from", type=float, default=0.5)
    p.add_argument("--xc-to", type=float, default=0.7)
    p.add_argument("--xc-step", type=float, default=0.005)

    p = sub.add_parser("assumptions", help="C_u(h), C_p(h) eigenvalue scan")
    _common_flags(p)
    p.add_argument("--n-list", type=int, nargs="+", default=[10, 20, 40, 80])

    p = sub.add_parser("freefall", help="rigid ball free-fall trajectory")
    _common_flags(p)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", type=float, default=0.5)
    p.add_argument("--mass", type=float, default=0.02)
    p.add_argument("--h2-start", type=float, default=0.75)
    p.add_argument("--recompute-every", type=int, default=1)
    p.add_argument("--vtk-every", type=int, default=0)
    return parser


def _validate(args):
    if not 0.0 < args.radius < 0.5:
        raise ValueError("radius must lie in (0, 0.5)")
    if args.gamma0 < 0.0:
        raise ValueError("gamma0 must be nonnegative")
    if args.nu <= 0.0:
        raise ValueError("nu must be positive")
    n = getattr(args, "n", None)
    if n is not None and n < 2:
        raise ValueError("n must be at least 2")
    for n in getattr(args, "n_list", []) or []:
        if n < 2:
            raise ValueError("every mesh level must have n >= 2")


def _output_dir(args):
    if args.out:
        path = args.out
    else:
        root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
        blob = json.dumps(vars(args), sort_keys=True, default=str)
        tag = hashlib.sha256(blob.encode()).hexdigest()[:10]
        path = os.path.join(root, f"{args.command}-{time.strftime('%Y%m%d-%H%M%S')}-{tag}")
    os.makedirs(path, exist_ok=True)
    return path


def _write_manifest(args, outdir):
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(vars(args), fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _case(args, n, gamma0=None):
    return harness.CaseConfig(
        triplet=args.triplet, n=n,
        gamma0=args.gamma0 if gamma0 is None else gamma0, nu=args.nu,
        center=(args.xc, args.yc), radius=args.radius,
        with_cond=getattr(args, "cond", False))


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _validate(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    outdir = _output_dir(args)
    _write_manifest(args, outdir)
    csv_path = os.path.join(outdir, "results.csv")
    try:
        if args.command == "single":
            report = harness.run_case(_case(args, args.n))
            harness.write_csv(csv_path, [report])
            if args.vtk:
                _vtk_single(args, outdir)
        elif args.command == "convergence":
            reports, orders = harness.convergence_study(
                triplet=args.triplet, gamma0=args.gamma0,
                ns=tuple(args.n_list), nu=args.nu)
            harness.write_csv(csv_path, reports)
            with open(os.path.join(outdir, "orders.json"), "w") as fh:
                json.dump(orders, fh, indent=2, sort_keys=True)
                fh.write("\n")
        elif args.command == "gamma-sweep":
            reports = harness.gamma_sweep(triplet=args.triplet, n=args.n,
                                          gamma0_grid=tuple(args.grid),
                                          nu=args.nu)
            harness.write_csv(csv_path, reports)
        elif args.command == "geometry-sweep":
            grid = np.round(np.arange(args.xc_from, args.xc_to + 1e-12,
                                      args.xc_step), 10)
            reports = harness.geometry_sweep(
                triplet=args.triplet, n=args.n, xc_grid=grid,
                gamma0s=(args.gamma0, 0.0), radius=args.radius, nu=args.nu)
            harness.write_csv(csv_path, reports)
        elif args.command == "assumptions":
            rows = harness.assumption_scan(triplet=args.triplet,
                                           ns=tuple(args.n_list),
                                           seed=args.seed)
            with open(csv_path, "w") as fh:
                fh.write("n,h,C_u,C_p,C_max\n")
                for r in rows:
                    fh.write(f"{r['n']},{r['h']:.12g},{r['C_u']:.12g},"
                             f"{r['C_p']:.12g},{r['C_max']:.12g}\n")
        elif args.command == "freefall":
            cfg = ff.FreefallConfig(
                n=args.n, dt=args.dt, t_end=args.t_end, mass=args.mass,
                nu=args.nu, gamma0=args.gamma0, radius=args.radius,
                x_c=args.xc, h2_start=args.h2_start,
                recompute_every=args.recompute_every, triplet=args.triplet)
            rows = ff.simulate(cfg, vtk_every=args.vtk_every,
                               output_dir=outdir)
            ff.write_trajectory(os.path.join(outdir, "trajectory.csv"), rows)
    except Exception as exc:  # noqa: BLE001 - single CLI failure funnel
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(outdir)
    return 0


def _vtk_single(args, outdir):
    from .harness import build_case, nodal_fields
    from .solver import solve
    from .vtk_io import vertex_values, write_vtk

    disc, exact, system = build_case(_case(args, args.n))
    x, _ = solve(system)
    Unodal, Pnodal = nodal_fields(disc, x, system, ubc=exact.g)
    speed = np.hypot(Unodal[:, 0], Unodal[:, 1])
    data = {"velocity_magnitude":
            vertex_values(disc.layout.velocity, disc.mesh, speed)}
    if disc.triplet.pressure.continuous:
        data["pressure"] = vertex_values(disc.layout.pressure, disc.mesh,
                                         Pnodal)
    write_vtk(os.path.join(outdir, "fields.vtk"), disc.mesh, point_data=data)


if __name__ == "__main__":
    sys.exit(main())
