"""Command-line front end.

Subcommands::

    orbitflow simulate        integrate reduced dynamics, write CSV/JSON
    orbitflow compare-oracle  integrated flow vs. eigenvalue oracle
    orbitflow billiard        trace a reflected chamber geodesic
    orbitflow distance        quotient distance between two matrix orbits

Exit codes: 0 success, 1 numeric failure (threshold exceeded or
integration stopped), 2 usage / unreadable input.  Set ORBITFLOW_LOG to
debug/info/warning to control verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import chamber, dynamics, oracle, polar, trajio
from .errors import InputError, IntegrationError
from .models import MatrixModel, model_from_name
from .reduction import CotangentPoint, reduce

log = logging.getLogger("orbitflow")


def _configure_logging():
    level = os.environ.get("ORBITFLOW_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="orbitflow %(levelname)s: %(message)s")


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="RNG seed for random data")
    p.add_argument("--t-end", type=float, default=1.0, help="integration horizon")
    p.add_argument("--tol", type=float, default=1e-10,
                   help="relative integration tolerance (absolute = tol/100)")
    p.add_argument("--samples", type=int, default=200,
                   help="number of output sample intervals")
    p.add_argument("--gap-floor", type=float, default=1e-7,
                   help="abort threshold for coupled eigenvalue gaps")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="orbitflow",
        description="Orbit-space geodesics, billiards and spin Calogero-Moser flows",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate the reduced dynamics")
    sim.add_argument("--model", required=True,
                     choices=["hermitian", "symmetric", "polar"])
    sim.add_argument("--n", type=int, default=3, help="matrix dimension")
    sim.add_argument("--init", help="initial-data file (two matrix blocks, "
                                    "or a/p/y lines for the polar model)")
    sim.add_argument("--root-file", help="root-system file (polar model)")
    sim.add_argument("--out", required=True, help="output trajectory path")
    sim.add_argument("--format", choices=["csv", "json"], default="csv")
    sim.add_argument("--debug-flip-sign", action="store_true",
                     help="negative control: integrate the spin equation "
                          "with the opposite sign")
    _add_common(sim)
    sim.set_defaults(func=cmd_simulate)

    cmp_ = sub.add_parser("compare-oracle",
                          help="reduced trajectory vs. sorted eigenvalue flow")
    cmp_.add_argument("--model", required=True, choices=["hermitian", "symmetric"])
    cmp_.add_argument("--n", type=int, default=3)
    cmp_.add_argument("--init", help="initial-data file with A and alpha blocks")
    cmp_.add_argument("--threshold", type=float, default=1e-6)
    cmp_.add_argument("--debug-flip-sign", action="store_true")
    _add_common(cmp_)
    cmp_.set_defaults(func=cmd_compare_oracle)

    bil = sub.add_parser("billiard", help="trace a reflected chamber geodesic")
    bil.add_argument("--model", choices=["hermitian", "symmetric"],
                     help="use the builtin root system of a matrix model")
    bil.add_argument("--n", type=int, default=3)
    bil.add_argument("--root-file", help="root-system file instead of --model")
    bil.add_argument("--x0", required=True, help="comma-separated start point")
    bil.add_argument("--v0", required=True, help="comma-separated direction")
    bil.add_argument("--t-end", type=float, default=1.0)
    bil.add_argument("--out", help="write the path as JSON")
    bil.set_defaults(func=cmd_billiard)

    dist = sub.add_parser("distance", help="quotient distance of two orbits")
    dist.add_argument("fileA")
    dist.add_argument("fileB")
    dist.add_argument("--model", choices=["hermitian", "symmetric"],
                      help="override the kind declared in the files")
    dist.set_defaults(func=cmd_distance)
    return ap


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.replace(",", " ").split()])
    except ValueError as exc:
        raise InputError(f"cannot parse vector {text!r}: {exc}")


def _matrix_initial_data(args, model):
    if args.init:
        mats, fmodel = trajio.read_matrix_file(args.init, expect=2)
        if fmodel.kind != model.kind or fmodel.n != model.n:
            raise InputError(
                f"{args.init} declares {fmodel.kind} n={fmodel.n}, "
                f"flags request {model.kind} n={model.n}"
            )
        return mats[0], mats[1]
    rng = np.random.default_rng(args.seed)
    return model.random_regular_pair(rng)


def _load_polar_initial(path, rs):
    a = p = None
    yrows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "a":
                    a = np.array([float(v) for v in parts[1:]])
                elif parts[0] == "p":
                    p = np.array([float(v) for v in parts[1:]])
                elif parts[0] == "y":
                    yrows.append((int(parts[1]), int(parts[2]), float(parts[3])))
                else:
                    raise InputError(f"unknown directive {parts[0]!r}")
            except (IndexError, ValueError) as exc:
                raise InputError(f"{path}:{lineno}: {exc}")
    if a is None or p is None:
        raise InputError(f"{path}: polar initial data needs 'a' and 'p' lines")
    Yroots = [np.zeros(rs.multiplicities[r]) for r in range(rs.n_roots)]
    for r, i, val in yrows:
        if r >= rs.n_roots or i >= rs.multiplicities[r]:
            raise InputError(f"{path}: spin index (root {r}, slot {i}) out of range")
        Yroots[r][i] = val
    return polar.PolarReducedState(rs=rs, A0=a, p0=p, Yroots=tuple(Yroots))


def _random_polar_state(rs, rng):
    from scipy.optimize import linprog

    d = rs.section_dim
    # deep chamber point: maximize the smallest root value on the unit box
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-rs.roots, np.ones((rs.n_roots, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(rs.n_roots),
                  bounds=[(-1, 1)] * d + [(0, 10)], method="highs")
    if not res.success or res.x[-1] <= 1e-9:
        raise InputError("could not find an interior chamber point for this "
                         "root system")
    x = res.x[:d] / res.x[-1]  # min root value 1
    p0 = rng.standard_normal(d)
    p0 /= max(1.0, np.linalg.norm(p0))
    Yroots = tuple(0.5 * rng.standard_normal(rs.multiplicities[r])
                   for r in range(rs.n_roots))
    return polar.PolarReducedState(rs=rs, A0=x, p0=p0, Yroots=Yroots)


def cmd_simulate(args) -> int:
    atol = args.tol * 1e-2
    meta_extra = {"seed": args.seed, "init": args.init or "random"}
    if args.model == "polar":
        if not args.root_file:
            raise InputError("--model polar requires --root-file")
        rs = polar.load_root_system(args.root_file)
        if args.init:
            s0 = _load_polar_initial(args.init, rs)
        else:
            s0 = _random_polar_state(rs, np.random.default_rng(args.seed))
        partial = None
        try:
            traj = polar.integrate_polar(
                s0, rs, t_end=args.t_end, rtol=args.tol, atol=atol,
                samples=args.samples, gap_floor=args.gap_floor,
            )
        except IntegrationError as exc:
            partial, traj = exc, exc.trajectory
        if args.format == "csv":
            trajio.write_polar_trajectory_csv(traj, args.out, meta_extra)
        else:
            trajio.write_polar_trajectory_json(traj, args.out, meta_extra)
        if partial is not None:
            print(f"integration stopped early: {partial}", file=sys.stderr)
            return 1
        log.info("wrote %s", args.out)
        return 0

    model = model_from_name(args.model, args.n)
    A, alpha = _matrix_initial_data(args, model)
    s0, _ = reduce(CotangentPoint(A=A, alpha=alpha), model)
    partial = None
    try:
        traj = dynamics.integrate(
            s0, args.t_end, model=model, rtol=args.tol, atol=atol,
            samples=args.samples, gap_floor=args.gap_floor,
            debug_flip_sign=args.debug_flip_sign,
        )
    except IntegrationError as exc:
        partial, traj = exc, exc.trajectory
    if traj is None:
        raise IntegrationError(str(partial))
    if args.format == "csv":
        trajio.write_trajectory_csv(traj, args.out, meta_extra)
    else:
        trajio.write_trajectory_json(traj, args.out, meta_extra)
    if partial is not None:
        print(f"integration stopped early: {partial}", file=sys.stderr)
        return 1
    log.info("wrote %s", args.out)
    return 0


def cmd_compare_oracle(args) -> int:
    model = model_from_name(args.model, args.n)
    A, alpha = _matrix_initial_data(args, model)
    s0, _ = reduce(CotangentPoint(A=A, alpha=alpha), model)
    traj = dynamics.integrate(
        s0, args.t_end, model=model, rtol=args.tol, atol=args.tol * 1e-2,
        samples=args.samples, gap_floor=args.gap_floor,
        debug_flip_sign=args.debug_flip_sign,
    )
    dev, _ = oracle.compare_to_eigenflow(traj, A, alpha)
    for k, d in enumerate(dev, 1):
        print(f"channel a_{k}: max deviation {d:.6e}")
    worst = float(np.max(dev))
    ok = worst < args.threshold
    print(f"max deviation {worst:.6e} {'<' if ok else '>='} "
          f"threshold {args.threshold:g}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_billiard(args) -> int:
    if args.root_file:
        rs = polar.load_root_system(args.root_file)
    elif args.model:
        rs = polar.builtin_root_system(model_from_name(args.model, args.n))
    else:
        raise InputError("billiard needs --root-file or --model")
    x0 = _parse_vector(args.x0)
    v0 = _parse_vector(args.v0)
    path_obj = polar.billiard_geodesic(rs, x0, v0, args.t_end)
    doc = trajio.billiard_to_dict(path_obj)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
    print(f"{len(path_obj.events)} reflection event(s), "
          f"{len(path_obj.times)} vertices")
    for e in path_obj.events:
        walls = ",".join(str(w) for w in e.walls)
        vin = ", ".join(f"{v:.12g}" for v in e.v_in)
        vout = ", ".join(f"{v:.12g}" for v in e.v_out)
        print(f"  t={e.time:.12g} walls=[{walls}] v_in=[{vin}] v_out=[{vout}]")
    return 0


def cmd_distance(args) -> int:
    matsA, modelA = trajio.read_matrix_file(args.fileA, expect=1)
    matsB, modelB = trajio.read_matrix_file(args.fileB, expect=1)
    if args.model:
        modelA = model_from_name(args.model, modelA.n)
        modelB = model_from_name(args.model, modelB.n)
    if modelA.n != modelB.n:
        raise InputError("matrices have different dimensions")
    p = chamber.chamber_map(matsA[0], modelA)
    q = chamber.chamber_map(matsB[0], modelB)
    print(f"{chamber.distance(p, q):.12g}")
    return 0


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"orbitflow: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"orbitflow: error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"orbitflow: integration error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
