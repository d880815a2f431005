"""Command line interface: mesh tools, verification suites, rate studies.

Exit codes: 0 all checks passed, 1 an acceptance-style check failed
(slope below target or a verification suite reported failure), 2 bad
configuration or unknown flags.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (StudyConfig, adjoint_inner_study, adjoint_study, approx_study,
                      ddr_verification_suite, exterior_identity_suite,
                      lifting_verification_suite, primal_study, stokes_suite)
from .mesh import MeshError, MeshFamily, build_family, save_json

SLOPE_MARGIN = 0.1  # accept r + 1 - this margin


def _family_args(p, levels_default=1):
    p.add_argument("--family", default="triangular",
                   choices=["triangular", "cartesian-polygonal", "hexagonal-dominant"])
    p.add_argument("--levels", type=int, default=levels_default,
                   help="number of refinement levels (0 .. levels-1)")
    p.add_argument("--n", type=int, default=2, choices=[2, 3])


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ddrlift",
                                 description="Discrete de Rham complex with conforming lifting")
    sub = ap.add_subparsers(dest="command", required=True)

    mesh = sub.add_parser("mesh", help="build or inspect meshes")
    msub = mesh.add_subparsers(dest="action", required=True)
    mb = msub.add_parser("build")
    _family_args(mb)
    mb.add_argument("--out", required=True)
    mi = msub.add_parser("inspect")
    _family_args(mi)

    ver = sub.add_parser("verify", help="exact verification suites")
    vsub = ver.add_subparsers(dest="target", required=True)
    ve = vsub.add_parser("exterior")
    ve.add_argument("--n", type=int, default=2, choices=[1, 2, 3])
    ve.add_argument("--cases", type=int, default=1000)
    ve.add_argument("--seed", type=int, default=0)
    vd = vsub.add_parser("ddr")
    _family_args(vd)
    vd.add_argument("--r", type=int, default=0)
    vd.add_argument("--k", type=int, default=0)
    vd.add_argument("--exact", action="store_true", default=True)
    vd.add_argument("--float", dest="float_mode", action="store_true")
    vl = vsub.add_parser("lifting")
    _family_args(vl, levels_default=2)
    vl.add_argument("--r", type=int, default=0)
    vl.add_argument("--k", type=int, default=0)
    vl.add_argument("--out", help="write the JSON report here")

    st = sub.add_parser("study", help="rate studies emitting CSV/plot data")
    st.add_argument("kind", choices=["adjoint", "adjoint-inner", "primal", "approx"])
    _family_args(st, levels_default=4)
    st.add_argument("--r", type=int, default=0)
    st.add_argument("--k", type=int, default=0)
    st.add_argument("--quad-order", type=int, default=None)
    st.add_argument("--exact", action="store_true",
                    help="accepted for symmetry; studies use the quadrature path")
    st.add_argument("--float", dest="float_mode", action="store_true")
    st.add_argument("--out", help="CSV output path")
    st.add_argument("--plot-data", help="two-column h/residual series file")
    st.add_argument("--debug", action="store_true",
                    help="adjoint study: include the three-term residual split")
    return ap


def _run_study(args) -> int:
    cfg = StudyConfig(family=args.family, n=args.n, levels=args.levels,
                      r=args.r, k=args.k, quad_order=args.quad_order,
                      exact=bool(getattr(args, "exact", False)))
    run = {"adjoint": adjoint_study, "adjoint-inner": adjoint_inner_study,
           "primal": primal_study, "approx": approx_study}[args.kind]
    table = run(cfg, debug=True) if (args.kind == "adjoint" and args.debug) else run(cfg)
    if args.out:
        table.to_csv(args.out)
    if args.plot_data:
        table.to_plot_data(args.plot_data)
    print(json.dumps(table.report(), indent=2, default=float))
    target = args.r + 1 - SLOPE_MARGIN
    ok = table.fitted_slope >= target
    print(f"fitted slope {table.fitted_slope:.3f} vs target {target:.2f}: "
          f"{'pass' if ok else 'FAIL'}")
    return 0 if ok else 1


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "mesh":
            if args.action == "build":
                mesh = build_family(MeshFamily(args.family, args.levels, n=args.n))
                save_json(mesh, args.out)
                print(f"wrote mesh with {len(mesh.cells[mesh.n])} top cells to {args.out}")
                return 0
            reports = []
            for lev in range(args.levels + 1):
                mesh = build_family(MeshFamily(args.family, lev, n=args.n))
                inr, hr = mesh.regularity_report()
                reports.append({"level": lev, "h": mesh.h_max(),
                                "cells": len(mesh.cells[mesh.n]),
                                "min_inradius_ratio": inr, "min_h_ratio": hr})
            print(json.dumps(reports, indent=2))
            return 0
        if args.command == "verify":
            if args.target == "exterior":
                rep = exterior_identity_suite(n=args.n, cases=args.cases, seed=args.seed)
                mesh = build_family(MeshFamily("triangular", 0, n=min(args.n, 3) if args.n > 1 else 2))
                rep["stokes"] = stokes_suite(mesh, cases=100, seed=args.seed)
                print(json.dumps(rep, indent=2))
                return 0 if rep["pass"] and rep["stokes"]["pass"] else 1
            if args.target == "ddr":
                rep = ddr_verification_suite(args.family, args.levels - 1 if args.levels else 0,
                                             args.r, args.k, n=args.n)
                print(json.dumps(rep, indent=2))
                return 0 if rep["pass"] else 1
            rep = lifting_verification_suite(args.family, args.levels, args.r, args.k,
                                             n=args.n)
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    json.dump(rep, fh, indent=2)
            print(json.dumps(rep, indent=2))
            ok = rep["pass"] and rep["c0_drift"] < 2.0 and rep["c1_drift"] < 2.0
            return 0 if ok else 1
        if args.command == "study":
            return _run_study(args)
    except (MeshError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
