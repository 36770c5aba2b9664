"""Command-line interface.

    ssmt run --config FILE --seed U64 --out DIR [--suite NAME ...]
    ssmt levy potential --out CSV [--method fourier|monte_carlo|closed_form]
    ssmt levy check
    ssmt tree simulate --seed U64 --out FILE [--mode bv|diffusion]
    ssmt tree export --seed U64 --out-dir DIR [--level X]
    ssmt spine test --x X --n N --seed U64 [--out FILE]
    ssmt exc decompose --seed U64 --out-dir DIR
    ssmt exc reconstruct --atoms FILE --out FILE
    ssmt report --dir DIR

Without --config, the canonical desk configuration is used.  SSMT_N and
SSMT_DT override replica counts and the grid step.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import constants
from .builder import analyze_cumulant, build_tree
from .excursions import (
    build_excursion_process,
    build_level_tree,
    decompose_excursions,
    encoding_atoms,
    reconstruct_level_tree,
)
from .harness import (
    ExperimentConfig,
    canonical_config,
    export_excursions_json,
    export_potential_csv,
    export_tree,
    run,
)
from .levy import CLOSED_FORM, FOURIER, MONTE_CARLO, potential_density
from .spine import spine_law_test


def _load_config(args, **overrides) -> ExperimentConfig:
    if getattr(args, "config", None):
        with open(args.config) as fp:
            cfg = ExperimentConfig.from_json(json.load(fp), **overrides)
    else:
        cfg = ExperimentConfig.from_json(canonical_config().to_json(), **overrides)
    if getattr(args, "seed", None) is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _add_config_args(p, seed=True):
    p.add_argument("--config", help="experiment config JSON")
    if seed:
        p.add_argument("--seed", type=int, help="master seed override")


def cmd_run(args):
    overrides = {}
    if args.suite:
        overrides["suites"] = tuple(args.suite)
    cfg = _load_config(args, **overrides)
    if args.out:
        from dataclasses import replace
        cfg = replace(cfg, out_dir=args.out)
    report = run(cfg)
    for line in report.summary_lines():
        print(line)
    print(f"config hash {cfg.config_hash()}; "
          f"{'ALL PASS' if report.all_pass else 'FAILURES PRESENT'}")
    return 0 if report.all_pass else 1


def cmd_levy_potential(args):
    cfg = _load_config(args)
    grid = np.linspace(args.lo, args.hi, args.n_grid)
    chars = cfg.quadruplet.projection
    rng = np.random.default_rng(cfg.seed)
    table = potential_density(chars, grid, method=args.method,
                              n_paths=cfg.n_paths, dt=cfg.dt, rng=rng)
    export_potential_csv(table, args.out)
    print(f"wrote {args.out} ({args.method}, {len(grid)} levels)")
    return 0


def cmd_levy_check(args):
    cfg = _load_config(args, suites=("levy",))
    report = run(cfg)
    for line in report.summary_lines():
        print(line)
    return 0 if report.all_pass else 1


def cmd_tree_simulate(args):
    cfg = _load_config(args)
    tree = build_tree(cfg.quadruplet, 1.0, cfg.x_min, cfg.mode, cfg.dt, cfg.seed)
    with open(args.out, "w") as fp:
        json.dump(tree.export_json(args.resolution), fp)
    print(f"wrote {args.out}: {len(tree.nodes)} nodes")
    return 0


def cmd_tree_export(args):
    cfg = _load_config(args)
    tree = build_tree(cfg.quadruplet, 1.0, cfg.x_min, cfg.mode, cfg.dt, cfg.seed)
    paths = export_tree(tree, args.out_dir, resolution=args.resolution,
                        level=args.level, seed=cfg.seed)
    for kind, path in paths.items():
        print(f"wrote {kind}: {path}")
    return 0


def cmd_spine_test(args):
    cfg = _load_config(args)
    quad = cfg.quadruplet
    ana = analyze_cumulant(quad)
    report = spine_law_test(quad, ana, args.x, args.n, cfg.seed,
                            mode=cfg.mode, dt=cfg.dt, x_min=cfg.x_min)
    body = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as fp:
            fp.write(body)
        print(f"wrote {args.out}")
    else:
        print(body)
    ok = all(r["p"] > constants.KS_ALPHA for r in report)
    return 0 if ok else 1


def cmd_exc_decompose(args):
    import os
    cfg = _load_config(args)
    tree = build_tree(cfg.quadruplet, 1.0, cfg.x_min, cfg.mode, cfg.dt, cfg.seed)
    dec = decompose_excursions(tree)
    os.makedirs(args.out_dir, exist_ok=True)
    exc_path = os.path.join(args.out_dir, "excursions.json")
    export_excursions_json(dec, exc_path)
    proc = build_excursion_process(tree, dec)
    atoms_path = os.path.join(args.out_dir, "atoms.json")
    with open(atoms_path, "w") as fp:
        json.dump({"atoms": [[t, n] for t, n in encoding_atoms(proc)]}, fp)
    ltree_path = os.path.join(args.out_dir, "level_tree.json")
    with open(ltree_path, "w") as fp:
        json.dump(build_level_tree(tree, dec).to_json(), fp)
    print(f"wrote {exc_path}, {atoms_path}, {ltree_path}")
    return 0


def cmd_exc_reconstruct(args):
    with open(args.atoms) as fp:
        atoms = [(float(t), int(k)) for t, k in json.load(fp)["atoms"]]
    ltree = reconstruct_level_tree(atoms)
    with open(args.out, "w") as fp:
        json.dump(ltree.to_json(), fp)
    print(f"wrote {args.out}: {len(ltree.nodes)} nodes, "
          f"total length {ltree.total_length:.6g}")
    return 0


def cmd_report(args):
    import os
    path = os.path.join(args.dir, "report.json")
    with open(path) as fp:
        obj = json.load(fp)
    for c in obj["checks"]:
        status = "PASS" if c["pass"] else "FAIL"
        print(f"[{status}] {c['name']}: value {c['value']} target {c['target']}")
    print("all_pass:", obj["all_pass"])
    return 0 if obj["all_pass"] else 1


def build_parser():
    p = argparse.ArgumentParser(prog="ssmt", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="execute verification suites")
    _add_config_args(pr)
    pr.add_argument("--out", help="output directory for report and exports")
    pr.add_argument("--suite", action="append", help="suite name (repeatable)")
    pr.set_defaults(func=cmd_run)

    pl = sub.add_parser("levy", help="Levy engine utilities")
    sl = pl.add_subparsers(dest="subcommand", required=True)
    pp = sl.add_parser("potential", help="tabulate a potential density")
    _add_config_args(pp)
    pp.add_argument("--method", default=FOURIER,
                    choices=[FOURIER, MONTE_CARLO, CLOSED_FORM])
    pp.add_argument("--lo", type=float, default=-5.0)
    pp.add_argument("--hi", type=float, default=5.0)
    pp.add_argument("--n-grid", type=int, default=2001)
    pp.add_argument("--out", required=True)
    pp.set_defaults(func=cmd_levy_potential)
    pc = sl.add_parser("check", help="run the Levy suite")
    _add_config_args(pc)
    pc.set_defaults(func=cmd_levy_check)

    pt = sub.add_parser("tree", help="tree simulation and export")
    st = pt.add_subparsers(dest="subcommand", required=True)
    ps = st.add_parser("simulate")
    _add_config_args(ps)
    ps.add_argument("--out", required=True)
    ps.add_argument("--resolution", type=int, default=128)
    ps.set_defaults(func=cmd_tree_simulate)
    pe = st.add_parser("export")
    _add_config_args(pe)
    pe.add_argument("--out-dir", required=True)
    pe.add_argument("--level", type=float, default=0.5)
    pe.add_argument("--resolution", type=int, default=128)
    pe.set_defaults(func=cmd_tree_export)

    psp = sub.add_parser("spine", help="spine law tests")
    ss = psp.add_subparsers(dest="subcommand", required=True)
    pst = ss.add_parser("test")
    _add_config_args(pst)
    pst.add_argument("--x", type=float, default=0.5)
    pst.add_argument("--n", type=int, default=constants.N_KS)
    pst.add_argument("--out")
    pst.set_defaults(func=cmd_spine_test)

    px = sub.add_parser("exc", help="excursion decomposition")
    sx = px.add_subparsers(dest="subcommand", required=True)
    pd = sx.add_parser("decompose")
    _add_config_args(pd)
    pd.add_argument("--out-dir", required=True)
    pd.set_defaults(func=cmd_exc_decompose)
    prr = sx.add_parser("reconstruct")
    prr.add_argument("--atoms", required=True)
    prr.add_argument("--out", required=True)
    prr.set_defaults(func=cmd_exc_reconstruct)

    pq = sub.add_parser("report", help="print a stored run report")
    pq.add_argument("--dir", required=True)
    pq.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
