"""Command line entry point.

Subcommands ``converge``, ``ldm``, ``solve`` and ``mesh {generate,cut,inspect}``.
Settings come from an optional ``--config`` file, overridden by flags.
Exit codes: 0 success, 1 check failed, 2 bad configuration or input,
3 solver failure.
"""

import argparse
import csv
import io
import os
import sys

import numpy as np

from . import config as cfgmod
from .cases import make_scenario
from .exceptions import DDRError
from .interface import discretize_interface
from .mesh import EXT, UNIT_BOX, build_cartesian_mesh, build_triangular_mesh, check_mesh, perturb_vertices

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
PATCH_TOL = 1e-9

CONVERGENCE_HEADER = ["level", "h", "ndof", "err_energy", "eoc_energy", "err_l2", "eoc_l2", "err_jump"]
LDM_HEADER = ["step", "t", "err_energy", "err_jump", "flux_int"]
LDM_SUMMARY_HEADER = ["level", "h", "steps", "tau", "ndof", "eta",
                      "err_energy", "eoc_energy", "err_jump", "eoc_jump"]


def _csv_list(cast):
    def parse(text):
        try:
            return [cast(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def _auto_or(cast):
    def parse(text):
        return "auto" if text == "auto" else cast(text)
    return parse


def _add_config_flags(p):
    p.add_argument("--config", help="INI file with [run]/[mesh]/[physics]/[ldm]/[output] sections")
    p.add_argument("--case")
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--family", help="cartesian, perturbed, triangular or auto")
    p.add_argument("--levels", type=_csv_list(int), help="comma separated background sizes n")
    p.add_argument("--refinement-ratio", "-M", dest="refinement_ratio", type=_auto_or(int))
    p.add_argument("--ratios", type=_auto_or(_csv_list(float)), help="sigma_int / sigma_ext values")
    p.add_argument("--sigma-ext", dest="sigma_ext", type=float)
    p.add_argument("--eta", type=_auto_or(float))
    p.add_argument("--t-c", dest="t_c", type=float)
    p.add_argument("--capacitance", type=_auto_or(float))
    p.add_argument("--t-final", dest="t_final", type=_auto_or(float))
    p.add_argument("--n0", type=int, help="time steps on the coarsest LDM level")
    p.add_argument("--out", "--output", dest="output", help="output directory")


def _config_from_args(args, default_case=None):
    base = cfgmod.load(args.config) if args.config else cfgmod.RunConfig()
    overrides = {name: getattr(args, name) for name in vars(cfgmod.RunConfig())
                 if getattr(args, name, None) is not None}
    if default_case and "case" not in overrides and not args.config:
        overrides["case"] = default_case
    cfg = cfgmod.RunConfig(**{**vars(base), **overrides})
    return cfg.resolved()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_atomic(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="ascii", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in header])
    return buf.getvalue()


def _ratio_tag(r):
    return f"{r:g}".replace("+", "")


def _gnuplot_stub(title, files, xcol, ycols, ylabel):
    lines = ["set logscale xy", "set key bottom right", f"set xlabel '{xcol}'", f"set ylabel '{ylabel}'",
             f"set title '{title}'", "set datafile separator ','"]
    plots = []
    for f in files:
        for col in ycols:
            plots.append(f"'{os.path.basename(f)}' using '{xcol}':'{col}' with linespoints title '{os.path.basename(f)} {col}'")
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


# converge ---------------------------------------------------------------------------------------

def cmd_converge(args):
    from .studies import run_convergence

    cfg = _config_from_args(args)
    if cfg.case == "ldm":
        raise cfgmod.ConfigError("use the 'ldm' subcommand for the time-dependent case")
    stem = f"{cfg.case}_{cfg.family}_M{cfg.refinement_ratio}_k{cfg.k}"
    if args.dry_run:
        print(f"case={cfg.case} family={cfg.family} M={cfg.refinement_ratio} k={cfg.k} seed={cfg.seed}")
        print("levels: " + " ".join(f"n={n} h={1.0 / n:g}" for n in cfg.levels))
        for r in cfg.ratios:
            print(f"would write {os.path.join(cfg.output, f'{stem}_ratio{_ratio_tag(r)}.csv')}")
        return EXIT_OK

    def progress(case, family, r, n, rep):
        if not args.quiet:
            print(f"  ratio={r:g} n={n} ndof={rep.ndof} err_energy={rep.err_energy:.4e} "
                  f"err_l2={rep.err_l2:.4e}", file=sys.stderr)

    tables = run_convergence(cfg.case, cfg.family, cfg.levels, cfg.ratios, k=cfg.k, M=cfg.refinement_ratio,
                             eta=cfg.eta_value(), seed=cfg.seed, sigma_ext=cfg.sigma_ext, progress=progress)
    files = []
    for r in cfg.ratios:
        path = os.path.join(cfg.output, f"{stem}_ratio{_ratio_tag(r)}.csv")
        _write_atomic(path, _csv_text(CONVERGENCE_HEADER, tables[r].rows()))
        files.append(path)
        e_en, e_l2 = tables[r].eoc("err_energy"), tables[r].eoc("err_l2")
        print(f"ratio {r:g}: eoc_energy " + " ".join(f"{x:.3f}" for x in e_en)
              + " | eoc_l2 " + " ".join(f"{x:.3f}" for x in e_l2) + f" -> {path}")
    _write_atomic(os.path.join(cfg.output, f"{stem}.gp"),
                  _gnuplot_stub(stem, files, "h", ["err_energy", "err_l2"], "normalised error"))
    return EXIT_OK


# ldm --------------------------------------------------------------------------------------------

def _ldm_scenario(cfg):
    return make_scenario("ldm", sigma_int=cfg.ratios[0] * cfg.sigma_ext, sigma_ext=cfg.sigma_ext, t_c=cfg.t_c,
                         capacitance=None if cfg.capacitance == "auto" else float(cfg.capacitance),
                         t_final=None if cfg.t_final == "auto" else float(cfg.t_final))


def cmd_ldm(args):
    from .ldm import run_ldm_study

    cfg = _config_from_args(args, default_case="ldm")
    if cfg.case != "ldm":
        raise cfgmod.ConfigError("the ldm subcommand needs case = ldm")
    sc = _ldm_scenario(cfg)
    steps = [cfg.n0 * 4 ** i for i in range(len(cfg.levels))]
    print(f"ratio={cfg.ratios[0]:g} C={sc.capacitance!r} t_c={sc.t_c!r} t_final={sc.t_final!r} M={cfg.refinement_ratio}")
    if args.dry_run:
        for n, N in zip(cfg.levels, steps):
            print(f"level n={n} h={1.0 / n:g} steps={N} tau={sc.t_final / N:g}")
        return EXIT_OK

    def progress(n, N, run):
        if not args.quiet:
            print(f"  n={n} N={N} ndof={run.n_dofs} eta={run.eta:.3g} "
                  f"energy={run.temporal_norm('energy'):.4e} jump={run.temporal_norm('jump'):.4e}", file=sys.stderr)
        _write_atomic(os.path.join(cfg.output, f"ldm_n{n}.csv"), _csv_text(LDM_HEADER, run.rows()))

    study = run_ldm_study(sc, cfg.levels, n0=cfg.n0, M=cfg.refinement_ratio, eta=cfg.eta_value(), progress=progress)
    en, ju = study.temporal("energy"), study.temporal("jump")
    e_en, e_ju = study.eoc("energy"), study.eoc("jump")
    rows = []
    for i, (n, N, run) in enumerate(zip(study.levels, study.steps, study.runs)):
        rows.append({"level": n, "h": 1.0 / n, "steps": N, "tau": run.tau, "ndof": run.n_dofs, "eta": run.eta,
                     "err_energy": en[i], "eoc_energy": e_en[i - 1] if i else float("nan"),
                     "err_jump": ju[i], "eoc_jump": e_ju[i - 1] if i else float("nan")})
    _write_atomic(os.path.join(cfg.output, "ldm_summary.csv"), _csv_text(LDM_SUMMARY_HEADER, rows))
    _write_atomic(os.path.join(cfg.output, "ldm.gp"),
                  _gnuplot_stub("ldm", [os.path.join(cfg.output, f"ldm_n{n}.csv") for n in study.levels],
                                "t", ["err_energy"], "energy error"))
    print("eoc energy (time-space L2): " + " ".join(f"{x:.3f}" for x in e_en))
    print("eoc jump   (time-space L2): " + " ".join(f"{x:.3f}" for x in e_ju))
    return EXIT_OK


# solve ------------------------------------------------------------------------------------------

def _vertex_values(space, u_h):
    """One value per vertex: the exterior dof where it exists, else the interior one."""
    dm = space.dofmap
    idx = np.where(dm.vertex_dof[EXT] >= 0, dm.vertex_dof[EXT], dm.vertex_dof[1 - EXT])
    return u_h[idx]


def cmd_solve(args):
    from .ddr import DDRSpace
    from .meshtext import write_mesh
    from .norms import compute_errors
    from .studies import fitted_mesh, solve_stationary

    cfg = _config_from_args(args, default_case="patch")
    if cfg.case == "ldm":
        raise cfgmod.ConfigError("use the 'ldm' subcommand for the time-dependent case")
    n, r = cfg.levels[0], cfg.ratios[0]
    sc = make_scenario(cfg.case, sigma_int=r * cfg.sigma_ext, sigma_ext=cfg.sigma_ext)
    mesh = fitted_mesh(cfg.family, n, sc.curve, M=cfg.refinement_ratio, seed=cfg.seed)
    space = DDRSpace(mesh, cfg.k)
    res = solve_stationary(space, sc, cfg.eta_value())
    rep = compute_errors(space, res.forms, res.u_h, sc.u, h=1.0 / n)
    print(f"case={cfg.case} family={cfg.family} n={n} k={cfg.k} ratio={r:g} eta={res.weights.eta:.6g} "
          f"elements={mesh.n_elements} ndof={space.n_dofs}")
    for key, val in rep.as_dict().items():
        print(f"{key} = {_fmt(val)}")
    if args.dump:
        write_mesh(args.dump, mesh, _vertex_values(space, res.u_h))
        print(f"mesh and vertex values -> {args.dump}")
    if cfg.case == "patch" and not rep.raw_energy <= PATCH_TOL:
        print(f"patch test failed: energy error {rep.raw_energy:.3e} > {PATCH_TOL:g}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


# mesh -------------------------------------------------------------------------------------------

def cmd_mesh_generate(args):
    from .meshtext import write_mesh

    if args.family == "triangular":
        mesh = build_triangular_mesh(1.0 / args.n, UNIT_BOX, kind=args.kind, seed=args.seed)
    else:
        mesh = build_cartesian_mesh(args.n, UNIT_BOX)
        if args.family == "perturbed":
            mesh = perturb_vertices(mesh, 0.2, seed=args.seed)
    write_mesh(args.output, mesh)
    print(f"{args.family} background n={args.n}: {mesh.n_elements} elements -> {args.output}")
    return EXIT_OK


def cmd_mesh_cut(args):
    from .cutting import cut_mesh
    from .meshtext import read_mesh, write_mesh

    background, _ = read_mesh(args.input)
    curve = make_scenario(args.case).curve
    # nominal size of grid-based backgrounds: the median edge length
    h_bg = args.h if args.h else float(np.median(background.edge_lengths))
    mesh = cut_mesh(background, discretize_interface(curve, args.M, h_bg))
    write_mesh(args.output, mesh)
    d = mesh.diagnostics.get("cut", {})
    print(f"cut with {d.get('chain_segments')} chain segments: {mesh.n_elements} elements, "
          f"{len(mesh.interface_edges)} interface edges, {len(mesh.diagnostics.get('degenerate', []))} "
          f"degenerate cells -> {args.output}")
    return EXIT_OK


def cmd_mesh_inspect(args):
    from .meshtext import read_mesh

    mesh, values = read_mesh(args.input)
    sides = np.array([len(e) for e in mesh.element_edges])
    print(f"vertices {mesh.n_vertices}  edges {mesh.n_edges}  elements {mesh.n_elements}")
    print(f"interior elements {int((mesh.regions != EXT).sum())}  interface edges {len(mesh.interface_edges)}  "
          f"boundary edges {len(mesh.boundary_edges)}")
    print(f"h {_fmt(mesh.h)}  min area {_fmt(mesh.areas.min())}  max sides {sides.max()}  "
          f"area sum {_fmt(mesh.areas.sum())} / {_fmt(mesh.domain_area)}")
    if values is not None:
        print(f"vertex values: min {_fmt(values.min())} max {_fmt(values.max())}")
    problems = check_mesh(mesh)
    for p in problems:
        print(f"problem: {p}")
    return EXIT_CHECK if problems else EXIT_OK


# entry point ------------------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="ddrjump", description="DDR interface solver with potential and flux jumps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("converge", help="convergence study, one CSV per contrast ratio")
    _add_config_flags(p)
    p.add_argument("--dry-run", action="store_true", help="print the planned levels and exit")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("ldm", help="charge relaxation study with explicit time stepping")
    _add_config_flags(p)
    p.add_argument("--dry-run", action="store_true")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_ldm)

    p = sub.add_parser("solve", help="single solve on the first level and first ratio")
    _add_config_flags(p)
    p.add_argument("--dump", help="write the mesh with vertex values to this file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("mesh", help="mesh utilities")
    msub = p.add_subparsers(dest="mesh_command", required=True)
    g = msub.add_parser("generate", help="write a background mesh")
    g.add_argument("--family", choices=cfgmod.FAMILIES, default="cartesian")
    g.add_argument("--kind", choices=("split", "delaunay"), default="split")
    g.add_argument("-n", type=int, default=8)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_mesh_generate)
    c = msub.add_parser("cut", help="cut a background mesh along the interface of a case")
    c.add_argument("input")
    c.add_argument("--case", default="circle")
    c.add_argument("-M", type=int, default=0)
    c.add_argument("--h", type=float, help="background size used for the chain (default: median edge length)")
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=cmd_mesh_cut)
    i = msub.add_parser("inspect", help="print statistics and check a mesh file")
    i.add_argument("input")
    i.set_defaults(func=cmd_mesh_inspect)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DDRError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (cfgmod.ConfigError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
