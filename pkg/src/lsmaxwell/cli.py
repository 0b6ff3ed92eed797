"""Command line front end.

Subcommands: ``mesh`` (export a benchmark mesh to the plain-text format),
``solve`` (one spectrum from a config file), ``study`` (a convergence
report), ``compare`` (pairwise difference study of two configs).  Exit
codes: 0 success, 2 validation error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import mesh as meshmod
from .assembly import AssemblyError, CoefficientField
from .bench import (StudyConfig, StudyError, build_domain_mesh, render_report,
                    run_study, solve_spectrum)
from .elements import ElementError
from .formulations import FormulationSpec
from .mesh import MeshError
from .pencil import PencilError, discard_log, spectrum_csv

_VALIDATION = (StudyError, AssemblyError, MeshError, ElementError, ValueError)


def parse_config(path):
    """Flat key-value config: one 'key = value' (or 'key value') per line,
    '#' starts a comment."""
    out = {}
    with open(path) as f:
        for raw in f:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, val = line.split("=", 1)
            else:
                key, _, val = line.partition(" ")
            out[key.strip()] = val.strip()
    return out


def _coeff_from(cfg):
    eps_out = float(cfg.get("eps_outside", 1.0))
    eps_in = float(cfg.get("eps_inside", eps_out))
    mu_out = float(cfg.get("mu_outside", 1.0))
    mu_in = float(cfg.get("mu_inside", mu_out))
    coeff = CoefficientField(eps={0: eps_out, 1: eps_in},
                             mu={0: mu_out, 1: mu_in})
    has_material = eps_in != eps_out or mu_in != mu_out
    return coeff, has_material


def spec_from_config(cfg):
    coeff, _ = _coeff_from(cfg)
    return FormulationSpec(
        kind=cfg.get("formulation", "ls2d"),
        elements_v=cfg.get("elements_v", "ned0"),
        elements_q=cfg.get("elements_q", "p1"),
        gauge=cfg.get("gauge", "multiplier"),
        bc=cfg.get("bc", "standard"),
        coeff=coeff)


def study_config_from(cfg, spec=None, spec_b=None, reference=None, nev=None):
    domain = cfg.get("domain", "square")
    if "n_list" in cfg:
        ns = tuple(int(t) for t in cfg["n_list"].replace(",", " ").split())
    elif "n" in cfg:
        ns = (int(cfg["n"]),)
    else:
        raise StudyError("config needs 'n' or 'n_list'")
    side = float(cfg.get("side", math.pi))
    spec = spec or spec_from_config(cfg)
    _, has_material = _coeff_from(cfg)
    box = None
    if has_material:
        if domain != "square":
            raise StudyError("material subdomains are defined on the square only")
        box = ((0.0, 0.0), (side / 2, side / 2))
    reference = reference or cfg.get("reference", domain)
    return StudyConfig(
        domain=domain, ns=ns, spec=spec, reference=reference, spec_b=spec_b,
        nev=nev or int(cfg.get("nev", 10)),
        diagonal=cfg.get("diagonal", "right"), side=side,
        perturb_amplitude=float(cfg.get("perturb", 0.0)),
        perturb_seed=int(cfg.get("seed", 1)),
        material_box=box)


def cmd_mesh(args):
    builders = {
        "square": lambda: meshmod.build_structured_square(args.n, args.side, args.diagonal),
        "lshape": lambda: meshmod.build_lshape(args.n),
        "slit": lambda: meshmod.build_slit(args.n),
        "cube": lambda: meshmod.build_structured_cube(args.n, args.side),
    }
    m = builders[args.domain]()
    if args.perturb > 0:
        m = meshmod.perturb_interior(m, args.perturb, args.seed)
    with open(args.out, "w") as f:
        f.write(meshmod.write_mesh_text(m))
    return 0


def cmd_solve(args):
    cfg = parse_config(args.config)
    config = study_config_from(cfg, nev=args.nev)
    m = build_domain_mesh(config, config.ns[0])
    lam, sol = solve_spectrum(m, config.spec, config.nev)
    if sol is not None:
        text = spectrum_csv(sol)
        log = discard_log(sol)
    else:
        text = "index,lambda,residual\n" + "".join(
            f"{i},{v:.17g},\n" for i, v in enumerate(lam))
        log = "discarded 0 candidate modes\n"
    with open(args.out, "w") as f:
        f.write(text)
    with open(args.out + ".discards.txt", "w") as f:
        f.write(log)
    return 0


def cmd_study(args):
    cfg = parse_config(args.config)
    config = study_config_from(cfg)
    report = run_study(config)
    fmt = "markdown" if args.out.endswith(".md") else "csv"
    with open(args.out, "w") as f:
        f.write(render_report(report, fmt))
    return 0


def cmd_compare(args):
    cfg_a = parse_config(args.config_a)
    cfg_b = parse_config(args.config_b)
    for key in ("domain", "n_list", "n", "perturb", "seed", "diagonal", "side"):
        if cfg_a.get(key) != cfg_b.get(key):
            raise StudyError(f"configs disagree on {key!r}")
    config = study_config_from(cfg_a, spec=spec_from_config(cfg_a),
                               spec_b=spec_from_config(cfg_b),
                               reference="pairwise")
    report = run_study(config)
    with open(args.out, "w") as f:
        f.write(render_report(report, "csv"))
    return 0


def make_parser():
    p = argparse.ArgumentParser(prog="lsmaxwell")
    sub = p.add_subparsers(dest="command", required=True)

    pm = sub.add_parser("mesh", help="export a benchmark mesh")
    pm.add_argument("domain", choices=("square", "lshape", "slit", "cube"))
    pm.add_argument("--n", type=int, required=True)
    pm.add_argument("--side", type=float, default=math.pi)
    pm.add_argument("--diagonal", default="right")
    pm.add_argument("--perturb", type=float, default=0.0)
    pm.add_argument("--seed", type=int, default=1)
    pm.add_argument("--out", required=True)
    pm.set_defaults(func=cmd_mesh)

    ps = sub.add_parser("solve", help="compute one spectrum")
    ps.add_argument("--config", required=True)
    ps.add_argument("--nev", type=int, default=10)
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_solve)

    pt = sub.add_parser("study", help="run a convergence study")
    pt.add_argument("--config", required=True)
    pt.add_argument("--out", required=True)
    pt.set_defaults(func=cmd_study)

    pc = sub.add_parser("compare", help="pairwise difference study")
    pc.add_argument("--config-a", required=True)
    pc.add_argument("--config-b", required=True)
    pc.add_argument("--out", required=True)
    pc.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PencilError as e:
        print(f"solver error: {e}", file=sys.stderr)
        return 3
    except _VALIDATION as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
