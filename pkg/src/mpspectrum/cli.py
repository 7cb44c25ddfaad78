"""Command-line front end.

    mpspectrum <support|density|masses|edges|simulate|validate> --spec FILE
               [--out-dir DIR] [--seed N] [--n N] [--grid N]

Exit codes: 0 success, 2 invalid input, 3 solver non-convergence,
4 audit failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import simulate as sim
from .errors import ConvergenceError, DomainError, MPSpectrumError
from .reports import ProblemSpec, curve_svg, dump_json, load_problem
from .solver import DEGENERATE_B_FLAG, MasterEquation, ModelCDF
from .support import SupportAnalyzer, curve_csv, edge_density_fit

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENCE, EXIT_AUDIT = 0, 2, 3, 4
COMMANDS = ("support", "density", "masses", "edges", "simulate", "validate")

log = logging.getLogger("mpspectrum")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mpspectrum", description="Limit spectra of B + X^T A X / n.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--spec", required=True, help="problem description (JSON)")
    p.add_argument("--out-dir", default=".", help="directory for output files")
    p.add_argument("--seed", type=int, default=None, help="simulation seed")
    p.add_argument("--n", type=int, default=None, help="matrix dimension for simulation")
    p.add_argument("--grid", type=int, default=None, help="number of density grid points")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _ensemble(problem: ProblemSpec, args) -> sim.EnsembleConfig:
    s = problem.simulation
    n = args.n if args.n is not None else int(s.get("n", 400))
    seed = args.seed if args.seed is not None else int(s.get("seed", 0))
    return sim.EnsembleConfig(n, problem.gamma, seed, problem.A, problem.B, s.get("entry_law", "gaussian"))


def _warn_degenerate(problem: ProblemSpec):
    if problem.B.is_dirac:
        print(f"warning: {DEGENERATE_B_FLAG}: B is a point mass, outside the model assumptions",
              file=sys.stderr)


def _write(out: Path, name: str, text: str) -> Path:
    path = out / name
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)
    return path


def cmd_support(problem, args, out):
    an = SupportAnalyzer(problem.A, problem.B, problem.gamma)
    report = an.determine_support()
    _write(out, "support.json", dump_json(report.to_dict()))
    _write(out, "xh_curve.csv", curve_csv(an.curve_table(window=report.window)))
    _write(out, "xh_curve.svg", curve_svg(an, report))
    return EXIT_OK


def density_grid_points(report, count: int) -> np.ndarray:
    lo, hi = report.support.hull()
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError("density grid needs a bounded support")
    margin = 0.05 * max(hi - lo, 1.0)
    return np.linspace(lo - margin, hi + margin, count)


def cmd_density(problem, args, out):
    report = SupportAnalyzer(problem.A, problem.B, problem.gamma).determine_support()
    xs = density_grid_points(report, args.grid or 401)
    grid = MasterEquation(problem.A, problem.B, problem.gamma).density_grid(xs, problem.solver)
    _write(out, "density.csv", grid.to_csv())
    return EXIT_OK


def cmd_masses(problem, args, out):
    eq = MasterEquation(problem.A, problem.B, problem.gamma)
    atoms = [{"x": b, "mass": w} for b, w in eq.atom_masses()]
    _write(out, "masses.json", dump_json({"atoms": atoms}))
    return EXIT_OK


def cmd_edges(problem, args, out):
    report = SupportAnalyzer(problem.A, problem.B, problem.gamma).determine_support()
    _write(out, "edges.json", dump_json({"edges": [e.to_dict() for e in report.edges],
                                         "flags": report.degenerate_flags}))
    return EXIT_OK


def cmd_simulate(problem, args, out):
    cfg = _ensemble(problem, args)
    res = sim.simulate(cfg)
    _write(out, "eigenvalues.csv", res.to_csv())
    return EXIT_OK


def run_validation(problem: ProblemSpec, cfg: sim.EnsembleConfig) -> dict:
    """KS distance, gap and atom audits and edge fits for one ensemble."""
    v = problem.validation
    an = SupportAnalyzer(problem.A, problem.B, problem.gamma)
    report = an.determine_support()
    eq = MasterEquation(problem.A, problem.B, problem.gamma)
    F = ModelCDF(eq, report, problem.solver)
    eigs = sim.simulate(cfg)
    ks = sim.ks_distance(eigs, F)
    audit = sim.gap_and_mass_audit(eigs, report, v["margin"], v["atom_margin"], v["atom_tol"])
    fits = [edge_density_fit(eq, e) for e in report.edges]
    for f in fits:
        f["ok"] = bool(abs(f["slope"] - 0.5) <= v["slope_tol"] and f["ratio_max_dev"] <= v["ratio_tol"])
    ok = ks < v["ks_tol"] and audit.ok and all(f["ok"] for f in fits)
    return {
        "n": cfg.n, "p": cfg.p, "seed": cfg.seed, "entry_law": cfg.entry_law,
        "ks": ks, "ks_tol": v["ks_tol"], "model_mass": F.total_mass,
        "audit": audit.to_dict(), "edge_fits": fits,
        "edge_fits_ok": all(f["ok"] for f in fits),
        "flags": report.degenerate_flags, "ok": bool(ok),
    }


def cmd_validate(problem, args, out):
    result = run_validation(problem, _ensemble(problem, args))
    _write(out, "audit.json", dump_json(result))
    print(f"KS={result['ks']:.4g} gaps_ok={result['audit']['ok']} edge_fits_ok={result['edge_fits_ok']}")
    return EXIT_OK if result["ok"] else EXIT_AUDIT


HANDLERS = {"support": cmd_support, "density": cmd_density, "masses": cmd_masses,
            "edges": cmd_edges, "simulate": cmd_simulate, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        problem = load_problem(args.spec)
    except OSError as exc:
        print(f"error: cannot read spec: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (DomainError, ValueError, TypeError, KeyError) as exc:
        print(f"error: invalid spec: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _warn_degenerate(problem)
    t0 = time.perf_counter()
    try:
        code = HANDLERS[args.command](problem, args, out)
    except ConvergenceError as exc:
        print(f"error: solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (DomainError, MPSpectrumError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    log.info("%s finished in %.2f s", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
