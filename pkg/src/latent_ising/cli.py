"""Command-line front end.

Exit codes: 0 success, 1 invalid input or configuration, 2 a solver did
not converge (its output is still written).
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .duality import duality_report, solve_two_sided_dual
from .exceptions import ConfigError
from .experiments import (
    AGGREGATE_HEADER,
    CONCENTRATION_HEADER,
    SWEEP_HEADER,
    ExperimentConfig,
    concentration_experiment,
    consistency_sweep,
    generate_truth,
)
from .geometry import diagnostics_report
from .ising import empirical_second_moment
from .sampling import exact_sample
from .solver import PATH_HEADER, path_rows, solve_path, solve_slr, zero_solution_threshold

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="master random seed")
    p.add_argument("--config", type=Path, default=None, help="experiment/solver JSON config")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="latent-ising",
                                     description="Sparse + low-rank Ising estimation tools")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="ground truth and a sampled dataset")
    g.add_argument("--n", type=int, default=None, help="sample size (default: largest n_grid)")

    f = sub.add_parser("fit", parents=[common], help="fit a dataset")
    f.add_argument("--data", type=Path, required=True)
    f.add_argument("--lambda", dest="lam", type=float, required=True)
    f.add_argument("--gamma", type=float, required=True)

    p = sub.add_parser("path", parents=[common], help="warm-started regularisation path")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--lambdas", type=str, default=None, help="comma-separated descending values")
    p.add_argument("--num", type=int, default=10, help="grid size when --lambdas is absent")
    p.add_argument("--ratio", type=float, default=0.01, help="smallest/largest lambda")

    d = sub.add_parser("diagnose", parents=[common], help="geometry report for (S*, L*)")
    d.add_argument("--s-star", type=Path, required=True)
    d.add_argument("--l-star", type=Path, required=True)
    d.add_argument("--nu", type=float, default=0.5)
    d.add_argument("--lambda", dest="lam", type=float, default=None)
    d.add_argument("--c-s", type=float, default=1.0)
    d.add_argument("--c-l", type=float, default=1.0)
    d.add_argument("--restarts", type=int, default=8)

    m = sub.add_parser("maxent-check", parents=[common], help="max-entropy duality report")
    src = m.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path)
    src.add_argument("--moments", type=Path, help="second-moment matrix file")
    m.add_argument("--c", type=float, required=True)
    m.add_argument("--lambda", dest="lam", type=float, required=True)

    sub.add_parser("sweep", parents=[common], help="consistency sweep over n_grid")

    c = sub.add_parser("concentration", parents=[common], help="||Phi^n - Phi*|| versus n")
    c.add_argument("--theta", type=Path, default=None, help="interaction matrix (default 0)")
    c.add_argument("--d", type=int, default=8)
    c.add_argument("--n-grid", type=str, default="100,1000,10000")
    c.add_argument("--trials", type=int, default=50)
    return parser


def _config(args):
    data = io.load_json(args.config) if args.config else {}
    if not isinstance(data, dict):
        raise ConfigError("config", "must be a JSON object")
    cfg = ExperimentConfig.from_dict(data)
    if args.seed is not None:
        cfg.truth_seed = args.seed
    return cfg


def _seed(args):
    return 0 if args.seed is None else args.seed


def _table(args, name, header, rows):
    args.out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        path = args.out / f"{name}.json"
        io.save_json(path, [dict(zip(header, r)) for r in rows])
    else:
        path = args.out / f"{name}.csv"
        io.write_csv(path, header, rows)
    return path


def _moments(path):
    return empirical_second_moment(io.load_dataset(path))


def cmd_generate(args):
    cfg = _config(args)
    truth = generate_truth(cfg)
    n = args.n or cfg.n_grid[-1]
    data = exact_sample(truth.theta, n, seed=np.random.default_rng([_seed(args), n]))
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    io.save_model(out / "model.json", truth.model)
    io.save_matrix(out / "s_star.csv", truth.s_star)
    io.save_matrix(out / "l_star.csv", truth.l_star)
    io.save_dataset(out / "data.txt", data)
    io.save_json(out / "truth.json", {"degenerate": truth.degenerate, "note": truth.note,
                                      "n": n, "config": cfg.to_dict()})
    return EXIT_OK


def cmd_fit(args):
    cfg = _config(args)
    res = solve_slr(_moments(args.data), args.lam, args.gamma, cfg.solver)
    args.out.mkdir(parents=True, exist_ok=True)
    io.save_json(args.out / "fit.json", res.to_dict())
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_path(args):
    cfg = _config(args)
    phi_n = _moments(args.data)
    if args.lambdas:
        lams = [float(v) for v in args.lambdas.split(",")]
    else:
        if args.num < 1 or not 0 < args.ratio < 1:
            raise ConfigError("num/ratio", "need num >= 1 and 0 < ratio < 1")
        top = zero_solution_threshold(phi_n, args.gamma)
        lams = list(top * np.geomspace(1.0, args.ratio, args.num))
    results = solve_path(phi_n, lams, args.gamma, cfg.solver)
    _table(args, "path", PATH_HEADER, path_rows(results))
    return EXIT_OK if all(r.converged for r in results) else EXIT_NOT_CONVERGED


def cmd_diagnose(args):
    s = io.load_matrix(args.s_star)
    l = io.load_matrix(args.l_star)
    rep = diagnostics_report(s, l, nu=args.nu, lambda_n=args.lam, c_s=args.c_s, c_l=args.c_l,
                             restarts=args.restarts, seed=_seed(args))
    args.out.mkdir(parents=True, exist_ok=True)
    io.save_json(args.out / "diagnostics.json", rep)
    return EXIT_OK


def cmd_maxent(args):
    cfg = _config(args)
    phi_n = _moments(args.data) if args.data else io.load_matrix(args.moments)
    sol = solve_two_sided_dual(phi_n, args.c, args.lam, cfg.solver)
    rep = duality_report(sol, phi_n, args.c, args.lam, penalize_diagonal=cfg.solver.penalize_diagonal)
    args.out.mkdir(parents=True, exist_ok=True)
    io.save_json(args.out / "duality.json", rep)
    return EXIT_OK if sol.converged else EXIT_NOT_CONVERGED


def cmd_sweep(args):
    cfg = _config(args)
    res = consistency_sweep(cfg)
    _table(args, "sweep", SWEEP_HEADER, res.rows)
    _table(args, "sweep_summary", AGGREGATE_HEADER, res.aggregates)
    io.save_json(args.out / "sweep_fit.json", {"slope": res.slope, "gamma": res.gamma,
                                               "config": cfg.to_dict()})
    return EXIT_OK


def cmd_concentration(args):
    theta = io.load_matrix(args.theta) if args.theta else np.zeros((args.d, args.d))
    try:
        grid = [int(v) for v in args.n_grid.split(",")]
    except ValueError:
        raise ConfigError("n_grid", "must be comma-separated integers") from None
    res = concentration_experiment(theta, grid, args.trials, _seed(args))
    _table(args, "concentration", CONCENTRATION_HEADER, res.rows)
    io.save_json(args.out / "concentration_fit.json", {"slope": res.slope})
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "path": cmd_path,
    "diagnose": cmd_diagnose,
    "maxent-check": cmd_maxent,
    "sweep": cmd_sweep,
    "concentration": cmd_concentration,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: invalid config field {exc}", file=sys.stderr)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
