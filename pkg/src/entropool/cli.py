"""Command-line pipeline: load panel, compile views, solve, pool, report.

Subcommands:

  solve               panel + view file -> posterior weights + diagnostics
  compare-analytical  discretized normal model vs closed-form posterior
  frontier            posterior + book -> mean-CVaR frontier CSV
  demo                write a synthetic option-desk dataset to a directory
  serve               run the HTTP service

Exit codes: 0 converged and feasible, 2 parse error, 3 infeasible views,
4 not converged.
"""

import argparse
import json
import sys
from typing import List, Optional

import numpy as np

from . import casestudy
from .expressions import ExpressionError
from .normal import (NormalModel, NormalViewSpec, discretize, normal_posterior,
                     normal_view_constraints)
from .options import (BootstrapConfig, FrontierSpec, build_pnl_panel,
                      current_price, kernel_bootstrap, load_book,
                      mean_cvar_frontier, save_book, save_frontier_csv,
                      zero_delta_budget_constraints)
from .scenarios import (PanelFormatError, ProbabilityVector, load_panel_csv,
                        load_probabilities, save_panel_csv, save_probabilities)
from .solver import (InfeasibleViewsError, NotConvergedError, SolverConfig,
                     relative_entropy, solve)
from .views import (ViewCompileError, ViewSchemaError, load_views, view_to_json)
from .workflow import solve_view_groups

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_NOT_CONVERGED = 4

PARSE_ERRORS = (PanelFormatError, ViewSchemaError, ViewCompileError,
                ExpressionError, OSError, json.JSONDecodeError, ValueError)


def _solver_config(args) -> SolverConfig:
    return SolverConfig(dual_tolerance=args.tol, max_iterations=args.max_iter)


def _cmd_solve(args) -> int:
    panel = load_panel_csv(args.panel)
    prior = (load_probabilities(args.prior, panel.n_scenarios)
             if args.prior else ProbabilityVector.uniform(panel.n_scenarios))
    groups = load_views(args.views)
    if args.confidence is not None:
        if len(groups) != 1:
            raise ViewSchemaError(
                "--confidence applies to single-user view files only")
        user_id, _, views = groups[0]
        groups = [(user_id, args.confidence, views)]
    config = _solver_config(args)
    pooled, posteriors, diagnostics = solve_view_groups(panel, prior, groups,
                                                        config)
    save_probabilities(pooled, args.out)
    payload = {
        "converged": all(d["converged"] for d in diagnostics.values()),
        "users": diagnostics,
        "pooled": {"relative_entropy": relative_entropy(pooled, prior)},
    }
    diag_path = args.diagnostics or (str(args.out) + ".diag.json")
    with open(diag_path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)
    print(f"wrote {args.out} and {diag_path}")
    for user_id, diag in diagnostics.items():
        print(f"  {user_id}: iterations={diag['iterations']} "
              f"max_violation={diag['max_constraint_violation']:.3g} "
              f"relative_entropy={diag['relative_entropy']:.6g}")
    return EXIT_OK


def _cmd_compare_analytical(args) -> int:
    with open(args.model, "r", encoding="utf-8") as handle:
        model = NormalModel.from_json(handle.read())
    with open(args.normal_views, "r", encoding="utf-8") as handle:
        views = NormalViewSpec.from_json(handle.read())
    posterior_model = normal_posterior(model, views)
    panel, prior = discretize(model, args.j, args.seed)
    constraints = normal_view_constraints(panel, prior, model, views)
    result = solve(constraints, prior, _solver_config(args))
    weights = result.posterior

    sample_mu = panel.data.T @ weights.weights
    centered = panel.data - sample_mu
    sample_sigma = (centered * weights.weights[:, np.newaxis]).T @ centered

    print(f"J={args.j} seed={args.seed} iterations={result.iterations} "
          f"max_violation={result.max_constraint_violation:.3g}")
    print(f"{'moment':<12}{'analytical':>14}{'numerical':>14}{'gap':>12}")
    for i in range(model.dim):
        a, b = posterior_model.mu[i], sample_mu[i]
        print(f"mu[{i}]{'':<7}{a:>14.6f}{b:>14.6f}{abs(a - b):>12.3g}")
    for i in range(model.dim):
        for l in range(i, model.dim):
            a, b = posterior_model.sigma[i, l], sample_sigma[i, l]
            print(f"sigma[{i},{l}]{'':<3}{a:>14.6f}{b:>14.6f}{abs(a - b):>12.3g}")
    return EXIT_OK


def _cmd_frontier(args) -> int:
    panel = load_panel_csv(args.panel)
    p = (load_probabilities(args.posterior, panel.n_scenarios)
         if args.posterior else ProbabilityVector.uniform(panel.n_scenarios))
    book = load_book(args.book)
    prices = [current_price(c) for c in book]
    pnl = build_pnl_panel(panel, book, prices)
    B, lo, hi = zero_delta_budget_constraints(book, prices)
    spec = FrontierSpec(gamma=args.gamma,
                        lambdas=tuple(args.lambdas),
                        position_bound=args.position_cap,
                        B=B, b_lower=lo, b_upper=hi)
    points = mean_cvar_frontier(pnl, p, spec)
    save_frontier_csv(points, pnl.instrument_ids, args.out)
    print(f"wrote {args.out} ({len(points)} frontier points)")
    return EXIT_OK


def _cmd_demo(args) -> int:
    import os

    os.makedirs(args.out_dir, exist_ok=True)
    history = casestudy.case_study_history(t_obs=args.rows, seed=args.seed)
    panel, prior = kernel_bootstrap(
        history, BootstrapConfig(epsilon=0.15, j=args.j, seed=args.seed + 1),
        factor_names=casestudy.FACTOR_NAMES)
    panel_path = os.path.join(args.out_dir, "panel.csv")
    save_panel_csv(panel, panel_path)
    with open(os.path.join(args.out_dir, "panel.json"), "w", encoding="utf-8") as handle:
        json.dump({"factor_names": panel.factor_names,
                   "data": panel.data.tolist()}, handle)
    views_payload = {"users": [
        {"user_id": user_id, "overall_confidence": confidence,
         "views": [view_to_json(v) for v in views]}
        for user_id, confidence, views in casestudy.analyst_views()]}
    with open(os.path.join(args.out_dir, "views.json"), "w", encoding="utf-8") as handle:
        json.dump(views_payload, handle, indent=2)
    save_book(casestudy.case_study_book(),
              os.path.join(args.out_dir, "book.json"))
    print(f"wrote panel.csv ({panel.n_scenarios} x {panel.n_factors}), "
          f"panel.json, views.json, book.json under {args.out_dir}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entropool",
        description="scenario reweighting under market views")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="compile views and solve the posterior")
    p_solve.add_argument("--panel", required=True, help="scenario panel CSV")
    p_solve.add_argument("--views", required=True, help="views JSON file")
    p_solve.add_argument("--prior", help="sidecar probability file (default uniform)")
    p_solve.add_argument("--out", required=True, help="posterior weights output path")
    p_solve.add_argument("--diagnostics", help="diagnostics JSON path "
                                               "(default <out>.diag.json)")
    p_solve.add_argument("--tol", type=float, default=1e-9)
    p_solve.add_argument("--max-iter", type=int, default=500)
    p_solve.add_argument("--confidence", type=float,
                         help="pooling confidence for single-user view files")
    p_solve.set_defaults(func=_cmd_solve)

    p_cmp = sub.add_parser("compare-analytical",
                           help="numerical posterior vs closed-form normal posterior")
    p_cmp.add_argument("--model", required=True, help="JSON {mu, sigma}")
    p_cmp.add_argument("--normal-views", required=True,
                       help="JSON {Q, mu_Q, G, sigma_G}")
    p_cmp.add_argument("--j", type=int, default=100_000)
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("--tol", type=float, default=1e-9)
    p_cmp.add_argument("--max-iter", type=int, default=500)
    p_cmp.set_defaults(func=_cmd_compare_analytical)

    p_front = sub.add_parser("frontier", help="mean-CVaR frontier for an option book")
    p_front.add_argument("--panel", required=True)
    p_front.add_argument("--posterior", help="probability file (default uniform)")
    p_front.add_argument("--book", required=True, help="book JSON file")
    p_front.add_argument("--gamma", type=float, default=0.95)
    p_front.add_argument("--lambdas", type=float, nargs="+",
                         default=[0.0, 0.01, 0.02, 0.03, 0.05, 0.1, 1000.0])
    p_front.add_argument("--position-cap", type=float, default=100.0)
    p_front.add_argument("--out", required=True, help="frontier CSV output path")
    p_front.set_defaults(func=_cmd_frontier)

    p_demo = sub.add_parser("demo", help="write the synthetic option-desk dataset")
    p_demo.add_argument("--out-dir", required=True)
    p_demo.add_argument("--rows", type=int, default=700)
    p_demo.add_argument("--j", type=int, default=10_000)
    p_demo.add_argument("--seed", type=int, default=20080915)
    p_demo.set_defaults(func=_cmd_demo)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8321)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleViewsError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NotConvergedError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except PARSE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
