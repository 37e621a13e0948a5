"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 infeasible risk
budget, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalError, RiskLQRError
from .model import spectral_radius, validate
from .moments import noise_stats
from .riccati import backward_pass, steady_state
from .risk_dual import (Solution, Status, epsilon_bar, kkt_certificate, lqr_cost,
                        risk_value, solve_at_multiplier, solve_risk_constrained)
from .serialization import (RunConfig, dumps, load_config, policy_from_dict, policy_to_dict,
                            write_csv, write_json)
from .sim import default_threads, empirical_cdf, iter_trajectories, per_rollout_totals

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _output_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.output or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _prepare(cfg: RunConfig):
    report = validate(cfg.model, cfg.cost)
    if not report.ok:
        raise UsageError("model violates the LQR assumptions: " + "; ".join(report.messages))
    return noise_stats(cfg.noise, cfg.cost.Qc)


def _budget_eps_bar(cfg: RunConfig, stats):
    kind, value = cfg.budget_kind, cfg.budget[cfg.budget_kind]
    if kind == "epsilon_bar":
        return value
    if kind == "epsilon":
        return epsilon_bar(value, cfg.model.require_horizon(), stats)
    return None


def cmd_moments(args, cfg: RunConfig) -> int:
    stats = noise_stats(cfg.noise, cfg.cost.Qc)
    print(dumps(stats.to_dict()))
    return EXIT_OK


def cmd_synthesize(args, cfg: RunConfig) -> int:
    stats = _prepare(cfg)
    out = _output_dir(args, cfg)
    solver = cfg.solver
    steady = bool(solver.get("steady", False))
    ss_kw = {"tol": solver.get("riccati_tol", 1e-12), "max_iter": solver.get("max_iter", 100000)}

    if cfg.budget_kind == "mu":
        mu = cfg.budget["mu"]
        if cfg.model.N is None:
            pol = steady_state(cfg.model, cfg.cost, stats, mu, **ss_kw)
            write_json(out / "policy.json", policy_to_dict(pol))
            write_json(out / "solution.json", {
                "status": "steady_state", "mu_star": mu, "J": None, "J_R": None,
                "spectral_radius": spectral_radius(cfg.model.A + cfg.model.B @ pol.K),
                "iterations": pol.iterations, "residual": pol.residual})
            return EXIT_OK
        sol = solve_at_multiplier(cfg.model, cfg.cost, stats, mu)
        if steady:
            sol = _evaluate_policy(
                cfg, stats, steady_state(cfg.model, cfg.cost, stats, mu, **ss_kw)
                .to_affine(cfg.model.N), sol.eps_bar)
    else:
        sol = solve_risk_constrained(
            cfg.model, cfg.cost, stats, _budget_eps_bar(cfg, stats),
            mu_max=solver.get("mu_max", 1e12), tol_rel=solver.get("tol_rel", 1e-9),
            max_doublings=solver.get("max_doublings", 60), kkt_tol=solver.get("kkt_tol", 1e-6))
    write_json(out / "policy.json", policy_to_dict(sol.policy))
    write_json(out / "solution.json", sol.to_dict())
    return EXIT_INFEASIBLE if sol.status is Status.INFEASIBLE else EXIT_OK


def _evaluate_policy(cfg, stats, policy, eps_bar) -> Solution:
    jr = risk_value(policy, cfg.model, stats).jr
    j = lqr_cost(policy, cfg.model, stats, cfg.cost)
    if eps_bar is None:
        eps_bar = jr
    status = Status.INFEASIBLE if jr > eps_bar else (
        Status.OPTIMAL_INTERIOR if policy.mu == 0 else Status.OPTIMAL_ACTIVE)
    sol = Solution(policy.mu, policy, j, jr, float(eps_bar), status)
    sol.kkt = kkt_certificate(sol, cfg.model, cfg.cost, stats,
                              cfg.solver.get("kkt_tol", 1e-6))
    return sol


def _load_policy(path, cfg):
    with open(path) as fh:
        return policy_from_dict(json.load(fh), cfg.model.require_horizon())


def cmd_evaluate(args, cfg: RunConfig) -> int:
    stats = _prepare(cfg)
    policy = _load_policy(args.policy, cfg)
    sol = _evaluate_policy(cfg, stats, policy, _budget_eps_bar(cfg, stats))
    out = _output_dir(args, cfg)
    result = {"mu": policy.mu, "J": sol.j, "J_R": sol.jr, "eps_bar": sol.eps_bar,
              "status": sol.status.value, "kkt": sol.kkt.to_dict()}
    write_json(out / "evaluation.json", result)
    print(dumps(result))
    return EXIT_OK


def _policy_for_run(args, cfg, stats):
    if args.policy:
        return _load_policy(args.policy, cfg)
    if cfg.budget_kind == "mu":
        if cfg.solver.get("steady", False):
            return steady_state(cfg.model, cfg.cost, stats, cfg.budget["mu"]).to_affine(
                cfg.model.require_horizon())
        return backward_pass(cfg.model, cfg.cost, stats, cfg.budget["mu"])
    sol = solve_risk_constrained(cfg.model, cfg.cost, stats, _budget_eps_bar(cfg, stats))
    if sol.status is Status.INFEASIBLE:
        raise _Infeasible()
    return sol.policy


class _Infeasible(Exception):
    pass


def cmd_simulate(args, cfg: RunConfig) -> int:
    stats = _prepare(cfg)
    cfg.model.require_horizon()
    try:
        policy = _policy_for_run(args, cfg, stats)
    except _Infeasible:
        print("risk budget is infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    out = _output_dir(args, cfg)
    seed = args.seed if args.seed is not None else int(cfg.sim.get("seed", 0))
    n_roll = args.rollouts or int(cfg.sim.get("n_rollouts", 1))
    mode = args.mode or cfg.sim.get("mode", "summary")
    model, n, p = cfg.model, cfg.model.n, cfg.model.p
    penalties = []

    if mode == "trajectory":
        header = (["rollout", "t"] + [f"x_{i + 1}" for i in range(n)]
                  + [f"u_{i + 1}" for i in range(p)] + ["stage_penalty", "delta"])

        def rows():
            for r, tr in enumerate(iter_trajectories(policy, model, cfg.noise, cfg.cost,
                                                     seed, n_roll, stats)):
                penalties.append(tr.stage_penalties)
                for t in range(model.N + 1):
                    u = list(tr.inputs[t]) if t < model.N else [None] * p
                    d = tr.pred_errors[t - 1] if t > 0 else None
                    yield [r, t, *tr.states[t], *u, tr.stage_penalties[t], d]
        write_csv(out / "trajectories.csv", header, rows())
        totals = risks = None
    elif mode == "summary":
        totals, risks = per_rollout_totals(policy, model, cfg.noise, cfg.cost, seed, n_roll,
                                           args.threads or default_threads(), stats)
        write_csv(out / "rollouts.csv", ["rollout", "total_cost", "sum_delta_sq"],
                  ([r, a, b] for r, (a, b) in enumerate(zip(totals, risks))))
        n_cdf = min(n_roll, int(cfg.sim.get("cdf_rollouts", 1)))
        for tr in iter_trajectories(policy, model, cfg.noise, cfg.cost, seed, n_cdf, stats):
            penalties.append(tr.stage_penalties)
    else:
        raise UsageError(f"unknown simulation mode {mode!r}")

    pooled = np.concatenate(penalties)
    write_csv(out / "stage_penalty_cdf.csv", ["value", "fraction"], empirical_cdf(pooled))
    summary = {"seed": seed, "n_rollouts": n_roll, "mu": policy.mu,
               "J_model": lqr_cost(policy, model, stats, cfg.cost),
               "J_R_model": risk_value(policy, model, stats).jr,
               "stage_penalty_p95": float(np.percentile(pooled, 95))}
    if totals is not None:
        se = lambda a: float(a.std(ddof=1) / np.sqrt(a.size)) if a.size > 1 else None  # noqa
        summary.update({"J_hat": float(totals.mean()), "J_se": se(totals),
                        "risk_raw_hat": float(risks.mean()), "risk_raw_se": se(risks)})
    write_json(out / "simulation.json", summary)
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig) -> int:
    stats = _prepare(cfg)
    cfg.model.require_horizon()
    if not (0 < args.mu_min < args.mu_max) or args.points < 2:
        raise UsageError("need 0 < --mu-min < --mu-max and --points >= 2")
    out = _output_dir(args, cfg)
    rows = []
    for mu in np.geomspace(args.mu_min, args.mu_max, args.points):
        pol = backward_pass(cfg.model, cfg.cost, stats, float(mu))
        rows.append([float(mu), lqr_cost(pol, cfg.model, stats, cfg.cost),
                     risk_value(pol, cfg.model, stats).jr,
                     spectral_radius(cfg.model.A + cfg.model.B @ pol.K[0])])
    write_csv(out / "frontier.csv", ["mu", "J", "J_R", "spectral_radius"], rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="risklqr",
                                     description="Risk-constrained LQR synthesis and analysis")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--output", help="output directory (overrides the config)")
        return p

    common(sub.add_parser("moments", help="print the noise statistics as JSON"))
    common(sub.add_parser("synthesize", help="solve for the policy and write policy/solution JSON"))
    ev = common(sub.add_parser("evaluate", help="evaluate a saved policy"))
    ev.add_argument("--policy", required=True)
    sim = common(sub.add_parser("simulate", help="Monte Carlo rollouts and stage-penalty CDF"))
    sim.add_argument("--policy")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--rollouts", type=int)
    sim.add_argument("--mode", choices=["summary", "trajectory"])
    sim.add_argument("--threads", type=int)
    sw = common(sub.add_parser("sweep", help="cost/risk frontier over a log-spaced mu grid"))
    sw.add_argument("--mu-min", type=float, default=1e-4)
    sw.add_argument("--mu-max", type=float, default=1e2)
    sw.add_argument("--points", type=int, default=20)
    return parser


COMMANDS = {"moments": cmd_moments, "synthesize": cmd_synthesize, "evaluate": cmd_evaluate,
            "simulate": cmd_simulate, "sweep": cmd_sweep}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (RiskLQRError, UsageError, KeyError, TypeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
