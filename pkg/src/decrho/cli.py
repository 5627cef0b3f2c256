"""Command-line front end: ``decrho <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 model or policy parse error,
3 budget exceeded, 4 file I/O error, 5 a verification suite failed.
"""

from __future__ import annotations

import argparse
import inspect
import json
import sys
from pathlib import Path

import numpy as np

from .apas import ApasConfig, run_apas, run_apas_no_adaptation
from .benchmarks import DOMAINS, domain_by_name, emit_benchmarks
from .brute_force import DEFAULT_BUDGET, brute_force_pair
from .conversion import ConvertedModel
from .evaluation import evaluate_exact, evaluate_mc
from .exceptions import BudgetExceededError, DpomdpParseError, ModelError, PolicyStructureError
from .io.documents import read_policy_document, serialize_policy, serialize_report
from .io.dpomdp import read_dpomdp
from .model import validate_model
from .planner import PlannerParams
from .rewards import REWARDS, AlphaSet, get_reward, sample_simplex
from .verification import SUITE_ALIASES, SUITES

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_BUDGET, EXIT_IO, EXIT_VERIFY = range(6)


class UsageError(Exception):
    pass


def _add_model_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", type=Path, help=".dpomdp problem file")
    src.add_argument("--domain", choices=DOMAINS, help="built-in domain")
    p.add_argument("--horizon", type=int, help="planning horizon (overrides the file's '# horizon:' line)")


def _add_gamma_args(p):
    p.add_argument("--K", type=int, default=3, help="number of linearization points / prediction actions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reward", choices=sorted(REWARDS), default="negentropy")


def _load_model(args):
    if args.domain:
        return domain_by_name(args.domain, args.horizon if args.horizon else 2)
    return read_dpomdp(args.model, args.horizon)


def _random_gamma(args, model) -> AlphaSet:
    if args.K < 1:
        raise UsageError("--K must be >= 1")
    rng = np.random.default_rng(args.seed)
    return AlphaSet.from_points(get_reward(args.reward), sample_simplex(model.n_states, args.K, rng))


def cmd_plan(args):
    model = _load_model(args)
    params = PlannerParams(args.fsc_width, args.iterations, args.restart_prob)
    config = ApasConfig(args.K, args.outer_iterations, params, args.final_mode, args.seed)
    runner = run_apas_no_adaptation if args.no_adapt else run_apas
    policy, report = runner(model, get_reward(args.reward), config)
    args.policy_out.write_text(serialize_policy(policy, report.best_value, report.best_gamma.points, args.seed),
                               encoding="utf-8")
    args.report_out.write_text(serialize_report(report, str(args.policy_out)), encoding="utf-8")
    for k, rec in enumerate(report.iterations):
        print(f"iteration {k}: value={rec.value:.6f} best={rec.best_value:.6f}")
    print(f"best value {report.best_value:.6f}; policy -> {args.policy_out}, report -> {args.report_out}")
    return EXIT_OK


def cmd_evaluate(args):
    model = _load_model(args)
    policy, meta = read_policy_document(args.policy.read_text(encoding="utf-8"))
    f = get_reward(args.reward)
    if args.final == "true":
        problem, reward = model, f
    else:
        if meta.get("gamma_points") is None:
            raise UsageError("policy document has no gamma_points; use --final true")
        gamma = AlphaSet.from_points(f, meta["gamma_points"])
        problem = (model, gamma) if args.final == "rho" else ConvertedModel(model, gamma)
        reward = None
    if args.mode == "exact":
        print(f"value {evaluate_exact(problem, policy, reward=reward):.10f}")
    else:
        if args.samples < 1:
            raise UsageError("--samples must be >= 1 in mc mode")
        mean, se = evaluate_mc(problem, policy, args.samples, np.random.default_rng(args.seed), reward=reward)
        print(f"value {mean:.10f} +- {se:.10f} (standard error, {args.samples} rollouts)")
    return EXIT_OK


def cmd_convert(args):
    model = _load_model(args)
    converted = ConvertedModel(model, _random_gamma(args, model))
    plus = converted.model
    h = converted.prediction_step
    summary = {
        "source_horizon": model.horizon,
        "horizon": plus.horizon,
        "agents": plus.n_agents,
        "states": plus.n_states,
        "prediction_actions_per_agent": list(plus.action_sizes[h]),
        "joint_prediction_actions": plus.n_joint_actions(h),
        "final_observations_per_agent": list(plus.observation_sizes[h]),
        "alpha_vectors": converted.prediction_vectors().tolist(),
        "final_reward": plus.rewards[h].tolist(),
        "validation_problems": validate_model(plus),
    }
    print(json.dumps(summary, indent=1))
    return EXIT_OK


def cmd_brute_force(args):
    model = _load_model(args)
    gamma = _random_gamma(args, model)
    res = brute_force_pair(model, gamma, args.budget)
    print(f"V*(centralized prediction reward) = {res.rho_value:.10f}")
    print(f"V*(converted model)               = {res.plus_value:.10f}")
    print(f"centralized value of converted optimum = {res.rho_value_of_plus_policy:.10f}")
    print(f"max decentralization gap = {res.max_gap:.10f} (bound {res.loss_bound:.10f})")
    print(f"policies enumerated = {res.n_policies}")
    holds = res.plus_value <= res.rho_value + 1e-9
    print(f"converted optimum <= centralized optimum: {'yes' if holds else 'NO'}")
    return EXIT_OK


def cmd_bench(args):
    for path in emit_benchmarks(args.out, args.horizon):
        print(path)
    return EXIT_OK


def cmd_verify(args):
    names = list(SUITES) if args.suite == "all" else [SUITE_ALIASES.get(args.suite, args.suite)]
    ok = True
    for name in names:
        fn = SUITES[name]
        kwargs = {"seed": args.seed}
        if args.instances is not None and "instances" in inspect.signature(fn).parameters:
            kwargs["instances"] = args.instances
        result = fn(**kwargs)
        print(result.line())
        if name == "gap-sign":
            print(f"  max observed negative gap: {max(0.0, -result.metric):.3g}")
        for key, value in result.details.items():
            print(f"  {key}: {value:.6g}" if isinstance(value, float) else f"  {key}: {value}")
        ok &= result.passed
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decrho", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="adaptive prediction action search")
    _add_model_args(p)
    _add_gamma_args(p)
    p.add_argument("--outer-iterations", type=int, default=10)
    p.add_argument("--fsc-width", type=int, default=2)
    p.add_argument("--iterations", type=int, default=20, help="policy improvement passes per plan call")
    p.add_argument("--restart-prob", type=float, default=0.1)
    p.add_argument("--final-mode", choices=("true", "rho"), default="true")
    p.add_argument("--no-adapt", action="store_true", help="resample alpha vectors instead of adapting them")
    p.add_argument("--policy-out", type=Path, default=Path("policy.json"))
    p.add_argument("--report-out", type=Path, default=Path("report.json"))
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("evaluate", help="value of a saved policy")
    _add_model_args(p)
    p.add_argument("--policy", type=Path, required=True)
    p.add_argument("--final", choices=("true", "rho", "plus"), default="true",
                   help="final reward: f of the joint estimate, its tangent approximation, or predictions")
    p.add_argument("--reward", choices=sorted(REWARDS), default="negentropy")
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("convert", help="summarize the model with prediction actions")
    _add_model_args(p)
    _add_gamma_args(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("brute-force", help="exhaustive optimum of both problems")
    _add_model_args(p)
    _add_gamma_args(p)
    p.add_argument("--budget", type=float, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_brute_force)

    p = sub.add_parser("bench", help="write built-in domains as .dpomdp files")
    p.add_argument("--out", type=Path, default=Path("benchmarks"))
    p.add_argument("--horizon", type=int, default=2)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("--suite", choices=["all"] + list(SUITES) + sorted(SUITE_ALIASES), default="all")
    p.add_argument("--instances", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (DpomdpParseError, PolicyStructureError, ModelError, json.JSONDecodeError) as exc:
        code, message = EXIT_PARSE, str(exc)
    except BudgetExceededError as exc:
        code, message = EXIT_BUDGET, str(exc)
    except OSError as exc:
        code, message = EXIT_IO, str(exc)
    except (UsageError, ValueError) as exc:
        code, message = EXIT_USAGE, str(exc)
    print(f"error: {message}", file=sys.stderr)
    return code

if __name__ == "__main__":
    sys.exit(main())
