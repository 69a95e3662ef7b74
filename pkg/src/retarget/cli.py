"""Command-line interface.

Exit codes: 0 when the checked claim holds, 2 when it is refuted, 1 on usage or
input errors. The default thread count comes from RETARGET_THREADS.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .bandit import BanditSpec, bandit_retarget_check, p_train_estimate, success_lower_bound
from .decisions import KINDS as RULE_KINDS
from .decisions import DecisionRule
from .mdp import (
    MDPError,
    RewardSampler,
    avg_opt_probability,
    load_mdp,
    one_cycle_states,
    rsd_set,
    state_basis,
)
from .perms import Domain, OrbitTooLarge
from .scenarios import (
    BUILTINS,
    TABLES,
    ConfigError,
    load_builtin,
    load_config,
    parse_names,
    parse_number,
    parse_vector,
    reproduce_table,
    run_scenario,
)
from .tendency import check_geq_most

EXIT_HOLDS, EXIT_ERROR, EXIT_REFUTED = 0, 1, 2
THREADS_ENV = "RETARGET_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _vectors(text: str, d: int) -> frozenset:
    """Parse ';'-separated vectors; ``eK`` is shorthand for the K-th basis vector."""
    out = []
    for chunk in (c.strip() for c in text.split(";")):
        if not chunk:
            continue
        if chunk.startswith("e") and chunk[1:].isdigit():
            k = int(chunk[1:])
            if k >= d:
                raise UsageError(f"basis index {k} out of range for dimension {d}")
            out.append(tuple(1.0 if j == k else 0.0 for j in range(d)))
        else:
            v = parse_vector(chunk)
            if len(v) != d:
                raise UsageError(f"vector {chunk!r} has length {len(v)}, expected {d}")
            out.append(v)
    return frozenset(out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="retarget", description="Counting checks for orbit-level tendencies of decision rules.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    scenario = sub.add_parser("scenario", help="run a scenario")
    scenario_sub = scenario.add_subparsers(dest="action", required=True, parser_class=_Parser)
    run = scenario_sub.add_parser("run", help="run a config file or a built-in scenario")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", type=Path)
    source.add_argument("--builtin", choices=BUILTINS)
    run.add_argument("--seed", type=int)
    run.add_argument("--json", type=Path, help="write the JSON report here ('-' for stdout)")
    run.add_argument("--threads", type=int)

    table = sub.add_parser("table", help="print a reproduced table")
    table.add_argument("table_id", choices=TABLES)
    table.add_argument("--format", choices=("text", "csv"), default="text")

    mdp = sub.add_parser("mdp", help="MDP checks")
    mdp_sub = mdp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    avg = mdp_sub.add_parser("avgprob", help="Monte Carlo average-optimality probability")
    avg.add_argument("--fixture", type=Path, required=True)
    avg.add_argument("--samples", type=int, required=True)
    avg.add_argument("--seed", type=int, default=0)
    avg.add_argument("--start", help="start state (default: first declared state)")
    avg.add_argument("--dprime", default=None,
                     help="comma-separated states whose point RSDs form D' (default: first terminal state)")
    avg.add_argument("--sampler", choices=("iid-uniform-01", "iid-gaussian"), default="iid-uniform-01")

    bandit = sub.add_parser("bandit", help="bandit checks")
    bandit_sub = bandit.add_subparsers(dest="action", required=True, parser_class=_Parser)
    verify = bandit_sub.add_parser("verify", help="success bound and retargetability")
    verify.add_argument("--eps", type=float, required=True)
    verify.add_argument("--trials", type=int, required=True)
    verify.add_argument("--runs", type=int, required=True)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--utilities", default="10,5,0,2,1")

    orbit = sub.add_parser("orbit", help="orbit-level checks")
    orbit_sub = orbit.add_subparsers(dest="action", required=True, parser_class=_Parser)
    check = orbit_sub.add_parser("check", help="count strict preferences over one orbit")
    check.add_argument("--vector", required=True, help='parameter vector, e.g. "10,5,0"')
    check.add_argument("--A", dest="A", required=True, help='";"-separated vectors or eK basis shorthand')
    check.add_argument("--B", dest="B", required=True)
    check.add_argument("--C", dest="C", help="choice set (default: A ∪ B)")
    check.add_argument("--rule", choices=RULE_KINDS, required=True)
    check.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    check.add_argument("--n", type=int, required=True)
    check.add_argument("--domain", default="all")
    return parser


def _cmd_scenario(args) -> int:
    cfg = load_config(args.config) if args.config else load_builtin(args.builtin)
    threads = args.threads if args.threads is not None else _default_threads()
    report = run_scenario(cfg, seed=args.seed, workers=max(1, threads))
    text = report.to_json()
    if args.json is not None and str(args.json) == "-":
        sys.stdout.write(text)
    else:
        if args.json is not None:
            args.json.write_text(text)
        print(f"{report.scenario}: {report.verdict} (seed {report.seed})")
    return EXIT_HOLDS if report.holds else EXIT_REFUTED


def _cmd_mdp(args) -> int:
    mdp = load_mdp(args.fixture)
    start = args.start or mdp.states[0]
    if start not in mdp.states:
        raise UsageError(f"unknown start state {start!r}")
    rsds = rsd_set(mdp, start)
    if args.dprime:
        names = parse_names(args.dprime)
    else:
        _, terminal = one_cycle_states(mdp)
        names = [s for s in mdp.states if s in terminal][:1]
    for name in names:
        if name not in mdp.states:
            raise UsageError(f"unknown state {name!r}")
    dprime = frozenset(state_basis(mdp, s) for s in names)
    rest = rsds - dprime
    p_dp = avg_opt_probability(mdp, dprime, RewardSampler(args.sampler, args.seed), args.samples, start, rsds)
    p_rest = avg_opt_probability(mdp, rest, RewardSampler(args.sampler, args.seed), args.samples, start, rsds)
    out = {
        "start": start,
        "dprime": list(names),
        "num_rsds": len(rsds),
        "avg_opt_dprime": p_dp.estimate.to_dict(),
        "avg_opt_rest": p_rest.estimate.to_dict(),
        "discarded_ties": p_dp.discarded_ties,
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_HOLDS


def _cmd_bandit(args) -> int:
    u = parse_vector(args.utilities)
    spec = BanditSpec(u, args.eps, args.trials)
    best = max(range(len(u)), key=lambda a: u[a])
    est = p_train_estimate(spec, [best], args.runs, args.seed)
    bound = success_lower_bound(args.eps, args.trials, len(u))
    retarget = bandit_retarget_check(u, args.eps, args.trials, args.runs, args.seed + 1)
    bound_ok = est.mean >= bound - 3 * est.stderr
    out = {
        "optimal_arm_frequency": est.to_dict(),
        "lower_bound": bound,
        "bound_ok": bound_ok,
        "retarget": retarget.to_dict(),
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_HOLDS if bound_ok and retarget.passes else EXIT_REFUTED


def _cmd_orbit(args) -> int:
    theta = parse_vector(args.vector)
    d = len(theta)
    A, B = _vectors(args.A, d), _vectors(args.B, d)
    C = _vectors(args.C, d) if args.C else A | B
    params = {}
    for item in args.param:
        if "=" not in item:
            raise UsageError(f"--param expects KEY=VALUE, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        params[key] = int(value) if key in ("k", "budget", "seed", "choice", "a", "b") else parse_number(value)
    rule = DecisionRule(args.rule, params)
    report = check_geq_most(rule.bind(C), A, B, theta, Domain.parse(args.domain), args.n)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_HOLDS if report.holds else EXIT_REFUTED


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {"scenario": _cmd_scenario, "table": None, "mdp": _cmd_mdp,
                   "bandit": _cmd_bandit, "orbit": _cmd_orbit}[args.command]
        if handler is None:
            sys.stdout.write(reproduce_table(args.table_id, args.format))
            return EXIT_HOLDS
        return handler(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except (ConfigError, MDPError, OrbitTooLarge, ValueError, KeyError, OSError) as exc:
        print(f"retarget: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
