"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

import functools
import math
import os
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from oracles import planted_instance, sampled_strict_winners  # noqa: E402
from retarget.bandit import (  # noqa: E402
    BanditSpec,
    bandit_retarget_check,
    p_train_estimate,
    train_batch,
)
from retarget.decisions import DecisionRule, frac_optimal_inequalities_check  # noqa: E402
from retarget.mdp import (  # noqa: E402
    RewardSampler,
    avg_opt_probability,
    builtin_fixture_path,
    enumerate_policies,
    load_mdp,
    orbit_avgprob_check,
    parse_mdp,
    rsd,
    rsd_set,
    state_basis,
    visit_distribution,
)
from retarget.outcomes import find_copies, nondominated, verify_copies  # noqa: E402
from retarget.perms import ALL, Permutation  # noqa: E402
from retarget.scenarios import permute_states_rows, rationality_tables  # noqa: E402
from retarget.tendency import (  # noqa: E402
    RetargetCertificate,
    TabularDecisionFunction,
    agreement_bound_holds,
    check_general_orbit_conditions,
    check_geq_most,
    check_geq_most_sampled,
    check_multi_retargetable,
    counterexample_fixture,
    limited_transitivity_holds,
    order_inversion_holds,
    report_from_values,
    verify_counting_theorem,
)

RESULTS = []


def criterion(tag, title, budget=None):
    """Record one PASS/FAIL line per criterion; a blown runtime budget is a failure."""

    def wrap(fn):
        @functools.wraps(fn)
        def run():
            start = time.perf_counter()
            try:
                detail = fn()
            except Exception as exc:
                elapsed = time.perf_counter() - start
                line = f"[FAIL] {tag} {title}: {type(exc).__name__}: {exc} ({elapsed:.1f} s)"
                RESULTS.append(line)
                print(line)
                raise
            elapsed = time.perf_counter() - start
            over = budget is not None and elapsed > budget
            status = "FAIL" if over else "PASS"
            suffix = f"; over the {budget} s budget" if over else ""
            line = f"[{status}] {tag} {title}: {detail} ({elapsed:.1f} s{suffix})"
            RESULTS.append(line)
            print(line)
            assert not over, line

        return run

    return wrap


E3 = [tuple(1.0 if j == i else 0.0 for j in range(3)) for i in range(3)]
C3 = frozenset(E3)
A_PAC = frozenset(E3[:1])
B_PAC = frozenset(E3[1:])


@criterion("AC1", "permuted utilities pick the expected best outcome", budget=1)
def test_ac1_permute_states():
    rows = permute_states_rows()
    expected = ["ghost", "apple", "cherry", "ghost", "apple", "cherry"]
    names = ("ghost", "apple", "cherry")
    assert [best for _, _, best in rows] == expected
    # independent argmax on the raw vectors
    assert [names[int(np.argmax(v))] for _, v, _ in rows] == expected
    return "6/6 rows"


def _sig3(x):
    return 0.0 if x == 0 else round(x, 2 - int(math.floor(math.log10(abs(x)))))


@criterion("AC2", "rationality subtables", budget=1)
def test_ac2_rationalities():
    tables = rationality_tables()
    expected = {
        "optimal": ([1, 1, 1, 0, 1, 0], [0, 0, 0, 1, 0, 1]),
        "anti-optimal": ([0, 1, 0, 1, 1, 1], [1, 0, 1, 0, 0, 0]),
        "satisficer t=3": ([1, 0.5, 1, 0.5, 0.5, 0.5], [0, 0.5, 0, 0.5, 0.5, 0.5]),
    }
    for title, (top, bottom) in expected.items():
        rows = tables[title]
        assert rows[0][1] == top and rows[1][1] == bottom, title
    boltz = tables["boltzmann T=1"][0][1]
    target = (1, 0.993, 1, 0.007, 0.993, 0.007)
    worst = max(abs(_sig3(x) - t) for x, t in zip(boltz, target))
    assert worst <= 5e-4, worst
    return f"indicator and satisficer rows exact; Boltzmann max deviation {worst:.1e}"


PACMAN_RULES = (
    [DecisionRule("optimal-indicator"), DecisionRule("frac-optimal"), DecisionRule("anti-optimal-indicator")]
    + [DecisionRule("boltzmann", {"temperature": t}) for t in (0.1, 1, 10)]
    + [DecisionRule("satisficer", {"threshold": t}) for t in (-1, 3, 9)]
    + [DecisionRule("best-of-k", {"k": k}) for k in (1, 2, 3)]
    + [DecisionRule("quantilizer", {"q": q}) for q in (0.25, 0.5, 1)]
)


@criterion("AC3", "Pac-Man twofold orbit tendency for 15 rule variants", budget=30)
def test_ac3_pacman_tendency():
    orbits = violations = 0
    for rule in PACMAN_RULES:
        result = check_geq_most_sampled(rule.bind(C3), A_PAC, B_PAC, 3, ALL, 2, num_thetas=1000, seed=0)
        orbits += len(result.reports)
        violations += len(result.violations)
    assert violations == 0, f"{violations} violating orbits"
    return f"{orbits} orbit checks, 0 violations"


@criterion("AC4", "tabular counterexample fails only the alternate-symmetry item", budget=5)
def test_ac4_counterexample():
    f, a, b, stars, phis, theta = counterexample_fixture()
    items = check_general_orbit_conditions(f, a, b, stars, phis, theta)
    assert items == {"retarget": True, "closed": True, "increasing": True, "alternate": False}, items
    two = check_geq_most(f, a, b, theta, ALL, 2)
    one = check_geq_most(f, a, b, theta, ALL, 1)
    assert (two.count_B_gt_A, two.count_A_gt_B, two.count_tie) == (3, 3, 0)
    assert not two.holds and one.holds
    return "items 1-3 hold, item 4 fails; counts B>A=3, A>B=3; n=2 fails, n=1 holds"


@criterion("AC5", "planted retargetability certificates imply the counting inequality", budget=60)
def test_ac5_planted_certificates():
    rng = np.random.default_rng(2024)
    failures = 0
    for _ in range(500):
        d = int(rng.integers(3, 7))
        n = int(rng.integers(1, min(3, d - 1) + 1))
        table, theta, maps = planted_instance(rng, d, n)
        f = TabularDecisionFunction(table)
        cert = RetargetCertificate(n, tuple(Permutation(m) for m in maps))
        conditions = check_multi_retargetable(f, "A", "B", theta, ALL, cert)
        assert all(conditions.values()), conditions
        if not verify_counting_theorem(f, "A", "B", theta, ALL, cert):
            failures += 1
    assert failures == 0, f"{failures} violations"
    return "500 instances, 0 violations"


@criterion("AC6", "orbit-relation lemma properties", budget=120)
def test_ac6_lemmas():
    rng = np.random.default_rng(6)
    counts = {"transitivity": 0, "inversion": 0, "agreement": 0}
    bad = dict.fromkeys(counts, 0)
    while counts["transitivity"] < 10_000:
        m = int(rng.integers(1, 13))
        n = int(rng.integers(1, 4))
        orbit = list(range(m))
        v1 = rng.integers(-3, 4, m)
        v2 = rng.integers(-3, 4, m)
        if not report_from_values(v1, v2, n).holds:
            continue
        f1, f2 = dict(zip(orbit, v1)), dict(zip(orbit, v2))
        f0 = {t: f1[t] + int(rng.integers(0, 3)) for t in orbit}
        f3 = {t: f2[t] - int(rng.integers(0, 3)) for t in orbit}
        counts["transitivity"] += 1
        bad["transitivity"] += not limited_transitivity_holds(f0, f1, f2, f3, orbit, n)
    for _ in range(10_000):
        m = int(rng.integers(1, 13))
        n = int(rng.integers(1, 5))
        orbit = list(range(m))
        v1, v2 = rng.integers(-3, 4, m), rng.integers(-3, 4, m)
        counts["inversion"] += 1
        bad["inversion"] += not order_inversion_holds(dict(zip(orbit, v1)), dict(zip(orbit, v2)), orbit, n)
        report = report_from_values(v1, v2, n)
        counts["agreement"] += 1
        bad["agreement"] += not agreement_bound_holds(report)
        if report.holds:
            # exact rational restatement, independent of the library helper
            assert Fraction(report.count_B_gt_A + report.count_tie, m) >= Fraction(n, n + 1)
    assert not any(bad.values()), bad
    return ", ".join(f"{k} {counts[k]}/0" for k in counts) + " (instances/violations)"


EU_RULES = [
    DecisionRule("optimal-indicator"),
    DecisionRule("frac-optimal"),
    DecisionRule("anti-optimal-indicator"),
    DecisionRule("boltzmann", {"temperature": 0.5}),
    DecisionRule("best-of-k", {"k": 2}),
    DecisionRule("satisficer", {"threshold": 0.2}),
    DecisionRule("quantilizer", {"q": 0.4}),
]


def _act_set(mapping, X):
    out = set()
    for x in X:
        y = [0.0] * len(x)
        for j, k in enumerate(mapping):
            y[k] = x[j]
        out.add(tuple(y))
    return frozenset(out)


@criterion("AC7", "EU-determined rules are invariant under joint permutation", budget=120)
def test_ac7_eu_invariance():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10_000):
        d = int(rng.integers(2, 7))
        size = int(rng.integers(1, 6))
        C = frozenset(tuple(float(x) for x in rng.integers(0, 3, d)) for _ in range(size))
        X = frozenset(c for c in sorted(C) if rng.random() < 0.5)
        u = tuple(float(x) for x in rng.integers(-3, 4, d) * rng.uniform(0.5, 2))
        mapping = tuple(int(j) for j in rng.permutation(d))
        uphi = [0.0] * d
        for j, k in enumerate(mapping):
            uphi[k] = u[j]
        for rule in EU_RULES:
            lhs = rule(X, C, u)
            rhs = rule(_act_set(mapping, X), _act_set(mapping, C), tuple(uphi))
            worst = max(worst, abs(lhs - rhs))
    assert worst <= 1e-12, worst
    return f"10000 draws x 7 rules, max deviation {worst:.1e}"


@criterion("AC8", "fractional-optimality chain inequalities", budget=120)
def test_ac8_frac_opt_chains():
    rng = np.random.default_rng(8)
    violations = 0
    for _ in range(10_000):
        size = int(rng.integers(1, 7))
        Y = sorted({tuple(float(x) for x in rng.integers(0, 3, 4)) for _ in range(size)})
        Yp = [y for y in Y if rng.random() < 0.6] or Y[:1]
        X = [y for y in Yp if rng.random() < 0.5]
        u = tuple(float(x) for x in rng.integers(-2, 3, 4))
        violations += not frac_optimal_inequalities_check(X, Yp, Y, u)
    assert violations == 0, violations
    return "10000 chains, 0 violations"


@criterion("AC9", "bandit success bound, retargetability and symmetry control", budget=30)
def test_ac9_bandit():
    u = (10.0, 5.0, 0.0, 2.0, 1.0)
    est = p_train_estimate(BanditSpec(u, 0.2, 100), [0], 10_000, 0)
    assert est.mean >= 0.9941 - 3 * est.stderr, est
    report = bandit_retarget_check(u, 0.2, 100, 10_000, seed=1)
    assert report.antecedent and report.passes, report.to_dict()
    pol = train_batch(BanditSpec((1.0,) * 5, 0.2, 100), 10_000, 2)
    means = pol.mean(axis=0)
    se = pol.std(axis=0, ddof=1) / math.sqrt(len(pol))
    assert np.all(np.abs(means - 0.2) <= 3 * se), (means, se)
    return (f"optimal-arm frequency {est.mean:.4f} (se {est.stderr:.4f}); retargeting passes; "
            f"control frequencies {', '.join(f'{m:.3f}' for m in means)}")


@criterion("AC10", "toy MDP: copies, threefold orbit counts, Monte Carlo bound", budget=300)
def test_ac10_toy_mdp():
    mdp = load_mdp(builtin_fixture_path())
    rsds = rsd_set(mdp, "start")
    Dp = frozenset({state_basis(mdp, "empty")})
    D = rsds - Dp
    cert = find_copies(Dp, D, 3)
    assert cert is not None and verify_copies(Dp, D, cert)
    reports = orbit_avgprob_check(mdp, Dp, D, 3, RewardSampler("iid-uniform-01", 10), 200, "start", rsds)
    assert all(r.orbit_size == 5040 for r in reports)
    bad = sum(not r.holds for r in reports)
    assert bad == 0, f"{bad} violating orbits"
    est = avg_opt_probability(mdp, Dp, RewardSampler("iid-uniform-01", 11), 10_000, "start", rsds)
    assert est.mean <= 0.25 + 3 * est.stderr, est
    return f"certificate found; 200/200 orbits hold; P(D') = {est.mean:.4f} (se {est.stderr:.4f})"


STOCHASTIC = """
states: a, b, c, d
actions: go, wait
a go -> {b: 1/2, c: 1/2}
a wait -> {a: 0.2, b: 0.8}
b go -> {c: 1}
b wait -> {b: 0.5, d: 0.5}
c go -> {b: 0.3, c: 0.7}
c wait -> {d: 1}
d * -> {c: 0.6, d: 0.4}
"""


@criterion("AC11", "nondominated sets and recurrent distributions", budget=300)
def test_ac11_nd_and_rsd():
    rng = np.random.default_rng(11)
    dropped = 0
    for d in (3, 4):
        for k in range(100):
            pts = rng.dirichlet(np.ones(d), size=int(rng.integers(2, 8)))
            mix = rng.random()
            pts = np.vstack([pts, mix * pts[0] + (1 - mix) * pts[1]])
            X = [tuple(p) for p in pts]
            nd = nondominated(X)
            winners = sampled_strict_winners(X, num=100_000, seed=k)
            dropped += sum(1 for i in winners if X[i] not in nd)
    assert dropped == 0, f"{dropped} oracle winners dropped"
    gamma = 1 - 1e-6
    worst = 0.0
    checked = 0
    for mdp, start in ((load_mdp(builtin_fixture_path()), "start"), (parse_mdp(STOCHASTIC), "a")):
        for pi in enumerate_policies(mdp, start):
            x = (1 - gamma) * visit_distribution(mdp, pi, start, gamma)
            worst = max(worst, float(np.max(np.abs(x - rsd(mdp, pi, start)))))
            checked += 1
    assert worst <= 1e-4, worst
    return f"200 sets, 0 winners dropped; {checked} policies, max RSD gap {worst:.1e}"


def _scenario_json(*extra, env=None):
    full_env = dict(os.environ)
    full_env.update(env or {})
    proc = subprocess.run([sys.executable, "-m", "retarget", "scenario", "run", "--builtin", "pacman3",
                           "--seed", "7", "--json", "-", *extra], capture_output=True, env=full_env, timeout=600)
    assert proc.returncode == 0, proc.stderr.decode()
    return proc.stdout


@criterion("AC12", "byte-identical scenario reports across runs and thread counts")
def test_ac12_determinism():
    first = _scenario_json(env={"RETARGET_THREADS": "1"})
    second = _scenario_json(env={"RETARGET_THREADS": "1"})
    threaded = _scenario_json(env={"RETARGET_THREADS": "4"})
    flagged = _scenario_json("--threads", "3")
    assert first == second == threaded == flagged
    return f"4 runs, {len(first)} bytes each, identical"


if __name__ == "__main__":
    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_ac"):
            try:
                fn()
            except Exception:
                failed += 1
    sys.exit(1 if failed else 0)
