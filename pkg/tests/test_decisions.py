import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retarget.decisions import (
    EU_DETERMINED,
    DecisionRule,
    NotSubset,
    best_of_k,
    best_of_k_estimate,
    boltzmann,
    eu_invariance_check,
    frac_optimal,
    frac_optimal_inequalities_check,
    is_anti_optimal,
    is_optimal,
    numerical_rule,
    quantile_threshold,
    quantilize,
    rand,
    satisfice,
)
from retarget.outcomes import basis
from retarget.perms import Permutation

from oracles import best_of_k_distinct, frac_opt_exact

GHOST, APPLE, CHERRY = basis(3, 0), basis(3, 1), basis(3, 2)
C3 = frozenset({GHOST, APPLE, CHERRY})
GA = frozenset({GHOST, APPLE})
CH = frozenset({CHERRY})


def test_is_optimal_table_values():
    assert is_optimal(GA, C3, (10, 5, 0)) == 1
    assert is_optimal(GA, C3, (5, 0, 10)) == 0
    assert is_optimal(C3, C3, (1, -4, 2)) == 1


def test_is_optimal_requires_subset():
    with pytest.raises(NotSubset):
        is_optimal({(1.0, 1.0, 1.0)}, C3, (1, 2, 3))


def test_frac_optimal():
    assert frac_optimal(CH, C3, (0, 1, 5)) == 1
    assert frac_optimal(CH, C3, (2, 2, 2)) == pytest.approx(1 / 3)
    E4 = frozenset(basis(4, i) for i in range(4))
    X = {basis(4, 0)}
    assert frac_optimal(X, E4, (7, 7, 2, 1)) == frac_opt_exact(X, E4, (7, 7, 2, 1)) == Fraction(1, 2)


def test_is_anti_optimal_table_values():
    assert is_anti_optimal(GA, C3, (10, 5, 0)) == 0
    assert is_anti_optimal(CH, C3, (10, 5, 0)) == 1
    assert is_anti_optimal(C3, C3, (3, 1, 2)) == 1


def test_boltzmann_table_values():
    assert round(boltzmann(GA, C3, (10, 0, 5), 1.0), 3) == 0.993
    assert round(boltzmann(CH, C3, (0, 10, 5), 1.0), 3) == 0.007
    assert boltzmann(GA, C3, (4, 4, 4), 1.0) == pytest.approx(2 / 3)
    # the same ratios by hand
    e = math.e
    assert boltzmann(GA, C3, (10, 0, 5), 1.0) == pytest.approx((e**10 + 1) / (e**10 + 1 + e**5))


def test_boltzmann_overflow_safe_and_validates():
    assert boltzmann(GA, C3, (1e5, 0, 1e5 - 1), 1.0) == pytest.approx(1 / (1 + math.exp(-1)))
    with pytest.raises(ValueError):
        boltzmann(GA, C3, (1, 2, 3), 0.0)


def test_satisfice():
    assert satisfice(GA, C3, (10, 0, 5), 3) == 0.5
    assert satisfice(GA, C3, (10, 0, 5), 100) == 0
    assert satisfice(C3, C3, (10, 0, 5), -100) == 1


def test_best_of_k():
    u = (10, 5, 0)
    assert best_of_k(GA, C3, (3, 2, 1), 1) == pytest.approx(2 / 3)
    assert best_of_k(C3, C3, u, 3) == 1
    # draws containing the ghost (5 of 9) make it the best draw
    assert best_of_k({GHOST}, C3, u, 2) == pytest.approx(5 / 9)
    assert best_of_k({APPLE, CHERRY}, C3, u, 2) == pytest.approx(4 / 9)
    for k in (1, 2, 3, 4):
        for X in ({GHOST}, {APPLE}, {APPLE, CHERRY}):
            assert best_of_k(X, C3, u, k) == pytest.approx(float(best_of_k_distinct(X, C3, u, k)))


def test_best_of_k_monte_carlo_path():
    u = (10, 5, 0)
    est = best_of_k_estimate({GHOST}, C3, u, 5, budget=10, seed=3, samples=50_000)
    exact = float(best_of_k_distinct({GHOST}, C3, u, 5))
    assert est.stderr > 0
    assert abs(est.mean - exact) <= 4 * est.stderr


def test_quantile_threshold():
    C = [basis(3, i) for i in range(3)]
    u = (3, 2, 1)
    assert quantile_threshold(C, u, 1 / 3) == 2
    assert quantile_threshold(C, u, 1) < 1
    assert quantile_threshold(C, (4, 4, 4), 0.3) == 4
    with pytest.raises(ValueError):
        quantile_threshold(C, u, 0)


def test_quantilize():
    u = (3, 2, 1)
    assert quantilize(GA, C3, u, 1) == pytest.approx(2 / 3)
    # distinct utilities and q = 1/|C| pick out the unique maximizer
    assert quantilize({GHOST}, C3, u, 1 / 3) == pytest.approx(1)
    assert quantilize({APPLE, CHERRY}, C3, u, 1 / 3) == pytest.approx(0)
    # everything tied: the tie term spreads mass uniformly
    assert quantilize({GHOST}, C3, (2, 2, 2), 0.5) == pytest.approx(1 / 3)
    # q = 1/2 with three distinct values: top element plus half of the middle one's share
    assert quantilize({GHOST}, C3, u, 0.5) == pytest.approx((1 / 3) / 0.5)
    assert quantilize({APPLE}, C3, u, 0.5) == pytest.approx((1 / 3) / 0.5 * (0.5 - 1 / 3) / (1 / 3))


def test_rand_and_numerical():
    assert rand(GA, C3) == pytest.approx(2 / 3)
    assert numerical_rule("A", 1) == 1
    assert numerical_rule("A", 4) == 0
    assert numerical_rule("B", 1) == 0
    with pytest.raises(ValueError):
        numerical_rule("A", 7)


def test_frac_optimal_inequalities_examples():
    E4 = [basis(4, i) for i in range(4)]
    u = (1, 3, 2, 0)
    X = {E4[0]}
    assert frac_optimal_inequalities_check(X, E4, E4, u)
    assert frac_optimal_inequalities_check(set(E4[:2]), E4[:2], E4, u)
    with pytest.raises(NotSubset):
        frac_optimal_inequalities_check(E4, E4[:2], E4, u)


def test_eu_invariance_examples():
    rule = DecisionRule("boltzmann", {"temperature": 1.0})
    assert eu_invariance_check(rule, GA, C3, (1, 2, 3), Permutation.identity(3))
    stubborn = DecisionRule("stubborn", {"choice": 0})
    assert not eu_invariance_check(stubborn, {GHOST}, C3, (1, 2, 3), Permutation.transposition(3, 0, 1))


def test_decision_rule_validation():
    with pytest.raises(ValueError):
        DecisionRule("boltzmann", {})
    with pytest.raises(ValueError):
        DecisionRule("quantilizer", {"q": 1.5})
    with pytest.raises(ValueError):
        DecisionRule("unknown")
    assert DecisionRule("best-of-k", {"k": 2}).label() == "best-of-k(k=2)"


def test_numerical_rule_object_uses_theta_index():
    rule = DecisionRule("numerical")
    theta1 = basis(6, 0)
    theta3 = basis(6, 2)
    assert rule({GHOST}, C3, theta1) == 1
    assert rule({APPLE}, C3, theta3) == 1


def test_boltzmann_limit_is_frac_optimal():
    rng = np.random.default_rng(0)
    for _ in range(50):
        u = tuple(rng.permutation(5).astype(float))
        C = [basis(5, i) for i in range(5)]
        X = {C[int(rng.integers(5))]}
        assert abs(boltzmann(X, C, u, 1e-3) - frac_optimal(X, C, u)) <= 1e-6


RULES = [
    DecisionRule("optimal-indicator"),
    DecisionRule("frac-optimal"),
    DecisionRule("anti-optimal-indicator"),
    DecisionRule("boltzmann", {"temperature": 0.7}),
    DecisionRule("satisficer", {"threshold": 1}),
    DecisionRule("best-of-k", {"k": 2}),
    DecisionRule("quantilizer", {"q": 0.4}),
    DecisionRule("rand"),
]
PROB_RULES = [r for r in RULES if r.kind in ("frac-optimal", "boltzmann", "best-of-k", "quantilizer", "rand")]


@st.composite
def choice_problem(draw):
    d = draw(st.integers(2, 5))
    size = draw(st.integers(1, 5))
    vecs = draw(st.lists(st.tuples(*[st.integers(0, 3)] * d), min_size=size, max_size=size, unique=True))
    C = frozenset(tuple(float(x) for x in v) for v in vecs)
    order = sorted(C)
    mask = draw(st.lists(st.booleans(), min_size=len(order), max_size=len(order)))
    X = frozenset(c for c, m in zip(order, mask) if m)
    u = draw(st.tuples(*[st.integers(-3, 3)] * d))
    return X, C, tuple(float(x) for x in u)


@settings(max_examples=300, deadline=None)
@given(choice_problem())
def test_rules_bounded_and_monotone(problem):
    X, C, u = problem
    order = sorted(X)
    Xsub = frozenset(order[: len(order) // 2])
    for rule in RULES:
        value = rule(X, C, u)
        assert 0 <= value <= 1 + 1e-12
        assert rule(Xsub, C, u) <= value + 1e-12


@settings(max_examples=300, deadline=None)
@given(choice_problem())
def test_partition_sums_to_one(problem):
    X, C, u = problem
    for rule in PROB_RULES:
        assert abs(rule(X, C, u) + rule(C - X, C, u) - 1) <= 1e-9


@settings(max_examples=300, deadline=None)
@given(choice_problem())
def test_anti_is_optimal_of_negation(problem):
    X, C, u = problem
    neg = tuple(-x for x in u)
    assert is_anti_optimal(X, C, u) == is_optimal(X, C, neg)


@settings(max_examples=300, deadline=None)
@given(choice_problem())
def test_quantilize_q1_is_base_mass(problem):
    X, C, u = problem
    assert quantilize(X, C, u, 1) == len(X) / len(C)


@settings(max_examples=300, deadline=None)
@given(choice_problem(), st.data())
def test_eu_invariance_property(problem, data):
    X, C, u = problem
    d = len(u)
    phi = Permutation(tuple(data.draw(st.permutations(list(range(d))))))
    for rule in RULES:
        if rule.kind in EU_DETERMINED:
            assert eu_invariance_check(rule, X, C, u, phi)
