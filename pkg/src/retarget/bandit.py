"""Epsilon-greedy training on a deterministic multi-armed bandit.

Each trial takes the current greedy arm (ties broken uniformly) with probability
1 - eps, otherwise one of the other arms uniformly. The observed payoff
overwrites the arm's estimate (learning rate 1). The learned exploitation
policy is uniform over the argmax of the final estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .perms import Permutation, act_vector, as_vector
from .stats import Estimate, mean_estimate


@dataclass(frozen=True)
class BanditSpec:
    utilities: tuple[float, ...]
    epsilon: float = 0.2
    trials: int = 100
    q_init: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        u = as_vector(self.utilities)
        if len(u) < 2:
            raise ValueError("a bandit needs at least two arms")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if int(self.trials) < 1:
            raise ValueError("trials must be at least 1")
        q = tuple([0.0] * len(u)) if self.q_init is None else as_vector(self.q_init)
        if len(q) != len(u):
            raise ValueError("q_init must match the number of arms")
        object.__setattr__(self, "utilities", u)
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "q_init", q)

    @property
    def arms(self) -> int:
        return len(self.utilities)


@dataclass(frozen=True)
class TrainOutcome:
    policy: tuple[float, ...]
    values: tuple[float, ...]


def greedy_policy(values: Sequence[float]) -> tuple[float, ...]:
    top = max(values)
    best = [v == top for v in values]
    k = sum(best)
    return tuple(1.0 / k if b else 0.0 for b in best)


def train(spec: BanditSpec, seed) -> TrainOutcome:
    """One training run, stepping arm by arm (reference implementation)."""
    rng = np.random.default_rng(seed)
    q = list(spec.q_init)
    k = spec.arms
    for _ in range(spec.trials):
        top = max(q)
        tied = [a for a in range(k) if q[a] == top]
        greedy = tied[int(rng.integers(len(tied)))]
        if rng.random() < spec.epsilon:
            others = [a for a in range(k) if a != greedy]
            arm = others[int(rng.integers(k - 1))]
        else:
            arm = greedy
        q[arm] = spec.utilities[arm]
    return TrainOutcome(greedy_policy(q), tuple(q))


def train_batch(spec: BanditSpec, num_runs: int, seed) -> np.ndarray:
    """Exploitation policies of ``num_runs`` independent runs, shape (num_runs, arms)."""
    if num_runs < 1:
        raise ValueError("num_runs must be at least 1")
    rng = np.random.default_rng(seed)
    k = spec.arms
    u = np.asarray(spec.utilities)
    q = np.tile(np.asarray(spec.q_init), (num_runs, 1))
    rows = np.arange(num_runs)
    for _ in range(spec.trials):
        tied = q == q.max(axis=1, keepdims=True)
        keys = np.where(tied, rng.random((num_runs, k)), -1.0)
        greedy = keys.argmax(axis=1)
        explore = rng.random(num_runs) < spec.epsilon
        offset = rng.integers(1, k, size=num_runs)
        arm = np.where(explore, (greedy + offset) % k, greedy)
        q[rows, arm] = u[arm]
    best = q == q.max(axis=1, keepdims=True)
    return best / best.sum(axis=1, keepdims=True)


def p_train_estimate(spec: BanditSpec, X: Sequence[int], num_runs: int, seed) -> Estimate:
    """Mean exploitation-policy mass on the arms in X."""
    X = sorted(set(int(a) for a in X))
    if any(not 0 <= a < spec.arms for a in X):
        raise ValueError(f"arm index out of range in {X}")
    policies = train_batch(spec, num_runs, seed)
    return mean_estimate(policies[:, X].sum(axis=1))


def success_lower_bound(epsilon: float, trials: int, arms: int = 5) -> float:
    return 1.0 - (1.0 - epsilon / (arms - 1)) ** trials


@dataclass(frozen=True)
class BanditRetargetReport:
    utilities: tuple[float, ...]
    p_A: Estimate
    antecedent: bool
    retargeted_p_A: tuple[Estimate, ...]
    retargetable: tuple[bool, ...]
    distinct: bool
    mean_policies: tuple[tuple[float, ...], ...] = field(default=())

    @property
    def passes(self) -> bool:
        if not self.antecedent:
            return True
        return all(self.retargetable) and self.distinct

    def to_dict(self) -> dict:
        return {
            "utilities": list(self.utilities),
            "p_A": self.p_A.to_dict(),
            "antecedent": self.antecedent,
            "retargeted_p_A": [e.to_dict() for e in self.retargeted_p_A],
            "retargetable": list(self.retargetable),
            "distinct": self.distinct,
            "mean_policies": [list(p) for p in self.mean_policies],
            "passes": self.passes,
        }


def bandit_retarget_check(u: Sequence[float], epsilon: float = 0.2, trials: int = 100,
                          num_runs: int = 10_000, seed: int = 0, sigmas: float = 3.0) -> BanditRetargetReport:
    """Statistical check that swapping arm 0 with each other arm flips the learned preference.

    A is {arm 0}, B is every other arm. With phi_i swapping arms 0 and i, each
    retargeted utility vector must favour B beyond ``sigmas`` standard errors,
    and the four retargeted policy distributions must be pairwise distinguishable.
    """
    u = as_vector(u)
    top = max(u)
    if sum(1 for x in u if x == top) != 1:
        raise ValueError(f"utilities {u} need a unique maximal entry")
    k = len(u)
    streams = np.random.SeedSequence(seed).spawn(k)
    base = train_batch(BanditSpec(u, epsilon, trials), num_runs, streams[0])
    p_A = mean_estimate(base[:, 0])
    # p(B) = 1 - p(A), so p(A) - p(B) = 2 p(A) - 1 with twice the standard error
    antecedent = 2 * p_A.mean - 1 > sigmas * 2 * p_A.stderr
    if not antecedent:
        return BanditRetargetReport(u, p_A, False, (), (), True)
    estimates, flags, means, errs = [], [], [], []
    for i in range(1, k):
        moved = act_vector(Permutation.transposition(k, 0, i), u)
        pol = train_batch(BanditSpec(moved, epsilon, trials), num_runs, streams[i])
        est = mean_estimate(pol[:, 0])
        estimates.append(est)
        flags.append(1 - 2 * est.mean > sigmas * 2 * est.stderr)
        means.append(pol.mean(axis=0))
        errs.append(pol.std(axis=0, ddof=1) / math.sqrt(num_runs))
    distinct = True
    for i in range(len(means)):
        for j in range(i + 1, len(means)):
            gap = np.abs(means[i] - means[j])
            slack = sigmas * np.sqrt(errs[i] ** 2 + errs[j] ** 2)
            if not (gap > slack).any():
                distinct = False
    return BanditRetargetReport(
        u, p_A, True, tuple(estimates), tuple(flags), distinct,
        tuple(tuple(float(x) for x in m) for m in means),
    )
