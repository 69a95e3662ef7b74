"""Finite rewardless MDPs: visit distributions, recurrent state distributions and
average-optimality statistics.

Fixture text format::

    # comment
    states: start, empty, ...
    actions: up, left, right
    start up -> {empty: 1}
    start * -> {empty: 0.5, start: 0.5}   # '*' fills every action not listed explicitly

Every (state, action) pair must be covered and each row must sum to 1.
"""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .outcomes import nondominated
from .perms import Vector, check_bound, enumerate_orbit
from .stats import Estimate, binomial_estimate
from .tendency import OrbitTendencyReport, report_from_values

log = logging.getLogger(__name__)

POLICY_BUDGET = 10**6
ROUND_DIGITS = 12
ROW_TOL = 1e-12
OPT_TOL = 1e-9


class MDPError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RewardlessMDP:
    states: tuple[str, ...]
    actions: tuple[str, ...]
    transition: np.ndarray  # shape (S, A, S)

    def __post_init__(self):
        T = np.asarray(self.transition, dtype=float)
        S, A = len(self.states), len(self.actions)
        if T.shape != (S, A, S):
            raise MDPError(f"transition has shape {T.shape}, expected {(S, A, S)}")
        if (T < 0).any():
            raise MDPError("negative transition probability")
        sums = T.sum(axis=2)
        bad = np.argwhere(np.abs(sums - 1.0) > ROW_TOL)
        if bad.size:
            s, a = bad[0]
            raise MDPError(f"row ({self.states[s]}, {self.actions[a]}) sums to {sums[s, a]}")
        T.setflags(write=False)
        object.__setattr__(self, "transition", T)

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_actions(self) -> int:
        return len(self.actions)

    @property
    def deterministic(self) -> bool:
        return bool(np.all((self.transition == 0) | (self.transition == 1)))

    def index(self, state) -> int:
        if isinstance(state, (int, np.integer)):
            return int(state)
        return self.states.index(state)

    def policy_matrix(self, policy: Sequence[int]) -> np.ndarray:
        if len(policy) != self.num_states:
            raise MDPError("policy must assign an action to every state")
        return self.transition[np.arange(self.num_states), np.asarray(policy)]


_ROW = re.compile(r"^(\S+)\s+(\S+)\s*->\s*\{(.*)\}\s*$")


def parse_mdp(text: str) -> RewardlessMDP:
    states = actions = None
    rows: dict[tuple[str, str], dict[str, float]] = {}
    defaults: dict[str, dict[str, float]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("states:"):
            states = tuple(s.strip() for s in line[7:].split(",") if s.strip())
            continue
        if line.startswith("actions:"):
            actions = tuple(a.strip() for a in line[8:].split(",") if a.strip())
            continue
        m = _ROW.match(line)
        if not m:
            raise MDPError(f"line {lineno}: cannot parse {raw!r}")
        if states is None or actions is None:
            raise MDPError(f"line {lineno}: states and actions must be declared first")
        s, a, body = m.groups()
        if s not in states:
            raise MDPError(f"line {lineno}: unknown state {s!r}")
        if a != "*" and a not in actions:
            raise MDPError(f"line {lineno}: unknown action {a!r}")
        dist = {}
        for part in filter(None, (p.strip() for p in body.split(","))):
            if ":" not in part:
                raise MDPError(f"line {lineno}: expected 'state: prob', got {part!r}")
            name, prob = (x.strip() for x in part.split(":", 1))
            if name not in states:
                raise MDPError(f"line {lineno}: unknown successor {name!r}")
            try:
                dist[name] = dist.get(name, 0.0) + float(Fraction(prob))
            except (ValueError, ZeroDivisionError):
                raise MDPError(f"line {lineno}: bad probability {prob!r}") from None
        if a == "*":
            defaults[s] = dist
        else:
            rows[(s, a)] = dist
    if not states or not actions:
        raise MDPError("fixture must declare states and actions")
    T = np.zeros((len(states), len(actions), len(states)))
    for i, s in enumerate(states):
        for j, a in enumerate(actions):
            dist = rows.get((s, a), defaults.get(s))
            if dist is None:
                raise MDPError(f"no transition for state {s!r}, action {a!r}")
            for name, p in dist.items():
                T[i, j, states.index(name)] = p
    return RewardlessMDP(states, actions, T)


def load_mdp(path) -> RewardlessMDP:
    return parse_mdp(Path(path).read_text())


# -- visit distributions and RSDs ---------------------------------------------

def visit_distribution(mdp: RewardlessMDP, policy: Sequence[int], s, gamma: float) -> np.ndarray:
    """Discounted state occupancy from s: solves x = e_s + gamma * P_pi^T x."""
    if not 0 <= gamma < 1:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    P = mdp.policy_matrix(policy)
    S = mdp.num_states
    e = np.zeros(S)
    e[mdp.index(s)] = 1.0
    M = np.eye(S) - gamma * P.T
    try:
        x = np.linalg.solve(M, e)
    except np.linalg.LinAlgError as exc:
        raise MDPError(f"visit distribution solve failed: {exc}") from exc
    residual = np.abs(M @ x - e).max()
    if residual > 1e-10:
        raise MDPError(f"visit distribution residual {residual:.3g} exceeds 1e-10")
    return x


def _reachable(P: np.ndarray, start: int) -> list[int]:
    seen = {start}
    stack = [start]
    while stack:
        i = stack.pop()
        for j in np.nonzero(P[i] > 0)[0]:
            if int(j) not in seen:
                seen.add(int(j))
                stack.append(int(j))
    return sorted(seen)


def rsd(mdp: RewardlessMDP, policy: Sequence[int], s) -> np.ndarray:
    """Long-run average occupancy of the chain induced by the policy from s."""
    P = mdp.policy_matrix(policy)
    start = mdp.index(s)
    S = mdp.num_states
    out = np.zeros(S)
    if mdp.deterministic:
        order = {}
        state = start
        while state not in order:
            order[state] = len(order)
            state = int(np.argmax(P[state]))
        cycle = [x for x, k in order.items() if k >= order[state]]
        out[cycle] = 1.0 / len(cycle)
        return out
    reach = _reachable(P, start)
    sub = P[np.ix_(reach, reach)]
    _, labels = connected_components(csr_matrix(sub > 0), directed=True, connection="strong")
    closed = []
    for c in np.unique(labels):
        members = np.nonzero(labels == c)[0]
        others = np.setdiff1d(np.arange(len(reach)), members)
        if not (sub[np.ix_(members, others)] > 0).any():
            closed.append(members)
    if len(closed) != 1:
        raise MDPError(f"{len(closed)} recurrent classes reachable from {mdp.states[start]}; "
                       "only unichain-from-s policies are supported")
    members = closed[0]
    Q = sub[np.ix_(members, members)]
    k = len(members)
    # stationary pi: pi (Q - I) = 0, sum(pi) = 1
    lhs = np.vstack([(Q - np.eye(k)).T, np.ones((1, k))])
    rhs = np.zeros(k + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    out[np.asarray(reach)[members]] = pi
    return out


def _canonical(v: np.ndarray) -> tuple:
    return tuple(float(x) + 0.0 for x in np.round(v, ROUND_DIGITS))


def enumerate_policies(mdp: RewardlessMDP, s=None, budget: int = POLICY_BUDGET) -> Iterable[tuple[int, ...]]:
    """Deterministic stationary policies.

    With a start state, only states reachable from it under some action vary;
    the rest stay at action 0, which cannot change anything seen from s.
    """
    S, A = mdp.num_states, mdp.num_actions
    if s is None:
        free = list(range(S))
    else:
        free = _reachable(mdp.transition.max(axis=1), mdp.index(s))
    if A ** len(free) > budget:
        raise MDPError(f"{A}^{len(free)} policies exceed the enumeration budget {budget}")
    for choice in itertools.product(range(A), repeat=len(free)):
        policy = [0] * S
        for state, a in zip(free, choice):
            policy[state] = a
        yield tuple(policy)


def enumerate_visit_set(mdp: RewardlessMDP, s, gamma: float, budget: int = POLICY_BUDGET) -> frozenset:
    return frozenset(
        _canonical(visit_distribution(mdp, pi, s, gamma)) for pi in enumerate_policies(mdp, s, budget)
    )


def rsd_set(mdp: RewardlessMDP, s, budget: int = POLICY_BUDGET) -> frozenset:
    return frozenset(_canonical(rsd(mdp, pi, s)) for pi in enumerate_policies(mdp, s, budget))


def rsd_nd(mdp: RewardlessMDP, s, budget: int = POLICY_BUDGET) -> frozenset:
    return nondominated(rsd_set(mdp, s, budget))


def one_cycle_states(mdp: RewardlessMDP) -> tuple[frozenset, frozenset]:
    """Return (states with a self-loop action, states whose every action self-loops)."""
    T = mdp.transition
    loops = np.array([[T[i, a, i] == 1.0 for a in range(mdp.num_actions)] for i in range(mdp.num_states)])
    one_cycle = frozenset(mdp.states[i] for i in range(mdp.num_states) if loops[i].any())
    terminal = frozenset(mdp.states[i] for i in range(mdp.num_states) if loops[i].all())
    return one_cycle, terminal


def state_basis(mdp: RewardlessMDP, state) -> Vector:
    v = [0.0] * mdp.num_states
    v[mdp.index(state)] = 1.0
    return tuple(v)


# -- average optimality --------------------------------------------------------

def average_optimal_check(mdp: RewardlessMDP, reward: Sequence[float], D, s, rsds=None,
                          tol: float = OPT_TOL) -> bool:
    rsds = rsd_set(mdp, s) if rsds is None else rsds
    r = np.asarray(reward, dtype=float)
    best = max(float(np.dot(d, r)) for d in rsds)
    return any(float(np.dot(d, r)) >= best - tol for d in D)


@dataclass(frozen=True)
class RewardSampler:
    kind: str = "iid-uniform-01"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("iid-uniform-01", "iid-gaussian"):
            raise ValueError(f"unknown sampler {self.kind!r}")

    def sample(self, num: int, d: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        if self.kind == "iid-uniform-01":
            return rng.random((num, d))
        return rng.standard_normal((num, d))


def _matrix(vectors, S: int) -> np.ndarray:
    vectors = sorted(vectors)
    return np.asarray(vectors, dtype=float).reshape(len(vectors), S)


class _Optimality:
    """Which candidate sets contain an optimal RSD, evaluated for many rewards at once.

    Values for members of the RSD set are read from one product so that a set
    containing the maximizer compares equal to the maximum exactly.
    """

    def __init__(self, rsds, S: int):
        self.rows = sorted(rsds)
        self.index = {v: k for k, v in enumerate(self.rows)}
        self.matrix = _matrix(self.rows, S)
        self.S = S

    def values(self, R: np.ndarray) -> np.ndarray:
        return R @ self.matrix.T

    def contains_optimal(self, R: np.ndarray, V: np.ndarray, D, tol: float = OPT_TOL) -> np.ndarray:
        best = V.max(axis=1)
        D = list(D)
        if not D:
            return np.zeros(R.shape[0], dtype=bool)
        cols = [self.index.get(tuple(d)) for d in D]
        if all(c is not None for c in cols):
            return V[:, cols].max(axis=1) >= best
        return (R @ _matrix(D, self.S).T).max(axis=1) >= best - tol

    @staticmethod
    def exact_ties(V: np.ndarray) -> np.ndarray:
        if V.shape[1] < 2:
            return np.zeros(V.shape[0], dtype=bool)
        top2 = np.sort(V, axis=1)[:, -2:]
        return top2[:, 0] == top2[:, 1]


@dataclass(frozen=True)
class AvgOptEstimate:
    estimate: Estimate
    discarded_ties: int

    @property
    def mean(self) -> float:
        return self.estimate.mean

    @property
    def stderr(self) -> float:
        return self.estimate.stderr


def avg_opt_probability(mdp: RewardlessMDP, D, sampler: RewardSampler, num_samples: int, s,
                        rsds=None) -> AvgOptEstimate:
    """Fraction of sampled rewards for which D contains an average-optimal RSD from s."""
    rsds = rsd_set(mdp, s) if rsds is None else rsds
    opt = _Optimality(rsds, mdp.num_states)
    R = sampler.sample(num_samples, mdp.num_states)
    V = opt.values(R)
    ties = opt.exact_ties(V)
    if ties.any():
        log.info("discarding %d reward samples with exact optimality ties", int(ties.sum()))
    R, V = R[~ties], V[~ties]
    hits = opt.contains_optimal(R, V, D)
    return AvgOptEstimate(binomial_estimate(int(hits.sum()), int(R.shape[0])), int(ties.sum()))


def orbit_avgprob_check(mdp: RewardlessMDP, Dprime, D, n: int, sampler: RewardSampler,
                        num_reward_orbits: int, s, rsds=None) -> list[OrbitTendencyReport]:
    """For sampled rewards, count over the full state-permutation orbit where D vs D' is optimal."""
    S = mdp.num_states
    if S > 8:
        raise MDPError("orbit checks need at most 8 states")
    check_bound(S)
    rsds = rsd_set(mdp, s) if rsds is None else rsds
    opt = _Optimality(rsds, S)
    reports = []
    for r in sampler.sample(num_reward_orbits, S):
        orbit = enumerate_orbit(tuple(float(x) for x in r))
        R = np.asarray(orbit.elements)
        V = opt.values(R)
        fB = opt.contains_optimal(R, V, D).astype(float)
        fA = opt.contains_optimal(R, V, Dprime).astype(float)
        reports.append(report_from_values(fB, fA, n, theta=orbit.source, tol=0.0))
    return reports


def builtin_fixture_path(name: str = "toy_mdp.txt") -> Path:
    return Path(__file__).parent / "data" / name
