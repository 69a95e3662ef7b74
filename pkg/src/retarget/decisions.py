"""Decision-making functions f(X | C, u) over sets of outcome vectors.

Every rule returns the probability (or indicator) that the decision-maker picks
an outcome in X when choosing among C under utility vector u. Expected
utilities are computed with ``math.fsum`` so that jointly permuting X, C and u
reproduces the same floating-point values bit for bit.

Ties are detected with an absolute tolerance ``tol`` (default 1e-9). On integer
or other exactly representable inputs whose utilities differ by more than the
tolerance this is the same as exact comparison.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .perms import Permutation, Vector, act_set, act_vector, as_vector
from .stats import Estimate

TIE_TOL = 1e-9
BEST_OF_K_BUDGET = 10**6
BEST_OF_K_SAMPLES = 100_000

OPTIMAL = "optimal-indicator"
FRAC_OPTIMAL = "frac-optimal"
ANTI_OPTIMAL = "anti-optimal-indicator"
BOLTZMANN = "boltzmann"
BEST_OF_K = "best-of-k"
SATISFICER = "satisficer"
QUANTILIZER = "quantilizer"
RAND = "rand"
STUBBORN = "stubborn"
NUMERICAL = "numerical"

KINDS = (OPTIMAL, FRAC_OPTIMAL, ANTI_OPTIMAL, BOLTZMANN, BEST_OF_K, SATISFICER,
         QUANTILIZER, RAND, STUBBORN, NUMERICAL)
EU_DETERMINED = (OPTIMAL, FRAC_OPTIMAL, ANTI_OPTIMAL, BOLTZMANN, BEST_OF_K, SATISFICER, QUANTILIZER)


class NotSubset(ValueError):
    pass


def expected_utility(x: Sequence[float], u: Sequence[float]) -> float:
    if len(x) != len(u):
        raise ValueError(f"vector of length {len(x)} against utility of length {len(u)}")
    return math.fsum(a * b for a, b in zip(x, u))


def _prepare(X, C, u, need_nonempty: bool = True):
    Xs = frozenset(as_vector(x) for x in X)
    Cs = frozenset(as_vector(c) for c in C)
    if need_nonempty and not Cs:
        raise ValueError("C must be nonempty")
    if not Xs <= Cs:
        raise NotSubset("X must be a subset of C")
    u = as_vector(u)
    values = {c: expected_utility(c, u) for c in Cs}
    return Xs, Cs, values


def _argmax(values: Mapping[Vector, float], tol: float) -> frozenset:
    top = max(values.values())
    return frozenset(c for c, v in values.items() if v >= top - tol)


def is_optimal(X, C, u, tol: float = TIE_TOL) -> int:
    Xs, Cs, values = _prepare(X, C, u)
    if not Xs:
        return 0
    top = max(values.values())
    return int(max(values[x] for x in Xs) >= top - tol)


def frac_optimal(X, C, u, tol: float = TIE_TOL) -> float:
    Xs, Cs, values = _prepare(X, C, u)
    best = _argmax(values, tol)
    return len(best & Xs) / len(best)


def is_anti_optimal(X, C, u, tol: float = TIE_TOL) -> int:
    Xs, Cs, values = _prepare(X, C, u)
    if not Xs:
        return 0
    bottom = min(values.values())
    return int(min(values[x] for x in Xs) <= bottom + tol)


def boltzmann(X, C, u, T: float) -> float:
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    Xs, Cs, values = _prepare(X, C, u)
    top = max(values.values())
    weights = {c: math.exp((v - top) / T) for c, v in values.items()}
    return math.fsum(weights[x] for x in Xs) / math.fsum(weights.values())


def satisfice(X, C, u, t: float, tol: float = TIE_TOL) -> float:
    Xs, Cs, values = _prepare(X, C, u)
    good = [c for c, v in values.items() if v >= t - tol]
    if not good:
        return 0.0
    return sum(1 for c in good if c in Xs) / len(good)


def _best_of_k_exact(Xs, order, vals, k, tol):
    m = len(order)
    total = []
    for draw in itertools.product(range(m), repeat=k):
        drawn = set(draw)
        top = max(vals[i] for i in drawn)
        best = [i for i in drawn if vals[i] >= top - tol]
        total.append(sum(1 for i in best if order[i] in Xs) / len(best))
    return math.fsum(total) / len(total)


def best_of_k_estimate(X, C, u, k: int, budget: int = BEST_OF_K_BUDGET, seed: int = 0,
                       samples: int = BEST_OF_K_SAMPLES, tol: float = TIE_TOL) -> Estimate:
    """Expected fraction of X among the best of k uniform draws from C (with replacement).

    Exact when |C|^k <= budget (stderr 0); otherwise a seeded Monte Carlo mean.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    Xs, Cs, values = _prepare(X, C, u)
    order = sorted(Cs)
    vals = [values[c] for c in order]
    m = len(order)
    if m ** k <= budget:
        return Estimate(_best_of_k_exact(Xs, order, vals, k, tol), 0.0, m ** k)
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, m, size=(samples, k))
    v = np.asarray(vals)
    in_x = np.array([c in Xs for c in order], dtype=float)
    dv = v[draws]
    top = dv.max(axis=1, keepdims=True)
    is_best = dv >= top - tol
    # count distinct best indices per draw
    onehot = np.zeros((samples, m), dtype=bool)
    rows = np.repeat(np.arange(samples), k)
    onehot[rows, draws.ravel()] = is_best.ravel()
    frac = (onehot @ in_x) / onehot.sum(axis=1)
    return Estimate(float(frac.mean()), float(frac.std(ddof=1) / math.sqrt(samples)), samples)


def best_of_k(X, C, u, k: int, budget: int = BEST_OF_K_BUDGET, seed: int = 0,
              tol: float = TIE_TOL) -> float:
    return best_of_k_estimate(X, C, u, k, budget=budget, seed=seed, tol=tol).mean


def _uniform_mass(count: int, total: int) -> float:
    return count / total


def quantile_threshold(C, u, q: float, tol: float = TIE_TOL) -> float:
    """inf{M : P[c·u > M] <= q} under the uniform base distribution on C.

    For q = 1 every M qualifies; the returned sentinel lies strictly below all
    expected utilities so that the whole of C counts as above the threshold.
    """
    if not 0 < q <= 1:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    Cs = frozenset(as_vector(c) for c in C)
    if not Cs:
        raise ValueError("C must be nonempty")
    u = as_vector(u)
    vals = sorted(expected_utility(c, u) for c in Cs)
    if q >= 1:
        return vals[0] - 1.0
    n = len(vals)
    for m in vals:  # ascending: the first qualifying value is the infimum
        above = sum(1 for v in vals if v > m + tol)
        if _uniform_mass(above, n) <= q + 1e-12:
            return m
    return vals[-1]


def quantilize(X, C, u, q: float, tol: float = TIE_TOL) -> float:
    """Closed-form q-quantilizer with a uniform base distribution over C."""
    Xs, Cs, values = _prepare(X, C, u)
    M = quantile_threshold(Cs, u, q, tol=tol)
    n = len(Cs)
    above = [c for c, v in values.items() if v > M + tol]
    at = [c for c, v in values.items() if abs(v - M) <= tol]
    p_above = _uniform_mass(len(above), n)
    p_at = _uniform_mass(len(at), n)
    # count first and divide once so q=1 returns |X|/|C| exactly
    k_above = sum(1 for x in Xs if x in above)
    k_at = sum(1 for x in Xs if x in at)
    total = k_above / (n * q)
    if k_at:
        total += k_at * (q - p_above) / (n * q * p_at)
    return total


def rand(X, C, u=None) -> float:
    Xs = frozenset(as_vector(x) for x in X)
    Cs = frozenset(as_vector(c) for c in C)
    if not Xs <= Cs:
        raise NotSubset("X must be a subset of C")
    return len(Xs) / len(Cs)


def _theta_index(theta) -> int:
    if isinstance(theta, (int, np.integer)):
        k = int(theta)
    else:
        vec = as_vector(theta)
        ones = [j for j, x in enumerate(vec) if x == 1.0]
        if len(vec) != 6 or len(ones) != 1 or any(x not in (0.0, 1.0) for x in vec):
            raise ValueError(f"numerical parameter must be 1..6 or a one-hot vector of length 6, got {theta!r}")
        k = ones[0] + 1
    if not 1 <= k <= 6:
        raise ValueError(f"numerical parameter must lie in 1..6, got {k}")
    return k


def numerical_rule(X: str, theta) -> int:
    """Pick A exactly when the parameter equals 1, otherwise B."""
    k = _theta_index(theta)
    if X == "A":
        return int(k == 1)
    if X == "B":
        return int(k != 1)
    raise ValueError(f"X must be 'A' or 'B', got {X!r}")


def stubborn(X, choice: Sequence[float]) -> int:
    return int(as_vector(choice) in frozenset(as_vector(x) for x in X))


def frac_optimal_inequalities_check(X, Yp, Y, u, tol: float = TIE_TOL) -> bool:
    Xs = frozenset(as_vector(x) for x in X)
    Yps = frozenset(as_vector(y) for y in Yp)
    Ys = frozenset(as_vector(y) for y in Y)
    if not (Xs <= Yps <= Ys):
        raise NotSubset("need X ⊆ Y' ⊆ Y")
    left = frac_optimal(Xs, Ys, u, tol)
    middle = frac_optimal(Xs, Yps, u, tol)
    right = frac_optimal(Xs | (Ys - Yps), Ys, u, tol)
    return left <= middle + 1e-12 and middle <= right + 1e-12


# -- rule objects -----------------------------------------------------------

_REQUIRED = {BOLTZMANN: ("temperature",), SATISFICER: ("threshold",), QUANTILIZER: ("q",),
             BEST_OF_K: ("k",), STUBBORN: ("choice",)}


@dataclass(frozen=True)
class DecisionRule:
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown rule kind {self.kind!r}; expected one of {KINDS}")
        missing = [p for p in _REQUIRED.get(self.kind, ()) if p not in self.params]
        if missing:
            raise ValueError(f"rule {self.kind} requires parameters {missing}")
        if self.kind == BOLTZMANN and not float(self.params["temperature"]) > 0:
            raise ValueError("temperature must be positive")
        if self.kind == QUANTILIZER and not 0 < float(self.params["q"]) <= 1:
            raise ValueError("q must lie in (0, 1]")
        if self.kind == BEST_OF_K and int(self.params["k"]) < 1:
            raise ValueError("k must be at least 1")
        object.__setattr__(self, "params", dict(self.params))

    def __hash__(self):
        return hash((self.kind, tuple(sorted((k, str(v)) for k, v in self.params.items()))))

    @property
    def eu_determined(self) -> bool:
        return self.kind in EU_DETERMINED

    def __call__(self, X, C, theta) -> float:
        p = self.params
        tol = float(p.get("tol", TIE_TOL))
        if self.kind == OPTIMAL:
            return float(is_optimal(X, C, theta, tol))
        if self.kind == FRAC_OPTIMAL:
            return frac_optimal(X, C, theta, tol)
        if self.kind == ANTI_OPTIMAL:
            return float(is_anti_optimal(X, C, theta, tol))
        if self.kind == BOLTZMANN:
            return boltzmann(X, C, theta, float(p["temperature"]))
        if self.kind == SATISFICER:
            return satisfice(X, C, theta, float(p["threshold"]), tol)
        if self.kind == QUANTILIZER:
            return quantilize(X, C, theta, float(p["q"]), tol)
        if self.kind == BEST_OF_K:
            return best_of_k(X, C, theta, int(p["k"]), budget=int(p.get("budget", BEST_OF_K_BUDGET)),
                             seed=int(p.get("seed", 0)), tol=tol)
        if self.kind == RAND:
            return rand(X, C)
        if self.kind == STUBBORN:
            d = len(next(iter(C)))
            return float(stubborn(X, _choice_vector(p["choice"], d)))
        # numerical: the outcome at index a is chosen iff theta == 1, else the one at index b
        d = len(next(iter(C)))
        k = _theta_index(theta)
        chosen = _choice_vector(p.get("a", 0) if k == 1 else p.get("b", 1), d)
        return float(stubborn(X, chosen))

    def bind(self, C) -> Callable:
        """Fix the choice set, returning f(X, theta)."""
        Cs = frozenset(as_vector(c) for c in C)
        return lambda X, theta: self(X, Cs, theta)

    def label(self) -> str:
        if not self.params:
            return self.kind
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}({inner})"


def _choice_vector(choice, d: int) -> Vector:
    if isinstance(choice, (int, np.integer)) or (isinstance(choice, str) and choice.strip().isdigit()):
        i = int(choice)
        return tuple(1.0 if j == i else 0.0 for j in range(d))
    return as_vector(choice)


def eu_invariance_check(rule: DecisionRule, X, C, u, phi: Permutation, tol: float = 1e-12) -> bool:
    lhs = rule(X, C, u)
    rhs = rule(act_set(phi, X), act_set(phi, C), act_vector(phi, u))
    return abs(lhs - rhs) <= tol
