"""Orbit-level tendencies and retargetability certificates.

A decision function here is any callable ``f(X, theta) -> float``. ``X`` is
whatever the caller uses to name outcome sets (frozensets of vectors for the
decision rules, string labels for tabular fixtures).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .decisions import TIE_TOL
from .perms import (
    ALL,
    Domain,
    Orbit,
    Permutation,
    Vector,
    act_vector,
    all_permutations,
    as_vector,
    enumerate_orbit,
    is_involution,
)

DecisionFn = Callable[[object, Vector], float]


class CertificateInvalid(ValueError):
    pass


@dataclass(frozen=True)
class OrbitTendencyReport:
    theta: Vector
    orbit_size: int
    count_B_gt_A: int
    count_A_gt_B: int
    count_tie: int
    n_claimed: int
    holds: bool
    agreement_fraction: Fraction

    def to_dict(self) -> dict:
        return {
            "theta": list(self.theta),
            "orbit_size": self.orbit_size,
            "count_B_gt_A": self.count_B_gt_A,
            "count_A_gt_B": self.count_A_gt_B,
            "count_tie": self.count_tie,
            "n_claimed": self.n_claimed,
            "holds": self.holds,
            "agreement_fraction": str(self.agreement_fraction),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "OrbitTendencyReport":
        return cls(
            theta=tuple(float(x) for x in data["theta"]),
            orbit_size=int(data["orbit_size"]),
            count_B_gt_A=int(data["count_B_gt_A"]),
            count_A_gt_B=int(data["count_A_gt_B"]),
            count_tie=int(data["count_tie"]),
            n_claimed=int(data["n_claimed"]),
            holds=bool(data["holds"]),
            agreement_fraction=Fraction(data["agreement_fraction"]),
        )


def report_from_values(fB: Sequence[float], fA: Sequence[float], n: int, theta: Sequence[float] = (),
                       tol: float = TIE_TOL) -> OrbitTendencyReport:
    """Count strict preferences over paired orbit evaluations of f(B|.) and f(A|.)."""
    b = np.asarray(fB, dtype=float)
    a = np.asarray(fA, dtype=float)
    if b.shape != a.shape:
        raise ValueError("value arrays differ in shape")
    b_gt = int(np.count_nonzero(b > a + tol))
    a_gt = int(np.count_nonzero(a > b + tol))
    size = int(b.size)
    tie = size - b_gt - a_gt
    agree = Fraction(b_gt + tie, size) if size else Fraction(1)
    return OrbitTendencyReport(
        theta=tuple(float(x) for x in theta),
        orbit_size=size,
        count_B_gt_A=b_gt,
        count_A_gt_B=a_gt,
        count_tie=tie,
        n_claimed=n,
        holds=b_gt >= n * a_gt,
        agreement_fraction=agree,
    )


def _orbit(theta, domain: Domain) -> Orbit:
    return enumerate_orbit(theta, domain)


def check_geq_most(f: DecisionFn, A, B, theta, domain: Domain = ALL, n: int = 1,
                   tol: float = TIE_TOL) -> OrbitTendencyReport:
    """Exhaustively compare f(B|.) with f(A|.) on the orbit of theta inside the domain."""
    orbit = _orbit(theta, domain)
    fB = [f(B, t) for t in orbit]
    fA = [f(A, t) for t in orbit]
    return report_from_values(fB, fA, n, theta=orbit.source, tol=tol)


def curated_thetas(d: int) -> list[Vector]:
    """Degenerate cases: constant vectors and vectors with one repeated pair."""
    out = [tuple([0.0] * d), tuple([1.0] * d), tuple([-2.0] * d)]
    if d >= 2:
        out.append(tuple([5.0, 5.0] + [0.0] * (d - 2)))
        out.append(tuple([0.0, 0.0] + [float(j + 1) for j in range(d - 2)]))
        out.append(tuple([3.0] + [7.0] * (d - 1)))
    if d >= 3:
        out.append(tuple([float(d - j) for j in range(d - 2)] + [1.0, 1.0]))
    return out


def sample_thetas(d: int, num: int, seed: int, low: int = -3, high: int = 10) -> list[Vector]:
    rng = np.random.default_rng(seed)
    grid = rng.integers(low, high + 1, size=(num, d))
    return [tuple(float(x) for x in row) for row in grid]


@dataclass(frozen=True)
class SampledCheck:
    reports: tuple[OrbitTendencyReport, ...]

    @property
    def violations(self) -> tuple[OrbitTendencyReport, ...]:
        return tuple(r for r in self.reports if not r.holds)

    @property
    def holds(self) -> bool:
        return not self.violations


def check_geq_most_sampled(f: DecisionFn, A, B, d: int, domain: Domain = ALL, n: int = 1,
                           num_thetas: int = 1000, seed: int = 0, extra: Iterable = (),
                           low: int = -3, high: int = 10, workers: int = 1,
                           tol: float = TIE_TOL) -> SampledCheck:
    """Per-orbit checks over grid samples, curated degenerate vectors and ``extra`` fixtures.

    Reports come back in sample order regardless of ``workers``.
    """
    thetas = sample_thetas(d, num_thetas, seed, low, high)
    thetas += curated_thetas(d)
    thetas += [as_vector(t) for t in extra]

    def one(theta):
        return check_geq_most(f, A, B, theta, domain, n, tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(one, thetas))
    else:
        reports = [one(t) for t in thetas]
    return SampledCheck(tuple(reports))


# -- retargetability --------------------------------------------------------

def _less(a: float, b: float, tol: float) -> bool:
    return a < b - tol


def check_simple_retargetable(f: DecisionFn, A, B, domain: Domain, phi: Permutation,
                              thetas: Iterable, tol: float = TIE_TOL) -> bool:
    """Whenever A is strictly preferred at a sampled theta, phi·theta must prefer B."""
    for theta in thetas:
        theta = as_vector(theta)
        if not domain.contains(theta):
            continue
        if _less(f(B, theta), f(A, theta), tol):
            moved = act_vector(phi, theta)
            if not domain.contains(moved):
                raise ValueError(f"domain {domain} is not closed under {phi} at {theta}")
            if not _less(f(A, moved), f(B, moved), tol):
                return False
    return True


def find_simple_retargeting(f: DecisionFn, A, B, domain: Domain, thetas: Sequence, d: int,
                            tol: float = TIE_TOL) -> Optional[Permutation]:
    if d > 7:
        raise ValueError("exhaustive search over S_d is limited to d <= 7")
    thetas = [as_vector(t) for t in thetas]
    for phi in all_permutations(d):
        if check_simple_retargetable(f, A, B, domain, phi, thetas, tol):
            return phi
    return None


@dataclass(frozen=True)
class RetargetCertificate:
    """n permutations per parameter; ``chooser`` is a constant tuple or a callable theta -> tuple."""

    n: int
    chooser: Union[tuple, Callable[[Vector], Sequence[Permutation]]]

    def perms_for(self, theta: Vector) -> tuple[Permutation, ...]:
        perms = tuple(self.chooser(theta)) if callable(self.chooser) else tuple(self.chooser)
        if len(perms) != self.n:
            raise CertificateInvalid(f"certificate lists {len(perms)} permutations, expected {self.n}")
        return perms


def check_multi_retargetable(f: DecisionFn, A, B, theta, domain: Domain, cert: RetargetCertificate,
                             tol: float = TIE_TOL) -> dict[str, bool]:
    orbit = _orbit(theta, domain)
    perms = cert.perms_for(orbit.source)
    for phi in perms:
        if phi.d != len(orbit.source):
            raise CertificateInvalid(f"permutation {phi} has the wrong size")
    prefers_a = [t for t in orbit if _less(f(B, t), f(A, t), tol)]
    retargets = allowed = True
    images = []
    for phi in perms:
        moved = [act_vector(phi, t) for t in prefers_a]
        images.append(set(moved))
        for m in moved:
            if not domain.contains(m):
                allowed = False
            elif not _less(f(A, m), f(B, m), tol):
                retargets = False
    distinct = all(
        images[i].isdisjoint(images[j]) for i in range(len(images)) for j in range(i + 1, len(images))
    )
    return {"retargetable": retargets, "allowed": allowed, "distinct": distinct}


def verify_counting_theorem(f: DecisionFn, A, B, theta, domain: Domain, cert: RetargetCertificate,
                            tol: float = TIE_TOL) -> bool:
    conditions = check_multi_retargetable(f, A, B, theta, domain, cert, tol)
    if not all(conditions.values()):
        raise CertificateInvalid(f"certificate conditions failed: {conditions}")
    return check_geq_most(f, A, B, theta, domain, cert.n, tol).holds


def check_general_orbit_conditions(f: DecisionFn, A, B, B_star_list: Sequence, phi_list: Sequence[Permutation],
                                   theta, domain: Domain = ALL, tol: float = TIE_TOL) -> dict:
    """Evaluate the four sufficient conditions for an n-fold tendency, item by item.

    Item keys: ``retarget`` (A-preferring parameters move to where some B_i* does at least as
    well), ``closed`` (those moves stay in the domain), ``increasing`` (B_i* never beats B),
    ``alternate`` (B_j* does not lose under phi_i where B is preferred). When all hold the
    n-fold inequality must hold too; a failure there raises AssertionError.
    """
    if len(B_star_list) != len(phi_list):
        raise ValueError("need one B_i* per involution")
    for phi in phi_list:
        if not is_involution(phi):
            raise ValueError(f"{phi} is not an involution")
    orbit = _orbit(theta, domain)
    items = {"retarget": True, "closed": True, "increasing": True, "alternate": True}
    for t in orbit:
        fa, fb = f(A, t), f(B, t)
        moved = [act_vector(phi, t) for phi in phi_list]
        if _less(fb, fa, tol):
            for star, m in zip(B_star_list, moved):
                if fa > f(star, m) + tol:
                    items["retarget"] = False
                if not domain.contains(m):
                    items["closed"] = False
        for star in B_star_list:
            if f(star, t) > fb + tol:
                items["increasing"] = False
        if _less(fa, fb, tol):
            for i, m in enumerate(moved):
                for j, star in enumerate(B_star_list):
                    if i != j and f(star, t) > f(star, m) + tol:
                        items["alternate"] = False
    result = dict(items)
    if all(items.values()):
        report = check_geq_most(f, A, B, theta, domain, len(phi_list), tol)
        if not report.holds:
            raise AssertionError(f"all conditions hold but the counting inequality fails: {report}")
        result["report"] = report
    return result


# -- tabular functions and fixtures ------------------------------------------

@dataclass(frozen=True)
class TabularDecisionFunction:
    table: Mapping[tuple[object, Vector], float] = field(default_factory=dict)

    @classmethod
    def from_rows(cls, labels: Sequence, rows: Mapping[Sequence[float], Sequence[float]]):
        table = {}
        for theta, values in rows.items():
            theta = as_vector(theta)
            for label, value in zip(labels, values):
                table[(label, theta)] = float(value)
        return cls(table)

    def __call__(self, X, theta) -> float:
        key = (X, as_vector(theta))
        if key not in self.table:
            raise KeyError(f"tabular function undefined at {key}")
        return self.table[key]


def counterexample_fixture():
    """The three-outcome tabular function on which the fourth orbit condition fails.

    Returns (f, A, B, B_stars, phis, theta_star). Sets are labels: "A" is {ghost},
    "B" is {apple, cherry}, "apple" and "cherry" are the singletons B_1*, B_2*.
    """
    labels = ("A", "apple", "cherry", "B")
    rows = {
        (1, 3, 2): (1, 0, 0, 0),
        (3, 1, 2): (0, 2, 2, 2),
        (2, 3, 1): (0, 2, 2, 2),
        (2, 1, 3): (1, 0, 0, 0),
        (1, 2, 3): (0, 2, 2, 2),
        (3, 2, 1): (1, 0, 0, 0),
    }
    f = TabularDecisionFunction.from_rows(labels, rows)
    phis = (Permutation.transposition(3, 0, 1), Permutation.transposition(3, 0, 2))
    return f, "A", "B", ("apple", "cherry"), phis, (3.0, 2.0, 1.0)


COUNTEREXAMPLE_ROWS = ((1, 3, 2), (3, 1, 2), (2, 3, 1), (2, 1, 3), (1, 2, 3), (3, 2, 1))


# -- lemma checkers on explicit orbit tables ---------------------------------

def _values(f: Mapping, orbit: Sequence) -> list[float]:
    return [f[t] for t in orbit]


def limited_transitivity_holds(f0: Mapping, f1: Mapping, f2: Mapping, f3: Mapping,
                               orbit: Sequence, n: int) -> bool:
    """Given f0 >= f1 and f2 >= f3 pointwise with f1 >=n_most f2, check f0 >=n_most f3."""
    premise = report_from_values(_values(f1, orbit), _values(f2, orbit), n)
    if not premise.holds:
        raise ValueError("premise f1 >=n_most f2 does not hold")
    for t in orbit:
        if f0[t] < f1[t] or f2[t] < f3[t]:
            raise ValueError("premise f0 >= f1 and f2 >= f3 violated")
    return report_from_values(_values(f0, orbit), _values(f3, orbit), n).holds


def order_inversion_holds(f1: Mapping, f2: Mapping, orbit: Sequence, n: int) -> bool:
    direct = report_from_values(_values(f1, orbit), _values(f2, orbit), n)
    inverted = report_from_values([-v for v in _values(f2, orbit)], [-v for v in _values(f1, orbit)], n)
    return (direct.count_B_gt_A, direct.count_A_gt_B, direct.count_tie, direct.holds) == (
        inverted.count_B_gt_A, inverted.count_A_gt_B, inverted.count_tie, inverted.holds)


def agreement_bound_holds(report: OrbitTendencyReport) -> bool:
    if not report.holds or report.orbit_size == 0:
        return True
    n = report.n_claimed
    return report.agreement_fraction >= Fraction(n, n + 1)
