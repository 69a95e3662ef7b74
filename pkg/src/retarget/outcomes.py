"""Outcome sets, copy certificates and non-dominated subsets."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .perms import (
    DimensionMismatch,
    Permutation,
    Vector,
    act_set,
    all_permutations,
    as_vector,
    check_bound,
    enumerate_involutions,
    is_involution,
)

ND_TOL = 1e-9


def outcome_set(vectors: Iterable[Sequence[float]], allow_empty: bool = True) -> frozenset:
    """Build a set of outcome vectors, merging duplicates and checking dimensions."""
    out = frozenset(as_vector(v) for v in vectors)
    if not out and not allow_empty:
        raise ValueError("outcome set must be nonempty")
    _dimension(out)
    return out


def basis(d: int, i: int) -> Vector:
    return tuple(1.0 if j == i else 0.0 for j in range(d))


def is_lottery(v: Sequence[float], tol: float = 1e-9) -> bool:
    return all(x >= 0 for x in v) and abs(sum(v) - 1.0) <= tol


def _dimension(*sets: Iterable[Vector]) -> Optional[int]:
    dims = {len(v) for s in sets for v in s}
    if len(dims) > 1:
        raise DimensionMismatch(f"mixed vector dimensions {sorted(dims)}")
    return dims.pop() if dims else None


def _check_perm_dim(d: Optional[int], perms: Iterable[Permutation]) -> None:
    for p in perms:
        if d is not None and p.d != d:
            raise DimensionMismatch(f"permutation of size {p.d} on vectors of length {d}")


@dataclass(frozen=True)
class CopyCertificate:
    involutions: tuple[Permutation, ...]
    images: tuple[frozenset, ...]

    @property
    def n(self) -> int:
        return len(self.involutions)

    @classmethod
    def from_involutions(cls, A, involutions: Sequence[Permutation]) -> "CopyCertificate":
        A = frozenset(A)
        return cls(tuple(involutions), tuple(act_set(p, A) for p in involutions))


def verify_copies(A, B, cert: CopyCertificate) -> bool:
    """Check that B contains cert.n copies of A via the certificate's involutions."""
    A, B = frozenset(A), frozenset(B)
    d = _dimension(A, B, *cert.images)
    _check_perm_dim(d, cert.involutions)
    if len(cert.images) != len(cert.involutions) or cert.n < 1:
        return False
    for phi, image in zip(cert.involutions, cert.images):
        if not is_involution(phi) or act_set(phi, A) != image or not image <= B:
            return False
    for i, phi in enumerate(cert.involutions):
        for j, image in enumerate(cert.images):
            if i != j and act_set(phi, image) != image:
                return False
    return True


def verify_superset_copies(A, B, B_star_list, involutions) -> bool:
    A, B = frozenset(A), frozenset(B)
    stars = [frozenset(s) for s in B_star_list]
    d = _dimension(A, B, *stars)
    _check_perm_dim(d, involutions)
    if len(stars) != len(involutions):
        return False
    for phi, star in zip(involutions, stars):
        if not is_involution(phi) or not act_set(phi, A) <= star or not star <= B:
            return False
    for i, phi in enumerate(involutions):
        for j, star in enumerate(stars):
            if i != j and act_set(phi, star) != star:
                return False
    return True


def find_copies(A, B, n: int) -> Optional[CopyCertificate]:
    """Search for n involutions showing that B contains n copies of A.

    Involutions are tried in increasing support size; the first certificate in
    that order (with repetition allowed, indices non-decreasing) is returned.
    """
    if n < 1:
        raise ValueError("n must be positive")
    A, B = frozenset(A), frozenset(B)
    d = _dimension(A, B)
    if d is None:
        return None
    check_bound(d)
    candidates = []
    for phi in enumerate_involutions(d):
        image = act_set(phi, A)
        if image <= B:
            candidates.append((phi, image))

    chosen: list[int] = []

    def compatible(k: int) -> bool:
        phi_k, image_k = candidates[k]
        for idx in chosen:
            phi, image = candidates[idx]
            if act_set(phi_k, image) != image or act_set(phi, image_k) != image_k:
                return False
        return True

    def search(start: int) -> bool:
        if len(chosen) == n:
            return True
        for k in range(start, len(candidates)):
            if compatible(k):
                chosen.append(k)
                if search(k):
                    return True
                chosen.pop()
        return False

    if not search(0):
        return None
    return CopyCertificate(
        tuple(candidates[k][0] for k in chosen), tuple(candidates[k][1] for k in chosen)
    )


def strict_margin(x: Sequence[float], others: Sequence[Sequence[float]]) -> float:
    """Largest delta with (x - x')·r >= delta for all others, over |r|_inf <= 1."""
    if not others:
        return float("inf")
    x = np.asarray(x, dtype=float)
    diffs = np.asarray(others, dtype=float) - x  # rows: x' - x
    d = x.size
    # variables (r_1..r_d, delta); minimize -delta; (x'-x)·r + delta <= 0
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A_ub = np.hstack([diffs, np.ones((diffs.shape[0], 1))])
    b_ub = np.zeros(diffs.shape[0])
    bounds = [(-1.0, 1.0)] * d + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"margin LP failed: {res.message}")
    return -res.fun


def nondominated(X: Iterable[Sequence[float]], tol: float = ND_TOL) -> frozenset:
    """Elements of X that strictly maximize x·r for some reward vector r."""
    items = [as_vector(x) for x in X]
    if not items:
        raise ValueError("nondominated requires a nonempty set")
    dupes = [v for v, c in Counter(items).items() if c > 1]
    if dupes:
        raise ValueError(f"duplicate vectors must be merged first: {dupes[:3]}")
    _dimension(items)
    keep = []
    for i, x in enumerate(items):
        others = items[:i] + items[i + 1:]
        if strict_margin(x, others) > tol:
            keep.append(x)
    return frozenset(keep)


def set_similar(X, Xp) -> Optional[Permutation]:
    """Return the first phi in lexicographic order with phi·Xp = X, if any."""
    X, Xp = frozenset(X), frozenset(Xp)
    d = _dimension(X, Xp)
    if len(X) != len(Xp):
        return None
    if d is None:
        return None
    check_bound(d)
    if Counter(itertools.chain.from_iterable(X)) != Counter(itertools.chain.from_iterable(Xp)):
        return None
    for phi in all_permutations(d):
        if act_set(phi, Xp) == X:
            return phi
    return None
