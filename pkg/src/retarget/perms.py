"""Permutations of d items and their action on vectors, vector sets and orbits.

Vectors are plain tuples of floats. A permutation acts in row representation:
``(phi . v)[phi(j)] = v[j]``, so swapping ghost and apple in (10, 5, 0) gives
(5, 10, 0).
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

Vector = tuple[float, ...]

DEFAULT_MAX_DIM = 10


class DimensionMismatch(ValueError):
    pass


class OrbitTooLarge(ValueError):
    """Raised when exhaustive enumeration would exceed the configured bound."""


def as_vector(values: Iterable[float]) -> Vector:
    vec = tuple(float(x) for x in values)
    for x in vec:
        if not math.isfinite(x):
            raise ValueError(f"non-finite entry in vector {vec!r}")
    return vec


@dataclass(frozen=True)
class Permutation:
    mapping: tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(j) for j in self.mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise ValueError(f"mapping {mapping!r} is not a bijection on 0..{len(mapping) - 1}")
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def identity(cls, d: int) -> "Permutation":
        return cls(tuple(range(d)))

    @classmethod
    def transposition(cls, d: int, i: int, j: int) -> "Permutation":
        if not (0 <= i < d and 0 <= j < d):
            raise ValueError(f"transposition ({i} {j}) out of range for dimension {d}")
        mapping = list(range(d))
        mapping[i], mapping[j] = mapping[j], mapping[i]
        return cls(tuple(mapping))

    @classmethod
    def from_cycles(cls, d: int, *cycles: Sequence[int]) -> "Permutation":
        mapping = list(range(d))
        for cycle in cycles:
            for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]]):
                mapping[a] = b
        return cls(tuple(mapping))

    @property
    def d(self) -> int:
        return len(self.mapping)

    def __call__(self, j: int) -> int:
        return self.mapping[j]

    def __mul__(self, other: "Permutation") -> "Permutation":
        return compose(self, other)

    def inverse(self) -> "Permutation":
        return invert(self)

    def is_involution(self) -> bool:
        return is_involution(self)

    def support(self) -> tuple[int, ...]:
        return tuple(j for j, k in enumerate(self.mapping) if j != k)

    def act(self, v: Sequence[float]) -> Vector:
        return act_vector(self, v)

    def act_set(self, X: Iterable[Sequence[float]]) -> frozenset:
        return act_set(self, X)

    def __str__(self) -> str:
        cycles = []
        seen = set()
        for start in range(self.d):
            if start in seen or self.mapping[start] == start:
                continue
            cycle = [start]
            seen.add(start)
            j = self.mapping[start]
            while j != start:
                cycle.append(j)
                seen.add(j)
                j = self.mapping[j]
            cycles.append("(" + " ".join(map(str, cycle)) + ")")
        return "".join(cycles) or "id"


def compose(p: Permutation, q: Permutation) -> Permutation:
    """Return p after q, i.e. j -> p(q(j))."""
    if p.d != q.d:
        raise DimensionMismatch(f"cannot compose permutations of sizes {p.d} and {q.d}")
    return Permutation(tuple(p.mapping[k] for k in q.mapping))


def invert(p: Permutation) -> Permutation:
    inv = [0] * p.d
    for j, k in enumerate(p.mapping):
        inv[k] = j
    return Permutation(tuple(inv))


def is_involution(p: Permutation) -> bool:
    return all(p.mapping[k] == j for j, k in enumerate(p.mapping))


def act_vector(p: Permutation, v: Sequence[float]) -> Vector:
    if len(v) != p.d:
        raise DimensionMismatch(f"permutation of size {p.d} cannot act on a vector of length {len(v)}")
    out = [0.0] * p.d
    for j, k in enumerate(p.mapping):
        out[k] = v[j]
    return tuple(out)


def act_set(p: Permutation, X: Iterable[Sequence[float]]) -> frozenset:
    return frozenset(act_vector(p, x) for x in X)


# -- parameter domains ------------------------------------------------------

def _positive(v: Sequence[float]) -> bool:
    return all(x > 0 for x in v)


def _unique(v: Sequence[float]) -> bool:
    return len(set(v)) == len(v)


_PREDICATES = {
    "all": lambda v: True,
    "positive-orthant": _positive,
    "unique-entries": _unique,
    "positive-and-unique": lambda v: _positive(v) and _unique(v),
}


@dataclass(frozen=True)
class Domain:
    """A conjunction of named built-in predicates, written ``a&b`` in configs."""

    names: tuple[str, ...] = ("all",)

    def __post_init__(self):
        names = tuple(self.names) or ("all",)
        for name in names:
            if name not in _PREDICATES:
                raise ValueError(f"unknown domain {name!r}; expected one of {sorted(_PREDICATES)}")
        object.__setattr__(self, "names", names)

    @classmethod
    def parse(cls, text: str) -> "Domain":
        return cls(tuple(part.strip() for part in text.split("&") if part.strip()))

    def contains(self, v: Sequence[float]) -> bool:
        return all(_PREDICATES[name](v) for name in self.names)

    __contains__ = contains

    def __str__(self) -> str:
        return "&".join(self.names)


ALL = Domain(("all",))


# -- orbits -----------------------------------------------------------------

@dataclass(frozen=True)
class Orbit:
    source: Vector
    domain: Domain
    elements: tuple[Vector, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Vector]:
        return iter(self.elements)

    def __contains__(self, v) -> bool:
        return tuple(v) in self._members

    @property
    def _members(self) -> frozenset:
        cached = self.__dict__.get("_member_cache")
        if cached is None:
            cached = frozenset(self.elements)
            object.__setattr__(self, "_member_cache", cached)
        return cached


def check_bound(d: int, max_dim: int = DEFAULT_MAX_DIM) -> None:
    if d > max_dim:
        raise OrbitTooLarge(
            f"d={d} gives {math.factorial(d)} permutations, above the bound of {max_dim}! "
            "(use sampled orbits instead)"
        )


def _multiset_permutations(values: list[float]) -> Iterator[tuple[float, ...]]:
    """Distinct arrangements of a multiset, in lexicographic order."""
    counts = Counter(values)
    keys = sorted(counts)
    d = len(values)
    out: list[float] = []

    def rec():
        if len(out) == d:
            yield tuple(out)
            return
        for key in keys:
            if counts[key]:
                counts[key] -= 1
                out.append(key)
                yield from rec()
                out.pop()
                counts[key] += 1

    yield from rec()


def enumerate_orbit(v: Sequence[float], domain: Domain = ALL, max_dim: int = DEFAULT_MAX_DIM) -> Orbit:
    src = as_vector(v)
    check_bound(len(src), max_dim)
    elements = tuple(w for w in _multiset_permutations(list(src)) if domain.contains(w))
    return Orbit(source=src, domain=domain, elements=elements)


def all_permutations(d: int, max_dim: int = DEFAULT_MAX_DIM) -> Iterator[Permutation]:
    """All of S_d in lexicographic order of the mapping (identity first)."""
    check_bound(d, max_dim)
    for mapping in itertools.permutations(range(d)):
        yield Permutation(mapping)


def enumerate_involutions(d: int, max_dim: int = DEFAULT_MAX_DIM) -> list[Permutation]:
    """All involutions of d items, sorted by support size then mapping."""
    if d < 1:
        raise ValueError("d must be positive")
    check_bound(d, max_dim)
    found: list[tuple[int, ...]] = []

    def rec(mapping: list[int], free: list[int]):
        if not free:
            found.append(tuple(mapping))
            return
        first, rest = free[0], free[1:]
        rec(mapping, rest)  # first is a fixed point
        for idx, other in enumerate(rest):
            mapping[first], mapping[other] = other, first
            rec(mapping, rest[:idx] + rest[idx + 1:])
            mapping[first], mapping[other] = first, other

    rec(list(range(d)), list(range(d)))
    found.sort(key=lambda m: (sum(j != k for j, k in enumerate(m)), m))
    return [Permutation(m) for m in found]
