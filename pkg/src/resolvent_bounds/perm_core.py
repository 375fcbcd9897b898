"""Permutations, cycle types and the coincidence order on them.

A permutation ``t`` is *higher* than ``s`` when every cycle of ``s``, read as
a set of symbols, sits inside one cycle of ``t``.  On cycle types this becomes
partition coarsening, and the longest strictly increasing chains of classes
give the lower bound on the number of resolvent parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

ALTERNATING = "alternating"
SYMMETRIC = "symmetric"
GROUP_KINDS = (ALTERNATING, SYMMETRIC)


@dataclass(frozen=True)
class Permutation:
    """Bijection of ``{0, ..., n-1}`` stored by its images.

    Composition follows function notation: ``(p * q)(i) == p(q(i))``.
    """

    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        if not images:
            raise ValueError("permutation degree must be at least 1")
        if sorted(images) != list(range(len(images))):
            raise ValueError(f"{list(images)} is not a permutation of 0..{len(images) - 1}")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(tuple(range(n)))

    @classmethod
    def from_cycles(cls, n: int, cycles: Iterable[Sequence[int]]) -> Permutation:
        """Build from 0-based cycles; symbols not mentioned are fixed."""
        images = list(range(n))
        seen: set[int] = set()
        for cycle in cycles:
            cycle = list(cycle)
            if seen.intersection(cycle) or len(set(cycle)) != len(cycle):
                raise ValueError("cycles must be disjoint")
            seen.update(cycle)
            for a, b in zip(cycle, cycle[1:] + cycle[:1]):
                images[a] = b
        return cls(tuple(images))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def __mul__(self, other: Permutation) -> Permutation:
        if self.n != other.n:
            raise ValueError("degree mismatch")
        return Permutation(tuple(self.images[j] for j in other.images))

    def inverse(self) -> Permutation:
        inv = [0] * self.n
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    def __pow__(self, k: int) -> Permutation:
        base = self if k >= 0 else self.inverse()
        result = Permutation.identity(self.n)
        for _ in range(abs(k)):
            result = result * base
        return result

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images))

    def cycles(self) -> list[tuple[int, ...]]:
        """Disjoint cycles including fixed points, each starting at its least symbol."""
        seen = [False] * self.n
        out = []
        for start in range(self.n):
            if seen[start]:
                continue
            cycle = []
            i = start
            while not seen[i]:
                seen[i] = True
                cycle.append(i)
                i = self.images[i]
            out.append(tuple(cycle))
        return out

    def coincidence_blocks(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(c) for c in self.cycles())

    def to_json(self) -> list[int]:
        return list(self.images)

    @classmethod
    def from_json(cls, data: Sequence[int]) -> Permutation:
        return cls(tuple(data))

    def __repr__(self) -> str:
        moved = [c for c in self.cycles() if len(c) > 1]
        if not moved:
            return f"Permutation(e, n={self.n})"
        body = "".join("(" + " ".join(map(str, c)) + ")" for c in moved)
        return f"Permutation({body}, n={self.n})"


@dataclass(frozen=True)
class CycleType:
    """Partition of ``n`` into cycle lengths, fixed points kept as 1-parts."""

    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(sorted((int(p) for p in self.parts), reverse=True))
        if not parts or parts[-1] < 1:
            raise ValueError("cycle type parts must be positive and non-empty")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def of(cls, *parts: int) -> CycleType:
        return cls(tuple(parts))

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def cycle_count(self) -> int:
        return len(self.parts)

    def is_even(self) -> bool:
        return (self.n - self.cycle_count) % 2 == 0

    def is_identity(self) -> bool:
        return self.parts[0] == 1

    def is_transposition(self) -> bool:
        return self.parts[0] == 2 and (len(self.parts) == 1 or self.parts[1] == 1)

    def representative(self) -> Permutation:
        """The permutation ``(0 1 .. mu1-1)(mu1 ..)...`` with cycles laid out in order."""
        cycles, start = [], 0
        for part in self.parts:
            cycles.append(range(start, start + part))
            start += part
        return Permutation.from_cycles(self.n, cycles)

    def to_json(self) -> list[int]:
        return list(self.parts)

    def __repr__(self) -> str:
        return f"CycleType{self.parts}"


@dataclass(frozen=True)
class ChainCertificate:
    chain: tuple[CycleType, ...]
    group_kind: str

    def __post_init__(self):
        if self.group_kind not in GROUP_KINDS:
            raise ValueError(f"unknown group kind {self.group_kind!r}")
        chain = tuple(self.chain)
        object.__setattr__(self, "chain", chain)
        if not chain:
            raise ValueError("empty chain")
        first = chain[0]
        if first.is_identity():
            raise ValueError("a chain cannot start at the identity class")
        if self.group_kind == ALTERNATING:
            if first.is_transposition():
                raise ValueError("an alternating chain cannot start at a transposition")
            if not all(c.is_even() for c in chain):
                raise ValueError("alternating chains may only contain even classes")
        for lo, hi in zip(chain, chain[1:]):
            if lo == hi or not class_is_higher(hi, lo):
                raise ValueError(f"{hi} is not strictly above {lo}")

    @property
    def length(self) -> int:
        return len(self.chain)

    def to_json(self) -> dict:
        return {
            "kind": self.group_kind,
            "length": self.length,
            "chain": [c.to_json() for c in self.chain],
        }

    @classmethod
    def from_json(cls, data: dict) -> ChainCertificate:
        cert = cls(tuple(CycleType(tuple(c)) for c in data["chain"]), data["kind"])
        if "length" in data and data["length"] != cert.length:
            raise ValueError("length field disagrees with chain")
        return cert


def cycle_type(p: Permutation) -> CycleType:
    return CycleType(tuple(len(c) for c in p.cycles()))


def is_even(p: Permutation) -> bool:
    return (p.n - len(p.cycles())) % 2 == 0


def is_higher(t: Permutation, s: Permutation) -> bool:
    """True iff every cycle of ``s`` lies inside a single cycle of ``t``."""
    if t.n != s.n:
        raise ValueError(f"degree mismatch: {t.n} vs {s.n}")
    owner = [0] * t.n
    for k, cycle in enumerate(t.cycles()):
        for i in cycle:
            owner[i] = k
    return all(len({owner[i] for i in cycle}) == 1 for cycle in s.cycles())


@lru_cache(maxsize=None)
def _packs(parts: tuple[int, ...], bins: tuple[int, ...]) -> bool:
    # parts sorted descending; bins are remaining capacities, kept sorted
    if not parts:
        return all(b == 0 for b in bins)
    head, rest = parts[0], parts[1:]
    tried = set()
    for k, cap in enumerate(bins):
        if cap < head or cap in tried:
            continue
        tried.add(cap)
        new_bins = tuple(sorted(bins[:k] + (cap - head,) + bins[k + 1:], reverse=True))
        if _packs(rest, new_bins):
            return True
    return False


def class_is_higher(ct: CycleType, cs: CycleType) -> bool:
    """Some permutation of type ``ct`` is higher than some permutation of type ``cs``.

    Equivalent to the parts of ``cs`` splitting into groups whose sums are
    exactly the parts of ``ct``.
    """
    if ct.n != cs.n:
        raise ValueError(f"degree mismatch: {ct.n} vs {cs.n}")
    if ct.cycle_count > cs.cycle_count:
        return False
    return _packs(cs.parts, ct.parts)


def partitions(n: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    """Partitions of ``n`` in descending part order, lexicographically decreasing."""
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in partitions(n - first, first):
            yield (first,) + rest


def class_reps(n: int) -> list[CycleType]:
    if n < 1:
        raise ValueError("n must be at least 1")
    return [CycleType(p) for p in partitions(n)]


def even_class_reps(n: int) -> list[CycleType]:
    return [c for c in class_reps(n) if c.is_even()]


def _legal_start(c: CycleType, kind: str) -> bool:
    if c.is_identity():
        return False
    if kind == ALTERNATING:
        return not c.is_transposition()
    return True


def max_chain(n: int, kind: str = ALTERNATING) -> ChainCertificate:
    """Longest strictly increasing chain of classes, found by memoised DFS.

    Ties are broken towards lexicographically larger cycle types, which for
    the alternating kind yields the odd-cycle chain (3) < (5) < (7) < ...
    """
    if kind not in GROUP_KINDS:
        raise ValueError(f"unknown group kind {kind!r}")
    if kind == ALTERNATING and n < 3:
        raise ValueError("alternating chains need n >= 3")
    if n < 2:
        raise ValueError("no non-identity class for n < 2")
    nodes = even_class_reps(n) if kind == ALTERNATING else class_reps(n)
    above = {
        c: [d for d in nodes if d != c and class_is_higher(d, c)] for c in nodes
    }
    best: dict[CycleType, tuple[CycleType, ...]] = {}

    def longest_from(c: CycleType) -> tuple[CycleType, ...]:
        if c not in best:
            tail: tuple[CycleType, ...] = ()
            for d in above[c]:
                cand = longest_from(d)
                if len(cand) > len(tail) or (len(cand) == len(tail) and cand[0].parts > tail[0].parts):
                    tail = cand
            best[c] = (c,) + tail
        return best[c]

    chain: tuple[CycleType, ...] = ()
    for c in nodes:
        if not _legal_start(c, kind):
            continue
        cand = longest_from(c)
        if len(cand) > len(chain) or (len(cand) == len(chain) and cand[0].parts > chain[0].parts):
            chain = cand
    return ChainCertificate(chain, kind)


def lower_bound_s(n: int) -> int:
    """Lower bound ``floor((n-1)/2)`` on resolvent parameters for the alternating family."""
    if n < 3:
        raise ValueError("the bound is defined for n >= 3")
    s = (n - 1) // 2
    found = max_chain(n, ALTERNATING).length
    if found != s:
        raise AssertionError(f"chain search gave {found}, closed form {s}")
    return s
