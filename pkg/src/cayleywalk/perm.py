"""Permutations of {1..n}, cycle structure and Cayley distance.

Products follow ``(f * g)(x) = f(g(x))``; the random walk multiplies on the
right. Elements are 1-based at the API surface and 0-based inside the arrays.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K

__all__ = [
    "Permutation",
    "Transposition",
    "CycleStructure",
    "MinimalDecomposition",
    "identity",
    "compose",
    "inverse",
    "apply_transposition",
    "cycle_structure",
    "cayley_distance",
    "canonical_decomposition",
    "COAGULATION",
    "FRAGMENTATION",
]

COAGULATION = "coagulation"
FRAGMENTATION = "fragmentation"


class Permutation:
    """Immutable bijection of {1..n}."""

    __slots__ = ("_img", "_hash")

    def __init__(self, image: Iterable[int], *, _zero_based: bool = False):
        arr = np.array(image, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("permutation needs a non-empty 1-d image")
        if not _zero_based:
            arr = arr - 1
        n = arr.size
        seen = np.zeros(n, dtype=bool)
        if arr.min() < 0 or arr.max() >= n:
            raise ValueError("image values must lie in 1..n")
        seen[arr] = True
        if not seen.all():
            raise ValueError("image is not a bijection")
        arr.setflags(write=False)
        self._img = arr
        self._hash = None

    @classmethod
    def _from_array(cls, arr: np.ndarray) -> "Permutation":
        # trusted internal constructor: arr is a 0-based bijection
        obj = cls.__new__(cls)
        arr = np.ascontiguousarray(arr, dtype=np.int64)
        arr.setflags(write=False)
        obj._img = arr
        obj._hash = None
        return obj

    @classmethod
    def from_cycles(cls, n: int, cycles: Iterable[Sequence[int]]) -> "Permutation":
        img = np.arange(n, dtype=np.int64)
        seen = set()
        for cyc in cycles:
            cyc = [int(x) for x in cyc]
            for x in cyc:
                if not 1 <= x <= n:
                    raise ValueError(f"element {x} outside 1..{n}")
                if x in seen:
                    raise ValueError(f"element {x} repeated")
                seen.add(x)
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                img[a - 1] = b - 1
        return cls._from_array(img)

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> "Permutation":
        """Read cycle notation such as ``"(1 4 3 7)(2)(5 8)"``.

        Fixed points may be omitted; ``n`` defaults to the largest label seen.
        ``"()"`` or an empty string is the identity (``n`` is then required).
        """
        groups = re.findall(r"\(([^()]*)\)", text)
        if re.sub(r"\(([^()]*)\)", "", text).strip():
            raise ValueError(f"unparseable cycle notation: {text!r}")
        cycles = [[int(tok) for tok in re.split(r"[\s,]+", g.strip()) if tok] for g in groups]
        cycles = [c for c in cycles if c]
        top = max((max(c) for c in cycles), default=0)
        if n is None:
            n = top
        if n < 1:
            raise ValueError("cannot infer n for the identity; pass n")
        if top > n:
            raise ValueError(f"label {top} exceeds n={n}")
        return cls.from_cycles(n, cycles)

    @property
    def n(self) -> int:
        return int(self._img.size)

    @property
    def image(self) -> tuple[int, ...]:
        return tuple(int(v) + 1 for v in self._img)

    @property
    def array(self) -> np.ndarray:
        """Read-only 0-based image array."""
        return self._img

    def __call__(self, x: int) -> int:
        return int(self._img[x - 1]) + 1

    def __mul__(self, other: "Permutation") -> "Permutation":
        return compose(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self._img, other._img))

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._img.tobytes())
        return self._hash

    def cycles(self, include_fixed: bool = True) -> list[tuple[int, ...]]:
        """Cycles in least-element order, each starting at its least element."""
        n = self.n
        img = self._img
        seen = np.zeros(n, dtype=bool)
        out = []
        for start in range(n):
            if seen[start]:
                continue
            cyc = []
            x = start
            while not seen[x]:
                seen[x] = True
                cyc.append(x + 1)
                x = img[x]
            if include_fixed or len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    def cycle_count(self) -> int:
        return int(K.count_cycles(self._img))

    def is_identity(self) -> bool:
        return bool(np.array_equal(self._img, np.arange(self.n)))

    def __str__(self) -> str:
        return "".join("(" + " ".join(map(str, c)) + ")" for c in self.cycles())

    def __repr__(self) -> str:
        if self.n <= 30:
            return f"Permutation.parse({str(self)!r}, n={self.n})"
        return f"<Permutation n={self.n} distance={self.n - self.cycle_count()}>"


@dataclass(frozen=True, order=True)
class Transposition:
    """The transposition (i j), stored with i < j."""

    i: int
    j: int

    def __post_init__(self):
        i, j = int(self.i), int(self.j)
        if i == j:
            raise ValueError("a transposition needs two distinct elements")
        if i < 1 or j < 1:
            raise ValueError("transposition indices are 1-based")
        if i > j:
            i, j = j, i
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)

    def as_permutation(self, n: int) -> Permutation:
        if self.j > n:
            raise ValueError(f"transposition {self} outside 1..{n}")
        img = np.arange(n, dtype=np.int64)
        img[self.i - 1], img[self.j - 1] = self.j - 1, self.i - 1
        return Permutation._from_array(img)

    def __str__(self) -> str:
        return f"({self.i} {self.j})"


@dataclass(frozen=True)
class CycleStructure:
    """Multiset of cycle sizes, ``counts[k]`` being the number of k-cycles."""

    counts: tuple[tuple[int, int], ...]

    def __post_init__(self):
        clean = {}
        for k, a in dict(self.counts).items():
            k, a = int(k), int(a)
            if k < 1 or a < 0:
                raise ValueError("cycle sizes must be >= 1 with non-negative multiplicity")
            if a:
                clean[k] = a
        object.__setattr__(self, "counts", tuple(sorted(clean.items())))

    @classmethod
    def from_lengths(cls, lengths: Iterable[int]) -> "CycleStructure":
        return cls(tuple(Counter(int(m) for m in lengths).items()))

    @classmethod
    def from_counts(cls, counts: dict[int, int]) -> "CycleStructure":
        return cls(tuple(counts.items()))

    def as_dict(self) -> dict[int, int]:
        return dict(self.counts)

    @property
    def n(self) -> int:
        return sum(k * a for k, a in self.counts)

    @property
    def cycle_count(self) -> int:
        return sum(a for _, a in self.counts)

    @property
    def distance(self) -> int:
        return self.n - self.cycle_count

    def lengths(self) -> list[int]:
        return [k for k, a in sorted(self.counts, reverse=True) for _ in range(a)]

    def representative(self) -> Permutation:
        """A permutation with this cycle type (consecutive blocks)."""
        cycles, start = [], 1
        for m in self.lengths():
            cycles.append(range(start, start + m))
            start += m
        return Permutation.from_cycles(self.n, cycles)


@dataclass(frozen=True)
class MinimalDecomposition:
    transpositions: tuple[Transposition, ...]
    terminal: frozenset[int] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.transpositions)

    def product(self, n: int) -> Permutation:
        """Left-to-right product t1 * t2 * ... * tk."""
        out = identity(n)
        for t in self.transpositions:
            out = compose(out, t.as_permutation(n))
        return out


def identity(n: int) -> Permutation:
    if n < 1:
        raise ValueError("ground set must have n >= 1")
    return Permutation._from_array(np.arange(n, dtype=np.int64))


def _check_same_n(f: Permutation, g: Permutation) -> None:
    if f.n != g.n:
        raise ValueError(f"permutations act on different sets (n={f.n} vs n={g.n})")


def compose(f: Permutation, g: Permutation) -> Permutation:
    _check_same_n(f, g)
    return Permutation._from_array(f.array[g.array])


def inverse(sigma: Permutation) -> Permutation:
    inv = np.empty_like(sigma.array)
    inv[sigma.array] = np.arange(sigma.n, dtype=np.int64)
    return Permutation._from_array(inv)


def apply_transposition(sigma: Permutation, t: Transposition) -> tuple[Permutation, str]:
    """Right-multiply by ``t``; report whether cycles merged or split."""
    if t.j > sigma.n:
        raise ValueError(f"transposition {t} outside 1..{sigma.n}")
    i, j = t.i - 1, t.j - 1
    same = bool(K.same_cycle(sigma.array, i, j))
    img = sigma.array.copy()
    img[i], img[j] = img[j], img[i]
    return Permutation._from_array(img), (FRAGMENTATION if same else COAGULATION)


def cycle_structure(sigma: Permutation) -> CycleStructure:
    lengths = K.cycle_lengths(sigma.array)
    return CycleStructure.from_lengths(lengths.tolist())


def cayley_distance(x: Permutation, y: Permutation | None = None) -> int:
    """Graph distance in the transposition Cayley graph; ``d(x) = d(I, x)``."""
    if y is None:
        return x.n - x.cycle_count()
    _check_same_n(x, y)
    rel = inverse(x).array[y.array]
    return x.n - int(K.count_cycles(rel))


def canonical_decomposition(pi: Permutation) -> MinimalDecomposition:
    """Minimal factorisation listing, cycle by cycle in least-element order,
    the pairs (x, y) with y following x in the cycle."""
    ts = []
    for cyc in pi.cycles(include_fixed=False):
        ts.extend(Transposition(x, y) if x < y else Transposition(y, x) for x, y in zip(cyc, cyc[1:]))
    uses = Counter()
    for cyc in pi.cycles(include_fixed=False):
        for x, y in zip(cyc, cyc[1:]):
            uses[x] += 1
            uses[y] += 1
    terminal = frozenset(x for x in range(1, pi.n + 1) if uses[x] <= 1)
    return MinimalDecomposition(tuple(ts), terminal)
