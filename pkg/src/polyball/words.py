"""Free-semigroup words, multi-words and the graded truncated basis."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from math import prod
from typing import Iterator, Sequence

import numpy as np

DEFAULT_SIZE_CAP = 20000


class ResourceCapError(RuntimeError):
    """A requested object would exceed a configured size cap."""


@dataclass(frozen=True)
class Word:
    """Element of the free semigroup on ``n`` generators; letters are 1-based."""

    letters: tuple[int, ...]
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("arity must be positive")
        object.__setattr__(self, "letters", tuple(int(a) for a in self.letters))
        for a in self.letters:
            if not 1 <= a <= self.n:
                raise ValueError(f"letter {a} outside 1..{self.n}")

    def __len__(self) -> int:
        return len(self.letters)

    def __add__(self, other: "Word") -> "Word":
        if other.n != self.n:
            raise ValueError("arity mismatch")
        return Word(self.letters + other.letters, self.n)

    @classmethod
    def empty(cls, n: int) -> "Word":
        return cls((), n)


@dataclass(frozen=True)
class MultiWord:
    components: tuple[Word, ...]

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def arities(self) -> tuple[int, ...]:
        return tuple(w.n for w in self.components)

    @property
    def total_length(self) -> int:
        return sum(len(w) for w in self.components)

    @property
    def letters(self) -> tuple[tuple[int, ...], ...]:
        return tuple(w.letters for w in self.components)

    def sort_key(self):
        return (self.total_length, self.letters)

    @classmethod
    def from_letters(cls, letters: Sequence[Sequence[int]], n: Sequence[int]) -> "MultiWord":
        if len(letters) != len(n):
            raise ValueError("need one letter sequence per factor")
        return cls(tuple(Word(tuple(w), ni) for w, ni in zip(letters, n)))

    @classmethod
    def empty(cls, n: Sequence[int]) -> "MultiWord":
        return cls(tuple(Word.empty(ni) for ni in n))

    def __repr__(self) -> str:
        return "MW" + repr(self.letters)


def concat_left(gamma: MultiWord, alpha: MultiWord) -> MultiWord:
    """Componentwise concatenation ``(gamma_1 alpha_1, ..., gamma_k alpha_k)``."""
    if gamma.arities != alpha.arities:
        raise ValueError("arity mismatch between multi-words")
    return MultiWord(tuple(g + a for g, a in zip(gamma.components, alpha.components)))


def words_of_length(n: int, length: int) -> Iterator[tuple[int, ...]]:
    return itertools.product(range(1, n + 1), repeat=length)


def compositions(p: int, k: int) -> Iterator[tuple[int, ...]]:
    """Ordered k-tuples of non-negative integers summing to p."""
    if k == 1:
        yield (p,)
        return
    for first in range(p + 1):
        for rest in compositions(p - first, k - 1):
            yield (first,) + rest


def grade_count(n: Sequence[int], p: int) -> int:
    return sum(prod(ni**pi for ni, pi in zip(n, c)) for c in compositions(p, len(n)))


def basis_size(n: Sequence[int], N: int) -> int:
    return sum(grade_count(n, p) for p in range(N + 1))


class TruncatedBasis:
    """All multi-words of total length at most ``N``, in graded-lexicographic order.

    Within a grade the order is lexicographic on the tuple of letter sequences,
    so factor 1 varies slowest. Position 0 is the empty multi-word.
    """

    def __init__(self, n: Sequence[int], N: int, size_cap: int = DEFAULT_SIZE_CAP):
        n = tuple(int(x) for x in n)
        if not n or any(ni < 1 for ni in n):
            raise ValueError(f"arities must be positive, got {n}")
        if N < 0:
            raise ValueError("truncation must be non-negative")
        size = basis_size(n, N)
        if size > size_cap:
            raise ResourceCapError(f"basis size {size} exceeds cap {size_cap}")
        self.n = n
        self.k = len(n)
        self.N = int(N)
        words = []
        for p in range(N + 1):
            chunk = []
            for comp in compositions(p, self.k):
                for parts in itertools.product(*(words_of_length(ni, pi) for ni, pi in zip(n, comp))):
                    chunk.append(parts)
            chunk.sort()
            words.extend(chunk)
        self._letters: list[tuple[tuple[int, ...], ...]] = words
        self._index = {w: i for i, w in enumerate(words)}
        self.grades = np.array([sum(len(c) for c in w) for w in words], dtype=int)

    @property
    def size(self) -> int:
        return len(self._letters)

    def __len__(self) -> int:
        return len(self._letters)

    def letters_at(self, position: int) -> tuple[tuple[int, ...], ...]:
        return self._letters[position]

    def word_at(self, position: int) -> MultiWord:
        return MultiWord.from_letters(self._letters[position], self.n)

    def index_of(self, word) -> int:
        """Position of a multi-word (or of its tuple of letter sequences)."""
        key = word.letters if isinstance(word, MultiWord) else tuple(tuple(c) for c in word)
        return self._index[key]

    def lookup(self, letters) -> int | None:
        return self._index.get(letters)

    def grade(self, position: int) -> int:
        if not 0 <= position < self.size:
            raise IndexError(f"position {position} out of range")
        return int(self.grades[position])

    def __iter__(self):
        return iter(self._letters)

    @cached_property
    def peel(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """For each non-empty multi-word, strip its first letter.

        Returns arrays ``(parent, factor, letter)`` where the word at position
        ``p`` equals ``g_letter`` (in factor ``factor``, 0-based) prepended to
        the first non-empty component of ``parent``; row 0 is ``(-1, -1, -1)``.
        Operator products then satisfy ``T_word = T[factor][letter] @ T_parent``.
        """
        parent = np.full(self.size, -1, dtype=int)
        factor = np.full(self.size, -1, dtype=int)
        letter = np.full(self.size, -1, dtype=int)
        for pos, w in enumerate(self._letters):
            for i, comp in enumerate(w):
                if comp:
                    rest = w[:i] + (comp[1:],) + w[i + 1:]
                    parent[pos] = self._index[rest]
                    factor[pos] = i
                    letter[pos] = comp[0] - 1
                    break
        return parent, factor, letter

    def grade_slices(self) -> list[slice]:
        edges = np.searchsorted(self.grades, np.arange(self.N + 2))
        return [slice(int(edges[p]), int(edges[p + 1])) for p in range(self.N + 1)]

    def describe(self) -> dict:
        return {"n": list(self.n), "N": self.N, "size": self.size}
